"""Execution-service contract plus two implementations.

The gateway defines how target/candidate source is run against inputs, how
outcomes are compared under host semantics, and how source is transformed.
Two executors satisfy the contract:

* ``ReferenceExecutor`` -- in-process, backed by a registry of built-in
  target functions (addressed as ``builtin:<name>``) and able to exec
  arbitrary source. Lets the whole harness run without any worker process.
* ``SubprocessExecutor`` -- client for the newline-delimited stdio wire
  protocol spoken by an external worker. One canonical-encoding document
  per line, UTF-8, id echo mandatory, synchronous per connection.

Load failures are reported distinctly from runtime errors: a candidate that
does not parse is *not* a behavioral counterexample.
"""

from __future__ import annotations

import ast
import ctypes
import io
import json
import logging
import math
import queue
import select
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

from .values import (
    ArgTuple,
    Err,
    MalformedEncodingError,
    Ok,
    Outcome,
    VBool,
    VFloat,
    VInt,
    VList,
    VMap,
    VNull,
    VOpaque,
    VSet,
    VStr,
    VTuple,
    Value,
    args_from_wire,
    args_to_wire,
    encode,
    from_python,
    outcome_from_wire,
    outcome_to_wire,
    to_python,
)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "1"


class SourceLoadError(Exception):
    """Source failed to parse/exec or does not define the entry function."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message


class ExecTimeoutError(Exception):
    """Wall clock exceeded limits.timeout_ms."""


class UnsupportedOperationError(Exception):
    """Executor does not advertise this op in its capability list."""


class ExecProtocolError(Exception):
    """Worker sent a frame that violates the wire contract."""


@dataclass(frozen=True)
class ExecLimits:
    timeout_ms: int = 2000
    max_output_bytes: int = 1_000_000
    max_recursion_hint: int = 10_000

    def __post_init__(self):
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be >= 1")
        if self.max_output_bytes < 1024:
            raise ValueError("max_output_bytes must be >= 1024")


@dataclass(frozen=True)
class FloatTolerance:
    """Numeric comparison tolerance; None anywhere means exact host equality."""

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9


@dataclass(frozen=True)
class ExecutorHealth:
    version: str
    ops: tuple[str, ...]


DEFAULT_LIMITS = ExecLimits()


# ---------------------------------------------------------------------------
# Outcome comparison (behavioral equality authority).
#
# Mirrors the host runtime's ``==``: cross-kind numeric equality (1 == 1.0,
# True == 1), element-wise containers with list/tuple distinction, order-
# insensitive maps and sets, NaN unequal to NaN. Opaque values compare by
# (rendering, type name).
# ---------------------------------------------------------------------------

_NUMERIC = (VBool, VInt, VFloat)


def values_equal(a: Value, b: Value, float_mode: Optional[FloatTolerance] = None) -> bool:
    if isinstance(a, VNull) or isinstance(b, VNull):
        return isinstance(a, VNull) and isinstance(b, VNull)
    if isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC):
        x, y = a.value, b.value
        if float_mode is not None and (isinstance(a, VFloat) or isinstance(b, VFloat)):
            try:
                return math.isclose(x, y, rel_tol=float_mode.rel_tol, abs_tol=float_mode.abs_tol)
            except (OverflowError, ValueError):  # pragma: no cover - huge ints
                return x == y
        return x == y
    if isinstance(a, VStr) and isinstance(b, VStr):
        return a.value == b.value
    if isinstance(a, VList) and isinstance(b, VList) or isinstance(a, VTuple) and isinstance(b, VTuple):
        return len(a.items) == len(b.items) and all(
            values_equal(x, y, float_mode) for x, y in zip(a.items, b.items)
        )
    if isinstance(a, VMap) and isinstance(b, VMap):
        if len(a.pairs) != len(b.pairs):
            return False
        unmatched = list(b.pairs)
        for key, val in a.pairs:
            for i, (k2, v2) in enumerate(unmatched):
                if values_equal(key, k2, float_mode) and values_equal(val, v2, float_mode):
                    del unmatched[i]
                    break
            else:
                return False
        return True
    if isinstance(a, VSet) and isinstance(b, VSet):
        if len(a.items) != len(b.items):
            return False
        unmatched = list(b.items)
        for x in a.items:
            for i, y in enumerate(unmatched):
                if values_equal(x, y, float_mode):
                    del unmatched[i]
                    break
            else:
                return False
        return True
    if isinstance(a, VOpaque) and isinstance(b, VOpaque):
        return a.rendering == b.rendering and a.type_name == b.type_name
    if isinstance(a, VOpaque) or isinstance(b, VOpaque):
        log.debug("incomparable: opaque vs %s treated as unequal", type(b).__name__)
        return False
    return False


def outcomes_equal(a: Outcome, b: Outcome, float_mode: Optional[FloatTolerance] = None) -> bool:
    """Error vs no-error differ; errors match on kind only; Ok values compare
    under host semantics."""
    if isinstance(a, Err) and isinstance(b, Err):
        return a.kind == b.kind
    if isinstance(a, Err) or isinstance(b, Err):
        return False
    return values_equal(a.value, b.value, float_mode)


# ---------------------------------------------------------------------------
# Source transformation: rename the entry function and every name reference
# bound to it. Behavior on all inputs is unchanged.
# ---------------------------------------------------------------------------


class _Renamer(ast.NodeTransformer):
    def __init__(self, old: str, new: str):
        self.old = old
        self.new = new

    def visit_FunctionDef(self, node):
        if node.name == self.old:
            node.name = self.new
        self.generic_visit(node)
        return node

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_Name(self, node):
        if node.id == self.old:
            node.id = self.new
        return node

    def visit_Global(self, node):
        node.names = [self.new if n == self.old else n for n in node.names]
        return node

    visit_Nonlocal = visit_Global


def rename_function(source: str, old: str, new: str) -> str:
    """Rename function ``old`` (and all references to it) to ``new``."""
    if old == new:
        return source
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise SourceLoadError("SyntaxError", str(exc)) from exc
    new_tree = _Renamer(old, new).visit(tree)
    ast.fix_missing_locations(new_tree)
    return ast.unparse(new_tree)


# ---------------------------------------------------------------------------
# Wire frames.
# ---------------------------------------------------------------------------


def _limits_to_wire(limits: ExecLimits):
    return {
        "timeoutMs": limits.timeout_ms,
        "maxOutputBytes": limits.max_output_bytes,
        "maxRecursionHint": limits.max_recursion_hint,
    }


def _float_mode_to_wire(mode: Optional[FloatTolerance]):
    if mode is None:
        return {"mode": "exact"}
    return {"mode": "tolerance", "absTol": mode.abs_tol, "relTol": mode.rel_tol}


@dataclass(frozen=True)
class ExecRequest:
    id: int
    op: str
    source: Optional[str] = None
    entry: Optional[str] = None
    args: Optional[ArgTuple] = None
    pair: Optional[tuple[Outcome, Outcome]] = None
    transform_kind: Optional[str] = None
    limits: Optional[ExecLimits] = None
    float_mode: Optional[FloatTolerance] = None

    def to_frame(self) -> bytes:
        doc: dict = {"id": self.id, "op": self.op}
        if self.source is not None:
            doc["source"] = self.source
        if self.entry is not None:
            doc["entry"] = self.entry
        if self.args is not None:
            doc["args"] = args_to_wire(self.args)
        if self.pair is not None:
            doc["pair"] = [outcome_to_wire(self.pair[0]), outcome_to_wire(self.pair[1])]
            doc["floatMode"] = _float_mode_to_wire(self.float_mode)
        if self.transform_kind is not None:
            doc["transformKind"] = self.transform_kind
        if self.limits is not None:
            doc["limits"] = _limits_to_wire(self.limits)
        return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class ExecResponse:
    id: int
    status: str
    outcome: Optional[Outcome] = None
    equal: Optional[bool] = None
    source: Optional[str] = None
    version: Optional[str] = None
    ops: Optional[tuple[str, ...]] = None
    error_kind: Optional[str] = None
    error_message: Optional[str] = None

    @staticmethod
    def from_frame(line: bytes) -> "ExecResponse":
        try:
            doc = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ExecProtocolError(f"undecodable frame: {exc}") from exc
        if not isinstance(doc, dict) or "id" not in doc or "status" not in doc:
            raise ExecProtocolError(f"frame missing id/status: {line!r}")
        outcome = None
        if "outcome" in doc:
            try:
                outcome = outcome_from_wire(doc["outcome"])
            except MalformedEncodingError as exc:
                raise ExecProtocolError(f"bad outcome payload: {exc}") from exc
        err = doc.get("error") or {}
        return ExecResponse(
            id=int(doc["id"]),
            status=str(doc["status"]),
            outcome=outcome,
            equal=doc.get("equal"),
            source=doc.get("source"),
            version=doc.get("version"),
            ops=tuple(doc["ops"]) if "ops" in doc else None,
            error_kind=err.get("kind"),
            error_message=err.get("message"),
        )


# ---------------------------------------------------------------------------
# Reference executor.
# ---------------------------------------------------------------------------

BUILTIN_SCHEME = "builtin:"


class _KilledByWatchdog(BaseException):
    """Raised asynchronously inside a call that exceeded its deadline.

    BaseException so a candidate's ``except Exception`` cannot swallow it.
    """


class _BoundedBuffer:
    def __init__(self, cap: int):
        self.cap = cap
        self.buf = io.StringIO()

    def write(self, s: str) -> int:
        if self.buf.tell() < self.cap:
            self.buf.write(s[: self.cap - self.buf.tell()])
        return len(s)

    def flush(self):
        pass


class _ThreadAwareStdout:
    """Routes writes to a per-thread sink when one is set, else to the real
    stream. Lets concurrent in-process calls capture their own stdout."""

    def __init__(self, real):
        self._real = real
        self._sinks = threading.local()

    def _sink(self):
        return getattr(self._sinks, "sink", None)

    def set_sink(self, sink):
        self._sinks.sink = sink

    def write(self, s):
        sink = self._sink()
        if sink is None:
            return self._real.write(s)
        return sink.write(s)

    def flush(self):
        sink = self._sink()
        if sink is None:
            self._real.flush()

    def __getattr__(self, name):
        return getattr(self._real, name)


def _capture_proxy() -> _ThreadAwareStdout:
    if not isinstance(sys.stdout, _ThreadAwareStdout):
        sys.stdout = _ThreadAwareStdout(sys.stdout)
    return sys.stdout


def _async_raise(thread_ident: int) -> None:
    ctypes.pythonapi.PyThreadState_SetAsyncExc(
        ctypes.c_ulong(thread_ident), ctypes.py_object(_KilledByWatchdog)
    )


class _CallRunner:
    """Persistent worker thread with a kill-and-respawn watchdog.

    A call that overruns its deadline gets an async exception; if it still
    does not finish within the grace window, the thread is abandoned and a
    fresh one spawned, so the executor stays usable.
    """

    GRACE_S = 0.8

    def __init__(self):
        self._seq = 0
        self._lock = threading.Lock()
        self._spawn()

    def _spawn(self):
        self._requests: queue.Queue = queue.Queue()
        self._responses: queue.Queue = queue.Queue()
        self._thread = threading.Thread(
            target=self._loop, args=(self._requests, self._responses), daemon=True
        )
        self._thread.start()

    @staticmethod
    def _loop(requests: queue.Queue, responses: queue.Queue):
        while True:
            seq, fn = requests.get()
            if fn is None:
                return
            try:
                responses.put((seq, "ok", fn()))
            except _KilledByWatchdog:
                responses.put((seq, "killed", None))
            except BaseException as exc:  # plumbing bug escape hatch
                responses.put((seq, "exc", exc))

    def run(self, fn: Callable[[], Outcome], timeout_s: float) -> Outcome:
        with self._lock:
            self._seq += 1
            seq = self._seq
            self._requests.put((seq, fn))
            deadline = time.monotonic() + timeout_s
            kill_sent = False
            while True:
                wait = deadline - time.monotonic() if not kill_sent else self.GRACE_S
                try:
                    got, status, payload = self._responses.get(timeout=max(wait, 0.01))
                except queue.Empty:
                    if not kill_sent:
                        _async_raise(self._thread.ident)
                        kill_sent = True
                        continue
                    self._spawn()
                    raise ExecTimeoutError(f"call exceeded {timeout_s * 1000:.0f} ms")
                if got != seq:
                    continue  # stale result from an earlier abandoned call
                if status == "killed":
                    raise ExecTimeoutError(f"call exceeded {timeout_s * 1000:.0f} ms")
                if status == "exc":
                    raise payload
                return payload

    def close(self):
        self._requests.put((0, None))


def _call_outcome(fn: Callable, host_args: list, limits: ExecLimits) -> Outcome:
    proxy = _capture_proxy()
    sink = _BoundedBuffer(limits.max_output_bytes)
    proxy.set_sink(sink)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, min(limits.max_recursion_hint, 20_000)))
    try:
        try:
            result = fn(*host_args)
        except (_KilledByWatchdog, KeyboardInterrupt):
            raise
        except SystemExit as exc:
            return Err("SystemExit", str(exc.code) if exc.code is not None else "")
        except BaseException as exc:
            try:
                message = str(exc)
            except Exception:
                message = "<unprintable exception>"
            return Err(type(exc).__name__, message)
    finally:
        sys.setrecursionlimit(old_limit)
        proxy.set_sink(None)
        text = sink.buf.getvalue()
        if text:
            log.debug("captured stdout (%d chars) discarded", len(text))
    try:
        value = from_python(result)
    except RecursionError:
        return Err("ResultEncodingError", "result too deeply nested")
    if len(encode(value)) > limits.max_output_bytes:
        return Err("OutputTooLarge", f"encoded result exceeds {limits.max_output_bytes} bytes")
    return Ok(value)


class ReferenceExecutor:
    """In-process executor over the builtin registry plus arbitrary source.

    ``inline=True`` runs calls on the caller's thread without the watchdog;
    only safe for corpora known not to hang (used by bulk property tests).
    """

    def __init__(self, registry=None, *, inline: bool = False, default_limits: ExecLimits = DEFAULT_LIMITS):
        if registry is None:
            from .builtins import registry as builtin_registry

            registry = builtin_registry()
        self._registry = registry
        self._inline = inline
        self._default_limits = default_limits
        self._runner = None if inline else _CallRunner()
        self._code_cache: dict[str, object] = {}

    def health(self) -> ExecutorHealth:
        return ExecutorHealth(version=PROTOCOL_VERSION, ops=("call", "compare", "health"))

    def _resolve(self, source: str, entry: str) -> Callable:
        if source.startswith(BUILTIN_SCHEME):
            name = source[len(BUILTIN_SCHEME):]
            spec = self._registry.get(name)
            if spec is None:
                raise SourceLoadError("UnknownBuiltin", f"no builtin named {name!r}")
            return spec.fn
        code = self._code_cache.get(source)
        if code is None:
            try:
                code = compile(source, "<candidate>", "exec")
            except (SyntaxError, ValueError) as exc:
                raise SourceLoadError(type(exc).__name__, str(exc)) from exc
            self._code_cache[source] = code
        namespace: dict = {"__name__": "__candidate__"}
        try:
            exec(code, namespace)
        except BaseException as exc:
            raise SourceLoadError(type(exc).__name__, f"module body raised: {exc}") from exc
        fn = namespace.get(entry)
        if not callable(fn):
            raise SourceLoadError("MissingEntry", f"source does not define function {entry!r}")
        return fn

    def call(self, source: str, entry: str, args: ArgTuple, limits: Optional[ExecLimits] = None) -> Outcome:
        limits = limits or self._default_limits
        fn = self._resolve(source, entry)
        host_args = [to_python(a) for a in args]
        if self._inline:
            return _call_outcome(fn, host_args, limits)
        return self._runner.run(lambda: _call_outcome(fn, host_args, limits), limits.timeout_ms / 1000.0)

    def compare(self, a: Outcome, b: Outcome, float_mode: Optional[FloatTolerance] = None) -> bool:
        return outcomes_equal(a, b, float_mode)

    def transform(self, source: str, kind: str, entry: str) -> str:
        raise UnsupportedOperationError("reference executor does not support transform")

    def close(self):
        if self._runner is not None:
            self._runner.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------------------------------------------------------------------------
# Subprocess executor (wire-protocol client).
# ---------------------------------------------------------------------------


class SubprocessExecutor:
    """Drives one worker process over stdin/stdout, restarting it when it
    crashes or stops answering. Synchronous: one request in flight."""

    HEALTH_DEADLINE_S = 10.0
    AUX_DEADLINE_S = 10.0
    GRACE_S = 1.0

    def __init__(self, cmd: list[str], *, default_limits: ExecLimits = DEFAULT_LIMITS):
        self._cmd = list(cmd)
        self._default_limits = default_limits
        self._next_id = 0
        self._proc: Optional[subprocess.Popen] = None
        self._buffer = b""
        self._startup_health: Optional[ExecutorHealth] = None
        self._start()

    # -- process management -------------------------------------------------

    def _start(self):
        self._buffer = b""
        self._proc = subprocess.Popen(
            self._cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
        frame = self._read_frame(time.monotonic() + self.HEALTH_DEADLINE_S)
        if frame is None:
            raise ExecProtocolError("worker did not announce itself with a health frame")
        resp = ExecResponse.from_frame(frame)
        if resp.status != "ok" or resp.version is None:
            raise ExecProtocolError(f"bad startup health frame: {frame!r}")
        self._startup_health = ExecutorHealth(version=resp.version, ops=resp.ops or ())

    def _restart(self):
        self._kill()
        self._start()

    def _kill(self):
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:  # pragma: no cover - best effort
                pass
            self._proc = None

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=2)
            except Exception:
                self._kill()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- framing -------------------------------------------------------------

    def _read_frame(self, deadline: float) -> Optional[bytes]:
        """One newline-terminated frame, or None on timeout/EOF."""
        stdout = self._proc.stdout
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([stdout], [], [], remaining)
            if not ready:
                return None
            chunk = stdout.raw.read(65536) if hasattr(stdout, "raw") else stdout.read1(65536)
            if not chunk:
                return None  # EOF: worker died
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _exchange(self, request: ExecRequest, deadline_s: float) -> ExecResponse:
        if self._proc is None or self._proc.poll() is not None:
            self._restart()
        frame = request.to_frame()
        try:
            self._proc.stdin.write(frame + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._restart()
            raise _WorkerDied(str(exc))
        raw = self._read_frame(time.monotonic() + deadline_s)
        if raw is None:
            alive = self._proc.poll() is None
            self._restart()
            if alive:
                raise ExecTimeoutError(f"worker did not answer within {deadline_s:.1f}s")
            raise _WorkerDied("worker exited mid-request")
        resp = ExecResponse.from_frame(raw)
        if resp.id != request.id:
            self._restart()
            raise ExecProtocolError(f"response id {resp.id} does not echo request id {request.id}")
        return resp

    def _req_id(self) -> int:
        self._next_id += 1
        return self._next_id

    # -- contract ops ---------------------------------------------------------

    def health(self) -> ExecutorHealth:
        resp = self._exchange(ExecRequest(id=self._req_id(), op="health"), self.AUX_DEADLINE_S)
        if resp.status != "ok" or resp.version is None:
            raise ExecProtocolError(f"bad health response: {resp}")
        return ExecutorHealth(version=resp.version, ops=resp.ops or ())

    def call(self, source: str, entry: str, args: ArgTuple, limits: Optional[ExecLimits] = None) -> Outcome:
        limits = limits or self._default_limits
        request = ExecRequest(
            id=self._req_id(), op="call", source=source, entry=entry, args=args, limits=limits
        )
        try:
            resp = self._exchange(request, limits.timeout_ms / 1000.0 + self.GRACE_S)
        except _WorkerDied:
            # The in-flight call took the worker down; report it as a runtime
            # error so the session can continue on the restarted worker.
            return Err("ExecutorCrash", "worker process died during the call")
        if resp.status == "ok":
            if resp.outcome is None:
                raise ExecProtocolError("call response carries no outcome")
            return resp.outcome
        if resp.status == "timeout":
            raise ExecTimeoutError(f"call exceeded {limits.timeout_ms} ms")
        if resp.status == "protocolError":
            raise SourceLoadError(resp.error_kind or "LoadError", resp.error_message or "")
        raise ExecProtocolError(f"unexpected call status {resp.status!r}: {resp.error_message}")

    def compare(self, a: Outcome, b: Outcome, float_mode: Optional[FloatTolerance] = None) -> bool:
        request = ExecRequest(id=self._req_id(), op="compare", pair=(a, b), float_mode=float_mode)
        try:
            resp = self._exchange(request, self.AUX_DEADLINE_S)
        except _WorkerDied as exc:
            raise ExecProtocolError(f"worker died during compare: {exc}")
        if resp.status != "ok" or resp.equal is None:
            raise ExecProtocolError(f"bad compare response: {resp}")
        return bool(resp.equal)

    def transform(self, source: str, kind: str, entry: str) -> str:
        request = ExecRequest(
            id=self._req_id(), op="transform", source=source, entry=entry, transform_kind=kind
        )
        try:
            resp = self._exchange(request, self.AUX_DEADLINE_S)
        except _WorkerDied as exc:
            raise ExecProtocolError(f"worker died during transform: {exc}")
        if resp.status == "protocolError":
            raise SourceLoadError(resp.error_kind or "LoadError", resp.error_message or "")
        if resp.status != "ok" or resp.source is None:
            raise ExecProtocolError(f"bad transform response: {resp}")
        return resp.source


class _WorkerDied(Exception):
    pass


def executor_supports(executor, op: str) -> bool:
    try:
        return op in executor.health().ops
    except Exception:
        return False
