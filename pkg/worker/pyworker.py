#!/usr/bin/env python3
"""Subprocess execution worker for the synthesis harness.

Speaks the newline-delimited stdio protocol: each line is one JSON document,
requests in, responses out, ids echoed, one request in flight at a time.
Supported ops: call, compare, transform, health. The worker announces itself
with a single health frame on startup and is launched with exactly one
argument naming its JSON config file.

Standalone on purpose: only the standard library, no imports from the
orchestrator package. The wire format is the contract.

Config file fields (all optional):
    hardTimeoutMs            int, upper bound on any single call (default 10000)
    recursionLimit           int, python recursion limit during calls (default 10000)
    disallowedCapabilities   list of {"network", "filesystem-write", "process-spawn"}
"""

from __future__ import annotations

import ast
import builtins
import io
import json
import math
import os
import signal
import sys
import tempfile
import traceback

PROTOCOL_VERSION = "1"
OPS = ("call", "compare", "transform", "health")

DEFAULT_HARD_TIMEOUT_MS = 10_000
DEFAULT_RECURSION_LIMIT = 10_000
DEFAULT_MAX_OUTPUT_BYTES = 1_000_000


# ---------------------------------------------------------------------------
# Wire codec (tagged JSON values).
# ---------------------------------------------------------------------------

_FLOAT_TOKENS = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


class CodecError(ValueError):
    pass


class Opaque:
    """Stand-in for a host value that does not fit the supported kinds.
    Compares by rendering and type name."""

    __slots__ = ("rendering", "type_name")

    def __init__(self, rendering: str, type_name: str):
        self.rendering = rendering
        self.type_name = type_name

    def __eq__(self, other):
        return (
            isinstance(other, Opaque)
            and self.rendering == other.rendering
            and self.type_name == other.type_name
        )

    def __hash__(self):
        return hash((self.rendering, self.type_name))


def value_to_wire(obj):
    if obj is None:
        return ["null"]
    if isinstance(obj, bool):
        return ["bool", obj]
    if isinstance(obj, int):
        return ["int", str(obj)]
    if isinstance(obj, float):
        if math.isnan(obj):
            return ["float", "NaN"]
        if math.isinf(obj):
            return ["float", "Infinity" if obj > 0 else "-Infinity"]
        return ["float", repr(obj)]
    if isinstance(obj, str):
        return ["str", obj]
    if isinstance(obj, list):
        return ["list", [value_to_wire(x) for x in obj]]
    if isinstance(obj, tuple):
        return ["tuple", [value_to_wire(x) for x in obj]]
    if isinstance(obj, dict):
        return ["map", [[value_to_wire(k), value_to_wire(v)] for k, v in obj.items()]]
    if isinstance(obj, (set, frozenset)):
        elems = sorted(
            (json.dumps(value_to_wire(x), sort_keys=True, separators=(",", ":")), value_to_wire(x))
            for x in obj
        )
        return ["set", [tree for _, tree in elems]]
    if isinstance(obj, Opaque):
        return ["opaque", obj.rendering, obj.type_name]
    return ["opaque", _safe_repr(obj), type(obj).__name__]


def value_from_wire(tree):
    if not isinstance(tree, list) or not tree or not isinstance(tree[0], str):
        raise CodecError(f"expected tagged array, got {tree!r}")
    tag = tree[0]
    try:
        if tag == "null":
            return None
        if tag == "bool":
            return bool(tree[1])
        if tag == "int":
            return int(tree[1])
        if tag == "float":
            payload = tree[1]
            return _FLOAT_TOKENS[payload] if payload in _FLOAT_TOKENS else float(payload)
        if tag == "str":
            return str(tree[1])
        if tag == "list":
            return [value_from_wire(x) for x in tree[1]]
        if tag == "tuple":
            return tuple(value_from_wire(x) for x in tree[1])
        if tag == "map":
            return {value_from_wire(k): value_from_wire(v) for k, v in tree[1]}
        if tag == "set":
            return {value_from_wire(x) for x in tree[1]}
        if tag == "opaque":
            return Opaque(str(tree[1]), str(tree[2]))
    except CodecError:
        raise
    except Exception as exc:
        raise CodecError(f"bad payload for tag {tag!r}: {exc}") from exc
    raise CodecError(f"unknown tag {tag!r}")


def outcome_to_wire(kind_value):
    status, payload = kind_value
    if status == "ok":
        return ["ok", value_to_wire(payload)]
    kind, message = payload
    return ["err", kind, message]


def outcome_from_wire(tree):
    if not isinstance(tree, list) or not tree:
        raise CodecError(f"expected outcome array, got {tree!r}")
    if tree[0] == "ok":
        return ("ok", value_from_wire(tree[1]))
    if tree[0] == "err":
        return ("err", (str(tree[1]), str(tree[2]) if len(tree) > 2 else ""))
    raise CodecError(f"unknown outcome tag {tree[0]!r}")


def _safe_repr(obj) -> str:
    try:
        text = repr(obj)
    except Exception as exc:
        return f"<unrepresentable: {type(exc).__name__}>"
    return text[:10_000]


# ---------------------------------------------------------------------------
# Execution with timeout and capture.
# ---------------------------------------------------------------------------


class CallTimeout(BaseException):
    """BaseException so candidate ``except Exception`` cannot swallow it."""


def _alarm_handler(signum, frame):
    raise CallTimeout()


class _BoundedWriter(io.TextIOBase):
    def __init__(self, cap: int):
        super().__init__()
        self.cap = cap
        self.buffer = io.StringIO()

    def write(self, s):
        if self.buffer.tell() < self.cap:
            self.buffer.write(s[: self.cap - self.buffer.tell()])
        return len(s)

    def writable(self):
        return True


def _guarded_builtins(disallowed: set[str]):
    table = dict(vars(builtins))
    if not disallowed:
        return table
    denied_modules = set()
    if "network" in disallowed:
        denied_modules |= {"socket", "ssl", "http", "urllib", "ftplib", "smtplib"}
    if "process-spawn" in disallowed:
        denied_modules |= {"subprocess", "multiprocessing", "ctypes"}
    real_import = builtins.__import__

    def guarded_import(name, *args, **kwargs):
        root = name.split(".")[0]
        if root in denied_modules:
            raise ImportError(f"module {root!r} is not available in this sandbox")
        return real_import(name, *args, **kwargs)

    table["__import__"] = guarded_import
    if "filesystem-write" in disallowed:
        real_open = builtins.open

        def guarded_open(file, mode="r", *args, **kwargs):
            if any(flag in mode for flag in "wax+"):
                raise PermissionError("write access is not available in this sandbox")
            return real_open(file, mode, *args, **kwargs)

        table["open"] = guarded_open
    return table


class Runtime:
    def __init__(self, config: dict):
        self.hard_timeout_ms = int(config.get("hardTimeoutMs", DEFAULT_HARD_TIMEOUT_MS))
        self.recursion_limit = int(config.get("recursionLimit", DEFAULT_RECURSION_LIMIT))
        self.disallowed = set(config.get("disallowedCapabilities", ()))
        self._code_cache: dict[str, object] = {}
        self._builtins_table = _guarded_builtins(self.disallowed)
        signal.signal(signal.SIGALRM, _alarm_handler)

    def load(self, source: str, entry: str):
        """Fresh namespace per load; compilation cached by source text."""
        code = self._code_cache.get(source)
        if code is None:
            code = compile(source, "<submitted>", "exec")
            self._code_cache[source] = code
        namespace = {"__name__": "__submitted__", "__builtins__": self._builtins_table}
        exec(code, namespace)
        fn = namespace.get(entry)
        if not callable(fn):
            raise KeyError(f"source does not define function {entry!r}")
        return fn

    def call(self, source: str, entry: str, args: list, limits: dict) -> dict:
        timeout_ms = min(int(limits.get("timeoutMs", self.hard_timeout_ms)), self.hard_timeout_ms)
        max_output = int(limits.get("maxOutputBytes", DEFAULT_MAX_OUTPUT_BYTES))
        try:
            fn = self.load(source, entry)
        except CallTimeout:
            return {"status": "timeout"}
        except BaseException as exc:
            return {
                "status": "protocolError",
                "error": {"kind": type(exc).__name__, "message": _safe_repr(exc)},
            }
        old_stdout, old_stderr = sys.stdout, sys.stderr
        old_limit = sys.getrecursionlimit()
        sink = _BoundedWriter(max_output)
        sys.stdout = sink
        sys.stderr = sink
        sys.setrecursionlimit(max(old_limit, self.recursion_limit))
        signal.setitimer(signal.ITIMER_REAL, timeout_ms / 1000.0)
        try:
            try:
                result = fn(*args)
                outcome = ("ok", result)
            except CallTimeout:
                return {"status": "timeout"}
            except SystemExit as exc:
                outcome = ("err", ("SystemExit", str(exc.code) if exc.code is not None else ""))
            except KeyboardInterrupt:
                raise
            except BaseException as exc:
                outcome = ("err", (type(exc).__name__, _safe_str(exc)))
        finally:
            signal.setitimer(signal.ITIMER_REAL, 0)
            sys.setrecursionlimit(old_limit)
            sys.stdout, sys.stderr = old_stdout, old_stderr
        try:
            tree = outcome_to_wire(outcome)
        except RecursionError:
            tree = ["err", "ResultEncodingError", "result too deeply nested"]
        encoded = json.dumps(tree, sort_keys=True, separators=(",", ":"))
        if len(encoded.encode("utf-8")) > max_output:
            tree = ["err", "OutputTooLarge", f"encoded result exceeds {max_output} bytes"]
        return {"status": "ok", "outcome": tree}


def _safe_str(exc) -> str:
    try:
        return str(exc)
    except Exception:
        return "<unprintable exception>"


# ---------------------------------------------------------------------------
# Comparison: host equality with optional numeric tolerance.
# ---------------------------------------------------------------------------


def _tolerant_equal(a, b, abs_tol: float, rel_tol: float) -> bool:
    number = (int, float)
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, number) and isinstance(b, number):
        if isinstance(a, float) or isinstance(b, float):
            try:
                return math.isclose(a, b, abs_tol=abs_tol, rel_tol=rel_tol)
            except OverflowError:
                return a == b
        return a == b
    if isinstance(a, list) and isinstance(b, list) or isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_tolerant_equal(x, y, abs_tol, rel_tol) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        if len(a) != len(b):
            return False
        unmatched = list(b.items())
        for key, val in a.items():
            for i, (k2, v2) in enumerate(unmatched):
                if _tolerant_equal(key, k2, abs_tol, rel_tol) and _tolerant_equal(val, v2, abs_tol, rel_tol):
                    del unmatched[i]
                    break
            else:
                return False
        return True
    if isinstance(a, (set, frozenset)) and isinstance(b, (set, frozenset)):
        if len(a) != len(b):
            return False
        unmatched = list(b)
        for x in a:
            for i, y in enumerate(unmatched):
                if _tolerant_equal(x, y, abs_tol, rel_tol):
                    del unmatched[i]
                    break
            else:
                return False
        return True
    return a == b


def compare_outcomes(pair, float_mode: dict) -> bool:
    (status_a, payload_a), (status_b, payload_b) = pair
    if status_a == "err" and status_b == "err":
        return payload_a[0] == payload_b[0]
    if status_a == "err" or status_b == "err":
        return False
    if float_mode.get("mode") == "tolerance":
        return _tolerant_equal(
            payload_a,
            payload_b,
            float(float_mode.get("absTol", 0.0)),
            float(float_mode.get("relTol", 0.0)),
        )
    return payload_a == payload_b


# ---------------------------------------------------------------------------
# Transform: rename the entry function and all name references bound to it.
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


def transform_anonymize(source: str, entry: str) -> str:
    if entry == "solution":
        return source
    tree = ast.parse(source)
    new_tree = _Renamer(entry, "solution").visit(tree)
    ast.fix_missing_locations(new_tree)
    return ast.unparse(new_tree)


# ---------------------------------------------------------------------------
# The request loop.
# ---------------------------------------------------------------------------


def _response_bytes(doc: dict) -> bytes:
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")


def handle_request(runtime: Runtime, doc: dict) -> dict:
    rid = doc.get("id", 0)
    op = doc.get("op")
    if op == "health":
        return {"id": rid, "status": "ok", "version": PROTOCOL_VERSION, "ops": list(OPS)}
    if op == "call":
        try:
            source = doc["source"]
            entry = doc["entry"]
            args = [value_from_wire(a) for a in doc.get("args", [])]
        except (KeyError, CodecError) as exc:
            return _protocol_error(rid, exc)
        if any(isinstance(a, Opaque) for a in args):
            return _protocol_error(rid, ValueError("opaque values cannot be call arguments"))
        response = runtime.call(source, entry, args, doc.get("limits", {}))
        response["id"] = rid
        return response
    if op == "compare":
        try:
            pair = [outcome_from_wire(t) for t in doc["pair"]]
            equal = compare_outcomes(pair, doc.get("floatMode", {"mode": "exact"}))
        except (KeyError, CodecError, TypeError) as exc:
            return _protocol_error(rid, exc)
        return {"id": rid, "status": "ok", "equal": bool(equal)}
    if op == "transform":
        if doc.get("transformKind") != "anonymize":
            return _protocol_error(rid, ValueError(f"unknown transform {doc.get('transformKind')!r}"))
        try:
            renamed = transform_anonymize(doc["source"], doc["entry"])
        except (KeyError, SyntaxError, ValueError) as exc:
            return _protocol_error(rid, exc)
        return {"id": rid, "status": "ok", "source": renamed}
    return _protocol_error(rid, ValueError(f"unknown op {op!r}"))


def _protocol_error(rid, exc) -> dict:
    return {
        "id": rid,
        "status": "protocolError",
        "error": {"kind": type(exc).__name__, "message": str(exc)},
    }


def serve(stdin_buffer, stdout_buffer, config: dict) -> int:
    runtime = Runtime(config)
    # Working-directory jail: candidate code that writes relative paths lands
    # in a disposable directory. Process supervision remains the real boundary.
    try:
        os.chdir(tempfile.mkdtemp(prefix="pyworker-"))
    except OSError:
        pass
    stdout_buffer.write(
        _response_bytes({"id": 0, "status": "ok", "version": PROTOCOL_VERSION, "ops": list(OPS)}) + b"\n"
    )
    stdout_buffer.flush()
    while True:
        line = stdin_buffer.readline()
        if not line:
            return 0  # clean shutdown: gateway closed our stdin
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line.decode("utf-8"))
            if not isinstance(doc, dict):
                raise ValueError("frame must be a JSON object")
            response = handle_request(runtime, doc)
        except Exception as exc:  # malformed frame or handler bug
            response = _protocol_error(0, exc)
        try:
            stdout_buffer.write(_response_bytes(response) + b"\n")
            stdout_buffer.flush()
        except (BrokenPipeError, OSError):
            return 1  # unrecoverable stream loss


def main(argv) -> int:
    config: dict = {}
    if len(argv) > 1:
        try:
            with open(argv[1], "r", encoding="utf-8") as handle:
                config = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"pyworker: bad config file: {exc}", file=sys.stderr)
            return 2
    try:
        return serve(sys.stdin.buffer, sys.stdout.buffer, config)
    except KeyboardInterrupt:
        return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
