"""Dynamic value domain shared by tasks, agents, the oracle, and executors.

Values are an immutable tagged union mirroring the data a benchmark function
can consume or produce: None, bools, arbitrary-precision ints, 64-bit floats
(including NaN and infinities), text, lists, tuples, ordered maps, sets, and
an Opaque escape hatch for host objects outside the supported kinds.

Three renderings exist and must not be confused:

* ``encode``/``decode`` -- the canonical wire/file serialization (tagged JSON,
  one document per value). Deterministic; every value round-trips.
* ``render_literal`` -- a Python source literal that evaluates back to the
  same value. Used inside prompts and generated candidate code.
* ``render_str`` -- what ``print(str(x))`` would show for the host object.
  Used for the "Result i: ..." observation lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

__all__ = [
    "Value",
    "VNull",
    "VBool",
    "VInt",
    "VFloat",
    "VStr",
    "VList",
    "VTuple",
    "VMap",
    "VSet",
    "VOpaque",
    "Outcome",
    "Ok",
    "Err",
    "ArgTuple",
    "IOExample",
    "MalformedEncodingError",
    "UnrenderableValueError",
    "LiteralParseError",
    "MapKeyCollisionError",
    "encode",
    "decode",
    "value_to_wire",
    "value_from_wire",
    "outcome_to_wire",
    "outcome_from_wire",
    "args_to_wire",
    "args_from_wire",
    "structural_eq",
    "from_python",
    "to_python",
    "render_literal",
    "render_args",
    "render_str",
    "render_outcome",
    "parse_literal",
    "parse_call_args",
]


class MalformedEncodingError(ValueError):
    """Canonical document could not be decoded. ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnrenderableValueError(ValueError):
    """Value contains an Opaque node and cannot be rendered as a literal."""


class LiteralParseError(ValueError):
    """Text is not a supported host literal."""


class MapKeyCollisionError(ValueError):
    """Two structurally identical keys in one map."""


@dataclass(frozen=True)
class VNull:
    pass


@dataclass(frozen=True)
class VBool:
    value: bool


@dataclass(frozen=True)
class VInt:
    value: int


@dataclass(frozen=True)
class VFloat:
    value: float


@dataclass(frozen=True)
class VStr:
    value: str


@dataclass(frozen=True)
class VList:
    items: tuple["Value", ...]


@dataclass(frozen=True)
class VTuple:
    items: tuple["Value", ...]


@dataclass(frozen=True)
class VMap:
    """Insertion-ordered key/value pairs; keys pairwise structurally distinct."""

    pairs: tuple[tuple["Value", "Value"], ...]

    def __post_init__(self):
        seen: set[bytes] = set()
        for key, _ in self.pairs:
            enc = encode(key)
            if enc in seen:
                raise MapKeyCollisionError(f"duplicate map key {render_safe(key)}")
            seen.add(enc)


@dataclass(frozen=True)
class VSet:
    """Unordered collection; stored in canonical (encoded-bytes) order."""

    items: tuple["Value", ...]

    @staticmethod
    def of(items: Iterable["Value"]) -> "VSet":
        dedup: dict[bytes, Value] = {}
        for item in items:
            dedup.setdefault(encode(item), item)
        ordered = [dedup[k] for k in sorted(dedup)]
        return VSet(tuple(ordered))


@dataclass(frozen=True)
class VOpaque:
    """Host value outside the supported kinds: its rendering plus type name.

    Appears only in executor outputs, never in agent-generated query inputs.
    """

    rendering: str
    type_name: str


Value = Union[VNull, VBool, VInt, VFloat, VStr, VList, VTuple, VMap, VSet, VOpaque]

# Positional arguments of one call, in order.
ArgTuple = tuple[Value, ...]


@dataclass(frozen=True)
class Ok:
    value: Value


@dataclass(frozen=True)
class Err:
    """A captured error: the host error class name plus its message.

    Equality between outcomes never inspects ``message``.
    """

    kind: str
    message: str = ""

    def __post_init__(self):
        if not self.kind:
            raise ValueError("Err.kind must be non-empty")


Outcome = Union[Ok, Err]


@dataclass(frozen=True)
class IOExample:
    input: ArgTuple
    output: Outcome


# ---------------------------------------------------------------------------
# Canonical serialization: tagged JSON trees, encoded as compact UTF-8.
# Ints travel as decimal strings (no precision loss in foreign decoders),
# floats as shortest round-trip decimals with NaN/Infinity/-Infinity tokens.
# ---------------------------------------------------------------------------

_FLOAT_TOKENS = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


def _float_payload(f: float) -> str:
    if math.isnan(f):
        return "NaN"
    if math.isinf(f):
        return "Infinity" if f > 0 else "-Infinity"
    return repr(f)


def value_to_wire(v: Value):
    """Value -> JSON-able tagged tree (shared by files and the wire protocol)."""
    if isinstance(v, VNull):
        return ["null"]
    if isinstance(v, VBool):
        return ["bool", v.value]
    if isinstance(v, VInt):
        return ["int", str(v.value)]
    if isinstance(v, VFloat):
        return ["float", _float_payload(v.value)]
    if isinstance(v, VStr):
        return ["str", v.value]
    if isinstance(v, VList):
        return ["list", [value_to_wire(x) for x in v.items]]
    if isinstance(v, VTuple):
        return ["tuple", [value_to_wire(x) for x in v.items]]
    if isinstance(v, VMap):
        return ["map", [[value_to_wire(k), value_to_wire(val)] for k, val in v.pairs]]
    if isinstance(v, VSet):
        return ["set", [value_to_wire(x) for x in v.items]]
    if isinstance(v, VOpaque):
        return ["opaque", v.rendering, v.type_name]
    raise TypeError(f"not a Value: {v!r}")


def value_from_wire(tree) -> Value:
    if not isinstance(tree, list) or not tree or not isinstance(tree[0], str):
        raise MalformedEncodingError(f"expected tagged array, got {tree!r}")
    tag = tree[0]
    try:
        if tag == "null":
            return VNull()
        if tag == "bool":
            if not isinstance(tree[1], bool):
                raise MalformedEncodingError("bool payload must be true/false")
            return VBool(tree[1])
        if tag == "int":
            return VInt(int(tree[1]))
        if tag == "float":
            payload = tree[1]
            if payload in _FLOAT_TOKENS:
                return VFloat(_FLOAT_TOKENS[payload])
            return VFloat(float(payload))
        if tag == "str":
            if not isinstance(tree[1], str):
                raise MalformedEncodingError("str payload must be text")
            return VStr(tree[1])
        if tag == "list":
            return VList(tuple(value_from_wire(x) for x in tree[1]))
        if tag == "tuple":
            return VTuple(tuple(value_from_wire(x) for x in tree[1]))
        if tag == "map":
            return VMap(tuple((value_from_wire(k), value_from_wire(v)) for k, v in tree[1]))
        if tag == "set":
            return VSet.of(value_from_wire(x) for x in tree[1])
        if tag == "opaque":
            return VOpaque(str(tree[1]), str(tree[2]))
    except MalformedEncodingError:
        raise
    except (IndexError, TypeError, ValueError) as exc:
        raise MalformedEncodingError(f"bad payload for tag {tag!r}: {exc}") from exc
    raise MalformedEncodingError(f"unknown tag {tag!r}")


def encode(v: Value) -> bytes:
    """Canonical bytes for a value. Deterministic; structural identity witness."""
    return json.dumps(value_to_wire(v), ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode(b: bytes) -> Value:
    try:
        tree = json.loads(b.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MalformedEncodingError("not UTF-8", exc.start) from exc
    except json.JSONDecodeError as exc:
        raise MalformedEncodingError(exc.msg, exc.pos) from exc
    return value_from_wire(tree)


def outcome_to_wire(o: Outcome):
    if isinstance(o, Ok):
        return ["ok", value_to_wire(o.value)]
    return ["err", o.kind, o.message]


def outcome_from_wire(tree) -> Outcome:
    if not isinstance(tree, list) or not tree:
        raise MalformedEncodingError(f"expected outcome array, got {tree!r}")
    if tree[0] == "ok":
        return Ok(value_from_wire(tree[1]))
    if tree[0] == "err":
        try:
            return Err(str(tree[1]), str(tree[2]) if len(tree) > 2 else "")
        except (IndexError, ValueError) as exc:
            raise MalformedEncodingError(f"bad err payload: {exc}") from exc
    raise MalformedEncodingError(f"unknown outcome tag {tree[0]!r}")


def args_to_wire(args: ArgTuple):
    return [value_to_wire(a) for a in args]


def args_from_wire(tree) -> ArgTuple:
    if not isinstance(tree, list):
        raise MalformedEncodingError(f"expected argument array, got {tree!r}")
    return tuple(value_from_wire(a) for a in tree)


def structural_eq(a: Value, b: Value) -> bool:
    """Structural identity: same kind, recursively identical contents.

    Int 1 and Float 1.0 are NOT structurally identical; NaN IS identical to
    itself (serialization identity). Behavioral equality lives in the
    executor's outcome comparison, not here.
    """
    return encode(a) == encode(b)


# ---------------------------------------------------------------------------
# Host conversions.
# ---------------------------------------------------------------------------


def _guarded_repr(obj) -> str:
    try:
        text = repr(obj)
    except Exception as exc:
        return f"<unrepresentable: {type(exc).__name__}>"
    if len(text) > 10_000:
        text = text[:10_000] + "..."
    return text


def from_python(obj, *, opaque_ok: bool = True) -> Value:
    """Capture a host object as a Value; unsupported kinds become Opaque."""
    try:
        if obj is None:
            return VNull()
        if isinstance(obj, bool):
            return VBool(obj)
        if isinstance(obj, int):
            return VInt(obj)
        if isinstance(obj, float):
            return VFloat(obj)
        if isinstance(obj, str):
            return VStr(obj)
        if isinstance(obj, list):
            return VList(tuple(from_python(x, opaque_ok=opaque_ok) for x in obj))
        if isinstance(obj, tuple):
            return VTuple(tuple(from_python(x, opaque_ok=opaque_ok) for x in obj))
        if isinstance(obj, dict):
            return VMap(
                tuple(
                    (from_python(k, opaque_ok=opaque_ok), from_python(v, opaque_ok=opaque_ok))
                    for k, v in obj.items()
                )
            )
        if isinstance(obj, (set, frozenset)):
            return VSet.of(from_python(x, opaque_ok=opaque_ok) for x in obj)
    except (MapKeyCollisionError, RecursionError):
        if not opaque_ok:
            raise
        return VOpaque(_guarded_repr(obj), type(obj).__name__)
    if opaque_ok:
        return VOpaque(_guarded_repr(obj), type(obj).__name__)
    raise UnrenderableValueError(f"unsupported host value of type {type(obj).__name__}")


def to_python(v: Value):
    """Materialize a fresh host object. Opaque values are not materializable."""
    if isinstance(v, VNull):
        return None
    if isinstance(v, VBool):
        return v.value
    if isinstance(v, VInt):
        return v.value
    if isinstance(v, VFloat):
        return v.value
    if isinstance(v, VStr):
        return v.value
    if isinstance(v, VList):
        return [to_python(x) for x in v.items]
    if isinstance(v, VTuple):
        return tuple(to_python(x) for x in v.items)
    if isinstance(v, VMap):
        return {to_python(k): to_python(val) for k, val in v.pairs}
    if isinstance(v, VSet):
        return {to_python(x) for x in v.items}
    raise UnrenderableValueError(f"cannot materialize opaque value {v.rendering!r}")


# ---------------------------------------------------------------------------
# Literal rendering and parsing (host language: Python).
# ---------------------------------------------------------------------------


def render_literal(v: Value) -> str:
    """Python source text that evaluates back to the same value.

    Non-finite floats render as float('nan') / float('inf') / float('-inf'),
    the only supported non-literal forms.
    """
    if isinstance(v, VNull):
        return "None"
    if isinstance(v, VBool):
        return "True" if v.value else "False"
    if isinstance(v, VInt):
        return repr(v.value)
    if isinstance(v, VFloat):
        f = v.value
        if math.isnan(f):
            return "float('nan')"
        if math.isinf(f):
            return "float('inf')" if f > 0 else "float('-inf')"
        return repr(f)
    if isinstance(v, VStr):
        return repr(v.value)
    if isinstance(v, VList):
        return "[" + ", ".join(render_literal(x) for x in v.items) + "]"
    if isinstance(v, VTuple):
        if len(v.items) == 1:
            return "(" + render_literal(v.items[0]) + ",)"
        return "(" + ", ".join(render_literal(x) for x in v.items) + ")"
    if isinstance(v, VMap):
        return "{" + ", ".join(f"{render_literal(k)}: {render_literal(val)}" for k, val in v.pairs) + "}"
    if isinstance(v, VSet):
        if not v.items:
            return "set()"
        return "{" + ", ".join(render_literal(x) for x in v.items) + "}"
    raise UnrenderableValueError(f"cannot render opaque value {v.rendering!r} as a literal")


def render_args(args: ArgTuple) -> str:
    """Argument list text for a call site: ``f(<here>)``."""
    return ", ".join(render_literal(a) for a in args)


def render_safe(v: Value) -> str:
    """Best-effort rendering for diagnostics; never raises."""
    try:
        return render_literal(v)
    except UnrenderableValueError:
        return f"<opaque {v.type_name}: {v.rendering}>" if isinstance(v, VOpaque) else repr(v)


def render_str(v: Value) -> str:
    """What ``str(x)`` shows for the host object (observation lines)."""
    try:
        return str(to_python(v))
    except UnrenderableValueError:
        return _render_str_structural(v)


def _render_str_structural(v: Value) -> str:
    # Opaque-containing values cannot be materialized; splice the stored
    # rendering in where repr() of the real object would have appeared.
    if isinstance(v, VOpaque):
        return v.rendering
    if isinstance(v, VStr):
        return v.value
    if isinstance(v, (VList, VTuple, VSet, VMap)):
        return _render_repr_structural(v)
    return render_str(v)


def _render_repr_structural(v: Value) -> str:
    if isinstance(v, VOpaque):
        return v.rendering
    if isinstance(v, VList):
        return "[" + ", ".join(_render_repr_structural(x) for x in v.items) + "]"
    if isinstance(v, VTuple):
        if len(v.items) == 1:
            return "(" + _render_repr_structural(v.items[0]) + ",)"
        return "(" + ", ".join(_render_repr_structural(x) for x in v.items) + ")"
    if isinstance(v, VMap):
        return "{" + ", ".join(
            f"{_render_repr_structural(k)}: {_render_repr_structural(val)}" for k, val in v.pairs
        ) + "}"
    if isinstance(v, VSet):
        if not v.items:
            return "set()"
        return "{" + ", ".join(_render_repr_structural(x) for x in v.items) + "}"
    try:
        return repr(to_python(v))
    except UnrenderableValueError:  # pragma: no cover - defensive
        return "<opaque>"


ERROR_MARKER_PREFIX = "Error("


def render_outcome(o: Outcome) -> str:
    """Observation-line rendering: str() of the value, or the error marker."""
    if isinstance(o, Ok):
        return render_str(o.value)
    return f"{ERROR_MARKER_PREFIX}{o.kind})"


# Restricted literal parsing: Python literals plus float('nan')-style calls
# and set(). Implemented over the ast so no agent text is ever evaluated.

import ast  # noqa: E402  (kept local to the parsing section)


def _value_from_node(node: ast.expr) -> Value:
    if isinstance(node, ast.Constant):
        c = node.value
        if c is None:
            return VNull()
        if isinstance(c, bool):
            return VBool(c)
        if isinstance(c, int):
            return VInt(c)
        if isinstance(c, float):
            return VFloat(c)
        if isinstance(c, str):
            return VStr(c)
        if isinstance(c, complex) or isinstance(c, bytes):
            raise LiteralParseError(f"unsupported constant {c!r}")
        raise LiteralParseError(f"unsupported constant {c!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _value_from_node(node.operand)
        if isinstance(inner, (VInt, VFloat)) and not isinstance(inner, VBool):
            if isinstance(node.op, ast.UAdd):
                return inner
            if isinstance(inner, VInt):
                return VInt(-inner.value)
            return VFloat(-inner.value)
        raise LiteralParseError("unary minus applies to numbers only")
    if isinstance(node, ast.List):
        return VList(tuple(_value_from_node(x) for x in node.elts))
    if isinstance(node, ast.Tuple):
        return VTuple(tuple(_value_from_node(x) for x in node.elts))
    if isinstance(node, ast.Dict):
        pairs = []
        for k, v in zip(node.keys, node.values):
            if k is None:
                raise LiteralParseError("dict unpacking is not a literal")
            pairs.append((_value_from_node(k), _value_from_node(v)))
        try:
            return VMap(tuple(pairs))
        except MapKeyCollisionError as exc:
            raise LiteralParseError(str(exc)) from exc
    if isinstance(node, ast.Set):
        return VSet.of(_value_from_node(x) for x in node.elts)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name == "float" and len(node.args) == 1 and not node.keywords:
            arg = node.args[0]
            if isinstance(arg, ast.Constant) and isinstance(arg.value, str):
                try:
                    return VFloat(float(arg.value))
                except ValueError as exc:
                    raise LiteralParseError(f"bad float token {arg.value!r}") from exc
        if name == "set" and not node.args and not node.keywords:
            return VSet.of(())
        raise LiteralParseError(f"call to {name!r} is not a literal")
    raise LiteralParseError(f"unsupported syntax: {ast.dump(node)[:80]}")


def parse_literal(text: str) -> Value:
    """Parse one host literal back into a Value."""
    try:
        node = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise LiteralParseError(f"not a literal: {exc.msg}") from exc
    return _value_from_node(node)


def parse_call_args(call_text: str, entry: str) -> ArgTuple:
    """Extract literal positional args from ``entry(arg, ...)`` call text."""
    try:
        node = ast.parse(call_text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise LiteralParseError(f"not a call: {exc.msg}") from exc
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == entry):
        raise LiteralParseError(f"expected a call to {entry!r}")
    if node.keywords:
        raise LiteralParseError("keyword arguments are not supported")
    return tuple(_value_from_node(a) for a in node.args)
