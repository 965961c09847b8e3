"""Differential-testing oracle: find inputs where two functions disagree.

A check runs an ordered stack of input strategies against both functions,
compares outcomes through the executor, and returns Pass or Fail with the
first counterexample found. Seed replay always runs first and in full, so a
passing candidate is guaranteed to agree with the truth on every observed
example (the containment behind the pass1/pass2 analysis).

Strategies are generative only; no coverage feedback. Equivalence proofs are
out of reach on principle, so Pass means "no disagreement found within the
test budget".
"""

from __future__ import annotations

import enum
import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .executor import (
    DEFAULT_LIMITS,
    ExecLimits,
    ExecTimeoutError,
    FloatTolerance,
    SourceLoadError,
)
from .values import (
    ArgTuple,
    Err,
    Ok,
    Outcome,
    VBool,
    VFloat,
    VInt,
    VList,
    VMap,
    VNull,
    VSet,
    VStr,
    VTuple,
    Value,
    encode,
    from_python,
    render_safe,
)

log = logging.getLogger(__name__)


class StrategyKind(enum.Enum):
    SEED_REPLAY = "seed_replay"
    COUNTEREXAMPLE_REPLAY = "counterexample_replay"
    BOUNDARY_PROBES = "boundary_probes"
    SEED_MUTATION = "seed_mutation"
    TYPE_AWARE_RANDOM = "type_aware_random"


DEFAULT_STRATEGIES = (
    StrategyKind.SEED_REPLAY,
    StrategyKind.COUNTEREXAMPLE_REPLAY,
    StrategyKind.BOUNDARY_PROBES,
    StrategyKind.SEED_MUTATION,
    StrategyKind.TYPE_AWARE_RANDOM,
)


class InconsistentArityError(ValueError):
    pass


class TruthLoadFailureError(Exception):
    """The target function itself failed to load: a task defect."""


class CandidateLoadError(Exception):
    """Candidate source failed to load; not a behavioral counterexample."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message


@dataclass(frozen=True)
class FunctionHandle:
    """A loadable function: source text (or builtin URI) plus entry name."""

    source: str
    entry: str


@dataclass(frozen=True)
class OracleConfig:
    max_tests: int = 200
    per_call_limits: ExecLimits = DEFAULT_LIMITS
    strategies: tuple[StrategyKind, ...] = DEFAULT_STRATEGIES
    seed: int = 0
    float_mode: Optional[FloatTolerance] = None

    def __post_init__(self):
        if not self.strategies or self.strategies[0] is not StrategyKind.SEED_REPLAY:
            raise ValueError("SeedReplay must be present and first")
        if self.max_tests < 1:
            raise ValueError("max_tests must be >= 1")


@dataclass(frozen=True)
class Counterexample:
    """One behavioral difference: input, candidate outcome, truth outcome."""

    input: ArgTuple
    candidate_outcome: Outcome
    truth_outcome: Outcome


@dataclass(frozen=True)
class Pass:
    tests_run: int = 0


@dataclass(frozen=True)
class Fail:
    counterexample: Counterexample
    strategy_attribution: StrategyKind
    tests_run: int
    # Position within the seed-replay corpus when the failing input came from
    # seed replay; lets the session decide "agreed with all initial examples".
    seed_replay_index: Optional[int] = None
    # Populated only by exhaustive checks (attribution analysis).
    detected_by: Optional[frozenset[StrategyKind]] = None


OracleVerdict = Union[Pass, Fail]


# ---------------------------------------------------------------------------
# Input profiling.
# ---------------------------------------------------------------------------

_SCALAR_KINDS = {"null", "bool", "int", "float", "str"}
_CONTAINER_KINDS = {"list", "tuple", "set"}

# Numeric ranges widen to four times the observed span (centered); a single
# observed point widens to +/-4. Frozen here and in the golden tests.
_WIDEN_FACTOR = 4
_POINT_PAD = 4


def _kind_of(v: Value) -> str:
    return {
        VNull: "null",
        VBool: "bool",
        VInt: "int",
        VFloat: "float",
        VStr: "str",
        VList: "list",
        VTuple: "tuple",
        VMap: "map",
        VSet: "set",
    }.get(type(v), "opaque")


@dataclass
class ArgProfile:
    kind_counts: dict[str, int] = field(default_factory=dict)
    element_kind_counts: dict[str, int] = field(default_factory=dict)
    len_min: Optional[int] = None
    len_max: Optional[int] = None
    num_min: Optional[float] = None
    num_max: Optional[float] = None
    element_num_min: Optional[float] = None
    element_num_max: Optional[float] = None
    chars: str = ""

    def widened_range(self) -> tuple[float, float]:
        return _widen(self.num_min, self.num_max)

    def widened_element_range(self) -> tuple[float, float]:
        return _widen(self.element_num_min, self.element_num_max)


def _widen(lo: Optional[float], hi: Optional[float]) -> tuple[float, float]:
    if lo is None or hi is None:
        return (-_POINT_PAD, _POINT_PAD)
    span = hi - lo
    if span == 0:
        return (lo - _POINT_PAD, hi + _POINT_PAD)
    pad = span * (_WIDEN_FACTOR - 1) / 2
    return (lo - pad, hi + pad)


@dataclass
class InputProfile:
    arity: int
    args: tuple[ArgProfile, ...]


def _observe_scalar(profile: ArgProfile, v: Value, *, element: bool):
    if isinstance(v, (VInt, VFloat)) and not isinstance(v, VBool):
        x = float(v.value) if isinstance(v, VFloat) else v.value
        if element:
            profile.element_num_min = x if profile.element_num_min is None else min(profile.element_num_min, x)
            profile.element_num_max = x if profile.element_num_max is None else max(profile.element_num_max, x)
        else:
            profile.num_min = x if profile.num_min is None else min(profile.num_min, x)
            profile.num_max = x if profile.num_max is None else max(profile.num_max, x)
    if isinstance(v, VStr):
        sample = "".join(sorted(set(profile.chars) | set(v.value)))
        profile.chars = sample[:64]


def _observe(profile: ArgProfile, v: Value):
    kind = _kind_of(v)
    profile.kind_counts[kind] = profile.kind_counts.get(kind, 0) + 1
    _observe_scalar(profile, v, element=False)
    if isinstance(v, (VList, VTuple, VSet)):
        length = len(v.items)
        profile.len_min = length if profile.len_min is None else min(profile.len_min, length)
        profile.len_max = length if profile.len_max is None else max(profile.len_max, length)
        for item in v.items:
            ekind = _kind_of(item)
            profile.element_kind_counts[ekind] = profile.element_kind_counts.get(ekind, 0) + 1
            _observe_scalar(profile, item, element=True)
    if isinstance(v, VStr):
        length = len(v.value)
        profile.len_min = length if profile.len_min is None else min(profile.len_min, length)
        profile.len_max = length if profile.len_max is None else max(profile.len_max, length)
    if isinstance(v, VMap):
        length = len(v.pairs)
        profile.len_min = length if profile.len_min is None else min(profile.len_min, length)
        profile.len_max = length if profile.len_max is None else max(profile.len_max, length)
        for _, val in v.pairs:
            ekind = _kind_of(val)
            profile.element_kind_counts[ekind] = profile.element_kind_counts.get(ekind, 0) + 1
            _observe_scalar(profile, val, element=True)


def infer_profile(seeds: Sequence[ArgTuple]) -> InputProfile:
    """Shape descriptor driving type-aware random generation."""
    if not seeds:
        raise InconsistentArityError("no seed inputs to profile")
    arity = len(seeds[0])
    for s in seeds:
        if len(s) != arity:
            raise InconsistentArityError(f"arity {len(s)} != {arity}")
    args = tuple(ArgProfile() for _ in range(arity))
    for s in seeds:
        for profile, v in zip(args, s):
            _observe(profile, v)
    return InputProfile(arity=arity, args=args)


# ---------------------------------------------------------------------------
# Generation strategies.
# ---------------------------------------------------------------------------

# The classic probe: duplicate unhashable elements inside an otherwise plain
# list. Exposes set-based vs comparison-based implementations.
_UNHASHABLE_DUPES = from_python([1, 2, 3, 4, [5, 6], [5, 6]])


def _dominant(counts: dict[str, int], fallback: str) -> str:
    if not counts:
        return fallback
    return max(sorted(counts), key=lambda k: counts[k])


def _prototype_elements(argp: ArgProfile) -> list[Value]:
    lo, hi = argp.widened_element_range()
    kinds = argp.element_kind_counts or {"int": 1}
    protos: list[Value] = []
    for kind in sorted(kinds):
        if kind == "int":
            protos.append(VInt(int(hi) or 1))
        elif kind == "float":
            protos.append(VFloat(1.5))
        elif kind == "str":
            protos.append(VStr((argp.chars or "a")[0]))
        elif kind == "bool":
            protos.append(VBool(True))
        elif kind == "null":
            protos.append(VNull())
        elif kind == "tuple":
            protos.append(VTuple((VInt(1),)))
        elif kind == "list":
            protos.append(VList((VInt(1),)))
    return protos or [VInt(1)]


def _boundary_values(argp: ArgProfile) -> list[Value]:
    kind = _dominant(argp.kind_counts, "int")
    values: list[Value] = []
    if kind in _CONTAINER_KINDS:
        wrap = {"list": VList, "tuple": VTuple}.get(kind)
        make = (lambda items: VSet.of(items)) if wrap is None else (lambda items: wrap(tuple(items)))
        protos = _prototype_elements(argp)
        e0 = protos[0]
        values.append(make([]))
        values.append(make([e0]))
        values.append(make([e0, e0, e0]))  # all duplicates (collapses in sets)
        values.append(make(protos + protos))
        values.append(make([VInt(1), VStr("a"), VNull()]))  # heterogeneous
        lo, hi = argp.widened_element_range()
        values.append(make([VInt(0), VInt(-1), VInt(int(hi)), VInt(int(lo))]))
        if kind == "list":
            values.append(_UNHASHABLE_DUPES)
            values.append(VList((VList((VList((VList((VInt(1),)),)),)),)))  # deep nesting
            if argp.len_max and argp.len_max >= 2:
                n = min(argp.len_max, 40)
                values.append(VList(tuple(VInt(i) for i in range(n))))
    elif kind == "str":
        values.append(VStr(""))
        values.append(VStr(" "))
        values.append(VStr("a"))
        values.append(VStr("aa"))
        values.append(VStr("déjà vu ✓"))  # unicode probe
        if argp.len_max:
            values.append(VStr("ab" * min(argp.len_max, 25)))
    elif kind in {"int", "float"}:
        lo, hi = argp.widened_range()
        values.extend([VInt(0), VInt(-1), VInt(1)])
        values.append(VInt(int(lo)))
        values.append(VInt(int(hi)))
        if kind == "float" or "float" in argp.kind_counts:
            values.extend([VFloat(0.0), VFloat(-1.5), VFloat(float(hi))])
    elif kind == "bool":
        values.extend([VBool(True), VBool(False)])
    elif kind == "null":
        values.append(VNull())
    elif kind == "map":
        values.append(VMap(()))
        values.append(VMap(((VStr("a"), VInt(1)),)))
    return values


def _boundary_probes(profile: InputProfile, template: ArgTuple) -> list[ArgTuple]:
    probes: list[ArgTuple] = []
    for i, argp in enumerate(profile.args):
        for v in _boundary_values(argp):
            probe = tuple(v if j == i else template[j] for j in range(profile.arity))
            probes.append(probe)
    return probes


def _random_scalar(argp: ArgProfile, rng: random.Random, kind: str) -> Value:
    if kind == "int":
        lo, hi = argp.widened_range()
        return VInt(rng.randint(int(lo), max(int(lo), int(hi))))
    if kind == "float":
        lo, hi = argp.widened_range()
        return VFloat(round(rng.uniform(lo, hi), 6))
    if kind == "str":
        alphabet = argp.chars or "abc"
        hi = min(argp.len_max if argp.len_max is not None else 8, 30)
        lo = min(argp.len_min or 0, hi)
        return VStr("".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi))))
    if kind == "bool":
        return VBool(rng.random() < 0.5)
    if kind == "null":
        return VNull()
    return VInt(rng.randint(-10, 10))


def _random_element(argp: ArgProfile, rng: random.Random) -> Value:
    kinds = sorted(argp.element_kind_counts) or ["int"]
    weights = [argp.element_kind_counts.get(k, 1) for k in kinds]
    kind = rng.choices(kinds, weights=weights)[0]
    if kind in {"int", "float"}:
        lo, hi = argp.widened_element_range()
        if kind == "int":
            return VInt(rng.randint(int(lo), max(int(lo), int(hi))))
        return VFloat(round(rng.uniform(lo, hi), 6))
    if kind == "str":
        alphabet = argp.chars or "abc"
        return VStr("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 6))))
    if kind == "bool":
        return VBool(rng.random() < 0.5)
    if kind == "null":
        return VNull()
    if kind == "tuple":
        return VTuple(tuple(VInt(rng.randint(-5, 5)) for _ in range(rng.randint(0, 3))))
    if kind == "list":
        return VList(tuple(VInt(rng.randint(-5, 5)) for _ in range(rng.randint(0, 3))))
    return VInt(rng.randint(-5, 5))


def _random_value(argp: ArgProfile, rng: random.Random) -> Value:
    kinds = sorted(argp.kind_counts) or ["int"]
    weights = [argp.kind_counts.get(k, 1) for k in kinds]
    kind = rng.choices(kinds, weights=weights)[0]
    if kind in _SCALAR_KINDS:
        return _random_scalar(argp, rng, kind)
    length_hi = min(argp.len_max if argp.len_max is not None else 6, 100)
    length_lo = min(argp.len_min or 0, length_hi)
    length = rng.randint(length_lo, length_hi)
    if kind == "list":
        return VList(tuple(_random_element(argp, rng) for _ in range(length)))
    if kind == "tuple":
        return VTuple(tuple(_random_element(argp, rng) for _ in range(length)))
    if kind == "set":
        return VSet.of(_random_element(argp, rng) for _ in range(length))
    if kind == "map":
        pairs = {}
        for _ in range(min(length, 8)):
            pairs[encode(VStr("k%d" % rng.randint(0, 99)))] = None
        keys = [VStr("k%d" % rng.randint(0, 99)) for _ in range(min(length, 8))]
        out: list[tuple[Value, Value]] = []
        seen: set[bytes] = set()
        for k in keys:
            kb = encode(k)
            if kb in seen:
                continue
            seen.add(kb)
            out.append((k, _random_element(argp, rng)))
        return VMap(tuple(out))
    return _random_scalar(argp, rng, "int")


def _type_aware_random(profile: InputProfile, rng: random.Random, n: int) -> list[ArgTuple]:
    return [tuple(_random_value(argp, rng) for argp in profile.args) for _ in range(n)]


def _mutate_value(v: Value, rng: random.Random) -> Value:
    ops = []
    if isinstance(v, (VList, VTuple)) and v.items:
        ops.extend(["dup", "del", "perm", "grow"])
    if isinstance(v, (VList, VTuple)) and not v.items:
        ops.append("wrap")
    if isinstance(v, (VInt, VFloat)) and not isinstance(v, VBool):
        ops.extend(["numswap", "signflip"])
    if isinstance(v, VStr):
        ops.append("grow")
    ops.append("wrap")
    op = rng.choice(ops)
    if op == "dup":
        i = rng.randrange(len(v.items))
        items = v.items[: i + 1] + (v.items[i],) + v.items[i + 1 :]
        return type(v)(items)
    if op == "del":
        i = rng.randrange(len(v.items))
        return type(v)(v.items[:i] + v.items[i + 1 :])
    if op == "perm":
        items = list(v.items)
        rng.shuffle(items)
        return type(v)(tuple(items))
    if op == "grow":
        if isinstance(v, VStr):
            return VStr(v.value * 10)
        return type(v)(v.items * 10)
    if op == "numswap":
        if isinstance(v, VInt):
            return VFloat(float(v.value))
        if v.value == int(v.value):
            return VInt(int(v.value))
        return VFloat(-v.value)
    if op == "signflip":
        return VInt(-v.value) if isinstance(v, VInt) else VFloat(-v.value)
    return VList((v,))  # wrap


def _seed_mutation(
    profile: InputProfile, corpus: Sequence[ArgTuple], rng: random.Random, n: int
) -> list[ArgTuple]:
    if not corpus:
        return _type_aware_random(profile, rng, n)
    out = []
    for _ in range(n):
        seed = rng.choice(list(corpus))
        if not seed:
            out.append(seed)
            continue
        i = rng.randrange(len(seed))
        mutated = tuple(_mutate_value(v, rng) if j == i else v for j, v in enumerate(seed))
        out.append(mutated)
    return out


def generate(
    profile: InputProfile,
    strategy: StrategyKind,
    seed_corpus: Sequence[ArgTuple],
    rng: random.Random,
    n: int,
    prior_counterexamples: Sequence[ArgTuple] = (),
) -> list[ArgTuple]:
    """Produce up to n inputs for one strategy (replay strategies return
    their material verbatim). Inapplicable families degrade to random."""
    if n < 1:
        return []
    if strategy is StrategyKind.SEED_REPLAY:
        return list(seed_corpus)[:n] + list(prior_counterexamples)[: max(0, n - len(seed_corpus))]
    if strategy is StrategyKind.COUNTEREXAMPLE_REPLAY:
        priors = list(prior_counterexamples)[:n]
        if len(priors) < n:
            priors.extend(_type_aware_random(profile, rng, n - len(priors)))
        return priors
    if strategy is StrategyKind.BOUNDARY_PROBES:
        template = seed_corpus[0] if seed_corpus else tuple(VInt(0) for _ in range(profile.arity))
        probes = _boundary_probes(profile, template)
        if len(probes) < n:
            probes.extend(_type_aware_random(profile, rng, n - len(probes)))
        return probes[:n]
    if strategy is StrategyKind.SEED_MUTATION:
        return _seed_mutation(profile, list(seed_corpus) + list(prior_counterexamples), rng, n)
    return _type_aware_random(profile, rng, n)


# ---------------------------------------------------------------------------
# The check itself.
# ---------------------------------------------------------------------------


class _Session:
    """One check: bookkeeping for budget, dedup, and per-strategy detection."""

    def __init__(self, truth, candidate, config, executor):
        self.truth = truth
        self.candidate = candidate
        self.config = config
        self.executor = executor
        self.tests_run = 0
        self.seen: set[bytes] = set()

    def _call(self, handle: FunctionHandle, args: ArgTuple, *, is_truth: bool) -> Optional[Outcome]:
        try:
            return self.executor.call(handle.source, handle.entry, args, self.config.per_call_limits)
        except ExecTimeoutError:
            if is_truth:
                log.info("truth timed out on %s; input skipped", render_safe_args(args))
                return None
            return Err("Timeout", f"exceeded {self.config.per_call_limits.timeout_ms} ms")
        except SourceLoadError as exc:
            if is_truth:
                raise TruthLoadFailureError(str(exc)) from exc
            raise CandidateLoadError(exc.kind, exc.message) from exc

    def adjudicate(self, args: ArgTuple) -> Optional[Counterexample]:
        """Run both sides on one input; a counterexample if they disagree."""
        self.tests_run += 1
        truth_out = self._call(self.truth, args, is_truth=True)
        if truth_out is None:
            return None
        cand_out = self._call(self.candidate, args, is_truth=False)
        if self.executor.compare(cand_out, truth_out, self.config.float_mode):
            return None
        # Re-verify with two fresh executions before reporting; protects
        # against nondeterministic candidates producing one-off flakes.
        truth_again = self._call(self.truth, args, is_truth=True)
        cand_again = self._call(self.candidate, args, is_truth=False)
        if truth_again is None:
            return None
        if self.executor.compare(cand_again, truth_again, self.config.float_mode):
            log.info("non-reproducible difference on %s ignored", render_safe_args(args))
            return None
        return Counterexample(input=args, candidate_outcome=cand_again, truth_outcome=truth_again)


def render_safe_args(args: ArgTuple) -> str:
    return "(" + ", ".join(render_safe(a) for a in args) + ")"


def _strategy_batches(
    config: OracleConfig,
    profile: InputProfile,
    seed_corpus: Sequence[ArgTuple],
    priors: Sequence[ArgTuple],
    rng: random.Random,
):
    """Yield (strategy, inputs) honoring the total budget. Seed replay runs
    in full; generative strategies split the remaining budget."""
    budget = config.max_tests
    remaining_strategies = list(config.strategies)
    for idx, strategy in enumerate(remaining_strategies):
        if strategy is StrategyKind.SEED_REPLAY:
            inputs = list(seed_corpus) + list(priors)
            yield strategy, inputs
            budget = max(0, budget - len(inputs))
        elif strategy is StrategyKind.COUNTEREXAMPLE_REPLAY:
            inputs = list(priors)[:budget]
            yield strategy, inputs
            budget -= len(inputs)
        elif strategy is StrategyKind.BOUNDARY_PROBES:
            template = seed_corpus[0] if seed_corpus else tuple(VInt(0) for _ in range(profile.arity))
            inputs = _boundary_probes(profile, template)[:budget]
            yield strategy, inputs
            budget -= len(inputs)
        else:
            generative_left = sum(
                1 for s in remaining_strategies[idx:] if s in (StrategyKind.SEED_MUTATION, StrategyKind.TYPE_AWARE_RANDOM)
            )
            share = budget if generative_left <= 1 else -(-budget // generative_left)
            if strategy is StrategyKind.SEED_MUTATION:
                inputs = _seed_mutation(profile, list(seed_corpus) + list(priors), rng, share)
            else:
                inputs = _type_aware_random(profile, rng, share)
            yield strategy, inputs
            budget -= len(inputs)
        if budget <= 0 and strategy is not StrategyKind.SEED_REPLAY:
            pass  # later strategies still get yielded with empty share


def check(
    truth: FunctionHandle,
    candidate: FunctionHandle,
    seed_corpus: Sequence[ArgTuple],
    config: OracleConfig,
    executor,
    prior_counterexamples: Sequence[ArgTuple] = (),
) -> OracleVerdict:
    """Pass, or Fail at the first input where the outcomes differ."""
    profile = infer_profile(seed_corpus if seed_corpus else prior_counterexamples)
    rng = random.Random(config.seed)
    session = _Session(truth, candidate, config, executor)
    seed_index = 0
    for strategy, inputs in _strategy_batches(config, profile, seed_corpus, prior_counterexamples, rng):
        for args in inputs:
            if strategy is not StrategyKind.SEED_REPLAY:
                if session.tests_run >= config.max_tests:
                    return Pass(tests_run=session.tests_run)
                key = encode(VTuple(args))
                if key in session.seen:
                    continue
            session.seen.add(encode(VTuple(args)))
            position = seed_index if strategy is StrategyKind.SEED_REPLAY else None
            if strategy is StrategyKind.SEED_REPLAY:
                seed_index += 1
            delta = session.adjudicate(args)
            if delta is not None:
                return Fail(
                    counterexample=delta,
                    strategy_attribution=strategy,
                    tests_run=session.tests_run,
                    seed_replay_index=position,
                )
    return Pass(tests_run=session.tests_run)


def check_exhaustive(
    truth: FunctionHandle,
    candidate: FunctionHandle,
    seed_corpus: Sequence[ArgTuple],
    config: OracleConfig,
    executor,
    prior_counterexamples: Sequence[ArgTuple] = (),
) -> OracleVerdict:
    """Run every strategy to completion and record which ones detect a
    difference; the returned Fail (if any) is the overall first one."""
    profile = infer_profile(seed_corpus if seed_corpus else prior_counterexamples)
    rng = random.Random(config.seed)
    session = _Session(truth, candidate, config, executor)
    first: Optional[Fail] = None
    detected: set[StrategyKind] = set()
    seed_index = 0
    for strategy, inputs in _strategy_batches(config, profile, seed_corpus, prior_counterexamples, rng):
        found_here = False
        for args in inputs:
            if strategy is not StrategyKind.SEED_REPLAY:
                if session.tests_run >= config.max_tests:
                    break
                key = encode(VTuple(args))
                if key in session.seen:
                    continue
            session.seen.add(encode(VTuple(args)))
            position = seed_index if strategy is StrategyKind.SEED_REPLAY else None
            if strategy is StrategyKind.SEED_REPLAY:
                seed_index += 1
            delta = session.adjudicate(args)
            if delta is not None:
                found_here = True
                if first is None:
                    first = Fail(
                        counterexample=delta,
                        strategy_attribution=strategy,
                        tests_run=session.tests_run,
                        seed_replay_index=position,
                    )
                break  # one detection per strategy is enough for attribution
        if found_here:
            detected.add(strategy)
    if first is None:
        return Pass(tests_run=session.tests_run)
    return Fail(
        counterexample=first.counterexample,
        strategy_attribution=first.strategy_attribution,
        tests_run=session.tests_run,
        seed_replay_index=first.seed_replay_index,
        detected_by=frozenset(detected),
    )


def reverify_counterexample(
    truth: FunctionHandle,
    candidate: FunctionHandle,
    delta: Counterexample,
    config: OracleConfig,
    executor,
) -> bool:
    """Re-run both sides on the counterexample input with the same semantics
    a check uses (candidate timeouts count as behavior, truth timeouts void
    the input) and confirm the recorded difference reproduces."""
    session = _Session(truth, candidate, config, executor)
    again = session.adjudicate(delta.input)
    if again is None:
        return False
    return executor.compare(
        again.truth_outcome, delta.truth_outcome, config.float_mode
    ) and executor.compare(again.candidate_outcome, delta.candidate_outcome, config.float_mode)


@dataclass(frozen=True)
class AttributionReport:
    total_verdicts: int
    total_fails: int
    first_detections: dict[StrategyKind, int]
    unique_detections: dict[StrategyKind, int]


def attribution_report(verdicts: Sequence[OracleVerdict]) -> AttributionReport:
    """Per-strategy counts: who found each Fail first, and who was the only
    detector (requires verdicts from exhaustive checks for the latter)."""
    first: dict[StrategyKind, int] = {}
    unique: dict[StrategyKind, int] = {}
    fails = 0
    for v in verdicts:
        if not isinstance(v, Fail):
            continue
        fails += 1
        first[v.strategy_attribution] = first.get(v.strategy_attribution, 0) + 1
        if v.detected_by is not None and len(v.detected_by) == 1:
            (only,) = v.detected_by
            unique[only] = unique.get(only, 0) + 1
    return AttributionReport(
        total_verdicts=len(verdicts),
        total_fails=fails,
        first_detections=first,
        unique_detections=unique,
    )
