"""Session state machine: initial information, the two-action space, budget
accounting, counterexample feedback, and termination.

Budget semantics:

* ``b_io`` caps the total observable input-output examples, the initial
  examples included (so a task with 10 initial examples under ``b_io=30``
  allows 20 additional queries).
* ``b_oracle`` caps oracle invocations, the final submission included, so
  the agent gets ``b_oracle - 1`` "debugging checks" with feedback; the last
  allowed submission is final.

Oversized query batches are truncated rather than rejected. Candidates that
fail to load consume no oracle budget and are reported as a distinct
observation; three in a row abort the session.
"""

from __future__ import annotations

import enum
import time
import zlib
from dataclasses import dataclass, field
from typing import Optional, Union

from . import oracle as oracle_mod
from .dataset import Task
from .executor import ExecTimeoutError
from .oracle import (
    CandidateLoadError,
    Counterexample,
    Fail,
    FunctionHandle,
    OracleConfig,
    Pass,
)
from .values import ArgTuple, Err, IOExample

MAX_CONSECUTIVE_MALFORMED = 3


class SessionStatus(enum.Enum):
    ACTIVE = "active"
    SUCCEEDED = "succeeded"
    FAILED_BUDGET = "failedBudget"
    FAILED_FINAL = "failedFinal"
    ABORTED = "aborted"


TERMINAL = (
    SessionStatus.SUCCEEDED,
    SessionStatus.FAILED_BUDGET,
    SessionStatus.FAILED_FINAL,
    SessionStatus.ABORTED,
)


class ActionAfterTerminationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Budgets:
    b_io: int
    b_oracle: int

    def __post_init__(self):
        if self.b_oracle < 1:
            raise ValueError("b_oracle must be >= 1")
        if self.b_io < 0:
            raise ValueError("b_io must be >= 0")


DEFAULT_BUDGETS = Budgets(b_io=30, b_oracle=2)


@dataclass(frozen=True)
class QueryBatch:
    inputs: tuple[ArgTuple, ...]

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("query batch must contain at least one input")


@dataclass(frozen=True)
class SubmitCandidate:
    source: str
    entry: str


Action = Union[QueryBatch, SubmitCandidate]


@dataclass(frozen=True)
class Examples:
    examples: tuple[IOExample, ...]
    start_index: int  # 1-based "Result i" number of the first example
    dropped: int = 0


@dataclass(frozen=True)
class OracleFailObs:
    counterexample: Counterexample
    remaining_checks: int


@dataclass(frozen=True)
class OraclePassObs:
    pass


@dataclass(frozen=True)
class BudgetNotice:
    kind: str  # "ioExhausted" | "oracleExhausted"


@dataclass(frozen=True)
class MalformedCandidate:
    diagnostics: str


Observation = Union[Examples, OracleFailObs, OraclePassObs, BudgetNotice, MalformedCandidate]


@dataclass
class TranscriptTurn:
    role: str  # system | harness | agent
    timestamp_ms: int
    body: str
    teacher_prefix: Optional[str] = None


@dataclass(frozen=True)
class SessionMetrics:
    success: bool
    io_used: int
    oracle_used: int
    status: SessionStatus
    pass1: Optional[bool]
    pass2: Optional[bool]
    wall_ms: int


def derive_oracle_seed(task_id: str, seed: int) -> int:
    return zlib.crc32(f"{task_id}:{seed}".encode("utf-8"))


class Session:
    """One agent-vs-task episode. Confined to a single logical thread; each
    concurrent session owns its executor connection and RNG stream."""

    def __init__(
        self,
        task: Task,
        budgets: Budgets,
        executor,
        *,
        seed: int = 0,
        oracle_config: Optional[OracleConfig] = None,
        clock=time.monotonic,
    ):
        if budgets.b_io < len(task.initial_examples):
            raise ValueError("b_io must cover the initial examples")
        self.task = task
        self.budgets = budgets
        self.executor = executor
        self.rng_seed = seed
        self.oracle_config = oracle_config or OracleConfig(seed=derive_oracle_seed(task.id, seed))
        self.observed: list[IOExample] = list(task.initial_examples)
        self.io_used = len(self.observed)
        self.oracle_used = 0
        self.transcript: list[TranscriptTurn] = []
        self.status = SessionStatus.ACTIVE
        self.last_counterexample: Optional[Counterexample] = None
        self.counterexample_inputs: list[ArgTuple] = []
        self.first_submission_pass1: Optional[bool] = None
        self.first_submission_pass2: Optional[bool] = None
        self._consecutive_malformed = 0
        self._clock = clock
        self._started = clock()
        self._finished: Optional[float] = None
        self._truth = FunctionHandle(task.source, task.entry)

    # -- queries over state ---------------------------------------------------

    @property
    def remaining_queries(self) -> int:
        return self.budgets.b_io - self.io_used

    @property
    def remaining_checks(self) -> int:
        return self.budgets.b_oracle - self.oracle_used

    @property
    def remaining_debug_checks(self) -> int:
        # The last allowed oracle call is the final answer, not a debugging
        # check: feedback arrives only when at least one call remains after it.
        return max(0, self.budgets.b_oracle - self.oracle_used - 1)

    def is_terminal(self) -> bool:
        return self.status in TERMINAL

    # -- the protocol step ------------------------------------------------------

    def step(self, action: Action) -> Observation:
        if self.is_terminal():
            raise ActionAfterTerminationError(f"session is {self.status.value}")
        if isinstance(action, QueryBatch):
            return self._query(action)
        return self._submit(action)

    def _query(self, action: QueryBatch) -> Observation:
        remaining = self.remaining_queries
        if remaining <= 0:
            return BudgetNotice(kind="ioExhausted")
        taken = action.inputs[:remaining]
        dropped = len(action.inputs) - len(taken)
        start_index = self.io_used + 1
        results = []
        for args in taken:
            try:
                outcome = self.executor.call(self._truth.source, self._truth.entry, args)
            except ExecTimeoutError:
                outcome = Err("Timeout", "target did not answer within the per-call limit")
            results.append(IOExample(input=args, output=outcome))
        self.observed.extend(results)
        self.io_used += len(results)
        self._consecutive_malformed = 0
        return Examples(examples=tuple(results), start_index=start_index, dropped=dropped)

    def _submit(self, action: SubmitCandidate) -> Observation:
        if self.remaining_checks <= 0:  # unreachable while active; defensive
            return BudgetNotice(kind="oracleExhausted")
        candidate = FunctionHandle(action.source, action.entry)
        corpus = [ex.input for ex in self.observed]
        try:
            verdict = oracle_mod.check(
                self._truth,
                candidate,
                corpus,
                self.oracle_config,
                self.executor,
                prior_counterexamples=tuple(self.counterexample_inputs),
            )
        except CandidateLoadError as exc:
            return self._malformed(f"{exc.kind}: {exc.message}")
        self._consecutive_malformed = 0
        self.oracle_used += 1
        if self.first_submission_pass2 is None:
            self.first_submission_pass2 = isinstance(verdict, Pass)
            self.first_submission_pass1 = self._agrees_with_initial(verdict)
        if isinstance(verdict, Pass):
            self._finish(SessionStatus.SUCCEEDED)
            return OraclePassObs()
        delta = verdict.counterexample
        self.last_counterexample = delta
        self.counterexample_inputs.append(delta.input)
        if self.remaining_checks > 0:
            return OracleFailObs(counterexample=delta, remaining_checks=self.remaining_checks)
        self._finish(SessionStatus.FAILED_FINAL)
        return OracleFailObs(counterexample=delta, remaining_checks=0)

    def _agrees_with_initial(self, verdict) -> bool:
        # Seed replay runs first and covers the initial examples as a prefix,
        # so a failure inside that prefix is exactly "disagrees with E0".
        if isinstance(verdict, Pass):
            return True
        idx = verdict.seed_replay_index
        return idx is None or idx >= len(self.task.initial_examples)

    def _malformed(self, diagnostics: str) -> Observation:
        self._consecutive_malformed += 1
        if self._consecutive_malformed >= MAX_CONSECUTIVE_MALFORMED:
            self._finish(SessionStatus.ABORTED)
        return MalformedCandidate(diagnostics=diagnostics)

    def _finish(self, status: SessionStatus):
        self.status = status
        self._finished = self._clock()

    # -- external finalization --------------------------------------------------

    def abandon(self):
        """The agent gave up (or the driver capped the episode) without a
        passing submission."""
        if not self.is_terminal():
            self._finish(SessionStatus.FAILED_BUDGET)

    def abort(self):
        """Infrastructure failure (endpoint errors, repeated parse failures)."""
        if not self.is_terminal():
            self._finish(SessionStatus.ABORTED)

    # -- transcript ----------------------------------------------------------------

    def add_turn(self, role: str, body: str, *, teacher_prefix: Optional[str] = None, timestamp_ms: int = 0):
        self.transcript.append(
            TranscriptTurn(role=role, timestamp_ms=timestamp_ms, body=body, teacher_prefix=teacher_prefix)
        )

    # -- metrics ------------------------------------------------------------------

    def metrics(self) -> SessionMetrics:
        if not self.is_terminal():
            raise RuntimeError("metrics are defined on terminal sessions only")
        wall = ((self._finished or self._clock()) - self._started) * 1000.0
        return SessionMetrics(
            success=self.status is SessionStatus.SUCCEEDED,
            io_used=self.io_used,
            oracle_used=self.oracle_used,
            status=self.status,
            pass1=self.first_submission_pass1,
            pass2=self.first_submission_pass2,
            wall_ms=int(wall),
        )


def start_session(
    task: Task,
    budgets: Budgets,
    executor,
    *,
    seed: int = 0,
    oracle_config: Optional[OracleConfig] = None,
) -> Session:
    return Session(task, budgets, executor, seed=seed, oracle_config=oracle_config)
