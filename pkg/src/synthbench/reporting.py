"""Metrics aggregation, results persistence, and SFT-ready trace export.

Per-session metrics keep the first-submission pass1/pass2 pair: pass1 is
"agreed with every initial example", pass2 is "passed the oracle". Because
seed replay runs first inside every check, pass2 implies pass1, and the gap
between their rates measures how badly the initial examples under-specify
the target.

Trace records store the teacher prefix (when present) separately from the
student-visible body, so a downstream trainer can mask prefix tokens; the
boundary is a field split, not a token count, keeping the format
model-agnostic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .protocol import Session, SessionStatus

RESULTS_FILENAME = "results.jsonl"
TRACES_FILENAME = "traces.jsonl"
SUMMARY_FILENAME = "summary.txt"


class TeacherTraceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunMetrics:
    task_id: str
    variant: str
    agent_name: str
    success: bool
    io_used: int
    oracle_used: int
    wall_ms: int
    seed: int
    pass1: bool
    pass2: bool
    status: str

    def __post_init__(self):
        if self.pass2 and not self.pass1:
            raise ValueError("pass2 implies pass1 (seed replay runs first)")
        if self.success and self.oracle_used < 1:
            raise ValueError("success requires at least one oracle call")


def metrics_from_session(
    session: Session, *, task_id: str, variant: str, agent_name: str, seed: int, wall_ms: Optional[int] = None
) -> RunMetrics:
    m = session.metrics()
    return RunMetrics(
        task_id=task_id,
        variant=variant,
        agent_name=agent_name,
        success=m.success,
        io_used=m.io_used,
        oracle_used=m.oracle_used,
        wall_ms=m.wall_ms if wall_ms is None else wall_ms,
        seed=seed,
        pass1=bool(m.pass1),
        pass2=bool(m.pass2),
        status=m.status.value,
    )


def metrics_to_doc(m: RunMetrics) -> dict:
    return {
        "taskId": m.task_id,
        "variant": m.variant,
        "agent": m.agent_name,
        "success": m.success,
        "ioUsed": m.io_used,
        "oracleUsed": m.oracle_used,
        "wallMs": m.wall_ms,
        "seed": m.seed,
        "pass1": m.pass1,
        "pass2": m.pass2,
        "status": m.status,
    }


def metrics_from_doc(doc: dict) -> RunMetrics:
    return RunMetrics(
        task_id=doc["taskId"],
        variant=doc["variant"],
        agent_name=doc["agent"],
        success=bool(doc["success"]),
        io_used=int(doc["ioUsed"]),
        oracle_used=int(doc["oracleUsed"]),
        wall_ms=int(doc["wallMs"]),
        seed=int(doc["seed"]),
        pass1=bool(doc["pass1"]),
        pass2=bool(doc["pass2"]),
        status=doc["status"],
    )


@dataclass(frozen=True)
class AggregateRow:
    agent_name: str
    variant: str
    sessions: int
    successes: int
    success_rate: float  # percent
    mean_io: float
    mean_oracle: float
    pass1_rate: float
    pass2_rate: float
    delta: float  # pass1_rate - pass2_rate


@dataclass(frozen=True)
class AggregateReport:
    rows: tuple[AggregateRow, ...]


def aggregate(metrics: Sequence[RunMetrics], *, exclude_aborted: bool = False) -> AggregateReport:
    """Means over all sessions; failures contribute their full usage. With
    ``exclude_aborted`` (strict mode off by default), aborted sessions leave
    the denominators entirely."""
    if exclude_aborted:
        metrics = [m for m in metrics if m.status != SessionStatus.ABORTED.value]
    groups: dict[tuple[str, str], list[RunMetrics]] = {}
    for m in metrics:
        groups.setdefault((m.agent_name, m.variant), []).append(m)
    rows = []
    for (agent_name, variant) in sorted(groups):
        ms = groups[(agent_name, variant)]
        n = len(ms)
        successes = sum(1 for m in ms if m.success)
        pass1 = sum(1 for m in ms if m.pass1)
        pass2 = sum(1 for m in ms if m.pass2)
        rows.append(
            AggregateRow(
                agent_name=agent_name,
                variant=variant,
                sessions=n,
                successes=successes,
                success_rate=round(100.0 * successes / n, 1),
                mean_io=round(sum(m.io_used for m in ms) / n, 1),
                mean_oracle=round(sum(m.oracle_used for m in ms) / n, 1),
                pass1_rate=round(100.0 * pass1 / n, 1),
                pass2_rate=round(100.0 * pass2 / n, 1),
                delta=round(100.0 * (pass1 - pass2) / n, 1),
            )
        )
    return AggregateReport(rows=tuple(rows))


def render_summary(report: AggregateReport) -> str:
    header = (
        f"{'Agent':24} {'Variant':10} {'N':>4} {'Success%':>8} {'#I/O':>6} "
        f"{'#Oracle':>8} {'Pass1%':>7} {'Pass2%':>7} {'Delta':>6}"
    )
    lines = [header, "-" * len(header)]
    for r in report.rows:
        lines.append(
            f"{r.agent_name:24} {r.variant:10} {r.sessions:>4} {r.success_rate:>8.1f} "
            f"{r.mean_io:>6.1f} {r.mean_oracle:>8.1f} {r.pass1_rate:>7.1f} "
            f"{r.pass2_rate:>7.1f} {r.delta:>6.1f}"
        )
    if not report.rows:
        lines.append("(no sessions)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Trace records.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceTurn:
    index: int
    role: str  # system | harness | agent
    body: str
    teacher_prefix: Optional[str] = None


@dataclass(frozen=True)
class TraceRecord:
    session_id: str
    turns: tuple[TraceTurn, ...]
    outcome: str  # terminal session status

    def __post_init__(self):
        for turn in self.turns:
            if turn.teacher_prefix is not None and turn.role != "harness":
                raise ValueError("teacher prefix is only defined on harness turns")
            if turn.teacher_prefix and turn.teacher_prefix in turn.body:
                raise ValueError("body must not embed the teacher prefix")


def record_session(session: Session, session_id: str) -> TraceRecord:
    turns = tuple(
        TraceTurn(index=i, role=t.role, body=t.body, teacher_prefix=t.teacher_prefix)
        for i, t in enumerate(session.transcript)
    )
    return TraceRecord(session_id=session_id, turns=turns, outcome=session.status.value)


def record_teacher_session(
    session: Session, task_source: str, *, session_id: str, secret_env_names: Sequence[str] = ()
) -> TraceRecord:
    """Trace of a teacher-mode session: every harness turn must carry a
    prefix embedding the target source; the body stays student-visible.

    Refuses to emit a record if a configured secret value leaked into any
    turn (the key env var is referenced by NAME everywhere else, so a hit
    here means something went badly wrong upstream).
    """
    record = record_session(session, session_id)
    harness_turns = [t for t in record.turns if t.role == "harness"]
    if not harness_turns or any(not t.teacher_prefix for t in harness_turns):
        raise TeacherTraceError("teacher sessions must carry a prefix on every harness turn")
    if not any(task_source.rstrip("\n") in (t.teacher_prefix or "") for t in harness_turns):
        raise TeacherTraceError("teacher prefix does not embed the target source")
    for name in secret_env_names:
        secret = os.environ.get(name)
        if not secret:
            continue
        for turn in record.turns:
            if secret in turn.body or secret in (turn.teacher_prefix or ""):
                raise TeacherTraceError(f"secret {name} leaked into the transcript")
    return record


def trace_to_doc(record: TraceRecord) -> dict:
    return {
        "sessionId": record.session_id,
        "outcome": record.outcome,
        "turns": [
            {
                "index": t.index,
                "role": t.role,
                "body": t.body,
                **({"teacherPrefix": t.teacher_prefix} if t.teacher_prefix is not None else {}),
            }
            for t in record.turns
        ],
    }


def trace_from_doc(doc: dict) -> TraceRecord:
    return TraceRecord(
        session_id=doc["sessionId"],
        outcome=doc["outcome"],
        turns=tuple(
            TraceTurn(
                index=int(t["index"]),
                role=t["role"],
                body=t["body"],
                teacher_prefix=t.get("teacherPrefix"),
            )
            for t in doc["turns"]
        ),
    )


def _dump_line(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def export_traces(records: Iterable[TraceRecord], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as sink:
        for record in records:
            sink.write(_dump_line(trace_to_doc(record)) + "\n")


def load_traces(path: Path) -> list[TraceRecord]:
    out = []
    with Path(path).open("r", encoding="utf-8") as src:
        for line in src:
            if line.strip():
                out.append(trace_from_doc(json.loads(line)))
    return out


def export_results(metrics: Iterable[RunMetrics], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as sink:
        for m in metrics:
            sink.write(_dump_line(metrics_to_doc(m)) + "\n")


def load_results(path: Path) -> list[RunMetrics]:
    out = []
    with Path(path).open("r", encoding="utf-8") as src:
        for line in src:
            if line.strip():
                out.append(metrics_from_doc(json.loads(line)))
    return out
