"""Aggregation arithmetic, persistence round trips, teacher traces."""

from __future__ import annotations

import random

import pytest

from synthbench.agents import ScriptedAgent, case_study_responses, run_agent_loop
from synthbench.dataset import ANONYMIZED, get_builtin_task
from synthbench.protocol import Budgets, Session
from synthbench.reporting import (
    AggregateRow,
    RunMetrics,
    TeacherTraceError,
    TraceRecord,
    TraceTurn,
    aggregate,
    export_results,
    export_traces,
    load_results,
    load_traces,
    metrics_from_doc,
    metrics_from_session,
    metrics_to_doc,
    record_session,
    record_teacher_session,
    render_summary,
    trace_from_doc,
    trace_to_doc,
)


def _metric(**kwargs) -> RunMetrics:
    base = dict(
        task_id="t",
        variant="annotated",
        agent_name="a",
        success=False,
        io_used=30,
        oracle_used=2,
        wall_ms=10,
        seed=0,
        pass1=False,
        pass2=False,
        status="failedFinal",
    )
    base.update(kwargs)
    return RunMetrics(**base)


def test_aggregate_arithmetic():
    metrics = [
        _metric(success=True, io_used=15, oracle_used=1, pass1=True, pass2=True, status="succeeded"),
        _metric(success=False, io_used=30, oracle_used=2),
    ]
    report = aggregate(metrics)
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row.success_rate == 50.0
    assert row.mean_io == 22.5
    assert row.mean_oracle == 1.5
    assert row.pass1_rate == 50.0 and row.pass2_rate == 50.0 and row.delta == 0.0


def test_aggregate_empty_is_safe():
    report = aggregate([])
    assert report.rows == ()
    assert "(no sessions)" in render_summary(report)


def test_aggregate_permutation_invariant():
    metrics = [
        _metric(task_id=f"t{i}", success=i % 3 == 0, pass1=i % 2 == 0, status="failedFinal")
        for i in range(12)
    ]
    shuffled = metrics[:]
    random.Random(7).shuffle(shuffled)
    assert aggregate(metrics) == aggregate(shuffled)


def test_aggregate_strict_mode_drops_aborted():
    metrics = [
        _metric(task_id="ok", success=True, pass1=True, pass2=True, status="succeeded"),
        _metric(task_id="gone", status="aborted"),
    ]
    default = aggregate(metrics).rows[0]
    strict = aggregate(metrics, exclude_aborted=True).rows[0]
    assert default.sessions == 2 and default.success_rate == 50.0
    assert strict.sessions == 1 and strict.success_rate == 100.0


def test_pass2_implies_pass1_enforced():
    with pytest.raises(ValueError):
        _metric(pass1=False, pass2=True)


def test_delta_nonnegative_by_construction():
    metrics = [
        _metric(task_id=f"t{i}", pass1=(i % 2 == 0), pass2=False, status="failedFinal")
        for i in range(10)
    ]
    row = aggregate(metrics).rows[0]
    assert row.delta >= 0


def test_metrics_doc_round_trip():
    m = _metric(success=True, pass1=True, pass2=True, status="succeeded")
    assert metrics_from_doc(metrics_to_doc(m)) == m


def test_results_file_round_trip(tmp_path):
    metrics = [_metric(task_id=f"t{i}") for i in range(5)]
    path = tmp_path / "results.jsonl"
    export_results(metrics, path)
    assert load_results(path) == metrics


# ---------------------------------------------------------------------------
# Traces.
# ---------------------------------------------------------------------------


def _finished_session(ref_executor, teacher_source=None) -> Session:
    task = get_builtin_task("has_unique_elements", ANONYMIZED)
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(
        ScriptedAgent("cs", case_study_responses(task.entry)),
        session,
        teacher_source=teacher_source,
        clock_ms=lambda: 0,
    )
    return session


def test_trace_round_trip(tmp_path, ref_executor):
    session = _finished_session(ref_executor)
    record = record_session(session, "s1")
    assert record.outcome == "succeeded"
    path = tmp_path / "traces.jsonl"
    export_traces([record], path)
    assert load_traces(path) == [record]


def test_trace_bulk_round_trip(tmp_path):
    records = [
        TraceRecord(
            session_id=f"s{i}",
            outcome="succeeded",
            turns=(
                TraceTurn(index=0, role="harness", body=f"prompt {i} with unicode ✓\n"),
                TraceTurn(index=1, role="agent", body="answer\nwith\nnewlines"),
            ),
        )
        for i in range(1000)
    ]
    path = tmp_path / "bulk.jsonl"
    export_traces(records, path)
    loaded = load_traces(path)
    assert loaded == records
    assert len(path.read_text(encoding="utf-8").splitlines()) == 1000


def test_trace_doc_keeps_prefix_and_body_separate():
    record = TraceRecord(
        session_id="s",
        outcome="succeeded",
        turns=(TraceTurn(index=0, role="harness", body="visible", teacher_prefix="secret teacher text"),),
    )
    doc = trace_to_doc(record)
    assert doc["turns"][0]["teacherPrefix"] == "secret teacher text"
    assert trace_from_doc(doc) == record
    # prefix + body reconstructs exactly what the teacher endpoint received
    turn = record.turns[0]
    assert (turn.teacher_prefix + turn.body) == "secret teacher textvisible"


def test_body_must_not_embed_prefix():
    with pytest.raises(ValueError):
        TraceRecord(
            session_id="s",
            outcome="succeeded",
            turns=(TraceTurn(index=0, role="harness", body="P and more", teacher_prefix="P"),),
        )


def test_prefix_only_on_harness_turns():
    with pytest.raises(ValueError):
        TraceRecord(
            session_id="s",
            outcome="succeeded",
            turns=(TraceTurn(index=0, role="agent", body="x", teacher_prefix="P"),),
        )


def test_record_teacher_session(ref_executor):
    source = "def solution(lst):\n    return len(lst) == len(set(lst))\n"
    session = _finished_session(ref_executor, teacher_source=source)
    record = record_teacher_session(session, source, session_id="teach1")
    harness = [t for t in record.turns if t.role == "harness"]
    assert harness and all(t.teacher_prefix for t in harness)
    assert source.rstrip("\n") in harness[0].teacher_prefix


def test_record_teacher_session_rejects_plain_sessions(ref_executor):
    session = _finished_session(ref_executor)
    with pytest.raises(TeacherTraceError):
        record_teacher_session(session, "def solution(lst):\n    return 1\n", session_id="x")


def test_record_teacher_session_refuses_leaked_secret(ref_executor, monkeypatch):
    secret = "sk-super-secret-value-123"
    monkeypatch.setenv("FAKE_KEY_VAR", secret)
    source = "def solution(lst):\n    return len(lst) == len(set(lst))\n"
    session = _finished_session(ref_executor, teacher_source=source)
    session.add_turn("agent", f"here is a secret: {secret}")
    with pytest.raises(TeacherTraceError):
        record_teacher_session(
            session, source, session_id="leaky", secret_env_names=["FAKE_KEY_VAR"]
        )


def test_non_teacher_sessions_have_no_prefixes(ref_executor):
    session = _finished_session(ref_executor)
    record = record_session(session, "plain")
    assert all(t.teacher_prefix is None for t in record.turns)
