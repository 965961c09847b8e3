"""Prompt rendering, the response grammar, agent behaviors, and the loop."""

from __future__ import annotations

import pytest

from synthbench.agents import (
    AgentTurnInput,
    BudgetProbeAgent,
    ChatAgent,
    ChatClient,
    ChatEndpointConfig,
    ChatEndpointError,
    MemorizerAgent,
    ResponseParseError,
    ScriptedAgent,
    TruthTellerAgent,
    case_study_responses,
    invocation_line,
    make_agent_factory,
    memorizer_source,
    parse_response,
    render_feedback_prompt,
    render_initial_prompt,
    render_teacher_prefix,
    run_agent_loop,
)
from synthbench.dataset import ANONYMIZED, builtin_tasks, get_builtin_task
from synthbench.protocol import (
    Budgets,
    Examples,
    QueryBatch,
    Session,
    SessionStatus,
    SubmitCandidate,
)
from synthbench.values import Err, Ok, VInt, from_python, render_literal, structural_eq


def _uniq_task():
    return get_builtin_task("has_unique_elements", ANONYMIZED)


# ---------------------------------------------------------------------------
# Rendering.
# ---------------------------------------------------------------------------


def test_initial_prompt_canonical_sentences():
    prompt = render_initial_prompt(_uniq_task(), Budgets(30, 2))
    assert "You are a software engineer tasked with implementing a blackbox Python function solution." in prompt
    assert "Your primary goal is to get the function implementation exactly right." in prompt
    assert "You can generate up to 20 additional function invocations" in prompt
    assert "You have only 1 debugging check total" in prompt
    assert "print('Result 1: ' + str(solution([1, 2, 3, 4, 5])))" in prompt
    assert "Result 1: True" in prompt and "Result 10: True" in prompt


def test_initial_prompt_is_deterministic():
    task = _uniq_task()
    assert render_initial_prompt(task, Budgets(30, 2)) == render_initial_prompt(task, Budgets(30, 2))


def test_initial_prompt_annotated_uses_entry_name():
    task = get_builtin_task("has_unique_elements")
    prompt = render_initial_prompt(task, Budgets(30, 2))
    assert "str(has_unique_elements([1, 2, 3, 4, 5]))" in prompt


def test_error_outcome_marker_in_outputs_block():
    task = get_builtin_task("max_of_list")
    prompt = render_initial_prompt(task, Budgets(30, 2))
    assert "Result 1: Error(ValueError)" in prompt


def test_examples_feedback_continues_numbering(ref_executor):
    session = Session(_uniq_task(), Budgets(30, 2), ref_executor)
    obs = session.step(QueryBatch(inputs=((from_python([7, 7]),),)))
    text = render_feedback_prompt(obs, entry="solution", remaining_queries=19, remaining_checks=1)
    assert "Result 11: False" in text
    assert "You have 19 additional function invocations and 1 debugging check left." in text


def test_fail_feedback_error_vs_no_error(ref_executor):
    session = Session(_uniq_task(), Budgets(30, 2), ref_executor)
    pairwise = case_study_responses("solution")[1]
    action = parse_response(pairwise, entry="solution", arity=1)
    obs = session.step(action)
    text = render_feedback_prompt(obs, entry="solution", remaining_queries=20, remaining_checks=0)
    assert "Failed input: [1, 2, 3, 4, [5, 6], [5, 6]]" in text
    assert "Ground Truth Function != Output From Generated Code:" in text
    assert "'Error' != 'No Error'" in text
    assert "NO debugging checks left" in text


def test_fail_feedback_value_pair_rendering():
    from synthbench.oracle import Counterexample
    from synthbench.protocol import OracleFailObs

    obs = OracleFailObs(
        counterexample=Counterexample(
            input=(from_python([1]),),
            candidate_outcome=Ok(VInt(3)),
            truth_outcome=Ok(VInt(4)),
        ),
        remaining_checks=1,
    )
    text = render_feedback_prompt(obs, entry="solution", remaining_queries=5, remaining_checks=1)
    assert "'4' != '3'" in text


def test_io_exhausted_feedback_offers_only_implementation():
    from synthbench.protocol import BudgetNotice

    text = render_feedback_prompt(
        BudgetNotice(kind="ioExhausted"), entry="solution", remaining_queries=0, remaining_checks=1
    )
    assert "no additional function invocations left" in text
    assert "only remaining option is to generate an implementation of solution" in text


def test_teacher_prefix_embeds_source():
    prefix = render_teacher_prefix("def f(x):\n    return x\n")
    assert "def f(x):" in prefix
    assert "query the function on informative inputs" in prefix


# ---------------------------------------------------------------------------
# Response grammar.
# ---------------------------------------------------------------------------


def test_parse_case_study_first_turn():
    action = parse_response(case_study_responses("solution")[0], entry="solution", arity=1)
    assert isinstance(action, QueryBatch)
    assert len(action.inputs) == 10
    assert render_literal(action.inputs[0][0]) == "[-1, -2, 0, 1]"
    assert render_literal(action.inputs[9][0]) == "[None, 0, 'None']"


def test_parse_case_study_final_turn():
    action = parse_response(case_study_responses("solution")[2], entry="solution", arity=1)
    assert isinstance(action, SubmitCandidate)
    assert "len(lst) == len(set(lst))" in action.source


def test_parse_free_text_fails():
    with pytest.raises(ResponseParseError):
        parse_response("I think the function checks for uniqueness.", entry="solution", arity=1)


def test_parse_implementation_wins_over_invocations():
    text = (
        "INVOCATIONS:\nprint('Result 11: ' + str(solution([1])))\n\n"
        "IMPLEMENTATION:\n```python\ndef solution(lst):\n    return True\n```\n"
    )
    action = parse_response(text, entry="solution", arity=1)
    assert isinstance(action, SubmitCandidate)


def test_parse_markdown_headers_case_insensitive():
    text = "### **implementation**\n```py\ndef solution(x):\n    return x\n```\n"
    action = parse_response(text, entry="solution", arity=1)
    assert isinstance(action, SubmitCandidate)


def test_parse_skips_wrong_arity_lines():
    text = (
        "INVOCATIONS:\n"
        "print('Result 11: ' + str(solution([1], [2])))\n"
        "print('Result 12: ' + str(solution([3])))\n"
    )
    action = parse_response(text, entry="solution", arity=1)
    assert isinstance(action, QueryBatch)
    assert len(action.inputs) == 1


def test_parse_implementation_without_entry_falls_back():
    text = (
        "IMPLEMENTATION:\n```python\ndef helper(x):\n    return x\n```\n\n"
        "INVOCATIONS:\nprint('Result 11: ' + str(solution([5])))\n"
    )
    action = parse_response(text, entry="solution", arity=1)
    assert isinstance(action, QueryBatch)


def test_parse_strings_containing_parens():
    text = "INVOCATIONS:\nprint('Result 11: ' + str(solution([')(', '('])))\n"
    action = parse_response(text, entry="solution", arity=1)
    assert isinstance(action, QueryBatch)
    assert render_literal(action.inputs[0][0]) == "[')(', '(']"


def test_render_parse_closure(ref_executor):
    # Whatever the harness renders as invocation lines must re-parse to the
    # structurally identical inputs.
    for task in builtin_tasks()[:8]:
        lines = "\n".join(
            invocation_line(i + 1, task.entry, ex.input)
            for i, ex in enumerate(task.initial_examples)
        )
        action = parse_response("INVOCATIONS:\n" + lines, entry=task.entry, arity=task.arity)
        assert isinstance(action, QueryBatch)
        assert len(action.inputs) == len(task.initial_examples)
        for parsed, original in zip(action.inputs, task.initial_examples):
            assert all(structural_eq(p, o) for p, o in zip(parsed, original.input))


# ---------------------------------------------------------------------------
# Memorizer.
# ---------------------------------------------------------------------------


def test_memorizer_reproduces_every_observed_example(ref_executor):
    for task in builtin_tasks()[:10]:
        rows = [(ex.input, ex.output) for ex in task.initial_examples]
        source = memorizer_source(task.entry, rows)
        for ex in task.initial_examples:
            out = ref_executor.call(source, task.entry, ex.input)
            assert ref_executor.compare(out, ex.output), (task.id, ex)


def test_memorizer_fallback_is_most_frequent_output(ref_executor):
    rows = [
        ((from_python([1]),), Ok(VInt(7))),
        ((from_python([2]),), Ok(VInt(7))),
        ((from_python([3]),), Ok(VInt(9))),
    ]
    source = memorizer_source("f", rows)
    out = ref_executor.call(source, "f", (from_python([999]),))
    assert out == Ok(VInt(7))


def test_memorizer_reproduces_error_outcomes(ref_executor):
    rows = [((from_python([]),), Err("ValueError", "boom"))]
    source = memorizer_source("f", rows)
    out = ref_executor.call(source, "f", (from_python([]),))
    assert isinstance(out, Err) and out.kind == "ValueError"


def test_memorizer_agent_session_fails_oracle(ref_executor):
    task = get_builtin_task("is_sorted")
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(MemorizerAgent(), session, clock_ms=lambda: 0)
    assert session.status in (SessionStatus.FAILED_FINAL, SessionStatus.SUCCEEDED)
    assert session.first_submission_pass1 is True
    assert session.first_submission_pass2 is False


# ---------------------------------------------------------------------------
# Loop behavior.
# ---------------------------------------------------------------------------


def test_scripted_replay_succeeds(ref_executor):
    task = _uniq_task()
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(ScriptedAgent("cs", case_study_responses(task.entry)), session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.SUCCEEDED
    roles = [t.role for t in session.transcript]
    assert roles[0] == "harness" and "agent" in roles


def test_truth_teller_succeeds_first_try(ref_executor):
    task = get_builtin_task("reverse_string")
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(TruthTellerAgent(task), session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.SUCCEEDED
    assert session.oracle_used == 1


def test_exhausted_script_abandons(ref_executor):
    task = _uniq_task()
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(ScriptedAgent("empty", []), session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.FAILED_BUDGET


def test_three_parse_failures_abort(ref_executor):
    task = _uniq_task()
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(ScriptedAgent("noise", ["hmm", "not sure", "no idea"]), session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.ABORTED
    assert session.oracle_used == 0


def test_teacher_mode_prefixes_harness_turns(ref_executor):
    task = _uniq_task()
    session = Session(task, Budgets(30, 2), ref_executor)
    source = "def solution(lst):\n    return len(lst) == len(set(lst))\n"
    run_agent_loop(
        ScriptedAgent("cs", case_study_responses(task.entry)),
        session,
        teacher_source=source,
        clock_ms=lambda: 0,
    )
    harness_turns = [t for t in session.transcript if t.role == "harness"]
    assert harness_turns and all(t.teacher_prefix for t in harness_turns)
    assert all(source.rstrip("\n") in t.teacher_prefix for t in harness_turns)
    # body stays byte-identical to the non-teacher initial prompt
    assert harness_turns[0].body == render_initial_prompt(task, Budgets(30, 2))
    agent_turns = [t for t in session.transcript if t.role == "agent"]
    assert all(t.teacher_prefix is None for t in agent_turns)


def test_budget_probe_threshold_behavior(ref_executor):
    task = get_builtin_task("sum_list")
    agent = BudgetProbeAgent(task, io_need=15, tries_need=1)
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(agent, session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.SUCCEEDED
    assert session.io_used >= 15

    agent = BudgetProbeAgent(task, io_need=15, tries_need=1)
    session = Session(task, Budgets(12, 2), ref_executor)
    run_agent_loop(agent, session, clock_ms=lambda: 0)
    assert session.status is not SessionStatus.SUCCEEDED


# ---------------------------------------------------------------------------
# Chat client.
# ---------------------------------------------------------------------------


def _stub_transport(replies):
    calls = {"n": 0, "payloads": []}

    def transport(url, headers, payload):
        calls["payloads"].append(payload)
        reply = replies[min(calls["n"], len(replies) - 1)]
        calls["n"] += 1
        if isinstance(reply, Exception):
            raise reply
        return {"choices": [{"message": {"content": reply}}]}

    return transport, calls


def test_chat_agent_round_trip(ref_executor):
    task = _uniq_task()
    replies = case_study_responses(task.entry)
    transport, calls = _stub_transport(replies)
    config = ChatEndpointConfig(base_url="http://example.test/v1", model="stub", max_retries=0)
    agent = ChatAgent(ChatClient(config, transport=transport))
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(agent, session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.SUCCEEDED
    # transcript holds every byte exchanged with the endpoint
    sent_prompts = [m["content"] for p in calls["payloads"] for m in p["messages"] if m["role"] == "user"]
    recorded = [t.body for t in session.transcript if t.role == "harness"]
    assert set(recorded) >= set(sent_prompts[:1])
    agent_bodies = [t.body for t in session.transcript if t.role == "agent"]
    assert agent_bodies == replies


def test_chat_client_retries_then_fails(monkeypatch):
    transport, calls = _stub_transport([RuntimeError("boom")])
    config = ChatEndpointConfig(
        base_url="http://example.test/v1", model="stub", max_retries=2, backoff_s=0.001
    )
    client = ChatClient(config, transport=transport)
    with pytest.raises(ChatEndpointError):
        client.complete([{"role": "user", "content": "hi"}])
    assert calls["n"] == 3


def test_chat_endpoint_failure_aborts_session(ref_executor):
    task = _uniq_task()
    transport, _ = _stub_transport([RuntimeError("down")])
    config = ChatEndpointConfig(
        base_url="http://example.test/v1", model="stub", max_retries=1, backoff_s=0.001
    )
    agent = ChatAgent(ChatClient(config, transport=transport))
    session = Session(task, Budgets(30, 2), ref_executor)
    run_agent_loop(agent, session, clock_ms=lambda: 0)
    assert session.status is SessionStatus.ABORTED


def test_api_key_is_referenced_by_name_only():
    config = ChatEndpointConfig(base_url="http://x", model="m", api_key_ref="MY_KEY_VAR")
    assert config.api_key_ref == "MY_KEY_VAR"


def test_agent_factory_specs():
    task = get_builtin_task("sum_list")
    assert make_agent_factory("memorizer")(task).name == "memorizer"
    assert make_agent_factory("truth")(task).name == "truth"
    assert make_agent_factory("giveup")(task).name == "giveup"
    assert make_agent_factory("scripted:casestudy")(task).name == "scripted:casestudy"
    with pytest.raises(ValueError):
        make_agent_factory("nonsense")
