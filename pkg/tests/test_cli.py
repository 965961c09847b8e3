"""CLI surface: eval / oracle / play / dataset, exit codes, determinism."""

from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from synthbench.cli import main
from synthbench.reporting import RESULTS_FILENAME, SUMMARY_FILENAME, TRACES_FILENAME, load_results


def _eval_args(out: Path, *extra: str) -> list[str]:
    return ["eval", "--dataset", "builtin", "--out", str(out), "--deterministic", *extra]


def test_eval_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(_eval_args(out, "--agent", "truth", "--variant", "annotated"))
    assert code == 0
    assert (out / RESULTS_FILENAME).exists()
    assert (out / TRACES_FILENAME).exists()
    assert (out / SUMMARY_FILENAME).exists()
    metrics = load_results(out / RESULTS_FILENAME)
    assert metrics and all(m.success for m in metrics)
    assert "truth" in capsys.readouterr().out


def test_eval_case_study_agent_succeeds_on_uniqueness(tmp_path):
    out = tmp_path / "cs"
    code = main(
        _eval_args(out, "--agent", "scripted:casestudy", "--variant", "anonymized", "--b-io", "30", "--b-oracle", "2")
    )
    assert code == 0
    by_task = {m.task_id: m for m in load_results(out / RESULTS_FILENAME)}
    assert by_task["has_unique_elements"].success
    assert by_task["has_unique_elements"].io_used == 20
    assert by_task["has_unique_elements"].oracle_used == 2


def test_eval_invalid_budget_usage_error(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(_eval_args(tmp_path / "x", "--b-oracle", "0"))
    assert excinfo.value.code == 2


def test_eval_deterministic_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(_eval_args(out, "--agent", "giveup", "--seed", "5")) == 0
    for name in (RESULTS_FILENAME, TRACES_FILENAME, SUMMARY_FILENAME):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_eval_config_file_overrides_flags(tmp_path):
    out = tmp_path / "cfg"
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"agent": "truth", "variant": "annotated"}), encoding="utf-8")
    code = main(_eval_args(out, "--agent", "memorizer", "--config", str(config)))
    assert code == 0
    metrics = load_results(out / RESULTS_FILENAME)
    assert all(m.agent_name == "truth" for m in metrics)


def test_eval_teacher_mode_records_prefixes(tmp_path):
    out = tmp_path / "teach"
    code = main(_eval_args(out, "--agent", "truth", "--teacher-mode"))
    assert code == 0
    lines = (out / TRACES_FILENAME).read_text(encoding="utf-8").splitlines()
    docs = [json.loads(line) for line in lines]
    for doc in docs:
        harness = [t for t in doc["turns"] if t["role"] == "harness"]
        assert harness and all(t.get("teacherPrefix") for t in harness)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


@pytest.fixture()
def oracle_files(tmp_path):
    truth = tmp_path / "truth.py"
    truth.write_text("def solution(lst):\n    return len(lst) == len(set(lst))\n", encoding="utf-8")
    pairwise = tmp_path / "cand.py"
    pairwise.write_text(
        "def solution(lst):\n"
        "    n = len(lst)\n"
        "    for i in range(n):\n"
        "        for j in range(i + 1, n):\n"
        "            if lst[i] == lst[j]:\n"
        "                return False\n"
        "    return True\n",
        encoding="utf-8",
    )
    seeds = tmp_path / "seeds.json"
    from synthbench.builtins import registry
    from synthbench.values import args_to_wire

    seeds.write_text(
        json.dumps([args_to_wire(args) for args in registry()["has_unique_elements"].seeds]),
        encoding="utf-8",
    )
    return truth, pairwise, seeds


def test_oracle_identical_files_pass(oracle_files, capsys):
    truth, _, seeds = oracle_files
    code = main(["oracle", str(truth), str(truth), "--seeds", str(seeds)])
    assert code == 0
    assert capsys.readouterr().out.startswith("Pass")


def test_oracle_case_study_pair_fails(oracle_files, capsys):
    truth, pairwise, seeds = oracle_files
    code = main(["oracle", str(truth), str(pairwise), "--seeds", str(seeds)])
    assert code == 1
    out = capsys.readouterr().out
    assert out.startswith("Fail")
    assert "[5, 6], [5, 6]" in out
    assert "TypeError" in out


def test_oracle_unparseable_candidate_exit_2(oracle_files, tmp_path, capsys):
    truth, _, seeds = oracle_files
    bad = tmp_path / "bad.py"
    bad.write_text("def solution(:\n", encoding="utf-8")
    code = main(["oracle", str(truth), str(bad), "--seeds", str(seeds), "--entry", "solution"])
    assert code == 2


def test_oracle_requires_seed_source(oracle_files):
    truth, pairwise, _ = oracle_files
    assert main(["oracle", str(truth), str(pairwise)]) == 2


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


def test_dataset_stats(capsys):
    assert main(["dataset", "stats", "builtin"]) == 0
    out = capsys.readouterr().out
    assert "Functions" in out and "Min" in out and "Max" in out and "Avg" in out
    assert "builtin" in out


def test_dataset_validate_builtin(capsys):
    assert main(["dataset", "validate", "builtin", "--variant", "annotated"]) == 0


def test_dataset_validate_corrupted_exit_nonzero(tmp_path, capsys):
    from synthbench.dataset import builtin_tasks, save_dataset

    save_dataset(builtin_tasks()[:3], tmp_path, name="mini")
    victim = next(tmp_path.glob("annotated/*.json"))
    doc = json.loads(victim.read_text(encoding="utf-8"))
    doc["initialExamples"][0]["output"] = ["ok", ["int", "424242"]]
    victim.write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")
    # repair the manifest so only validation (not the checksum) trips
    from synthbench.dataset import load_task, save_dataset as resave

    tasks = [load_task(p) for p in sorted(tmp_path.glob("annotated/*.json"))]
    resave(tasks, tmp_path, name="mini")
    code = main(["dataset", "validate", str(tmp_path)])
    assert code == 1


def test_dataset_anonymize_idempotent_checksums(tmp_path, capsys):
    from synthbench.dataset import builtin_tasks, save_dataset

    src = tmp_path / "src"
    save_dataset(builtin_tasks()[:4], src, name="mini")
    out1, out2 = tmp_path / "anon1", tmp_path / "anon2"
    assert main(["dataset", "anonymize", str(src), "--out", str(out1)]) == 0
    assert main(["dataset", "anonymize", str(src), "--out", str(out2)]) == 0
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


# ---------------------------------------------------------------------------
# play
# ---------------------------------------------------------------------------


def test_play_scripted_session(tmp_path):
    from synthbench.cli import cmd_play
    from synthbench.dataset import ANONYMIZED, get_builtin_task
    from synthbench.protocol import Budgets

    task = get_builtin_task("has_unique_elements", ANONYMIZED)
    script = io.StringIO(
        "q [1, 2, 2]\n"
        "submit\n"
        "def solution(lst):\n"
        "    return len(lst) == len(set(lst))\n"
        "END\n"
    )
    out = io.StringIO()
    code = cmd_play(task, Budgets(30, 2), in_stream=script, stdout=out, out=str(tmp_path))
    assert code == 0
    text = out.getvalue()
    assert "Result 11: False" in text
    assert "session over: succeeded" in text
    assert (tmp_path / TRACES_FILENAME).exists()


def test_play_counterexample_format():
    from synthbench.cli import cmd_play
    from synthbench.dataset import ANONYMIZED, get_builtin_task
    from synthbench.protocol import Budgets

    task = get_builtin_task("has_unique_elements", ANONYMIZED)
    script = io.StringIO(
        "submit\n"
        "def solution(lst):\n"
        "    n = len(lst)\n"
        "    for i in range(n):\n"
        "        for j in range(i + 1, n):\n"
        "            if lst[i] == lst[j]:\n"
        "                return False\n"
        "    return True\n"
        "END\n"
        "quit\n"
    )
    out = io.StringIO()
    code = cmd_play(task, Budgets(30, 2), in_stream=script, stdout=out)
    assert code == 0
    text = out.getvalue()
    assert "Failed input:" in text
    assert "'Error' != 'No Error'" in text


def test_play_query_decrements_counter():
    from synthbench.cli import cmd_play
    from synthbench.dataset import ANONYMIZED, get_builtin_task
    from synthbench.protocol import Budgets

    task = get_builtin_task("has_unique_elements", ANONYMIZED)
    script = io.StringIO("q [1, 2, 3]\nquit\n")
    out = io.StringIO()
    cmd_play(task, Budgets(30, 2), in_stream=script, stdout=out)
    text = out.getvalue()
    assert "[20 invocations left" in text
    assert "[19 invocations left" in text
