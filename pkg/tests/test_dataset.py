"""Task files, manifests, validation, anonymization, stats."""

from __future__ import annotations

import json
from dataclasses import replace

import pytest

from synthbench.dataset import (
    ANNOTATED,
    ANONYMIZED,
    AnonymizeError,
    ManifestMismatchError,
    Task,
    TaskParseError,
    anonymize_task,
    builtin_tasks,
    dataset_stats,
    get_builtin_task,
    load_dataset,
    load_manifest,
    load_task,
    save_dataset,
    save_task,
    validate_task,
)
from synthbench.values import Err, IOExample, Ok, VInt, from_python


def test_builtin_tasks_have_ten_examples():
    tasks = builtin_tasks()
    assert len(tasks) >= 25
    assert all(len(t.initial_examples) == 10 for t in tasks)


def test_builtin_task_ids_unique():
    tasks = builtin_tasks()
    assert len({t.id for t in tasks}) == len(tasks)


def test_anonymized_variant_invariants():
    for task in builtin_tasks(ANONYMIZED):
        assert task.entry == "solution"
        assert task.id not in task.source


def test_uri_backed_tasks_resolve(ref_executor):
    task = get_builtin_task("sum_list", source_backed=False)
    assert task.source == "builtin:sum_list"
    report = validate_task(task, ref_executor)
    assert report.ok


def test_task_round_trip_through_file(tmp_path):
    task = get_builtin_task("char_frequency")
    path = tmp_path / "annotated" / "char_frequency.json"
    save_task(task, path)
    loaded = load_task(path)
    assert loaded == task


def test_load_task_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    doc = {"id": "x", "source": "def x():\n    return 1\n"}
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(TaskParseError) as excinfo:
        load_task(path)
    assert "sourceSuite" in str(excinfo.value)


def test_load_task_syntax_error_has_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(TaskParseError) as excinfo:
        load_task(path)
    assert str(path) in str(excinfo.value)


def test_manifest_round_trip_and_tamper_detection(tmp_path):
    tasks = builtin_tasks()[:5] + builtin_tasks(ANONYMIZED)[:5]
    manifest = save_dataset(tasks, tmp_path, name="mini")
    assert len(manifest.tasks) == 10
    loaded = load_manifest(tmp_path)
    assert loaded.checksum == manifest.checksum
    back = load_dataset(tmp_path, ANNOTATED)
    assert {t.id for t in back} == {t.id for t in tasks if t.variant == ANNOTATED}
    # flip one byte in a task file: the manifest must fail loudly
    victim = tmp_path / manifest.tasks[0]
    victim.write_bytes(victim.read_bytes().replace(b"sum", b"zum", 1) + b" ")
    with pytest.raises(ManifestMismatchError):
        load_manifest(tmp_path)


def test_validate_ok_for_uniqueness(ref_executor):
    report = validate_task(get_builtin_task("has_unique_elements"), ref_executor)
    assert report.ok and report.issues == ()


def test_validate_catches_corrupted_output(ref_executor):
    task = get_builtin_task("sum_list")
    corrupted = replace(
        task,
        initial_examples=task.initial_examples[:-1]
        + (IOExample(input=task.initial_examples[-1].input, output=Ok(VInt(-999))),),
    )
    report = validate_task(corrupted, ref_executor)
    assert not report.ok
    assert any("does not match" in issue for issue in report.issues)


def test_validate_flags_nondeterminism(ref_executor):
    source = "import random\n\ndef solution(lst):\n    return random.random()\n"
    task = Task(
        id="noisy",
        source_suite="test",
        source=source,
        entry="solution",
        variant=ANONYMIZED,
        initial_examples=(IOExample(input=(from_python([1]),), output=Ok(VInt(0))),),
        arity=1,
    )
    report = validate_task(task, ref_executor)
    assert not report.ok
    assert any("nondeterministic" in issue for issue in report.issues)


def test_validate_flags_load_failure(ref_executor):
    task = Task(
        id="broken",
        source_suite="test",
        source="def solution(:\n",
        entry="solution",
        variant=ANONYMIZED,
        initial_examples=(IOExample(input=(from_python([1]),), output=Ok(VInt(0))),),
        arity=1,
    )
    report = validate_task(task, ref_executor)
    assert not report.ok
    assert any("load failure" in issue for issue in report.issues)


def test_validation_idempotent(ref_executor):
    task = get_builtin_task("is_palindrome")
    assert validate_task(task, ref_executor) == validate_task(task, ref_executor)


def test_anonymize_task(ref_executor):
    task = get_builtin_task("is_palindrome")
    anonymized = anonymize_task(task, ref_executor)
    assert anonymized.entry == "solution"
    assert anonymized.variant == ANONYMIZED
    assert "is_palindrome" not in anonymized.source
    for before, after in zip(task.initial_examples, anonymized.initial_examples):
        assert ref_executor.compare(before.output, after.output)


def test_anonymize_recursive_function(ref_executor):
    task = get_builtin_task("factorial_recursive")
    anonymized = anonymize_task(task, ref_executor)
    assert "factorial_recursive" not in anonymized.source
    report = validate_task(anonymized, ref_executor)
    assert report.ok


def test_anonymize_requires_annotated(ref_executor):
    task = get_builtin_task("is_palindrome", ANONYMIZED)
    with pytest.raises(AnonymizeError):
        anonymize_task(task, ref_executor)


def test_variant_behavioral_equivalence(ref_executor):
    annotated = {t.id: t for t in builtin_tasks(ANNOTATED)}
    for anon in builtin_tasks(ANONYMIZED):
        source_task = annotated[anon.id]
        for ex in source_task.initial_examples:
            a = ref_executor.call(source_task.source, source_task.entry, ex.input)
            b = ref_executor.call(anon.source, anon.entry, ex.input)
            assert ref_executor.compare(a, b), anon.id


def test_stats_shape():
    rows = dataset_stats(builtin_tasks())
    assert len(rows) == 1
    row = rows[0]
    assert row.suite == "builtin"
    assert row.functions >= 25
    assert 1 <= row.loc_min <= row.loc_avg <= row.loc_max
