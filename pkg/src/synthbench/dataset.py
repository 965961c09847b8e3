"""Task ingestion, validation, and variant management.

A task binds a hidden target function (source text or ``builtin:`` URI) to
its entry name, variant, and fixed initial examples. Tasks are immutable
after validation and safe to share across sessions.

File formats: one canonical JSON document per task, a manifest listing task
paths with a content checksum over the task files, directory layout
``<dataset>/<variant>/<task-id>.json``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

from .builtins import builtin_uri, registry
from .executor import (
    ExecTimeoutError,
    ReferenceExecutor,
    SourceLoadError,
    executor_supports,
    rename_function,
)
from .values import (
    ArgTuple,
    IOExample,
    Outcome,
    args_from_wire,
    args_to_wire,
    outcome_from_wire,
    outcome_to_wire,
)

ANNOTATED = "annotated"
ANONYMIZED = "anonymized"
ANONYMOUS_ENTRY = "solution"

DEFAULT_E0_SIZE = 10


class TaskParseError(ValueError):
    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class ManifestMismatchError(ValueError):
    pass


class AnonymizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Task:
    id: str
    source_suite: str
    source: str
    entry: str
    variant: str
    initial_examples: tuple[IOExample, ...]
    arity: int
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.variant not in (ANNOTATED, ANONYMIZED):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == ANONYMIZED and self.entry != ANONYMOUS_ENTRY:
            raise ValueError("anonymized tasks must use the generic entry name")
        for ex in self.initial_examples:
            if len(ex.input) != self.arity:
                raise ValueError(f"example arity {len(ex.input)} != task arity {self.arity}")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    version: str
    tasks: tuple[str, ...]  # relative paths "<variant>/<task-id>.json"
    checksum: str


@dataclass(frozen=True)
class ValidationReport:
    task_id: str
    ok: bool
    issues: tuple[str, ...]


# ---------------------------------------------------------------------------
# Builtin tasks.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _builtin_tasks_cached(variant: str, e0_size: int, source_backed: bool) -> tuple[Task, ...]:
    reg = registry()
    executor = ReferenceExecutor(reg)
    tasks = []
    try:
        for name, spec in reg.items():
            if variant == ANONYMIZED:
                source = rename_function(spec.source, name, ANONYMOUS_ENTRY)
                entry = ANONYMOUS_ENTRY
            else:
                source = spec.source if source_backed else builtin_uri(name)
                entry = name
            inputs = spec.seeds[:e0_size]
            examples = tuple(
                IOExample(input=args, output=_run_seed(executor, spec, args)) for args in inputs
            )
            tasks.append(
                Task(
                    id=name,
                    source_suite="builtin",
                    source=source,
                    entry=entry,
                    variant=variant,
                    initial_examples=examples,
                    arity=spec.arity,
                    tags=spec.tags,
                )
            )
    finally:
        executor.close()
    return tuple(tasks)


def _run_seed(executor, spec, args: ArgTuple) -> Outcome:
    return executor.call(builtin_uri(spec.name), spec.name, args)


def builtin_tasks(
    variant: str = ANNOTATED, *, e0_size: int = DEFAULT_E0_SIZE, source_backed: bool = True
) -> list[Task]:
    """The shipped offline task set, with initial examples computed from the
    registry truth. Anonymized variants are always source-backed (a builtin
    URI would leak the original name)."""
    return list(_builtin_tasks_cached(variant, e0_size, source_backed))


def get_builtin_task(name: str, variant: str = ANNOTATED, **kwargs) -> Task:
    for task in builtin_tasks(variant, **kwargs):
        if task.id == name:
            return task
    raise KeyError(name)


# ---------------------------------------------------------------------------
# Task files and manifests.
# ---------------------------------------------------------------------------


def task_to_doc(task: Task) -> dict:
    return {
        "id": task.id,
        "sourceSuite": task.source_suite,
        "source": task.source,
        "entry": task.entry,
        "variant": task.variant,
        "arity": task.arity,
        "tags": list(task.tags),
        "initialExamples": [
            {"input": args_to_wire(ex.input), "output": outcome_to_wire(ex.output)}
            for ex in task.initial_examples
        ],
    }


def task_from_doc(doc: dict, location: str) -> Task:
    required = ["id", "sourceSuite", "source", "entry", "variant", "arity", "initialExamples"]
    for name in required:
        if name not in doc:
            raise TaskParseError(location, f"missing field {name!r}")
    try:
        examples = tuple(
            IOExample(input=args_from_wire(ex["input"]), output=outcome_from_wire(ex["output"]))
            for ex in doc["initialExamples"]
        )
        return Task(
            id=str(doc["id"]),
            source_suite=str(doc["sourceSuite"]),
            source=str(doc["source"]),
            entry=str(doc["entry"]),
            variant=str(doc["variant"]),
            initial_examples=examples,
            arity=int(doc["arity"]),
            tags=tuple(doc.get("tags", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TaskParseError(location, str(exc)) from exc


def save_task(task: Task, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = json.dumps(task_to_doc(task), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    path.write_text(data + "\n", encoding="utf-8")


def load_task(path: Path) -> Task:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise TaskParseError(str(path), "no such file")
    except json.JSONDecodeError as exc:
        raise TaskParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)
    return task_from_doc(doc, str(path))


def _files_checksum(root: Path, rel_paths: Sequence[str]) -> str:
    digest = hashlib.sha256()
    for rel in rel_paths:
        digest.update(rel.encode("utf-8"))
        digest.update(b"\x00")
        digest.update((root / rel).read_bytes())
    return digest.hexdigest()


def save_dataset(tasks: Sequence[Task], root: Path, *, name: str, version: str = "1") -> DatasetManifest:
    root = Path(root)
    rel_paths = []
    for task in tasks:
        rel = f"{task.variant}/{task.id}.json"
        save_task(task, root / rel)
        rel_paths.append(rel)
    rel_paths.sort()
    manifest = DatasetManifest(
        name=name, version=version, tasks=tuple(rel_paths), checksum=_files_checksum(root, rel_paths)
    )
    doc = {
        "name": manifest.name,
        "version": manifest.version,
        "tasks": list(manifest.tasks),
        "checksum": manifest.checksum,
    }
    (root / "manifest.json").write_text(
        json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return manifest


def load_manifest(root: Path) -> DatasetManifest:
    root = Path(root)
    path = root / "manifest.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise TaskParseError(str(path), "no such file")
    except json.JSONDecodeError as exc:
        raise TaskParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)
    manifest = DatasetManifest(
        name=str(doc["name"]),
        version=str(doc["version"]),
        tasks=tuple(doc["tasks"]),
        checksum=str(doc["checksum"]),
    )
    actual = _files_checksum(root, manifest.tasks)
    if actual != manifest.checksum:
        raise ManifestMismatchError(
            f"dataset {manifest.name!r}: checksum {actual} does not match manifest {manifest.checksum}"
        )
    return manifest


def load_dataset(root: Path, variant: Optional[str] = None) -> list[Task]:
    """All tasks listed by the manifest (checksum-verified), optionally
    filtered by variant."""
    root = Path(root)
    manifest = load_manifest(root)
    tasks = [load_task(root / rel) for rel in manifest.tasks]
    if variant is not None:
        tasks = [t for t in tasks if t.variant == variant]
    return tasks


# ---------------------------------------------------------------------------
# Validation and anonymization.
# ---------------------------------------------------------------------------


def validate_task(task: Task, executor) -> ValidationReport:
    """Re-execute all initial examples twice; any mismatch, nondeterminism,
    timeout, or load failure excludes the task from runs."""
    issues: list[str] = []
    for i, ex in enumerate(task.initial_examples, start=1):
        try:
            first = executor.call(task.source, task.entry, ex.input)
            second = executor.call(task.source, task.entry, ex.input)
        except SourceLoadError as exc:
            issues.append(f"load failure: {exc}")
            break
        except ExecTimeoutError:
            issues.append(f"example {i}: timeout")
            continue
        if not executor.compare(first, second):
            issues.append(f"example {i}: nondeterministic output")
            continue
        if not executor.compare(first, ex.output):
            issues.append(f"example {i}: stored output does not match recomputed output")
    return ValidationReport(task_id=task.id, ok=not issues, issues=tuple(issues))


def anonymize_task(task: Task, executor) -> Task:
    """Materialize the anonymized variant: entry renamed to the generic
    identifier, behavior unchanged (verified by re-validating the examples)."""
    if task.variant != ANNOTATED:
        raise AnonymizeError(f"task {task.id}: only annotated tasks can be anonymized")
    if task.source.startswith("builtin:"):
        raise AnonymizeError(
            f"task {task.id}: builtin-URI tasks are constructed anonymized directly"
        )
    if executor_supports(executor, "transform"):
        try:
            new_source = executor.transform(task.source, "anonymize", task.entry)
        except SourceLoadError as exc:
            raise AnonymizeError(f"task {task.id}: transform failed: {exc}") from exc
    else:
        # In-process fallback: the host language is the orchestrator's own,
        # so the rename can be done locally when the executor lacks the op.
        new_source = rename_function(task.source, task.entry, ANONYMOUS_ENTRY)
    if task.entry != ANONYMOUS_ENTRY and re.search(rf"\b{re.escape(task.entry)}\b", new_source):
        raise AnonymizeError(f"task {task.id}: original entry name survives anonymization")
    new_task = replace(task, source=new_source, entry=ANONYMOUS_ENTRY, variant=ANONYMIZED)
    report = validate_task(new_task, executor)
    if not report.ok:
        raise AnonymizeError(f"task {task.id}: post-transform validation failed: {report.issues}")
    return new_task


# ---------------------------------------------------------------------------
# Statistics (suite-level shape: count, lines of code min/max/avg).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteStats:
    suite: str
    functions: int
    loc_min: int
    loc_max: int
    loc_avg: float


def _task_loc(task: Task) -> int:
    source = task.source
    if source.startswith("builtin:"):
        source = registry()[source.split(":", 1)[1]].source
    return len([line for line in source.strip().splitlines() if line.strip()])


def dataset_stats(tasks: Sequence[Task]) -> list[SuiteStats]:
    by_suite: dict[str, list[int]] = {}
    for task in tasks:
        by_suite.setdefault(task.source_suite, []).append(_task_loc(task))
    rows = []
    for suite in sorted(by_suite):
        locs = by_suite[suite]
        rows.append(
            SuiteStats(
                suite=suite,
                functions=len(locs),
                loc_min=min(locs),
                loc_max=max(locs),
                loc_avg=round(sum(locs) / len(locs), 1),
            )
        )
    return rows
