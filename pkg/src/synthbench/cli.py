"""Operator entry points.

``synthbench eval``     batch evaluation over a dataset, writing results,
                        traces, and a summary table into the output dir.
``synthbench oracle``   one differential check between two source files;
                        exit 0 on Pass, 1 on Fail, 2 on error.
``synthbench play``     drive a session by hand through the same protocol.
``synthbench dataset``  validate / anonymize / stats over task files.

Every command honors ``--seed``; with ``--deterministic`` two identical runs
produce byte-identical results files (timestamps and wall clocks zeroed).
A ``--config`` JSON file overrides flags of the same name.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import agents as agents_mod
from . import dataset as dataset_mod
from . import oracle as oracle_mod
from . import reporting
from .dataset import ANNOTATED, ANONYMIZED, Task
from .executor import ExecLimits, FloatTolerance, ReferenceExecutor, SubprocessExecutor
from .oracle import FunctionHandle, OracleConfig, Pass
from .protocol import Budgets, Session, derive_oracle_seed
from .values import LiteralParseError, args_from_wire, render_safe

VARIANTS = (ANNOTATED, ANONYMIZED)


@dataclass
class RunConfig:
    dataset: str = "builtin"
    variant: str = ANNOTATED
    agent: str = "memorizer"
    b_io: int = 30
    b_oracle: int = 2
    max_tests: int = 200
    timeout_ms: int = 2000
    parallelism: int = 1
    seed: int = 0
    out: str = "runs/latest"
    teacher_mode: bool = False
    deterministic: bool = False
    strict_aborted: bool = False
    executor: str = "reference"
    max_turns: int = 40
    float_abs_tol: Optional[float] = None
    float_rel_tol: Optional[float] = None

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def budgets(self) -> Budgets:
        return Budgets(b_io=self.b_io, b_oracle=self.b_oracle)

    def float_mode(self) -> Optional[FloatTolerance]:
        if self.float_abs_tol is None and self.float_rel_tol is None:
            return None
        return FloatTolerance(abs_tol=self.float_abs_tol or 0.0, rel_tol=self.float_rel_tol or 0.0)

    def oracle_config(self, task_id: str) -> OracleConfig:
        return OracleConfig(
            max_tests=self.max_tests,
            per_call_limits=ExecLimits(timeout_ms=self.timeout_ms),
            seed=derive_oracle_seed(task_id, self.seed),
            float_mode=self.float_mode(),
        )

    def make_executor(self):
        if self.executor == "reference":
            return ReferenceExecutor(default_limits=ExecLimits(timeout_ms=self.timeout_ms))
        if self.executor.startswith("worker:"):
            cmd = shlex.split(self.executor.split(":", 1)[1])
            return SubprocessExecutor(cmd, default_limits=ExecLimits(timeout_ms=self.timeout_ms))
        raise ValueError(f"unknown executor spec {self.executor!r}")


def _load_tasks(config: RunConfig) -> list[Task]:
    variants = VARIANTS if config.variant == "both" else (config.variant,)
    tasks: list[Task] = []
    for variant in variants:
        if config.dataset == "builtin":
            tasks.extend(dataset_mod.builtin_tasks(variant))
        else:
            tasks.extend(dataset_mod.load_dataset(Path(config.dataset), variant))
    return tasks


def _run_one_session(config: RunConfig, task: Task, make_agent) -> tuple[reporting.RunMetrics, reporting.TraceRecord]:
    executor = config.make_executor()
    try:
        session = Session(
            task,
            config.budgets(),
            executor,
            seed=config.seed,
            oracle_config=config.oracle_config(task.id),
        )
        agent = make_agent(task)
        clock_ms = (lambda: 0) if config.deterministic else None
        teacher_source = agents_mod.resolve_task_source(task) if config.teacher_mode else None
        agents_mod.run_agent_loop(
            agent, session, teacher_source=teacher_source, max_turns=config.max_turns, clock_ms=clock_ms
        )
        if not session.is_terminal():
            session.abandon()
        session_id = f"{task.id}:{task.variant}:{agent.name}:{config.seed}"
        metrics = reporting.metrics_from_session(
            session,
            task_id=task.id,
            variant=task.variant,
            agent_name=agent.name,
            seed=config.seed,
            wall_ms=0 if config.deterministic else None,
        )
        if config.teacher_mode:
            record = reporting.record_teacher_session(session, teacher_source, session_id=session_id)
        else:
            record = reporting.record_session(session, session_id)
        return metrics, record
    finally:
        executor.close()


def cmd_eval(config: RunConfig, *, stdout=None) -> int:
    stdout = stdout or sys.stdout
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        tasks = _load_tasks(config)
    except (dataset_mod.TaskParseError, dataset_mod.ManifestMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    validator = config.make_executor()
    try:
        valid_tasks = []
        for task in tasks:
            report = dataset_mod.validate_task(task, validator)
            if report.ok:
                valid_tasks.append(task)
            else:
                print(f"warning: task {task.id} excluded: {report.issues}", file=sys.stderr)
    finally:
        validator.close()
    make_agent = agents_mod.make_agent_factory(config.agent)
    results: list[tuple[reporting.RunMetrics, reporting.TraceRecord]] = []
    if config.parallelism == 1:
        for task in valid_tasks:
            results.append(_run_one_session(config, task, make_agent))
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [pool.submit(_run_one_session, config, task, make_agent) for task in valid_tasks]
            results = [f.result() for f in futures]
    results.sort(key=lambda pair: (pair[0].agent_name, pair[0].variant, pair[0].task_id))
    metrics = [m for m, _ in results]
    records = [r for _, r in results]
    reporting.export_results(metrics, out_dir / reporting.RESULTS_FILENAME)
    reporting.export_traces(records, out_dir / reporting.TRACES_FILENAME)
    summary = reporting.render_summary(
        reporting.aggregate(metrics, exclude_aborted=config.strict_aborted)
    )
    (out_dir / reporting.SUMMARY_FILENAME).write_text(summary, encoding="utf-8")
    stdout.write(summary)
    return 0


# ---------------------------------------------------------------------------
# oracle subcommand
# ---------------------------------------------------------------------------


def _first_def_name(source: str) -> Optional[str]:
    import ast

    try:
        tree = ast.parse(source)
    except SyntaxError:
        return None
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            return node.name
    return None


def cmd_oracle(
    truth_path: str,
    candidate_path: str,
    *,
    entry: Optional[str],
    task_path: Optional[str],
    seeds_path: Optional[str],
    max_tests: int,
    seed: int,
    timeout_ms: int,
    stdout=None,
) -> int:
    stdout = stdout or sys.stdout
    try:
        truth_source = Path(truth_path).read_text(encoding="utf-8")
        candidate_source = Path(candidate_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    truth_entry = entry or _first_def_name(truth_source)
    candidate_entry = entry or _first_def_name(candidate_source) or truth_entry
    if truth_entry is None:
        print("error: could not locate a function definition in the truth file", file=sys.stderr)
        return 2
    if task_path:
        try:
            seeds = [ex.input for ex in dataset_mod.load_task(Path(task_path)).initial_examples]
        except dataset_mod.TaskParseError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    elif seeds_path:
        try:
            doc = json.loads(Path(seeds_path).read_text(encoding="utf-8"))
            seeds = [args_from_wire(item) for item in doc]
        except (OSError, ValueError) as exc:
            print(f"error: bad seeds file: {exc}", file=sys.stderr)
            return 2
    else:
        print("error: provide --task or --seeds for the seed corpus", file=sys.stderr)
        return 2
    executor = ReferenceExecutor(default_limits=ExecLimits(timeout_ms=timeout_ms))
    try:
        config = OracleConfig(
            max_tests=max_tests, per_call_limits=ExecLimits(timeout_ms=timeout_ms), seed=seed
        )
        verdict = oracle_mod.check(
            FunctionHandle(truth_source, truth_entry),
            FunctionHandle(candidate_source, candidate_entry),
            seeds,
            config,
            executor,
        )
    except oracle_mod.CandidateLoadError as exc:
        print(f"error: candidate failed to load: {exc}", file=sys.stderr)
        return 2
    except oracle_mod.TruthLoadFailureError as exc:
        print(f"error: truth failed to load: {exc}", file=sys.stderr)
        return 2
    finally:
        executor.close()
    if isinstance(verdict, Pass):
        stdout.write(f"Pass ({verdict.tests_run} tests)\n")
        return 0
    delta = verdict.counterexample
    stdout.write("Fail\n")
    stdout.write(f"Failed input: {oracle_mod.render_safe_args(delta.input)}\n")
    stdout.write(f"Truth outcome: {_outcome_text(delta.truth_outcome)}\n")
    stdout.write(f"Candidate outcome: {_outcome_text(delta.candidate_outcome)}\n")
    stdout.write(f"Strategy: {verdict.strategy_attribution.value} after {verdict.tests_run} tests\n")
    return 1


def _outcome_text(outcome) -> str:
    from .values import Err

    if isinstance(outcome, Err):
        return f"Error ({outcome.kind}): {outcome.message}"
    return render_safe(outcome.value)


# ---------------------------------------------------------------------------
# play subcommand (human drives the agent role; debugging aid)
# ---------------------------------------------------------------------------

_PLAY_HELP = """commands:
  q <args>      query the hidden function once, e.g.  q [1, 2, 3]
                (multi-argument tasks: comma-separated, e.g.  q [1, 2], 3)
  submit        paste an implementation, finish with a line containing only END
  show          print remaining budgets
  quit          abandon the session
"""


def cmd_play(
    task: Task,
    budgets: Budgets,
    *,
    seed: int = 0,
    out: Optional[str] = None,
    in_stream=None,
    stdout=None,
) -> int:
    in_stream = in_stream or sys.stdin
    stdout = stdout or sys.stdout
    executor = ReferenceExecutor()
    session = Session(task, budgets, executor, seed=seed)
    write = stdout.write
    write(agents_mod.render_initial_prompt(task, budgets))
    write("\n" + _PLAY_HELP)
    observation = None

    def counters() -> str:
        return (
            f"[{session.remaining_queries} invocations left, "
            f"{session.remaining_debug_checks} debugging checks left]\n"
        )

    try:
        while not session.is_terminal():
            write(counters())
            write("> ")
            stdout.flush()
            line = in_stream.readline()
            if not line:
                session.abandon()
                break
            line = line.strip()
            if not line:
                continue
            session.add_turn("agent", line)
            if line == "quit":
                session.abandon()
                break
            if line == "show":
                write(counters())
                continue
            if line == "submit":
                write("paste the implementation, end with a line containing only END\n")
                lines = []
                while True:
                    chunk = in_stream.readline()
                    if not chunk or chunk.strip() == "END":
                        break
                    lines.append(chunk)
                source = "".join(lines)
                session.add_turn("agent", source)
                from .protocol import SubmitCandidate

                observation = session.step(SubmitCandidate(source=source, entry=task.entry))
            elif line.startswith("q "):
                try:
                    args = agents_mod.parse_call_args(f"{task.entry}({line[2:]})", task.entry)
                except LiteralParseError as exc:
                    write(f"could not parse arguments: {exc}\n")
                    continue
                if len(args) != task.arity:
                    write(f"expected {task.arity} argument(s), got {len(args)}\n")
                    continue
                from .protocol import QueryBatch

                observation = session.step(QueryBatch(inputs=(args,)))
            else:
                write(_PLAY_HELP)
                continue
            if isinstance(observation, agents_mod.OraclePassObs):
                write("Pass. The implementation matches the hidden function.\n")
            else:
                feedback = agents_mod.render_feedback_prompt(
                    observation,
                    entry=task.entry,
                    remaining_queries=session.remaining_queries,
                    remaining_checks=session.remaining_debug_checks,
                )
                session.add_turn("harness", feedback)
                write(feedback)
    finally:
        executor.close()
    write(f"session over: {session.status.value}\n")
    if out:
        record = reporting.record_session(session, f"play:{task.id}:{seed}")
        reporting.export_traces([record], Path(out) / reporting.TRACES_FILENAME)
    return 0


# ---------------------------------------------------------------------------
# dataset subcommand
# ---------------------------------------------------------------------------


def cmd_dataset(sub: str, path: str, *, out: Optional[str], variant: Optional[str], stdout=None) -> int:
    stdout = stdout or sys.stdout
    if path == "builtin":
        tasks = []
        for v in VARIANTS if variant is None else (variant,):
            tasks.extend(dataset_mod.builtin_tasks(v))
    else:
        try:
            tasks = dataset_mod.load_dataset(Path(path), variant)
        except (dataset_mod.TaskParseError, dataset_mod.ManifestMismatchError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if sub == "stats":
        rows = dataset_mod.dataset_stats(tasks)
        stdout.write(f"{'Source':12} {'Functions':>9} {'Min':>5} {'Max':>5} {'Avg':>6}\n")
        for r in rows:
            stdout.write(
                f"{r.suite:12} {r.functions:>9} {r.loc_min:>5} {r.loc_max:>5} {r.loc_avg:>6.1f}\n"
            )
        return 0
    if sub == "validate":
        executor = ReferenceExecutor()
        bad = []
        try:
            for task in tasks:
                report = dataset_mod.validate_task(task, executor)
                status = "ok" if report.ok else "FAIL"
                stdout.write(f"{task.variant}/{task.id}: {status}\n")
                for issue in report.issues:
                    stdout.write(f"  - {issue}\n")
                if not report.ok:
                    bad.append(task.id)
        finally:
            executor.close()
        if bad:
            print(f"invalid tasks: {', '.join(sorted(set(bad)))}", file=sys.stderr)
            return 1
        return 0
    if sub == "anonymize":
        if not out:
            print("error: anonymize requires --out", file=sys.stderr)
            return 2
        executor = ReferenceExecutor()
        try:
            annotated = [t for t in tasks if t.variant == ANNOTATED]
            anonymized = [dataset_mod.anonymize_task(t, executor) for t in annotated]
        except dataset_mod.AnonymizeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        finally:
            executor.close()
        manifest = dataset_mod.save_dataset(anonymized, Path(out), name="anonymized")
        stdout.write(f"wrote {len(anonymized)} tasks, checksum {manifest.checksum}\n")
        return 0
    print(f"error: unknown dataset subcommand {sub!r}", file=sys.stderr)
    return 2


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="run an agent over a dataset")
    p_eval.add_argument("--dataset", default="builtin")
    p_eval.add_argument("--variant", default=ANNOTATED, choices=[*VARIANTS, "both"])
    p_eval.add_argument("--agent", default="memorizer")
    p_eval.add_argument("--b-io", type=int, default=30)
    p_eval.add_argument("--b-oracle", type=int, default=2)
    p_eval.add_argument("--max-tests", type=int, default=200)
    p_eval.add_argument("--timeout-ms", type=int, default=2000)
    p_eval.add_argument("--parallelism", type=int, default=1)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", default="runs/latest")
    p_eval.add_argument("--teacher-mode", action="store_true")
    p_eval.add_argument("--deterministic", action="store_true")
    p_eval.add_argument("--strict-aborted", action="store_true")
    p_eval.add_argument("--executor", default="reference")
    p_eval.add_argument("--max-turns", type=int, default=40)
    p_eval.add_argument("--float-abs-tol", type=float, default=None)
    p_eval.add_argument("--float-rel-tol", type=float, default=None)
    p_eval.add_argument("--config", default=None, help="JSON file whose keys override flags")

    p_oracle = sub.add_parser("oracle", help="differentially test candidate against truth")
    p_oracle.add_argument("truth")
    p_oracle.add_argument("candidate")
    p_oracle.add_argument("--entry", default=None)
    p_oracle.add_argument("--task", default=None, help="task file providing the seed corpus")
    p_oracle.add_argument("--seeds", default=None, help="JSON file of wire-encoded arg tuples")
    p_oracle.add_argument("--max-tests", type=int, default=200)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--timeout-ms", type=int, default=2000)

    p_play = sub.add_parser("play", help="drive one session interactively")
    p_play.add_argument("--task", required=True, help="builtin task id or task file path")
    p_play.add_argument("--variant", default=ANNOTATED, choices=VARIANTS)
    p_play.add_argument("--b-io", type=int, default=30)
    p_play.add_argument("--b-oracle", type=int, default=2)
    p_play.add_argument("--seed", type=int, default=0)
    p_play.add_argument("--out", default=None)

    p_ds = sub.add_parser("dataset", help="dataset tools")
    p_ds.add_argument("sub", choices=["validate", "anonymize", "stats"])
    p_ds.add_argument("path", help="dataset root or 'builtin'")
    p_ds.add_argument("--out", default=None)
    p_ds.add_argument("--variant", default=None)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval":
        if args.config:
            try:
                overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                print(f"error: bad config file: {exc}", file=sys.stderr)
                return 2
            for key, value in overrides.items():
                setattr(args, key.replace("-", "_"), value)
        try:
            config = RunConfig(
                dataset=args.dataset,
                variant=args.variant,
                agent=args.agent,
                b_io=args.b_io,
                b_oracle=args.b_oracle,
                max_tests=args.max_tests,
                timeout_ms=args.timeout_ms,
                parallelism=args.parallelism,
                seed=args.seed,
                out=args.out,
                teacher_mode=args.teacher_mode,
                deterministic=args.deterministic,
                strict_aborted=args.strict_aborted,
                executor=args.executor,
                max_turns=args.max_turns,
                float_abs_tol=args.float_abs_tol,
                float_rel_tol=args.float_rel_tol,
            )
            config.budgets()
        except ValueError as exc:
            parser.error(str(exc))
        return cmd_eval(config)
    if args.command == "oracle":
        return cmd_oracle(
            args.truth,
            args.candidate,
            entry=args.entry,
            task_path=args.task,
            seeds_path=args.seeds,
            max_tests=args.max_tests,
            seed=args.seed,
            timeout_ms=args.timeout_ms,
        )
    if args.command == "play":
        task_ref = args.task
        if Path(task_ref).exists():
            task = dataset_mod.load_task(Path(task_ref))
        else:
            task = dataset_mod.get_builtin_task(task_ref, args.variant)
        try:
            budgets = Budgets(b_io=args.b_io, b_oracle=args.b_oracle)
        except ValueError as exc:
            parser.error(str(exc))
        return cmd_play(task, budgets, seed=args.seed, out=args.out)
    if args.command == "dataset":
        return cmd_dataset(args.sub, args.path, out=args.out, variant=args.variant)
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
