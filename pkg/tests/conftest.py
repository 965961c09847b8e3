from __future__ import annotations

import sys
from pathlib import Path

import pytest

from synthbench.executor import ExecLimits, ReferenceExecutor, SubprocessExecutor

REPO_ROOT = Path(__file__).resolve().parent.parent
WORKER_SCRIPT = REPO_ROOT / "worker" / "pyworker.py"


def worker_cmd(config_path: str | None = None) -> list[str]:
    cmd = [sys.executable, str(WORKER_SCRIPT)]
    if config_path:
        cmd.append(config_path)
    return cmd


@pytest.fixture(scope="session")
def ref_executor():
    executor = ReferenceExecutor()
    yield executor
    executor.close()


@pytest.fixture(scope="session")
def inline_executor():
    executor = ReferenceExecutor(inline=True)
    yield executor
    executor.close()


def pytest_runtest_logreport(report):
    # one visible PASS/FAIL line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {outcome}", flush=True)


@pytest.fixture()
def worker_executor(tmp_path):
    config = tmp_path / "worker.json"
    config.write_text('{"hardTimeoutMs": 8000, "recursionLimit": 10000}', encoding="utf-8")
    executor = SubprocessExecutor(worker_cmd(str(config)), default_limits=ExecLimits(timeout_ms=2000))
    yield executor
    executor.close()
