"""Session fixtures: cached simulation runs and verdict-line reporting."""

import time

import pytest
import workloads

from tlpsim.engine import simulate
from workloads import (ABLATION_VARIANTS, MIXED_CHASE_SEEDS,
                       mixed_chase_config, mixed_chase_spec)
from tlpsim.trace import generate_list


def pytest_terminal_summary(terminalreporter):
    if workloads.VERDICT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in workloads.VERDICT_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mixed_chase_traces():
    return {s: generate_list(mixed_chase_spec(s)) for s in MIXED_CHASE_SEEDS}


class AblationRuns(dict):
    """(seed, variant) -> SimStats, plus the wall time spent simulating."""
    elapsed = 0.0


@pytest.fixture(scope="session")
def ablation_runs(mixed_chase_traces):
    """Stats for every ablation variant on every mixed-chase seed."""
    start = time.perf_counter()
    runs = AblationRuns()
    for seed, recs in mixed_chase_traces.items():
        for variant in ABLATION_VARIANTS:
            runs[seed, variant] = simulate(recs, mixed_chase_config(variant))
    runs.elapsed = time.perf_counter() - start
    return runs
