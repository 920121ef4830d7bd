from __future__ import annotations

import time

import pytest

from nrusim.runner import RunResult, run_scenario
from nrusim.scenario import BUNDLED, load_bundled


@pytest.fixture(scope="session")
def bundled_results() -> dict[str, RunResult]:
    """Every bundled scenario executed once, shared across the suite."""
    results = {}
    started = time.perf_counter()
    for name in BUNDLED:
        results[name] = run_scenario(load_bundled(name))
    results["_wall_seconds"] = time.perf_counter() - started
    return results
