import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_criteria_key = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def criteria(request):
    """Per-criterion sub-check results, printed once at the end of the run."""
    return request.config.stash.setdefault(_criteria_key, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_criteria_key, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, checks = results[n]
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({info})" for name, good, info in checks)
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'} [{title}] {detail}")
