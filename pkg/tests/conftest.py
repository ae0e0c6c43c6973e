import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_pmf(rng: np.random.Generator, width: int, zero_mass: bool = True) -> np.ndarray:
    """Random pmf on 0..width-1; optionally with no mass at zero."""
    w = rng.random(width)
    w[rng.random(width) < 0.3] = 0.0
    if not zero_mass:
        w[0] = 0.0
    if w.sum() == 0:
        w[-1] = 1.0
    return w / w.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  " + "; ".join(d for _, d in parts))
