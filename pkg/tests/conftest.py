import pytest
from hypothesis import settings

from lagfill.cobordism import CutoffFunction, double_point_census, perturbed_immersion
from lagfill.maslov import det_path, frame_path_at_double_point

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=50)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def model():
    """The identity-cutoff immersion with n = 7."""
    return perturbed_immersion(CutoffFunction("identity", 7), validate=False)


@pytest.fixture(scope="session")
def model_census(model):
    return double_point_census(model)


@pytest.fixture(scope="session")
def frames(model):
    return frame_path_at_double_point(model, 10_001)


@pytest.fixture(scope="session")
def dpath(frames):
    return det_path(frames)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(cid: int, ok: bool, msg: str):
        ACCEPTANCE_LINES.append((cid, f"[{'PASS' if ok else 'FAIL'}] criterion {cid:2d}: {msg}"))
        assert ok, msg

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
