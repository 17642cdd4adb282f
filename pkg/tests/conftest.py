"""Shared fixtures: one benchmarked reference device per session."""

import pytest

from gamorra.bench import run_suite
from gamorra.simulator import reference_profile


@pytest.fixture(scope="session")
def ref_profile():
    return reference_profile()


@pytest.fixture(scope="session")
def ref_perf(ref_profile):
    """Performance model benchmarked on the noise-free reference device."""
    return run_suite(ref_profile, seed=0)
