"""Shared helpers: random physical process matrices, noiseless datasets and
the acceptance-criteria reporting hook."""

import numpy as np
import pytest

from memtomo.channel import ShotConfig, expected_dataset
from memtomo.linalg import param_to_psd

def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def random_chi(rng, min_trace=0.2):
    """Random PSD process matrix with trace in [min_trace, 1]."""
    chi = param_to_psd(rng.normal(size=16))
    target = rng.uniform(min_trace, 1.0)
    return chi * (target / np.trace(chi).real)


def random_trace_one_chi(rng):
    return random_chi(rng, min_trace=1.0)


def noiseless_dataset(chi, n0=5000.0, tag="memory_on"):
    """Exact expected counts for a channel, no Poisson noise."""
    return expected_dataset(chi, ShotConfig(photons_per_pulse=n0), tag)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
