import numpy as np
import pytest

from rcbar.asymptotics import limit_matrices
from rcbar.model import (Constant, Exponential, ModelSpec, Normal, PairSpec, constant_spec,
                         derive_moments, reference_spec)
from rcbar.simulate import TSampleConfig, sample_T


def light_spec():
    """Small coefficient variance, so T has moments well beyond order four."""
    return ModelSpec(
        PairSpec(Normal(0.3, 0.05), Normal(0.0, 0.05), Normal(-0.1, 0.05)),
        PairSpec(Exponential(1.0), Exponential(2.0), Exponential(3.0)),
        Constant(1.0),
    )


def light_spec_normal_noise():
    return ModelSpec(
        PairSpec(Constant(0.0), Normal(-0.2, 0.1), Normal(0.4, 0.02)),
        PairSpec(Normal(0.0, 0.5), Normal(1.0, 0.2), Normal(-0.5, 0.3)),
        Normal(0.0, 1.0),
    )


@pytest.fixture(scope="session")
def spec():
    return reference_spec()


@pytest.fixture(scope="session")
def moments(spec):
    return derive_moments(spec)


@pytest.fixture(scope="session")
def noiseless():
    return constant_spec()


@pytest.fixture(scope="session")
def ref_t(spec):
    """10^6 tail-variable draws for the reference model, shared across modules."""
    return sample_T(spec, TSampleConfig.for_spec(spec, 1e-8), seed=12345, count=10**6)


@pytest.fixture(scope="session")
def ref_limits(moments, ref_t):
    return limit_matrices(moments, ref_t)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
