"""Session fixtures sharing the expensive runs across test modules."""

import time

import pytest

from frontier.model import CompetitionModel, GradientSpec


def make_reference_model(s_b=2.0):
    return CompetitionModel(
        gradient_a=GradientSpec.linear(2.0, -1.5),
        gradient_b=GradientSpec.linear(0.5, 1.5),
        s_a=2.0, s_b=s_b)


@pytest.fixture(scope="session")
def reference_model():
    return make_reference_model()


@pytest.fixture(scope="session")
def asymmetric_model():
    return make_reference_model(s_b=3.0)


@pytest.fixture(scope="session")
def reference_sweep(reference_model):
    """Corner-init steady states at eps 1e-3/1e-4/1e-5 plus the wave zero."""
    from frontier.experiment import epsilon_sweep
    t0 = time.perf_counter()
    report = epsilon_sweep(reference_model, [1e-3, 1e-4, 1e-5])
    report.elapsed = time.perf_counter() - t0
    return report


@pytest.fixture(scope="session")
def demo_report(tmp_path_factory):
    """Paired zero-diffusion/diffusive demo on the exponential model."""
    from frontier.experiment import disambiguation_demo
    out = tmp_path_factory.mktemp("figure2")
    t0 = time.perf_counter()
    report = disambiguation_demo(out_dir=str(out))
    report.elapsed = time.perf_counter() - t0
    return report
