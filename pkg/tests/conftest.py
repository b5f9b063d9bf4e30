import numpy as np
import pytest

from betaselect import Dataset, ModelSpec, load_reading_skills
from betaselect.estimation import FitResult


@pytest.fixture(scope="session")
def reading():
    return load_reading_skills()


def synthetic(n=50, seed=0, beta=(0.3, -0.8, 0.5), gamma=(-0.9, 0.7, 0.0)):
    """Small two-covariate dataset with known logit/logit coefficients."""
    rng = np.random.default_rng(seed)
    cols = {"a": rng.uniform(-1, 1, n), "b": rng.normal(size=n)}
    X = np.column_stack([np.ones(n), cols["a"], cols["b"]])
    mu = 1 / (1 + np.exp(-(X @ np.asarray(beta))))
    sig = 1 / (1 + np.exp(-(X @ np.asarray(gamma))))
    phi = (1 - sig**2) / sig**2
    y = rng.beta(mu * phi, (1 - mu) * phi)
    return Dataset(y, cols)


@pytest.fixture
def synth():
    return synthetic()


def fake_fit(mu, sigma, r, s, loglik=0.0, eta=None):
    """A FitResult carrying only what the criteria read."""
    mu = np.asarray(mu, float)
    n = mu.size
    spec = ModelSpec(tuple(f"m{i}" for i in range(r - 1)), tuple(f"d{i}" for i in range(s - 1)))
    eta = np.log(mu / (1 - mu)) if eta is None else np.asarray(eta, float)
    sigma = np.broadcast_to(np.asarray(sigma, float), (n,)).copy()
    return FitResult(spec, np.zeros(r), np.zeros(s), loglik, mu, sigma,
                     eta, np.zeros(n), None, True, 0, 0.0)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran in this session."""
    try:
        import test_acceptance
    except ImportError:
        return
    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
