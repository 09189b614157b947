import numpy as np
import pandas as pd
import pytest

from donorgraph.panel import StreamflowPanel

# criterion number -> (status, detail), filled by test_acceptance.py
ACCEPTANCE: dict = {}


def random_spd(rng, p, n=None):
    """Sample correlation matrix of ``n`` Gaussian draws (well conditioned for n >> p)."""
    n = n or 4 * p + 10
    x = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    s = np.cov(x, rowvar=False)
    d = np.sqrt(np.diag(s))
    s = s / np.outer(d, d)
    return (s + s.T) / 2


def chain_precision(p, rho):
    """Precision of a stationary AR(1) chain with unit innovations scaled to unit variance."""
    theta = np.diag(np.r_[1.0, [1 + rho**2] * (p - 2), 1.0]) / (1 - rho**2)
    for i in range(p - 1):
        theta[i, i + 1] = theta[i + 1, i] = -rho / (1 - rho**2)
    return theta


def chain_panel(p=10, n=5000, rho=0.9, seed=7, start="1951-01-01"):
    rng = np.random.default_rng(seed)
    x = rng.multivariate_normal(np.zeros(p), np.linalg.inv(chain_precision(p, rho)), size=n)
    q = np.expm1(4.0 + 0.5 * x)
    ts = np.arange(np.datetime64(start), np.datetime64(start) + n)
    return StreamflowPanel(ts, tuple(f"G{i}" for i in range(p)), q)


def write_panel_csv(panel, path):
    df = pd.DataFrame(panel.values, columns=list(panel.gauge_ids))
    df.insert(0, "date", pd.DatetimeIndex(panel.timestamps).strftime("%Y-%m-%d"))
    df.to_csv(path, index=False, float_format="%.10g")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    def record(n, status, detail=""):
        ACCEPTANCE[n] = (status, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status:4s} {detail}")
