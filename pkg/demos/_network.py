"""Synthetic gauge network shared by the demo scripts.

Gauges sit on a small branching river: each gauge's log-flow is driven by
the gauge upstream of it plus local noise, so the true conditional
independence graph is the river tree itself.
"""
import numpy as np

from donorgraph.panel import StreamflowPanel

# child -> parent (upstream -> downstream) for 12 gauges
PARENT = {1: 0, 2: 1, 3: 1, 4: 0, 5: 4, 6: 5, 7: 5, 8: 4, 9: 8, 10: 2, 11: 3}
NAMES = tuple(f"R{i:02d}" for i in range(12))


def true_edges():
    return {(min(c, p), max(c, p)) for c, p in PARENT.items()}


def simulate(n_days=4000, coupling=0.85, seed=0, start="1951-01-01"):
    """Daily flows (m3/s) with a lognormal marginal at every gauge."""
    rng = np.random.default_rng(seed)
    p = len(NAMES)
    x = np.zeros((n_days, p))
    x[:, 0] = rng.standard_normal(n_days)
    for c in sorted(PARENT):
        x[:, c] = coupling * x[:, PARENT[c]] + np.sqrt(1 - coupling**2) * rng.standard_normal(n_days)
    log_q = 3.0 + 0.1 * np.arange(p) + 0.6 * x
    ts = np.arange(np.datetime64(start), np.datetime64(start) + n_days)
    return StreamflowPanel(ts, NAMES, np.expm1(log_q))
