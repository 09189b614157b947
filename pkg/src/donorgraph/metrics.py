"""Goodness-of-fit metrics.

``r_squared`` and ``nse`` are the usual squared Pearson correlation and
Nash-Sutcliffe efficiency. ``score_and_error`` turns per-gauge R^2 into the
thresholded score / error pair used for model selection, and
``graph_score`` does the same with NSE for removable gauges.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.7


def _pair(obs, est):
    obs = np.asarray(obs, dtype=float).ravel()
    est = np.asarray(est, dtype=float).ravel()
    if obs.shape != est.shape:
        raise ValueError(f"length mismatch: {obs.size} observed vs {est.size} estimated")
    if obs.size < 2:
        raise ValueError("need at least 2 values")
    return obs, est


def r_squared(obs, est) -> float:
    """Squared Pearson correlation between observed and estimated series.

    Raises
    ------
    ValueError
        If either series has zero variance (R^2 is undefined there).
    """
    obs, est = _pair(obs, est)
    do = obs - obs.mean()
    de = est - est.mean()
    so = do @ do
    se = de @ de
    if not so > 0:
        raise ValueError("observed series has zero variance")
    if not se > 0:
        raise ValueError("estimated series has zero variance")
    return float(min((do @ de) ** 2 / (so * se), 1.0))


def nse(obs, est) -> float:
    obs, est = _pair(obs, est)
    do = obs - obs.mean()
    denom = do @ do
    if not denom > 0:
        raise ValueError("observed series has zero variance")
    r = obs - est
    return float(1.0 - (r @ r) / denom)


def rmse(obs, est) -> float:
    obs, est = _pair(obs, est)
    return float(np.sqrt(np.mean((obs - est) ** 2)))


@dataclass
class GaugeScoreReport:
    gauge_ids: list
    per_gauge_r2: list
    per_gauge_score: list
    total_score: float
    error: float
    gamma: float

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "total_score": self.total_score,
            "error": self.error,
            "gauges": [
                {"id": g, "r2": _json_float(r), "score": s}
                for g, r, s in zip(self.gauge_ids, self.per_gauge_r2, self.per_gauge_score)
            ],
        }


def _json_float(x):
    return None if x is None or not np.isfinite(x) else float(x)


def score_and_error(
    obs,
    est,
    gamma: float = DEFAULT_GAMMA,
    target_ids: Optional[Sequence] = None,
    gauge_ids: Optional[Sequence] = None,
) -> GaugeScoreReport:
    """Thresholded R^2 score over target gauges and ``error = (q - score) / q``.

    ``obs`` and ``est`` are aligned ``n x p`` arrays (or panels). Targets
    whose R^2 is undefined (constant or missing estimate) score 0.
    """
    obs_v = np.asarray(getattr(obs, "values", obs), dtype=float)
    est_v = np.asarray(getattr(est, "values", est), dtype=float)
    if obs_v.shape != est_v.shape:
        raise ValueError(f"panels not aligned: {obs_v.shape} vs {est_v.shape}")
    if gauge_ids is None:
        gauge_ids = getattr(obs, "gauge_ids", None) or list(range(obs_v.shape[1]))
    gauge_ids = list(gauge_ids)
    targets = gauge_ids if target_ids is None else list(target_ids)
    if not targets:
        raise ValueError("empty target set")

    r2s, scores = [], []
    for t in targets:
        j = gauge_ids.index(t)
        e = est_v[:, j]
        try:
            if not np.all(np.isfinite(e)):
                raise ValueError("no estimate")
            r2 = r_squared(obs_v[:, j], e)
        except ValueError as exc:
            logger.debug("gauge %s scored 0: %s", t, exc)
            r2 = float("nan")
        r2s.append(r2)
        scores.append(r2 if r2 > gamma else 0.0)
    q = len(targets)
    total = float(sum(scores))
    return GaugeScoreReport(
        gauge_ids=targets,
        per_gauge_r2=r2s,
        per_gauge_score=scores,
        total_score=total,
        error=(q - total) / q,
        gamma=gamma,
    )


def graph_score(nse_by_rank: Sequence[float], gamma: float = DEFAULT_GAMMA) -> float:
    """Sum of the NSE values above ``gamma``, in removal-rank order."""
    return float(sum(v for v in nse_by_rank if v is not None and v > gamma))
