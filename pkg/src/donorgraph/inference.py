"""Regression coefficients, per-target OLS and single-donor transfer methods.

Coefficient matrices follow the convention ``Z_hat = Z @ A``: column ``j``
holds the weights used to predict gauge ``j`` and ``A[j, j] == 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .graphs import Graph
from .panel import RCOND_MIN, LogPanel, reciprocal_condition

logger = logging.getLogger(__name__)


class DonorError(ValueError):
    """A target cannot be regressed on its donor set."""


# ---------------------------------------------------------------------------
# coefficient matrices


def coeffs_from_precision(theta) -> np.ndarray:
    """``a_ij = -theta_ij / theta_jj`` for ``i != j``, zero diagonal."""
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    d = np.diag(theta)
    if np.any(d <= 0):
        raise ValueError("precision matrix has a non-positive diagonal entry")
    a = -theta / d[None, :]
    np.fill_diagonal(a, 0.0)
    return a + 0.0


def coeffs_from_covariance(s, j: int) -> np.ndarray:
    """Regression weights of column ``j`` on the others, ``S11^-1 s12``.

    Returns a length-``p`` vector with entry ``j`` set to zero so it can be
    dropped into a coefficient matrix column.
    """
    s = np.asarray(s, dtype=float)
    p = s.shape[0]
    rest = np.array([i for i in range(p) if i != j])
    s11 = s[np.ix_(rest, rest)]
    s12 = s[rest, j]
    if reciprocal_condition(s11) < RCOND_MIN:
        raise linalg.LinAlgError(f"covariance without gauge {j} is singular")
    alpha = np.zeros(p)
    alpha[rest] = linalg.solve(s11, s12, assume_a="pos")
    return alpha


def predict_z(z, a) -> np.ndarray:
    z = np.asarray(getattr(z, "values", z), dtype=float)
    a = np.asarray(a, dtype=float)
    if z.shape[1] != a.shape[0] or a.shape[0] != a.shape[1]:
        raise ValueError(f"cannot apply {a.shape} coefficients to {z.shape[1]} columns")
    return z @ a


# ---------------------------------------------------------------------------
# per-target OLS in log space


@dataclass
class OlsModel:
    """``Y_target = intercept + sum(slopes * Y_donors)`` in log space."""

    target: str
    donors: list
    intercept: float
    slopes: np.ndarray
    residual_variance: float = float("nan")

    def __post_init__(self):
        self.slopes = np.asarray(self.slopes, dtype=float)
        if self.slopes.shape != (len(self.donors),):
            raise ValueError("one slope per donor required")
        if self.target in self.donors:
            raise ValueError("a gauge cannot be its own donor")

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "donors": list(self.donors),
            "intercept": float(self.intercept),
            "slopes": [float(b) for b in self.slopes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OlsModel":
        return cls(d["target"], list(d["donors"]), d["intercept"], d["slopes"])


def _index(ids: Sequence[str], j) -> int:
    if isinstance(j, (int, np.integer)):
        return int(j)
    return list(ids).index(j)


def fit_ols_donors(y_train: LogPanel, g: Graph, j) -> OlsModel:
    """Least-squares fit of target ``j`` on its graph neighbours plus intercept."""
    ids = list(y_train.gauge_ids)
    jj = _index(ids, j)
    donors = g.neighbors(jj)
    if not donors:
        raise DonorError(f"gauge {ids[jj]} has no donors in the graph")
    y = y_train.values[:, jj]
    x = y_train.values[:, donors]
    n = y.size
    if n <= len(donors) + 1:
        raise DonorError(
            f"gauge {ids[jj]}: {n} rows are too few for {len(donors)} donors"
        )
    design = np.column_stack([np.ones(n), x])
    gram = design.T @ design
    if reciprocal_condition(gram) < RCOND_MIN:
        w, v = np.linalg.eigh(gram)
        null = np.abs(v[1:, 0]) > 1e-6
        culprits = [ids[d] for d, bad in zip(donors, null) if bad]
        raise DonorError(
            f"gauge {ids[jj]}: collinear donor design ({', '.join(culprits) or 'constant donor'})"
        )
    coef = linalg.cho_solve(linalg.cho_factor(gram, lower=True), design.T @ y)
    resid = y - design @ coef
    dof = max(n - design.shape[1], 1)
    return OlsModel(
        target=ids[jj],
        donors=[ids[d] for d in donors],
        intercept=float(coef[0]),
        slopes=coef[1:],
        residual_variance=float(resid @ resid / dof),
    )


def fit_ols_graph(y_train: LogPanel, g: Graph) -> dict:
    """OLS models for every non-isolated gauge, keyed by gauge id."""
    models = {}
    for j, gid in enumerate(y_train.gauge_ids):
        if g.neighbors(j):
            models[gid] = fit_ols_donors(y_train, g, j)
    return models


def predict_ols(models, y: LogPanel) -> LogPanel:
    """Apply fitted models to a log panel.

    Output columns follow ``y.gauge_ids``; gauges without a model are NaN.
    """
    if isinstance(models, dict):
        models = list(models.values())
    ids = list(y.gauge_ids)
    out = np.full(y.values.shape, np.nan)
    for m in models:
        missing = [d for d in m.donors if d not in ids]
        if missing:
            raise KeyError(f"donor column(s) missing for {m.target}: {', '.join(missing)}")
        cols = [ids.index(d) for d in m.donors]
        out[:, ids.index(m.target)] = m.intercept + y.values[:, cols] @ m.slopes
    return LogPanel(y.timestamps, y.gauge_ids, out)


# ---------------------------------------------------------------------------
# single-donor transfer baselines


TRANSFER_KINDS = ("DAR", "SM", "SMS", "REG")


@dataclass(frozen=True)
class TransferModel:
    """Single-donor flow transfer.

    ``DAR`` needs ``area_target``/``area_donor``; ``SM`` needs the means;
    ``SMS`` the means and standard deviations; ``REG`` ``intercept`` and
    ``slope``.
    """

    kind: str
    area_target: Optional[float] = None
    area_donor: Optional[float] = None
    mean_target: Optional[float] = None
    mean_donor: Optional[float] = None
    std_target: Optional[float] = None
    std_donor: Optional[float] = None
    intercept: Optional[float] = None
    slope: Optional[float] = None

    def __post_init__(self):
        if self.kind not in TRANSFER_KINDS:
            raise ValueError(f"unknown transfer kind {self.kind!r}")
        need = {
            "DAR": ("area_target", "area_donor"),
            "SM": ("mean_target", "mean_donor"),
            "SMS": ("mean_target", "mean_donor", "std_target", "std_donor"),
            "REG": ("intercept", "slope"),
        }[self.kind]
        absent = [n for n in need if getattr(self, n) is None]
        if absent:
            raise ValueError(f"{self.kind} requires {', '.join(absent)}")
        if self.kind == "DAR" and not (self.area_target > 0 and self.area_donor > 0):
            raise ValueError("drainage areas must be positive")
        if self.kind == "SM" and self.mean_donor == 0:
            raise ValueError("donor mean flow is zero")
        if self.kind == "SMS" and not (self.std_donor > 0 and self.std_target > 0):
            raise ValueError("standard deviations must be positive")

    @classmethod
    def fit(cls, kind: str, q_target, q_donor, area_target=None, area_donor=None) -> "TransferModel":
        """Estimate the parameters ``kind`` needs from paired training flows."""
        q_target = np.asarray(q_target, dtype=float)
        q_donor = np.asarray(q_donor, dtype=float)
        if kind == "DAR":
            return cls(kind, area_target=area_target, area_donor=area_donor)
        if kind == "SM":
            return cls(kind, mean_target=q_target.mean(), mean_donor=q_donor.mean())
        if kind == "SMS":
            return cls(
                kind,
                mean_target=q_target.mean(),
                mean_donor=q_donor.mean(),
                std_target=q_target.std(ddof=1),
                std_donor=q_donor.std(ddof=1),
            )
        if kind == "REG":
            slope, intercept = np.polyfit(q_donor, q_target, 1)
            return cls(kind, intercept=float(intercept), slope=float(slope))
        raise ValueError(f"unknown transfer kind {kind!r}")


def transfer_baseline(model: TransferModel, q_donor) -> np.ndarray:
    q = np.asarray(q_donor, dtype=float)
    if model.kind == "DAR":
        return model.area_target / model.area_donor * q
    if model.kind == "SM":
        return model.mean_target / model.mean_donor * q
    if model.kind == "SMS":
        out = model.std_target / model.std_donor * (q - model.mean_donor) + model.mean_target
    else:
        out = model.intercept + model.slope * q
    neg = out < 0
    if neg.any():
        logger.info("%s transfer clamped %d negative flow(s) to 0", model.kind, int(neg.sum()))
        out = np.where(neg, 0.0, out)
    return out
