"""Graph model selection over a (penalty, edge budget) grid.

For every penalty on a linear grid the training covariance is passed
through the graphical lasso; the estimate is then thresholded to each edge
budget, refitted under the resulting zero pattern, and scored on the
validation rows. The non-dominated (edges, validation error) samples form
the candidate set from which a final graph is picked.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .glasso import GlassoError, SolverSettings, glasso_solve, glasso_solve_constrained
from .graphs import (
    Graph,
    ParetoPoint,
    constrain_roles,
    pareto_front,
    tau_for_edge_budget,
    threshold_graph,
)
from .inference import coeffs_from_precision, predict_z
from .metrics import DEFAULT_GAMMA, score_and_error
from .panel import (
    DataSplits,
    back_transform,
    empirical_covariance,
    inverse_standardize,
    log_transform,
    standardize,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SgmConfig:
    lambda_min: float = 0.01
    lambda_max: float = 0.10
    res: int = 30
    k_min: int = 10
    k_max: Optional[int] = None  # None -> complete graph
    gamma: float = DEFAULT_GAMMA
    donor_set: tuple = ()
    target_set: tuple = ()
    seed: int = 0
    exhaustive: bool = False
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if not 0 <= self.lambda_min <= self.lambda_max:
            raise ValueError("need 0 <= lambda_min <= lambda_max")
        if self.res < 1:
            raise ValueError("res must be >= 1")
        if self.k_min < 0 or (self.k_max is not None and self.k_max < self.k_min):
            raise ValueError("need 0 <= k_min <= k_max")
        overlap = set(self.donor_set) & set(self.target_set)
        if overlap:
            raise ValueError(f"gauges in both donor and target sets: {sorted(overlap)}")
        object.__setattr__(self, "donor_set", tuple(self.donor_set))
        object.__setattr__(self, "target_set", tuple(self.target_set))

    def k_upper(self, p: int) -> int:
        full = (p * p - p) // 2
        k_max = full if self.k_max is None else self.k_max
        if k_max > full:
            raise ValueError(f"k_max={k_max} exceeds {full} possible edges for p={p}")
        if self.k_min > k_max:
            raise ValueError(f"k_min={self.k_min} exceeds k_max={k_max}")
        return k_max

    def to_dict(self) -> dict:
        d = asdict(self)
        d["donor_set"] = list(self.donor_set)
        d["target_set"] = list(self.target_set)
        return d


def lambda_sequence(config: SgmConfig) -> list[float]:
    if config.res == 1:
        return [float(config.lambda_min)]
    return [float(x) for x in np.linspace(config.lambda_min, config.lambda_max, config.res)]


def grid_size(config: SgmConfig, p: int) -> int:
    """Number of (penalty, budget) samples before graph deduplication."""
    return (config.k_upper(p) - config.k_min + 1) * config.res


@dataclass
class SgmResult:
    samples: list
    front: list
    lambdas: list
    gauge_ids: tuple
    config: SgmConfig
    s_train: np.ndarray
    chosen: list = field(default_factory=list)

    @property
    def p(self) -> int:
        return len(self.gauge_ids)

    @property
    def n_failed(self) -> int:
        return sum(1 for s in self.samples if not math.isfinite(s.error_val))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "gauge_ids": list(self.gauge_ids),
            "config": self.config.to_dict(),
            "lambdas": self.lambdas,
            "n_samples": len(self.samples),
            "n_failed": self.n_failed,
            "samples": [_sample_dict(s) for s in self.samples],
            "front": [s.to_dict(with_graph=True) for s in self.front],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SgmResult":
        cfg = dict(d["config"])
        cfg["settings"] = SolverSettings(**cfg["settings"])
        front = [_point_from_dict(x) for x in d["front"]]
        samples = [_point_from_dict(x) for x in d["samples"]]
        return cls(samples, front, list(d["lambdas"]), tuple(d["gauge_ids"]), SgmConfig(**cfg), None)


def _sample_dict(s: ParetoPoint) -> dict:
    d = s.to_dict()
    if not math.isfinite(s.error_val):
        d["error"] = None
    return d


def _point_from_dict(x: dict) -> ParetoPoint:
    err = x["error"]
    g = Graph.from_dict(x["graph"]) if "graph" in x else None
    return ParetoPoint(
        int(x["k"]),
        float("nan") if err is None else float(err),
        float(x["lambda"]),
        float(x["tau"]),
        g,
        x.get("budget"),
    )


@dataclass(frozen=True, eq=False)
class _Validation:
    s_train: np.ndarray
    z_val: np.ndarray
    val_stats: tuple
    q_val: np.ndarray
    targets: list


def prepare(splits: DataSplits, config: SgmConfig) -> _Validation:
    """Training covariance and standardized validation data.

    Validation z-scores and their inverse use the validation rows' own
    log-space mean and standard deviation.
    """
    z_train = standardize(log_transform(splits.train_panel))
    val = splits.val_panel
    z_val = standardize(log_transform(val))
    ids = list(splits.panel.gauge_ids)
    unknown = [g for g in (*config.donor_set, *config.target_set) if g not in ids]
    if unknown:
        raise ValueError(f"unknown gauge id(s) in role sets: {', '.join(unknown)}")
    targets = list(config.target_set) if config.target_set else ids
    return _Validation(
        s_train=empirical_covariance(z_train),
        z_val=z_val.values,
        val_stats=z_val.stats,
        q_val=np.asarray(val.values),
        targets=targets,
    )


def validation_error(a: np.ndarray, v: _Validation, gamma: float, gauge_ids) -> float:
    z_hat = predict_z(v.z_val, a)
    q_hat = back_transform(inverse_standardize(z_hat, v.val_stats))
    return score_and_error(v.q_val, q_hat, gamma, v.targets, gauge_ids).error


def _run_lambda(r, lam, v, config, k_max, donors, targets, gauge_ids):
    out = []
    try:
        theta_r = glasso_solve(v.s_train, lam, config.settings)
    except GlassoError as exc:
        logger.warning("lambda=%.4g: initial solve failed (%s); all budgets skipped", lam, exc)
        return [(r, k, ParetoPoint(0, math.nan, lam, math.nan, None, k)) for k in range(config.k_min, k_max + 1)]

    cache = {}
    for k in range(config.k_min, k_max + 1):
        tau = tau_for_edge_budget(theta_r, k)
        g = constrain_roles(threshold_graph(theta_r, tau), donors, targets)
        key = g.key()
        if key in cache and not config.exhaustive:
            g, err = cache[key]
        else:
            try:
                th = glasso_solve_constrained(v.s_train, lam, g, config.settings)
                err = validation_error(coeffs_from_precision(th), v, config.gamma, gauge_ids)
            except GlassoError as exc:
                logger.warning("lambda=%.4g k=%d failed: %s", lam, k, exc)
                err = math.nan
            cache[key] = (g, err)
        out.append((r, k, ParetoPoint(g.n_edges, err, lam, tau, g, k)))
    return out


def run_sgm(splits: DataSplits, config: SgmConfig = SgmConfig(), threads: int = 1) -> SgmResult:
    """Sample the grid, score every graph on validation data, keep the front."""
    ids = list(splits.panel.gauge_ids)
    p = len(ids)
    k_max = config.k_upper(p)
    v = prepare(splits, config)
    donors = [ids.index(g) for g in config.donor_set]
    targets = [ids.index(g) for g in config.target_set]
    lambdas = lambda_sequence(config)
    logger.info(
        "SGM: p=%d, %d penalties, budgets %d..%d, %d samples",
        p, len(lambdas), config.k_min, k_max, grid_size(config, p),
    )

    def task(r):
        return _run_lambda(r, lambdas[r], v, config, k_max, donors, targets, ids)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(task, range(len(lambdas))))
    else:
        chunks = [task(r) for r in range(len(lambdas))]

    rows = sorted((row for chunk in chunks for row in chunk), key=lambda t: (t[0], t[1]))
    samples = [pt for _, _, pt in rows]
    ok = [s for s in samples if math.isfinite(s.error_val)]
    if not ok:
        raise GlassoError("every grid point failed")
    front = pareto_front(ok)
    logger.info("SGM: %d/%d samples scored, %d on the front", len(ok), len(samples), len(front))
    return SgmResult(samples, front, lambdas, tuple(ids), config, v.s_train)


def select_graph(result: SgmResult, k_target: int) -> ParetoPoint:
    """Front member whose edge count is closest to ``k_target``."""
    if not result.front:
        raise ValueError("empty Pareto front")
    return min(result.front, key=lambda q: (abs(q.edges_k - k_target), q.error_val, q.edges_k))


def best_point(result: SgmResult) -> ParetoPoint:
    """Lowest validation error on the front (fewest edges on ties)."""
    if not result.front:
        raise ValueError("empty Pareto front")
    return min(result.front, key=lambda q: (q.error_val, q.edges_k))


def refit(s_train, point: ParetoPoint, settings: SolverSettings = SolverSettings()):
    """Constrained precision and coefficient matrix for a selected point."""
    th = glasso_solve_constrained(s_train, point.lam, point.graph, settings)
    return th, coeffs_from_precision(th)


def choose(result: SgmResult, k_targets: Sequence[int]) -> list:
    """Select front graphs near each budget and attach their coefficients."""
    chosen = []
    for k in k_targets:
        pt = select_graph(result, k)
        entry = {"k_target": int(k), "point": pt}
        if result.s_train is not None:
            entry["theta"], entry["coefficients"] = refit(result.s_train, pt, result.config.settings)
        chosen.append(entry)
    result.chosen = chosen
    return chosen
