"""Undirected gauge graphs.

Graphs come from thresholding a precision matrix, from geographic or
correlation neighbourhoods (the single-donor baselines), and from Pareto
filtering of (edge count, error) samples.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

#: Mean Earth radius (km) used for great-circle distances.
EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..p-1``.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``.
    """

    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        clean = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.p - 1}")
            clean.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def full(cls, p: int) -> "Graph":
        return cls(p, frozenset((i, j) for i in range(p) for j in range(i + 1, p)))

    @classmethod
    def empty(cls, p: int) -> "Graph":
        return cls(p)

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        adj = np.asarray(adj, dtype=bool)
        adj = adj | adj.T
        iu, ju = np.nonzero(np.triu(adj, 1))
        return cls(adj.shape[0], frozenset(zip(iu.tolist(), ju.tolist())))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def max_edges(self) -> int:
        return (self.p * self.p - self.p) // 2

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    def neighbors(self, j: int) -> list[int]:
        """Neighbours of ``j`` in ascending order (the donor order)."""
        return sorted([b if a == j else a for a, b in self.edges if j in (a, b)])

    def degree(self) -> np.ndarray:
        return self.adjacency().sum(axis=0)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def key(self) -> bytes:
        return np.packbits(np.triu(self.adjacency(), 1)).tobytes()

    def to_dict(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.sorted_edges()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        return cls(int(d["p"]), frozenset(tuple(e) for e in d["edges"]))

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ParetoPoint:
    """One (lambda, edge budget) sample of the model-selection grid."""

    edges_k: int
    error_val: float
    lam: float
    tau: float
    graph: Optional[Graph] = None
    budget: Optional[int] = None

    def to_dict(self, with_graph: bool = False) -> dict:
        d = {"k": self.edges_k, "error": self.error_val, "lambda": self.lam, "tau": self.tau}
        if self.budget is not None:
            d["budget"] = self.budget
        if with_graph and self.graph is not None:
            d["graph"] = self.graph.to_dict()
        return d


def _offdiag_magnitudes(theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    iu, ju = np.triu_indices(theta.shape[0], 1)
    return iu, ju, np.abs(theta[iu, ju])


def threshold_graph(theta, tau: float) -> Graph:
    """Edges where ``|theta_ij| > tau`` (``i != j``)."""
    arr = np.asarray(getattr(theta, "theta", theta), dtype=float)
    iu, ju, mag = _offdiag_magnitudes(arr)
    keep = mag > tau
    return Graph(arr.shape[0], frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


def tau_for_edge_budget(theta, k: int) -> float:
    """Smallest candidate threshold leaving at most ``k`` edges.

    Candidates are 0 and the distinct off-diagonal magnitudes. Ties at the
    cut can leave fewer than ``k`` edges.
    """
    _, _, mag = _offdiag_magnitudes(theta)
    if not 0 <= k <= mag.size:
        raise ValueError(f"edge budget {k} outside 0..{mag.size}")
    if np.count_nonzero(mag > 0) <= k:
        return 0.0
    desc = np.sort(mag)[::-1]
    return float(desc[k])


def haversine_km(lat1, lon1, lat2, lon2) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def _union_of_best(score: np.ndarray, m: int) -> Graph:
    # score[i, j]: smaller is better; ties fall back to ascending index
    p = score.shape[0]
    if not 1 <= m < p:
        raise ValueError(f"donors per target must be in 1..{p - 1}, got {m}")
    edges = set()
    for i in range(p):
        others = [j for j in range(p) if j != i]
        others.sort(key=lambda j: (score[i, j], j))
        for j in others[:m]:
            edges.add((min(i, j), max(i, j)))
    return Graph(p, frozenset(edges))


def distance_graph(meta: Sequence, m: int) -> Graph:
    """Join every gauge to its ``m`` nearest gauges (great-circle distance)."""
    missing = [getattr(g, "nwsli", str(i)) for i, g in enumerate(meta) if not g.has_coordinates]
    if missing:
        raise ValueError(f"missing coordinates for: {', '.join(missing)}")
    p = len(meta)
    d = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1, p):
            d[i, j] = d[j, i] = haversine_km(
                meta[i].latitude, meta[i].longitude, meta[j].latitude, meta[j].longitude
            )
    return _union_of_best(d, m)


def correlation_graph(s, m: int) -> Graph:
    """Join every gauge to its ``m`` most correlated gauges (by ``|s_ij|``)."""
    s = np.asarray(s, dtype=float)
    return _union_of_best(-np.abs(s), m)


def constrain_roles(
    g: Graph,
    donors: Iterable[int] = (),
    targets: Iterable[int] = (),
) -> Graph:
    """Drop donor-donor and target-target edges."""
    donors, targets = set(donors), set(targets)
    both = donors & targets
    if both:
        raise ValueError(f"vertices cannot be both donor and target: {sorted(both)}")
    if not donors and not targets:
        return g
    keep = frozenset(
        (i, j)
        for i, j in g.edges
        if not ({i, j} <= donors or {i, j} <= targets)
    )
    return Graph(g.p, keep)


def pareto_front(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated points under minimisation of (edges, error).

    Points with a non-finite error (failed fits) are ignored. Duplicated
    (edges, error) pairs collapse to the point with the smallest
    lambda, then smallest tau. Output is ordered by edge count.
    """
    ordered = sorted(
        (q for q in points if math.isfinite(q.error_val)),
        key=lambda q: (q.edges_k, q.error_val, q.lam, q.tau),
    )
    front = []
    best = math.inf
    last_k = None
    for q in ordered:
        if q.edges_k == last_k:
            continue  # only the first (lowest error) point per edge count can survive
        last_k = q.edges_k
        if q.error_val < best:
            front.append(q)
            best = q.error_val
    return front
