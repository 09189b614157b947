"""Greedy gauge removal.

Repeatedly pick the available gauge with the highest NSE, rank it for
removal, and lock it and its graph neighbours (they become its donors).
Isolated gauges are never removable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .graphs import Graph
from .metrics import DEFAULT_GAMMA, graph_score


@dataclass
class RemovalPlan:
    ranked: list  # (rank, gauge id, nse)
    not_removable: list
    isolated: list = field(default_factory=list)
    graph: Optional[Graph] = None

    @property
    def removed(self) -> list:
        return [g for _, g, _ in self.ranked]

    def to_dict(self) -> dict:
        return {
            "ranked": [
                {"rank": r, "gauge": g, "nse": None if v is None or not math.isfinite(v) else v}
                for r, g, v in self.ranked
            ],
            "not_removable": list(self.not_removable),
        }


def _key(v):
    return -math.inf if v is None or not math.isfinite(v) else v


def run_rg(nse_by_gauge: Sequence[float], g: Graph, gauge_ids: Optional[Sequence] = None) -> RemovalPlan:
    if len(nse_by_gauge) != g.p:
        raise ValueError(f"{len(nse_by_gauge)} NSE values for a graph of {g.p} gauges")
    ids = list(range(g.p)) if gauge_ids is None else list(gauge_ids)
    adj = g.adjacency()
    available = [bool(adj[i].any()) for i in range(g.p)]
    isolated = [ids[i] for i in range(g.p) if not available[i]]

    ranked = []
    while any(available):
        # max NSE; ties go to the lower index
        pick = max((i for i in range(g.p) if available[i]), key=lambda i: (_key(nse_by_gauge[i]), -i))
        ranked.append((len(ranked) + 1, ids[pick], nse_by_gauge[pick]))
        available[pick] = False
        for nb in g.neighbors(pick):
            available[nb] = False

    removed = {gid for _, gid, _ in ranked}
    kept = [gid for gid in ids if gid not in removed]
    return RemovalPlan(ranked=ranked, not_removable=kept, isolated=isolated, graph=g)


def removal_report(plan: RemovalPlan, gamma: float = DEFAULT_GAMMA) -> float:
    return graph_score([v for _, _, v in plan.ranked], gamma)
