"""Command-line pipeline: fetch -> prepare -> sgm -> infer -> baselines -> remove -> report.

Every subcommand reads and writes flat files in one output directory and
records its resolved configuration there as ``<command>.config``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 computation failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg

from . import nwis
from .glasso import GlassoError, SolverSettings
from .graphs import Graph, correlation_graph, distance_graph
from .inference import (
    DonorError,
    TRANSFER_KINDS,
    TransferModel,
    fit_ols_graph,
    predict_ols,
    transfer_baseline,
)
from .metrics import DEFAULT_GAMMA, nse, r_squared, rmse, score_and_error
from .panel import (
    GaugeMetadata,
    PanelError,
    back_transform,
    empirical_covariance,
    load_metadata,
    load_panel,
    log_transform,
    metadata_for,
    split,
    standardize,
    write_metadata,
)
from .rg import run_rg, removal_report
from .sgm import SgmConfig, SgmResult, best_point, run_sgm, select_graph

logger = logging.getLogger("donorgraph")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_COMPUTE = 0, 1, 2, 3

SGM_RESULT = "sgm_result.json"
PARETO_CSV = "pareto.csv"
SAMPLES_CSV = "samples.csv"
INFER_METRICS = "infer_metrics.json"
BASELINE_GRAPHS = "baseline_graphs.json"
BASELINE_CSV = "baselines.csv"
TRANSFER_CSV = "transfer.csv"
REMOVAL_PLANS = "removal_plans.json"
REMOVAL_CSV = "removal_scores.csv"


class ConfigError(ValueError):
    pass


class MissingArtifact(FileNotFoundError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    panel: Optional[str] = None  # default: <out>/panel.csv
    metadata: Optional[str] = None  # default: <out>/metadata.csv, else packaged table
    out: str = "out"
    seed: int = 0
    threads: int = 0  # 0 -> os.cpu_count()
    # model selection
    lambda_min: float = 0.01
    lambda_max: float = 0.10
    res: int = 30
    k_min: int = 10
    k_max: Optional[int] = None
    gamma: float = DEFAULT_GAMMA  # R^2 threshold for model selection and test error
    gamma_nse: float = DEFAULT_GAMMA  # NSE threshold for the removal graph score
    donor_set: tuple = ()
    target_set: tuple = ()
    exhaustive: bool = False
    tol: float = 1e-6
    max_iter: int = 200
    penalize_diagonal: bool = True
    # inference / removal
    k_targets: tuple = ()  # empty -> lowest-error front graph
    donors: int = 3  # baselines use m = 1..donors
    nse_threshold: float = 0.8  # reporting cut for "well inferred" gauges
    # fetch
    sites: Optional[str] = None
    start: str = "1951-01-01"
    end: str = "1980-12-31"
    endpoint: str = nwis.DV_URL
    site_endpoint: str = nwis.SITE_URL
    timeout: float = 60.0

    def __post_init__(self):
        if self.start > self.end:
            raise ConfigError(f"start {self.start} is after end {self.end}")
        for d in (self.start, self.end):
            try:
                pd.Timestamp(d)
            except ValueError as exc:
                raise ConfigError(f"bad date {d!r}") from exc
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")
        if self.donors < 1:
            raise ConfigError("donors must be >= 1")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        try:
            self.sgm_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def panel_path(self) -> Path:
        return Path(self.panel) if self.panel else self.out_dir / "panel.csv"

    @property
    def n_threads(self) -> int:
        return self.threads or os.cpu_count() or 1

    def solver(self) -> SolverSettings:
        return SolverSettings(self.tol, self.max_iter, self.penalize_diagonal)

    def sgm_config(self) -> SgmConfig:
        return SgmConfig(
            lambda_min=self.lambda_min,
            lambda_max=self.lambda_max,
            res=self.res,
            k_min=self.k_min,
            k_max=self.k_max,
            gamma=self.gamma,
            donor_set=self.donor_set,
            target_set=self.target_set,
            seed=self.seed,
            exhaustive=self.exhaustive,
            settings=self.solver(),
        )

    def dump(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                v = ""
            elif isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, raw):
    f = {f.name: f for f in dataclasses.fields(RunConfig)}.get(name)
    if f is None:
        raise ConfigError(f"unknown config key {name!r}")
    default = f.default
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if name in ("k_max", "panel", "metadata", "sites"):
            if raw == "":
                return None
            return int(raw) if name == "k_max" else raw
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            return tuple(int(x) for x in items) if name == "k_targets" else tuple(items)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MissingArtifact(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        out[k] = _coerce(k, v)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _coerce(f.name, v)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# file helpers


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=1, allow_nan=False) + "\n")


def read_json(path: Path):
    if not path.exists():
        raise MissingArtifact(f"missing prerequisite {path}")
    return json.loads(path.read_text())


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None or (isinstance(v, float) and not math.isfinite(v)) else v for v in r])


def _slug(label: str) -> str:
    return label.lower().replace("(", "_").replace(")", "")


def _load_splits(cfg: RunConfig):
    path = cfg.panel_path
    if not path.exists():
        raise MissingArtifact(f"missing prerequisite {path} (run fetch or pass --panel)")
    panel = load_panel(path)
    return split(panel, cfg.seed)


def _load_metadata(cfg: RunConfig) -> list[GaugeMetadata]:
    if cfg.metadata:
        if not Path(cfg.metadata).exists():
            raise MissingArtifact(f"missing metadata file {cfg.metadata}")
        return load_metadata(cfg.metadata)
    local = cfg.out_dir / "metadata.csv"
    return load_metadata(local if local.exists() else None)


def _load_sgm(cfg: RunConfig) -> SgmResult:
    return SgmResult.from_dict(read_json(cfg.out_dir / SGM_RESULT))


def _sgm_points(cfg: RunConfig, result: SgmResult) -> list[tuple[str, object]]:
    pts = [select_graph(result, k) for k in cfg.k_targets] if cfg.k_targets else [best_point(result)]
    out, seen = [], set()
    for pt in pts:
        label = f"SGM({pt.edges_k})"
        if label not in seen:
            seen.add(label)
            out.append((label, pt))
    return out


def evaluate_graph(splits, g: Graph, gamma: float, targets=None) -> dict:
    """Fit donor OLS models on the training rows and score them on the test rows."""
    ids = list(splits.panel.gauge_ids)
    models = fit_ols_graph(log_transform(splits.train_panel), g)
    test = splits.test_panel
    q_hat = back_transform(predict_ols(models, log_transform(test)).values)
    q_obs = np.asarray(test.values)
    rep = score_and_error(q_obs, q_hat, gamma, targets or None, ids)
    score = dict(zip(rep.gauge_ids, rep.per_gauge_score))
    rows = []
    for j, gid in enumerate(ids):
        e = q_hat[:, j]
        ok = gid in models
        rows.append(
            {
                "id": gid,
                "donors": models[gid].donors if ok else [],
                "r2": _safe(r_squared, q_obs[:, j], e) if ok else None,
                "nse": _safe(nse, q_obs[:, j], e) if ok else None,
                "score": score.get(gid),
                "rmse": rmse(q_obs[:, j], e) if ok else None,
            }
        )
    return {"models": models, "q_hat": q_hat, "q_obs": q_obs, "report": rep, "gauges": rows}


def _safe(fn, *a):
    try:
        return fn(*a)
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# subcommands


def _read_sites(cfg: RunConfig) -> list[tuple[Optional[str], str]]:
    """``(label, staid)`` pairs from the sites file or the packaged table."""
    if cfg.sites is None:
        return [(m.nwsli, m.usgs_staid) for m in load_metadata()]
    try:
        text = Path(cfg.sites).read_text()
    except OSError as exc:
        raise MissingArtifact(f"cannot read sites file {cfg.sites}: {exc}") from exc
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [x.strip() for x in line.split(",")]
        label, staid = (None, parts[0]) if len(parts) == 1 else (parts[0], parts[1])
        if not staid.isdigit():
            raise ConfigError(f"invalid USGS station id {staid!r}")
        out.append((label, staid))
    return out


def cmd_fetch(cfg: RunConfig, session=None) -> None:
    sites = _read_sites(cfg)
    if not sites:
        raise ConfigError("empty site list")
    known = {m.usgs_staid: m for m in load_metadata()}
    series = nwis.fetch_daily_values(
        [s for _, s in sites], cfg.start, cfg.end, cfg.endpoint, cfg.timeout, session=session
    )
    no_area = [s for _, s in sites if s in series and (s not in known or known[s].drainage_area is None)]
    extra = {}
    if no_area:
        try:
            extra = nwis.fetch_site_info(no_area, cfg.site_endpoint, cfg.timeout, session=session)
        except nwis.FetchError as exc:
            logger.warning("drainage areas unavailable: %s", exc)

    days = pd.date_range(cfg.start, cfg.end, freq="D")
    frame = {"date": days.strftime("%Y-%m-%d")}
    meta = []
    for label, staid in sites:
        if staid not in series:
            logger.warning("site %s returned no data in %s..%s; skipped", staid, cfg.start, cfg.end)
            continue
        ss = series[staid]
        ref = known.get(staid)
        name = label or (ref.nwsli if ref else staid)
        frame[name] = ss.flow_cms.reindex(days).to_numpy()
        area = ref.drainage_area if ref and ref.drainage_area else (extra.get(staid) or {}).get("area_km2")
        lat, lon = ss.latitude, ss.longitude
        if lat is None and staid in extra:
            lat, lon = extra[staid]["lat"], extra[staid]["lon"]
        meta.append(GaugeMetadata(name, staid, lat, lon, area))
    if not meta:
        raise nwis.FetchError(f"no site returned data from {cfg.endpoint}")
    df = pd.DataFrame(frame)
    gaps = int(df.iloc[:, 1:].isna().any(axis=1).sum())
    if gaps:
        logger.warning("%d of %d days have at least one missing value", gaps, len(df))
    df.to_csv(cfg.out_dir / "panel.csv", index=False, float_format="%.10g", na_rep="")
    write_metadata(meta, cfg.out_dir / "metadata.csv")
    logger.info("fetched %d sites x %d days", len(meta), len(df))


def cmd_prepare(cfg: RunConfig) -> None:
    splits = _load_splits(cfg)
    ts = splits.panel.timestamps

    def span(idx):
        d = ts[idx]
        return {"rows": int(len(idx)), "first": str(d.min()), "last": str(d.max())}

    write_json(cfg.out_dir / "splits.json", {"seed": cfg.seed, **splits.to_dict()})
    write_json(
        cfg.out_dir / "panel_summary.json",
        {
            "n": splits.panel.n,
            "p": splits.panel.p,
            "gauge_ids": list(splits.panel.gauge_ids),
            "first": str(ts.min()),
            "last": str(ts.max()),
            "train": span(splits.train),
            "val": span(splits.val),
            "test": span(splits.test),
        },
    )


def cmd_sgm(cfg: RunConfig) -> None:
    splits = _load_splits(cfg)
    result = run_sgm(splits, cfg.sgm_config(), threads=cfg.n_threads)
    write_json(cfg.out_dir / SGM_RESULT, result.to_dict())
    cols = ["k", "error", "lambda", "tau"]
    write_csv(cfg.out_dir / PARETO_CSV, cols, ([q.edges_k, q.error_val, q.lam, q.tau] for q in result.front))
    write_csv(
        cfg.out_dir / SAMPLES_CSV,
        cols + ["budget"],
        ([q.edges_k, q.error_val, q.lam, q.tau, q.budget] for q in result.samples),
    )


def cmd_infer(cfg: RunConfig) -> None:
    splits = _load_splits(cfg)
    result = _load_sgm(cfg)
    if tuple(result.gauge_ids) != tuple(splits.panel.gauge_ids):
        raise ConfigError(f"{SGM_RESULT} was computed for different gauges than {cfg.panel_path}")
    dates = [str(d) for d in splits.panel.timestamps[splits.test]]
    entries = []
    for label, pt in _sgm_points(cfg, result):
        ev = evaluate_graph(splits, pt.graph, cfg.gamma, list(cfg.target_set))
        slug = _slug(label)
        ids = list(splits.panel.gauge_ids)
        rows = (
            [d, gid, ev["q_obs"][i, j], ev["q_hat"][i, j]]
            for j, gid in enumerate(ids)
            for i, d in enumerate(dates)
        )
        write_csv(cfg.out_dir / f"predictions_{slug}.csv", ["date", "gauge", "observed", "predicted"], rows)
        write_json(cfg.out_dir / f"models_{slug}.json", [m.to_dict() for m in ev["models"].values()])
        entries.append(
            {
                "label": label,
                "edges": pt.edges_k,
                "lambda": pt.lam,
                "tau": pt.tau,
                "validation_error": pt.error_val,
                "test_error": ev["report"].error,
                "total_score": ev["report"].total_score,
                "gamma": cfg.gamma,
                "graph": pt.graph.to_dict(),
                "gauges": ev["gauges"],
            }
        )
    write_json(cfg.out_dir / INFER_METRICS, entries)


def baseline_graphs(cfg: RunConfig, splits) -> list[tuple[str, int, Graph]]:
    ids = list(splits.panel.gauge_ids)
    s_train = empirical_covariance(standardize(log_transform(splits.train_panel)))
    m_max = min(cfg.donors, len(ids) - 1)
    try:
        meta = metadata_for(ids, _load_metadata(cfg))
        if not all(m.has_coordinates for m in meta):
            raise PanelError("missing coordinates")
    except PanelError as exc:
        logger.warning("distance baselines skipped: %s", exc)
        meta = None
    out = []
    for m in range(1, m_max + 1):
        if meta is not None:
            out.append((f"Dist({m})", m, distance_graph(meta, m)))
        out.append((f"Corr({m})", m, correlation_graph(s_train, m)))
    return out


def _transfer_rows(cfg: RunConfig, splits) -> list:
    """Single-donor transfers from each gauge's most correlated neighbour."""
    ids = list(splits.panel.gauge_ids)
    s_train = empirical_covariance(standardize(log_transform(splits.train_panel)))
    g1 = correlation_graph(s_train, 1)
    try:
        areas = {m.nwsli: m.drainage_area for m in metadata_for(ids, _load_metadata(cfg))}
    except PanelError:
        areas = {}
    q_tr, q_te = np.asarray(splits.train_panel.values), np.asarray(splits.test_panel.values)
    rows = []
    for j, gid in enumerate(ids):
        nb = g1.neighbors(j)
        d = max(nb, key=lambda i: (abs(s_train[i, j]), -i))
        row = [gid, ids[d]]
        for kind in TRANSFER_KINDS:
            try:
                tm = TransferModel.fit(kind, q_tr[:, j], q_tr[:, d], areas.get(gid), areas.get(ids[d]))
                row.append(nse(q_te[:, j], transfer_baseline(tm, q_te[:, d])))
            except (ValueError, TypeError):
                row.append(None)
        rows.append(row)
    return rows


def cmd_baselines(cfg: RunConfig) -> None:
    splits = _load_splits(cfg)
    targets = list(cfg.target_set)
    graphs = baseline_graphs(cfg, splits)
    sgm_path = cfg.out_dir / SGM_RESULT
    result = _load_sgm(cfg) if sgm_path.exists() else None
    rows, gdump = [], {}
    for label, m, g in graphs:
        ev = evaluate_graph(splits, g, cfg.gamma, targets)
        rows.append([label.split("(")[0], m, g.n_edges, ev["report"].error])
        gdump[label] = {"m": m, "edges": g.n_edges, "graph": g.to_dict()}
        if result is not None:
            pt = select_graph(result, g.n_edges)
            ev_s = evaluate_graph(splits, pt.graph, cfg.gamma, targets)
            rows.append(["SGM", m, pt.edges_k, ev_s["report"].error])
            gdump[f"SGM({pt.edges_k})"] = {
                "matched_to": label, "edges": pt.edges_k, "lambda": pt.lam, "tau": pt.tau,
                "graph": pt.graph.to_dict(),
            }
    write_json(cfg.out_dir / BASELINE_GRAPHS, gdump)
    write_csv(cfg.out_dir / BASELINE_CSV, ["method", "m", "edges", "test_error"], rows)
    write_csv(
        cfg.out_dir / TRANSFER_CSV,
        ["gauge", "donor"] + [f"nse_{k.lower()}" for k in TRANSFER_KINDS],
        _transfer_rows(cfg, splits),
    )


def cmd_remove(cfg: RunConfig) -> None:
    splits = _load_splits(cfg)
    ids = list(splits.panel.gauge_ids)
    result = _load_sgm(cfg)
    graphs = [(label, pt.graph) for label, pt in _sgm_points(cfg, result)]
    bpath = cfg.out_dir / BASELINE_GRAPHS
    if bpath.exists():
        for label, d in read_json(bpath).items():
            if not label.startswith("SGM"):
                graphs.append((label, Graph.from_dict(d["graph"])))
    plans, rows = {}, []
    for label, g in graphs:
        ev = evaluate_graph(splits, g, cfg.gamma)
        nse_by = [r["nse"] if r["nse"] is not None else math.nan for r in ev["gauges"]]
        plan = run_rg(nse_by, g, ids)
        score = removal_report(plan, cfg.gamma_nse)
        good = sum(1 for v in plan.ranked if v[2] is not None and v[2] >= cfg.nse_threshold)
        plans[label] = {"edges": g.n_edges, "graph_score": score, **plan.to_dict()}
        rows.append([label, g.n_edges, len(plan.ranked), good, score])
    write_json(cfg.out_dir / REMOVAL_PLANS, plans)
    write_csv(
        cfg.out_dir / REMOVAL_CSV,
        ["graph", "edges", "n_removable", f"n_nse_ge_{cfg.nse_threshold:g}", "graph_score"],
        rows,
    )


REPORT_INPUTS = (SGM_RESULT, INFER_METRICS, REMOVAL_CSV)


def cmd_report(cfg: RunConfig) -> None:
    missing = [str(cfg.out_dir / f) for f in REPORT_INPUTS if not (cfg.out_dir / f).exists()]
    if missing:
        raise MissingArtifact("missing artifact(s): " + ", ".join(missing))
    sgm = read_json(cfg.out_dir / SGM_RESULT)
    infer = read_json(cfg.out_dir / INFER_METRICS)
    removal = pd.read_csv(cfg.out_dir / REMOVAL_CSV)
    baselines = None
    if (cfg.out_dir / BASELINE_CSV).exists():
        baselines = pd.read_csv(cfg.out_dir / BASELINE_CSV)
    summary = {
        "p": sgm["p"],
        "n_samples": sgm["n_samples"],
        "n_failed": sgm["n_failed"],
        "front": [{k: f[k] for k in ("k", "error", "lambda", "tau")} for f in sgm["front"]],
        "inference": [
            {k: e[k] for k in ("label", "edges", "validation_error", "test_error", "total_score")} for e in infer
        ],
        "baselines": None if baselines is None else baselines.to_dict(orient="records"),
        "removal": removal.to_dict(orient="records"),
    }
    write_json(cfg.out_dir / "report.json", summary)

    lines = ["# Run summary", "", f"Gauges: {sgm['p']}  ", f"Grid samples: {sgm['n_samples']} ({sgm['n_failed']} failed)", ""]
    lines += ["## Pareto front", "", "| edges | validation error | lambda | tau |", "|---|---|---|---|"]
    lines += [f"| {f['k']} | {f['error']:.4f} | {f['lambda']:.4g} | {f['tau']:.4g} |" for f in sgm["front"]]
    lines += ["", "## Test-period inference", "", "| graph | edges | test error |", "|---|---|---|"]
    lines += [f"| {e['label']} | {e['edges']} | {e['test_error']:.4f} |" for e in infer]
    if baselines is not None:
        lines += ["", "## Baselines", "", "| method | m | edges | test error |", "|---|---|---|---|"]
        lines += [f"| {r.method} | {r.m} | {r.edges} | {r.test_error:.4f} |" for r in baselines.itertuples()]
    lines += ["", "## Gauge removal", "", "| " + " | ".join(removal.columns) + " |", "|" + "---|" * len(removal.columns)]
    lines += ["| " + " | ".join(f"{v:.4f}" if isinstance(v, float) else str(v) for v in r) + " |"
              for r in removal.itertuples(index=False)]
    (cfg.out_dir / "report.md").write_text("\n".join(lines) + "\n")


COMMANDS = {
    "fetch": cmd_fetch,
    "prepare": cmd_prepare,
    "sgm": cmd_sgm,
    "infer": cmd_infer,
    "baselines": cmd_baselines,
    "remove": cmd_remove,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="flat key = value config file")
    a("--out", help="output directory")
    a("--panel", help="panel CSV (default: <out>/panel.csv)")
    a("--metadata", help="gauge metadata CSV")
    a("--seed", type=int)
    a("--threads", type=int, help="grid worker threads (default: all cores)")
    a("--lambda-min", dest="lambda_min", type=float)
    a("--lambda-max", dest="lambda_max", type=float)
    a("--res", type=int)
    a("--k-min", dest="k_min", type=int)
    a("--k-max", dest="k_max", type=int)
    a("--gamma", type=float, help="R^2 threshold")
    a("--gamma-nse", dest="gamma_nse", type=float, help="NSE threshold for removal scores")
    a("--donors", type=int, help="baseline donors per target, m = 1..N")
    a("--k-target", dest="k_targets", help="comma-separated edge counts to select from the front")
    a("--sites", help="site list file: one STAID or 'label,STAID' per line")
    a("--start", help="first day (YYYY-MM-DD)")
    a("--end", help="last day (YYYY-MM-DD)")
    a("--endpoint", help="daily-values service URL")
    a("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="donorgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).splitlines()[0])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / f"{args.command}.config").write_text(cfg.dump())
        COMMANDS[args.command](cfg)
    except (GlassoError, DonorError, linalg.LinAlgError, OverflowError, FloatingPointError) as exc:
        logger.error("computation failed: %s", exc)
        return EXIT_COMPUTE
    except (OSError, nwis.FetchError) as exc:
        logger.error("%s", exc)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        logger.error("invalid input: %s", exc)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
