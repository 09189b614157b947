"""Daily streamflow panels: ingestion, transforms, splits and covariance.

A panel is an ``n x p`` table of daily flows (m3/s) indexed by calendar day
and gauge identifier. The modelling pipeline works on ``Y = log(Q + 1)``
and on its per-gauge z-scores.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg

logger = logging.getLogger(__name__)

#: Reciprocal condition number below which a covariance is treated as singular.
RCOND_MIN = 1e-12


class PanelError(ValueError):
    """Raised for malformed or unusable panel input."""


@dataclass(frozen=True, eq=False)
class StreamflowPanel:
    """Daily flows for ``p`` gauges over ``n`` consecutive records.

    Attributes
    ----------
    timestamps : ndarray of datetime64[D], shape (n,)
        Strictly increasing calendar dates.
    gauge_ids : tuple of str
        Unique gauge identifiers, one per column.
    values : ndarray, shape (n, p)
        Flows in m3/s, all finite and non-negative.
    """

    timestamps: np.ndarray
    gauge_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[D]")
        vals = np.asarray(self.values, dtype=float)
        ids = tuple(str(g) for g in self.gauge_ids)
        if vals.ndim != 2:
            raise PanelError("values must be a 2-D array")
        n, p = vals.shape
        if ts.shape != (n,):
            raise PanelError(f"expected {n} timestamps, got {ts.shape[0]}")
        if len(ids) != p:
            raise PanelError(f"expected {p} gauge ids, got {len(ids)}")
        if len(set(ids)) != p:
            raise PanelError("gauge ids must be unique")
        if n < 2 or p < 2:
            raise PanelError(f"panel needs n >= 2 and p >= 2, got n={n}, p={p}")
        if n > 1 and np.any(np.diff(ts).astype(np.int64) <= 0):
            raise PanelError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise PanelError("panel contains missing or non-finite values")
        if np.any(vals < 0):
            raise PanelError("flows must be non-negative")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "gauge_ids", ids)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def take_rows(self, rows) -> "StreamflowPanel":
        rows = np.asarray(rows)
        return StreamflowPanel(self.timestamps[rows], self.gauge_ids, self.values[rows])

    def column(self, gauge_id: str) -> np.ndarray:
        return self.values[:, self.gauge_ids.index(gauge_id)]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.values, columns=list(self.gauge_ids))
        df.insert(0, "date", pd.to_datetime(self.timestamps).strftime("%Y-%m-%d"))
        return df


@dataclass(frozen=True, eq=False)
class LogPanel:
    """``Y = log(Q + 1)`` with the same layout as the source panel."""

    timestamps: np.ndarray
    gauge_ids: tuple
    values: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def take_rows(self, rows) -> "LogPanel":
        rows = np.asarray(rows)
        return LogPanel(self.timestamps[rows], self.gauge_ids, self.values[rows])


@dataclass(frozen=True, eq=False)
class StandardizedPanel:
    """Per-gauge z-scores of a log panel plus the statistics used."""

    values: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    gauge_ids: tuple = ()
    timestamps: Optional[np.ndarray] = None

    @property
    def stats(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mean, self.std


@dataclass(frozen=True, eq=False)
class DataSplits:
    """Row-index partition of one panel into train / validation / test."""

    panel: StreamflowPanel
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int

    @property
    def train_panel(self) -> StreamflowPanel:
        return self.panel.take_rows(self.train)

    @property
    def val_panel(self) -> StreamflowPanel:
        return self.panel.take_rows(self.val)

    @property
    def test_panel(self) -> StreamflowPanel:
        return self.panel.take_rows(self.test)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "train": [int(i) for i in self.train],
            "val": [int(i) for i in self.val],
            "test": [int(i) for i in self.test],
        }


@dataclass(frozen=True, eq=False)
class GaugeMetadata:
    """Station descriptors. Coordinates may be missing until fetched."""

    nwsli: str
    usgs_staid: str
    latitude: Optional[float] = None
    longitude: Optional[float] = None
    drainage_area: Optional[float] = None

    def __post_init__(self):
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            raise PanelError(f"{self.nwsli}: latitude {self.latitude} out of range")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            raise PanelError(f"{self.nwsli}: longitude {self.longitude} out of range")
        if self.drainage_area is not None and not self.drainage_area > 0:
            raise PanelError(f"{self.nwsli}: drainage area must be positive")

    @property
    def has_coordinates(self) -> bool:
        return self.latitude is not None and self.longitude is not None

    def matches(self, gauge_id: str) -> bool:
        return gauge_id in (self.nwsli, self.usgs_staid)


# ---------------------------------------------------------------------------
# ingestion


def load_panel(path, gauge_subset: Optional[Sequence[str]] = None) -> StreamflowPanel:
    """Read a panel CSV (``date,<id_1>,...,<id_p>``).

    Rows with a missing cell among the selected gauges are dropped and the
    number dropped is logged.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise PanelError(f"cannot parse panel file {path}: {exc}") from exc
    if df.columns.size < 2 or df.columns[0] != "date":
        raise PanelError(f"{path}: header must start with 'date'")
    ids = [str(c) for c in df.columns[1:]]
    if gauge_subset is not None:
        unknown = [g for g in gauge_subset if g not in ids]
        if unknown:
            raise PanelError(f"unknown gauge id(s) in subset: {', '.join(unknown)}")
        ids = list(gauge_subset)

    try:
        dates = pd.to_datetime(df["date"], format="%Y-%m-%d")
    except ValueError as exc:
        raise PanelError(f"{path}: bad date: {exc}") from exc
    if dates.duplicated().any():
        dup = df["date"][dates.duplicated()].iloc[0]
        raise PanelError(f"{path}: duplicate timestamp {dup}")

    cells = df[ids].apply(lambda s: s.str.strip())
    try:
        values = cells.replace("", np.nan).astype(float)
    except ValueError as exc:
        raise PanelError(f"{path}: non-numeric flow value: {exc}") from exc

    order = np.argsort(dates.to_numpy(), kind="stable")
    values = values.iloc[order]
    dates = dates.iloc[order]
    complete = values.notna().all(axis=1).to_numpy()
    dropped = int((~complete).sum())
    if dropped:
        logger.warning("dropped %d row(s) with missing values from %s", dropped, path)
    if complete.sum() < 2:
        raise PanelError(f"{path}: fewer than 2 complete rows")
    return StreamflowPanel(
        timestamps=dates.to_numpy()[complete].astype("datetime64[D]"),
        gauge_ids=tuple(ids),
        values=values.to_numpy()[complete],
    )


def write_panel(panel: StreamflowPanel, path) -> None:
    panel.to_frame().to_csv(path, index=False, float_format="%.10g")


def load_metadata(path=None) -> list[GaugeMetadata]:
    """Read a metadata CSV; with no path, the packaged 34-gauge Ohio table."""
    if path is None:
        text = resources.files("donorgraph").joinpath("data/ohio_gauges.csv").read_text()
        rows = list(csv.DictReader(text.splitlines()))
    else:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    required = {"nwsli", "usgs_staid", "lat", "lon", "area_km2"}
    if rows and not required <= set(rows[0]):
        raise PanelError(f"metadata header must contain {sorted(required)}")

    def num(s):
        s = (s or "").strip()
        return float(s) if s else None

    return [
        GaugeMetadata(
            nwsli=r["nwsli"].strip(),
            usgs_staid=r["usgs_staid"].strip(),
            latitude=num(r["lat"]),
            longitude=num(r["lon"]),
            drainage_area=num(r["area_km2"]),
        )
        for r in rows
    ]


def write_metadata(meta: Sequence[GaugeMetadata], path) -> None:
    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nwsli", "usgs_staid", "lat", "lon", "area_km2"])
        for m in meta:
            w.writerow([m.nwsli, m.usgs_staid, fmt(m.latitude), fmt(m.longitude), fmt(m.drainage_area)])


def metadata_for(gauge_ids: Sequence[str], meta: Sequence[GaugeMetadata]) -> list[GaugeMetadata]:
    """Order metadata records to match panel columns (by NWSLI or STAID)."""
    out = []
    for g in gauge_ids:
        hit = [m for m in meta if m.matches(g)]
        if not hit:
            raise PanelError(f"no metadata for gauge {g}")
        out.append(hit[0])
    return out


# ---------------------------------------------------------------------------
# transforms


def log_transform(panel: StreamflowPanel) -> LogPanel:
    q = np.asarray(panel.values, dtype=float)
    if np.any(q < 0):
        raise PanelError("log_transform requires non-negative flows")
    return LogPanel(panel.timestamps, panel.gauge_ids, np.log1p(q))


def back_transform(y_hat) -> StreamflowPanel | np.ndarray:
    """Invert the log transform: ``Q = exp(Y) - 1``, negatives clamped to 0.

    Accepts a :class:`LogPanel` (returns a panel) or a bare array (returns an
    array).
    """
    values = y_hat.values if isinstance(y_hat, LogPanel) else np.asarray(y_hat, dtype=float)
    with np.errstate(over="raise"):
        try:
            q = np.expm1(values)
        except FloatingPointError as exc:
            raise OverflowError("back_transform overflow: log-flow too large") from exc
    neg = q < 0
    if neg.any():
        logger.debug("back_transform clamped %d negative value(s) to 0", int(neg.sum()))
        q = np.where(neg, 0.0, q)
    if isinstance(y_hat, LogPanel):
        return StreamflowPanel(y_hat.timestamps, y_hat.gauge_ids, q)
    return q


def standardize(y) -> StandardizedPanel:
    """Column z-scores with the sample (n-1) standard deviation."""
    values = y.values if isinstance(y, LogPanel) else np.asarray(y, dtype=float)
    ids = y.gauge_ids if isinstance(y, LogPanel) else tuple(str(i) for i in range(values.shape[1]))
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    bad = [ids[j] for j in np.flatnonzero(~(std > 0))]
    if bad:
        raise PanelError(f"zero variance for gauge(s): {', '.join(bad)}")
    z = (values - mean) / std
    return StandardizedPanel(
        values=z,
        mean=mean,
        std=std,
        gauge_ids=ids,
        timestamps=getattr(y, "timestamps", None),
    )


def inverse_standardize(z_hat, stats) -> np.ndarray:
    mean, std = (np.asarray(s, dtype=float) for s in stats)
    z_hat = np.asarray(z_hat, dtype=float)
    if z_hat.ndim == 1:
        z_hat = z_hat[:, None]
    if mean.shape != (z_hat.shape[1],) or std.shape != mean.shape:
        raise ValueError(
            f"stats for {mean.size} gauges do not match {z_hat.shape[1]} columns"
        )
    return z_hat * std + mean


# ---------------------------------------------------------------------------
# splits


def split(panel: StreamflowPanel, seed: int) -> DataSplits:
    """Chronological test block plus a seeded 50/50 train/validation draw.

    The latest ``ceil(n/3)`` rows form the test set. The earlier rows are
    shuffled with a PCG64 generator seeded by ``seed``; the first half
    (rounded up) becomes training data.
    """
    n = panel.n
    if n < 3:
        raise PanelError(f"split needs at least 3 rows, got {n}")
    n_test = math.ceil(n / 3)
    n_early = n - n_test
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n_early)
    n_train = n_early - n_early // 2
    return DataSplits(
        panel=panel,
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train:]),
        test=np.arange(n_early, n),
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# covariance


def empirical_covariance(z) -> np.ndarray:
    """``S = Z^T Z / (n - 1)`` for zero-mean columns."""
    values = z.values if isinstance(z, StandardizedPanel) else np.asarray(z, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise ValueError("empirical_covariance needs at least 2 rows")
    s = values.T @ values / (n - 1)
    return (s + s.T) / 2


def reciprocal_condition(s: np.ndarray) -> float:
    w = np.linalg.eigvalsh(s)
    if w[-1] <= 0:
        return 0.0
    return float(max(w[0], 0.0) / w[-1])


def invert_covariance(s: np.ndarray) -> np.ndarray:
    """Empirical precision matrix ``T = S^-1`` via Cholesky."""
    s = np.asarray(s, dtype=float)
    rc = reciprocal_condition(s)
    if rc < RCOND_MIN:
        raise linalg.LinAlgError(
            f"covariance is singular or ill-conditioned (rcond={rc:.3g})"
        )
    c = linalg.cho_factor(s, lower=True)
    t = linalg.cho_solve(c, np.eye(s.shape[0]))
    return (t + t.T) / 2
