"""Minimal client for the USGS NWIS daily-values and site web services.

Only what the fetch step needs: daily mean discharge (parameter 00060,
statistic 00003) as JSON, and drainage areas from the expanded site RDB
output.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd
import requests

logger = logging.getLogger(__name__)

DV_URL = "https://waterservices.usgs.gov/nwis/dv/"
SITE_URL = "https://waterservices.usgs.gov/nwis/site/"

#: Cubic feet per second to cubic metres per second.
CFS_TO_CMS = 0.0283168
SQMI_TO_KM2 = 2.589988110336

DISCHARGE = "00060"
DAILY_MEAN = "00003"


class FetchError(RuntimeError):
    pass


@dataclass
class SiteSeries:
    staid: str
    name: str
    latitude: Optional[float]
    longitude: Optional[float]
    flow_cms: pd.Series  # indexed by date


def _get(session, url, params, timeout):
    try:
        resp = session.get(url, params=params, timeout=timeout)
    except requests.RequestException as exc:
        raise FetchError(f"request to {url} failed: {exc}") from exc
    if resp.status_code != 200:
        logger.error("HTTP %s from %s: %s", resp.status_code, url, resp.text[:2000])
        raise FetchError(f"HTTP {resp.status_code} from {url}")
    return resp


def parse_dv_json(payload: dict) -> dict[str, SiteSeries]:
    """Daily discharge per site from an NWIS ``dv`` JSON response, in m3/s."""
    out = {}
    for ts in payload.get("value", {}).get("timeSeries", []):
        info = ts["sourceInfo"]
        staid = info["siteCode"][0]["value"]
        geo = info.get("geoLocation", {}).get("geogLocation", {})
        no_data = ts.get("variable", {}).get("noDataValue", -999999.0)
        dates, flows = [], []
        for block in ts.get("values", []):
            for rec in block.get("value", []):
                try:
                    v = float(rec["value"])
                except (TypeError, ValueError):
                    v = np.nan
                if no_data is not None and v == float(no_data):
                    v = np.nan
                dates.append(rec["dateTime"][:10])
                flows.append(v)
        if not dates:
            continue
        s = pd.Series(flows, index=pd.to_datetime(dates, format="%Y-%m-%d"), dtype=float)
        s = s[~s.index.duplicated(keep="first")].sort_index() * CFS_TO_CMS
        if staid in out:
            # several time series for one site: fill gaps from the later ones
            s = out[staid].flow_cms.combine_first(s)
        out[staid] = SiteSeries(
            staid=staid,
            name=info.get("siteName", ""),
            latitude=_maybe_float(geo.get("latitude")),
            longitude=_maybe_float(geo.get("longitude")),
            flow_cms=s,
        )
    return out


def _maybe_float(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return None


def fetch_daily_values(
    sites: Iterable[str],
    start: str,
    end: str,
    endpoint: str = DV_URL,
    timeout: float = 60.0,
    session=None,
    batch: int = 50,
) -> dict[str, SiteSeries]:
    sites = list(sites)
    if not sites:
        raise ValueError("empty site list")
    session = session or requests.Session()
    out = {}
    for i in range(0, len(sites), batch):
        params = {
            "format": "json",
            "sites": ",".join(sites[i : i + batch]),
            "startDT": start,
            "endDT": end,
            "parameterCd": DISCHARGE,
            "statCd": DAILY_MEAN,
            "siteStatus": "all",
        }
        resp = _get(session, endpoint, params, timeout)
        try:
            payload = resp.json()
        except ValueError as exc:
            raise FetchError(f"invalid JSON from {endpoint}") from exc
        out.update(parse_dv_json(payload))
    return out


def parse_site_rdb(text: str) -> dict[str, dict]:
    """Rows of an NWIS RDB table keyed by ``site_no``."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if len(lines) < 2:
        return {}
    header = lines[0].split("\t")
    rows = {}
    for ln in lines[2:]:  # second line holds column formats
        rec = dict(zip(header, ln.split("\t")))
        if "site_no" in rec:
            rows[rec["site_no"]] = rec
    return rows


def fetch_site_info(
    sites: Iterable[str],
    endpoint: str = SITE_URL,
    timeout: float = 60.0,
    session=None,
) -> dict[str, dict]:
    """Latitude, longitude and drainage area (km2) per site."""
    sites = list(sites)
    if not sites:
        return {}
    session = session or requests.Session()
    params = {"format": "rdb", "sites": ",".join(sites), "siteOutput": "expanded", "siteStatus": "all"}
    rows = parse_site_rdb(_get(session, endpoint, params, timeout).text)
    info = {}
    for staid, rec in rows.items():
        area = _maybe_float(rec.get("drain_area_va"))
        info[staid] = {
            "lat": _maybe_float(rec.get("dec_lat_va")),
            "lon": _maybe_float(rec.get("dec_long_va")),
            "area_km2": None if area is None else area * SQMI_TO_KM2,
        }
    return info
