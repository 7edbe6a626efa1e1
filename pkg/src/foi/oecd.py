"""Minimal OECD SDMX-JSON client with an on-disk response cache.

The HTTP layer is an injectable ``transport``: any callable taking a URL and
returning ``(status_code, body_bytes)``.  Tests pass a stub; the default uses
``urllib``.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping

from .errors import HttpStatusError, MalformedResponse, NetworkError, UnknownDimension, ValidationError

DEFAULT_ENDPOINT = "https://stats.oecd.org/SDMX-JSON/data"
TIME_DIMENSIONS = ("TIME_PERIOD", "TIME", "YEA")

Transport = Callable[[str], "tuple[int, bytes]"]

OECD_COUNTRIES = {
    "AUS": "Australia", "AUT": "Austria", "BEL": "Belgium", "CAN": "Canada",
    "CHL": "Chile", "COL": "Colombia", "CRI": "Costa Rica", "CZE": "Czech Republic",
    "DNK": "Denmark", "EST": "Estonia", "FIN": "Finland", "FRA": "France",
    "DEU": "Germany", "GRC": "Greece", "HUN": "Hungary", "ISL": "Iceland",
    "IRL": "Ireland", "ISR": "Israel", "ITA": "Italy", "JPN": "Japan",
    "KOR": "Korea", "LVA": "Latvia", "LTU": "Lithuania", "LUX": "Luxembourg",
    "MEX": "Mexico", "NLD": "Netherlands", "NZL": "New Zealand", "NOR": "Norway",
    "POL": "Poland", "PRT": "Portugal", "SVK": "Slovak Republic", "SVN": "Slovenia",
    "ESP": "Spain", "SWE": "Sweden", "CHE": "Switzerland", "TUR": "Turkey",
    "GBR": "United Kingdom", "USA": "United States",
}


def default_endpoint() -> str:
    return os.environ.get("FOI_OECD_ENDPOINT", DEFAULT_ENDPOINT)


def urllib_transport(url: str, timeout: float = 60.0) -> tuple[int, bytes]:
    request = urllib.request.Request(url, headers={"Accept": "application/json"})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read() or b""
    except (urllib.error.URLError, OSError) as exc:
        raise NetworkError(f"GET {url} failed: {exc}") from exc


@dataclass(frozen=True)
class SeriesQuery:
    dataset_code: str
    filter_expression: str = "all"
    start: int = 2019
    end: int = 2020
    country_dimension: str = "LOCATION"

    def __post_init__(self):
        if not self.dataset_code.strip():
            raise ValidationError("dataset_code must not be empty")
        if self.start > self.end:
            raise ValidationError(f"time range start {self.start} is after end {self.end}")

    @classmethod
    def parse_time(cls, text: str) -> tuple[int, int]:
        """``"2019:2020"`` -> (2019, 2020); ``"2020"`` -> (2020, 2020)."""
        parts = text.split(":")
        try:
            start, end = (int(parts[0]), int(parts[-1]))
        except ValueError:
            raise ValidationError(f"bad time range {text!r}") from None
        return start, end

    def url(self, endpoint: str) -> str:
        params = urllib.parse.urlencode(
            {"startTime": self.start, "endTime": self.end, "dimensionAtObservation": "AllDimensions"}
        )
        dataset = urllib.parse.quote(self.dataset_code.strip(), safe="")
        flt = urllib.parse.quote(self.filter_expression.strip() or "all", safe=".+")
        return f"{endpoint.rstrip('/')}/{dataset}/{flt}/all?{params}"


@dataclass(frozen=True)
class FetchedSeries:
    query: SeriesQuery
    observations: tuple[tuple[str, int, float], ...]
    retrieved_at: str
    raw_cache_path: Path
    from_cache: bool = field(default=False, compare=False)


def cache_key(url: str) -> str:
    parts = urllib.parse.urlsplit(url)
    query = urllib.parse.urlencode(sorted(urllib.parse.parse_qsl(parts.query)))
    canonical = urllib.parse.urlunsplit((parts.scheme.lower(), parts.netloc.lower(), parts.path, query, ""))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _year(value_id: str) -> int:
    try:
        return int(str(value_id)[:4])
    except ValueError:
        raise MalformedResponse(f"cannot read a year from time period {value_id!r}") from None


def parse_sdmx_json(payload: bytes | str | Mapping, query: SeriesQuery) -> list[tuple[str, int, float]]:
    """Extract (country code, year, value) triples from an SDMX-JSON message.

    Handles both flat ``dataSets[0].observations`` keyed by all dimensions and
    the series layout ``dataSets[0].series[key].observations``.
    """
    try:
        doc = json.loads(payload) if isinstance(payload, (bytes, str)) else payload
        structure = doc.get("structure") or doc["data"]["structure"]
        datasets = doc.get("dataSets") or doc["data"]["dataSets"]
        dims = structure["dimensions"]
        series_dims = dims.get("series", [])
        obs_dims = dims.get("observation", [])
        dataset = datasets[0]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise MalformedResponse(f"not an SDMX-JSON data message: {exc}") from exc

    def locate(dim_id):
        for where, group in (("series", series_dims), ("observation", obs_dims)):
            for pos, d in enumerate(group):
                if d.get("id") == dim_id:
                    return where, pos, [v.get("id") for v in d.get("values", [])]
        return None

    country = locate(query.country_dimension)
    if country is None:
        raise UnknownDimension(f"dimension {query.country_dimension!r} not in response")
    time = next((t for t in map(locate, TIME_DIMENSIONS) if t is not None), None)
    if time is None:
        raise UnknownDimension(f"no time dimension among {TIME_DIMENSIONS}")

    def pick(dim, series_key, obs_key):
        where, pos, values = dim
        key = series_key if where == "series" else obs_key
        try:
            return values[int(key[pos])]
        except (IndexError, ValueError) as exc:
            raise MalformedResponse(f"bad dimension index in key {key}") from exc

    entries = []
    if "series" in dataset:
        for skey, series in dataset["series"].items():
            for okey, obs in series.get("observations", {}).items():
                entries.append((skey.split(":"), okey.split(":"), obs))
    else:
        for okey, obs in dataset.get("observations", {}).items():
            entries.append(([], okey.split(":"), obs))

    triples = []
    for skey, okey, obs in entries:
        if not isinstance(obs, list) or not obs:
            raise MalformedResponse(f"observation {':'.join(okey)} has no value array")
        if obs[0] is None:
            continue
        year = _year(pick(time, skey, okey))
        if not query.start <= year <= query.end:
            raise MalformedResponse(f"observation year {year} outside requested {query.start}-{query.end}")
        try:
            value = float(obs[0])
        except (TypeError, ValueError):
            raise MalformedResponse(f"non-numeric observation {obs[0]!r}") from None
        triples.append((pick(country, skey, okey), year, value))
    triples.sort(key=lambda t: (t[0], t[1]))
    return triples


def fetch_series(
    query: SeriesQuery,
    endpoint: str | None = None,
    cache_dir=".foi-cache",
    transport: Transport | None = None,
) -> FetchedSeries:
    """GET the SDMX-JSON representation of ``query``, serving repeats from the cache."""
    endpoint = endpoint or default_endpoint()
    url = query.url(endpoint)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = cache_key(url)
    body_path = cache_dir / f"{key}.json"
    meta_path = cache_dir / f"{key}.meta.json"

    if body_path.exists() and meta_path.exists():
        body = body_path.read_bytes()
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return FetchedSeries(query, tuple(parse_sdmx_json(body, query)), meta["retrieved_at"], body_path, True)

    status, body = (transport or urllib_transport)(url)
    if not 200 <= status < 300:
        raise HttpStatusError(status, url)
    observations = parse_sdmx_json(body, query)
    retrieved_at = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    _atomic_write(body_path, body)
    _atomic_write(meta_path, json.dumps({"url": url, "retrieved_at": retrieved_at}, indent=2).encode())
    return FetchedSeries(query, tuple(observations), retrieved_at, body_path, False)


@dataclass(frozen=True)
class IndicatorColumn:
    values: dict[str, float | None]
    fallback: tuple[str, ...]
    missing: tuple[str, ...]
    duplicates: tuple[str, ...] = ()


def series_to_indicator_column(
    series: FetchedSeries, year: int, country_map: Mapping[str, str] | None = None
) -> IndicatorColumn:
    """One value per mapped country for ``year``, else ``year - 1``, else missing."""
    country_map = OECD_COUNTRIES if country_map is None else country_map
    by_key: dict[tuple[str, int], float] = {}
    duplicates = set()
    for code, y, v in series.observations:
        if (code, y) in by_key:
            duplicates.add(code)
            continue
        by_key[(code, y)] = v
    values, fallback, missing = {}, [], []
    for code, name in country_map.items():
        if (code, year) in by_key:
            values[name] = by_key[(code, year)]
        elif (code, year - 1) in by_key:
            values[name] = by_key[(code, year - 1)]
            fallback.append(name)
        else:
            values[name] = None
            missing.append(name)
    return IndicatorColumn(values, tuple(fallback), tuple(missing), tuple(sorted(duplicates)))
