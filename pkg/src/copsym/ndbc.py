"""NDBC standard-meteorological archive ingestion.

Parses the whitespace-delimited historical ``stdmet`` text format of the
National Data Buoy Center into records holding the three variables the ocean
application needs: WVHT (significant wave height, m), APD (average wave
period, s) and WSPD (wind speed, m/s).  Sentinel codes (99.00 / 99.0) map to
missing values; malformed lines are skipped and counted.

A thin HTTPS client fetches yearly station archives; every test runs from
checked-in fixtures instead.
"""

from __future__ import annotations

import gzip
import hashlib
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, NetworkError
from .estimators import Sample

__all__ = [
    "BuoyRecord",
    "ParseResult",
    "parse_stdmet",
    "serialize_records",
    "extract_pairs",
    "spearman_rho",
    "fetch_stdmet",
    "read_archive",
    "VARIABLES",
]

VARIABLES = ("wvht", "apd", "wspd")

# column sentinels used by the historical stdmet format
_MISSING = {"wvht": 99.0, "apd": 99.0, "wspd": 99.0}

# default column order when no header names are present
_DEFAULT_COLUMNS = [
    "YY", "MM", "DD", "hh", "WDIR", "WSPD", "GST", "WVHT", "DPD", "APD",
    "MWD", "PRES", "ATMP", "WTMP", "DEWP", "VIS", "TIDE",
]

NDBC_BASE_URL = "https://www.ndbc.noaa.gov/data/historical/stdmet"


@dataclass(frozen=True)
class BuoyRecord:
    """One observation time with the variables of interest (None = missing)."""

    timestamp: datetime
    wvht: float | None
    apd: float | None
    wspd: float | None

    def get(self, name: str) -> float | None:
        if name not in VARIABLES:
            raise ValueError(f"unknown variable {name!r}; have {VARIABLES}")
        return getattr(self, name)


@dataclass(frozen=True)
class ParseResult:
    records: list[BuoyRecord]
    skipped: int


def _header_columns(line: str) -> list[str] | None:
    tokens = line.lstrip("#").split()
    if not tokens:
        return None
    alpha = [t for t in tokens if any(c.isalpha() for c in t)]
    if len(alpha) < len(tokens) // 2:
        return None
    return [t.upper() for t in tokens]


def _parse_year(token: str) -> int:
    year = int(token)
    if year < 100:
        year += 1900
    return year


def _value_or_none(token: str, name: str) -> float | None:
    value = float(token)
    if value == _MISSING[name]:
        return None
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} out of range: {value}")
    return value


def parse_stdmet(text: str | bytes) -> ParseResult:
    """Parse stdmet text into time-ordered records.

    Handles one or two '#' header lines, 2- or 4-digit years, and the
    optional minutes column.  Lines that fail to parse, or that do not
    advance the timestamp, are skipped and counted.  Raises DataError when
    nothing parses.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    lines = text.splitlines()
    columns = None
    records: list[BuoyRecord] = []
    skipped = 0
    first_bad: str | None = None
    last_ts = None
    for line in lines:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            maybe = _header_columns(stripped)
            if maybe and columns is None:
                columns = maybe
            continue
        if columns is None:
            maybe = _header_columns(stripped)
            if maybe:
                columns = maybe
                continue
            columns = list(_DEFAULT_COLUMNS)
        tokens = stripped.split()
        try:
            record = _parse_data_line(tokens, columns)
        except (ValueError, IndexError):
            skipped += 1
            if first_bad is None:
                first_bad = stripped
            continue
        if last_ts is not None and record.timestamp <= last_ts:
            skipped += 1
            continue
        last_ts = record.timestamp
        records.append(record)
    if not records:
        offending = first_bad if first_bad is not None else "<no data lines>"
        raise DataError(f"no parsable stdmet data lines (first offending line: {offending!r})")
    return ParseResult(records=records, skipped=skipped)


def _parse_data_line(tokens: list[str], columns: list[str]) -> BuoyRecord:
    # the first four columns are always year month day hour; a fifth "mm"
    # column (minutes) exists in the newer layout and reads "MM" after
    # upper-casing, same as month, so detect it by position
    names = list(columns)
    year = _parse_year(tokens[0])
    month = int(tokens[1])
    day = int(tokens[2])
    hour = int(tokens[3])
    rest_start = 4
    minute = 0
    if len(names) > 4 and names[4] == "MM":
        minute = int(tokens[4])
        rest_start = 5
        names = names[:4] + names[5:]
    lookup = {}
    for offset, name in enumerate(names[4:]):
        idx = rest_start + offset
        if idx < len(tokens):
            lookup[name] = tokens[idx]
    ts = datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
    wvht = _value_or_none(lookup["WVHT"], "wvht") if "WVHT" in lookup else None
    apd = _value_or_none(lookup["APD"], "apd") if "APD" in lookup else None
    wspd = _value_or_none(lookup["WSPD"], "wspd") if "WSPD" in lookup else None
    return BuoyRecord(timestamp=ts, wvht=wvht, apd=apd, wspd=wspd)


def serialize_records(records: list[BuoyRecord]) -> str:
    """Canonical stdmet-style text for the parsed variables (round-trips
    through parse_stdmet)."""
    lines = [
        "#YY  MM DD hh mm WSPD  WVHT    APD",
        "#yr  mo dy hr mn  m/s     m    sec",
    ]
    for rec in records:
        ts = rec.timestamp
        wspd = 99.0 if rec.wspd is None else rec.wspd
        wvht = 99.0 if rec.wvht is None else rec.wvht
        apd = 99.0 if rec.apd is None else rec.apd
        lines.append(
            f"{ts.year:4d} {ts.month:02d} {ts.day:02d} {ts.hour:02d} {ts.minute:02d} "
            f"{wspd:4.1f} {wvht:5.2f} {apd:6.2f}"
        )
    return "\n".join(lines) + "\n"


def extract_pairs(
    records: list[BuoyRecord],
    var_x: str,
    var_y: str,
    window: tuple[datetime, datetime] | None = None,
) -> Sample:
    """Bivariate sample of rows where both variables are present.

    ``window`` is a half-open interval [start, end); rows keep their time
    order.  Raises DataError when nothing remains.
    """
    if var_x == var_y or var_x not in VARIABLES or var_y not in VARIABLES:
        raise ValueError(f"need two distinct variables from {VARIABLES}, got {var_x!r}, {var_y!r}")
    xs = []
    ys = []
    for rec in records:
        if window is not None:
            start, end = window
            if not (start <= rec.timestamp < end):
                continue
        x = rec.get(var_x)
        y = rec.get(var_y)
        if x is None or y is None:
            continue
        xs.append(x)
        ys.append(y)
    if not xs:
        raise DataError(
            f"no rows with both {var_x} and {var_y} present"
            + (" in the selected window" if window is not None else "")
        )
    return Sample(np.array(xs), np.array(ys))


def spearman_rho(sample: Sample) -> float:
    """Spearman rank correlation: Pearson correlation of mid-rank vectors."""
    if sample.n < 3:
        raise DataError(f"need at least 3 observations, got {sample.n}")
    if np.all(sample.x == sample.x[0]) or np.all(sample.y == sample.y[0]):
        raise DataError("rank correlation undefined for a constant column")
    rx = rankdata(sample.x, method="average")
    ry = rankdata(sample.y, method="average")
    return float(np.corrcoef(rx, ry)[0, 1])


def write_sample_csv(sample: Sample, path, header: tuple[str, str] = ("x", "y")) -> None:
    lines = [",".join(header)]
    lines += [f"{x!r},{y!r}" for x, y in zip(sample.x, sample.y)]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# fetching
# ---------------------------------------------------------------------------

def archive_name(station: str, year: int) -> str:
    return f"{str(station).lower()}h{year}.txt.gz"


def fetch_stdmet(station: str, year: int, dest_dir, base_url: str = NDBC_BASE_URL,
                 timeout: float = 60.0) -> Path:
    """Download a yearly archive verbatim, with a sha256 sidecar.

    Writes atomically; on any failure no partial file is kept and
    NetworkError is raised.
    """
    import requests

    dest_dir = Path(dest_dir)
    dest_dir.mkdir(parents=True, exist_ok=True)
    name = archive_name(station, year)
    url = f"{base_url}/{name}"
    tmp = dest_dir / (name + ".part")
    final = dest_dir / name
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
        tmp.write_bytes(response.content)
    except Exception as exc:
        tmp.unlink(missing_ok=True)
        raise NetworkError(f"failed to fetch {url}: {exc}") from exc
    tmp.rename(final)
    digest = hashlib.sha256(final.read_bytes()).hexdigest()
    final.with_suffix(final.suffix + ".sha256").write_text(f"{digest}  {name}\n")
    return final


def read_archive(path) -> ParseResult:
    """Parse a local stdmet archive, transparently gunzipping ``*.gz``."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".gz" or raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return parse_stdmet(raw)
