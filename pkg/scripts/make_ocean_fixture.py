"""Regenerate the synthetic buoy archive used by the ocean-application tests.

The file mimics the NDBC historical stdmet layout for station 46066 over the
2014-2015 winter.  It is NOT real NOAA data: the three variables are drawn
from a known asymmetric dependence structure (a shared Gumbel frailty with a
Khoudraji power transform on the wave-height coordinate, delta=0.5,
base Kendall tau=0.65) with realistic margins, so the symmetry tests have a
ground truth to detect.  2160 in-window rows at an 80-minute cadence; 42 of
them carry the WVHT missing sentinel, leaving exactly 2118 complete pairs
for each variable pairing; 15 rows before and after the window exercise the
time filter.

Usage: python scripts/make_ocean_fixture.py [dest]
"""

import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
from scipy import stats

from copsym.models import _positive_stable

DELTA = 0.5
THETA = 1.0 / (1.0 - 0.65)
SEED = 20141101
CADENCE = timedelta(minutes=80)
WINDOW_START = datetime(2014, 11, 1, 0, 0, tzinfo=timezone.utc)
WINDOW_ROWS = 2160
MISSING_WVHT_ROWS = 42
PAD_ROWS = 15

HEADER = (
    "#YY  MM DD hh mm WDIR WSPD GST  WVHT  DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE\n"
    "#yr  mo dy hr mn degT m/s  m/s     m  sec   sec degT   hPa  degC  degC  degC  nmi    ft\n"
)


def simulate(n: int, rng: np.random.Generator):
    """(wvht-quantile, apd-quantile, wspd-quantile) with both pairs
    (wvht, apd) and (wvht, wspd) following the same asymmetric copula."""
    alpha = 1.0 / THETA
    frailty = _positive_stable(alpha, rng, n)
    e = rng.standard_exponential((n, 3))
    x1 = np.exp(-((e[:, 0] / frailty) ** alpha))
    v_apd = np.exp(-((e[:, 1] / frailty) ** alpha))
    v_wspd = np.exp(-((e[:, 2] / frailty) ** alpha))
    x2 = rng.random(n)
    u_wvht = np.maximum(x1 ** (1.0 / (1.0 - DELTA)), x2 ** (1.0 / DELTA))
    return u_wvht, v_apd, v_wspd


def main(dest: Path) -> None:
    rng = np.random.default_rng(SEED)
    total = WINDOW_ROWS + 2 * PAD_ROWS
    u_wvht, v_apd, v_wspd = simulate(total, rng)

    wvht = np.round(stats.lognorm(s=0.45, scale=2.2).ppf(u_wvht), 2)
    apd = np.round(3.0 + 7.0 * stats.beta(2.0, 2.0).ppf(v_apd), 2)
    wspd = np.round(stats.weibull_min(2.2, scale=9.0).ppf(np.clip(v_wspd, 1e-9, 1 - 1e-9)), 1)
    wdir = rng.integers(0, 360, total)
    gst = np.round(wspd * 1.3 + 0.4, 1)
    dpd = np.round(apd * 1.35, 2)
    mwd = rng.integers(0, 360, total)
    pres = np.round(rng.normal(1008.0, 9.0, total), 1)
    atmp = np.round(rng.normal(4.0, 2.5, total), 1)
    wtmp = np.round(rng.normal(6.0, 0.8, total), 1)

    start = WINDOW_START - PAD_ROWS * CADENCE
    stamps = [start + i * CADENCE for i in range(total)]
    in_window = [PAD_ROWS <= i < PAD_ROWS + WINDOW_ROWS for i in range(total)]
    candidates = np.flatnonzero(in_window)
    missing = set(rng.choice(candidates, size=MISSING_WVHT_ROWS, replace=False).tolist())

    lines = [HEADER.rstrip("\n")]
    for i, ts in enumerate(stamps):
        wv = 99.00 if i in missing else wvht[i]
        lines.append(
            f"{ts.year:4d} {ts.month:02d} {ts.day:02d} {ts.hour:02d} {ts.minute:02d} "
            f"{wdir[i]:3d} {wspd[i]:4.1f} {gst[i]:4.1f} {wv:5.2f} {dpd[i]:5.2f} "
            f"{apd[i]:5.2f} {mwd[i]:3d} {pres[i]:6.1f} {atmp[i]:5.1f} {wtmp[i]:5.1f} "
            f"999.0 99.0 99.00"
        )
    dest.write_text("\n".join(lines) + "\n")
    kept = WINDOW_ROWS - MISSING_WVHT_ROWS
    print(f"wrote {dest}: {total} rows, {kept} complete in-window pairs")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("tests/data/46066h2014_2015_winter.txt")
    main(target)
