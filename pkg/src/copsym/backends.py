"""Kernel backend selection: compiled extension with a numpy fallback.

The bootstrap's inner loop (one pass per multiplier replicate) is the hot
path of every simulation study.  It exists twice: as a Cython extension
(``copsym._kernels``) and as a vectorized numpy module (``_kernels_np``).
The compiled kernel is preferred when the extension built; set
``COPSYM_KERNEL=numpy`` or ``COPSYM_KERNEL=compiled`` to force a choice.

Kernel contract -- ``replicate_stats_batch(xic, ...)`` takes per-test tables
and returns, for every row of centered multipliers, the three replicate
statistics (squared-integral, point-averaged square, sup) of the symmetrized
bootstrap process:

* ``xic``      (H, n): centered multipliers, pre-scaled by 1/sqrt(n)
* ``fu_grid``  (N, n): per-observation u-factor at each grid node
* ``fv_grid``  (N, n): per-observation v-factor at each grid node
* ``du_grid``, ``dv_grid`` (N, N): derivative plug-ins on the grid mesh
* ``prod_xy``, ``prod_yx`` (p, n): factor products at the evaluation points
  (x_i, y_i) and at the swapped points (y_i, x_i)
* ``fu_x``, ``fv_y``, ``fu_y``, ``fv_x`` (p, n): single factors for the
  margin terms B(x, 1), B(1, y), B(y, 1), B(1, x)
* ``du_xy``, ``dv_xy``, ``du_yx``, ``dv_yx`` (p,): derivative plug-ins at
  the evaluation points and their swaps

The factor of observation o at coordinate t is the weight multiplying the
centered multiplier in the weighted process: an indicator 1(U_o <= t) for
the empirical estimator, the binomial upper tail sum_{k >= a_o} P_mk(t) for
the Bernstein estimator.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_np

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built; numpy fallback only
    _kernels_c = None

__all__ = ["replicate_stats_batch", "active_backend", "available_backends", "set_backend"]

_FORCED = os.environ.get("COPSYM_KERNEL", "").strip().lower() or None
_current = None


def available_backends() -> tuple[str, ...]:
    return ("compiled", "numpy") if _kernels_c is not None else ("numpy",)


def _default_backend() -> str:
    if _FORCED in ("compiled", "numpy"):
        if _FORCED == "compiled" and _kernels_c is None:
            raise ImportError("COPSYM_KERNEL=compiled but the extension is not built")
        return _FORCED
    return "compiled" if _kernels_c is not None else "numpy"


def active_backend() -> str:
    global _current
    if _current is None:
        _current = _default_backend()
    return _current


def set_backend(name: str | None) -> None:
    """Force a backend ('compiled' or 'numpy'); None restores the default."""
    global _current
    if name is None:
        _current = _default_backend()
        return
    if name not in available_backends():
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    _current = name


def replicate_stats_batch(xic, *tables) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    impl = _kernels_c if active_backend() == "compiled" else _kernels_np
    args = [np.ascontiguousarray(a, dtype=float) for a in (xic, *tables)]
    return impl.replicate_stats_batch(*args)
