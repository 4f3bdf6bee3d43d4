"""Pure-numpy implementation of the bootstrap replicate kernel.

This is the fallback twin of the compiled kernel in ``_kernels.pyx``; both
compute the same quantities from the same precomputed tables and must agree
to floating-point noise.  See ``backends.replicate_stats_batch`` for the
contract.
"""

from __future__ import annotations

import numpy as np

# cap on the H * N * n intermediate so large batches stay in cache-friendly
# chunks instead of allocating hundreds of MB
_CHUNK_BUDGET = 16_000_000


def replicate_stats_batch(
    xic: np.ndarray,
    fu_grid: np.ndarray,
    fv_grid: np.ndarray,
    du_grid: np.ndarray,
    dv_grid: np.ndarray,
    prod_xy: np.ndarray,
    prod_yx: np.ndarray,
    fu_x: np.ndarray,
    fv_y: np.ndarray,
    fu_y: np.ndarray,
    fv_x: np.ndarray,
    du_xy: np.ndarray,
    dv_xy: np.ndarray,
    du_yx: np.ndarray,
    dv_yx: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_rep, n_obs = xic.shape
    n_grid = fu_grid.shape[0]

    xt = np.ascontiguousarray(xic.T)

    # point part: the symmetrized replicate at the evaluation points
    b_xy = prod_xy @ xt - du_xy[:, None] * (fu_x @ xt) - dv_xy[:, None] * (fv_y @ xt)
    b_yx = prod_yx @ xt - du_yx[:, None] * (fu_y @ xt) - dv_yx[:, None] * (fv_x @ xt)
    diff = b_xy - b_yx
    s_out = np.mean(diff * diff, axis=0)

    # grid part, chunked over replicates
    bu = fu_grid @ xt  # (N, H) weighted process at (g_i, 1)
    bv = fv_grid @ xt  # (N, H) weighted process at (1, g_j)
    r_out = np.empty(n_rep)
    t_out = np.empty(n_rep)
    step = max(1, _CHUNK_BUDGET // max(1, n_grid * n_obs))
    for lo in range(0, n_rep, step):
        hi = min(lo + step, n_rep)
        block = xic[lo:hi]
        bbar = (block[:, None, :] * fu_grid[None, :, :]) @ fv_grid.T
        bg = (
            bbar
            - du_grid[None, :, :] * bu[:, lo:hi].T[:, :, None]
            - dv_grid[None, :, :] * bv[:, lo:hi].T[:, None, :]
        )
        sg = bg - bg.transpose(0, 2, 1)
        r_out[lo:hi] = np.mean(sg * sg, axis=(1, 2))
        t_out[lo:hi] = np.max(np.abs(sg), axis=(1, 2))
    return r_out, s_out, t_out
