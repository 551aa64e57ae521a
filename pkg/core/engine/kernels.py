"""
Compiled Gauss-Seidel sweeps over a precomputed stencil.

``u_ext`` holds the interior values followed by the boundary-point values;
neighbor indices address that extended vector. Sweeps update in place.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def perron_sweep(u_ext, nbr, wt, cen, f, order, active):
    """One sweep of u <- min_w (A_w - f) / c_w; returns (max |update|, min update)."""
    max_update = 0.0
    min_update = np.inf
    n_dirs = nbr.shape[1]
    for pos in range(order.shape[0]):
        i = order[pos]
        if not active[i]:
            continue
        best = np.inf
        for d in range(n_dirs):
            a = 0.0
            for j in range(4):
                a += wt[i, d, j] * u_ext[nbr[i, d, j]]
            candidate = (a - f[i]) / cen[i, d]
            if candidate < best:
                best = candidate
        delta = best - u_ext[i]
        u_ext[i] = best
        if abs(delta) > max_update:
            max_update = abs(delta)
        if delta < min_update:
            min_update = delta
    return max_update, min_update


@njit(cache=True)
def laplace_sweep(u_ext, nbr, wt, cen, order, active):
    """One sweep of sum_j E_{e_j}(u) = 0 over the coordinate directions."""
    max_update = 0.0
    n_dirs = nbr.shape[1]
    for pos in range(order.shape[0]):
        i = order[pos]
        if not active[i]:
            continue
        a = 0.0
        c = 0.0
        for d in range(n_dirs):
            c += cen[i, d]
            for j in range(4):
                a += wt[i, d, j] * u_ext[nbr[i, d, j]]
        value = a / c
        delta = abs(value - u_ext[i])
        u_ext[i] = value
        if delta > max_update:
            max_update = delta
    return max_update
