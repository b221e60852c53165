"""Finite-difference derivatives on uniform grids.

Stencil weights come from Fornberg's recursion, assembled into dense
application matrices (grids are at most a few hundred nodes, and a dense
GEMM is both simple and fast here). Periodic axes get wrap-around central
stencils; bounded axes get central stencils in the interior and biased
windows of the same polynomial exactness at the edges, widened so the
boundary rows keep at least the requested order of accuracy.

The matrices are linear operators, so applying one to an autodiff Tensor is
just ``matm`` and gradients flow through residual assembly for free.
"""

from functools import lru_cache

import numpy as np

from .. import autodiff as ad


def fd_weights(x0, xs, m):
    """Weights approximating the m-th derivative at x0 from nodes xs.

    Fornberg's algorithm; exact for polynomials up to degree len(xs)-1.
    """
    xs = np.asarray(xs, dtype=np.float64)
    n = len(xs)
    if m >= n:
        raise ValueError("need more nodes than the derivative order")
    C = np.zeros((n, m + 1))
    C[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5, c4 = c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for kk in range(mn, 0, -1):
                    C[i, kk] = c1 * (kk * C[i - 1, kk - 1] - c5 * C[i - 1, kk]) / c2
                C[i, 0] = -c1 * c5 * C[i - 1, 0] / c2
            for kk in range(mn, 0, -1):
                C[j, kk] = (c4 * C[j, kk] - kk * C[j, kk - 1]) / c3
            C[j, 0] = c4 * C[j, 0] / c3
        c1 = c2
    return C[:, m]


def _central_points(order, acc):
    return 2 * ((order + 1) // 2) - 1 + acc


@lru_cache(maxsize=None)
def _unit_stencil_matrix(n, order, acc, periodic):
    npts = _central_points(order, acc)
    if periodic:
        if npts > n:
            raise ValueError(f"{n} nodes cannot carry a {npts}-point wrap stencil")
        half = npts // 2
        w = fd_weights(0.0, np.arange(-half, half + 1, dtype=float), order)
        D = np.zeros((n, n))
        for off, wt in zip(range(-half, half + 1), w):
            D[np.arange(n), (np.arange(n) + off) % n] = wt
        return D
    # bounded: biased rows need extra nodes to keep the requested accuracy
    wpts = max(npts, order + acc)
    if wpts > n:
        raise ValueError(f"{n} nodes cannot carry a {wpts}-point stencil")
    half = npts // 2
    D = np.zeros((n, n))
    for i in range(n):
        if half <= i <= n - 1 - half:
            lo = i - half
            pts = npts
        else:
            lo = min(max(0, i - wpts // 2), n - wpts)
            pts = wpts
        xs = np.arange(lo, lo + pts, dtype=float)
        D[i, lo:lo + pts] = fd_weights(float(i), xs, order)
    return D


def stencil_matrix(n, h, order, acc=None, periodic=False):
    """Dense n x n matrix applying the derivative of given order."""
    if order not in (1, 2, 3):
        raise ValueError("supported derivative orders are 1, 2, 3")
    if acc is None:
        acc = 4 if periodic else 2
    D = _unit_stencil_matrix(n, order, acc, bool(periodic))
    return D / h ** order


def grid_derivative(u, axis, order, h, periodic=False, acc=None):
    """Differentiate a field (ndarray or Tensor) along one grid axis.

    Needs at least 5 nodes (7 for order 3) so the boundary windows exist.
    """
    shape = u.shape if not isinstance(u, ad.Tensor) else u.data.shape
    n = shape[axis]
    if n < (7 if order == 3 else 5):
        raise ValueError(f"axis has {n} nodes, too few for order-{order} derivative")
    D = stencil_matrix(n, h, order, acc=acc, periodic=periodic)
    if isinstance(u, ad.Tensor):
        return ad.matm(ad.Tensor(D), u, axis=axis)
    um = np.moveaxis(u, axis, 0)
    out = (D @ um.reshape(n, -1)).reshape((n,) + um.shape[1:])
    return np.moveaxis(out, 0, axis)
