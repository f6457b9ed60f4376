"""Geometry of spacelike graphs in Minkowski space and their Legendre duals.

A spacelike graph x_{n+1} = u(x) with |Du| < 1 carries the induced metric
g_ij = delta_ij - u_i u_j.  The Gauss map sends x to xi = Du(x) in the open
unit ball; the dual potential u*(xi) = x . xi - u(x) encodes the surface, and
the matrix w* gamma* D^2u* gamma* (w* = sqrt(1 - |xi|^2)) has the principal
curvature radii as eigenvalues.  The same matrix equals the hyperbolic-space
Hessian of the support function u*/w* minus the function times the identity,
computed in the Klein model; both routes are implemented and cross-checked.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SpacelikeViolationError
from .grids import GridFunction
from .symfunc import CurvatureVector, SymMatrix

__all__ = [
    "SpacelikeGraph",
    "GraphQuantities",
    "eigh_ascending",
    "dual_w",
    "gamma_star",
    "graph_quantities",
    "support_function",
    "legendre",
    "conjugate_scan",
    "dual_curvatures",
    "klein_hessian_lhs",
    "lorentz_boost",
]


def eigh_ascending(mats):
    """Batched symmetric eigendecomposition, ascending eigenvalues.

    Eigenvector signs are fixed so each vector's largest-magnitude component
    is positive, making decompositions reproducible across runs.
    """
    w, q = np.linalg.eigh(mats)
    idx = np.argmax(np.abs(q), axis=-2)
    signs = np.sign(np.take_along_axis(q, idx[..., None, :], axis=-2))
    signs[signs == 0] = 1.0
    return w, q * signs


def dual_w(xi):
    """sqrt(1 - |xi|^2) on the open unit ball."""
    xi = np.asarray(xi, dtype=float)
    s = 1.0 - np.sum(xi * xi, axis=-1)
    if np.any(s <= 0):
        raise DomainError("dual point outside the open unit ball")
    return np.sqrt(s)


def gamma_star(xi):
    """Square root of the dual metric: delta_ij - xi_i xi_j / (1 + w*).

    Satisfies gamma* gamma* = delta - xi xi^T and gamma* xi = w* xi.
    """
    xi = np.asarray(xi, dtype=float)
    w = dual_w(xi)
    eye = np.eye(xi.shape[-1])
    return eye - xi[..., :, None] * xi[..., None, :] / (1.0 + w)[..., None, None]


@dataclass
class SpacelikeGraph:
    """A graph u over a lattice with a recorded bound beta = max |Du| < 1."""

    base: GridFunction
    beta: float = 0.0

    def __post_init__(self):
        g = self.base.gradient_field()
        norms = np.sqrt(np.nansum(g * g, axis=0))
        norms = norms[self.base.valid()]
        beta = float(np.nanmax(norms)) if norms.size else 0.0
        if beta >= 1.0:
            raise SpacelikeViolationError(f"graph has sampled |Du| = {beta:.6f} >= 1")
        self.beta = max(self.beta, beta)


@dataclass
class GraphQuantities:
    """Pointwise first/second fundamental data of a spacelike graph."""

    w: float
    metric: SymMatrix
    second_ff: SymMatrix
    normal: np.ndarray
    shape_matrix: SymMatrix
    kappa: CurvatureVector


def _graph_grid(g):
    return g.base if isinstance(g, SpacelikeGraph) else g


def graph_quantities(g, x):
    """Metric, second fundamental form, normal, and principal curvatures at x.

    x is snapped to the nearest lattice node.  Principal curvatures are the
    eigenvalues (ascending) of a_ij = (1/w) gamma^{ik} u_{kl} gamma^{lj} with
    gamma^{ik} = delta_ik + u_i u_k / (w (1 + w)), the symmetric square root
    of the inverse metric.
    """
    grid = _graph_grid(g)
    idx = grid.nearest_index(np.asarray(x, dtype=float))
    du = grid.gradient_at(idx)
    d2u = grid.hessian_at(idx)
    s = 1.0 - float(du @ du)
    if s <= 0:
        raise SpacelikeViolationError(f"|Du| >= 1 at node {idx}")
    w = np.sqrt(s)
    n = du.size
    eye = np.eye(n)
    metric = eye - np.outer(du, du)
    gamma_up = eye + np.outer(du, du) / (w * (1.0 + w))
    shape = (gamma_up @ d2u @ gamma_up) / w
    shape = 0.5 * (shape + shape.T)
    kappa, _ = eigh_ascending(shape)
    normal = np.append(du, 1.0) / w
    return GraphQuantities(
        w=float(w),
        metric=SymMatrix(metric),
        second_ff=SymMatrix(d2u / w),
        normal=normal,
        shape_matrix=SymMatrix(shape),
        kappa=CurvatureVector(tuple(kappa)),
    )


def support_function(g, x):
    """Minkowski support value <X, nu> = (x . Du - u) / w at the node nearest x."""
    grid = _graph_grid(g)
    idx = grid.nearest_index(np.asarray(x, dtype=float))
    du = grid.gradient_at(idx)
    u = grid.values[idx]
    xx = grid.node(idx)
    s = 1.0 - float(du @ du)
    if s <= 0:
        raise SpacelikeViolationError(f"|Du| >= 1 at node {idx}")
    return float((xx @ du - u) / np.sqrt(s))


# -- Legendre transform ------------------------------------------------------


def conjugate_scan(pts, vals, queries, chunk=2_000_000):
    """sup over samples of (x . xi - u(x)) per query, with the argmax index.

    Parameters
    ----------
    pts : (N, d) sample coordinates
    vals : (N,) sample values
    queries : (M, d) dual points
    chunk : work limit for the dense score block

    Returns
    -------
    (best, arg) : (M,) values and (M,) indices into the samples
    """
    pts = np.asarray(pts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    m = queries.shape[0]
    best = np.full(m, -np.inf)
    arg = np.zeros(m, dtype=int)
    qstep = max(1, int(chunk // max(1, pts.shape[0])))
    for s in range(0, m, qstep):
        q = queries[s : s + qstep]
        scores = q @ pts.T - vals[None, :]
        a = np.argmax(scores, axis=1)
        best[s : s + qstep] = scores[np.arange(q.shape[0]), a]
        arg[s : s + qstep] = a
    return best, arg


def _hull_mask(points, hull_pts, inset):
    """True where a point lies at least ``inset`` inside the convex hull."""
    from scipy.spatial import ConvexHull

    d = hull_pts.shape[1]
    if d == 1:
        lo, hi = hull_pts.min(), hull_pts.max()
        x = points[:, 0]
        return (x >= lo + inset) & (x <= hi - inset)
    hull = ConvexHull(hull_pts)
    a = hull.equations[:, :-1]
    b = hull.equations[:, -1]
    return np.all(points @ a.T + b[None, :] <= -inset, axis=1)


def legendre(g, out_spacing=None):
    """Numerical Legendre transform of a convex grid function.

    The dual is sampled on a lattice over the convex hull of the sampled
    gradients.  Values are sup over samples of (x . xi - u(x)), improved by a
    local quadratic refinement around the argmax (one Newton step on the
    fitted model).  Applying the transform twice reproduces the input up to
    O(spacing^2) on the common interior.

    Returns a GridFunction on the dual lattice.
    """
    grid = _graph_grid(g)
    ok = grid.valid()
    pts = grid.points()[ok.ravel()]
    vals = grid.values[ok]
    gf = grid.gradient_field()
    xi = np.stack([gf[a][ok] for a in range(grid.d)], axis=-1)
    finite = np.all(np.isfinite(xi), axis=-1)
    pts, vals, xi = pts[finite], vals[finite], xi[finite]
    if pts.shape[0] < 3**grid.d:
        raise DomainError("too few valid samples for a Legendre transform")

    lo = xi.min(axis=0)
    hi = xi.max(axis=0)
    if out_spacing is None:
        ext = np.maximum(hi - lo, 1e-12)
        out_spacing = ext / np.maximum(np.array(grid.shape) - 1, 1)
    out_spacing = np.broadcast_to(np.atleast_1d(np.asarray(out_spacing, float)), (grid.d,))
    counts = np.maximum(2, np.floor((hi - lo) / out_spacing + 1e-9).astype(int) + 1)
    axes = [lo[a] + out_spacing[a] * np.arange(counts[a]) for a in range(grid.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    inset = float(np.max(out_spacing)) * 0.25
    mask = _hull_mask(nodes, xi, inset).reshape(tuple(counts))

    queries = nodes[mask.ravel()]
    raw, argmax = conjugate_scan(pts, vals, queries)

    # one Newton step on the local quadratic model around the argmax sample
    hess = grid.hessian_field()
    flat_ok = np.flatnonzero(ok.ravel())[finite]
    sample_idx = flat_ok[argmax]
    multi = np.unravel_index(sample_idx, grid.shape)
    H = np.stack([np.stack([hess[a, b][multi] for b in range(grid.d)], -1) for a in range(grid.d)], -2)
    gvec = np.stack([gf[a][multi] for a in range(grid.d)], -1)
    x0 = pts[argmax]
    u0 = vals[argmax]
    refined = raw.copy()
    usable = np.all(np.isfinite(H), axis=(-2, -1)) & np.all(np.isfinite(gvec), axis=-1)
    lam = np.linalg.eigvalsh(np.where(usable[:, None, None], H, np.eye(grid.d)))
    usable &= lam[:, 0] > 1e-12
    if np.any(usable):
        rhs = queries[usable] - gvec[usable]
        delta = np.linalg.solve(H[usable], rhs[..., None])[..., 0]
        step_ok = np.linalg.norm(delta, axis=-1) <= 1.5 * float(np.max(grid.spacing))
        model = (
            np.sum((x0[usable] + delta) * queries[usable], axis=-1)
            - u0[usable]
            - np.sum(gvec[usable] * delta, axis=-1)
            - 0.5 * np.einsum("...i,...ij,...j->...", delta, H[usable], delta)
        )
        upd = np.where(step_ok, np.maximum(model, raw[usable]), raw[usable])
        refined[usable] = upd

    out_vals = np.full(tuple(counts), np.nan)
    out_vals[mask] = refined
    return GridFunction(np.array([ax[0] for ax in axes]), out_spacing.copy(), out_vals, mask)


# -- dual-side curvature ------------------------------------------------------


def dual_curvatures(dual, xi):
    """Curvature radii at a dual lattice node.

    Returns (winv, kappa_star, second_ff): winv is the symmetric matrix
    w* gamma* D^2u* gamma*, similar to w* (delta - xi xi^T) D^2u* and with the
    same spectrum, so its eigenvalues (ascending) are the principal curvature
    radii 1/kappa_i.  second_ff is (D^2u*)^{-1} / w*.
    """
    grid = _graph_grid(dual)
    idx = grid.nearest_index(np.asarray(xi, dtype=float))
    x = grid.node(idx)
    w = float(dual_w(x))
    gs = gamma_star(x)
    H = grid.hessian_at(idx)
    winv = w * gs @ H @ gs
    winv = 0.5 * (winv + winv.T)
    radii, _ = eigh_ascending(winv)
    if np.any(radii <= 0):
        raise DomainError(f"dual Hessian not positive definite at node {idx}")
    second = np.linalg.inv(H) / w
    return SymMatrix(winv), CurvatureVector(tuple(radii)), SymMatrix(0.5 * (second + second.T))


def klein_hessian_lhs(dual, xi):
    """Hyperbolic covariant Hessian of the support potential, minus itself.

    Works in the Klein model on the unit ball: with v = u*/w* and the
    orthonormal frame e_i = w* gamma*_{ik} d/dxi_k, the returned matrix is

        (grad^2 v)(e_i, e_j) - v delta_ij
        = w*^2 gamma* (D^2 v) gamma*  -  w* (xi (gamma* Dv)^T + (gamma* Dv) xi^T)  -  v delta,

    using the Klein Christoffel symbols Gamma^s_{mn} = (xi_m d_ns + xi_n d_ms)/w*^2
    in closed form (only D v and D^2 v are finite differences).  Equals
    w* gamma* D^2u* gamma* exactly in the continuum.
    """
    grid = _graph_grid(dual)
    idx = grid.nearest_index(np.asarray(xi, dtype=float))
    x = grid.node(idx)
    pts = grid.points()
    s = 1.0 - np.sum(pts * pts, axis=-1)
    w_all = np.sqrt(np.where(s > 0, s, np.nan)).reshape(grid.shape)
    vgrid = GridFunction(grid.lo, grid.spacing, grid.values / w_all, grid.mask)
    v = vgrid.values[idx]
    q = vgrid.gradient_at(idx)
    H = vgrid.hessian_at(idx)
    w = float(dual_w(x))
    gs = gamma_star(x)
    gq = gs @ q
    lam = w * w * gs @ H @ gs - w * (np.outer(x, gq) + np.outer(gq, x)) - v * np.eye(x.size)
    return SymMatrix(0.5 * (lam + lam.T))


# -- Lorentz boosts ------------------------------------------------------------


def boost_points(pts, alpha, axis=0):
    """Boost spacetime points (..., n+1) along a spatial lattice axis.

    x_a' = (x_a - alpha t) / sqrt(1 - alpha^2),
    t'   = (t - alpha x_a) / sqrt(1 - alpha^2),  t the last coordinate.
    """
    if not -1.0 < alpha < 1.0:
        raise DomainError(f"boost speed must satisfy |alpha| < 1, got {alpha}")
    pts = np.array(pts, dtype=float, copy=True)
    root = np.sqrt(1.0 - alpha * alpha)
    xa = pts[..., axis].copy()
    t = pts[..., -1].copy()
    pts[..., axis] = (xa - alpha * t) / root
    pts[..., -1] = (t - alpha * xa) / root
    return pts


def _axis_index(axis, d):
    a = np.asarray(axis, dtype=float)
    if a.ndim == 0:
        i = int(a)
    else:
        if a.size != d:
            raise DomainError("boost axis dimension mismatch")
        i = int(np.argmax(np.abs(a)))
        e = np.zeros(d)
        e[i] = np.sign(a[i])
        if np.linalg.norm(a / np.linalg.norm(a) - e) > 1e-12:
            raise DomainError("graph boosts support lattice-axis directions only")
        if a[i] < 0:
            raise DomainError("boost axis must point along the positive lattice axis")
    if not 0 <= i < d:
        raise DomainError(f"axis {i} out of range for dimension {d}")
    return i


def lorentz_boost(p, alpha, axis=0):
    """Boost a spacetime point array or a SpacelikeGraph.

    For graphs the boosted surface is resampled as a graph over the new
    horizontal coordinates on the same lattice spacing.  The resampling solves
    the strictly monotone relation x_a - alpha u(x_a, rest) = sqrt(1-a^2) x_a'
    by bisection per target node; single-valuedness is guaranteed for
    spacelike inputs, so failures are asserted rather than handled.
    """
    if not isinstance(p, SpacelikeGraph):
        return boost_points(p, alpha, _axis_index(axis, np.asarray(p).shape[-1] - 1))
    if not -1.0 < alpha < 1.0:
        raise DomainError(f"boost speed must satisfy |alpha| < 1, got {alpha}")
    grid = p.base
    if grid.mask is not None:
        raise DomainError("graph boosts need a full box grid (no mask)")
    a = _axis_index(axis, grid.d)
    root = np.sqrt(1.0 - alpha * alpha)

    moved = np.moveaxis(grid.values, a, 0)
    m = moved.shape[0]
    rest = moved.reshape(m, -1)
    t_axis = grid.axes()[a]

    def u_of(t):
        # linear interpolation along the boost axis, one value per off-axis row
        pos = np.clip((t - t_axis[0]) / grid.spacing[a], 0.0, m - 1.0)
        i0 = np.minimum(pos.astype(int), m - 2)
        frac = pos - i0
        cols = np.arange(rest.shape[1])
        return rest[i0, cols] * (1.0 - frac) + rest[i0 + 1, cols] * frac

    phi_lo = t_axis[0] - alpha * rest[0]
    phi_hi = t_axis[-1] - alpha * rest[-1]
    targets_lo = np.max(phi_lo) / root
    targets_hi = np.min(phi_hi) / root
    if targets_hi <= targets_lo + grid.spacing[a]:
        raise DomainError("boosted image too small to resample on this lattice")
    new_axis = np.arange(
        np.ceil(targets_lo / grid.spacing[a]) * grid.spacing[a],
        targets_hi - 1e-12,
        grid.spacing[a],
    )

    out = np.empty((new_axis.size, rest.shape[1]))
    lo_t = np.full(rest.shape[1], t_axis[0])
    hi_t = np.full(rest.shape[1], t_axis[-1])
    for j, xp in enumerate(new_axis):
        target = root * xp
        lo_b, hi_b = lo_t.copy(), hi_t.copy()
        # phi(t) = t - alpha u is strictly increasing: derivative 1 - alpha u_t > 0
        for _ in range(52):
            mid = 0.5 * (lo_b + hi_b)
            high = mid - alpha * u_of(mid) > target
            hi_b = np.where(high, mid, hi_b)
            lo_b = np.where(high, lo_b, mid)
        t_star = 0.5 * (lo_b + hi_b)
        out[j] = (u_of(t_star) - alpha * t_star) / root

    new_vals = np.moveaxis(out.reshape((new_axis.size,) + moved.shape[1:]), 0, a)
    new_lo = grid.lo.copy()
    new_lo[a] = new_axis[0]
    shape_mask = None
    return SpacelikeGraph(GridFunction(new_lo, grid.spacing.copy(), new_vals, shape_mask))
