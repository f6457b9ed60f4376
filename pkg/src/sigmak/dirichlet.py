"""Damped Newton solver for dual Dirichlet problems on Klein-ball subdomains.

The dual potential u* of a constant sigma_k graph satisfies

    F(w* gamma* D^2u* gamma*) = binom(n,k)^(-1/k)

on a convex subdomain of the unit ball, with barrier Legendre values as
boundary data.  The solver works in the rescaled variable v = u*/w*, whose
operator matrix is the hyperbolic covariant expression

    M(v) = w*^2 gamma* D^2v gamma* - w* (xi q^T + q xi^T) - v I,  q = gamma* Dv.

M is linear in v with frozen per-node coefficients, its eigenvalues are the
curvature radii (admissibility = positive definiteness), and finite
differences annihilate constants, so the hyperboloid dual v = -1 is an exact
discrete solution on the full ball.

Discretization: a structured lattice aligned to multiples of the spacing.
Nodes whose full second-order stencil stays inside the domain collocate the
equation; the remaining in-domain nodes form the boundary ring and carry
Dirichlet rows u* - phi.  The data phi is evaluable at lattice nodes
directly, so no geometric snapping enters.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, spilu, spsolve

from .barriers import hyperboloid_barrier, lower_barrier, upper_barrier
from .errors import AdmissibilityError, ConfigError, ConvergenceError, DomainError
from .grids import GridFunction
from .geometry import dual_curvatures, dual_w, eigh_ascending, gamma_star, klein_hessian_lhs
from .symfunc import normalization_constant, quotient_F_gradient_many, quotient_F_many


def _pair_offsets(n):
    offs = []
    for a in range(n):
        for s in (1, -1):
            o = [0] * n
            o[a] = s
            offs.append(tuple(o))
    for a in range(n):
        for b in range(a + 1, n):
            for sa in (1, -1):
                for sb in (1, -1):
                    o = [0] * n
                    o[a], o[b] = sa, sb
                    offs.append(tuple(o))
    return offs


def _shift_bool(mask, axis, off):
    out = np.zeros_like(mask)
    src = [slice(None)] * mask.ndim
    dst = [slice(None)] * mask.ndim
    if off > 0:
        dst[axis] = slice(0, -off)
        src[axis] = slice(off, None)
    elif off < 0:
        dst[axis] = slice(-off, None)
        src[axis] = slice(0, off)
    out[tuple(dst)] = mask[tuple(src)]
    return out


@dataclass
class DirichletProblem:
    """Discrete dual problem: lattice, node classification, data, constant."""

    domain: object
    J: int
    n: int
    k: int
    spacing: float
    margin: float
    lo: np.ndarray
    shape: tuple
    in_dom: np.ndarray
    interior: np.ndarray
    ring: np.ndarray
    phi: np.ndarray
    sub: np.ndarray
    c: float
    boundary_gap: float
    _cache: dict = field(default_factory=dict, repr=False)

    def points(self):
        axes = [self.lo[a] + self.spacing * np.arange(self.shape[a]) for a in range(self.n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def w_field(self):
        if "w" not in self._cache:
            pts = self.points()
            s = 1.0 - np.sum(pts * pts, axis=-1)
            self._cache["w"] = np.sqrt(np.where(self.in_dom, s, np.nan))
        return self._cache["w"]

    def _geometry(self):
        # frozen per-interior-node coefficient data for M(v)
        if "geo" not in self._cache:
            pts = self.points().reshape(-1, self.n)
            flat = np.flatnonzero(self.interior.ravel())
            xi = pts[flat]
            w = np.sqrt(1.0 - np.sum(xi * xi, axis=-1))
            gs = gamma_star(xi)
            strides = np.ones(self.n, dtype=np.int64)
            for a in range(self.n - 2, -1, -1):
                strides[a] = strides[a + 1] * self.shape[a + 1]
            nbr = {off: flat + sum(o * strides[a] for a, o in enumerate(off))
                   for off in _pair_offsets(self.n)}
            self._cache["geo"] = (flat, xi, w, gs, nbr, strides)
        return self._cache["geo"]

    def _unknowns(self):
        # every in-domain node is an unknown; ring nodes carry Dirichlet rows
        if "unk" not in self._cache:
            dom_flat = np.flatnonzero(self.in_dom.ravel())
            unk = np.full(int(np.prod(self.shape)), -1, dtype=np.int64)
            unk[dom_flat] = np.arange(dom_flat.size)
            self._cache["unk"] = (dom_flat, unk)
        return self._cache["unk"]


@dataclass
class DualSolution:
    """A candidate dual potential on the problem lattice (v = u*/w*)."""

    problem: DirichletProblem
    v: np.ndarray

    @property
    def grid(self):
        p = self.problem
        vals = np.where(p.in_dom, self.v * p.w_field(), np.nan)
        return GridFunction(p.lo.copy(), np.full(p.n, p.spacing), vals, p.in_dom.copy())

    def copy(self):
        return DualSolution(self.problem, self.v.copy())


@dataclass
class NewtonState:
    """Accepted-iterate record of one damped Newton run."""

    iterate: DualSolution
    residual_history: list
    damping: float
    admissibility_margin: float
    iterations: int
    converged: bool
    message: str = ""

    def report(self):
        p = self.iterate.problem
        return {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "admissibility_margin": float(self.admissibility_margin),
            "boundary_gap": float(p.boundary_gap),
            "converged": bool(self.converged),
            "J": p.J,
            "n": p.n,
            "k": p.k,
            "spacing": p.spacing,
            "margin": p.margin,
            "message": self.message,
        }


def _hull_margins(F, pts, chunk=16384):
    mesh = F.direction_mesh()
    sup = F.support(mesh)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        block = pts[s:s + chunk] @ mesh.T
        out[s:s + chunk] = np.min(sup[None, :] - block, axis=1)
    return out


def _dual_subsolution(F):
    """Computable dual lower bound: max of circumscribed-trough conjugates.

    Falls back to the hyperboloid dual when no circumscribed cap exists
    (the full-sphere domain, where the hyperboloid is the solution).
    """
    try:
        up = upper_barrier(F)
    except DomainError:
        hyp = hyperboloid_barrier(F.n)
        return lambda xi: hyp.conjugate(xi)
    return lambda xi: np.max(np.stack([z.conjugate(xi) for z in up.troughs], axis=0), axis=0)


def assemble_problem(F, J, n, k, spacing=0.02, data=None, j0=4, samples=None):
    """Lay out the lattice problem on the hull of F shrunk by 1/(J+j0).

    data defaults to Legendre values of the lower barrier; a callable
    data(xi) -> u* values overrides it (exact regression data).
    """
    if J < 1 or int(J) != J:
        raise ConfigError(f"J must be a positive integer, got {J}")
    if not 1 <= k <= n:
        raise ConfigError(f"need 1 <= k <= n, got k={k}, n={n}")
    if F.n != n:
        raise ConfigError(f"cap domain lives in dimension {F.n}, problem asks {n}")
    if spacing <= 0.0:
        raise ConfigError("spacing must be positive")
    margin = 1.0 / (J + j0)
    radius = 1.0 - margin
    imax = int(math.floor(radius / spacing + 1e-12))
    axis = spacing * np.arange(-imax, imax + 1)
    shape = (axis.size,) * n
    lo = np.full(n, axis[0])
    pts = np.stack(np.meshgrid(*(axis,) * n, indexing="ij"), axis=-1)
    flat_pts = pts.reshape(-1, n)
    rr = np.sum(flat_pts * flat_pts, axis=-1)
    in_dom = (rr <= radius * radius + 1e-15)
    in_dom[in_dom] &= _hull_margins(F, flat_pts[in_dom]) >= margin
    in_dom = in_dom.reshape(shape)
    ok = in_dom.copy()
    for off in _pair_offsets(n):
        sh = in_dom
        for a, o in enumerate(off):
            if o:
                sh = _shift_bool(sh, a, o)
        ok &= sh
    interior = ok
    ring = in_dom & ~interior
    if not np.any(interior):
        raise DomainError("shrunk domain has no interior collocation nodes")
    nodes = flat_pts[in_dom.ravel()]
    if data is None:
        bar = lower_barrier(F, samples=samples)
        vals, defect = bar.conjugate_report(nodes)
        if not np.all(np.isfinite(vals)):
            raise DomainError("barrier Legendre data is not finite on the shrunk hull")
        gap = float(np.max(defect))
    else:
        vals = np.asarray(data(nodes), dtype=float)
        gap = 0.0
    phi = np.full(shape, np.nan).ravel()
    phi[in_dom.ravel()] = vals
    sub_fn = _dual_subsolution(F)
    sub = np.full(shape, np.nan).ravel()
    sub[in_dom.ravel()] = sub_fn(nodes)
    if np.any(sub[in_dom.ravel()] > phi[in_dom.ravel()] + 1e-9):
        raise ConfigError("boundary data is not bracketed by the barrier pair")
    return DirichletProblem(
        domain=F, J=J, n=n, k=k, spacing=spacing, margin=margin, lo=lo,
        shape=shape, in_dom=in_dom, interior=interior, ring=ring,
        phi=phi.reshape(shape), sub=sub.reshape(shape), c=normalization_constant(n, k),
        boundary_gap=gap,
    )


def _operator_matrices(p, vbox):
    """M(v) at interior nodes, shape (N, n, n)."""
    flat, xi, w, gs, nbr, _ = p._geometry()
    h = p.spacing
    vf = vbox.ravel()
    n = p.n
    center = vf[flat]
    d1 = np.empty((len(flat), n))
    H = np.empty((len(flat), n, n))
    for a in range(n):
        oa = tuple(1 if i == a else 0 for i in range(n))
        ma = tuple(-1 if i == a else 0 for i in range(n))
        vp, vm = vf[nbr[oa]], vf[nbr[ma]]
        d1[:, a] = (vp - vm) / (2.0 * h)
        H[:, a, a] = (vp - 2.0 * center + vm) / (h * h)
    for a in range(n):
        for b in range(a + 1, n):
            def off(sa, sb):
                o = [0] * n
                o[a], o[b] = sa, sb
                return tuple(o)
            mixed = (vf[nbr[off(1, 1)]] - vf[nbr[off(1, -1)]]
                     - vf[nbr[off(-1, 1)]] + vf[nbr[off(-1, -1)]]) / (4.0 * h * h)
            H[:, a, b] = mixed
            H[:, b, a] = mixed
    q = np.einsum("nij,nj->ni", gs, d1)
    M = (w * w)[:, None, None] * np.einsum("nij,njk,nkl->nil", gs, H, gs)
    M -= w[:, None, None] * (xi[:, :, None] * q[:, None, :] + q[:, :, None] * xi[:, None, :])
    M -= center[:, None, None] * np.eye(n)[None, :, :]
    return 0.5 * (M + np.transpose(M, (0, 2, 1)))


def _full_residual(p, vbox):
    """(residual over unknowns, min curvature radius).

    The unknown vector stacks all in-domain nodes; interior entries hold
    F(M(v)) - c and ring entries the data mismatch v w* - phi.
    """
    M = _operator_matrices(p, vbox)
    lam = np.linalg.eigvalsh(M)
    dom_flat, unk = p._unknowns()
    flat, _, _, _, _, _ = p._geometry()
    res = np.empty(dom_flat.size)
    bad = lam[:, 0] <= 0.0
    if np.any(bad):
        # off the convexity set; the line search rejects on the inf
        vals = np.full(lam.shape[0], np.inf)
        vals[~bad] = quotient_F_many(lam[~bad], p.k)
    else:
        vals = quotient_F_many(lam, p.k)
    res[unk[flat]] = vals - p.c
    ridx = np.flatnonzero(p.ring.ravel())
    wr = p.w_field().ravel()[ridx]
    res[unk[ridx]] = vbox.ravel()[ridx] * wr - p.phi.ravel()[ridx]
    return res, float(np.min(lam[:, 0]))


def residual(p, u):
    """Equation residual as a lattice function.

    Interior rows hold F(M(v)) - c, ring rows the data mismatch u* - phi.
    Raises AdmissibilityError (with a witness node) off the convexity set.
    """
    v = u.v if isinstance(u, DualSolution) else np.asarray(u, dtype=float)
    M = _operator_matrices(p, v)
    lam = np.linalg.eigvalsh(M)
    if lam[:, 0].min() <= 0.0:
        flat, _, _, _, _, _ = p._geometry()
        bad = int(np.argmin(lam[:, 0]))
        witness = np.unravel_index(flat[bad], p.shape)
        raise AdmissibilityError(
            f"iterate not admissible: min curvature radius {lam[bad, 0]:.3e} at node {witness}",
            witness=witness,
        )
    out = np.full(p.shape, np.nan).ravel()
    flat, _, _, _, _, _ = p._geometry()
    out[flat] = quotient_F_many(lam, p.k) - p.c
    w = p.w_field().ravel()
    ridx = np.flatnonzero(p.ring.ravel())
    out[ridx] = v.ravel()[ridx] * w[ridx] - p.phi.ravel()[ridx]
    return GridFunction(p.lo.copy(), np.full(p.n, p.spacing), out.reshape(p.shape), p.in_dom.copy())


def _jacobian(p, vbox):
    """Sparse Newton matrix over all in-domain unknowns, plus (residual, min eig)."""
    flat, xi, w, gs, nbr, _ = p._geometry()
    dom_flat, unk = p._unknowns()
    h = p.spacing
    n = p.n
    M = _operator_matrices(p, vbox)
    lam, Q = np.linalg.eigh(M)
    minlam = float(lam[:, 0].min())
    _, dW = quotient_F_gradient_many(lam, p.k)
    Fp = np.einsum("nip,np,njp->nij", Q, dW, Q)
    G = np.einsum("nij,njk,nkl->nil", gs, Fp, gs)
    bvec = np.einsum("nij,njk,nk->ni", gs, Fp, xi)
    eq_rows = unk[flat]
    rows, cols, vals = [], [], []

    def add(nbr_flat, coef):
        rows.append(eq_rows)
        cols.append(unk[nbr_flat])
        vals.append(coef)

    trF = np.einsum("nii->n", Fp)
    diag_sum = np.einsum("naa->n", G)
    add(flat, -2.0 * (w * w) * diag_sum / (h * h) - trF)
    for a in range(n):
        oa = tuple(1 if i == a else 0 for i in range(n))
        ma = tuple(-1 if i == a else 0 for i in range(n))
        base = (w * w) * G[:, a, a] / (h * h)
        skew = w * bvec[:, a] / h
        add(nbr[oa], base - skew)
        add(nbr[ma], base + skew)
    for a in range(n):
        for b in range(a + 1, n):
            cross = (w * w) * G[:, a, b] / (2.0 * h * h)
            for sa in (1, -1):
                for sb in (1, -1):
                    o = [0] * n
                    o[a], o[b] = sa, sb
                    add(nbr[tuple(o)], (sa * sb) * cross)
    ridx = np.flatnonzero(p.ring.ravel())
    rows.append(unk[ridx])
    cols.append(unk[ridx])
    vals.append(p.w_field().ravel()[ridx])
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dom_flat.size, dom_flat.size),
    ).tocsr()
    res = np.empty(dom_flat.size)
    res[eq_rows] = quotient_F_many(lam, p.k) - p.c
    res[unk[ridx]] = vbox.ravel()[ridx] * p.w_field().ravel()[ridx] - p.phi.ravel()[ridx]
    return A, res, minlam


def initial_iterate(p, scale=0.9):
    """Scaled hyperboloid dual u* = -scale w*, i.e. constant v = -scale.

    Admissible for every positive scale, with constant interior residual
    (scale - 1) c; scales below 1 start on the supersolution side.  The
    ring mismatch is part of the residual and closes in the first step.
    """
    if scale <= 0.0:
        raise ConfigError("initial scale must be positive")
    v = np.where(p.in_dom, -scale, np.nan)
    return DualSolution(p, v)


def dual_from(p, fn):
    """DualSolution from a callable xi -> u* values (tests and oracles)."""
    pts = p.points()
    vals = np.asarray(fn(pts.reshape(-1, p.n)), dtype=float).reshape(p.shape)
    v = np.where(p.in_dom, vals / p.w_field(), np.nan)
    return DualSolution(p, v)


def _make_linear_solver():
    # reuse one ILU factorization across Newton steps; the coefficients
    # drift slowly so the preconditioner stays effective
    state = {"ilu": None}

    def solve(A, b):
        if A.shape[0] <= 70_000:
            return spsolve(A.tocsc(), b)
        # equilibrate rows to unit diagonal: ring rows carry O(w*) entries
        # while interior rows carry O(1/h^2), which starves ILU pivoting
        d = A.diagonal()
        scale = 1.0 / np.where(np.abs(d) > 1e-300, d, 1.0)
        As = A.multiply(scale[:, None]).tocsr()
        bs = b * scale
        if state["ilu"] is None:
            state["ilu"] = spilu(As.tocsc(), drop_tol=1e-5, fill_factor=10.0)
        for attempt in range(2):
            prec = LinearOperator(A.shape, state["ilu"].solve)
            x, info = gmres(As, bs, M=prec, rtol=1e-11, atol=0.0,
                            maxiter=400, restart=80)
            if info == 0:
                return x
            # stale factorization from an earlier Newton step: rebuild
            state["ilu"] = spilu(As.tocsc(), drop_tol=1e-5, fill_factor=10.0)
        raise ConvergenceError(f"linear solver stalled (gmres info={info})")

    return solve


def newton_solve(p, init=None, tol=1e-10, max_iter=30):
    """Damped Newton with admissibility-preserving sup-norm line search.

    Accepts a step only if the trial iterate stays admissible and strictly
    decreases the sup-norm residual; backtracking halves the step, and a
    floor of 1e-8 raises ConvergenceError (stagnation).  Exhausting
    max_iter returns a non-converged state rather than raising.
    """
    if tol <= 0.0:
        raise ConfigError("tolerance must be positive")
    sol = initial_iterate(p) if init is None else init.copy()
    dom_flat, _ = p._unknowns()
    solve = _make_linear_solver()
    res, minlam = _full_residual(p, sol.v)
    if minlam <= 0.0:
        raise AdmissibilityError(f"initial iterate not admissible (min radius {minlam:.3e})")
    sup = float(np.max(np.abs(res)))
    history = [sup]
    damping = 1.0
    for it in range(1, max_iter + 1):
        if sup < tol:
            return NewtonState(sol, history, damping, minlam, it - 1, True)
        A, res, minlam = _jacobian(p, sol.v)
        step = solve(A, -res)
        s = 1.0
        while True:
            trial = sol.v.copy()
            trial.ravel()[dom_flat] += s * step
            tres, tmin = _full_residual(p, trial)
            tsup = float(np.max(np.abs(tres)))
            if tmin > 0.0 and tsup < sup:
                sol.v = trial
                sup = tsup
                minlam = tmin
                damping = s
                history.append(sup)
                break
            s *= 0.5
            if s < 1e-8:
                raise ConvergenceError(
                    f"line search stagnated at iteration {it} (residual {sup:.3e})"
                )
    converged = sup < tol
    return NewtonState(sol, history, damping, minlam, max_iter, converged,
                       "" if converged else "max_iter exceeded")


def hyperbolic_crosscheck(p, u, samples):
    """Max eigenvalue mismatch between the two operator discretizations.

    Compares the direct w* gamma* D^2u* gamma* spectrum with the covariant
    Klein form at each sample; both are second order, and their difference
    shrinks like h^2.  Samples must keep a one-node margin from the ring.
    """
    grid = u.grid
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    worst = 0.0
    for x in samples:
        idx = grid.nearest_index(x)
        neigh = tuple(slice(max(i - 1, 0), i + 2) for i in idx)
        if (np.any([i < 1 or i >= s - 1 for i, s in zip(idx, p.shape)])
                or not np.all(p.interior[neigh])):
            raise DomainError(f"sample {x} too close to the collocation ring")
        a = dual_curvatures(grid, x)[0].entries
        b = klein_hessian_lhs(grid, x).entries
        la, _ = eigh_ascending(a)
        lb, _ = eigh_ascending(b)
        worst = max(worst, float(np.max(np.abs(la - lb))))
    return worst


def continuation_run(F, J_list, n, k, tol=1e-10, spacing=0.02, max_iter=30, data=None):
    """Solve the expanding-domain sequence, warm-starting each J from the last.

    New lattice nodes take the dual subsolution value; previously solved
    nodes carry over (the lattices nest because both align to multiples of
    the spacing).  Solver errors are re-raised tagged with the failing J.
    """
    J_list = list(J_list)
    if any(b <= a for a, b in zip(J_list, J_list[1:])) or not J_list:
        raise ConfigError("J_list must be strictly increasing and nonempty")
    states = []
    prev = None
    for J in J_list:
        p = assemble_problem(F, J, n, k, spacing=spacing, data=data)
        init = None
        if prev is not None:
            init = _extend_iterate(prev, p)
        try:
            state = newton_solve(p, init=init, tol=tol, max_iter=max_iter)
        except (ConvergenceError, AdmissibilityError) as exc:
            raise type(exc)(f"J={J}: {exc}") from exc
        states.append(state)
        prev = state.iterate
    return states


def _extend_iterate(prev, p):
    """Carry a converged iterate onto a larger lattice.

    Copies v at nodes shared with the previous domain and fills the new
    annular region with the subsolution; falls back to the default initial
    iterate if the patched field loses admissibility at the seam.
    """
    q = prev.problem
    v = np.where(p.in_dom, p.sub / p.w_field(), np.nan)
    pts = p.points().reshape(-1, p.n)
    old_idx = np.rint((pts - q.lo) / q.spacing).astype(np.int64)
    inside = np.all((old_idx >= 0) & (old_idx < np.array(q.shape)), axis=-1)
    lin = np.zeros(len(pts), dtype=np.int64)
    strides = np.ones(q.n, dtype=np.int64)
    for a in range(q.n - 2, -1, -1):
        strides[a] = strides[a + 1] * q.shape[a + 1]
    lin[inside] = old_idx[inside] @ strides
    usable = inside & q.in_dom.ravel()[lin] & p.in_dom.ravel()
    vflat = v.ravel()
    vflat[usable] = prev.v.ravel()[lin[usable]]
    v = vflat.reshape(p.shape)
    cand = DualSolution(p, v)
    _, minlam = _full_residual(p, cand.v)
    if minlam <= 0.0:
        return None
    return cand
