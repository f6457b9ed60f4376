"""Barrier hypersurfaces over cap domains of the sphere.

A cap domain F records the lightlike directions of a target graph as a
finite union of closed spherical caps with radii inside [delta0, pi-delta0].
Two one-sided envelopes of constant-curvature semitroughs then bracket every
admissible graph with those directions:

* the lower barrier is the pointwise sup of Gauss-curvature (sigma_n = 1)
  troughs whose image caps are inscribed in F;
* the upper barrier is the pointwise inf of mean-curvature (sigma_1 = n)
  troughs whose image caps circumscribe F.

Both envelopes are spacelike and share the blowdown V_F.  The module also
provides the explicit piecewise spacelike cutoff built from the hemisphere
support function, the gradient-estimate functional it feeds, and small
numeric utilities (blowdown extrapolation, gradient sweeps).

Cap families are pruned by inclusion: a trough whose image cap sits inside
another generator's cap lies below it pointwise, so dropping it never
changes the sup (dually for the inf).  This keeps the canonical domains at
one or two generators.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .caps import cap_support, geodesic_distance, sphere_mesh, unit
from .errors import ConfigError, DomainError, SpacelikeViolationError
from .troughs import SemitroughProfile, cap_trough, solve_profile

_PROFILE_CACHE = {}


def canonical_profile(kind, n):
    """Solved canonical profile, cached per (kind, n)."""
    key = (kind, int(n))
    if key not in _PROFILE_CACHE:
        _PROFILE_CACHE[key] = solve_profile(kind, n)
    return _PROFILE_CACHE[key]


def _evaluate(obj, x):
    # barriers, troughs, and plain callables share one evaluation protocol
    if hasattr(obj, "value"):
        return obj.value(x)
    return obj(x)


def _angles(points, centers):
    dots = np.clip(points @ centers.T, -1.0, 1.0)
    return np.arccos(dots)


@dataclass
class CapDomain:
    """Finite union of closed spherical caps with a recorded margin delta0.

    caps is a list of (center, delta) pairs; centers are normalized on
    construction and every radius must lie in [delta0, pi - delta0].
    """

    caps: list
    delta0: float

    def __post_init__(self):
        if not 0.0 < self.delta0 < 0.5 * math.pi:
            raise ConfigError(f"delta0 must lie in (0, pi/2), got {self.delta0}")
        if not self.caps:
            raise ConfigError("a cap domain needs at least one cap")
        norm = []
        n = None
        for center, delta in self.caps:
            c = unit(center)
            if n is None:
                n = c.size
            elif c.size != n:
                raise ConfigError("all cap centers must share one dimension")
            if not self.delta0 - 1e-12 <= delta <= math.pi - self.delta0 + 1e-12:
                raise ConfigError(
                    f"cap radius {delta} outside [delta0, pi - delta0] for delta0={self.delta0}"
                )
            norm.append((c, float(delta)))
        if n < 2:
            raise ConfigError("cap domains live on S^(n-1) with n >= 2")
        self.caps = norm

    @property
    def n(self):
        return self.caps[0][0].size

    @property
    def centers(self):
        return np.array([c for c, _ in self.caps])

    @property
    def deltas(self):
        return np.array([d for _, d in self.caps])

    @classmethod
    def full_sphere(cls, n, delta0):
        """The whole sphere as two antipodal caps of radius pi - delta0."""
        e1 = np.zeros(n)
        e1[0] = 1.0
        if delta0 > 0.5 * math.pi - 1e-12:
            raise ConfigError("full sphere cover needs delta0 < pi/2")
        return cls([(e1, math.pi - delta0), (-e1, math.pi - delta0)], delta0)

    def support(self, x):
        """V_F(x): max over caps of the closed-form cap support."""
        x = np.asarray(x, dtype=float)
        vals = [cap_support(x, c, d) for c, d in self.caps]
        return np.max(np.stack(vals, axis=0), axis=0)

    def support_direction(self, x):
        """Unit direction in the cap family attaining V_F(x).

        Rotates x/|x| toward the nearest attaining cap center until it
        enters that cap (slerp along the connecting great circle); for
        x = 0 or an antipodal center the attaining set is degenerate and
        a fixed representative is returned.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=-1)
        xhat = np.array(x)
        pos = r > 0.0
        xhat[pos] /= r[pos][:, None]
        xhat[~pos] = self.centers[0]
        best_v = np.full(len(x), -np.inf)
        best_d = np.zeros_like(x)
        for c, d in self.caps:
            th = geodesic_distance(xhat, c)
            a = np.maximum(th - d, 0.0)
            s = np.sin(th)
            p = xhat.copy()
            rot = (a > 0.0) & (s > 1e-12)
            p[rot] = (np.sin(th - a)[rot, None] * xhat[rot]
                      + np.sin(a)[rot, None] * c) / s[rot, None]
            deg = (a > 0.0) & (s <= 1e-12)
            if np.any(deg):
                b = np.zeros(self.n)
                b[int(np.argmin(np.abs(c)))] = 1.0
                t = b - (b @ c) * c
                t /= np.linalg.norm(t)
                p[deg] = math.cos(d) * c + math.sin(d) * t
            p /= np.linalg.norm(p, axis=-1, keepdims=True)
            v = np.sum(p * x, axis=-1)
            take = v > best_v
            best_v[take] = v[take]
            best_d[take] = p[take]
        return best_d

    def contains_direction(self, theta, slack=1e-12):
        theta = unit(theta)
        ang = _angles(theta[None, :], self.centers)[0]
        return bool(np.any(ang <= self.deltas + slack))

    def direction_mesh(self, m=None):
        if m is None:
            m = {2: 256, 3: 512}.get(self.n, 1024)
        return sphere_mesh(self.n, m)

    def hull_margin(self, xi, mesh=None):
        """min over mesh directions v of V_F(v) - xi . v.

        Nonnegative inside the convex hull of F (up to mesh resolution);
        the hull itself is the intersection of the halfspaces xi . v <= V_F(v).
        """
        xi = np.asarray(xi, dtype=float)
        v = self.direction_mesh() if mesh is None else mesh
        sup = self.support(v)
        return np.min(sup - xi @ v.T, axis=-1)

    def to_json(self):
        return {
            "caps": [{"center": c.tolist(), "delta": d} for c, d in self.caps],
            "delta0": self.delta0,
        }

    @classmethod
    def from_json(cls, data):
        caps = [(np.asarray(c["center"], dtype=float), float(c["delta"])) for c in data["caps"]]
        return cls(caps, float(data["delta0"]))


def support_V(F, x):
    """Support function of the cap domain at x (possibly batched)."""
    return F.support(x)


def _default_samples(n):
    return {2: 32, 3: 64}.get(n, 96)


def _prune_contained(centers, radii, keep_largest):
    """Drop caps contained in another cap of the family.

    keep_largest=True keeps maximal caps (sup families); False keeps minimal
    ones (inf families).  Containment: dist(c_i, c_k) + r_i <= r_k.
    """
    order = np.argsort(radii)
    if keep_largest:
        order = order[::-1]
    kept_c, kept_r = [], []
    for i in order:
        ang = _angles(centers[i][None, :], np.array(kept_c))[0] if kept_c else np.array([])
        if keep_largest:
            dominated = np.any(ang + radii[i] <= np.array(kept_r) + 1e-9) if kept_c else False
        else:
            dominated = np.any(ang + np.array(kept_r) <= radii[i] + 1e-9) if kept_c else False
        if not dominated:
            kept_c.append(centers[i])
            kept_r.append(radii[i])
    return list(zip(kept_c, kept_r))


def inscribed_caps(F, samples):
    """Caps of radius >= delta0 contained in F, one per surviving center."""
    cands = np.vstack([F.centers, sphere_mesh(F.n, samples)])
    ang = _angles(cands, F.centers)
    radii = np.max(F.deltas[None, :] - ang, axis=1)
    keep = radii >= F.delta0 - 1e-12
    if not np.any(keep):
        raise DomainError(
            f"no inscribed cap of radius {F.delta0} fits inside the domain"
        )
    radii = np.minimum(radii[keep], math.pi - F.delta0)
    return _prune_contained(cands[keep], radii, keep_largest=True)


def circumscribed_caps(F, samples):
    """Caps of radius <= pi - delta0 containing F, pruned to minimal ones."""
    extra = np.sum(F.centers, axis=0)
    cands = [F.centers, sphere_mesh(F.n, samples)]
    if np.linalg.norm(extra) > 1e-12:
        cands.append(unit(extra)[None, :])
    cands = np.vstack(cands)
    ang = _angles(cands, F.centers)
    radii = np.max(ang + F.deltas[None, :], axis=1)
    keep = radii <= math.pi - F.delta0 + 1e-12
    if not np.any(keep):
        raise DomainError(
            f"no circumscribed cap of radius at most pi - {F.delta0} covers the domain"
        )
    radii = np.maximum(radii[keep], F.delta0)
    return _prune_contained(cands[keep], radii, keep_largest=False)


@dataclass
class BarrierFunction:
    """Pointwise envelope of placed troughs: max (lower) or min (upper).

    kind "hyperboloid" is the degenerate upper member sqrt(radius^2 + |x|^2)
    used when no circumscribed cap exists (the full-sphere domain).
    """

    kind: str
    troughs: list
    radius: float = 1.0
    _n: int = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("lower", "upper", "hyperboloid"):
            raise ConfigError(f"unknown barrier kind {self.kind!r}")
        if self.kind == "hyperboloid":
            if self.radius <= 0.0:
                raise ConfigError("hyperboloid barrier needs a positive radius")
            if self._n is None:
                raise ConfigError("hyperboloid barrier needs the ambient dimension")
            return
        if not self.troughs:
            raise ConfigError("an envelope barrier needs at least one trough")
        dims = {z.n for z in self.troughs}
        if len(dims) != 1:
            raise ConfigError("all generators must share one dimension")
        self._n = dims.pop()

    @property
    def n(self):
        return self._n

    @classmethod
    def hyperboloid(cls, n, radius=1.0):
        return cls("hyperboloid", [], radius=radius, _n=n)

    def generator_caps(self):
        return [z.gauss_cap() for z in self.troughs]

    def value_and_which(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "hyperboloid":
            v = np.sqrt(self.radius ** 2 + np.sum(x * x, axis=-1))
            return v, np.full(np.shape(v), -1, dtype=int)
        vals = np.stack([z.value(x) for z in self.troughs], axis=0)
        if self.kind == "lower":
            idx = np.argmax(vals, axis=0)
        else:
            idx = np.argmin(vals, axis=0)
        return np.take_along_axis(vals, idx[None, ...], axis=0)[0], idx

    def value(self, x):
        return self.value_and_which(x)[0]

    def which(self, x):
        return self.value_and_which(x)[1]

    def gradient(self, x):
        """Gradient of the active generator (defined a.e.)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "hyperboloid":
            return x / self.value(x)[..., None]
        flat = x.reshape(-1, self.n)
        w = self.which(flat)
        out = np.empty_like(flat)
        for g in np.unique(w):
            m = w == g
            out[m] = self.troughs[g].gradient(flat[m])
        return out.reshape(x.shape)

    def conjugate_report(self, xi):
        """Legendre transform with a per-point overestimate bound.

        The transform of a finite sup is bracketed by
        [min_i conj_i - defect, min_i conj_i]: the upper end is the smallest
        generator conjugate and the defect is how far the envelope rises
        above the active generator at its tangency point.  Zero defect
        certifies equality; infinite defect marks points no single generator
        exposes (possible between caps of a disconnected domain).
        """
        xi = np.asarray(xi, dtype=float)
        if self.kind == "hyperboloid":
            s = 1.0 - np.sum(xi * xi, axis=-1)
            if np.any(s <= 0.0):
                raise DomainError("conjugate queries must stay in the open unit ball")
            return -self.radius * np.sqrt(s), np.zeros(np.shape(s))
        if self.kind != "lower":
            raise ConfigError("conjugates are computed for the convex lower barrier only")
        vals = np.stack([z.conjugate(xi) for z in self.troughs], axis=0)
        best = np.min(vals, axis=0)
        active = np.argmin(vals, axis=0)
        defect = np.where(np.isfinite(best), 0.0, np.inf)
        flat_xi = xi.reshape(-1, self.n)
        flat_best = np.ravel(best)
        flat_active = np.ravel(active)
        flat_defect = np.ravel(defect).copy()
        for g, z in enumerate(self.troughs):
            m = (flat_active == g) & np.isfinite(flat_best)
            if not np.any(m):
                continue
            center, delta = z.gauss_cap()
            sub = flat_xi[m]
            interior = (sub @ center > math.cos(delta) + 1e-12) & (
                np.sum(sub * sub, axis=-1) < 1.0 - 1e-12
            )
            strict = np.zeros(flat_xi.shape[0], dtype=bool)
            strict[np.nonzero(m)[0][interior]] = True
            if np.any(interior):
                pt, u = z.tangent_point(flat_xi[strict])
                gap = self.value(pt) - u
                flat_defect[strict] = np.maximum(gap, 0.0)
            edge = np.nonzero(m)[0][~interior]
            flat_defect[edge] = np.inf
        return best, flat_defect.reshape(np.shape(best))

    def conjugate(self, xi):
        return self.conjugate_report(xi)[0]

    def dump_csv(self, points, path):
        """One row per point: coordinates, envelope value, active generator."""
        points = np.asarray(points, dtype=float).reshape(-1, self.n)
        vals, which = self.value_and_which(points)
        meta = {
            "kind": self.kind,
            "caps": [
                {"center": c.tolist(), "delta": d} for c, d in self.generator_caps()
            ],
        }
        if self.kind == "hyperboloid":
            meta["radius"] = self.radius
        cols = ",".join([f"x{i + 1}" for i in range(self.n)] + ["value", "which"])
        data = np.column_stack([points, vals, which.astype(float)])
        np.savetxt(path, data, delimiter=",", header=json.dumps(meta) + "\n" + cols, comments="# ")


def lower_barrier(F, samples=None, profile=None):
    """Sup of Gauss-curvature troughs over caps inscribed in F."""
    fam = inscribed_caps(F, _default_samples(F.n) if samples is None else samples)
    if profile is None:
        profile = canonical_profile("gauss", F.n)
    if profile.kind != "gauss" or profile.n != F.n:
        raise ConfigError("lower barriers are built from the gauss profile of matching dimension")
    return BarrierFunction("lower", [cap_trough(profile, c, d) for c, d in fam])


def upper_barrier(F, samples=None, profile=None):
    """Inf of mean-curvature troughs over caps circumscribing F."""
    fam = circumscribed_caps(F, _default_samples(F.n) if samples is None else samples)
    if profile is None:
        profile = canonical_profile("mean", F.n)
    if profile.kind != "mean" or profile.n != F.n:
        raise ConfigError("upper barriers are built from the mean profile of matching dimension")
    return BarrierFunction("upper", [cap_trough(profile, c, d) for c, d in fam])


def hyperboloid_barrier(n, radius=1.0):
    """The scaled hyperboloid sqrt(radius^2 + |x|^2) as an upper envelope."""
    return BarrierFunction.hyperboloid(n, radius)


def blowdown(g, theta, r_list):
    """Extrapolated limit of value(r theta)/r with an error estimate.

    Returns (limit, error, reliable); reliable is False when the sampled
    tail is not monotone, in which case the limit should not be trusted.
    """
    theta = unit(theta)
    rs = np.asarray(r_list, dtype=float)
    if rs.ndim != 1 or rs.size < 3 or np.any(np.diff(rs) <= 0.0):
        raise ConfigError("blowdown needs at least three increasing radii")
    vals = np.asarray(_evaluate(g, rs[:, None] * theta[None, :]), dtype=float) / rs
    # v(r) = L + a/r makes r v(r) affine in r; eliminate a with the last two
    limit = (rs[-1] * vals[-1] - rs[-2] * vals[-2]) / (rs[-1] - rs[-2])
    err = abs(limit - vals[-1])
    d = np.diff(vals)
    slack = 1e-6 * max(1.0, float(np.max(np.abs(vals))))
    reliable = bool(np.all(d <= slack) or np.all(d >= -slack))
    return float(limit), float(err), reliable


def cutoff_psi(lam, r0, r1, x, center=None):
    """Piecewise spacelike cutoff adapted to a hemisphere support function.

    psi = sqrt(lam^2 + V^2) plus the correction g (1 - V(x/|x|)) faded in
    linearly between the spheres |x| = r0 and |x| = r1, where V is the
    support function of the closed hemisphere around ``center`` and
    g = 1/sqrt(1 + |xbar|^2) uses the distance to the center axis.  The
    thresholds below are sufficient for spacelikeness.
    """
    if not 0.0 < lam <= 1.0:
        raise ConfigError(f"lambda must lie in (0, 1], got {lam}")
    if r0 <= 10.0 / lam:
        raise ConfigError(f"need R0 > 10/lambda = {10.0 / lam:.6g}, got R0 = {r0}")
    floor = r0 * (1.0 + 10.0 / lam ** 2)
    if r1 <= floor:
        raise ConfigError(f"need R1 > R0 (1 + 10/lambda^2) = {floor:.6g}, got R1 = {r1}")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if center is None:
        center = np.zeros(n)
        center[0] = 1.0
    center = unit(center)
    v = cap_support(x, center, 0.5 * math.pi)
    r = np.sqrt(np.sum(x * x, axis=-1))
    vhat = np.where(r > 0.0, v / np.where(r > 0.0, r, 1.0), 1.0)
    xbar2 = np.maximum(np.sum(x * x, axis=-1) - (x @ center) ** 2, 0.0)
    g = 1.0 / np.sqrt(1.0 + xbar2)
    fade = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)
    return np.sqrt(lam * lam + v * v) + g * (1.0 - vhat) * fade


def spacelike_check(f, lo, hi, spacing):
    """Max central-difference gradient norm of f on a box, with witness."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or np.any(hi <= lo) or spacing <= 0.0:
        raise ConfigError("spacelike_check needs lo < hi per axis and a positive spacing")
    axes = [np.arange(a, b + 0.5 * spacing, spacing) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = np.asarray(_evaluate(f, pts), dtype=float)
    norm2 = np.zeros(vals.shape)
    for a in range(len(axes)):
        grad = np.gradient(vals, spacing, axis=a)
        norm2 += grad * grad
    idx = np.unravel_index(int(np.argmax(norm2)), norm2.shape)
    return float(math.sqrt(norm2[idx])), pts[idx]


def gradient_bound(u, ubar, psi, x, lo, hi, spacing):
    """Right-hand side of the barrier gradient estimate at x.

    bound = 1/(u(x) - psi(x)) * sup over the sampled region {u > psi} of
    (ubar - psi)/sqrt(1 - |D psi|^2).  The caller compares the bound with
    the measured 1/sqrt(1 - |Du(x)|^2).
    """
    x = np.asarray(x, dtype=float)
    ux = float(np.asarray(_evaluate(u, x)))
    px = float(np.asarray(_evaluate(psi, x)))
    if ux <= px:
        raise DomainError("the estimate applies only at points with u > psi")
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    axes = [np.arange(a, b + 0.5 * spacing, spacing) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    pv = np.asarray(_evaluate(psi, pts), dtype=float)
    uv = np.asarray(_evaluate(u, pts), dtype=float)
    norm2 = np.zeros(pv.shape)
    for a in range(len(axes)):
        grad = np.gradient(pv, spacing, axis=a)
        norm2 += grad * grad
    mask = uv > pv
    if not np.any(mask):
        raise DomainError("the sampled region never has u > psi")
    if np.any(norm2[mask] >= 1.0):
        bad = np.unravel_index(int(np.argmax(np.where(mask, norm2, -np.inf))), norm2.shape)
        raise SpacelikeViolationError(f"psi is not spacelike at {pts[bad]}")
    sup = np.max((np.asarray(_evaluate(ubar, pts), dtype=float)[mask] - pv[mask]) / np.sqrt(1.0 - norm2[mask]))
    return float(sup / (ux - px))


def semitrough_upper_estimate(z, x):
    """Both sides of the hemisphere support estimate for the standard trough.

    lhs = z(x); rhs = V(x) + (1 - V(x/|x|)) / sqrt(1 + |xbar|^2) with V the
    support function of the closed hemisphere around the first axis.  The
    inequality lhs <= rhs + eps holds for |x| large.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    e1 = np.zeros(n)
    e1[0] = 1.0
    r = np.sqrt(np.sum(x * x, axis=-1))
    if np.any(r == 0.0):
        raise DomainError("the estimate needs nonzero points")
    v = cap_support(x, e1, 0.5 * math.pi)
    xbar2 = np.maximum(np.sum(x * x, axis=-1) - x[..., 0] ** 2, 0.0)
    rhs = v + (1.0 - v / r) / np.sqrt(1.0 + xbar2)
    return z.value(x), rhs
