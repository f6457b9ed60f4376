"""Constant-curvature semitrough profiles and their boosted families.

A semitrough is the entire spacelike graph

    z(x) = sqrt(f(x1)^2 + |x_bar|^2),    x_bar = (x2, ..., xn),

built from a strictly increasing profile f with 0 < f' < 1.  The graph has
one principal curvature f''/(1-f'^2)^(3/2) along the profile direction and
n-1 copies of 1/(f sqrt(1-f'^2)) around the channel, so prescribing
sigma_1 = n (mean family) or sigma_n = 1 (gauss family) reduces to

    mean:   f'' = n (1-f'^2)^(3/2) - (n-1) (1-f'^2) / f
    gauss:  f'' = f^(n-1) (1-f'^2)^(n/2+1)

Profiles run from a flat end, f -> l as t -> -inf with l = (n-1)/n for the
mean family and l = 0 for the gauss family, to a null end f(t) - t -> 0.
The two-sided behavior fixes the solution up to translation; solve_profile
pins it down by shooting on the entry amplitude at t_min and bisecting
until the extrapolated gap at the null end vanishes.

Boosting along the profile axis and rotating the axis produce the trough
attached to an arbitrary spherical cap of directions: the Gauss image of
the boosted graph is the convex hull of the cap.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .caps import cap_support, rotation_to_axis, unit
from .errors import ConfigError, ConvergenceError, DomainError

_KINDS = ("mean", "gauss")


def _check_kind(kind):
    if kind not in _KINDS:
        raise ConfigError(f"unknown profile kind {kind!r}; expected one of {_KINDS}")


def left_limit(kind, n):
    """Limit of the profile at the flat end: (n-1)/n or 0."""
    _check_kind(kind)
    return (n - 1.0) / n if kind == "mean" else 0.0


def growth_rate(kind, n):
    """Linearized escape rate from the flat end (mean family only)."""
    _check_kind(kind)
    if kind != "mean":
        raise ConfigError("the gauss family leaves f = 0 along a power law, not a rate")
    return n / math.sqrt(n - 1.0)


def profile_rhs(kind, n, f, fprime):
    """Second derivative prescribed by the constant-curvature ODE."""
    _check_kind(kind)
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fprime, dtype=float)
    q = 1.0 - fp * fp
    if np.any(q <= 0.0):
        raise DomainError("profile slope must stay strictly below one")
    if kind == "mean":
        if np.any(f <= 0.0):
            raise DomainError("mean-family profile must stay positive")
        return n * q ** 1.5 - (n - 1.0) * q / f
    if np.any(f < 0.0):
        raise DomainError("gauss-family profile must stay nonnegative")
    return f ** (n - 1) * q ** (0.5 * n + 1.0)


# -- integration ---------------------------------------------------------------

# The flat end is approached within machine epsilon of l long before t_min,
# so the state is marched in the offset a = f - l.  For the mean family the
# raw right-hand side n q^(3/2) - (n-1) q / (l+a) cancels catastrophically
# at a ~ 1e-18; the equivalent form below subtracts nothing small.


def _accel1(kind, n, l, a, ap):
    q = 1.0 - ap * ap
    if q <= 0.0:
        return math.inf
    if kind == "mean":
        return n * q * (a / (l + a) - ap * ap / (1.0 + math.sqrt(q)))
    return (a if a > 0.0 else 0.0) ** (n - 1) * q ** (0.5 * n + 1.0)


def _integrate(kind, n, t0, a0, ap0, h, n_steps, keep=()):
    """Classical fourth-order march of the offset system (a, a').

    keep is a sorted iterable of step indices to sample.  Returns
    (samples, died) where samples is a list of (a, a') at the kept indices
    and died is the first step at which the spacelike bound broke, or None.
    """
    l = left_limit(kind, n)
    a, ap = float(a0), float(ap0)
    keep = list(keep)
    samples = []
    pos = 0
    if pos < len(keep) and keep[pos] == 0:
        samples.append((a, ap))
        pos += 1
    h2, h6 = 0.5 * h, h / 6.0
    for i in range(1, n_steps + 1):
        k1p = _accel1(kind, n, l, a, ap)
        a2, p2 = a + h2 * ap, ap + h2 * k1p
        k2p = _accel1(kind, n, l, a2, p2)
        a3, p3 = a + h2 * p2, ap + h2 * k2p
        k3p = _accel1(kind, n, l, a3, p3)
        a4, p4 = a + h * p3, ap + h * k3p
        k4p = _accel1(kind, n, l, a4, p4)
        a = a + h6 * (ap + 2.0 * (p2 + p3) + p4)
        ap = ap + h6 * (k1p + 2.0 * (k2p + k3p) + k4p)
        if not (ap < 1.0 - 1e-9 and math.isfinite(a) and l + a > 0.0 and a < 1e6):
            return samples, i
        if pos < len(keep) and keep[pos] == i:
            samples.append((a, ap))
            pos += 1
    return samples, None


def integrate_profile(kind, n, t0, f0, fp0, t1, step=1e-3):
    """March the profile ODE from (f0, f0') at t0 to t1; returns (f1, f1')."""
    _check_kind(kind)
    if t1 <= t0 or step <= 0.0:
        raise ConfigError("need t1 > t0 and a positive step")
    l = left_limit(kind, n)
    n_steps = int(round((t1 - t0) / step))
    samples, died = _integrate(kind, n, t0, f0 - l, fp0, step, n_steps, keep=(n_steps,))
    if died is not None:
        raise DomainError(f"profile left the spacelike regime at t = {t0 + died * step:.6g}")
    a, ap = samples[0]
    return l + a, ap


def _tail_gap(ts, fs):
    """Extrapolate f(t) - t to t -> inf from samples on the null end.

    Least-squares fit of g + b1/t + ... + b4/t^4; b1 comes out 1/2 for
    every profile family, which is left free as a consistency diagnostic.
    Returns (gap, b1, fit_residual).
    """
    ts = np.asarray(ts, dtype=float)
    fs = np.asarray(fs, dtype=float)
    A = np.vander(1.0 / ts, 5, increasing=True)
    scale = np.sqrt(np.sum(A * A, axis=0))
    coef, *_ = np.linalg.lstsq(A / scale, fs - ts, rcond=None)
    coef /= scale
    resid = float(np.max(np.abs(A @ coef - (fs - ts))))
    return float(coef[0]), float(coef[1]), resid


_SHOOT_STEP = 2e-3


def _shoot(kind, n, t_min, tau, h, stop_idx, stop_times):
    """Extrapolated null-end gap of the profile seeded with amplitude e^tau."""
    l = left_limit(kind, n)
    a0 = math.exp(tau)
    if kind == "mean":
        ap0 = growth_rate(kind, n) * a0
    else:
        ap0 = math.sqrt(2.0 / n) * a0 ** (0.5 * n)
    samples, died = _integrate(kind, n, t_min, a0, ap0, h, stop_idx[-1], keep=stop_idx)
    if died is not None or len(samples) < len(stop_idx):
        return math.inf, math.inf, math.inf
    fs = l + np.array([s[0] for s in samples])
    return _tail_gap(stop_times, fs)


def solve_profile(kind, n, t_min=-20.0, t_max=20.0, tol=1e-7, step=1e-3):
    """Shoot for the canonical profile and sample it on [t_min, t_max].

    The entry amplitude a0 at t_min (offset from the flat limit, seeded
    with the asymptotic slope law of the family) is bisected in log scale
    until the extrapolated gap f(t) - t at the null end vanishes within
    tol.  The returned profile stores f, f' on a uniform grid of the given
    step together with measured diagnostics; the direct-substitution ODE
    residual of the stored samples must come out below tol or the step is
    rejected.
    """
    _check_kind(kind)
    n = int(n)
    if n < 2:
        raise ConfigError("profile dimension must be at least 2")
    if t_min > -10.0 or t_max < 10.0:
        raise ConfigError("need t_min <= -10 and t_max >= 10")
    if tol <= 0.0 or step <= 0.0:
        raise ConfigError("tolerances and steps must be positive")
    l = left_limit(kind, n)

    # gap samples on [T/2, T] feed the 1/t extrapolation
    h = _SHOOT_STEP
    t_shoot = max(t_max + 24.0, 44.0)
    raw = np.linspace(0.5 * t_shoot, t_shoot, 9)
    stop_idx = np.unique(np.round((raw - t_min) / h).astype(int))
    stop_times = t_min + stop_idx * h

    lo, hi = (math.log(1e-26), math.log(5e-2)) if kind == "mean" else (math.log(1e-12), math.log(0.5))
    taus = np.linspace(lo, hi, 41)
    gaps = np.array([_shoot(kind, n, t_min, tau, h, stop_idx, stop_times)[0] for tau in taus])
    pairs = np.flatnonzero((gaps[:-1] < 0.0) & (gaps[1:] >= 0.0))
    if pairs.size == 0:
        raise ConvergenceError(
            "no shooting bracket: gap range "
            f"[{np.min(gaps):.3e}, {np.max(gaps):.3e}] over seed exponents [{lo:.1f}, {hi:.1f}]"
        )
    tau_lo, tau_hi = float(taus[pairs[0]]), float(taus[pairs[0] + 1])

    best = (math.inf, tau_hi)
    for _ in range(64):
        tau_mid = 0.5 * (tau_lo + tau_hi)
        g_mid, _, _ = _shoot(kind, n, t_min, tau_mid, h, stop_idx, stop_times)
        if abs(g_mid) < abs(best[0]):
            best = (g_mid, tau_mid)
        if abs(g_mid) <= 0.25 * tol or tau_hi - tau_lo < 1e-13:
            break
        if g_mid < 0.0:
            tau_lo = tau_mid
        else:
            tau_hi = tau_mid
    gap_hat, tau_star = best
    if not abs(gap_hat) <= tol:
        raise ConvergenceError(
            f"shooting stalled at extrapolated gap {gap_hat:.3e} (tol {tol:g}); "
            "the tail fit floor was reached before the target"
        )
    _, b1, fit_resid = _shoot(kind, n, t_min, tau_star, h, stop_idx, stop_times)

    # final march at the requested step, plus a halved-step verification
    a0 = math.exp(tau_star)
    ap0 = growth_rate(kind, n) * a0 if kind == "mean" else math.sqrt(2.0 / n) * a0 ** (0.5 * n)
    n_nodes = int(round((t_max - t_min) / step))
    samples, died = _integrate(kind, n, t_min, a0, ap0, step, n_nodes, keep=range(n_nodes + 1))
    if died is not None:
        raise ConvergenceError(f"canonical profile left the spacelike regime at step {died}")
    state = np.array(samples)
    half, died_h = _integrate(
        kind, n, t_min, a0, ap0, 0.5 * step, 2 * n_nodes, keep=range(0, 2 * n_nodes + 1, 2)
    )
    if died_h is not None:
        raise ConvergenceError("halved-step verification failed to finish")
    halving = float(np.max(np.abs(state[:, 0] - np.array(half)[:, 0])))

    t_grid = t_min + step * np.arange(n_nodes + 1)
    f = l + state[:, 0]
    fp = state[:, 1]
    # direct substitution: five-point derivative of the stored slopes
    dfp = (fp[:-4] - 8.0 * fp[1:-3] + 8.0 * fp[3:-1] - fp[4:]) / (12.0 * step)
    residual = float(np.max(np.abs(dfp - profile_rhs(kind, n, f[2:-2], fp[2:-2]))))
    if residual > tol:
        raise ConvergenceError(
            f"ODE residual {residual:.3e} exceeds tol {tol:g} at step {step:g}; decrease the step"
        )
    if halving > max(tol, 1e-10):
        raise ConvergenceError(f"step-halving drift {halving:.3e} exceeds tol at step {step:g}")

    tolerances = {
        "ode_residual": residual,
        "step": step,
        "step_halving": halving,
        "shoot_gap": abs(gap_hat),
        "tail_fit_residual": fit_resid,
        "tail_slope_coeff": b1,
        "left_gap": float(a0),
        "right_gap": float(f[-1] - t_grid[-1]),
    }
    return SemitroughProfile(
        kind=kind,
        n=n,
        t=t_grid,
        f=f,
        fprime=fp,
        tolerances=tolerances,
        left_offset=a0,
    )


# -- sampled profiles and their placements -------------------------------------


@dataclass
class SemitroughProfile:
    """Sampled canonical profile plus the boost/rotation placing its cap.

    Treated as immutable after construction; reuse across threads is safe.
    """

    kind: str
    n: int
    t: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    alpha: float = 0.0
    rotation: np.ndarray = None
    tolerances: dict = field(default_factory=dict)
    left_offset: float = 0.0

    def __post_init__(self):
        _check_kind(self.kind)
        self.t = np.asarray(self.t, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.fprime = np.asarray(self.fprime, dtype=float)
        if self.t.ndim != 1 or self.t.size < 4 or np.any(np.diff(self.t) <= 0.0):
            raise ConfigError("profile grid must be increasing with at least 4 nodes")
        if self.f.shape != self.t.shape or self.fprime.shape != self.t.shape:
            raise ConfigError("profile samples must match the grid")
        if np.any(self.f <= 0.0) or np.any(self.fprime <= 0.0) or np.any(self.fprime >= 1.0):
            raise DomainError("profile samples must satisfy f > 0 and 0 < f' < 1")
        if not -1.0 < self.alpha < 1.0:
            raise DomainError("boost velocity must lie in (-1, 1)")
        if self.rotation is None:
            self.rotation = np.eye(self.n)
        self.rotation = np.asarray(self.rotation, dtype=float)
        if self.rotation.shape != (self.n, self.n):
            raise ConfigError("rotation must be an n-by-n matrix")
        fpp = profile_rhs(self.kind, self.n, self.f, self.fprime)
        self._value_spline = CubicHermiteSpline(self.t, self.f, self.fprime)
        self._slope_spline = CubicHermiteSpline(self.t, self.fprime, fpp)
        self._curve_spline = self._slope_spline.derivative()
        # odd tail f = t + 1/(2t) + b3/t^3, with b3 matching the last sample
        self._beta3 = (self.right_gap - 0.5 / self.t[-1]) * self.t[-1] ** 3

    # -- the 1-D profile --------------------------------------------------

    @property
    def flat_limit(self):
        return left_limit(self.kind, self.n)

    @property
    def right_gap(self):
        return float(self.f[-1] - self.t[-1])

    def profile_value(self, tq):
        """f(t); entry and tail laws continue the samples beyond the grid."""
        tq = np.asarray(tq, dtype=float)
        inner = self._value_spline(np.clip(tq, self.t[0], self.t[-1]))
        out = np.where(tq < self.t[0], self._left_value(tq), inner)
        return np.where(tq > self.t[-1], self._right_value(tq), out)

    def profile_slope(self, tq):
        """f'(t), continued by the same entry and tail laws."""
        tq = np.asarray(tq, dtype=float)
        inner = self._slope_spline(np.clip(tq, self.t[0], self.t[-1]))
        out = np.where(tq < self.t[0], self._left_slope(tq), inner)
        return np.where(tq > self.t[-1], self._right_slope(tq), out)

    def profile_second(self, tq):
        tq = np.asarray(tq, dtype=float)
        inner = self._curve_spline(np.clip(tq, self.t[0], self.t[-1]))
        out = np.where(tq < self.t[0], self._left_second(tq), inner)
        return np.where(tq > self.t[-1], self._right_second(tq), out)

    def inverse_slope(self, eta):
        """t with f'(t) = eta, using the asymptotic laws beyond the grid."""
        eta = np.asarray(eta, dtype=float)
        if np.any(eta <= 0.0) or np.any(eta >= 1.0):
            raise DomainError("slopes of the profile fill (0, 1)")
        lo, hi = self.fprime[0], self.fprime[-1]
        tq = np.interp(eta, self.fprime, self.t)
        for _ in range(4):
            tq = tq - (self._slope_spline(tq) - eta) / np.maximum(self._curve_spline(tq), 1e-300)
            tq = np.clip(tq, self.t[0], self.t[-1])
        below, above = eta < lo, eta > hi
        if np.any(below):
            tq = np.where(below, self._left_inverse(np.where(below, eta, lo)), tq)
        if np.any(above):
            tq = np.where(above, self._right_inverse(np.where(above, eta, hi)), tq)
        return tq

    def _left_inverse(self, eta):
        # invert the entry law: exponential mode (mean), power law (gauss)
        if self.kind == "mean":
            mu = growth_rate(self.kind, self.n)
            return self.t[0] + np.log(eta / (mu * self.left_offset)) / mu
        nn = self.n
        feta = (eta * math.sqrt(0.5 * nn)) ** (2.0 / nn)
        if nn == 2:
            return self.t[0] + np.log(feta / self.left_offset)
        power = -(nn - 2.0) / 2.0
        coef = 2.0 / ((nn - 2.0) * math.sqrt(2.0 / nn))
        return self.t[0] - coef * (feta ** power - self.left_offset ** power)

    def _left_value(self, tq):
        # entry law values for t below the grid, sharper than the flat limit
        tq = np.minimum(np.asarray(tq, dtype=float), self.t[0])
        if self.kind == "mean":
            mu = growth_rate(self.kind, self.n)
            return self.flat_limit + self.left_offset * np.exp(mu * (tq - self.t[0]))
        nn = self.n
        if nn == 2:
            return self.left_offset * np.exp(tq - self.t[0])
        power = -(nn - 2.0) / 2.0
        base = self.left_offset ** power + 0.5 * (nn - 2.0) * math.sqrt(2.0 / nn) * (self.t[0] - tq)
        return base ** (1.0 / power)

    def _left_slope(self, tq):
        # first integral at the flat end: f' = mu (f - l), or sqrt(2/n) f^(n/2);
        # the mean branch keeps the offset explicit to dodge cancellation
        tq = np.minimum(np.asarray(tq, dtype=float), self.t[0])
        if self.kind == "mean":
            mu = growth_rate(self.kind, self.n)
            return mu * self.left_offset * np.exp(mu * (tq - self.t[0]))
        return math.sqrt(2.0 / self.n) * self._left_value(tq) ** (0.5 * self.n)

    def _left_second(self, tq):
        if self.kind == "mean":
            return growth_rate(self.kind, self.n) * self._left_slope(tq)
        return self._left_value(tq) ** (self.n - 1)

    def _right_value(self, tq):
        tt = np.maximum(np.asarray(tq, dtype=float), 1.0)
        return tt + 0.5 / tt + self._beta3 / tt ** 3

    def _right_slope(self, tq):
        tt = np.maximum(np.asarray(tq, dtype=float), 1.0)
        return 1.0 - 0.5 / tt ** 2 - 3.0 * self._beta3 / tt ** 4

    def _right_second(self, tq):
        tt = np.maximum(np.asarray(tq, dtype=float), 1.0)
        return tt ** -3 + 12.0 * self._beta3 / tt ** 5

    def _right_inverse(self, eta):
        # seed with the leading law, then sharpen on the full tail series
        tq = np.sqrt(0.5 / np.maximum(1.0 - np.asarray(eta, dtype=float), 1e-300))
        for _ in range(2):
            slope = np.maximum(self._right_second(tq), 1e-300)
            tq = np.maximum(tq - (self._right_slope(tq) - eta) / slope, 1.0)
        return tq

    # -- the graph in R^n -------------------------------------------------

    def gauss_cap(self):
        """Center direction and radius of the cap the Gauss image fills."""
        return self.rotation[0].copy(), math.acos(-self.alpha)

    def value(self, x):
        """Height of the boosted, rotated trough graph at x (vectorized)."""
        x = np.asarray(x, dtype=float)
        y = x @ self.rotation.T
        y1 = y[..., 0]
        rho2 = np.sum(y[..., 1:] ** 2, axis=-1)
        if self.alpha == 0.0:
            return np.sqrt(self.profile_value(y1) ** 2 + rho2)
        al = self.alpha
        gam = 1.0 / math.sqrt(1.0 - al * al)
        # monotone root of gam (T + al y1) = sqrt(f(gam (y1 + al T))^2 + rho^2)
        T = np.sqrt(1.0 + y1 * y1 + rho2)
        for _ in range(80):
            s = gam * (y1 + al * T)
            fv = self.profile_value(s)
            u = np.sqrt(fv * fv + rho2)
            phi = gam * (T + al * y1) - u
            slope1 = np.where(u > 0.0, fv * self.profile_slope(s) / np.maximum(u, 1e-300), 0.0)
            dphi = gam * (1.0 - al * slope1)
            delta = phi / dphi
            T = T - np.clip(delta, -5.0, 5.0)
            if np.max(np.abs(phi)) < 1e-13 * (1.0 + np.max(np.abs(T))):
                break
        return T

    def gradient(self, x):
        """Gradient of the trough graph at x; lies in the open unit ball."""
        x = np.asarray(x, dtype=float)
        y = x @ self.rotation.T
        y1 = y[..., 0]
        ybar = y[..., 1:]
        rho2 = np.sum(ybar ** 2, axis=-1)
        al = self.alpha
        if al == 0.0:
            s = y1
        else:
            T = self.value(x)
            s = (y1 + al * T) / math.sqrt(1.0 - al * al)
        fv = self.profile_value(s)
        u = np.sqrt(fv * fv + rho2)
        p1 = fv * self.profile_slope(s) / u
        pbar = ybar / u[..., None]
        d = 1.0 - al * p1
        q1 = (p1 - al) / d
        qbar = math.sqrt(1.0 - al * al) * pbar / d[..., None]
        return np.concatenate([q1[..., None], qbar], axis=-1) @ self.rotation

    def tangent_point(self, xi):
        """Graph point and height whose gradient equals xi.

        Inverts the Gauss map on the interior of the image cap; the returned
        pair (x, u) satisfies x . xi - u = conjugate(xi).
        """
        xi = np.asarray(xi, dtype=float)
        y = xi @ self.rotation.T
        al = self.alpha
        denom = 1.0 + al * y[..., 0]
        xs1 = (y[..., 0] + al) / denom
        xsbar = math.sqrt(1.0 - al * al) * y[..., 1:] / denom[..., None]
        if np.any(xs1 ** 2 + np.sum(xsbar ** 2, axis=-1) >= 1.0) or np.any(xs1 <= 0.0):
            raise DomainError("gradient queries must lie inside the open Gauss image")
        c = np.sqrt(1.0 - np.sum(xsbar ** 2, axis=-1))
        t = self.inverse_slope(xs1 / c)
        fv = self.profile_value(t)
        u = fv / c
        root = math.sqrt(1.0 - al * al)
        y1 = (t - al * u) / root
        pt = np.concatenate([y1[..., None], fv[..., None] * xsbar / c[..., None]], axis=-1)
        return pt @ self.rotation, (u - al * t) / root

    def conjugate(self, xi):
        """Legendre transform at xi in the open unit ball (vectorized).

        Finite exactly on the closed dual cap; +inf elsewhere in the ball.
        """
        xi = np.asarray(xi, dtype=float)
        y = xi @ self.rotation.T
        al = self.alpha
        denom = 1.0 + al * y[..., 0]
        xs1 = (y[..., 0] + al) / denom
        xsbar = math.sqrt(1.0 - al * al) * y[..., 1:] / denom[..., None]
        if np.any(xs1 * xs1 + np.sum(xsbar ** 2, axis=-1) >= 1.0):
            raise DomainError("conjugate queries must stay in the open unit ball")
        c = np.sqrt(1.0 - np.sum(xsbar ** 2, axis=-1))
        eta = xs1 / c
        out = np.full(np.shape(eta), np.inf)
        zero = eta == 0.0
        out = np.where(zero, -self.flat_limit * c, out)
        small = (eta > 0.0) & (eta < self.fprime[0])
        if np.any(small):
            es = np.where(small, eta, 0.5 * self.fprime[0])
            ts = self._left_inverse(es)
            out = np.where(small, c * (ts * es - self._left_value(ts)), out)
        big = eta > self.fprime[-1]
        if np.any(big):
            eb = np.where(big, eta, self.fprime[-1])
            tb = self._right_inverse(eb)
            out = np.where(big, c * (tb * eb - self._right_value(tb)), out)
        mid = (eta >= self.fprime[0]) & (eta <= self.fprime[-1])
        if np.any(mid):
            em = np.where(mid, eta, 0.5 * (self.fprime[0] + self.fprime[-1]))
            tm = self.inverse_slope(em)
            out = np.where(mid, c * (tm * em - self._value_spline(tm)), out)
        return out * denom / math.sqrt(1.0 - al * al)

    # -- serialization -----------------------------------------------------

    def to_csv(self, path):
        """One row per node: t, f, fprime; placement in the meta line."""
        meta = {
            "kind": self.kind,
            "n": self.n,
            "alpha": self.alpha,
            "rotation": self.rotation.tolist(),
            "tolerances": self.tolerances,
            "left_offset": self.left_offset,
        }
        data = np.column_stack([self.t, self.f, self.fprime])
        header = json.dumps(meta) + "\nt,f,fprime"
        np.savetxt(path, data, delimiter=",", header=header, comments="# ")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            meta = json.loads(fh.readline().lstrip("# ").strip())
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=2))
        return cls(
            kind=meta["kind"],
            n=meta["n"],
            t=data[:, 0],
            f=data[:, 1],
            fprime=data[:, 2],
            alpha=meta["alpha"],
            rotation=np.array(meta["rotation"]),
            tolerances=meta["tolerances"],
            left_offset=meta["left_offset"],
        )


def cap_to_boost(center, delta):
    """Boost velocity and rotation that place a trough on a spherical cap.

    The Gauss image of the placed trough is the convex hull of
    {xi in S^(n-1): xi . center >= cos(delta)}: boosting by
    alpha = -cos(delta) moves the flat edge of the dual half-ball to the
    cap boundary, and the rotation takes the cap center to the first axis.
    """
    if not 0.0 < delta < math.pi:
        raise DomainError(f"cap radius must lie strictly between 0 and pi, got {delta}")
    return -math.cos(delta), rotation_to_axis(center)


def cap_trough(profile, center, delta):
    """The boosted, rotated copy of a canonical profile for the given cap."""
    alpha, rotation = cap_to_boost(center, delta)
    return dataclasses.replace(profile, alpha=alpha, rotation=rotation)


def asymptotic_gap(z, theta, r_list):
    """z(r theta) - V_cap(r theta) per radius; the caller asserts limits."""
    theta = unit(theta)
    rs = np.asarray(r_list, dtype=float)
    x = rs[:, None] * theta[None, :]
    center, delta = z.gauss_cap()
    return z.value(x) - cap_support(x, center, delta)
