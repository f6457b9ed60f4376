"""Oracle and behavior tests for the semitrough profile machinery.

The unit hyperboloid f(t) = sqrt(1 + t^2) solves both profile ODEs exactly
(both right-hand sides reduce to (1 + t^2)^(-3/2)), which pins the
normalization of each family and gives the integrator and the tail
extrapolation closed-form targets.
"""

import math

import numpy as np
import pytest

from sigmak import geometry, symfunc, troughs
from sigmak.errors import ConfigError, DomainError
from sigmak.grids import GridFunction


def hyper(t):
    t = np.asarray(t, dtype=float)
    return np.sqrt(1.0 + t * t)


@pytest.fixture(scope="module")
def mean2():
    return troughs.solve_profile("mean", 2)


@pytest.fixture(scope="module")
def gauss2():
    return troughs.solve_profile("gauss", 2)


@pytest.fixture(scope="module")
def gauss3():
    return troughs.solve_profile("gauss", 3)


class TestProfileRhs:
    def test_hyperboloid_solves_both_families(self):
        t = np.linspace(-3.0, 3.0, 13)
        f = hyper(t)
        fp = t / f
        target = (1.0 + t * t) ** -1.5
        for n in (2, 3, 4):
            for kind in ("mean", "gauss"):
                got = troughs.profile_rhs(kind, n, f, fp)
                assert np.max(np.abs(got - target)) < 1e-13

    def test_frozen_values(self):
        # n q^{3/2} - (n-1) q / f  and  f^{n-1} q^{n/2+1}, worked by hand
        assert math.isclose(
            troughs.profile_rhs("mean", 3, 1.0, 0.5), 0.448557158514987, rel_tol=1e-13
        )
        assert math.isclose(
            troughs.profile_rhs("mean", 2, 1.3, 0.9), 0.019484313700699418, rel_tol=1e-13
        )
        assert math.isclose(
            troughs.profile_rhs("gauss", 3, 0.8, 0.3), 0.5055725137237586, rel_tol=1e-13
        )
        assert math.isclose(
            troughs.profile_rhs("gauss", 2, 0.7, 0.45), 0.445204375, rel_tol=1e-13
        )

    def test_rejects_causal_slope(self):
        for kind in ("mean", "gauss"):
            with pytest.raises(DomainError):
                troughs.profile_rhs(kind, 2, 1.0, 1.0)

    def test_rejects_bad_height(self):
        with pytest.raises(DomainError):
            troughs.profile_rhs("mean", 2, 0.0, 0.5)
        with pytest.raises(DomainError):
            troughs.profile_rhs("gauss", 2, -0.1, 0.5)
        # the gauss family touches f = 0 in the limit, so zero is admitted
        assert troughs.profile_rhs("gauss", 3, 0.0, 0.5) == 0.0

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            troughs.profile_rhs("scalar", 2, 1.0, 0.5)

    def test_limits_and_rates(self):
        assert troughs.left_limit("mean", 2) == 0.5
        assert troughs.left_limit("mean", 3) == pytest.approx(2.0 / 3.0)
        assert troughs.left_limit("gauss", 5) == 0.0
        assert troughs.growth_rate("mean", 2) == pytest.approx(2.0)
        assert troughs.growth_rate("mean", 5) == pytest.approx(2.5)
        with pytest.raises(ConfigError):
            troughs.growth_rate("gauss", 3)


class TestIntegration:
    def test_tracks_hyperboloid(self):
        t0, t1 = 1.0, 5.0
        for kind in ("mean", "gauss"):
            f1, fp1 = troughs.integrate_profile(
                kind, 3, t0, math.sqrt(2.0), 1.0 / math.sqrt(2.0), t1
            )
            assert abs(f1 - math.sqrt(26.0)) < 1e-10
            assert abs(fp1 - 5.0 / math.sqrt(26.0)) < 1e-10

    def test_bad_direction(self):
        with pytest.raises(ConfigError):
            troughs.integrate_profile("mean", 2, 2.0, hyper(2.0), 0.5, 1.0)

    def test_tail_fit_on_closed_form(self):
        # sqrt(1+t^2) - t = 1/(2t) - 1/(8 t^3) + ...: zero constant, b1 = 1/2
        ts = np.linspace(22.0, 44.0, 9)
        gap, b1, resid = troughs._tail_gap(ts, hyper(ts))
        assert abs(gap) < 1e-8
        assert abs(b1 - 0.5) < 1e-4
        assert resid < 1e-10


class TestSolveProfile:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            troughs.solve_profile("mean", 1)
        with pytest.raises(ConfigError):
            troughs.solve_profile("area", 2)
        with pytest.raises(ConfigError):
            troughs.solve_profile("mean", 2, t_min=-5.0)
        with pytest.raises(ConfigError):
            troughs.solve_profile("mean", 2, t_max=8.0)
        with pytest.raises(ConfigError):
            troughs.solve_profile("mean", 2, tol=0.0)

    @pytest.mark.parametrize("name", ["mean2", "gauss2", "gauss3"])
    def test_invariants(self, name, request):
        p = request.getfixturevalue(name)
        assert p.t[0] == -20.0 and p.t[-1] == 20.0
        assert np.all(p.f > 0.0)
        assert np.all((p.fprime > 0.0) & (p.fprime < 1.0))
        # near the flat end the offset sits below double resolution, so the
        # sampled heights may tie; away from it the profile grows strictly
        assert np.all(np.diff(p.f) >= 0.0)
        assert np.all(np.diff(p.f[p.t >= -10.0]) > 0.0)
        assert np.all(np.diff(p.fprime) > -1e-15)
        # strictly below the unit hyperboloid, the umbilic member of both families
        assert np.all(p.f < hyper(p.t))

    @pytest.mark.parametrize("name", ["mean2", "gauss2", "gauss3"])
    def test_ode_residual_recomputed(self, name, request):
        # five-point first derivative of f' against the prescribed f''
        p = request.getfixturevalue(name)
        h = p.t[1] - p.t[0]
        fp = p.fprime
        d = (fp[:-4] - 8.0 * fp[1:-3] + 8.0 * fp[3:-1] - fp[4:]) / (12.0 * h)
        rhs = troughs.profile_rhs(p.kind, p.n, p.f[2:-2], fp[2:-2])
        assert np.max(np.abs(d - rhs)) < 1e-8

    @pytest.mark.parametrize("name", ["mean2", "gauss2", "gauss3"])
    def test_recorded_diagnostics(self, name, request):
        p = request.getfixturevalue(name)
        tol = p.tolerances
        assert tol["ode_residual"] < 1e-8
        assert tol["shoot_gap"] <= 1e-7
        assert tol["step_halving"] < 1e-9
        assert abs(tol["tail_slope_coeff"] - 0.5) < 2e-3

    def test_left_ends(self, mean2, gauss2, gauss3):
        assert abs(mean2.f[0] - 0.5) < 1e-12
        assert gauss2.f[0] < 1e-6
        # n = 3 gauss leaves zero along a slow power law: still a few percent
        # above the limit at t = -20, by design of the canonical window
        assert 5e-3 < gauss3.f[0] < 5e-2

    def test_right_end(self, mean2, gauss2):
        for p in (mean2, gauss2):
            assert abs(p.right_gap - 0.025) < 2e-4
            assert p.fprime[-1] == pytest.approx(1.0 - 0.5 / 400.0, abs=2e-4)

    def test_mean_majorizes_gauss(self, mean2, gauss2):
        assert np.all(mean2.f > gauss2.f)
        assert np.min(mean2.f - gauss2.f) > 5e-6

    def test_profile_extensions(self, mean2, gauss3):
        assert mean2.flat_limit == 0.5
        # entry law: the offset at t = -25 is far below double resolution
        assert mean2.profile_value(-25.0) == pytest.approx(0.5, abs=1e-12)
        assert 0.0 < mean2.profile_slope(-25.0) < 1e-15
        # tail law: f - t keeps decaying like 1/(2t) past the sampled window
        assert mean2.profile_value(25.0) == pytest.approx(25.02, abs=5e-4)
        assert mean2.profile_slope(25.0) == pytest.approx(1.0 - 0.5 / 625.0, abs=1e-5)
        assert mean2.profile_second(25.0) == pytest.approx(25.0 ** -3, rel=0.05)
        # the slow gauss n=3 entry law keeps falling below f(-20)
        assert gauss3.profile_value(-100.0) < 1e-3
        # vectorized call mixing all three regions
        tq = np.array([-30.0, 0.0, 30.0])
        v = mean2.profile_value(tq)
        assert v.shape == (3,)
        assert v[1] == pytest.approx(float(mean2.profile_value(0.0)))

    def test_inverse_slope_roundtrip(self, mean2, gauss3):
        for p in (mean2, gauss3):
            etas = np.linspace(0.02, 0.97, 60)
            ts = p.inverse_slope(etas)
            assert np.max(np.abs(p.profile_slope(ts) - etas)) < 1e-9
            assert np.all(np.diff(ts) > 0.0)
        with pytest.raises(DomainError):
            mean2.inverse_slope(0.0)
        with pytest.raises(DomainError):
            mean2.inverse_slope(1.0)

    def test_inverse_slope_entry_laws(self, mean2, gauss2):
        # below the smallest sampled slope the entry laws take over
        for p in (mean2, gauss2):
            assert float(p.inverse_slope(0.25 * p.fprime[0])) < -20.0
        mu = troughs.growth_rate("mean", 2)
        eta = 0.25 * mean2.fprime[0]
        t = float(mean2.inverse_slope(eta))
        assert math.isclose(
            mu * mean2.left_offset * math.exp(mu * (t + 20.0)), eta, rel_tol=1e-9
        )
        # far beyond the grid the slope law t = sqrt(1/(2(1-eta))) applies
        assert float(mean2.inverse_slope(1.0 - 1e-5)) == pytest.approx(
            math.sqrt(0.5e5), rel=1e-2
        )


class TestGraphAndConjugate:
    def test_value_matches_profile(self, mean2):
        t = 0.7
        assert float(mean2.value(np.array([t, 0.0]))) == pytest.approx(
            float(mean2.profile_value(t)), abs=1e-14
        )
        f0 = float(mean2.profile_value(0.0))
        assert float(mean2.value(np.array([0.0, 2.0]))) == pytest.approx(
            math.sqrt(f0 * f0 + 4.0), abs=1e-14
        )

    def test_rotation_only_placement(self, mean2):
        # a half-ball cap tilts the trough without boosting it
        c = np.array([0.6, 0.8])
        z = troughs.cap_trough(mean2, c, math.pi / 2.0)
        rng = np.random.default_rng(3)
        x = rng.uniform(-3.0, 3.0, size=(40, 2))
        assert np.max(np.abs(z.value(x) - mean2.value(x @ z.rotation.T))) < 1e-11

    def test_gradient_in_unit_ball(self, mean2):
        rng = np.random.default_rng(5)
        x = rng.uniform(-8.0, 8.0, size=(200, 2))
        g = mean2.gradient(x)
        assert np.all(np.sum(g * g, axis=-1) < 1.0)

    def test_gradient_against_finite_differences(self, gauss2):
        z = troughs.cap_trough(gauss2, np.array([0.0, 1.0]), 2.0)
        rng = np.random.default_rng(11)
        x = rng.uniform(-2.0, 2.0, size=(25, 2))
        h = 1e-5
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (z.value(x + e) - z.value(x - e)) / (2.0 * h)
            assert np.max(np.abs(fd - z.gradient(x)[:, k])) < 1e-8

    def test_capped_gradient_image(self, mean2):
        # Gauss image of the pi/3 cap trough stays in {xi . center >= 1/2}
        z = troughs.cap_trough(mean2, np.array([1.0, 0.0]), math.pi / 3.0)
        rng = np.random.default_rng(7)
        x = rng.uniform(-12.0, 12.0, size=(400, 2))
        g = z.gradient(x)
        assert np.all(np.sum(g * g, axis=-1) < 1.0)
        dots = g[:, 0]
        assert np.min(dots) > 0.5 - 1e-12
        assert np.min(dots) < 0.52

    def test_tangent_point_inverts_gradient(self, mean2):
        z = troughs.cap_trough(mean2, np.array([0.6, 0.8]), math.pi / 3.0)
        rng = np.random.default_rng(0)
        x = rng.uniform(-3.0, 3.0, size=(8, 2))
        xi = z.gradient(x)
        pt, u = z.tangent_point(xi)
        assert np.max(np.abs(pt - x)) < 1e-10
        assert np.max(np.abs(u - z.value(x))) < 1e-10
        # Fenchel equality at the tangency point
        assert np.max(np.abs(np.sum(pt * xi, axis=-1) - u - z.conjugate(xi))) < 1e-12
        with pytest.raises(DomainError):
            z.tangent_point(np.array([-0.9, 0.0]))

    def test_cap_to_boost_examples(self):
        alpha, rot = troughs.cap_to_boost(np.array([1.0, 0.0]), math.pi / 2.0)
        assert abs(alpha) < 1e-15
        assert np.allclose(rot, np.eye(2))
        alpha, _ = troughs.cap_to_boost(np.array([1.0, 0.0]), math.pi / 3.0)
        assert alpha == pytest.approx(-0.5)
        _, rot = troughs.cap_to_boost(np.array([-1.0, 0.0]), 1.0)
        assert np.allclose(rot @ np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
        for bad in (0.0, math.pi):
            with pytest.raises(DomainError):
                troughs.cap_to_boost(np.array([1.0, 0.0]), bad)

    def test_conjugate_matches_sup_oracle(self, mean2, gauss2):
        # u*(xi) = sup_x (x . xi - u(x)), sampled on a dense box
        t = np.arange(-12.0, 6.0, 0.01)
        x2 = np.arange(-2.0, 2.0, 0.01)
        for p in (mean2, gauss2):
            u = np.sqrt(p.profile_value(t)[:, None] ** 2 + x2[None, :] ** 2)
            for xi in ([0.3, 0.2], [0.05, -0.5], [0.85, 0.1]):
                dot = t[:, None] * xi[0] + x2[None, :] * xi[1]
                grid_sup = float(np.max(dot - u))
                conj = float(p.conjugate(np.array(xi)))
                assert conj >= grid_sup - 1e-8
                assert conj <= grid_sup + 3e-4

    def test_conjugate_flat_edge(self, mean2, gauss2):
        # on the flat boundary disk the transform closes to -l sqrt(1-|xi|^2)
        xi = np.array([0.0, 0.4])
        assert float(mean2.conjugate(xi)) == pytest.approx(
            -0.5 * math.sqrt(1.0 - 0.16), abs=1e-14
        )
        assert float(gauss2.conjugate(xi)) == 0.0
        assert np.isinf(mean2.conjugate(np.array([-0.1, 0.2])))
        with pytest.raises(DomainError):
            mean2.conjugate(np.array([0.8, 0.6]))

    def test_conjugate_beyond_grid(self, mean2):
        # slopes above the sampled range: 1-d transform against a dense scan
        eta = 0.9995
        t = np.arange(0.5, 120.0, 5e-4)
        scan = float(np.max(t * eta - mean2.profile_value(t)))
        assert float(mean2.conjugate(np.array([eta, 0.0]))) == pytest.approx(scan, abs=1e-6)
        # approaching the sphere the transform closes to zero
        assert abs(float(mean2.conjugate(np.array([1.0 - 1e-8, 0.0])))) < 1e-3

    def test_conjugate_of_boosted_trough(self, mean2):
        # same sup oracle, now through the implicit boosted graph
        z = troughs.cap_trough(mean2, np.array([1.0, 0.0]), math.pi / 3.0)
        t = np.arange(-4.0, 4.0, 0.02)
        x2 = np.arange(-2.5, 2.5, 0.02)
        pts = np.stack(np.meshgrid(t, x2, indexing="ij"), axis=-1)
        u = z.value(pts)
        for xi in ([0.75, 0.1], [0.62, -0.3]):
            dot = pts[..., 0] * xi[0] + pts[..., 1] * xi[1]
            grid_sup = float(np.max(dot - u))
            conj = float(z.conjugate(np.array(xi)))
            assert conj >= grid_sup - 1e-8
            assert conj <= grid_sup + 5e-4
        # outside the boosted Gauss image the transform is infinite
        assert np.isinf(z.conjugate(np.array([0.45, 0.0])))

    def test_asymptotic_gap_directions(self, mean2, gauss2):
        rs = np.array([5.0, 10.0, 20.0, 100.0])
        # flat direction: gap tends to the left limit of the family
        g = troughs.asymptotic_gap(mean2, np.array([-1.0, 0.0]), rs)
        assert abs(g[-1] - 0.5) < 1e-3
        g = troughs.asymptotic_gap(gauss2, np.array([-1.0, 0.0]), rs)
        assert g[-1] < 1e-3
        # null direction: gap decays like 1/(2r), including past the grid
        g = troughs.asymptotic_gap(mean2, np.array([1.0, 0.0]), rs)
        assert np.all(g > 0.0) and np.all(g <= 0.6 / rs)
        rs = np.array([5.0, 10.0, 20.0])
        # cap-interior direction: the graph meets sqrt(r^2 + 1), so the gap
        # shrinks like 1/(2r) just as on the axis
        g = troughs.asymptotic_gap(mean2, np.array([0.6, 0.8]), rs)
        assert np.all(g > 0.0) and np.all(np.diff(g) < 0.0)
        assert abs(g[-1] - 0.025) < 2e-3


class TestBoostConsistency:
    def test_points_on_boosted_graph(self, mean2):
        # boost graph points with the geometry module; they must land on
        # the trough carrying the same velocity
        alpha = 0.3
        t = np.linspace(-6.0, 4.0, 41)
        x2 = np.linspace(-2.0, 2.0, 11)
        T, X2 = np.meshgrid(t, x2, indexing="ij")
        U = np.sqrt(mean2.profile_value(T) ** 2 + X2 * X2)
        pts = np.stack([T, X2, U], axis=-1).reshape(-1, 3)
        moved = geometry.boost_points(pts, alpha)
        zb = troughs.SemitroughProfile(
            kind=mean2.kind,
            n=mean2.n,
            t=mean2.t,
            f=mean2.f,
            fprime=mean2.fprime,
            alpha=alpha,
            tolerances=mean2.tolerances,
            left_offset=mean2.left_offset,
        )
        got = zb.value(moved[:, :2])
        assert np.max(np.abs(got - moved[:, 2])) < 1e-9

    def test_graph_resampling_boost(self, mean2):
        # full graph boost through lorentz_boost agrees with the closed form
        alpha = 0.3
        h = 0.02
        ax = np.arange(-2.5, 2.5 + 1e-12, h)
        vals = np.sqrt(mean2.profile_value(ax)[:, None] ** 2 + ax[None, :] ** 2)
        g = geometry.SpacelikeGraph(GridFunction(np.array([-2.5, -2.5]), np.array([h, h]), vals))
        boosted = geometry.lorentz_boost(g, alpha)
        zb = troughs.SemitroughProfile(
            kind=mean2.kind,
            n=mean2.n,
            t=mean2.t,
            f=mean2.f,
            fprime=mean2.fprime,
            alpha=alpha,
            tolerances=mean2.tolerances,
            left_offset=mean2.left_offset,
        )
        grid = boosted.base
        a0, a1 = grid.axes()
        nodes = np.stack(np.meshgrid(a0, a1, indexing="ij"), axis=-1)
        assert np.max(np.abs(zb.value(nodes) - grid.values)) < 2e-4


class TestCurvature:
    def sampled_sigma(self, z, x0, k):
        h, m = 2e-3, 3
        n = x0.size
        axes = [x0[i] + h * np.arange(-m, m + 1) for i in range(n)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        grid = GridFunction(x0 - m * h, np.full(n, h), z.value(pts))
        q = geometry.graph_quantities(grid, x0)
        return float(symfunc.sigma(q.kappa, k))

    def test_mean_family_curvature(self, mean2):
        rng = np.random.default_rng(0)
        for x0 in rng.uniform(-4.0, 4.0, size=(12, 2)):
            assert abs(self.sampled_sigma(mean2, x0, 1) - 2.0) < 1e-4

    def test_gauss_family_curvature(self, gauss2, gauss3):
        rng = np.random.default_rng(1)
        for x0 in rng.uniform(-3.0, 3.0, size=(10, 2)):
            assert abs(self.sampled_sigma(gauss2, x0, 2) - 1.0) < 1e-4
        for x0 in rng.uniform(-2.0, 2.0, size=(6, 3)):
            assert abs(self.sampled_sigma(gauss3, x0, 3) - 1.0) < 1e-4

    def test_boosted_curvature(self, mean2):
        # boosting is an isometry: the placed trough keeps sigma_1 = n
        z = troughs.cap_trough(mean2, np.array([0.6, 0.8]), 2.0)
        rng = np.random.default_rng(2)
        for x0 in rng.uniform(-2.0, 2.0, size=(5, 2)):
            assert abs(self.sampled_sigma(z, x0, 1) - 2.0) < 1e-4


class TestSerialization:
    def test_csv_roundtrip(self, gauss2, tmp_path):
        z = troughs.cap_trough(gauss2, np.array([0.0, 1.0]), 1.2)
        path = tmp_path / "trough.csv"
        z.to_csv(path)
        back = troughs.SemitroughProfile.from_csv(path)
        assert back.kind == z.kind and back.n == z.n
        assert np.array_equal(back.t, z.t)
        assert np.array_equal(back.f, z.f)
        assert np.array_equal(back.fprime, z.fprime)
        assert back.alpha == z.alpha
        assert np.array_equal(back.rotation, z.rotation)
        assert back.left_offset == z.left_offset
        assert back.tolerances == z.tolerances
        xi = np.array([0.2, -0.6])
        assert float(back.conjugate(xi)) == pytest.approx(float(z.conjugate(xi)), abs=1e-12)

    def test_gauss_cap_roundtrip(self, gauss2):
        center = np.array([-0.6, 0.8])
        z = troughs.cap_trough(gauss2, center, 0.8)
        c, d = z.gauss_cap()
        assert np.allclose(c, center, atol=1e-12)
        assert d == pytest.approx(0.8, abs=1e-12)
