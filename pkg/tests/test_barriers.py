"""Tests for cap domains, trough envelopes, and the spacelike cutoff."""

import json
import math

import numpy as np
import pytest

from sigmak import barriers as br
from sigmak.caps import cap_support, sphere_mesh
from sigmak.errors import ConfigError, DomainError, SpacelikeViolationError
from sigmak.troughs import cap_trough


@pytest.fixture(scope="module")
def hemi2():
    return br.CapDomain([(np.array([1.0, 0.0]), 0.5 * math.pi)], 0.3)


@pytest.fixture(scope="module")
def lower2(hemi2):
    return br.lower_barrier(hemi2)


@pytest.fixture(scope="module")
def upper2(hemi2):
    return br.upper_barrier(hemi2)


@pytest.fixture(scope="module")
def sphere2():
    return br.CapDomain.full_sphere(2, 0.15)


def hyper(p):
    return np.sqrt(1.0 + np.sum(np.asarray(p, dtype=float) ** 2, axis=-1))


class TestCapDomain:
    def test_validation(self):
        e1 = np.array([1.0, 0.0])
        with pytest.raises(ConfigError):
            br.CapDomain([(e1, 1.0)], 0.0)
        with pytest.raises(ConfigError):
            br.CapDomain([(e1, 1.0)], 0.5 * math.pi)
        with pytest.raises(ConfigError):
            br.CapDomain([], 0.3)
        with pytest.raises(ConfigError):
            br.CapDomain([(e1, 0.1)], 0.3)
        with pytest.raises(ConfigError):
            br.CapDomain([(e1, math.pi - 0.1)], 0.3)
        with pytest.raises(ConfigError):
            br.CapDomain([(e1, 1.0), (np.array([1.0, 0.0, 0.0]), 1.0)], 0.3)
        with pytest.raises(ConfigError):
            br.CapDomain([(np.array([1.0]), 1.0)], 0.3)

    def test_center_normalized(self):
        F = br.CapDomain([(np.array([3.0, 4.0]), 1.0)], 0.3)
        assert np.allclose(F.centers[0], [0.6, 0.8], atol=1e-15)

    def test_full_sphere_support_is_radius(self):
        F = br.CapDomain.full_sphere(3, 0.2)
        rng = np.random.default_rng(7)
        x = rng.normal(size=(40, 3)) * 3.0
        r = np.linalg.norm(x, axis=1)
        assert np.max(np.abs(F.support(x) - r)) < 1e-13

    def test_hemisphere_support_example(self):
        # spherical distance from e1 to (-1,1,0)/sqrt(2) is 3pi/4, so the
        # support is sqrt(2) cos(3pi/4 - pi/2) = 1
        F = br.CapDomain([(np.array([1.0, 0.0, 0.0]), 0.5 * math.pi)], 0.3)
        val = F.support(np.array([-1.0, 1.0, 0.0]))
        assert val == pytest.approx(1.0, abs=1e-14)

    def test_small_cap_support_tracks_center(self):
        F = br.CapDomain([(np.array([1.0, 0.0]), 1e-3)], 1e-3)
        rng = np.random.default_rng(5)
        x = rng.normal(size=(30, 2)) * 2.0
        r = np.linalg.norm(x, axis=1)
        assert np.max(np.abs(F.support(x) - x[:, 0])) <= 1e-3 * np.max(r) + 1e-14

    def test_support_sampling_oracle(self, hemi2):
        # V_F(x) = sup over cap directions of x . v, checked against a
        # dense sample of the cap itself
        ang = np.linspace(-0.5 * math.pi, 0.5 * math.pi, 20001)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        rng = np.random.default_rng(11)
        x = rng.normal(size=(25, 2)) * 3.0
        sampled = np.max(x @ dirs.T, axis=1)
        exact = hemi2.support(x)
        assert np.all(exact >= sampled - 1e-12)
        assert np.max(exact - sampled) < 1e-6

    def test_support_homogeneous_and_dominated(self, hemi2):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(30, 2))
        t = rng.uniform(0.5, 4.0, size=30)
        assert np.max(np.abs(hemi2.support(t[:, None] * x) - t * hemi2.support(x))) < 1e-14
        assert np.all(hemi2.support(x) <= np.linalg.norm(x, axis=1) + 1e-15)

    def test_contains_direction(self, hemi2):
        assert hemi2.contains_direction(np.array([0.6, 0.8]))
        assert hemi2.contains_direction(np.array([0.0, 1.0]))
        assert not hemi2.contains_direction(np.array([-0.6, 0.8]))

    def test_hull_margin_values(self, hemi2, sphere2):
        assert sphere2.hull_margin(np.array([0.5, 0.0])) == pytest.approx(0.5, abs=1e-4)
        assert hemi2.hull_margin(np.array([0.5, 0.0])) == pytest.approx(0.5, abs=1e-12)
        assert hemi2.hull_margin(np.array([-0.1, 0.0])) == pytest.approx(-0.1, abs=1e-12)
        expect = min(0.2, 1.0 - math.hypot(0.2, 0.9))
        assert hemi2.hull_margin(np.array([0.2, 0.9])) == pytest.approx(expect, abs=1e-4)
        batch = hemi2.hull_margin(np.array([[0.5, 0.0], [-0.1, 0.0]]))
        assert batch.shape == (2,)

    def test_json_roundtrip(self, hemi2):
        data = json.loads(json.dumps(hemi2.to_json()))
        back = br.CapDomain.from_json(data)
        assert back.delta0 == hemi2.delta0
        assert np.allclose(back.centers, hemi2.centers)
        assert np.allclose(back.deltas, hemi2.deltas)


class TestCapFamilies:
    def test_hemisphere_collapses_to_standard_cap(self, hemi2):
        fam = br.inscribed_caps(hemi2, 32)
        assert len(fam) == 1
        c, d = fam[0]
        assert np.allclose(c, [1.0, 0.0], atol=1e-12)
        assert d == pytest.approx(0.5 * math.pi, abs=1e-12)
        fam = br.circumscribed_caps(hemi2, 32)
        assert len(fam) == 1
        c, d = fam[0]
        assert np.allclose(c, [1.0, 0.0], atol=1e-12)
        assert d == pytest.approx(0.5 * math.pi, abs=1e-12)

    def test_full_sphere_families(self, sphere2):
        fam = br.inscribed_caps(sphere2, 32)
        assert len(fam) == 2
        for c, d in fam:
            assert abs(abs(c[0]) - 1.0) < 1e-12
            assert d == pytest.approx(math.pi - 0.15, abs=1e-12)
        with pytest.raises(DomainError):
            br.circumscribed_caps(sphere2, 32)

    def test_union_family_invariants(self):
        c2 = np.array([math.cos(1.2), math.sin(1.2)])
        F = br.CapDomain([(np.array([1.0, 0.0]), 0.8), (c2, 0.6)], 0.3)
        ins = br.inscribed_caps(F, 64)
        assert ins
        for c, r in ins:
            # inscribed: some cap of F contains the candidate cap
            best = max(d - math.acos(np.clip(c @ cc, -1, 1)) for cc, d in F.caps)
            assert r <= best + 1e-9
            assert r >= F.delta0 - 1e-12
        cir = br.circumscribed_caps(F, 64)
        assert cir
        for c, r in cir:
            # circumscribed: the candidate cap contains every cap of F
            need = max(d + math.acos(np.clip(c @ cc, -1, 1)) for cc, d in F.caps)
            assert r >= need - 1e-9
            assert r <= math.pi - F.delta0 + 1e-12

    def test_too_small_domain_has_no_inscribed_cap(self):
        F = br.CapDomain([(np.array([1.0, 0.0]), 0.2)], 0.2)
        fam = br.inscribed_caps(F, 32)
        assert len(fam) == 1 and fam[0][1] == pytest.approx(0.2)
        shrunk = br.CapDomain([(np.array([1.0, 0.0]), 0.2)], 0.1)
        shrunk.delta0 = 0.5  # force the mismatch without validation
        with pytest.raises(DomainError):
            br.inscribed_caps(shrunk, 32)


class TestBarrierValues:
    def test_generator_counts(self, lower2, upper2, sphere2):
        assert len(lower2.troughs) == 1
        assert len(upper2.troughs) == 1
        assert len(br.lower_barrier(sphere2).troughs) == 2

    def test_sandwich(self, hemi2, lower2, upper2):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(300, 2)) * 4.0
        vl, vu = lower2.value(x), upper2.value(x)
        assert np.all(vl < vu)
        assert np.all(vl > hemi2.support(x))
        assert np.all(vu < hyper(x))

    def test_upper_full_sphere_unavailable(self, sphere2):
        with pytest.raises(DomainError):
            br.upper_barrier(sphere2)

    def test_hyperboloid_substitute_sandwiches(self, sphere2):
        lo = br.lower_barrier(sphere2)
        up = br.hyperboloid_barrier(2, radius=1.05)
        rng = np.random.default_rng(4)
        x = rng.normal(size=(200, 2)) * 5.0
        assert np.all(lo.value(x) < hyper(x))
        assert np.all(hyper(x) < up.value(x))
        assert np.max(np.abs(up.value(x) - np.sqrt(1.05 ** 2 + np.sum(x * x, axis=1)))) < 1e-14

    def test_interior_direction_gap(self, sphere2):
        # sup of troughs meets r + 1/(2r) + O(r^-3) along covered directions
        lo = br.lower_barrier(sphere2)
        th = np.array([0.6, 0.8])
        for r in (20.0, 50.0):
            gap = float(lo.value(r * th)) - r
            assert abs(gap - 0.5 / r) < 0.2 / r

    def test_which_and_gradient_consistency(self, lower2, sphere2):
        lo = br.lower_barrier(sphere2)
        rng = np.random.default_rng(9)
        x = rng.normal(size=(50, 2)) * 3.0
        w = lo.which(x)
        assert set(np.unique(w)) <= {0, 1}
        g = lo.gradient(x)
        for i in range(len(x)):
            gi = lo.troughs[w[i]].gradient(x[i])
            assert np.allclose(g[i], gi, atol=1e-14)
        assert np.max(np.linalg.norm(g, axis=1)) < 1.0
        gh = br.hyperboloid_barrier(2).gradient(x)
        assert np.allclose(gh, x / hyper(x)[:, None], atol=1e-15)

    def test_lipschitz_below_one(self, lower2, upper2):
        rng = np.random.default_rng(21)
        a = rng.uniform(-3.0, 3.0, size=(300, 2))
        b = rng.uniform(-3.0, 3.0, size=(300, 2))
        d = np.linalg.norm(a - b, axis=1)
        keep = d > 1e-8
        for bar in (lower2, upper2):
            ratio = np.abs(bar.value(a) - bar.value(b))[keep] / d[keep]
            assert np.max(ratio) < 1.0

    def test_kind_validation(self):
        with pytest.raises(ConfigError):
            br.BarrierFunction("middle", [])
        with pytest.raises(ConfigError):
            br.BarrierFunction("lower", [])
        with pytest.raises(ConfigError):
            br.hyperboloid_barrier(2, radius=0.0)


class TestConjugate:
    def test_single_generator_matches_trough(self, lower2):
        z = lower2.troughs[0]
        xi = np.array([[0.3, 0.2], [0.7, -0.4], [0.05, 0.6]])
        vals, defect = lower2.conjugate_report(xi)
        assert np.allclose(vals, z.conjugate(xi), atol=1e-14)
        assert np.max(defect) == 0.0

    def test_boundary_rays_vanish(self, lower2):
        # the transform of the lower barrier tends to 0 on the boundary of
        # its finiteness domain; probe just inside two boundary pieces
        near_edge = np.array([[1e-3, 0.3], [1e-3, -0.7]])
        vals, _ = lower2.conjugate_report(near_edge)
        assert np.max(np.abs(vals)) < 1e-2
        s = 1.0 - 1e-6
        near_sphere = np.array([[s * 0.8, s * 0.6], [s, 0.0]])
        vals, _ = lower2.conjugate_report(near_sphere)
        assert np.max(np.abs(vals)) < 1e-2

    def test_outside_hull_is_infinite(self, lower2):
        vals, defect = lower2.conjugate_report(np.array([[-0.2, 0.1]]))
        assert np.isinf(vals[0]) and vals[0] > 0
        assert np.isinf(defect[0])

    def test_full_sphere_tracks_hyperboloid_dual(self, sphere2):
        # the sup of the two antipodal troughs lies below the hyperboloid,
        # so its transform dominates -sqrt(1 - |xi|^2); the certified
        # defect bounds how far the reported value overshoots the truth
        lo = br.lower_barrier(sphere2)
        xi = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.7], [-0.6, 0.3]])
        vals, defect = lo.conjugate_report(xi)
        ref = -np.sqrt(1.0 - np.sum(xi * xi, axis=1))
        assert np.all(vals >= ref - 1e-12)
        assert np.max(vals - ref) < 5e-3
        assert np.max(defect) < 2e-4

    def test_hyperboloid_conjugate(self):
        up = br.hyperboloid_barrier(2, radius=1.3)
        xi = np.array([[0.2, 0.1], [0.0, 0.0]])
        vals, defect = up.conjugate_report(xi)
        assert np.allclose(vals, -1.3 * np.sqrt(1.0 - np.sum(xi * xi, axis=1)), atol=1e-15)
        assert np.max(defect) == 0.0
        with pytest.raises(DomainError):
            up.conjugate(np.array([1.0, 0.0]))

    def test_upper_conjugate_rejected(self, upper2):
        with pytest.raises(ConfigError):
            upper2.conjugate(np.array([0.3, 0.0]))


class TestBlowdown:
    def test_hyperboloid_limit(self):
        lim, err, ok = br.blowdown(br.hyperboloid_barrier(2), [0.6, 0.8], [10.0, 100.0, 1000.0])
        assert lim == pytest.approx(1.0, abs=1e-5)
        assert err < 1e-4 and ok

    def test_barrier_limits_are_support_values(self, hemi2, lower2):
        rs = [10.0, 100.0, 1000.0]
        for th in ([0.6, 0.8], [-0.8, 0.6], [0.0, -1.0]):
            lim, err, ok = br.blowdown(lower2, th, rs)
            ref = float(hemi2.support(np.asarray(th)))
            assert lim == pytest.approx(ref, abs=1e-4)
            assert ok

    def test_oscillation_flag(self):
        wob = lambda p: np.linalg.norm(p, axis=-1) * (1.0 + 0.1 * np.cos(np.linalg.norm(p, axis=-1)))
        lim, err, ok = br.blowdown(wob, [1.0, 0.0], [10.0, 13.0, 16.0, 19.0])
        assert not ok

    def test_radii_validation(self, lower2):
        with pytest.raises(ConfigError):
            br.blowdown(lower2, [1.0, 0.0], [10.0, 5.0, 20.0])
        with pytest.raises(ConfigError):
            br.blowdown(lower2, [1.0, 0.0], [10.0, 20.0])


class TestCutoff:
    def test_closed_forms(self):
        # on the support side the hemisphere support is |x| itself
        x = np.array([[3.0, 4.0], [0.0, 7.0], [25.0, 0.0]])
        psi = br.cutoff_psi(0.5, 25.0, 1100.0, x)
        assert np.max(np.abs(psi - np.sqrt(0.25 + np.sum(x * x, axis=1)))) < 1e-12
        # far behind the hemisphere the correction term is fully on
        psi = br.cutoff_psi(0.5, 25.0, 1100.0, np.array([-2000.0, 0.0]))
        assert psi == pytest.approx(1.5, abs=1e-12)
        # inside r0 the correction is off
        psi = br.cutoff_psi(0.5, 25.0, 1100.0, np.array([-7.0, 0.0]))
        assert psi == pytest.approx(0.5, abs=1e-12)

    def test_continuity_at_thresholds(self):
        for r in (25.0, 1100.0):
            a = br.cutoff_psi(0.5, 25.0, 1100.0, np.array([-(r - 1e-7), 1.0]))
            b = br.cutoff_psi(0.5, 25.0, 1100.0, np.array([-(r + 1e-7), 1.0]))
            assert abs(a - b) < 1e-5

    def test_threshold_validation(self):
        x = np.zeros(2)
        with pytest.raises(ConfigError):
            br.cutoff_psi(0.0, 25.0, 1100.0, x)
        with pytest.raises(ConfigError):
            br.cutoff_psi(1.5, 25.0, 1100.0, x)
        with pytest.raises(ConfigError):
            br.cutoff_psi(0.5, 19.0, 1100.0, x)
        with pytest.raises(ConfigError):
            br.cutoff_psi(0.5, 25.0, 1000.0, x)

    def test_custom_center(self):
        psi1 = br.cutoff_psi(0.5, 25.0, 1100.0, np.array([3.0, 4.0]))
        psi2 = br.cutoff_psi(0.5, 25.0, 1100.0, np.array([4.0, -3.0]), center=np.array([0.0, -1.0]))
        assert psi1 == pytest.approx(psi2, abs=1e-14)

    def test_spacelike_on_window(self):
        psi = lambda p: br.cutoff_psi(0.5, 25.0, 1100.0, p)
        mx, _ = br.spacelike_check(psi, [-40.0, -40.0], [40.0, 40.0], 0.25)
        assert mx < 1.0


class TestSpacelikeCheck:
    def test_hyperboloid_gradient(self):
        mx, wit = br.spacelike_check(hyper, [-7.0, -7.0], [7.0, 7.0], 0.05)
        corner = math.sqrt(98.0) / math.sqrt(99.0)
        assert mx == pytest.approx(corner, abs=2e-3)
        assert np.max(np.abs(np.abs(wit) - 7.0)) < 0.1

    def test_affine_is_exact(self):
        f = lambda p: 1.2 * p[..., 0]
        mx, _ = br.spacelike_check(f, [-2.0, -2.0], [2.0, 2.0], 0.5)
        assert mx == pytest.approx(1.2, abs=1e-12)

    def test_box_validation(self):
        with pytest.raises(ConfigError):
            br.spacelike_check(hyper, [0.0, 0.0], [0.0, 1.0], 0.1)
        with pytest.raises(ConfigError):
            br.spacelike_check(hyper, [0.0], [1.0], -0.1)


class TestGradientBound:
    def test_bound_dominates_measured(self):
        # the estimate is checked where the cutoff dominates near the probe
        # boundary, i.e. on the supported side of the hemisphere
        psi = lambda p: br.cutoff_psi(0.5, 25.0, 1100.0, p)
        rng = np.random.default_rng(3)
        xs = rng.uniform(0.0, 6.0, size=(20, 2))
        for x in xs:
            bound = br.gradient_bound(hyper, hyper, psi, x, [0.0, -8.0], [8.0, 8.0], 0.25)
            measured = 1.0 / math.sqrt(1.0 - np.sum(x * x) / (1.0 + np.sum(x * x)))
            assert measured <= bound

    def test_linear_in_upper_envelope(self):
        psi0 = lambda p: np.zeros(p.shape[:-1])
        u1 = lambda p: 0.5 + 0.1 * p[..., 0]
        u2 = lambda p: 1.0 + 0.2 * p[..., 0]
        x = np.array([1.0, 0.0])
        b1 = br.gradient_bound(u1, u1, psi0, x, [-2.0, -2.0], [2.0, 2.0], 0.5)
        b2 = br.gradient_bound(u1, u2, psi0, x, [-2.0, -2.0], [2.0, 2.0], 0.5)
        assert b1 == pytest.approx(0.7 / 0.6, abs=1e-12)
        assert b2 == pytest.approx(2.0 * b1, abs=1e-12)

    def test_blows_up_at_contact(self):
        # bound diverges as u approaches the cutoff while ubar stays away
        psi0 = lambda p: np.zeros(p.shape[:-1])
        u = lambda p: 1e-8 + 0.0 * p[..., 0]
        ubar = lambda p: 1.0 + 0.0 * p[..., 0]
        b = br.gradient_bound(u, ubar, psi0, np.zeros(2), [-1.0, -1.0], [1.0, 1.0], 0.5)
        assert b > 1e6

    def test_outside_region_rejected(self):
        psi0 = lambda p: np.ones(p.shape[:-1])
        u = lambda p: 0.5 + 0.0 * p[..., 0]
        with pytest.raises(DomainError):
            br.gradient_bound(u, u, psi0, np.zeros(2), [-1.0, -1.0], [1.0, 1.0], 0.5)

    def test_timelike_cutoff_rejected(self):
        steep = lambda p: 1.2 * p[..., 0]
        u = lambda p: 10.0 + 0.0 * p[..., 0]
        with pytest.raises(SpacelikeViolationError):
            br.gradient_bound(u, u, steep, np.zeros(2), [-2.0, -2.0], [2.0, 2.0], 0.5)


class TestSemitroughEstimate:
    def test_supported_direction(self, upper2, lower2):
        for z in (upper2.troughs[0], lower2.troughs[0]):
            lhs, rhs = br.semitrough_upper_estimate(z, np.array([1000.0, 0.0]))
            assert lhs <= rhs + 1e-3

    def test_flat_direction_margin(self, upper2):
        # lhs - V tends to the left profile limit, rhs - V to 1
        z = upper2.troughs[0]
        lhs, rhs = br.semitrough_upper_estimate(z, np.array([-50.0, 0.0]))
        assert lhs == pytest.approx(0.5, abs=1e-6)
        assert rhs == pytest.approx(1.0, abs=1e-12)

    def test_equatorial_direction(self, upper2):
        z = upper2.troughs[0]
        lhs, rhs = br.semitrough_upper_estimate(z, np.array([0.0, 100.0]))
        assert abs(lhs - 100.0) < 1e-2
        assert rhs == pytest.approx(100.0, abs=1e-12)

    def test_origin_rejected(self, upper2):
        with pytest.raises(DomainError):
            br.semitrough_upper_estimate(upper2.troughs[0], np.zeros(2))


class TestSerialization:
    def test_csv_roundtrip(self, lower2, tmp_path):
        pts = np.array([[0.5, 0.2], [-3.0, 1.0], [4.0, -2.0]])
        path = tmp_path / "barrier.csv"
        lower2.dump_csv(pts, path)
        with open(path) as fh:
            meta = json.loads(fh.readline().lstrip("# "))
        assert meta["kind"] == "lower"
        assert len(meta["caps"]) == 1
        back = np.loadtxt(path, delimiter=",", comments="#")
        assert np.allclose(back[:, :2], pts, atol=1e-15)
        assert np.allclose(back[:, 2], lower2.value(pts), atol=1e-15)
        assert np.array_equal(back[:, 3].astype(int), lower2.which(pts))

    def test_hyperboloid_csv_metadata(self, tmp_path):
        up = br.hyperboloid_barrier(2, radius=1.05)
        path = tmp_path / "hyper.csv"
        up.dump_csv(np.array([[1.0, 2.0]]), path)
        with open(path) as fh:
            meta = json.loads(fh.readline().lstrip("# "))
        assert meta["radius"] == 1.05
        back = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        assert back[0, 3] == -1.0
