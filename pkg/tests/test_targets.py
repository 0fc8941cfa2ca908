import numpy as np
import pytest

from kalab.errors import ConfigError, GeometryError
from kalab.targets import (
    SpherePoint,
    j_from_sphere,
    make_flat_kahler,
    make_fubini_study,
    make_hyperkahler_flat,
    resolve_target,
    target_audit,
)


def sample_points(rng, d, radius, count):
    pts = rng.uniform(-1, 1, size=(count, d))
    return [radius * p / max(1.0, np.linalg.norm(p) / 0.99) for p in pts]


class TestFlat:
    def test_curvature_and_einstein(self):
        t = make_flat_kahler(2)
        p = np.array([0.3, -0.2, 0.1, 0.7])
        assert np.abs(t.curvature(p)).max() == 0.0
        assert np.abs(t.ricci(p)).max() == 0.0
        assert t.einstein_constant == 0.0

    def test_torus_translation_invariance(self):
        t = resolve_target("torus-c2")
        p = np.array([0.3, -0.2, 0.1, 0.7])
        shifted = p + t.lattice[:, 0]
        for order in (0, 1, 2):
            for a, b in zip(t.metric_jet(p, order), t.metric_jet(shifted, order)):
                assert np.array_equal(a, b)

    def test_degenerate_lattice_rejected(self):
        with pytest.raises(ConfigError):
            make_flat_kahler(2, lattice=np.zeros((4, 4)))


class TestFubiniStudy:
    def setup_method(self):
        self.t = make_fubini_study(2, 4.0)
        self.rng = np.random.default_rng(0)

    def test_einstein_constant_at_origin(self):
        p = np.zeros(4)
        assert np.abs(self.t.ricci(p) - 6.0 * self.t.metric(p)).max() < 1e-10

    def test_einstein_at_random_points(self):
        for p in sample_points(self.rng, 4, 0.5, 5):
            g = self.t.metric(p)
            assert np.abs(self.t.ricci(p) - 6.0 * g).max() < 1e-10

    def test_parallel_complex_structure_fd(self):
        # finite-difference check of the analytic jets: d/dt of J vanishes and
        # the Christoffel commutator with J cancels
        for p in sample_points(self.rng, 4, 0.5, 5):
            gam = self.t.christoffel(p)
            j = self.t.complex_structure(p)
            nabla_j = (
                self.t.complex_structure_d1(p)
                + np.einsum("ace,eb->cab", gam, j)
                - np.einsum("ecb,ae->cab", gam, j)
            )
            assert np.abs(nabla_j).max() < 1e-8

    def test_holomorphic_sectional_curvature_value(self):
        for p in sample_points(self.rng, 4, 0.6, 4):
            x = self.rng.standard_normal(4)
            g = self.t.metric(p)
            j = self.t.complex_structure(p)
            jx = j @ x
            norm4 = float(x @ g @ x) ** 2
            val = np.einsum("ijkl,i,j,k,l->", self.t.curvature(p), x, jx, x, jx) / norm4
            assert abs(val - 4.0) < 1e-10

    def test_kahler_symmetries_of_curvature(self):
        p = np.array([0.2, -0.1, 0.05, 0.3])
        r4 = self.t.curvature(p)
        j = self.t.complex_structure(p)
        pair = np.einsum("ijkl->klij", r4)
        assert np.abs(r4 - pair).max() < 1e-10
        jj = np.einsum("ijkl,kc,ld->ijcd", r4, j, j)
        assert np.abs(jj - r4).max() < 1e-10

    def test_audit_passes(self):
        pts = sample_points(self.rng, 4, 0.5, 25)
        rep = target_audit(self.t, pts, tol=1e-8)
        assert rep.passed, rep.residuals

    def test_audit_detects_corrupted_structure(self):
        from dataclasses import replace

        j_bad = self.t.complex_structure(np.zeros(4)).copy()
        j_bad[0, 1] += 1e-3
        bad = replace(self.t, complex_structure=lambda p: j_bad)
        rep = target_audit(bad, [np.zeros(4)], tol=1e-8, check_curvature_fd=False)
        assert not rep.passed
        assert 1e-3 <= rep.residuals["j_squared"] <= 4e-3

    def test_chart_guard_for_audit_points(self):
        with pytest.raises(ConfigError):
            target_audit(self.t, [np.array([1.0, 0.0, 0.0, 0.0])], tol=1e-8)

    def test_rejects_nonpositive_curvature(self):
        with pytest.raises(ConfigError):
            make_fubini_study(2, -1.0)


class TestHyperKahler:
    def setup_method(self):
        self.target, self.triple = make_hyperkahler_flat(8)

    def test_structures_square_to_minus_identity_exactly(self):
        eye = np.eye(8)
        for a in (self.triple.i, self.triple.j, self.triple.k):
            assert np.array_equal(a @ a, -eye)

    def test_anticommutation_exact(self):
        ij = self.triple.i @ self.triple.j + self.triple.j @ self.triple.i
        assert np.abs(ij).max() == 0.0

    def test_k_equals_ij_exact(self):
        assert np.array_equal(self.triple.k, self.triple.i @ self.triple.j)

    def test_sphere_poles(self):
        assert np.array_equal(j_from_sphere(self.triple, SpherePoint(0.0, 0.3)), self.triple.i)
        j = j_from_sphere(self.triple, SpherePoint(np.pi / 2, 0.0))
        assert np.abs(j - self.triple.j).max() < 1e-15

    def test_orthogonal_sphere_points_anticommute(self):
        s1 = SpherePoint(0.7, 0.3)
        # rotate nu by a right angle in the plane spanned with the first axis
        v1 = s1.unit_vector
        rng = np.random.default_rng(5)
        w = rng.standard_normal(3)
        w -= (w @ v1) * v1
        w /= np.linalg.norm(w)
        nu2 = float(np.arccos(np.clip(w[0], -1, 1)))
        phi2 = float(np.arctan2(w[2], w[1]))
        s2 = SpherePoint(nu2, phi2)
        assert abs(s1.unit_vector @ s2.unit_vector) < 1e-12
        j1 = j_from_sphere(self.triple, s1)
        j2 = j_from_sphere(self.triple, s2)
        assert np.abs(j1 @ j2 + j2 @ j1).max() < 1e-12

    def test_sphere_structures_orthogonal_and_parallel(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            s = SpherePoint(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            j = j_from_sphere(self.triple, s)
            assert np.abs(j.T @ j - np.eye(8)).max() < 1e-12

    def test_unsupported_dimension(self):
        with pytest.raises(ConfigError):
            make_hyperkahler_flat(12)


class TestCatalogAudits:
    @pytest.mark.parametrize(
        "tid,tol,radius",
        [
            ("flat-c2", 1e-12, 1.0),
            ("torus-c2", 1e-12, 1.0),
            ("cp2-K4", 1e-8, 0.5),
            ("hk-r4", 1e-12, 1.0),
            ("hk-r8", 1e-12, 1.0),
        ],
    )
    def test_audit(self, tid, tol, radius):
        t = resolve_target(tid)
        rng = np.random.default_rng(42)
        pts = sample_points(rng, t.real_dim, radius, 25)
        rep = target_audit(t, pts, tol=tol)
        assert rep.passed, (tid, rep.residuals)

    def test_unknown_id(self):
        with pytest.raises(ConfigError):
            resolve_target("nope-7")
