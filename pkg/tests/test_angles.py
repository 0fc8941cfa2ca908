import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kalab.angles import (
    angle_data,
    classify_point,
    diagonalizing_frame,
    kappa_from_spectrum,
    normal_bundle_angles,
    phi_and_hat,
    pullback_form,
    torsion_and_difference,
)
from kalab.catalog import resolve_immersion
from kalab.errors import GeometryError
from kalab.immersion import first_fundamental, second_fundamental
from kalab.targets import resolve_target
from kalab.immersion import FDParams, ImmersionChart


def complex_line_chart():
    """z -> (z, 0) into flat C^2: a complex submanifold."""
    target = resolve_target("flat-c2")
    return ImmersionChart(
        name="complex-line",
        domain_dim=2,
        target=target,
        evaluator=lambda p: np.array([p[0], p[1], 0.0, 0.0]),
        jet_mode="finite-difference",
        fd_params=FDParams(),
    )


def lagrangian_plane_chart():
    """(x, y) -> (x, 0, y, 0): both coordinates real, an isotropic plane."""
    target = resolve_target("flat-c2")
    return ImmersionChart(
        name="lagrangian-plane",
        domain_dim=2,
        target=target,
        evaluator=lambda p: np.array([p[0], 0.0, p[1], 0.0]),
        jet_mode="finite-difference",
        fd_params=FDParams(),
    )


class TestPullback:
    def test_complex_line(self):
        ch = complex_line_chart()
        form, _ = pullback_form(ch, np.array([0.3, 0.4]))
        assert abs(form[0, 1] - 1.0) < 1e-12

    def test_lagrangian_plane(self):
        ch = lagrangian_plane_chart()
        form, _ = pullback_form(ch, np.array([0.3, 0.4]))
        assert np.abs(form).max() < 1e-12

    def test_conj_curve_value(self):
        ch = resolve_immersion("conj-curve?k=2")
        r = 0.3
        form, _ = pullback_form(ch, np.array([r, 0.0]))
        assert abs(form[0, 1] - (1 - 4 * r * r)) < 1e-12


class TestAngleData:
    def test_tilted_plane_values(self):
        ch = resolve_immersion("tilted-plane?alpha=pi/3&n=1")
        ad = angle_data(ch, np.array([0.2, -0.4]))
        assert abs(ad.cos_spectrum[0] - 0.5) < 1e-12
        assert abs(ad.kappa - math.log(3.0)) < 1e-12

    def test_conj_curve_values(self):
        ch = resolve_immersion("conj-curve?k=2")
        ad = angle_data(ch, np.array([0.3, 0.0]))
        assert abs(ad.cos_spectrum[0] - 8.0 / 17.0) < 1e-10
        assert abs(ad.kappa + math.log(4 * 0.09)) < 1e-9
        assert ad.classification.kind == "equal-angles"

    def test_kappa_against_determinant_route(self):
        rng = np.random.default_rng(0)
        for spec in ("conj-curve?k=2", "product-conj", "tilted-plane?alpha=0.8&n=2",
                     "lagrangian-graph", "hk-complex-plane?nu=0.9&phi=0.4"):
            ch = resolve_immersion(spec)
            lo, hi = ch.sampling_box
            for _ in range(5):
                p = rng.uniform(lo, hi)
                ad = angle_data(ch, p)
                if not math.isfinite(ad.kappa):
                    continue
                assert abs(ad.kappa - ad.kappa_from_determinants) < 1e-9

    def test_determinant_product_identity(self):
        # det(g +/- stretch) = det(g) * prod(1 +/- cos)^2
        ch = resolve_immersion("product-conj")
        ad = angle_data(ch, np.array([0.25, 0.05, 0.1, 0.35]))
        g = ad.point.g_M.components
        c = ad.cos_spectrum
        for sign in (+1, -1):
            lhs = np.linalg.det(g + sign * ad.gtilde_2tensor)
            rhs = np.linalg.det(g) * np.prod((1 + sign * c) ** 2)
            assert abs(lhs - rhs) < 1e-12 * abs(rhs)

    def test_infinite_kappa_at_complex_point(self):
        ch = complex_line_chart()
        ad = angle_data(ch, np.array([0.1, 0.2]))
        assert math.isinf(ad.kappa)
        assert ad.classification.kind == "complex"

    def test_hat_metric_definite_iff_not_complex(self):
        ch = resolve_immersion("conj-curve?k=2")
        ad = angle_data(ch, np.array([0.3, 0.0]))
        assert np.linalg.eigvalsh(ad.hat_metric).min() > 0
        adc = angle_data(complex_line_chart(), np.array([0.1, 0.2]))
        assert np.linalg.eigvalsh(adc.hat_metric).min() < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.0, max_value=0.95), min_size=1, max_size=4),
        st.integers(min_value=0, max_value=3),
        st.floats(min_value=1e-4, max_value=0.04),
    )
    def test_kappa_monotone_in_each_cosine(self, spectrum, idx, bump):
        c = np.sort(np.asarray(spectrum))[::-1]
        idx = idx % len(c)
        bumped = c.copy()
        bumped[idx] = min(bumped[idx] + bump, 0.999)
        assert kappa_from_spectrum(bumped) >= kappa_from_spectrum(c)


class TestClassification:
    def test_complex(self):
        assert classify_point(complex_line_chart(), np.array([0.0, 0.0])).kind == "complex"

    def test_lagrangian(self):
        assert classify_point(lagrangian_plane_chart(), np.array([0.1, 0.2])).kind == "lagrangian"

    def test_equal_angles_on_product_at_equal_radii(self):
        ch = resolve_immersion("product-conj")
        cls = classify_point(ch, np.array([0.3, 0.0, 0.0, 0.3]))
        assert cls.kind == "equal-angles"

    def test_generic(self):
        ch = resolve_immersion("product-conj")
        cls = classify_point(ch, np.array([0.3, 0.0, 0.0, 0.4]))
        assert cls.kind == "generic"
        assert cls.flags == ("generic", "generic")


class TestDiagonalizingFrame:
    def test_product_conj_block_form(self):
        ch = resolve_immersion("product-conj")
        p = np.array([0.3, 0.0, 0.0, 0.4])
        ad = angle_data(ch, p)
        fr = diagonalizing_frame(ch, p, ad)
        fb = fr.frame_matrix.T @ ad.pullback_2form @ fr.frame_matrix
        expect = np.zeros((4, 4))
        for a, c in enumerate(ad.cos_spectrum):
            expect[2 * a, 2 * a + 1] = c
            expect[2 * a + 1, 2 * a] = -c
        assert np.abs(fb - expect).max() < 1e-10
        # orthonormality and the extended structure
        g = ad.point.g_M.components
        assert np.abs(fr.frame_matrix.T @ g @ fr.frame_matrix - np.eye(4)).max() < 1e-12
        assert np.abs(fr.jtilde @ fr.jtilde + np.eye(4)).max() < 1e-10

    def test_lagrangian_kernel_pairing(self):
        ch = lagrangian_plane_chart()
        p = np.array([0.1, 0.2])
        ad = angle_data(ch, p)
        fr = diagonalizing_frame(ch, p, ad)
        assert fr.rank == 0
        assert fr.kernel_flags.all()
        assert np.abs(fr.jtilde @ fr.jtilde + np.eye(2)).max() < 1e-12

    def test_rank_zero_circle_of_conj_curve(self):
        ch = resolve_immersion("conj-curve?k=2")
        p = np.array([0.5, 0.0])  # the isotropic radius
        ad = angle_data(ch, p)
        assert ad.cos_spectrum[0] < 1e-12
        fr = diagonalizing_frame(ch, p, ad)
        assert fr.rank == 0
        assert np.abs(fr.jtilde @ fr.jtilde + np.eye(2)).max() < 1e-10

    def test_complexified_form_values(self):
        ch = resolve_immersion("product-conj")
        p = np.array([0.3, 0.0, 0.0, 0.4])
        ad = angle_data(ch, p)
        fr = diagonalizing_frame(ch, p, ad)
        form = np.asarray(ad.pullback_2form, complex)
        for a, z in enumerate(fr.z_vectors):
            val = z.array @ form @ z.conj().array
            assert abs(val - 0.5j * ad.cos_spectrum[a]) < 1e-12


class TestPhi:
    def test_lagrangian_phi_is_rotated_differential(self):
        ch = lagrangian_plane_chart()
        p = np.array([0.1, -0.2])
        ad = angle_data(ch, p)
        cc = phi_and_hat(ch, p, ad)
        pg = ad.point
        jdf = pg.target_complex_structure @ pg.dF
        assert np.abs(cc.phi - jdf).max() < 1e-12
        assert np.abs(cc.hat_metric - pg.g_M.components).max() < 1e-12
        assert not cc.singular

    def test_complex_line_is_singular(self):
        ch = complex_line_chart()
        cc = phi_and_hat(ch, np.array([0.0, 0.1]))
        assert cc.singular
        assert np.abs(cc.phi).max() < 1e-10

    def test_equal_angle_conformal_squash(self):
        ch = resolve_immersion("conj-curve?k=2")
        p = np.array([0.3, 0.0])
        ad = angle_data(ch, p)
        cc = phi_and_hat(ch, p, ad)
        s2 = 1 - ad.cos_spectrum[0] ** 2
        assert np.abs(cc.hat_metric - s2 * ad.point.g_M.components).max() < 1e-10
        assert cc.isometry_residual < 1e-9


class TestTorsion:
    def test_totally_geodesic_torsion_vanishes(self):
        ch = resolve_immersion("tilted-plane?alpha=0.9&n=2")
        tc = torsion_and_difference(ch, np.array([0.1, 0.2, -0.1, 0.3]))
        assert np.abs(tc.torsion).max() < 1e-10
        assert tc.trace_identity_residual < 1e-9

    def test_two_torsion_routes_agree(self):
        ch = resolve_immersion("torus-graph?eps=0.1&winding=tilted")
        tc = torsion_and_difference(ch, np.array([1.1, 0.7]))
        assert np.abs(tc.torsion).max() > 1e-3  # genuinely nonzero here
        assert tc.torsion_consistency < 1e-9
        assert tc.trace_identity_residual < 1e-9

    def test_rejects_complex_points(self):
        with pytest.raises(GeometryError):
            torsion_and_difference(complex_line_chart(), np.array([0.0, 0.0]))


class TestNormalBundle:
    def test_same_spectrum_generic_point(self):
        ch = resolve_immersion("product-conj")
        p = np.array([0.3, 0.0, 0.0, 0.4])
        pg = first_fundamental(ch, p)
        spectrum, _, basis = normal_bundle_angles(pg)
        ad = angle_data(ch, p, pg)
        assert np.abs(spectrum - ad.cos_spectrum).max() < 1e-8
        gram = basis.T @ pg.g_target @ basis
        assert np.abs(gram - np.eye(basis.shape[1])).max() < 1e-10

    def test_morphism_intertwines_structures(self):
        ch = resolve_immersion("conj-curve?k=2")
        p = np.array([0.3, 0.05])
        pg = first_fundamental(ch, p)
        ad = angle_data(ch, p, pg)
        _, j_nm, _ = normal_bundle_angles(pg)
        phi = phi_and_hat(ch, p, ad).phi
        assert np.abs(phi @ ad.polar.jomega + j_nm @ phi).max() < 1e-8
