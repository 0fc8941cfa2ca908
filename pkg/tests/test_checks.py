import math

import numpy as np
import pytest

from kalab.catalog import resolve_immersion
from kalab.checks import (
    REGISTRY,
    CheckSettings,
    Workspace,
    run_check,
    select_checks,
)
from kalab.errors import ConfigError

SETTINGS = CheckSettings(grid_n=12)

# representative points per catalog immersion
MATRIX = [
    ("tilted-plane?alpha=pi/3&n=1", [0.2, -0.4]),
    ("tilted-plane?alpha=0.8&n=2", [0.1, 0.2, -0.1, 0.3]),
    ("conj-curve?k=2", [0.3, 0.05]),
    ("product-conj", [0.3, 0.0, 0.0, 0.4]),
    ("clifford-cp2", [0.7, 1.3]),
    ("lagrangian-graph", [0.3, -0.2]),
    ("hk-complex-plane?nu=0.9&phi=0.7", [0.0, 0.0, 0.0, 0.0]),
    ("torus-graph?eps=0.1", [1.1, 2.3]),
    ("torus-graph?eps=0.1&winding=tilted", [1.1, 2.3]),
]

POINTWISE_IDS = [cid for cid, spec in REGISTRY.items() if spec.kind == "pointwise"]


class TestRegistryDiscipline:
    @pytest.mark.parametrize("example,point", MATRIX)
    def test_never_fail_on_catalog(self, example, point):
        """Every registry check either passes at its tolerance or skips with a reason."""
        chart = resolve_immersion(example)
        failures = []
        for cid in POINTWISE_IDS:
            r = run_check(cid, chart, np.array(point), SETTINGS)
            if r.verdict == "Fail":
                failures.append((cid, r.residual_abs, r.lhs, r.rhs))
            if r.verdict == "Skipped":
                assert r.reason, cid
        assert not failures, failures

    def test_skip_reasons_are_informative(self):
        chart = resolve_immersion("product-conj")
        r = run_check("codifferential", chart, np.array([0.3, 0.0, 0.0, 0.4]), SETTINGS)
        assert r.verdict == "Skipped"
        assert "equal" in r.reason
        r = run_check("delta-kappa-wolfson", chart, np.array([0.3, 0.0, 0.0, 0.4]), SETTINGS)
        assert r.verdict == "Skipped"
        assert "n = 1" in r.reason

    def test_non_minimal_is_gated(self):
        chart = resolve_immersion("torus-graph?eps=0.1&winding=tilted")
        r = run_check("delta-kappa-wolfson", chart, np.array([1.1, 2.3]), SETTINGS)
        assert r.verdict == "Skipped"
        assert "minimal" in r.reason

    def test_unknown_check_id(self):
        chart = resolve_immersion("conj-curve?k=2")
        with pytest.raises(ConfigError):
            run_check("no-such-check", chart, np.zeros(2), SETTINGS)

    def test_select_checks_glob(self):
        assert select_checks("delta-kappa-*") == [
            "delta-kappa-general", "delta-kappa-equal", "delta-kappa-wolfson",
            "delta-kappa-pluriminimal",
        ]
        with pytest.raises(ConfigError):
            select_checks("zzz*")


class TestTwoSidedContent:
    """The identities that carry genuinely nonzero values on the catalog."""

    def test_weitzenbock_terms_nonzero_on_conj_curve(self):
        chart = resolve_immersion("conj-curve?k=2")
        r = run_check("weitzenbock", chart, np.array([0.3, 0.05]), SETTINGS)
        assert r.verdict == "Pass"
        assert abs(r.lhs) > 1.0
        assert abs(r.extras["hodge_term"]) > 0.1
        assert abs(r.extras["gradient_term"]) > 0.1

    def test_torsion_lemma_nonzero_on_perturbed_torus(self):
        chart = resolve_immersion("torus-graph?eps=0.1&winding=tilted")
        r = run_check("torsion-lemma", chart, np.array([1.1, 2.3]), SETTINGS)
        assert r.verdict == "Pass"
        assert r.lhs > 1e-3

    def test_ricci_reconstruction_nonzero_on_projective_plane(self):
        chart = resolve_immersion("clifford-cp2")
        r = run_check("ricci-reconstruction", chart, np.array([0.7, 1.3]), SETTINGS)
        assert r.verdict == "Pass"
        assert r.lhs > 1.0
        assert r.residual_abs < 1e-10

    def test_s_term_nonzero_on_product(self):
        chart = resolve_immersion("product-conj")
        ws = Workspace(chart, np.array([0.3, 0.0, 0.0, 0.4]), SETTINGS)
        ric = np.einsum("ik,i,k->", ws.ricci_m, ws.zv[0, 0], ws.zv[1, 0])
        assert abs(ric) > 0.1  # curved factors feed the closed forms

    def test_hyperkahler_angles(self):
        chart = resolve_immersion("hk-complex-plane?nu=0.6283185307179586&phi=0.7")
        ws = Workspace(chart, np.zeros(4), SETTINGS)
        assert np.abs(ws.cos - abs(math.cos(math.pi / 5))).max() < 1e-12


class TestCrossValidation:
    def test_equal_angle_route_matches_general_route(self):
        chart = resolve_immersion("conj-curve?k=2")
        r = run_check("delta-kappa-equal", chart, np.array([0.3, 0.05]), SETTINGS)
        assert r.verdict == "Pass"
        assert r.extras["equal_vs_general"] < 1e-6

    def test_residual_scales_with_fd_step(self):
        # order-4 stencils: halving the step cuts the truncation-dominated
        # residual of the kappa Laplacian by at least a factor of four
        chart = resolve_immersion("conj-curve?k=2")
        p = np.array([0.3, 0.05])
        coarse = run_check("delta-kappa-wolfson", chart, p,
                           CheckSettings(fd_step=8e-3))
        fine = run_check("delta-kappa-wolfson", chart, p,
                         CheckSettings(fd_step=4e-3))
        assert coarse.residual_abs > 4.0 * fine.residual_abs


class TestFrameIdentities:
    def test_constant_angle_connection_table(self):
        # at constant-angle points the mixed-conjugation connection entries and
        # the same-type asymmetry of the frame pairings vanish
        chart = resolve_immersion("hk-complex-plane?nu=0.9&phi=0.7")
        ws = Workspace(chart, np.zeros(4), SETTINGS)
        assert np.abs(ws.conn_coeff[1, :, 0, :, 0, :]).max() < 1e-7
        # (A, B, C) -> gdf is symmetric when the arguments are not all one type
        g = ws.gdf
        for b in range(2):
            for m in range(2):
                for r in range(2):
                    assert abs(g[0, b, 0, m, 1, r] - g[0, m, 0, b, 1, r]) < 1e-7

    def test_shape_anticommutation_in_parallel_regime(self):
        chart = resolve_immersion("tilted-plane?alpha=0.9&n=2")
        r = run_check("parallel-consequences", chart,
                      np.array([0.1, 0.2, -0.1, 0.3]), SETTINGS)
        assert r.verdict == "Pass"
        assert r.extras["shape_anticommutator"] < 1e-8


class TestQuadrature:
    def test_integral_weitzenbock_nonzero_balance(self):
        chart = resolve_immersion("torus-graph?eps=0.1&winding=tilted")
        r = run_check("integral-weitzenbock", chart, np.zeros(2), SETTINGS)
        assert r.verdict == "Pass"
        assert r.lhs > 1e-3  # both integrals genuinely nonzero
        assert abs(r.lhs - r.rhs) < 1e-6

    def test_integral_n2_trivial_on_flat_lagrangian(self):
        chart = resolve_immersion("torus-graph?eps=0")
        r = run_check("integral-n2", chart, np.zeros(2), SETTINGS)
        assert r.verdict == "Pass"
        assert abs(r.lhs) < 1e-12

    def test_integral_n3_skips_below_three(self):
        chart = resolve_immersion("torus-graph?eps=0")
        r = run_check("integral-n3", chart, np.zeros(2), SETTINGS)
        assert r.verdict == "Skipped"
        assert "n >= 3" in r.reason

    def test_quadrature_needs_torus(self):
        chart = resolve_immersion("conj-curve?k=2")
        r = run_check("integral-weitzenbock", chart, np.zeros(2), SETTINGS)
        assert r.verdict == "Skipped"

    def test_volume_quadrature_grid_convergence(self):
        # the total-volume quadrature of a curved periodic immersion converges
        # with at least second order under grid refinement
        from kalab.checks import _integrate

        chart = resolve_immersion("torus-graph?eps=0.35&winding=tilted")
        vols = [_integrate(chart, n, lambda q: 1.0) for n in (8, 16, 32)]
        d1 = abs(vols[1] - vols[0])
        d2 = abs(vols[2] - vols[1])
        assert d2 < 1e-12 or d1 / d2 >= 4.0
