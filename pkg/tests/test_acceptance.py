"""Acceptance criteria.

Each test implements one shipping criterion at its stated tolerance and
prints a single PASS line when it holds.  Run with ``pytest -s`` to see the
lines; any assertion failure is a red criterion.
"""
import json
import math
import time

import numpy as np

from kalab.angles import angle_data
from kalab.catalog import resolve_immersion
from kalab.checks import CheckSettings, run_check
from kalab.cli import main
from kalab.fields import angle_field_derivatives
from kalab.flow import dichotomy_report, discretize, run_flow
from kalab.tensorcore import MatrixPath, det_path_derivatives

SETTINGS = CheckSettings()


def _announce(idx, text):
    print(f"ACCEPTANCE {idx:02d} PASS: {text}")


def test_criterion_01_angle_extraction_exactness():
    t0 = time.time()
    tp = resolve_immersion("tilted-plane?alpha=pi/3&n=1")
    ad = angle_data(tp, np.array([0.2, -0.4]))
    assert abs(ad.cos_spectrum[0] - 0.5) < 1e-12
    cc = resolve_immersion("conj-curve?k=2")
    ad2 = angle_data(cc, np.array([0.3, 0.0]))
    assert abs(ad2.cos_spectrum[0] - 8.0 / 17.0) < 1e-10
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _announce(1, f"tilted-plane cos = 0.5 and conj-curve cos = 8/17 exact ({elapsed:.2f}s)")


def test_criterion_02_kappa_determinant_identity():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    specs = ["conj-curve?k=2", "product-conj", "tilted-plane?alpha=0.8&n=2",
             "lagrangian-graph", "hk-complex-plane?nu=0.9&phi=0.4"]
    checked = 0
    worst = 0.0
    while checked < 25:
        ch = resolve_immersion(specs[checked % len(specs)])
        lo, hi = ch.sampling_box
        ad = angle_data(ch, rng.uniform(lo, hi))
        if not math.isfinite(ad.kappa) or ad.cos_spectrum.max() > 1 - 1e-6:
            continue
        worst = max(worst, abs(ad.kappa - ad.kappa_from_determinants))
        checked += 1
    assert worst < 1e-9
    elapsed = time.time() - t0
    assert elapsed < 5.0
    _announce(2, f"kappa equals half log det-ratio at 25 points, worst {worst:.2e} ({elapsed:.2f}s)")


def test_criterion_03_determinant_path_derivatives():
    t0 = time.time()
    rng = np.random.default_rng(7)
    stencil = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
    worst_first = worst_second = 0.0
    for _ in range(20):
        d0 = rng.uniform(0.5, 2.0, 4)
        b = rng.standard_normal((2, 4, 4)) + 1j * rng.standard_normal((2, 4, 4))
        c = rng.standard_normal((2, 2, 4, 4)) + 1j * rng.standard_normal((2, 2, 4, 4))
        c = 0.5 * (c + c.transpose(1, 0, 2, 3))

        def ev(t, d0=d0, b=b, c=c):
            return (
                np.diag(d0).astype(complex)
                + np.einsum("k,kij->ij", t, b)
                + 0.5 * np.einsum("k,l,klij->ij", t, t, c)
            )

        path = MatrixPath(ev, np.zeros(2), d0)
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        out = det_path_derivatives(path, (z, w), h=1e-4)

        def det_at(t, ev=ev):
            return np.linalg.det(ev(t))

        h = 1e-4

        def d_scalar(f, base, k):
            e = np.zeros(2); e[k] = 1.0
            return sum(wgt * f(base + s * h * e) for s, wgt in stencil) / h

        first = sum(z[k] * d_scalar(det_at, np.zeros(2), k) for k in range(2))
        second = 0j
        for k in range(2):
            for l in range(2):
                e = np.zeros(2); e[l] = 1.0
                second += z[k] * w[l] * sum(
                    wgt * d_scalar(det_at, s * h * e, k) for s, wgt in stencil
                ) / h
        worst_first = max(worst_first, abs(out.first - first) / (1 + abs(first)))
        worst_second = max(worst_second, abs(out.second - second) / (1 + abs(second)))
    assert worst_first < 1e-7
    assert worst_second < 1e-7
    elapsed = time.time() - t0
    assert elapsed < 5.0
    _announce(3, f"det-path derivatives vs scalar oracle on 20 paths, worst rel "
                 f"{max(worst_first, worst_second):.2e} ({elapsed:.2f}s)")


def test_criterion_04_surface_laplacian_harmonicity():
    t0 = time.time()
    ch = resolve_immersion("conj-curve?k=2")
    rng = np.random.default_rng(4)
    lo, hi = ch.sampling_box
    worst = 0.0
    for _ in range(10):
        p = rng.uniform(lo, hi)
        der = angle_field_derivatives(ch, p)
        worst = max(worst, abs(der.laplace_kappa))
    assert worst < 1e-5
    elapsed = time.time() - t0
    assert elapsed < 10.0
    _announce(4, f"surface kappa Laplacian vanishes at 10 points, worst {worst:.2e} ({elapsed:.2f}s)")


def test_criterion_05_flagship_five_term_cancellation():
    t0 = time.time()
    ch = resolve_immersion("product-conj")
    points = [
        np.array([0.30, 0.00, 0.00, 0.40]),
        np.array([0.25, 0.05, 0.10, 0.35]),
        np.array([0.20, 0.10, 0.30, 0.05]),
        np.array([0.32, 0.02, 0.12, 0.28]),
        np.array([0.15, 0.22, 0.33, 0.08]),
    ]
    worst_rhs = worst_lhs = 0.0
    for p in points:
        ad = angle_data(ch, p)
        assert ad.cos_spectrum[0] - ad.cos_spectrum[1] > 1e-3  # genuinely distinct
        r = run_check("delta-kappa-general", ch, p, SETTINGS)
        assert r.verdict == "Pass", r.reason
        worst_rhs = max(worst_rhs, abs(r.rhs))
        worst_lhs = max(worst_lhs, abs(r.lhs))
    assert worst_rhs < 1e-4
    assert worst_lhs < 1e-4
    elapsed = time.time() - t0
    assert elapsed < 60.0
    _announce(5, f"five-term Laplacian expansion cancels at 5 distinct-angle points, "
                 f"|rhs| <= {worst_rhs:.2e}, |lhs| <= {worst_lhs:.2e} ({elapsed:.2f}s)")


def test_criterion_06_weitzenbock_balance():
    t0 = time.time()
    ch = resolve_immersion("conj-curve?k=2")
    rng = np.random.default_rng(6)
    lo, hi = ch.sampling_box
    worst = 0.0
    for _ in range(5):
        r = run_check("weitzenbock", ch, rng.uniform(lo, hi), SETTINGS)
        assert r.verdict == "Pass"
        worst = max(worst, r.residual_abs)
    assert worst < 1e-5
    pc = resolve_immersion("product-conj")
    r2 = run_check("s-term-equality", pc, np.array([0.3, 0.0, 0.0, 0.4]), SETTINGS)
    assert r2.verdict == "Pass"
    assert r2.residual_abs < 1e-6
    elapsed = time.time() - t0
    assert elapsed < 30.0
    _announce(6, f"four-term balance worst {worst:.2e}; curvature-pairing forms agree "
                 f"to {r2.residual_abs:.2e} ({elapsed:.2f}s)")


def test_criterion_07_ricci_reconstruction():
    t0 = time.time()
    ch = resolve_immersion("clifford-cp2")
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        p = rng.uniform(0, 2 * np.pi, 2)
        r = run_check("ricci-reconstruction", ch, p, SETTINGS)
        assert r.verdict == "Pass"
        worst = max(worst, r.residual_abs)
    assert worst < 1e-6
    elapsed = time.time() - t0
    assert elapsed < 10.0
    _announce(7, f"ambient Ricci recovered through the frame sum, worst {worst:.2e} ({elapsed:.2f}s)")


def test_criterion_08_quaternionic_plane_probe():
    t0 = time.time()
    rng = np.random.default_rng(8)
    worst_angle = 0.0
    for _ in range(10):
        nu = rng.uniform(0.1, np.pi - 0.1)
        phi = rng.uniform(0, 2 * np.pi)
        ch = resolve_immersion(f"hk-complex-plane?nu={nu}&phi={phi}")
        ad = angle_data(ch, np.zeros(4))
        worst_angle = max(worst_angle, np.abs(ad.cos_spectrum - abs(math.cos(nu))).max())
    assert worst_angle < 1e-10
    ch = resolve_immersion("hk-complex-plane?nu=0.9&phi=0.7")
    r = run_check("anticommute-criterion", ch, np.zeros(4), SETTINGS)
    assert r.verdict == "Pass"
    assert r.residual_abs < 1e-12
    elapsed = time.time() - t0
    assert elapsed < 5.0
    _announce(8, f"plane angles equal |cos nu| (worst {worst_angle:.2e}); anticommutation "
                 f"iff orthogonal ({elapsed:.2f}s)")


def test_criterion_09_codifferential_table():
    t0 = time.time()
    # n = 1: the isometry part is divergence-free and the form part matches -J grad cos
    ch1 = resolve_immersion("conj-curve?k=2")
    r1 = run_check("codifferential", ch1, np.array([0.3, 0.05]), SETTINGS)
    assert r1.verdict == "Pass"
    assert r1.extras["isometry_codiff_residual"] < 1e-7
    assert r1.extras["form_codiff_residual"] < 1e-7
    der1 = angle_field_derivatives(ch1, np.array([0.3, 0.05]))
    assert np.abs(der1.codiff_jomega).max() < 1e-7
    # n = 2 at an equal-angle (here constant-angle) point: the form is co-closed
    ch2 = resolve_immersion("tilted-plane?alpha=0.8&n=2")
    der2 = angle_field_derivatives(ch2, np.array([0.1, 0.2, -0.1, 0.3]))
    assert np.abs(der2.codiff_pullback).max() < 1e-7
    r2 = run_check("codifferential", ch2, np.array([0.1, 0.2, -0.1, 0.3]), SETTINGS)
    assert r2.verdict == "Pass"
    # n = 3: both sides vanish on the constant-angle example
    ch3 = resolve_immersion("tilted-plane?alpha=0.8&n=3")
    r3 = run_check("codifferential", ch3, np.array([0.1, 0.2, -0.1, 0.3, 0.2, -0.2]), SETTINGS)
    assert r3.verdict == "Pass"
    assert r3.residual_abs < 1e-7
    elapsed = time.time() - t0
    assert elapsed < 60.0
    _announce(9, f"codifferential table verified for n = 1, 2, 3 ({elapsed:.2f}s)")


def test_criterion_10_flow_probe():
    t0 = time.time()
    flat = (2 * np.pi) ** 2
    disc = discretize(resolve_immersion("torus-graph?eps=0.1"), (32, 32))
    trace = run_flow(disc, max_steps=8000)
    vols = trace.volumes
    assert np.all(np.diff(vols) <= 1e-12)
    assert abs(vols[-1] - flat) / flat < 1e-6
    last = trace.steps[-1]
    assert last.max_cos < 1e-4
    assert last.max_h < 1e-5
    steps = max(last.step, 1)
    dt = trace.steps[-1].step_size
    assert trace.class_drift < 1e-6 * max(1.0, steps * dt / 1000.0)
    assert dichotomy_report(trace)["limit_class"] == "Lagrangian"
    elapsed = time.time() - t0
    assert elapsed < 120.0
    _announce(10, f"flow descends monotonically to the flat torus in {steps} steps, "
                  f"final max cos {last.max_cos:.2e}, drift {trace.class_drift:.2e} ({elapsed:.2f}s)")


def test_criterion_11_cli_determinism(tmp_path):
    args = [
        "verify", "--checks", "delta-kappa-wolfson,codiff-norm",
        "--example", "conj-curve?k=2", "--points", "3", "--seed", "123",
        "--format", "json",
    ]
    out1 = tmp_path / "run1.json"
    out2 = tmp_path / "run2.json"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    b1 = out1.read_bytes()
    assert b1 == out2.read_bytes()
    payload = json.loads(b1)
    assert payload["summary"]["fail"] == 0
    _announce(11, "two identical runs produced byte-identical reports")
