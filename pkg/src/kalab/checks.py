"""Registry of identity checks.

Each check evaluates the two sides of one identity along independent code
paths: typically one side is assembled pointwise from frame quantities (the
second fundamental form contracted with a complexified diagonalizing frame,
connection coefficients, curvature arrays) while the other side comes from
finite differences of a canonical scalar or tensor field.  A check that does
not apply at the requested point reports Skipped with the failed hypothesis,
never a hollow Pass.

Notation used in the runners: for the complexified frame Z_1 .. Z_n the
scalar gdf(a; b; c) denotes g(nabla dF(Z_a, Z_b), J dF(Z_c)) and
conn(a; b; c) denotes the coefficient <nabla_{Z_a} Z_b, Z_c> of the
continued frame field, where every slot may carry a conjugation.
"""
from __future__ import annotations

import fnmatch
import math
from dataclasses import dataclass, field as dc_field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import fd
from .angles import (
    DiagonalizingFrame,
    angle_data,
    build_frame,
    normal_bundle_angles,
    phi_and_hat,
    pullback_form,
    torsion_and_difference,
)
from .errors import AngleCrossingError, ConfigError, GeometryError
from .fields import (
    FrameField,
    angle_field_derivatives,
    cluster_structure,
    codifferential_2form,
    covariant_d_2form,
    frame_connection,
    gtilde_form_field,
    guarded_cluster_field,
    hodge_laplacian_2form,
    pullback_2form_field,
    scalar_derivatives,
    spectrum_at,
)
from .immersion import (
    FDParams,
    ImmersionChart,
    domain_curvature,
    first_fundamental,
    induced_metric,
    second_fundamental,
    shape_operator,
)
from .targets import SpherePoint, j_from_sphere
from .tensorcore import polar_decompose_skew, sorted_angle_spectrum, two_form_to_operator


@dataclass(frozen=True)
class CheckSettings:
    fd_step: float = 1e-3
    fd_order: int = 4
    minimality_tol: float = 1e-7
    equal_tol: float = 1e-7
    classify_tol: float = 1e-7
    seed: int = 0
    grid_n: int = 32


@dataclass(frozen=True)
class IdentityReport:
    check_id: str
    point: Optional[tuple]
    lhs: float
    rhs: float
    residual_abs: float
    residual_rel: float
    tolerance: float
    verdict: str                      # Pass | Fail | Skipped
    reason: Optional[str] = None
    oracle_metadata: dict = dc_field(default_factory=dict)
    extras: dict = dc_field(default_factory=dict)


@dataclass(frozen=True)
class CheckSpec:
    """A named identity with its two evaluation routes and applicability gate."""

    id: str
    statement: str
    sides: tuple
    tolerance: float
    runner: Callable
    kind: str = "pointwise"           # pointwise | quadrature


def _report(spec: CheckSpec, point, lhs, rhs, residual_abs, extras=None, meta=None) -> IdentityReport:
    lhs = float(lhs)
    rhs = float(rhs)
    residual_abs = float(residual_abs)
    rel = residual_abs / (abs(lhs) + abs(rhs) + 1.0)
    return IdentityReport(
        check_id=spec.id,
        point=None if point is None else tuple(float(x) for x in np.atleast_1d(point)),
        lhs=lhs,
        rhs=rhs,
        residual_abs=residual_abs,
        residual_rel=rel,
        tolerance=spec.tolerance,
        verdict="Pass" if rel < spec.tolerance else "Fail",
        oracle_metadata=meta or {},
        extras=extras or {},
    )


def _skipped(spec: CheckSpec, point, reason: str) -> IdentityReport:
    return IdentityReport(
        check_id=spec.id,
        point=None if point is None else tuple(float(x) for x in np.atleast_1d(point)),
        lhs=math.nan,
        rhs=math.nan,
        residual_abs=math.nan,
        residual_rel=math.nan,
        tolerance=spec.tolerance,
        verdict="Skipped",
        reason=reason,
    )


# --------------------------------------------------------------------------
# lazy per-point workspace shared by the runners


class Workspace:
    """Lazily computed geometric quantities at one point of one immersion."""

    def __init__(self, chart: ImmersionChart, point, settings: CheckSettings):
        self.chart = chart
        self.p = np.asarray(point, float)
        self.settings = settings
        self.n = chart.domain_dim // 2

    @cached_property
    def pg(self):
        return first_fundamental(self.chart, self.p)

    @cached_property
    def ad(self):
        return angle_data(self.chart, self.p, self.pg, classify_tol=self.settings.classify_tol)

    @cached_property
    def sf(self):
        return second_fundamental(self.chart, self.p, self.pg)

    @cached_property
    def frame(self) -> DiagonalizingFrame:
        return build_frame(self.pg, self.ad.polar, self.ad.cos_spectrum)

    @cached_property
    def conn(self):
        return frame_connection(self.chart, self.p, self.frame, gam=self.pg.domain_christoffel)

    @cached_property
    def der(self):
        return angle_field_derivatives(self.chart, self.p, self.ad)

    @cached_property
    def curv(self):
        return domain_curvature(self.chart, self.p, sf=self.sf)

    @cached_property
    def cos(self) -> np.ndarray:
        return self.ad.cos_spectrum

    @cached_property
    def sin2(self) -> np.ndarray:
        return 1.0 - self.cos ** 2

    @cached_property
    def zv(self) -> np.ndarray:
        """zv[0, a] = Z_a, zv[1, a] = conj(Z_a), as complex coordinate vectors."""
        z = self.frame.z_matrix
        return np.stack([z.T, np.conj(z.T)])

    @cached_property
    def dfz(self) -> np.ndarray:
        """dfz[s, a] = dF applied to zv[s, a]."""
        return np.einsum("ki,sak->sai", np.asarray(self.pg.dF, complex).T, self.zv)

    @cached_property
    def jdfz(self) -> np.ndarray:
        j = np.asarray(self.pg.target_complex_structure, complex)
        return np.einsum("ab,sib->sia", j, self.dfz)

    @cached_property
    def jdfz_perp(self) -> np.ndarray:
        proj = np.asarray(self.pg.normal_projector, complex)
        return np.einsum("ab,sib->sia", proj, self.jdfz)

    @cached_property
    def gdf(self) -> np.ndarray:
        """gdf[s1,a,s2,b,s3,c] = g(nabla dF(Z_a^, Z_b^), J dF(Z_c^))."""
        ii = np.asarray(self.sf.nabla_dF, complex)
        iic = np.einsum("kij,sai,tbj->satbk", ii, self.zv, self.zv)
        gn = np.asarray(self.pg.g_target, complex)
        return np.einsum("satbk,kl,ucl->satbuc", iic, gn, self.jdfz)

    @cached_property
    def conn_coeff(self) -> np.ndarray:
        """conn_coeff[s1,b,s2,m,s3,r] = <nabla_{Z_b^} Z_m^, Z_r^> of the frame field."""
        n = self.n
        vecs = np.empty((2, n, 2, n, self.chart.domain_dim), complex)
        vecs[0, :, 0, :] = self.conn.d1
        vecs[1, :, 0, :] = self.conn.d2
        vecs[0, :, 1, :] = np.conj(self.conn.d2)
        vecs[1, :, 1, :] = np.conj(self.conn.d1)
        g = np.asarray(self.pg.g_M.components, complex)
        return np.einsum("sbtmk,kl,url->sbtmur", vecs, g, self.zv)

    @cached_property
    def rn4(self) -> np.ndarray:
        return np.asarray(self.chart.target.curvature(self.pg.target_point), complex)

    @cached_property
    def ricci_n(self) -> np.ndarray:
        return np.asarray(self.chart.target.ricci(self.pg.target_point), complex)

    @cached_property
    def rm4(self) -> np.ndarray:
        """Domain curvature used by frame contractions (Gauss route)."""
        return np.asarray(self.curv.rm_gauss, complex)

    @cached_property
    def ricci_m(self) -> np.ndarray:
        gi = np.asarray(self.pg.g_M.inverse, complex)
        return np.einsum("ijkl,jl->ik", self.rm4, gi)

    @cached_property
    def minimality(self) -> float:
        """max |H| over the point and the first-derivative stencil."""
        worst = self.sf.mean_curvature_norm
        prm = self.chart.fd_params
        for i in range(self.chart.domain_dim):
            for s in (-2, -1, 1, 2):
                q = self.p.copy()
                q[i] += s * fd.step_for(self.p, i, prm.step)
                worst = max(worst, second_fundamental(self.chart, q).mean_curvature_norm)
        return float(worst)

    # -- contraction helpers ------------------------------------------------

    def rn(self, *vectors):
        return np.einsum("abcd,a,b,c,d->", self.rn4, *[np.asarray(v, complex) for v in vectors])

    def rm_z(self, idx):
        """The domain curvature on frame vectors; idx lists (bar, alpha) pairs."""
        return np.einsum("abcd,a,b,c,d->", self.rm4, *[self.zv[s, a] for s, a in idx])

    # -- hypotheses ----------------------------------------------------------

    def hypothesis(self, minimal=False, no_complex=False, no_lagrangian=False,
                   equal=False, einstein=False, n_is=None, n_at_least=None):
        c = self.cos
        tol = self.settings.classify_tol
        if n_is is not None and self.n != n_is:
            return f"needs n = {n_is}, immersion has n = {self.n}"
        if n_at_least is not None and self.n < n_at_least:
            return f"needs n >= {n_at_least}, immersion has n = {self.n}"
        if no_complex and c.max() > 1 - tol:
            return "complex direction present"
        if no_lagrangian and c.min() < tol:
            return "isotropic (Lagrangian) direction present"
        if equal and (c.max() - c.min()) > self.settings.equal_tol:
            return "angles are not equal at this point"
        if einstein and self.chart.target.einstein_constant is None:
            return "target is not Einstein"
        if minimal and self.minimality > self.settings.minimality_tol:
            return f"requires minimal immersion (max |H| = {self.minimality:.3g} on stencil)"
        return None


# --------------------------------------------------------------------------
# two-form inner products and the curvature action


def _form_inner_g(g_M, a: np.ndarray, b: np.ndarray) -> float:
    """Hilbert-Schmidt pairing of two-forms, half the full index sum."""
    e = g_M.orthonormal_basis
    return 0.5 * float(np.einsum("ij,ij->", e.T @ a @ e, e.T @ b @ e))


def _form_inner(ws: Workspace, a: np.ndarray, b: np.ndarray) -> float:
    return _form_inner_g(ws.pg.g_M, a, b)


def _s_action_g(g_M, rm: np.ndarray, form: np.ndarray) -> np.ndarray:
    """The curvature operator on two-forms from the Weitzenboeck identity.

    S xi (X, Y) = sum_i [ xi(R(e_i, X) e_i, Y) + xi(e_i, R(e_i, X) Y) ]
                        - [ same with X and Y swapped ]
    over an orthonormal basis; the basis sum is contracted through the
    inverse metric.
    """
    gi = g_M.inverse
    r_op = np.einsum("ijkw,wl->ijkl", rm, gi)      # (R(e_i, e_j) e_k)^l
    m1 = np.einsum("ia,ixaw,wy->xy", gi, r_op, form)
    m2 = np.einsum("ia,aw,ixyw->xy", gi, form, r_op)
    return m1 + m2 - m1.T - m2.T


def _s_action(ws: Workspace, form: np.ndarray) -> np.ndarray:
    return _s_action_g(ws.pg.g_M, np.real(ws.rm4), form)


def _s_inner_direct(ws: Workspace) -> float:
    xi = ws.ad.pullback_2form
    return _form_inner(ws, _s_action(ws, xi), xi)


def _gauss_curvature_at(chart: ImmersionChart, pgq, sfq) -> np.ndarray:
    """Domain curvature along the Gauss route only (no metric-field stencils)."""
    r4n = chart.target.curvature(pgq.target_point)
    dF = pgq.dF
    rn_pull = np.einsum("abcd,ai,bj,ck,dl->ijkl", r4n, dF, dF, dF, dF)
    ii = sfq.nabla_dF
    gn = pgq.g_target
    return (
        rn_pull
        + np.einsum("aik,ab,bjl->ijkl", ii, gn, ii)
        - np.einsum("ail,ab,bjk->ijkl", ii, gn, ii)
    )


# --------------------------------------------------------------------------
# first-order checks


def _run_ricci_reconstruction(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    d = ws.chart.target.real_dim
    j = np.asarray(ws.pg.target_complex_structure, complex)
    rhs_mat = np.zeros((d, d), complex)
    eye = np.eye(d)
    for mu in range(ws.n):
        coef = 4.0 / ws.sin2[mu]
        partial = np.einsum("abcd,c,d->ab", ws.rn4, ws.dfz[0, mu], ws.jdfz_perp[1, mu])
        rhs_mat += coef * np.einsum("ab,bv->av", partial, j)
    lhs_mat = ws.ricci_n
    resid = float(np.abs(lhs_mat - rhs_mat).max())
    return _report(
        spec, ws.p,
        lhs=float(np.abs(lhs_mat).max()),
        rhs=float(np.abs(np.real(rhs_mat)).max()),
        residual_abs=resid,
        extras={"imag_part": float(np.abs(np.imag(rhs_mat)).max())},
    )


def _run_nabla_pullback(ws: Workspace, spec: CheckSpec):
    gam = ws.pg.domain_christoffel
    lhs = covariant_d_2form(ws.chart, ws.p, pullback_2form_field(ws.chart), gam)
    jdf = ws.pg.target_complex_structure @ ws.pg.dF
    b = np.einsum("aki,ab,bj->kij", ws.sf.nabla_dF, ws.pg.g_target, jdf)
    rhs = -b + b.transpose(0, 2, 1)
    resid = float(np.abs(lhs - rhs).max())
    return _report(
        spec, ws.p,
        lhs=float(np.abs(lhs).max()), rhs=float(np.abs(rhs).max()), residual_abs=resid,
        meta={"fd_step": ws.chart.fd_params.step, "fd_order": ws.chart.fd_params.order},
    )


def _run_torsion_lemma(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    tc = torsion_and_difference(ws.chart, ws.p, ws.ad)
    torsion_conn = np.asarray(tc.s_prime - tc.s_prime.transpose(0, 2, 1), complex)
    phi = np.asarray(tc.phi, complex)
    resid = 0.0
    scale = 0.0
    for a in range(ws.n):
        for b in range(ws.n):
            for sb, sign in ((1, +1), (0, -1)):
                # conjugate second slot pairs with i (c_a + c_b), plain with i (c_a - c_b)
                t_ab = np.einsum("kij,i,j->k", torsion_conn, ws.zv[0, a], ws.zv[sb, b])
                lhs_vec = phi @ t_ab
                coef = 1j * (ws.cos[a] + sign * ws.cos[b])
                rhs_vec = coef * np.einsum(
                    "kij,i,j->k", np.asarray(ws.sf.nabla_dF, complex), ws.zv[0, a], ws.zv[sb, b]
                )
                resid = max(resid, float(np.abs(lhs_vec - rhs_vec).max()))
                scale = max(scale, float(np.abs(rhs_vec).max()))
    return _report(
        spec, ws.p, lhs=scale, rhs=scale, residual_abs=resid,
        extras={"torsion_route_consistency": tc.torsion_consistency},
    )


def _logsin2_gradient(ws: Workspace) -> np.ndarray:
    cfield = guarded_cluster_field(ws.chart, cluster_structure(ws.cos, ws.settings.equal_tol),
                                   ws.settings.equal_tol)

    def logsin2(q):
        c = cfield(q)[0]
        return math.log(1.0 - c * c)

    _, _, grad, _, _ = scalar_derivatives(
        ws.chart, ws.p, logsin2, ws.pg.domain_christoffel, ws.pg.g_M.components
    )
    return grad


def _run_grad_logsin(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(no_complex=True, no_lagrangian=True, equal=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    grad = _logsin2_gradient(ws)
    phi = np.asarray(phi_and_hat(ws.chart, ws.p, ws.ad).phi, complex)
    lhs_vec = np.real(phi @ ((1 - ws.n) / 4.0 * grad).astype(complex))
    c = float(ws.cos.mean())
    s2 = 1.0 - c * c
    acc = np.zeros(ws.chart.target.real_dim, complex)
    for b in range(ws.n):
        phi_bbar = phi @ ws.zv[1, b]
        for mu in range(ws.n):
            acc += 1j * (ws.gdf[1, mu, 0, mu, 0, b] - ws.gdf[1, mu, 0, b, 0, mu]) * phi_bbar
    rhs_vec = (4.0 * c / s2) * np.real(acc)
    resid = float(np.abs(lhs_vec - rhs_vec).max())
    return _report(spec, ws.p, lhs=float(np.abs(lhs_vec).max()),
                   rhs=float(np.abs(rhs_vec).max()), residual_abs=resid)


def _run_codifferential(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(no_complex=True, equal=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    der = ws.der
    jom = ws.ad.polar.jomega
    grad_c = der.grad_cos[0]
    lhs1 = der.codiff_pullback_vector
    rhs1 = (ws.n - 2) * jom @ grad_c
    c = float(ws.cos.mean())
    lhs2 = c * der.codiff_jomega
    rhs2 = (ws.n - 1) * jom @ grad_c
    resid = max(float(np.abs(lhs1 - rhs1).max()), float(np.abs(lhs2 - rhs2).max()))
    return _report(
        spec, ws.p,
        lhs=float(np.abs(lhs1).max()), rhs=float(np.abs(rhs1).max()), residual_abs=resid,
        extras={
            "form_codiff_residual": float(np.abs(lhs1 - rhs1).max()),
            "isometry_codiff_residual": float(np.abs(lhs2 - rhs2).max()),
        },
    )


def _run_norm_split(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(equal=True, no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    der = ws.der
    c2 = float(ws.cos.mean()) ** 2
    lhs = der.nabla_pullback_norm2_op
    rhs = 2 * ws.n * float(der.grad_cos_norm2[0]) + c2 * der.nabla_jomega_norm2_op
    return _report(spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs))


def _run_gtilde_derivative(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    frame_field = FrameField(ws.chart, ws.frame, ws.p)
    gt_field = gtilde_form_field(ws.chart)
    n = ws.n
    prm = ws.chart.fd_params

    def gt_pair(q, mu, gamma, bar_second):
        fm = frame_field(q)
        z = np.stack([(fm[:, 2 * a] - 1j * fm[:, 2 * a + 1]) / 2 for a in range(n)])
        second = np.conj(z[gamma]) if bar_second else z[gamma]
        val = z[mu] @ gt_field(q) @ second
        return np.array([np.real(val), np.imag(val)])

    resid = 0.0
    scale = 0.0
    for mu in range(n):
        for gamma in range(n):
            for bar_second in (True, False):
                parts = np.stack(
                    [fd.partial(lambda q: gt_pair(q, mu, gamma, bar_second), ws.p, i,
                                prm.step, prm.order) for i in range(2 * n)]
                )
                dvals = (parts[:, 0] + 1j * parts[:, 1]).astype(complex)
                for sb in (0, 1):
                    for b in range(n):
                        lhs = ws.zv[sb, b] @ dvals
                        if bar_second:
                            rhs = (
                                1j * ws.gdf[sb, b, 0, mu, 1, gamma]
                                - 1j * ws.gdf[sb, b, 1, gamma, 0, mu]
                                - (ws.cos[mu] - ws.cos[gamma]) * ws.conn_coeff[sb, b, 0, mu, 1, gamma]
                            )
                            resid = max(resid, abs(lhs - rhs))
                        else:
                            # the pure-type entry vanishes identically; so must the closed form
                            rhs = (
                                -1j * ws.gdf[sb, b, 0, mu, 0, gamma]
                                + 1j * ws.gdf[sb, b, 0, gamma, 0, mu]
                                + (ws.cos[mu] + ws.cos[gamma]) * ws.conn_coeff[sb, b, 0, mu, 0, gamma]
                            )
                            resid = max(resid, abs(lhs), abs(rhs))
                        scale = max(scale, abs(rhs))
    return _report(spec, ws.p, lhs=scale, rhs=scale, residual_abs=resid,
                   meta={"fd_step": prm.step, "fd_order": prm.order})


def _run_trace_difference(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(no_complex=True, no_lagrangian=True, equal=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    tc = torsion_and_difference(ws.chart, ws.p, ws.ad)
    diff = np.asarray(tc.hat_christoffel, complex) - np.asarray(ws.pg.domain_christoffel, complex)
    lhs_vec = np.zeros(ws.chart.domain_dim, complex)
    for mu in range(ws.n):
        lhs_vec += np.einsum("kij,i,j->k", diff, ws.zv[1, mu], ws.zv[0, mu])
    rhs_vec = (1 - ws.n) / 4.0 * _logsin2_gradient(ws).astype(complex)
    resid = float(np.abs(lhs_vec - rhs_vec).max())
    return _report(spec, ws.p, lhs=float(np.abs(lhs_vec).max()),
                   rhs=float(np.abs(rhs_vec).max()), residual_abs=resid)


# --------------------------------------------------------------------------
# Weitzenboeck block


def _run_s_term_equality(ws: Workspace, spec: CheckSpec):
    direct = _s_inner_direct(ws)
    c = ws.cos
    expr1 = 0.0
    expr2 = 0.0
    for mu in range(ws.n):
        ric = np.einsum("ik,i,k->", ws.ricci_m, ws.zv[0, mu], ws.zv[1, mu])
        expr1 += 4 * c[mu] ** 2 * float(np.real(ric))
        for rho in range(ws.n):
            expr1 += 8 * c[mu] * c[rho] * float(np.real(
                ws.rm_z(((0, rho), (1, rho), (0, mu), (1, mu)))
            ))
            expr2 += 4 * (c[mu] + c[rho]) ** 2 * float(np.real(
                ws.rm_z(((0, rho), (0, mu), (1, rho), (1, mu)))
            ))
            expr2 += 4 * (c[mu] - c[rho]) ** 2 * float(np.real(
                ws.rm_z(((1, rho), (0, mu), (0, rho), (1, mu)))
            ))
    resid = max(abs(direct - expr1), abs(direct - expr2), abs(expr1 - expr2))
    return _report(spec, ws.p, lhs=direct, rhs=expr1, residual_abs=resid,
                   extras={"pair_form": expr2})


def _run_s_term_equal_angle(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(equal=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    direct = _s_inner_direct(ws)
    c2 = float(ws.cos.mean()) ** 2
    acc = 0.0
    for rho in range(ws.n):
        for mu in range(ws.n):
            acc += float(np.real(ws.rm_z(((0, rho), (0, mu), (1, rho), (1, mu)))))
    rhs = 16 * c2 * acc
    return _report(spec, ws.p, lhs=direct, rhs=rhs, residual_abs=abs(direct - rhs))


def _run_weitzenbock(ws: Workspace, spec: CheckSpec):
    def norm2_field(q):
        pgq = first_fundamental(ws.chart, q)
        form, _ = pullback_form(ws.chart, q, pgq)
        on = pgq.g_M.orthonormal_basis
        fo = on.T @ form @ on
        return 0.5 * float(np.einsum("ij,ij->", fo, fo))

    _, _, _, _, lap = scalar_derivatives(
        ws.chart, ws.p, norm2_field, ws.pg.domain_christoffel, ws.pg.g_M.components
    )
    lhs = 0.5 * float(lap)
    xi = ws.ad.pullback_2form
    lap_xi = hodge_laplacian_2form(ws.chart, ws.p)
    term_hodge = -_form_inner(ws, lap_xi, xi)
    term_grad = ws.der.nabla_pullback_norm2_form
    term_s = _s_inner_direct(ws)
    rhs = term_hodge + term_grad + term_s
    return _report(
        spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs),
        extras={
            "hodge_term": term_hodge,
            "gradient_term": term_grad,
            "curvature_term": term_s,
            "closedness_residual": ws.der.closedness_residual,
        },
    )


def _run_isotropic_scalar(ws: Workspace, spec: CheckSpec):
    total_pairs = 0.0
    total_trace = 0.0
    g = np.asarray(ws.pg.g_M.components, complex)
    for rho in range(ws.n):
        for mu in range(ws.n):
            val = float(np.real(ws.rm_z(((0, rho), (0, mu), (1, rho), (1, mu)))))
            total_trace += 4 * val
            if rho == mu:
                continue
            z, w = ws.zv[0, rho], ws.zv[0, mu]
            zz = z @ g @ np.conj(z)
            ww = w @ g @ np.conj(w)
            zw = z @ g @ np.conj(w)
            wedge = float(np.real(zz * ww - zw * np.conj(zw)))
            total_pairs += val / wedge
    return _report(spec, ws.p, lhs=total_pairs, rhs=total_trace,
                   residual_abs=abs(total_pairs - total_trace))


def _run_codiff_norm(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(equal=True, no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    der = ws.der
    gi = ws.pg.g_M.inverse
    lhs = float(der.codiff_pullback @ gi @ der.codiff_pullback)
    rhs = (ws.n - 2) ** 2 * float(der.grad_cos_norm2[0])
    return _report(spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs))


def _run_parallel_consequences(ws: Workspace, spec: CheckSpec):
    der = ws.der
    if der.nabla_pullback_norm2_op > 1e-10:
        return _skipped(spec, ws.p, "pulled-back form is not parallel at this point")
    drift = 0.0
    prm = ws.chart.fd_params
    for i in range(ws.chart.domain_dim):
        for s in (-2, 2):
            q = ws.p.copy()
            q[i] += s * fd.step_for(ws.p, i, prm.step)
            drift = max(drift, float(np.abs(spectrum_at(ws.chart, q) - ws.cos).max()))
    harmonic = float(np.abs(der.codiff_pullback).max())
    # a parallel morphism makes the form anticommute with every shape operator
    anti = 0.0
    basis = normal_bundle_angles(ws.pg)[2]
    a_form = ws.ad.pullback_operator.components
    for col in range(basis.shape[1]):
        a_u = shape_operator(ws.sf, ws.pg, basis[:, col])
        anti = max(anti, float(np.abs(a_form @ a_u + a_u @ a_form).max()))
    resid = max(drift, harmonic, anti)
    return _report(
        spec, ws.p, lhs=drift, rhs=0.0, residual_abs=resid,
        extras={"codifferential": harmonic, "shape_anticommutator": anti},
    )


# --------------------------------------------------------------------------
# Laplacian-of-kappa block


def _delta_kappa_general_rhs(ws: Workspace) -> dict:
    n = ws.n
    c = ws.cos
    s2 = ws.sin2
    t1 = 0.0 + 0.0j
    for b in range(n):
        t1 += 4j * np.einsum("ik,i,k->", ws.ricci_n, ws.jdfz[0, b], ws.dfz[1, b])
    t2 = 0.0
    for b in range(n):
        for mu in range(n):
            arg4 = ws.jdfz[1, mu] + 1j * c[mu] * ws.dfz[1, mu]
            t2 += (32.0 / s2[mu]) * float(
                np.imag(ws.rn(ws.dfz[0, b], ws.dfz[0, mu], ws.dfz[1, b], arg4))
            )
    t3 = t4 = t5 = 0.0
    for b in range(n):
        for mu in range(n):
            for rho in range(n):
                t3 -= (64 * (c[mu] + c[rho]) / (s2[mu] * s2[rho])) * float(
                    np.real(ws.gdf[0, b, 0, mu, 1, rho] * ws.gdf[1, b, 0, rho, 1, mu])
                )
                t4 += (32 * (c[rho] - c[mu]) / (s2[mu] * s2[rho])) * (
                    abs(ws.gdf[0, b, 0, mu, 0, rho]) ** 2
                    + abs(ws.gdf[1, b, 0, mu, 0, rho]) ** 2
                )
                t5 += (32 * (c[mu] + c[rho]) / s2[mu]) * (
                    abs(ws.conn_coeff[0, b, 0, mu, 0, rho]) ** 2
                    + abs(ws.conn_coeff[1, b, 0, mu, 0, rho]) ** 2
                )
    return {
        "ricci_term": float(np.real(t1)),
        "ricci_term_imag": float(np.imag(t1)),
        "ambient_curvature_term": t2,
        "mixed_product_term": t3,
        "difference_term": t4,
        "connection_term": t5,
        "total": float(np.real(t1)) + t2 + t3 + t4 + t5,
    }


def _run_delta_kappa_general(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(minimal=True, no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    lhs = ws.der.laplace_kappa
    terms = _delta_kappa_general_rhs(ws)
    rhs = terms["total"]
    return _report(
        spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs), extras=terms,
        meta={"fd_step": ws.chart.fd_params.step, "fd_order": ws.chart.fd_params.order},
    )


def _delta_kappa_equal_rhs(ws: Workspace) -> float:
    c = float(ws.cos.mean())
    s2 = 1.0 - c * c
    r_const = ws.chart.target.einstein_constant
    acc = 0.0
    for b in range(ws.n):
        for mu in range(ws.n):
            acc += float(np.real(ws.rm_z(((0, b), (0, mu), (1, b), (1, mu)))))
    der = ws.der
    return c * (
        -2 * ws.n * r_const
        + (32.0 / s2) * acc
        + der.nabla_jomega_norm2_op / s2
        + 8 * (ws.n - 1) / s2 ** 2 * float(der.grad_cos_norm2[0])
    )


def _run_delta_kappa_equal(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(minimal=True, no_complex=True, no_lagrangian=True,
                           equal=True, einstein=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    lhs = ws.der.laplace_kappa
    rhs = _delta_kappa_equal_rhs(ws)
    general = _delta_kappa_general_rhs(ws)["total"]
    return _report(
        spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs),
        extras={"general_route": general, "equal_vs_general": abs(rhs - general)},
    )


def _run_delta_kappa_wolfson(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(minimal=True, no_complex=True, einstein=True, n_is=1)
    if reason:
        return _skipped(spec, ws.p, reason)
    lhs = ws.der.laplace_kappa
    rhs = -2.0 * ws.chart.target.einstein_constant * float(ws.cos[0])
    return _report(spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs),
                   meta={"fd_step": ws.chart.fd_params.step, "fd_order": ws.chart.fd_params.order})


def _pluriminimal_defect(ws: Workspace) -> float:
    jt = ws.frame.jtilde
    ii = ws.sf.nabla_dF
    part = 0.5 * (ii + np.einsum("aij,ik,jl->akl", ii, jt, jt))
    return float(np.abs(part).max())


def _run_delta_kappa_pluriminimal(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(minimal=True, no_complex=True, einstein=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    defect = _pluriminimal_defect(ws)
    if defect > 1e-8:
        return _skipped(spec, ws.p, f"not pluriminimal (type-(1,1) part {defect:.3g})")
    lhs = ws.der.laplace_kappa
    rhs = -2.0 * ws.chart.target.einstein_constant * float(ws.cos.sum())
    return _report(spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs),
                   extras={"pluriminimal_defect": defect})


def _run_cos2_chain(ws: Workspace, spec: CheckSpec):
    reason = ws.hypothesis(minimal=True, no_complex=True, no_lagrangian=True,
                           equal=True, einstein=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    der = ws.der
    c = float(ws.cos.mean())
    s2 = 1.0 - c * c
    lhs = ws.n * float(der.laplace_cos2[0])
    rhs = (
        -2 * ws.n * ws.chart.target.einstein_constant * s2 * c * c
        + 2 * _s_inner_direct(ws)
        + 2 * der.nabla_pullback_norm2_form
        + 4 * (ws.n - 2) * c * c / s2 * float(der.grad_cos_norm2[0])
    )
    return _report(spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs))


def _run_gauss_holsec(ws: Workspace, spec: CheckSpec):
    if ws.chart.target.hol_sec_curvature is None:
        return _skipped(spec, ws.p, "target has no constant holomorphic sectional curvature")
    reason = ws.hypothesis(minimal=True, equal=True, no_complex=True)
    if reason:
        return _skipped(spec, ws.p, reason)
    k_hol = ws.chart.target.hol_sec_curvature
    c = float(ws.cos.mean())
    s2 = 1.0 - c * c
    rm_fd4 = np.asarray(ws.curv.rm_fd, complex)
    lhs = 0.0
    for mu in range(ws.n):
        for rho in range(ws.n):
            lhs += float(np.real(np.einsum(
                "abcd,a,b,c,d->", rm_fd4,
                ws.zv[0, mu], ws.zv[0, rho], ws.zv[1, mu], ws.zv[1, rho],
            )))
    ii = np.asarray(ws.sf.nabla_dF, complex)
    gn = np.asarray(ws.pg.g_target, complex)
    acc = 0.0
    for mu in range(ws.n):
        for rho in range(ws.n):
            v = np.einsum("kij,i,j->k", ii, ws.zv[0, mu], ws.zv[1, rho])
            acc += float(np.real(v @ gn @ np.conj(v)))
    rhs = ws.n * (ws.n - 1) / 16.0 * s2 * k_hol - acc
    return _report(spec, ws.p, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs))


# --------------------------------------------------------------------------
# quaternionic-structure block


def _require_hk(ws: Workspace, spec: CheckSpec):
    if ws.chart.target.hk_triple is None:
        return _skipped(spec, ws.p, "target carries no quaternionic structure triple")
    return None


def _sphere_points(settings: CheckSettings, count: int):
    rng = np.random.default_rng(settings.seed)
    return [SpherePoint(nu=float(a), phi=float(b))
            for a, b in zip(rng.uniform(0, math.pi, count), rng.uniform(0, 2 * math.pi, count))]


def _run_anticommute(ws: Workspace, spec: CheckSpec):
    skip = _require_hk(ws, spec)
    if skip:
        return skip
    triple = ws.chart.target.hk_triple
    pts = _sphere_points(ws.settings, 12)
    resid = 0.0
    scale = 0.0
    eye = np.eye(triple.i.shape[0])
    for a in range(0, len(pts), 2):
        s1, s2 = pts[a], pts[a + 1]
        j1, j2 = j_from_sphere(triple, s1), j_from_sphere(triple, s2)
        dot = float(s1.unit_vector @ s2.unit_vector)
        anti = j1 @ j2 + j2 @ j1
        resid = max(resid, float(np.abs(anti + 2 * dot * eye).max()))
        scale = max(scale, abs(dot))
    return _report(spec, ws.p, lhs=scale, rhs=scale, residual_abs=resid,
                   extras={"pairs": len(pts) // 2})


def _run_angle_between(ws: Workspace, spec: CheckSpec):
    skip = _require_hk(ws, spec)
    if skip:
        return skip
    if "nu" not in ws.chart.params:
        return _skipped(spec, ws.p, "needs the flat quaternionic plane immersion")
    triple = ws.chart.target.hk_triple
    plane = SpherePoint(nu=ws.chart.params["nu"], phi=ws.chart.params["phi"])
    resid = 0.0
    for view in _sphere_points(ws.settings, 6):
        jv = j_from_sphere(triple, view)
        form = ws.pg.dF.T @ jv.T @ ws.pg.g_target @ ws.pg.dF
        form = 0.5 * (form - form.T)
        spectrum = sorted_angle_spectrum(polar_decompose_skew(two_form_to_operator(form, ws.pg.g_M)))
        expected = abs(float(plane.unit_vector @ view.unit_vector))
        resid = max(resid, float(np.abs(spectrum - expected).max()))
    return _report(spec, ws.p, lhs=1.0, rhs=1.0, residual_abs=resid, extras={"views": 6})


def _run_complex_plane_angles(ws: Workspace, spec: CheckSpec):
    skip = _require_hk(ws, spec)
    if skip:
        return skip
    if "nu" not in ws.chart.params:
        return _skipped(spec, ws.p, "needs the flat quaternionic plane immersion")
    triple = ws.chart.target.hk_triple
    nu = ws.chart.params["nu"]
    js = j_from_sphere(triple, SpherePoint(nu=nu, phi=ws.chart.params["phi"]))
    dF = ws.pg.dF
    # the structure preserves the plane; conjugation by dF represents it on the domain
    j_dom = ws.pg.g_M.inverse @ (dF.T @ ws.pg.g_target @ js @ dF)
    a_op = ws.ad.pullback_operator.components
    resid = float(np.abs(a_op - math.cos(nu) * j_dom).max())
    return _report(spec, ws.p, lhs=float(np.abs(a_op).max()),
                   rhs=abs(math.cos(nu)), residual_abs=resid)


def _run_normal_bundle_angles(ws: Workspace, spec: CheckSpec):
    if ws.chart.target.real_dim != 2 * ws.chart.domain_dim:
        return _skipped(spec, ws.p, "normal bundle comparison needs half-dimensional immersions")
    spectrum_nm, j_nm, _ = normal_bundle_angles(ws.pg)
    resid = float(np.abs(spectrum_nm - ws.cos).max())
    extras = {}
    if ws.hypothesis(equal=True, no_complex=True, no_lagrangian=True) is None:
        phi = phi_and_hat(ws.chart, ws.p, ws.ad).phi
        jom = ws.ad.polar.jomega
        anti = phi @ jom + j_nm @ phi
        extras["morphism_anticommutation"] = float(np.abs(anti).max())
        resid = max(resid, extras["morphism_anticommutation"])
    return _report(spec, ws.p, lhs=float(np.abs(ws.cos).max()),
                   rhs=float(np.abs(spectrum_nm).max()), residual_abs=resid, extras=extras)


# --------------------------------------------------------------------------
# quadrature block


def _domain_grid(chart: ImmersionChart, grid_n: int):
    if chart.lattice_domain is None:
        raise ConfigError("quadrature needs a periodic (torus) domain")
    lat = chart.lattice_domain
    dn = chart.domain_dim
    axes = [np.arange(grid_n) / grid_n for _ in range(dn)]
    mesh = np.meshgrid(*axes, indexing="ij")
    fracs = np.stack([m.ravel() for m in mesh], axis=1)
    points = fracs @ lat.T
    cell = abs(np.linalg.det(lat)) / grid_n ** dn
    return points, cell


def _integrate(chart: ImmersionChart, grid_n: int, integrand: Callable) -> float:
    points, cell = _domain_grid(chart, grid_n)
    total = 0.0
    for q in points:
        g = induced_metric(chart, q)
        total += integrand(q) * math.sqrt(max(np.linalg.det(g), 0.0))
    return total * cell


def _grid_minimality(chart: ImmersionChart, settings: CheckSettings, probes: int = 4) -> float:
    """max |H| over a coarse probe grid of the torus domain."""
    points, _ = _domain_grid(chart, probes)
    return max(second_fundamental(chart, q).mean_curvature_norm for q in points)


def _run_integral_weitzenbock(ws: Workspace, spec: CheckSpec):
    if ws.chart.lattice_domain is None:
        return _skipped(spec, None, "immersion domain is not a torus")
    grid = ws.settings.grid_n
    xi_field = pullback_2form_field(ws.chart)

    def delta_sq(q):
        pgq = first_fundamental(ws.chart, q)
        dx = codifferential_2form(ws.chart, q, xi_field, gam=pgq.domain_christoffel,
                                  g=pgq.g_M.components)
        return float(dx @ pgq.g_M.inverse @ dx)

    def grad_plus_s(q):
        pgq = first_fundamental(ws.chart, q)
        dxi = covariant_d_2form(ws.chart, q, xi_field, gam=pgq.domain_christoffel)
        e = pgq.g_M.orthonormal_basis
        dxi_on = np.einsum("kij,kc,ia,jb->cab", dxi, e, e, e)
        norm2 = 0.5 * float(np.einsum("cab,cab->", dxi_on, dxi_on))
        sfq = second_fundamental(ws.chart, q, pgq)
        rm = _gauss_curvature_at(ws.chart, pgq, sfq)
        form, _ = pullback_form(ws.chart, q, pgq)
        s_term = _form_inner_g(pgq.g_M, _s_action_g(pgq.g_M, rm, form), form)
        return norm2 + s_term

    lhs = _integrate(ws.chart, grid, delta_sq)
    rhs = _integrate(ws.chart, grid, grad_plus_s)
    return _report(spec, None, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs),
                   meta={"grid": grid})


def _run_integral_n2(ws: Workspace, spec: CheckSpec):
    if ws.chart.lattice_domain is None:
        return _skipped(spec, None, "immersion domain is not a torus")
    if ws.chart.target.einstein_constant is None:
        return _skipped(spec, None, "target is not Einstein")
    r_const = ws.chart.target.einstein_constant
    if ws.n != 2 and r_const != 0.0:
        return _skipped(spec, None, "stated for n = 2 (or any n on scalar-flat targets)")
    worst_h = _grid_minimality(ws.chart, ws.settings)
    if worst_h > ws.settings.minimality_tol:
        return _skipped(spec, None,
                        f"requires minimal immersion (max |H| = {worst_h:.3g} on grid)")
    grid = ws.settings.grid_n

    def integrand(q):
        s = spectrum_at(ws.chart, q)
        if s.max() - s.min() > 10 * ws.settings.equal_tol:
            raise GeometryError("angles are not equal over the torus")
        c2 = float(s.mean()) ** 2
        return ws.n * r_const * (1 - c2) * c2

    lhs = _integrate(ws.chart, grid, integrand)
    return _report(spec, None, lhs=lhs, rhs=0.0, residual_abs=abs(lhs), meta={"grid": grid})


def _run_integral_n3(ws: Workspace, spec: CheckSpec):
    if ws.chart.lattice_domain is None:
        return _skipped(spec, None, "immersion domain is not a torus")
    if ws.chart.target.einstein_constant is None:
        return _skipped(spec, None, "target is not Einstein")
    if ws.n < 3:
        return _skipped(spec, None, f"needs n >= 3, immersion has n = {ws.n}")
    reason = ws.hypothesis(no_complex=True)
    if reason:
        return _skipped(spec, None, reason)
    worst_h = _grid_minimality(ws.chart, ws.settings)
    if worst_h > ws.settings.minimality_tol:
        return _skipped(spec, None,
                        f"requires minimal immersion (max |H| = {worst_h:.3g} on grid)")
    r_const = ws.chart.target.einstein_constant
    grid = ws.settings.grid_n

    def lhs_integrand(q):
        s = spectrum_at(ws.chart, q)
        c2 = float(s.mean()) ** 2
        return ws.n * r_const * (1 - c2) * c2

    def rhs_integrand(q):
        wsq = Workspace(ws.chart, q, ws.settings)
        c = float(wsq.cos.mean())
        s2 = 1 - c * c
        return (ws.n - 2) * (ws.n - 2 + 2 * c * c / s2) * float(wsq.der.grad_cos_norm2[0])

    lhs = _integrate(ws.chart, grid, lhs_integrand)
    rhs = _integrate(ws.chart, grid, rhs_integrand)
    return _report(spec, None, lhs=lhs, rhs=rhs, residual_abs=abs(lhs - rhs), meta={"grid": grid})


# --------------------------------------------------------------------------
# registry


def _mk(id, statement, sides, tol, runner, kind="pointwise"):
    return CheckSpec(id=id, statement=statement, sides=sides, tolerance=tol,
                     runner=runner, kind=kind)


REGISTRY: dict[str, CheckSpec] = {
    s.id: s
    for s in [
        _mk("ricci-reconstruction",
            "the ambient Ricci tensor is recovered from curvature contracted against "
            "the diagonalizing frame, weighted by inverse squared angle sines",
            ("Ricci by metric contraction of the stored curvature",
             "frame-weighted curvature sum with normal projection"),
            1e-6, _run_ricci_reconstruction),
        _mk("nabla-pullback",
            "the covariant derivative of the pulled-back form equals the antisymmetrised "
            "pairing of the second fundamental form with J dF",
            ("finite differences of the form field", "pointwise contraction"),
            1e-6, _run_nabla_pullback),
        _mk("torsion-lemma",
            "the transported-connection torsion acts on frame pairs with factors "
            "i(cos a - cos b) on plain pairs and i(cos a + cos b) on conjugate pairs",
            ("torsion via the connection-difference route",
             "angle-weighted second fundamental form"),
            1e-6, _run_torsion_lemma),
        _mk("grad-logsin",
            "the morphism image of the squashed-volume gradient equals a weighted trace "
            "asymmetry of the second fundamental form",
            ("finite-difference gradient through the morphism", "pointwise frame sum"),
            1e-6, _run_grad_logsin),
        _mk("codifferential",
            "delta of the pulled-back form is (n-2) J grad cos, and cos times delta of "
            "the partial isometry is (n-1) J grad cos",
            ("covariant finite differences of both tensor fields",
             "pointwise angle-gradient expressions"),
            1e-6, _run_codifferential),
        _mk("norm-split",
            "the squared covariant derivative of the form splits into angle-gradient and "
            "isometry-derivative parts at equal angles",
            ("direct covariant-derivative norm", "two-field split"),
            1e-6, _run_norm_split),
        _mk("gtilde-derivative",
            "first derivatives of frame-paired stretch entries reduce to second-"
            "fundamental-form pairings plus angle-difference connection terms",
            ("finite differences of the paired stretch field", "pointwise closed form"),
            1e-6, _run_gtilde_derivative),
        _mk("trace-difference",
            "the frame trace of the conformal connection difference is (1-n)/4 times the "
            "squashed-volume gradient",
            ("difference of two Christoffel fields", "finite-difference gradient"),
            1e-6, _run_trace_difference),
        _mk("s-term-equality",
            "two closed forms of the curvature pairing of the form agree with its direct "
            "definition",
            ("curvature action on two-forms", "diagonal and pair closed forms"),
            1e-6, _run_s_term_equality),
        _mk("s-term-equal-angle",
            "at equal angles the curvature pairing collapses to 16 cos^2 times the "
            "hermitian curvature sum",
            ("curvature action on two-forms", "equal-angle closed form"),
            1e-6, _run_s_term_equal_angle),
        _mk("weitzenbock",
            "half the Laplacian of the form's squared norm balances the Hodge term, the "
            "covariant-derivative norm and the curvature pairing",
            ("finite-difference Laplacian of the norm field",
             "independently assembled right side"),
            1e-5, _run_weitzenbock),
        _mk("isotropic-scalar",
            "the hermitian curvature trace over the frame's isotropic subspace matches "
            "the normalised sum of isotropic sectional curvatures",
            ("pairwise isotropic sectional curvatures", "hermitian trace formula"),
            1e-6, _run_isotropic_scalar),
        _mk("codiff-norm",
            "the squared codifferential of the form is (n-2)^2 times the squared angle "
            "gradient",
            ("covariant finite differences", "angle-gradient field"),
            1e-6, _run_codiff_norm),
        _mk("parallel-consequences",
            "a parallel pulled-back form forces a constant spectrum, a harmonic form, "
            "and shape operators anticommuting with it",
            ("stencil spectrum drift, codifferential, anticommutators", "zero"),
            1e-6, _run_parallel_consequences),
        _mk("delta-kappa-general",
            "the Laplacian of the log-odds angle sum equals the five-term curvature and "
            "second-fundamental-form expansion in the continued frame",
            ("finite-difference Laplacian of the kappa field", "five-term frame assembly"),
            1e-4, _run_delta_kappa_general),
        _mk("delta-kappa-equal",
            "at equal angles the Laplacian of kappa reduces to Einstein, hermitian-"
            "curvature, isometry-derivative and angle-gradient terms",
            ("finite-difference Laplacian", "equal-angle closed form"),
            1e-4, _run_delta_kappa_equal),
        _mk("delta-kappa-wolfson",
            "for one angle the Laplacian of kappa is minus twice the Einstein constant "
            "times the angle cosine",
            ("finite-difference Laplacian", "surface closed form"),
            1e-5, _run_delta_kappa_wolfson),
        _mk("delta-kappa-pluriminimal",
            "for pluriminimal immersions the Laplacian of kappa is minus twice the "
            "Einstein constant times the cosine sum",
            ("finite-difference Laplacian", "cosine-sum closed form"),
            1e-5, _run_delta_kappa_pluriminimal),
        _mk("cos2-chain",
            "n times the Laplacian of the squared cosine balances Einstein, curvature-"
            "pairing, derivative-norm and gradient terms",
            ("finite-difference Laplacian of cos^2", "assembled right side"),
            1e-5, _run_cos2_chain),
        _mk("gauss-holsec",
            "on constant-holomorphic-curvature targets the hermitian domain curvature "
            "sum is a trigonometric multiple of K minus mixed second-fundamental norms",
            ("metric-field finite-difference curvature", "Gauss-derived right side"),
            1e-6, _run_gauss_holsec),
        _mk("anticommute-criterion",
            "two sphere structures anticommute exactly when their sphere points are "
            "orthogonal; the anticommutator is minus twice the inner product",
            ("matrix anticommutator", "sphere inner product"),
            1e-12, _run_anticommute),
        _mk("angle-between-structures",
            "the plane built from one sphere structure meets any viewing structure with "
            "equal angles whose cosine is the absolute sphere inner product",
            ("polar spectrum of the viewed form", "sphere inner product"),
            1e-10, _run_angle_between),
        _mk("complex-plane-angles",
            "the pulled-back base form of the quaternionic plane equals cos(nu) times "
            "the plane's own complex structure",
            ("pullback operator", "scaled structure restriction"),
            1e-10, _run_complex_plane_angles),
        _mk("normal-bundle-angles",
            "the ambient form restricted to the normal bundle has the same angle "
            "spectrum, and the morphism intertwines the two structures with a sign",
            ("normal-bundle polar spectrum", "tangent spectrum"),
            1e-8, _run_normal_bundle_angles),
        _mk("integral-weitzenbock",
            "over a torus domain the integral of the squared codifferential balances the "
            "integrals of the derivative norm and the curvature pairing",
            ("codifferential integral", "derivative-norm plus curvature integral"),
            1e-4, _run_integral_weitzenbock, kind="quadrature"),
        _mk("integral-n2",
            "for minimal equal-angle tori the Einstein-weighted trigonometric integral "
            "vanishes",
            ("quadrature of the weighted integrand", "zero"),
            1e-8, _run_integral_n2, kind="quadrature"),
        _mk("integral-n3",
            "for n >= 3 the Einstein-weighted integral matches the cotangent-weighted "
            "angle-gradient integral",
            ("left-side quadrature", "right-side quadrature"),
            1e-6, _run_integral_n3, kind="quadrature"),
    ]
}


def _chart_with_settings(chart: ImmersionChart, settings: CheckSettings) -> ImmersionChart:
    prm = chart.fd_params
    if prm.step == settings.fd_step and prm.order == settings.fd_order:
        return chart
    return replace(chart, fd_params=FDParams(step=settings.fd_step, order=settings.fd_order,
                                             step_third=prm.step_third))


def run_check(check_id: str, chart: ImmersionChart, point,
              settings: CheckSettings | None = None) -> IdentityReport:
    """Run one registry check for an immersion at a point (quadrature checks ignore it)."""
    if check_id not in REGISTRY:
        raise ConfigError(f"unknown check id {check_id!r}")
    spec = REGISTRY[check_id]
    settings = settings or CheckSettings()
    chart = _chart_with_settings(chart, settings)
    ws = Workspace(chart, point, settings)
    try:
        return spec.runner(ws, spec)
    except AngleCrossingError as exc:
        return _skipped(spec, point, f"angle branches collide in stencil: {exc}")
    except GeometryError as exc:
        return _skipped(spec, point, str(exc))


def select_checks(pattern: str) -> list[str]:
    """Resolve a glob over check ids, preserving registry order."""
    ids = [cid for cid in REGISTRY if fnmatch.fnmatch(cid, pattern)]
    if not ids:
        raise ConfigError(f"no checks match pattern {pattern!r}")
    return ids
