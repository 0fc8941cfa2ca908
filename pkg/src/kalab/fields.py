"""Derivative fields of angle quantities.

Scalar fields (angle cosines, their squares, the log-odds sum) are
differentiated by re-running the pointwise angle extraction on stencil
points, with eigenvalue tracking by sorted order and a hard rejection when
angle branches collide inside the stencil.  Tensor fields (the pulled-back
form, the partial isometry, the squashed metric) are canonical, so their
covariant derivatives need no frame choices, only the Christoffel field of
the induced metric.

Frame-dependent derivative coefficients use a smooth local frame built by
continuing the deterministic diagonalizing frame of the base point: at each
stencil point the base columns are projected against the local partial
isometry and re-orthonormalised, which keeps the pairing structure without
re-diagonalising.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fd
from .angles import (
    AngleData,
    DiagonalizingFrame,
    EQUAL_ANGLE_TOL,
    angle_data,
    build_frame,
    pullback_form,
)
from .errors import AngleCrossingError, GeometryError
from .immersion import ImmersionChart, domain_christoffel, first_fundamental, induced_metric
from .tensorcore import polar_decompose_skew, sorted_angle_spectrum


# --------------------------------------------------------------------------
# scalar spectrum fields with crossing guard


def spectrum_at(chart: ImmersionChart, q) -> np.ndarray:
    pgq = first_fundamental(chart, q)
    _, op = pullback_form(chart, q, pgq)
    return sorted_angle_spectrum(polar_decompose_skew(op))


@dataclass(frozen=True)
class ClusterStructure:
    slices: tuple            # index ranges into the sorted spectrum
    values: np.ndarray       # cluster means at the base point
    min_gap: float           # smallest inter-cluster gap at the base point

    @property
    def count(self) -> int:
        return len(self.slices)


def cluster_structure(spectrum: np.ndarray, tol: float = EQUAL_ANGLE_TOL) -> ClusterStructure:
    s = np.asarray(spectrum, float)
    scale = 1.0 + s.max(initial=0.0)
    slices = []
    start = 0
    for i in range(1, len(s) + 1):
        if i == len(s) or s[start] - s[i] > tol * scale:
            slices.append((start, i))
            start = i
    values = np.array([s[a:b].mean() for a, b in slices])
    gaps = [values[i] - values[i + 1] for i in range(len(values) - 1)]
    return ClusterStructure(slices=tuple(slices), values=values, min_gap=min(gaps) if gaps else np.inf)


def guarded_cluster_field(chart: ImmersionChart, clusters: ClusterStructure,
                          tol: float = EQUAL_ANGLE_TOL) -> Callable:
    """Per-cluster mean cosine field; raises when the stencil crosses branches."""

    def field(q):
        s = spectrum_at(chart, q)
        means = np.array([s[a:b].mean() for a, b in clusters.slices])
        for idx, (a, b) in enumerate(clusters.slices):
            if b - a > 1 and s[a] - s[b - 1] > max(0.25 * clusters.min_gap, 10 * tol):
                raise AngleCrossingError(
                    f"cluster {idx} split inside stencil at {np.asarray(q).tolist()}",
                    indices=tuple(range(a, b)),
                )
        for idx in range(len(means) - 1):
            if means[idx] - means[idx + 1] < 0.5 * clusters.min_gap:
                raise AngleCrossingError(
                    f"clusters {idx} and {idx + 1} collide inside stencil",
                    indices=(clusters.slices[idx][1] - 1, clusters.slices[idx + 1][0]),
                )
        return means

    return field


# --------------------------------------------------------------------------
# covariant derivatives of canonical tensor fields


def covariant_d_2form(chart: ImmersionChart, p, form_field: Callable,
                      gam: np.ndarray | None = None) -> np.ndarray:
    """D[k, i, j] = (nabla_k xi)_{ij} for a two-form field in chart coordinates."""
    prm = chart.fd_params
    dn = chart.domain_dim
    if gam is None:
        gam = domain_christoffel(chart, p)
    xi = np.asarray(form_field(p), float)
    dxi = np.stack([fd.partial(form_field, p, k, prm.step, prm.order) for k in range(dn)])
    # (nabla_k xi)_{ij} = d_k xi_ij - Gam^s_{ki} xi_sj - Gam^s_{kj} xi_is
    t1 = np.einsum("ski,sj->kij", gam, xi)
    t2 = np.einsum("skj,is->kij", gam, xi)
    return dxi - t1 - t2


def covariant_d_operator(chart: ImmersionChart, p, op_field: Callable,
                         gam: np.ndarray | None = None) -> np.ndarray:
    """D[k, a, b] = (nabla_k B)^a_b for an operator-valued field."""
    prm = chart.fd_params
    dn = chart.domain_dim
    if gam is None:
        gam = domain_christoffel(chart, p)
    b = np.asarray(op_field(p), float)
    db = np.stack([fd.partial(op_field, p, k, prm.step, prm.order) for k in range(dn)])
    return db + np.einsum("aks,sb->kab", gam, b) - np.einsum("skb,as->kab", gam, b)


def scalar_derivatives(chart: ImmersionChart, p, f: Callable,
                       gam: np.ndarray | None = None, g: np.ndarray | None = None):
    """(value, partials, gradient vector, |grad|^2, laplacian) of a scalar field."""
    prm = chart.fd_params
    p = np.asarray(p, float)
    if g is None:
        g = induced_metric(chart, p)
    if gam is None:
        gam = domain_christoffel(chart, p)
    gi = np.linalg.inv(g)
    val = np.asarray(f(p), float)
    parts = fd.gradient(f, p, prm.step, prm.order)
    hess = np.stack(
        [
            np.stack(
                [fd.second_partial(f, p, i, j, prm.step, prm.order) for j in range(len(p))]
            )
            for i in range(len(p))
        ]
    )
    hess = 0.5 * (hess + np.swapaxes(hess, 0, 1))
    grad = np.einsum("ij,j...->i...", gi, parts)
    norm2 = np.einsum("i...,ij,j...->...", parts, gi, parts)
    lap = np.einsum("ij,ij...->...", gi, hess) - np.einsum(
        "ij,kij,k...->...", gi, gam, parts
    )
    return val, parts, grad, norm2, lap


# --------------------------------------------------------------------------
# canonical fields


def pullback_2form_field(chart: ImmersionChart) -> Callable:
    def xi(q):
        pgq = first_fundamental(chart, q)
        form, _ = pullback_form(chart, q, pgq)
        return form

    return xi


def jomega_field(chart: ImmersionChart) -> Callable:
    def jom(q):
        pgq = first_fundamental(chart, q)
        _, op = pullback_form(chart, q, pgq)
        return polar_decompose_skew(op).jomega

    return jom


def gtilde_form_field(chart: ImmersionChart) -> Callable:
    def gt(q):
        pgq = first_fundamental(chart, q)
        _, op = pullback_form(chart, q, pgq)
        parts = polar_decompose_skew(op)
        m = pgq.g_M.components @ parts.gtilde
        return 0.5 * (m + m.T)

    return gt


def codifferential_2form(chart: ImmersionChart, p, form_field: Callable | None = None,
                         gam: np.ndarray | None = None, g: np.ndarray | None = None) -> np.ndarray:
    """(delta xi)_j = -g^{ki} (nabla_k xi)_{ij}, as one-form components."""
    if form_field is None:
        form_field = pullback_2form_field(chart)
    if g is None:
        g = induced_metric(chart, p)
    d = covariant_d_2form(chart, p, form_field, gam)
    return -np.einsum("ki,kij->j", np.linalg.inv(g), d)


def codifferential_operator(chart: ImmersionChart, p, op_field: Callable | None = None,
                            gam: np.ndarray | None = None, g: np.ndarray | None = None) -> np.ndarray:
    """delta of a vector-valued one-form: -g^{ki} (nabla_k B)(e_i), a vector."""
    if op_field is None:
        op_field = jomega_field(chart)
    if g is None:
        g = induced_metric(chart, p)
    d = covariant_d_operator(chart, p, op_field, gam)
    return -np.einsum("ki,kai->a", np.linalg.inv(g), d)


def exterior_d_2form(chart: ImmersionChart, p, form_field: Callable) -> np.ndarray:
    """d xi as plain antisymmetrised partials (connection terms cancel)."""
    prm = chart.fd_params
    dn = chart.domain_dim
    dxi = np.stack([fd.partial(form_field, p, k, prm.step, prm.order) for k in range(dn)])
    # (d xi)_{ijk} = d_i xi_{jk} - d_j xi_{ik} + d_k xi_{ij}
    return dxi - np.einsum("jik->ijk", dxi) + np.einsum("kij->ijk", dxi)


def hodge_laplacian_2form(chart: ImmersionChart, p, form_field: Callable | None = None) -> np.ndarray:
    """(d delta + delta d) xi for the pulled-back form; the d-part is asserted closed.

    Returns the two-form d(delta xi) computed as the curl of the codifferential
    field; callers check closedness separately via ``exterior_d_2form``.
    """
    if form_field is None:
        form_field = pullback_2form_field(chart)
    prm = chart.fd_params
    dn = chart.domain_dim

    def delta_field(q):
        return codifferential_2form(chart, q, form_field)

    dalpha = np.stack([fd.partial(delta_field, p, k, prm.step, prm.order) for k in range(dn)])
    return dalpha - dalpha.T


# --------------------------------------------------------------------------
# frame fields and their connection coefficients


class FrameField:
    """Smooth continuation of a base-point diagonalizing frame."""

    def __init__(self, chart: ImmersionChart, base: DiagonalizingFrame, base_point):
        self.chart = chart
        self.base = base
        self.base_point = np.asarray(base_point, float)

    def __call__(self, q) -> np.ndarray:
        pgq = first_fundamental(self.chart, q)
        _, op = pullback_form(self.chart, q, pgq)
        parts = polar_decompose_skew(op)
        if parts.rank != self.base.rank:
            raise AngleCrossingError(
                f"rank changed from {self.base.rank} to {parts.rank} inside stencil",
                indices=(),
            )
        cont = build_frame(pgq, parts, self.base.cos_spectrum, seed=self.base.frame_matrix)
        return cont.frame_matrix


@dataclass(frozen=True)
class FrameConnection:
    """Covariant derivatives of the continued frame at the base point.

    ``d1[b, m]`` holds the derivative of Z_m along Z_b and ``d2[b, m]`` along
    conj(Z_b), as complex coordinate vectors; conjugate combinations follow
    from the realness of the connection.
    """

    frame: DiagonalizingFrame
    nabla_real: np.ndarray   # [i, :, a] = nabla_{d/dx_i} E_a
    d1: np.ndarray           # (n, n, 2n) complex
    d2: np.ndarray           # (n, n, 2n) complex

    def pair(self, vec, rho: int, bar: bool = False):
        z = self.frame.z_vectors[rho]
        target = z.conj().array if bar else z.array
        return vec @ self.frame.metric.components @ target


def frame_connection(chart: ImmersionChart, p, frame: DiagonalizingFrame,
                     gam: np.ndarray | None = None) -> FrameConnection:
    p = np.asarray(p, float)
    prm = chart.fd_params
    dn = chart.domain_dim
    if gam is None:
        gam = domain_christoffel(chart, p)
    field = FrameField(chart, frame, p)
    de = np.stack([fd.partial(field, p, i, prm.step, prm.order) for i in range(dn)])
    nabla = de + np.einsum("kis,sa->ika", gam, frame.frame_matrix)
    zc = frame.z_matrix  # (2n, n)
    # nabla over complex columns: nz[i, :, m] = nabla_{d/dx_i} Z_m
    nz = 0.5 * (nabla[:, :, 0::2] - 1j * nabla[:, :, 1::2])
    d1 = np.einsum("ib,ikm->bmk", zc, nz)
    d2 = np.einsum("ib,ikm->bmk", np.conj(zc), nz)
    return FrameConnection(frame=frame, nabla_real=nabla, d1=d1, d2=d2)


# --------------------------------------------------------------------------
# the full derivative record


def _onb_components_3(d3: np.ndarray, e: np.ndarray) -> np.ndarray:
    return np.einsum("kij,kc,ia,jb->cab", d3, e, e, e)


@dataclass(frozen=True)
class AngleDerivatives:
    """First and second derivative data of all angle fields at one point."""

    clusters: ClusterStructure
    cos_values: np.ndarray
    grad_cos: np.ndarray            # (clusters, 2n) raised gradients
    grad_cos_norm2: np.ndarray
    laplace_cos: np.ndarray
    laplace_cos2: np.ndarray
    kappa: float
    grad_kappa: np.ndarray
    grad_kappa_norm2: float
    laplace_kappa: float
    nabla_pullback_norm2_form: float
    nabla_pullback_norm2_op: float
    nabla_jomega_norm2_op: float
    codiff_pullback: np.ndarray     # one-form components
    codiff_pullback_vector: np.ndarray
    codiff_jomega: np.ndarray       # vector components
    closedness_residual: float      # max |d of the pulled-back form|
    hodge_laplacian_pullback: np.ndarray


def angle_field_derivatives(chart: ImmersionChart, p,
                            data: AngleData | None = None) -> AngleDerivatives:
    """Differentiate every angle field at p.

    Requires the point to stay away from complex directions (the log-odds sum
    must be finite on the whole stencil) and rejects stencils in which angle
    branches collide or a zero cluster is crossed transversally.
    """
    p = np.asarray(p, float)
    if data is None:
        data = angle_data(chart, p)
    if not np.isfinite(data.kappa):
        raise GeometryError("derivative fields need a stencil free of complex directions")
    clusters = cluster_structure(data.cos_spectrum)
    cfield = guarded_cluster_field(chart, clusters)

    g = data.point.g_M.components
    gam = data.point.domain_christoffel

    # a zero cluster must stay a zero cluster across the stencil
    zero_mask = clusters.values < EQUAL_ANGLE_TOL
    if zero_mask.any():
        prm = chart.fd_params
        for i in range(chart.domain_dim):
            for s in (-2, -1, 1, 2):
                q = p.copy()
                q[i] += s * fd.step_for(p, i, prm.step)
                vals = cfield(q)
                if np.any(vals[zero_mask] > 100 * EQUAL_ANGLE_TOL):
                    raise AngleCrossingError(
                        "isotropic cluster crosses zero transversally inside stencil",
                        indices=tuple(np.nonzero(zero_mask)[0]),
                    )

    _, _, grad_c, norm2_c, lap_c = scalar_derivatives(chart, p, cfield, gam, g)
    grad_c = np.asarray(grad_c).T if grad_c.ndim > 1 else grad_c[None, :]
    _, _, _, _, lap_c2 = scalar_derivatives(chart, p, lambda q: cfield(q) ** 2, gam, g)

    def kappa_scalar(q):
        vals = cfield(q)
        expanded = np.concatenate(
            [np.full(b - a, v) for (a, b), v in zip(clusters.slices, vals)]
        )
        return np.sum(np.log((1 + expanded) / (1 - expanded)))

    _, _, grad_k, norm2_k, lap_k = scalar_derivatives(chart, p, kappa_scalar, gam, g)

    xi_field = pullback_2form_field(chart)
    dxi = covariant_d_2form(chart, p, xi_field, gam)
    e = data.point.g_M.orthonormal_basis
    dxi_on = _onb_components_3(dxi, e)
    form_norm2 = float(np.einsum("cab,cab->", dxi_on, dxi_on)) / 2.0

    jom_field = jomega_field(chart)
    djom = covariant_d_operator(chart, p, jom_field, gam)
    # operator square norm: Frobenius of each directional derivative, both
    # expressed in the orthonormal basis, summed over that basis
    einv = data.point.g_M.cholesky.T
    dj_dir = np.einsum("kc,kab->cab", e, djom)
    djom_on = np.einsum("xa,cab,by->cxy", einv, dj_dir, e)
    jom_norm2 = float(np.einsum("cab,cab->", djom_on, djom_on))

    delta_xi = -np.einsum("ki,kij->j", np.linalg.inv(g), dxi)
    delta_jom = -np.einsum("ki,kai->a", np.linalg.inv(g), djom)
    d_xi = exterior_d_2form(chart, p, xi_field)
    lap_xi = hodge_laplacian_2form(chart, p, xi_field)

    return AngleDerivatives(
        clusters=clusters,
        cos_values=clusters.values,
        grad_cos=grad_c,
        grad_cos_norm2=np.atleast_1d(norm2_c),
        laplace_cos=np.atleast_1d(lap_c),
        laplace_cos2=np.atleast_1d(lap_c2),
        kappa=data.kappa,
        grad_kappa=grad_k,
        grad_kappa_norm2=float(norm2_k),
        laplace_kappa=float(lap_k),
        nabla_pullback_norm2_form=form_norm2,
        nabla_pullback_norm2_op=2.0 * form_norm2,
        nabla_jomega_norm2_op=jom_norm2,
        codiff_pullback=delta_xi,
        codiff_pullback_vector=np.linalg.inv(g) @ delta_xi,
        codiff_jomega=delta_jom,
        closedness_residual=float(np.abs(d_xi).max()),
        hodge_laplacian_pullback=lap_xi,
    )
