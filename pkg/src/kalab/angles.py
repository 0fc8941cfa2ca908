"""Angle structure of an immersion at a point.

From the pulled-back two-form this module extracts the polar factorisation,
the descending cosine spectrum and the associated scalars (the log-odds sum
``kappa``, the squashed metric), classifies the point, builds a deterministic
diagonalizing frame together with its complexification and the extended
complex structure on the kernel, and constructs the tangent-to-normal bundle
morphism with its torsion and connection-difference tensors.

Frame determinism: within each eigenvalue cluster of the stretch the frame
vectors are produced by projecting the canonical domain basis vectors in
index order and orthonormalising, with the partner vector given by the
partial isometry on nonzero clusters and by consecutive projected vectors on
the kernel.  Any diagonalizing frame would do mathematically; a fixed recipe
makes golden tests reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import fd
from .errors import GeometryError
from .immersion import (
    ImmersionChart,
    PointGeometry,
    evaluate_jets,
    first_fundamental,
    second_fundamental,
)
from .tensorcore import (
    ComplexVector,
    MetricTensor,
    PolarParts,
    SkewOperator,
    complexify_frame,
    operator_to_two_form,
    polar_decompose_skew,
    sorted_angle_spectrum,
    two_form_to_operator,
)

EQUAL_ANGLE_TOL = 1e-7
CLASSIFY_TOL = 1e-7
SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class Classification:
    kind: str                      # complex | lagrangian | equal-angles | generic
    theta: Optional[float] = None  # common angle for equal-angles points
    flags: tuple = ()              # per-direction complex/lagrangian/generic

    def __str__(self):
        if self.kind == "equal-angles" and self.theta is not None:
            return f"equal-angles(theta={self.theta:.6g})"
        return self.kind


def classify_spectrum(cos_spectrum: np.ndarray, tol: float = CLASSIFY_TOL) -> Classification:
    c = np.asarray(cos_spectrum, float)
    flags = tuple(
        "complex" if v > 1 - tol else ("lagrangian" if v < tol else "generic") for v in c
    )
    if all(f == "complex" for f in flags):
        return Classification("complex", theta=0.0, flags=flags)
    if all(f == "lagrangian" for f in flags):
        return Classification("lagrangian", theta=math.pi / 2, flags=flags)
    if c.max() - c.min() < tol:
        return Classification("equal-angles", theta=float(np.arccos(np.clip(c.mean(), 0, 1))), flags=flags)
    return Classification("generic", flags=flags)


def pullback_form(chart: ImmersionChart, p, pg: PointGeometry | None = None):
    """The pulled-back two-form at p and its skew operator against the induced metric."""
    if pg is None:
        pg = first_fundamental(chart, p)
    j = pg.target_complex_structure
    form = pg.dF.T @ j.T @ pg.g_target @ pg.dF
    form = 0.5 * (form - form.T)
    return form, two_form_to_operator(form, pg.g_M)


def kappa_from_spectrum(cos_spectrum: np.ndarray, tol: float = CLASSIFY_TOL) -> float:
    """Sum of log((1+c)/(1-c)); infinite when any direction is complex."""
    total = 0.0
    for c in np.asarray(cos_spectrum, float):
        if c > 1 - tol:
            return math.inf
        total += math.log((1.0 + c) / (1.0 - c))
    return total


@dataclass(frozen=True)
class AngleData:
    """Everything the polar factorisation of the pulled-back form yields at a point."""

    point: PointGeometry
    pullback_2form: np.ndarray
    pullback_operator: SkewOperator
    polar: PolarParts
    cos_spectrum: np.ndarray
    kappa: float
    gtilde_2tensor: np.ndarray
    hat_metric: np.ndarray
    classification: Classification

    @cached_property
    def kappa_from_determinants(self) -> float:
        """Independent route: half the log-ratio of det(g +/- stretch)."""
        g = self.point.g_M.components
        plus = np.linalg.det(g + self.gtilde_2tensor)
        minus = np.linalg.det(g - self.gtilde_2tensor)
        if minus <= 0:
            return math.inf
        return 0.5 * math.log(plus / minus)

    @property
    def form_norm_squared(self) -> float:
        """Hilbert-Schmidt square norm as a two-form, sum of squared cosines."""
        return float(np.sum(self.cos_spectrum ** 2))

    @property
    def operator_norm_squared(self) -> float:
        """Square norm as an operator: twice the two-form value."""
        return 2.0 * self.form_norm_squared


def angle_data(chart: ImmersionChart, p, pg: PointGeometry | None = None,
               classify_tol: float = CLASSIFY_TOL) -> AngleData:
    if pg is None:
        pg = first_fundamental(chart, p)
    form, op = pullback_form(chart, p, pg)
    parts = polar_decompose_skew(op)
    spectrum = sorted_angle_spectrum(parts)
    gt_form = operator_to_two_form(parts.gtilde, pg.g_M)
    gt_form = 0.5 * (gt_form + gt_form.T)
    a = op.components
    hat = pg.g_M.components - a.T @ pg.g_M.components @ a
    return AngleData(
        point=pg,
        pullback_2form=form,
        pullback_operator=op,
        polar=parts,
        cos_spectrum=spectrum,
        kappa=kappa_from_spectrum(spectrum, classify_tol),
        gtilde_2tensor=gt_form,
        hat_metric=0.5 * (hat + hat.T),
        classification=classify_spectrum(spectrum, classify_tol),
    )


def classify_point(chart: ImmersionChart, p, tol: float = CLASSIFY_TOL) -> Classification:
    return angle_data(chart, p, classify_tol=tol).classification


# --------------------------------------------------------------------------
# diagonalizing frames


@dataclass(frozen=True)
class DiagonalizingFrame:
    """A paired orthonormal frame diagonalizing the pulled-back form at its base point.

    Columns of ``frame_matrix`` are ordered X_1, Y_1, ..., X_n, Y_n by
    descending angle cosine; on nonzero clusters Y = (partial isometry) X, on
    the kernel the pairs are consecutive projected basis vectors and
    ``jtilde`` extends the partial isometry by the kernel pairing.
    """

    frame_matrix: np.ndarray
    cos_spectrum: np.ndarray
    jtilde: np.ndarray
    metric: MetricTensor
    rank: int
    kernel_flags: np.ndarray  # True where the pair spans kernel directions

    @property
    def n_pairs(self) -> int:
        return self.frame_matrix.shape[1] // 2

    @property
    def x_vectors(self) -> np.ndarray:
        return self.frame_matrix[:, 0::2]

    @property
    def y_vectors(self) -> np.ndarray:
        return self.frame_matrix[:, 1::2]

    @cached_property
    def z_vectors(self) -> list[ComplexVector]:
        return complexify_frame(self.frame_matrix, self.metric)

    @cached_property
    def z_matrix(self) -> np.ndarray:
        """Columns Z_1 ... Z_n as complex arrays."""
        return np.stack([z.array for z in self.z_vectors], axis=1)


def _cluster_slices(values: np.ndarray, tol: float):
    """Split a descending value list into clusters of nearly equal entries."""
    slices = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[start] - values[i] > tol:
            slices.append(slice(start, i))
            start = i
    return slices


def _project_and_normalise(v, g: MetricTensor, chosen, min_norm=1e-6):
    for w in chosen:
        v = v - g.inner(v, w) * w
    nrm = g.norm(v)
    if nrm < min_norm:
        return None
    return v / nrm


def build_frame(pg: PointGeometry, parts: PolarParts, spectrum: np.ndarray,
                seed: np.ndarray | None = None,
                cluster_tol: float = EQUAL_ANGLE_TOL) -> DiagonalizingFrame:
    """Deterministic diagonalizing frame at the base point, or its smooth
    continuation at a nearby point when a seed frame is supplied.

    Without a seed, cluster eigenspaces of the stretch are filled by
    projecting canonical basis vectors in index order.  With a seed (the
    frame computed at a nearby base point) the same pairing recipe is applied
    to the seed columns against the local partial isometry and metric, which
    continues the frame smoothly without re-diagonalising; the result is then
    orthonormal for the local metric but only diagonalises the form at the
    original base point.
    """
    g = pg.g_M
    d = g.dim
    n = d // 2
    jom = parts.jomega
    perp = parts.complement_projector
    ker = np.eye(d) - perp
    kernel_flags = spectrum < max(1e-12, 1e-9 * (spectrum.max(initial=0.0) + 1.0))

    if seed is None:
        # per-cluster eigen projectors, needed only at the base point
        e = g.orthonormal_basis
        einv = g.cholesky.T
        a_on = einv @ parts.gtilde @ e
        a_on = 0.5 * (a_on + a_on.T)
        evals, vecs = np.linalg.eigh(a_on)
        order = np.argsort(evals)[::-1]
        evals, vecs = evals[order], vecs[:, order]
        scale = 1.0 + evals.max(initial=0.0)
        projectors = []
        for sl in _cluster_slices(spectrum, cluster_tol * scale):
            members = [i for i, v in enumerate(evals) if abs(v - spectrum[sl][0]) <= 10 * cluster_tol * scale]
            vsub = vecs[:, members]
            projectors.append((sl, e @ vsub @ vsub.T @ einv))
        candidates = np.eye(d)
    else:
        projectors = None
        candidates = seed

    cols: list[np.ndarray] = []
    flags: list[bool] = []

    if seed is None:
        for sl, proj in projectors:
            pairs_needed = sl.stop - sl.start
            is_kernel = bool(kernel_flags[sl][0])
            made = 0
            idx = 0
            while made < pairs_needed and idx < d:
                v = _project_and_normalise(proj @ candidates[:, idx], g, cols)
                idx += 1
                if v is None:
                    continue
                if is_kernel:
                    w = None
                    while w is None and idx < d:
                        w = _project_and_normalise(proj @ candidates[:, idx], g, cols + [v])
                        idx += 1
                    if w is None:
                        raise GeometryError("failed to pair kernel directions in the frame")
                else:
                    w = jom @ v
                cols += [v, w]
                flags.append(is_kernel)
                made += 1
            if made < pairs_needed:
                raise GeometryError("failed to orthonormalise within an eigenvalue cluster")
    else:
        for alpha in range(n):
            is_kernel = bool(kernel_flags[alpha])
            proj = ker if is_kernel else perp
            v = _project_and_normalise(proj @ candidates[:, 2 * alpha], g, cols)
            if v is None:
                raise GeometryError("frame continuation lost a direction")
            if is_kernel:
                w = _project_and_normalise(proj @ candidates[:, 2 * alpha + 1], g, cols + [v])
                if w is None:
                    raise GeometryError("frame continuation lost a kernel partner")
            else:
                w = jom @ v
            cols += [v, w]
            flags.append(is_kernel)

    frame = np.stack(cols, axis=1)
    jprime = np.zeros((d, d))
    for alpha, is_kernel in enumerate(flags):
        if is_kernel:
            x, y = frame[:, 2 * alpha], frame[:, 2 * alpha + 1]
            gx, gy = g.components @ x, g.components @ y
            jprime += np.outer(y, gx) - np.outer(x, gy)
    return DiagonalizingFrame(
        frame_matrix=frame,
        cos_spectrum=spectrum,
        jtilde=jom + jprime,
        metric=g,
        rank=parts.rank,
        kernel_flags=np.asarray(flags, bool),
    )


def diagonalizing_frame(chart: ImmersionChart, p, data: AngleData | None = None) -> DiagonalizingFrame:
    if data is None:
        data = angle_data(chart, p)
    return build_frame(data.point, data.polar, data.cos_spectrum)


# --------------------------------------------------------------------------
# the tangent-to-normal morphism


@dataclass(frozen=True)
class ConnectionComparison:
    """The bundle morphism with its squashed metric, torsion and connection difference."""

    point: PointGeometry
    phi: np.ndarray                     # (2m, 2n), column i = image of d/dx_i
    hat_metric: np.ndarray
    isometry_residual: float
    singular: bool
    torsion: Optional[np.ndarray] = None        # T'[k, i, j], antisymmetric in (i, j)
    s_prime: Optional[np.ndarray] = None        # S'[k, i, j]
    hat_christoffel: Optional[np.ndarray] = None
    torsion_consistency: Optional[float] = None  # |T' - antisym(S')| from the two routes
    trace_identity_residual: Optional[float] = None


def phi_matrix(pg: PointGeometry, op: SkewOperator) -> np.ndarray:
    """Phi = J dF - dF A; columns are automatically normal to the image."""
    j = pg.target_complex_structure
    return j @ pg.dF - pg.dF @ op.components


def phi_and_hat(chart: ImmersionChart, p, data: AngleData | None = None,
                singular_tol: float = SINGULAR_TOL) -> ConnectionComparison:
    """The morphism and squashed metric, flagged singular at complex directions."""
    if data is None:
        data = angle_data(chart, p)
    pg = data.point
    phi = phi_matrix(pg, data.pullback_operator)
    hat = data.hat_metric
    gram = phi.T @ pg.g_target @ phi
    residual = float(np.abs(gram - hat).max())
    singular = bool(data.cos_spectrum.max(initial=0.0) >= 1.0 - singular_tol)
    return ConnectionComparison(
        point=pg,
        phi=phi,
        hat_metric=hat,
        isometry_residual=residual,
        singular=singular,
    )


def _phi_field(chart: ImmersionChart):
    def phi_at(q):
        pgq = first_fundamental(chart, q)
        _, op = pullback_form(chart, q, pgq)
        return phi_matrix(pgq, op)

    return phi_at


def _hat_field(chart: ImmersionChart):
    def hat_at(q):
        pgq = first_fundamental(chart, q)
        _, op = pullback_form(chart, q, pgq)
        a = op.components
        h = pgq.g_M.components - a.T @ pgq.g_M.components @ a
        return 0.5 * (h + h.T)

    return hat_at


def torsion_and_difference(chart: ImmersionChart, p, data: AngleData | None = None) -> ConnectionComparison:
    """Torsion and connection-difference tensors of the pulled-back connection.

    The torsion comes from the closed form in the second fundamental form,
        Phi(T'(X, Y)) = -II(X, AY) + II(Y, AX),
    while S' subtracts the Christoffel field of the squashed metric from the
    connection transported through the morphism; their antisymmetrised
    difference is reported as a consistency residual, and so is the trace
    identity linking S' and T'.
    """
    if data is None:
        data = angle_data(chart, p)
    if data.classification.kind == "complex" or data.cos_spectrum.max(initial=0.0) >= 1.0 - SINGULAR_TOL:
        raise GeometryError("torsion needs an invertible morphism; complex direction present")
    pg = data.point
    base = phi_and_hat(chart, p, data)
    phi = base.phi
    gN = pg.g_target
    hat = MetricTensor(base.hat_metric)
    phi_pinv = hat.inverse @ phi.T @ gN     # left inverse of phi on the normal bundle

    sf = second_fundamental(chart, p, pg)
    a = data.pullback_operator.components
    ii = sf.nabla_dF
    # Phi(T'(e_i, e_j)) = -II(e_i, A e_j) + II(e_j, A e_i)
    ii_a = np.einsum("aik,kj->aij", ii, a)
    phi_torsion = -ii_a + ii_a.transpose(0, 2, 1)
    torsion = np.einsum("ka,aij->kij", phi_pinv, phi_torsion)

    # transported connection: Gamma'[k, i, j] from the normal derivative of the phi field
    prm = chart.fd_params
    dn = chart.domain_dim
    phi_field = _phi_field(chart)
    dphi = np.stack([fd.partial(phi_field, pg.p, i, prm.step, prm.order) for i in range(dn)])
    gam_n = chart.target.christoffel(pg.target_point)
    nabla_phi = dphi + np.einsum("abc,bi,cj->iaj", gam_n, pg.dF, phi)
    nabla_perp = np.einsum("ab,ibj->iaj", pg.normal_projector, nabla_phi)
    gamma_prime = np.einsum("ka,iaj->kij", phi_pinv, nabla_perp)

    hat_field = _hat_field(chart)
    dhat = np.stack([fd.partial(hat_field, pg.p, i, prm.step, prm.order) for i in range(dn)])
    hi = hat.inverse
    t = dhat.transpose(1, 0, 2) + dhat.transpose(2, 1, 0) - dhat
    hat_gamma = 0.5 * np.einsum("ae,ebc->abc", hi, t)

    s_prime = gamma_prime - hat_gamma
    torsion_from_s = s_prime - s_prime.transpose(0, 2, 1)
    consistency = float(np.abs(torsion_from_s - torsion).max())

    # trace identity: sum_i hat(S'(e_i, e_i), X) + sum_i hat(T'(e_i, X), e_i) = 0
    e_hat = hat.orthonormal_basis
    lhs = np.einsum("kij,ia,ja,kx->x", s_prime, e_hat, e_hat, hat.components)
    rhs = np.einsum("kix,ia,kl,la->x", torsion, e_hat, hat.components, e_hat)
    trace_residual = float(np.abs(lhs + rhs).max())

    return ConnectionComparison(
        point=pg,
        phi=phi,
        hat_metric=base.hat_metric,
        isometry_residual=base.isometry_residual,
        singular=base.singular,
        torsion=torsion,
        s_prime=s_prime,
        hat_christoffel=hat_gamma,
        torsion_consistency=consistency,
        trace_identity_residual=trace_residual,
    )


# --------------------------------------------------------------------------
# the form restricted to the normal bundle


def normal_bundle_frame(pg: PointGeometry) -> np.ndarray:
    """Deterministic orthonormal basis of the normal space, as ambient columns."""
    proj = pg.normal_projector
    dim_n = proj.shape[0] - pg.dF.shape[1]
    g = pg.g_target
    cols: list[np.ndarray] = []
    for i in range(proj.shape[0]):
        v = proj @ np.eye(proj.shape[0])[:, i]
        for w in cols:
            v = v - (v @ g @ w) * w
        nrm = math.sqrt(max(v @ g @ v, 0.0))
        if nrm > 1e-8:
            cols.append(v / nrm)
        if len(cols) == dim_n:
            break
    if len(cols) != dim_n:
        raise GeometryError("failed to build an orthonormal normal frame")
    return np.stack(cols, axis=1)


def normal_bundle_angles(pg: PointGeometry):
    """Angle spectrum of the ambient form restricted to the normal bundle.

    Returns the descending cosine spectrum and the complex structure coming
    from the polar factorisation of the restricted form, as an operator on
    ambient vectors (zero on the tangent part).
    """
    basis = normal_bundle_frame(pg)
    j = pg.target_complex_structure
    w = basis.T @ j.T @ pg.g_target @ basis
    w = 0.5 * (w - w.T)
    g_id = MetricTensor(np.eye(basis.shape[1]))
    parts = polar_decompose_skew(two_form_to_operator(w, g_id))
    spectrum = sorted_angle_spectrum(parts)
    j_nm_ambient = basis @ parts.jomega @ basis.T @ pg.g_target
    return spectrum, j_nm_ambient, basis
