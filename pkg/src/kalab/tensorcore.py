"""Dimension-generic real and complexified multilinear algebra.

Everything here is pointwise linear algebra on small dense matrices: musical
isomorphisms between 2-forms and skew operators, the polar decomposition of a
skew-adjoint operator into a nonnegative stretch and a partial isometry, the
paired angle spectrum read off the stretch, derivative formulas for the
determinant along a matrix path that is diagonal at its base point, and the
complexification of paired orthonormal frames.

All spectral work against a metric g is done by passing to a g-orthonormal
basis obtained from a Cholesky factor, so self-adjointness stays exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import fd
from .errors import EigenPairingError, GeometryError

# eigenvalues of the stretch below this (relative) threshold count as kernel
KERNEL_THRESHOLD_FACTOR = 1e-9
PAIR_TOLERANCE = 1e-8


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GeometryError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class MetricTensor:
    """A symmetric positive-definite bilinear form given by its components."""

    components: np.ndarray

    def __post_init__(self):
        g = _as_matrix(self.components, "metric")
        if not np.allclose(g, g.T, atol=1e-12 * (1.0 + np.abs(g).max())):
            raise GeometryError("metric components are not symmetric")
        evals = np.linalg.eigvalsh(g)
        if evals.min() <= 0:
            raise GeometryError(f"metric is not positive definite (min eigenvalue {evals.min():g})")
        object.__setattr__(self, "components", 0.5 * (g + g.T))

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.components)

    @cached_property
    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(self.components)

    @cached_property
    def orthonormal_basis(self) -> np.ndarray:
        """Columns form a g-orthonormal basis (inverse transpose of the Cholesky factor)."""
        return np.linalg.inv(self.cholesky).T

    def inner(self, u, v):
        """Bilinear (not hermitian) pairing; accepts real or complex vectors."""
        return np.asarray(u) @ self.components @ np.asarray(v)

    def norm(self, u) -> float:
        return float(np.sqrt(np.real(self.inner(np.conj(u), u))))


@dataclass(frozen=True)
class SkewOperator:
    """An operator A with g(AX, Y) = -g(X, AY), stored as a matrix acting on columns."""

    components: np.ndarray
    metric: MetricTensor

    def __post_init__(self):
        a = _as_matrix(self.components, "operator")
        g = self.metric.components
        ga = g @ a
        scale = 1.0 + np.abs(ga).max()
        if np.abs(ga + ga.T).max() > 1e-8 * scale:
            raise GeometryError("operator is not skew-adjoint against the metric")
        object.__setattr__(self, "components", a)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def __call__(self, v):
        return self.components @ np.asarray(v)


@dataclass(frozen=True)
class PolarParts:
    """Polar factorisation A = gtilde @ jomega of a skew-adjoint operator.

    gtilde is the nonnegative self-adjoint stretch sqrt(-A^2); jomega is the
    unique partial isometry with the same kernel, a complex structure on the
    orthogonal complement of that kernel.  kernel_basis columns are
    g-orthonormal and span the kernel; rank is the (even) rank of A.
    """

    gtilde: np.ndarray
    jomega: np.ndarray
    kernel_basis: np.ndarray
    rank: int
    metric: MetricTensor
    eigenvalues: np.ndarray  # of gtilde, descending, with multiplicities

    @property
    def dim(self) -> int:
        return self.gtilde.shape[0]

    @cached_property
    def complement_projector(self) -> np.ndarray:
        """g-orthogonal projector onto the orthogonal complement of the kernel."""
        return -self.jomega @ self.jomega


def two_form_to_operator(form, g: MetricTensor) -> SkewOperator:
    """Raise an index: the operator A with g(A(X), Y) = form(X, Y).

    Parameters
    ----------
    form : antisymmetric (d, d) components, form[i, j] = form(e_i, e_j)
    g : metric used for the musical isomorphism
    """
    f = _as_matrix(form, "form")
    if np.abs(f + f.T).max() > 1e-10 * (1.0 + np.abs(f).max()):
        raise GeometryError("form components are not antisymmetric")
    f = 0.5 * (f - f.T)
    a = g.inverse @ f.T
    return SkewOperator(a, g)


def operator_to_two_form(op: np.ndarray, g: MetricTensor) -> np.ndarray:
    """Lower an index: form[i, j] = g(A e_i, e_j)."""
    return (g.components @ np.asarray(op)).T


def polar_decompose_skew(a: SkewOperator, kernel_threshold: float | None = None) -> PolarParts:
    """Split a skew-adjoint operator into stretch and partial isometry.

    The square root is taken through a symmetric eigendecomposition of -A^2
    expressed in a g-orthonormal basis.  Eigenvalues of the stretch below
    ``kernel_threshold`` (default 1e-9 * (largest + 1)) are classified into
    the kernel, which separates genuinely isotropic directions from roundoff.
    """
    g = a.metric
    d = a.dim
    e = g.orthonormal_basis           # columns g-orthonormal
    einv = g.cholesky.T               # inverse of e
    a_on = einv @ a.components @ e    # skew-symmetric in the orthonormal basis
    a_on = 0.5 * (a_on - a_on.T)
    s = -a_on @ a_on
    s = 0.5 * (s + s.T)
    try:
        evals, vecs = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy is robust here
        raise GeometryError(f"eigen-solver failed on -A^2: {exc}") from exc
    evals = np.clip(evals, 0.0, None)
    roots = np.sqrt(evals)
    if kernel_threshold is None:
        kernel_threshold = KERNEL_THRESHOLD_FACTOR * (roots.max(initial=0.0) + 1.0)
    nonzero = roots > kernel_threshold
    roots_cut = np.where(nonzero, roots, 0.0)
    inv_roots = np.where(nonzero, 1.0 / np.where(nonzero, roots, 1.0), 0.0)

    gt_on = (vecs * roots_cut) @ vecs.T
    j_on = (vecs * inv_roots) @ vecs.T @ a_on
    kernel_on = vecs[:, ~nonzero]

    gtilde = e @ gt_on @ einv
    jomega = e @ j_on @ einv
    kernel = e @ kernel_on
    order = np.argsort(roots_cut)[::-1]
    return PolarParts(
        gtilde=gtilde,
        jomega=jomega,
        kernel_basis=kernel,
        rank=int(nonzero.sum()),
        metric=g,
        eigenvalues=roots_cut[order],
    )


def sorted_angle_spectrum(parts: PolarParts, pair_tolerance: float = PAIR_TOLERANCE) -> np.ndarray:
    """Descending cosine spectrum, each stretch eigenvalue paired with multiplicity two.

    A pairing failure signals broken skew-adjointness upstream and raises.
    """
    ev = parts.eigenvalues
    d = ev.shape[0]
    if d % 2:
        raise EigenPairingError(f"odd dimension {d} cannot carry a paired spectrum")
    scale = 1.0 + ev.max(initial=0.0)
    out = np.empty(d // 2)
    for k in range(d // 2):
        lo, hi = ev[2 * k + 1], ev[2 * k]
        if hi - lo > pair_tolerance * scale:
            raise EigenPairingError(
                f"unpaired stretch eigenvalues {hi:.12g} and {lo:.12g} at slot {k}"
            )
        out[k] = 0.5 * (hi + lo)
    return np.clip(out, 0.0, None)


@dataclass(frozen=True)
class ComplexVector:
    """A complexified tangent vector; inner products extend bilinearly, never hermitian."""

    real_part: np.ndarray
    imag_part: np.ndarray

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.real_part, float) + 1j * np.asarray(self.imag_part, float)

    def conj(self) -> "ComplexVector":
        return ComplexVector(self.real_part, -np.asarray(self.imag_part, float))


def bilinear(g, u, v):
    """Complex-bilinear extension of a real symmetric form to complex vectors."""
    gm = g.components if isinstance(g, MetricTensor) else np.asarray(g)
    return np.asarray(u) @ gm @ np.asarray(v)


def complexify_frame(frame, g: MetricTensor, atol: float = 1e-9) -> list[ComplexVector]:
    """Build Z_a = (X_a - i Y_a) / 2 from a paired g-orthonormal frame.

    ``frame`` holds the 2n vectors as columns ordered X_1, Y_1, ..., X_n, Y_n.
    The bilinear Gram matrix of the result satisfies <Z_a, Z_b> = 0 and
    <Z_a, conj(Z_b)> = delta_ab / 2.
    """
    f = np.asarray(frame, float)
    if f.ndim != 2 or f.shape[1] % 2:
        raise GeometryError("frame must supply an even number of column vectors")
    gram = f.T @ g.components @ f
    if np.abs(gram - np.eye(f.shape[1])).max() > atol:
        raise GeometryError("frame is not orthonormal for the supplied metric")
    return [
        ComplexVector(0.5 * f[:, 2 * k], -0.5 * f[:, 2 * k + 1])
        for k in range(f.shape[1] // 2)
    ]


# --------------------------------------------------------------------------
# determinant derivatives along a matrix path


@dataclass(frozen=True)
class MatrixPath:
    """A smooth family of complex matrices over a flat parameter patch.

    The family must be diagonal at ``base_point`` with diagonal
    ``base_diagonal``; derivative formulas below are only valid there.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    base_point: np.ndarray
    base_diagonal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base_point", np.asarray(self.base_point, float))
        object.__setattr__(self, "base_diagonal", np.asarray(self.base_diagonal, complex))
        base = np.asarray(self.evaluator(self.base_point), complex)
        if base.ndim != 2 or base.shape[0] != base.shape[1]:
            raise GeometryError("matrix path must produce square matrices")
        off = base - np.diag(np.diag(base))
        scale = 1.0 + np.abs(base).max()
        if np.abs(off).max() > 1e-9 * scale:
            raise GeometryError("matrix path is not diagonal at its base point")
        if np.abs(np.diag(base) - self.base_diagonal).max() > 1e-9 * scale:
            raise GeometryError("declared base diagonal does not match the evaluator")


@dataclass(frozen=True)
class DetPathDerivatives:
    first: complex
    second: complex
    laplacian: complex


def _h(p, k, h):
    return h * (1.0 + abs(float(p[k])))


def _shift(p, k, dh):
    q = np.array(p, float)
    q[k] += dh
    return q


def _entry_first_derivatives(path: MatrixPath, h: float, order: int) -> np.ndarray:
    """dA[k] = matrix of entry derivatives along parameter axis k."""
    p = path.base_point
    out = []
    for k in range(len(p)):
        hk = _h(p, k, h)
        acc = sum(
            w * np.asarray(path.evaluator(_shift(p, k, s * hk)), complex)
            for s, w in fd._D1[order]
        )
        out.append(acc / hk)
    return np.stack(out)


def _entry_second_derivatives(path: MatrixPath, h: float, order: int) -> np.ndarray:
    """d2A[k, l] = mixed entry derivatives, one Richardson level applied."""

    def raw(step):
        p = path.base_point
        npar = len(p)
        mshape = np.asarray(path.evaluator(p), complex).shape
        out = np.zeros((npar, npar) + mshape, complex)
        for k in range(npar):
            hk = _h(p, k, step)
            acc = sum(
                w * np.asarray(path.evaluator(_shift(p, k, s * hk)), complex)
                for s, w in fd._D2[order]
            )
            out[k, k] = acc / hk ** 2
            for l in range(k + 1, npar):
                hl = _h(p, l, step)
                acc = 0.0
                for s, w in fd._D1[order]:
                    q = _shift(p, l, s * hl)
                    inner = sum(
                        w2 * np.asarray(path.evaluator(_shift(q, k, s2 * hk)), complex)
                        for s2, w2 in fd._D1[order]
                    ) / hk
                    acc = acc + w * inner
                out[k, l] = out[l, k] = acc / hl
        return out

    return fd.richardson(raw(h), raw(h / 2.0), order)


def det_path_derivatives(path: MatrixPath, directions, h: float = 1e-3, order: int = 4) -> DetPathDerivatives:
    """First and second derivatives and the parameter-trace of det along a path.

    With the path diagonal at the base point, the closed forms are

        d(det A)(Z)      = sum_j (prod_{k != j} lam_k) dA[j, j](Z)
        Hess(det A)(Z,W) = sum_{j,k} (prod_{s != j,k} lam_s)
                             * det [[dA[j,j](Z), dA[k,j](Z)], [dA[j,k](W), dA[k,k](W)]]
                           + sum_j (prod_{s != j} lam_s) Hess A[j, j](Z, W)

    and the laplacian sums the Hessian over an orthonormal parameter basis.
    Entry derivatives come from central differences on the evaluator; mixed
    second derivatives carry one Richardson level.
    """
    if h <= 0 or h < 1e-12:
        raise GeometryError("finite-difference step underflow")
    z, w = directions
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    lam = path.base_diagonal
    m = lam.shape[0]

    dA_axis = _entry_first_derivatives(path, h, order)      # (npar, m, m)
    d2A_axis = _entry_second_derivatives(path, h, order)    # (npar, npar, m, m)
    dA_z = np.einsum("k,kij->ij", z, dA_axis)
    dA_w = np.einsum("k,kij->ij", w, dA_axis)
    hessA_zw = np.einsum("k,l,klij->ij", z, w, d2A_axis)

    def prod_excl(*skip):
        mask = np.ones(m, bool)
        for s in skip:
            mask[s] = False
        return np.prod(lam[mask]) if mask.any() else 1.0

    first = sum(prod_excl(j) * dA_z[j, j] for j in range(m))

    second = 0.0 + 0.0j
    for j in range(m):
        for k in range(m):
            if j == k:
                continue
            minor = dA_z[j, j] * dA_w[k, k] - dA_z[k, j] * dA_w[j, k]
            second += prod_excl(j, k) * minor
    second += sum(prod_excl(j) * hessA_zw[j, j] for j in range(m))

    npar = len(path.base_point)
    lap = 0.0 + 0.0j
    for a in range(npar):
        da = dA_axis[a]
        d2a = d2A_axis[a, a]
        for j in range(m):
            for k in range(m):
                if j == k:
                    continue
                lap += prod_excl(j, k) * (da[j, j] * da[k, k] - da[k, j] * da[j, k])
        lap += sum(prod_excl(j) * d2a[j, j] for j in range(m))
    return DetPathDerivatives(first=complex(first), second=complex(second), laplacian=complex(lap))
