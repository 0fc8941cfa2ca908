"""Catalog of Kahler and Kahler-Einstein target manifolds with analytic jets.

Every target exposes the metric with two derivative orders, the complex
structure with one, Christoffel symbols, the curvature tensor and, when it is
Einstein, the constant of proportionality in Ricci = R * g.

Conventions (fixed package-wide):
  * real chart coordinates interleave as (x_1, y_1, ..., x_m, y_m) with
    z_j = x_j + i y_j and J dx_j = dy_j;
  * the curvature tensor is stored with the sign
        R(X, Y)Z = -D_X D_Y Z + D_Y D_X Z + D_[X,Y] Z,
    lowered as R(X, Y, Z, W) = g(R(X, Y)Z, W); with this sign the sectional
    curvature of the plane spanned by orthonormal X, Y is R(X, Y, X, Y);
  * Ricci(U, V) = sum_a R(U, e_a, V, e_a) over a g-orthonormal basis, which
    makes the complex projective spaces below satisfy Ricci = (m+1) K / 2 * g.

The projective-space metric comes from the potential log(1 + |w|^2) on one
affine chart, rescaled so the holomorphic sectional curvature equals the
requested K; its curvature array is assembled from the constant-curvature
closed form in g and J rather than from metric derivatives, so audits can
cross-check the two routes independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import fd
from .errors import ConfigError, GeometryError


def standard_complex_structure(m: int) -> np.ndarray:
    """Multiplication by i in interleaved real coordinates: J e_{x_j} = e_{y_j}."""
    j = np.zeros((2 * m, 2 * m))
    for k in range(m):
        j[2 * k + 1, 2 * k] = 1.0
        j[2 * k, 2 * k + 1] = -1.0
    return j


@dataclass(frozen=True)
class TargetGeometry:
    """A Kahler target with analytic jets of all structure tensors."""

    name: str
    complex_dim: int
    metric: Callable[[np.ndarray], np.ndarray]
    metric_d1: Callable[[np.ndarray], np.ndarray]       # [c, a, b] = d_c g_ab
    metric_d2: Callable[[np.ndarray], np.ndarray]       # [c, e, a, b] = d_c d_e g_ab
    complex_structure: Callable[[np.ndarray], np.ndarray]
    complex_structure_d1: Callable[[np.ndarray], np.ndarray]   # [c, a, b] = d_c J^a_b
    curvature: Callable[[np.ndarray], np.ndarray]       # (0,4) components, package sign
    einstein_constant: Optional[float]
    is_flat: bool
    lattice: Optional[np.ndarray] = None                # columns are period vectors
    hol_sec_curvature: Optional[float] = None
    chart_radius: Optional[float] = None                # sampling guard, not a jet bound
    hk_triple: Optional["HyperKahlerTriple"] = None

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    def metric_jet(self, p: np.ndarray, order: int = 0):
        """Metric components and derivatives up to the requested order (<= 2)."""
        if order == 0:
            return (self.metric(p),)
        if order == 1:
            return (self.metric(p), self.metric_d1(p))
        if order == 2:
            return (self.metric(p), self.metric_d1(p), self.metric_d2(p))
        raise ConfigError(f"metric jets available to order 2, requested {order}")

    def christoffel(self, p: np.ndarray) -> np.ndarray:
        """Gamma^a_{bc} of the Levi-Civita connection, from analytic metric derivatives."""
        g = self.metric(p)
        dg = self.metric_d1(p)
        gi = np.linalg.inv(g)
        # Gamma^a_bc = 1/2 g^{ae} (d_b g_ec + d_c g_be - d_e g_bc)
        t = dg.transpose(1, 0, 2) + dg.transpose(2, 1, 0) - dg
        # t[e, b, c] = d_b g_ec + d_c g_be - d_e g_bc
        return 0.5 * np.einsum("ae,ebc->abc", gi, t)

    def kahler_form(self, p: np.ndarray) -> np.ndarray:
        """omega[a, b] = g(J e_a, e_b)."""
        return self.complex_structure(p).T @ self.metric(p)

    def ricci(self, p: np.ndarray) -> np.ndarray:
        """Ricci[a, b] by contraction of the stored curvature array."""
        r4 = self.curvature(p)
        gi = np.linalg.inv(self.metric(p))
        return np.einsum("ijkl,jl->ik", r4, gi)


# --------------------------------------------------------------------------
# flat targets


def make_flat_kahler(m: int, lattice: Optional[np.ndarray] = None) -> TargetGeometry:
    """Flat C^m (or a complex torus when a lattice is supplied).

    The metric is the real part of the standard hermitian product, so a
    complex line meets the angle machinery with cosine exactly one.
    """
    if m < 1:
        raise ConfigError("complex dimension must be at least 1")
    d = 2 * m
    if lattice is not None:
        lattice = np.asarray(lattice, float)
        if lattice.shape != (d, d) or abs(np.linalg.det(lattice)) < 1e-12:
            raise ConfigError("lattice must supply 2m independent period vectors")
    eye = np.eye(d)
    jmat = standard_complex_structure(m)
    zero3 = np.zeros((d, d, d))
    zero4 = np.zeros((d, d, d, d))
    name = f"torus-c{m}" if lattice is not None else f"flat-c{m}"
    return TargetGeometry(
        name=name,
        complex_dim=m,
        metric=lambda p: eye,
        metric_d1=lambda p: zero3,
        metric_d2=lambda p: np.zeros((d, d, d, d)),
        complex_structure=lambda p: jmat,
        complex_structure_d1=lambda p: zero3,
        curvature=lambda p: zero4,
        einstein_constant=0.0,
        is_flat=True,
        lattice=lattice,
        hol_sec_curvature=0.0,
    )


# --------------------------------------------------------------------------
# complex projective space on an affine chart


@lru_cache(maxsize=4)
def _fs_chart_functions(m: int):
    """Lambdified (g, dg, d2g) for the unit-scale projective metric on one chart."""
    import sympy as sp

    d = 2 * m
    xs = sp.symbols(f"q0:{d}", real=True)
    zs = [xs[2 * j] + sp.I * xs[2 * j + 1] for j in range(m)]
    pot = sp.log(1 + sum(z * sp.conjugate(z) for z in zs))

    def dz(expr, j):
        return (sp.diff(expr, xs[2 * j]) - sp.I * sp.diff(expr, xs[2 * j + 1])) / 2

    def dzbar(expr, k):
        return (sp.diff(expr, xs[2 * k]) + sp.I * sp.diff(expr, xs[2 * k + 1])) / 2

    h = [[sp.simplify(dzbar(dz(pot, j), k)) for k in range(m)] for j in range(m)]

    def ccomp(a):
        v = [sp.Integer(0)] * m
        v[a // 2] = sp.Integer(1) if a % 2 == 0 else sp.I
        return v

    g = sp.zeros(d, d)
    for a in range(d):
        for b in range(d):
            val = sum(
                h[j][k] * ccomp(a)[j] * sp.conjugate(ccomp(b)[k])
                for j in range(m)
                for k in range(m)
            )
            g[a, b] = sp.simplify(sp.re(sp.expand_complex(val)))
    dg = [[[sp.diff(g[a, b], xs[c]) for b in range(d)] for a in range(d)] for c in range(d)]
    d2g = [
        [[[sp.diff(g[a, b], xs[c], xs[e]) for b in range(d)] for a in range(d)] for e in range(d)]
        for c in range(d)
    ]
    gf = sp.lambdify(xs, g, "numpy", cse=True)
    dgf = sp.lambdify(xs, dg, "numpy", cse=True)
    d2gf = sp.lambdify(xs, d2g, "numpy", cse=True)
    return gf, dgf, d2gf


def constant_hol_sec_curvature(g: np.ndarray, jmat: np.ndarray, k_hol: float) -> np.ndarray:
    """Curvature array of a complex space form, in the package sign convention."""
    w = jmat.T @ g
    gg = np.einsum("bc,ad->abcd", g, g) - np.einsum("ac,bd->abcd", g, g)
    ww = np.einsum("bc,ad->abcd", w, w) - np.einsum("ac,bd->abcd", w, w)
    cross = -2.0 * np.einsum("ab,cd->abcd", w, w)
    return -(k_hol / 4.0) * (gg + ww + cross)


def make_fubini_study(m: int, k_hol: float) -> TargetGeometry:
    """Projective space of complex dimension m with holomorphic sectional curvature K.

    Exposed on a single affine chart; the guard radius below bounds audit and
    CLI sampling, not jet evaluation (the chart covers every finite point).
    The Einstein constant is (m+1) K / 2.
    """
    if k_hol <= 0:
        raise ConfigError("holomorphic sectional curvature must be positive")
    if m > 3:
        raise ConfigError("projective targets are provided for m <= 3")
    gf, dgf, d2gf = _fs_chart_functions(m)
    scale = 4.0 / k_hol
    d = 2 * m
    jmat = standard_complex_structure(m)
    zero3 = np.zeros((d, d, d))

    def metric(p):
        return scale * np.asarray(gf(*np.asarray(p, float)), float)

    def metric_d1(p):
        return scale * np.asarray(dgf(*np.asarray(p, float)), float)

    def metric_d2(p):
        return scale * np.asarray(d2gf(*np.asarray(p, float)), float)

    def curvature(p):
        return constant_hol_sec_curvature(metric(p), jmat, k_hol)

    return TargetGeometry(
        name=f"cp{m}-K{k_hol:g}",
        complex_dim=m,
        metric=metric,
        metric_d1=metric_d1,
        metric_d2=metric_d2,
        complex_structure=lambda p: jmat,
        complex_structure_d1=lambda p: zero3,
        curvature=curvature,
        einstein_constant=(m + 1) * k_hol / 2.0,
        is_flat=False,
        hol_sec_curvature=k_hol,
        chart_radius=0.9,
    )


# --------------------------------------------------------------------------
# hyper-Kahler flat model


@dataclass(frozen=True)
class SpherePoint:
    """A point of the unit two-sphere parametrising compatible complex structures."""

    nu: float
    phi: float

    @property
    def unit_vector(self) -> np.ndarray:
        return np.array(
            [math.cos(self.nu), math.sin(self.nu) * math.cos(self.phi), math.sin(self.nu) * math.sin(self.phi)]
        )


@dataclass(frozen=True)
class HyperKahlerTriple:
    """Three anticommuting orthogonal complex structures with k = i @ j."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        for name, a in (("i", self.i), ("j", self.j), ("k", self.k)):
            if np.abs(a @ a + np.eye(a.shape[0])).max() > 1e-12:
                raise GeometryError(f"structure {name} does not square to -identity")
        if np.abs(self.i @ self.j + self.j @ self.i).max() > 1e-12:
            raise GeometryError("structures i and j do not anticommute")
        if np.abs(self.k - self.i @ self.j).max() > 1e-12:
            raise GeometryError("structure k is not i @ j")


def _quaternion_blocks(real_dim: int):
    """Left multiplication by i, j, k on H^(d/4), slot coordinates (1, i, j, k)."""
    blk_i = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
    blk_j = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], float)
    blk_k = blk_i @ blk_j
    slots = real_dim // 4
    big = lambda blk: np.kron(np.eye(slots), blk)
    return big(blk_i), big(blk_j), big(blk_k)


def make_hyperkahler_flat(real_dim: int) -> tuple[TargetGeometry, HyperKahlerTriple]:
    """Flat hyper-Kahler space of real dimension 4 or 8 with its structure triple.

    The base complex structure of the returned target is the first one of the
    triple; the quaternion model makes k = i @ j exact in integer arithmetic.
    """
    if real_dim not in (4, 8):
        raise ConfigError("hyper-Kahler flat model supports real dimension 4 or 8")
    bi, bj, bk = _quaternion_blocks(real_dim)
    triple = HyperKahlerTriple(i=bi, j=bj, k=bk)
    m = real_dim // 2
    d = real_dim
    eye = np.eye(d)
    zero3 = np.zeros((d, d, d))
    zero4 = np.zeros((d, d, d, d))
    target = TargetGeometry(
        name=f"hk-r{real_dim}",
        complex_dim=m,
        metric=lambda p: eye,
        metric_d1=lambda p: zero3,
        metric_d2=lambda p: np.zeros((d, d, d, d)),
        complex_structure=lambda p: bi,
        complex_structure_d1=lambda p: zero3,
        curvature=lambda p: zero4,
        einstein_constant=0.0,
        is_flat=True,
        hol_sec_curvature=0.0,
        hk_triple=triple,
    )
    return target, triple


def j_from_sphere(triple: HyperKahlerTriple, s: SpherePoint) -> np.ndarray:
    """The compatible complex structure attached to a sphere point.

    Returns cos(nu) i + sin(nu) cos(phi) j + sin(nu) sin(phi) k; it squares to
    -identity and is orthogonal for the flat metric.
    """
    v = s.unit_vector
    out = v[0] * triple.i + v[1] * triple.j + v[2] * triple.k
    if np.abs(out @ out + np.eye(out.shape[0])).max() > 1e-10:
        raise GeometryError("sphere combination failed to square to -identity")
    return out


# --------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class TargetAuditReport:
    target: str
    residuals: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(v < self.tolerance for v in self.residuals.values())


def _curvature_from_christoffel_fd(t: TargetGeometry, p: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Independent curvature route: finite differences of the Christoffel field."""
    d = t.real_dim
    gam = t.christoffel(p)
    dgam = np.stack([fd.partial(t.christoffel, p, i, h=h, order=4) for i in range(d)])
    # common-sign R^l_{ijk} = d_i Gam^l_jk - d_j Gam^l_ik + Gam^l_ie Gam^e_jk - Gam^l_je Gam^e_ik
    r13 = (
        np.einsum("iljk->lijk", dgam[:, :, :, :])
        - np.einsum("jlik->lijk", dgam[:, :, :, :])
        + np.einsum("lie,ejk->lijk", gam, gam)
        - np.einsum("lje,eik->lijk", gam, gam)
    )
    r4_common = np.einsum("ls,sijk->ijkl", t.metric(p), r13)
    return -r4_common


def target_audit(t: TargetGeometry, sample_points, tol: float = 1e-8,
                 check_curvature_fd: bool = True) -> TargetAuditReport:
    """Numerically assert the structural invariants of a target at sample points.

    Residuals cover J^2 + Id, hermitian metric compatibility, antisymmetry of
    the form, parallelism of J, the Einstein condition, the first Bianchi
    identity, and (optionally) agreement of the stored curvature with a
    finite-difference route through the Christoffel field.
    """
    res = {
        "j_squared": 0.0,
        "metric_compat": 0.0,
        "form_antisymmetry": 0.0,
        "nabla_j": 0.0,
        "bianchi": 0.0,
    }
    if t.einstein_constant is not None:
        res["einstein"] = 0.0
    if check_curvature_fd:
        res["curvature_vs_fd"] = 0.0
    d = t.real_dim
    for p in sample_points:
        p = np.asarray(p, float)
        if p.shape != (d,):
            raise ConfigError(f"sample point with shape {p.shape} for a dimension-{d} chart")
        if t.chart_radius is not None and np.linalg.norm(p) >= t.chart_radius:
            raise ConfigError(
                f"point outside chart guard radius {t.chart_radius} for target {t.name}"
            )
        g = t.metric(p)
        j = t.complex_structure(p)
        r4 = t.curvature(p)
        res["j_squared"] = max(res["j_squared"], np.abs(j @ j + np.eye(d)).max())
        res["metric_compat"] = max(res["metric_compat"], np.abs(j.T @ g @ j - g).max())
        w = j.T @ g
        res["form_antisymmetry"] = max(res["form_antisymmetry"], np.abs(w + w.T).max())
        gam = t.christoffel(p)
        dj = t.complex_structure_d1(p)
        nabla_j = dj + np.einsum("ace,eb->cab", gam, j) - np.einsum("ecb,ae->cab", gam, j)
        res["nabla_j"] = max(res["nabla_j"], np.abs(nabla_j).max())
        cyc = r4 + np.einsum("jkil->ijkl", r4) + np.einsum("kijl->ijkl", r4)
        res["bianchi"] = max(res["bianchi"], np.abs(cyc).max())
        if t.einstein_constant is not None:
            res["einstein"] = max(
                res["einstein"], np.abs(t.ricci(p) - t.einstein_constant * g).max()
            )
        if check_curvature_fd:
            res["curvature_vs_fd"] = max(
                res["curvature_vs_fd"], np.abs(r4 - _curvature_from_christoffel_fd(t, p)).max()
            )
    return TargetAuditReport(target=t.name, residuals=res, tolerance=tol)


# --------------------------------------------------------------------------
# string ids


def resolve_target(target_id: str) -> TargetGeometry:
    """Build a catalog target from its string id.

    Known ids: ``flat-c{m}``, ``torus-c{m}``, ``cp{m}-K{value}``, ``hk-r4``,
    ``hk-r8``.
    """
    tid = target_id.strip()
    if tid.startswith("flat-c"):
        return make_flat_kahler(_parse_int(tid[6:], tid))
    if tid.startswith("torus-c"):
        m = _parse_int(tid[7:], tid)
        return make_flat_kahler(m, lattice=2 * math.pi * np.eye(2 * m))
    if tid.startswith("cp") and "-K" in tid:
        head, _, kval = tid.partition("-K")
        m = _parse_int(head[2:], tid)
        try:
            k_hol = float(kval)
        except ValueError as exc:
            raise ConfigError(f"bad curvature value in target id {tid!r}") from exc
        return make_fubini_study(m, k_hol)
    if tid in ("hk-r4", "hk-r8"):
        return make_hyperkahler_flat(int(tid[4:]))[0]
    raise ConfigError(f"unknown target id {target_id!r}")


def _parse_int(text: str, tid: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"bad dimension in target id {tid!r}") from exc
