"""Catalog of closed-form immersions addressable by string ids.

Charts are written symbolically and compiled once into jet evaluators (value
and derivatives to third order), so "analytic" jets are exact to roundoff.
Ids take query parameters, e.g. ``conj-curve?k=2`` or
``tilted-plane?alpha=pi/3&n=2``.

Available ids
-------------
``tilted-plane?alpha=&n=``
    n products of a constant-angle plane in C^2; angle cosine cos(alpha).
``conj-curve?k=``
    (x, y) -> (z, conj(z)^k) into flat C^2; minimal, one angle that varies
    with the radius.
``product-conj``
    two conj-curve factors into flat C^4; minimal with two distinct angles.
``clifford-cp2?K=``
    the minimal isotropic torus in the projective plane, on the affine chart.
``lagrangian-graph?f=``
    gradient graph x -> x + i grad f(x) in flat C^m; isotropic for any f.
``hk-complex-plane?nu=&phi=``
    a flat 4-plane in the hyper-Kahler R^8 spanned by X, J_s X, Y, J_s Y with
    quaternionically orthogonal X, Y; equal angles |cos nu| against the base
    structure.
``torus-graph?eps=&winding=``
    doubly periodic maps into the flat C^2 torus; winding one of
    ``lagrangian`` (gradient graph), ``tilted`` (constant-angle plane plus a
    periodic normal wiggle), ``holomorphic`` (diagonal complex curve plus
    wiggle).
"""
from __future__ import annotations

import math
from typing import Sequence
from urllib.parse import parse_qsl

import numpy as np
import sympy as sp

from .errors import ConfigError
from .immersion import FDParams, ImmersionChart
from .targets import TargetGeometry, j_from_sphere, make_hyperkahler_flat, resolve_target, SpherePoint

TWO_PI = 2.0 * math.pi


def _compile_jets(syms: Sequence[sp.Symbol], exprs: Sequence[sp.Expr]):
    """Lambdify value, first, second and third derivative arrays."""
    fm = sp.Matrix(exprs)
    d1 = [[sp.diff(e, s) for s in syms] for e in exprs]
    d2 = [[[sp.diff(e, s, t) for t in syms] for s in syms] for e in exprs]
    d3 = [[[[sp.diff(e, s, t, u) for u in syms] for t in syms] for s in syms] for e in exprs]
    f0 = sp.lambdify(syms, list(fm), "numpy", cse=True)
    f1 = sp.lambdify(syms, d1, "numpy", cse=True)
    f2 = sp.lambdify(syms, d2, "numpy", cse=True)
    f3 = sp.lambdify(syms, d3, "numpy", cse=True)

    def jets(p, order):
        args = [float(v) for v in p]
        out = [np.asarray(f0(*args), float)]
        if order >= 1:
            out.append(np.asarray(f1(*args), float))
        if order >= 2:
            out.append(np.asarray(f2(*args), float))
        if order >= 3:
            out.append(np.asarray(f3(*args), float))
        return tuple(out)

    return jets


def _chart(name, target: TargetGeometry, syms, exprs, *, sampling_box, params,
           lattice_domain=None, winding=None) -> ImmersionChart:
    jets = _compile_jets(syms, exprs)

    def evaluator(p):
        return jets(p, 0)[0]

    return ImmersionChart(
        name=name,
        domain_dim=len(syms),
        target=target,
        evaluator=evaluator,
        jet_evaluator=jets,
        jet_mode="analytic",
        fd_params=FDParams(),
        lattice_domain=lattice_domain,
        winding=winding,
        sampling_box=sampling_box,
        params=dict(params),
    )


# --------------------------------------------------------------------------
# individual charts


def tilted_plane(alpha: float = math.pi / 3, n: int = 1) -> ImmersionChart:
    target = resolve_target(f"flat-c{2 * n}")
    syms = sp.symbols(f"u0:{2 * n}", real=True)
    ca, sa = sp.cos(sp.Float(alpha)), sp.sin(sp.Float(alpha))
    exprs = []
    for a in range(n):
        x, y = syms[2 * a], syms[2 * a + 1]
        exprs += [x, ca * y, sa * y, sp.Integer(0)]
    box = (np.full(2 * n, -1.0), np.full(2 * n, 1.0))
    return _chart(
        "tilted-plane", target, syms, exprs,
        sampling_box=box, params={"alpha": alpha, "n": n},
    )


def conj_curve(k: int = 2) -> ImmersionChart:
    if k < 1:
        raise ConfigError("conj-curve needs k >= 1")
    target = resolve_target("flat-c2")
    x, y = sp.symbols("x y", real=True)
    w = (x - sp.I * y) ** k
    exprs = [x, y, sp.re(sp.expand(w)), sp.im(sp.expand(w))]
    # radius window avoids the complex point at the origin and the isotropic circle
    box = (np.array([0.10, 0.10]), np.array([0.33, 0.33]))
    return _chart("conj-curve", target, (x, y), exprs, sampling_box=box, params={"k": k})


def product_conj() -> ImmersionChart:
    target = resolve_target("flat-c4")
    x1, y1, x2, y2 = sp.symbols("x1 y1 x2 y2", real=True)
    w1 = sp.expand((x1 - sp.I * y1) ** 2)
    w2 = sp.expand((x2 - sp.I * y2) ** 2)
    exprs = [x1, y1, sp.re(w1), sp.im(w1), x2, y2, sp.re(w2), sp.im(w2)]
    box = (np.array([0.10, 0.10, 0.10, 0.10]), np.array([0.33, 0.33, 0.33, 0.33]))
    return _chart("product-conj", target, (x1, y1, x2, y2), exprs, sampling_box=box, params={})


def clifford_cp2(k_hol: float = 4.0) -> ImmersionChart:
    target = resolve_target(f"cp2-K{k_hol:g}")
    u, v = sp.symbols("u v", real=True)
    exprs = [sp.cos(u), sp.sin(u), sp.cos(v), sp.sin(v)]
    box = (np.zeros(2), np.full(2, TWO_PI))
    return _chart(
        "clifford-cp2", target, (u, v), exprs,
        sampling_box=box, params={"K": k_hol},
        lattice_domain=TWO_PI * np.eye(2), winding=None,
    )


def lagrangian_graph(f: str = "0.2*sin(x1) + 0.1*x1*x2") -> ImmersionChart:
    local = {f"x{i}": sp.Symbol(f"x{i}", real=True) for i in range(1, 10)}
    try:
        expr = sp.sympify(f, locals=local)
    except (sp.SympifyError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse potential {f!r}") from exc
    used = sorted(
        (s for s in expr.free_symbols), key=lambda s: int(str(s)[1:])
    )
    if not used:
        raise ConfigError("potential must depend on at least one variable x1, x2, ...")
    m = int(str(used[-1])[1:])
    syms = [local[f"x{i}"] for i in range(1, m + 1)]
    target = resolve_target(f"flat-c{m}")
    exprs = []
    for s in syms:
        exprs += [s, sp.diff(expr, s)]
    box = (np.full(m, -0.8), np.full(m, 0.8))
    return _chart("lagrangian-graph", target, syms, exprs, sampling_box=box, params={"f": f})


def hk_complex_plane(nu: float = 0.9, phi: float = 0.7) -> ImmersionChart:
    target = make_hyperkahler_flat(8)[0]
    triple = target.hk_triple
    js = j_from_sphere(triple, SpherePoint(nu=nu, phi=phi))
    x_vec = np.zeros(8); x_vec[0] = 1.0
    y_vec = np.zeros(8); y_vec[4] = 1.0
    cols = np.stack([x_vec, js @ x_vec, y_vec, js @ y_vec], axis=1)
    syms = sp.symbols("t0:4", real=True)
    exprs = [sum(sp.Float(cols[a, i]) * syms[i] for i in range(4)) for a in range(8)]
    box = (np.full(4, -1.0), np.full(4, 1.0))
    return _chart(
        "hk-complex-plane", target, syms, exprs,
        sampling_box=box, params={"nu": nu, "phi": phi},
    )


_TORUS_WINDINGS = ("lagrangian", "tilted", "holomorphic")


def torus_graph(eps: float = 0.1, winding: str = "lagrangian") -> ImmersionChart:
    """Doubly periodic immersions into the flat complex 2-torus."""
    if winding not in _TORUS_WINDINGS:
        raise ConfigError(f"winding must be one of {_TORUS_WINDINGS}")
    target = resolve_target("torus-c2")
    u, v = sp.symbols("u v", real=True)
    e = sp.Float(eps)
    if winding == "lagrangian":
        # gradient graph of eps * sin(u) sin(v); isotropic for every eps
        pot = e * sp.sin(u) * sp.sin(v)
        exprs = [u, sp.diff(pot, u), v, sp.diff(pot, v)]
        wind = np.array([[1, 0], [0, 0], [0, 1], [0, 0]], int)
    elif winding == "tilted":
        exprs = [u, v, v, e * sp.sin(u) * sp.sin(v)]
        wind = np.array([[1, 0], [0, 1], [0, 1], [0, 0]], int)
    else:
        exprs = [u, v, u + e * sp.sin(u) * sp.sin(v), v]
        wind = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], int)
    box = (np.zeros(2), np.full(2, TWO_PI))
    return _chart(
        "torus-graph", target, (u, v), exprs,
        sampling_box=box, params={"eps": eps, "winding": winding},
        lattice_domain=TWO_PI * np.eye(2), winding=wind,
    )


# --------------------------------------------------------------------------
# id resolution

_BUILDERS = {
    "tilted-plane": (tilted_plane, {"alpha": float, "n": int}),
    "conj-curve": (conj_curve, {"k": int}),
    "product-conj": (product_conj, {}),
    "clifford-cp2": (clifford_cp2, {"K": float}),
    "lagrangian-graph": (lagrangian_graph, {"f": str}),
    "hk-complex-plane": (hk_complex_plane, {"nu": float, "phi": float}),
    "torus-graph": (torus_graph, {"eps": float, "winding": str}),
}

_PARAM_NAMES = {"K": "k_hol"}


def _coerce(value: str, kind):
    if kind is str:
        return value
    try:
        if kind is int:
            return int(value)
        return float(sp.sympify(value))  # accepts "pi/3" and plain numbers
    except (ValueError, TypeError, sp.SympifyError) as exc:
        raise ConfigError(f"bad parameter value {value!r}") from exc


def catalog_ids() -> list[str]:
    return sorted(_BUILDERS)


def resolve_immersion(spec: str) -> ImmersionChart:
    """Build a catalog immersion from ``name`` or ``name?key=value&...``."""
    name, _, query = spec.partition("?")
    name = name.strip()
    if name not in _BUILDERS:
        raise ConfigError(f"unknown immersion id {name!r}")
    builder, schema = _BUILDERS[name]
    kwargs = {}
    for key, value in parse_qsl(query, keep_blank_values=False):
        if key not in schema:
            raise ConfigError(f"unknown parameter {key!r} for immersion {name!r}")
        kwargs[_PARAM_NAMES.get(key, key)] = _coerce(value, schema[key])
    return builder(**kwargs)
