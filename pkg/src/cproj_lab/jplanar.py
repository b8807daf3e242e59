"""J-planar curves: integration, the wedge test and an empirical equivalence probe.

A curve is J-planar when ``∇_γ̇ γ̇ = α γ̇ + β J γ̇``.  The residual is the third
singular value of ``[∇_γ̇γ̇ | γ̇ | Jγ̇]`` divided by the first, computed in a
g-orthonormal frame so that it does not depend on the coordinates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chart import Box, Curve, TensorField, christoffel_jet, geodesic_integrate, integrate_second_order
from .errors import PathLeavesDomain, ZeroVelocity
from .kahler import KahlerStructure

VEL_TOL = 1e-12


def coefficient(spec) -> Callable[[float], float]:
    """A constant, a list of polynomial coefficients (c0 + c1 t + ...), or a callable."""
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda t: c
    coeffs = [float(c) for c in spec]
    return lambda t: float(np.polyval(coeffs[::-1], t))


def integrate_jplanar(ks: KahlerStructure, p, X, alpha=0.0, beta=0.0, T: float = 1.0, steps: int = 1000,
                      check_box: bool = True) -> Curve:
    """RK4 solution of γ̈ + Γ(γ̇, γ̇) = α γ̇ + β J γ̇."""
    if np.linalg.norm(X) < VEL_TOL:
        raise ZeroVelocity("initial velocity vanishes")
    a_fn, b_fn = coefficient(alpha), coefficient(beta)
    g, J = ks.g, ks.J

    def accel(t, x, u):
        gam = christoffel_jet(g.jet(x[None], 1)).value[0]
        Ju = J(x[None])[0] @ u
        return -np.einsum("ijk,j,k->i", gam, u, u) + a_fn(t) * u + b_fn(t) * Ju

    curve = integrate_second_order(accel, p, X, T, steps, ks.box if check_box else None)
    curve.meta.update(alpha=[a_fn(t) for t in curve.t], beta=[b_fn(t) for t in curve.t])
    return curve


def curve_from_function(fn: Callable, T: float = 1.0, steps: int = 200) -> Curve:
    """Curve sampled from ``fn(t) -> (x, v, a)`` given in closed form."""
    ts = np.linspace(0.0, T, steps + 1)
    xs, vs, acc = zip(*(fn(t) for t in ts))
    return Curve(ts, np.array(xs, dtype=float), np.array(vs, dtype=float), np.array(acc, dtype=float))


def _fd_acceleration(curve: Curve):
    """Fourth-order central differences of the velocity samples (interior points only)."""
    h = curve.t[1] - curve.t[0]
    v = curve.v
    a = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12.0 * h)
    return slice(2, len(v) - 2), a


@dataclass
class JPlanarReport:
    residual: float
    per_sample: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)


def jplanar_residual(ks: KahlerStructure, curve: Curve, acceleration: str = "recorded") -> JPlanarReport:
    """Max normalized third singular value of [∇_γ̇γ̇ | γ̇ | Jγ̇] with least-squares α, β.

    ``acceleration="fd"`` differentiates the velocity samples instead of trusting
    the recorded accelerations, which makes the check independent of the ODE used.
    """
    if acceleration == "fd":
        sl, acc = _fd_acceleration(curve)
    else:
        sl, acc = slice(None), curve.a
    x, v = curve.x[sl], curve.v[sl]
    g0 = ks.g(x)
    Lc = np.linalg.cholesky(g0)  # g = L Lᵀ, so Lᵀ maps to an orthonormal frame
    speed = np.sqrt(np.einsum("ni,nij,nj->n", v, g0, v))
    if np.any(speed < VEL_TOL):
        raise ZeroVelocity("curve velocity vanishes at a sample")
    gam = christoffel_jet(ks.g.jet(x, 1)).value
    cov = acc + np.einsum("nijk,nj,nk->ni", gam, v, v)
    Jv = np.einsum("nij,nj->ni", ks.J(x), v)
    M = np.stack([cov, v, Jv], axis=2)
    Mo = np.einsum("nji,njk->nik", Lc, M)
    s = np.linalg.svd(Mo, compute_uv=False)
    if s.shape[1] < 3:  # real dimension 2: the wedge vanishes identically
        per = np.zeros(len(x))
    else:
        per = s[:, 2] / np.maximum(s[:, 0], VEL_TOL)
    coef = np.array([np.linalg.lstsq(Mo[i, :, 1:], Mo[i, :, 0], rcond=None)[0] for i in range(len(x))])
    return JPlanarReport(float(per.max()), per, coef[:, 0], coef[:, 1])


@dataclass
class ProbeTrial:
    direction: str
    p: list
    X: list
    residual: float


@dataclass
class ProbeReport:
    trials: list
    max_residual: float

    def as_dict(self) -> dict:
        return {"max_residual": self.max_residual,
                "trials": [t.__dict__ for t in self.trials]}


def _random_start(box: Box, rng, shrink: float = 0.5):
    inner = box.shrink(shrink)
    lo, hi = np.array(inner.lo), np.array(inner.hi)
    p = lo + (hi - lo) * rng.random(len(lo))
    X = rng.normal(size=len(lo))
    return p, X


def equivalence_probe(ks: KahlerStructure, g_tilde: TensorField, trials: int = 20, seed: int = 0,
                      T: float = 0.5, steps: int = 200, both: bool = True) -> ProbeReport:
    """Geodesics of one metric tested for J-planarity with respect to the other."""
    other = KahlerStructure(g_tilde, ks.J, ks.box, None, "g~")
    rng = np.random.default_rng(seed)
    box = ks.box
    span = float(np.min(np.array(box.hi) - np.array(box.lo)))
    out = []
    pairs = [("geodesic(g~) vs g", g_tilde, ks)]
    if both:
        pairs.append(("geodesic(g) vs g~", ks.g, other))
    for _ in range(trials):
        p, X = _random_start(box, rng)
        for name, gg, target in pairs:
            speed = np.sqrt(X @ gg(p[None])[0] @ X)
            V = X * (0.25 * span / (T * speed))
            try:
                curve = geodesic_integrate(gg, p, V, T, steps, box)
            except PathLeavesDomain:
                curve = geodesic_integrate(gg, p, 0.25 * V, T, steps, box)
            rep = jplanar_residual(target, curve, acceleration="fd")
            out.append(ProbeTrial(name, p.tolist(), V.tolist(), rep.residual))
    return ProbeReport(out, max(t.residual for t in out))


def write_csv(curve: Curve, path, extra: dict | None = None) -> None:
    """Samples of a curve for external plotting: t, x_i, v_i and optional per-sample columns."""
    m = curve.x.shape[1]
    cols = {"t": curve.t}
    for i in range(m):
        cols[f"x{i}"] = curve.x[:, i]
    for i in range(m):
        cols[f"v{i}"] = curve.v[:, i]
    for key in ("alpha", "beta"):
        if key in curve.meta:
            cols[key] = np.asarray(curve.meta[key])
    for k, v in (extra or {}).items():
        cols[k] = np.asarray(v)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([f"{float(c):.17g}" for c in row])


def distinct_curves(curves: Sequence[Curve]) -> float:
    """Smallest endpoint separation between curves started from the same data."""
    ends = np.array([c.x[-1] for c in curves])
    d = np.linalg.norm(ends[:, None] - ends[None], axis=-1)
    iu = np.triu_indices(len(curves), 1)
    return float(d[iu].min())
