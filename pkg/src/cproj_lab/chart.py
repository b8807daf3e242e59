"""Coordinate charts, tensor fields and Levi-Civita calculus.

Index conventions
-----------------
* ``(p, q)`` tensors store contravariant indices first, covariant after.
* Christoffel symbols ``gamma[i, j, k]`` are ``Γ^i_{jk}``.
* Curvature ``riem[i, j, k, l]`` is the ``∂_i`` component of
  ``R(∂_k, ∂_l) ∂_j`` with ``R(X, Y) = [∇_X, ∇_Y] - ∇_[X, Y]``.
* Covariant derivatives append the differentiation index last, so
  ``nabla_T[..., c]`` is ``(∇_{∂_c} T)[...]``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from threading import Lock
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets
from .errors import DegenerateMetric, PathLeavesDomain, UnsupportedRank, ZeroVelocity
from .jets import Jet

DET_TOL = 1e-10
DEFAULT_STEPS = 1000


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box; every chart domain in the package is one."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    def contains(self, points, slack: float = 1e-12) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= np.array(self.lo) - slack) & (p <= np.array(self.hi) + slack), axis=-1)

    def shrink(self, factor: float) -> "Box":
        c = self.center
        half = 0.5 * (np.array(self.hi) - np.array(self.lo)) * factor
        return Box(tuple(c - half), tuple(c + half))

    def sample(self, n: int = 20, seed: int = 0, margin: float = 0.05) -> np.ndarray:
        """Scrambled Halton points, kept ``margin`` (relative) away from faces."""
        inner = self.shrink(1.0 - 2.0 * margin)
        eng = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        u = eng.random(n)
        return qmc.scale(u, inner.lo, inner.hi)

    @staticmethod
    def product(boxes: Sequence["Box"]) -> "Box":
        return Box(sum((b.lo for b in boxes), ()), sum((b.hi for b in boxes), ()))


class _JetCache:
    """Small bounded cache of evaluated jets keyed by point bytes and order."""

    def __init__(self, size: int = 64):
        self._d: OrderedDict = OrderedDict()
        self._size = size
        self._lock = Lock()

    def get(self, key):
        with self._lock:
            v = self._d.get(key)
            if v is not None:
                self._d.move_to_end(key)
            return v

    def put(self, key, value):
        with self._lock:
            self._d[key] = value
            if len(self._d) > self._size:
                self._d.popitem(last=False)


class TensorField:
    """Smooth tensor field on a chart given by a jet-level component function.

    ``fn`` receives the identity-seeded coordinate jet ``x`` (shape ``(dim,)``)
    and returns a jet, or nested lists of jets and numbers, holding the
    components.  ``depth`` counts how many derivatives ``fn`` itself takes of
    jets built from ``x``; evaluating at order ``k`` seeds ``x`` at order
    ``k + depth``.  Other fields are used inside ``fn`` through :meth:`at`.
    """

    def __init__(self, dim: int, rank: tuple, fn: Callable, depth: int = 0, name: str = ""):
        self.dim = int(dim)
        self.rank = tuple(rank)
        self.fn = fn
        self.depth = int(depth)
        self.name = name
        self._cache = _JetCache()

    @property
    def shape(self) -> tuple:
        return (self.dim,) * sum(self.rank)

    def __repr__(self) -> str:
        return f"TensorField({self.name or '?'}, dim={self.dim}, rank={self.rank})"

    def jet(self, points, order: int = 0) -> Jet:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected points of dimension {self.dim}")
        key = (pts.shape, pts.tobytes(), order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        x = Jet.variables(pts, order + self.depth)
        out = jets.stack(self.fn(x), batch=pts.shape[0], nvars=self.dim, order=order)
        out = jets.symmetrize(out.truncate(order))
        for ck in out.c:
            ck.setflags(write=False)
        self._cache.put(key, out)
        return out

    def __call__(self, points) -> np.ndarray:
        """Component values at points (N, dim), or at a single point."""
        p = np.asarray(points, dtype=float)
        v = self.jet(p, 0).value
        return v[0] if p.ndim == 1 else v

    def at(self, y: Jet) -> Jet:
        """Evaluate on a coordinate jet ``y`` by composition (chain rule)."""
        inner = self.jet(y.value, y.order)
        if y.identity and y.nvars == self.dim:
            return inner
        return jets.compose(inner, y)


def constant_field(value, rank: tuple, name: str = "") -> TensorField:
    arr = np.asarray(value, dtype=float)
    dim = arr.shape[0] if arr.ndim else 0
    return TensorField(dim, rank, lambda x: Jet.constant(arr, x.batch, x.nvars, x.order), name=name)


def scalar_field(dim: int, fn: Callable, depth: int = 0, name: str = "") -> TensorField:
    return TensorField(dim, (0, 0), fn, depth, name)


def metric_field(dim: int, fn: Callable, depth: int = 0, name: str = "g") -> TensorField:
    return TensorField(dim, (0, 2), fn, depth, name)


# -- jet-level Levi-Civita calculus --------------------------------------------

def christoffel_jet(g: Jet) -> Jet:
    """Christoffel jet of one order less than the metric jet ``g``."""
    k = g.order - 1
    ginv = jets.inv(g.truncate(k))
    dg = g.derivative()  # dg[a, b, c] = ∂_c g_ab
    s = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
    # s[l, j, k] = ∂_k g_lj + ∂_j g_lk - ∂_l g_jk
    return jets.einsum("il,ljk->ijk", ginv, s) * 0.5


def riemann_from_christoffel(gam: Jet) -> Jet:
    dg = gam.derivative()  # dg[i, j, k, l] = ∂_l Γ^i_jk
    g0 = gam.truncate(gam.order - 1)
    lin = dg.transpose(0, 2, 3, 1) - dg.transpose(0, 2, 1, 3)
    # lin[i, j, k, l] = ∂_k Γ^i_lj - ∂_l Γ^i_kj
    quad = jets.einsum("ikp,plj->ijkl", g0, g0)
    return lin + quad - quad.transpose(0, 1, 3, 2)


def christoffel_field(g: TensorField) -> TensorField:
    return TensorField(g.dim, (1, 2), lambda x: christoffel_jet(g.at(x)), depth=1, name=f"Gamma[{g.name}]")


def riemann_field(g: TensorField) -> TensorField:
    return TensorField(g.dim, (1, 3), lambda x: riemann_from_christoffel(christoffel_jet(g.at(x))),
                       depth=2, name=f"Riem[{g.name}]")


def ricci_field(g: TensorField) -> TensorField:
    def fn(x):
        r = riemann_from_christoffel(christoffel_jet(g.at(x)))
        return jets.einsum("kjkl->lj", r)
    return TensorField(g.dim, (0, 2), fn, depth=2, name=f"Ric[{g.name}]")


def covariant_derivative_jet(t: Jet, gam: Jet, rank: tuple) -> Jet:
    """∇T as a jet one order below ``t``; supported ranks (0,k), (1,0), (1,1)."""
    p, q = rank
    k = t.order - 1
    dt = t.derivative()
    g = gam.truncate(k)
    tt = t.truncate(k)
    letters = "abcdefgh"
    if p == 0:
        out = dt
        idx = letters[:q]
        for s in range(q):
            src = idx[:s] + "p" + idx[s + 1:]
            out = out - jets.einsum(f"pz{idx[s]},{src}->{idx}z", g, tt)
        return out
    if (p, q) == (1, 0):
        return dt + jets.einsum("izp,p->iz", g, tt)
    if (p, q) == (1, 1):
        return dt + jets.einsum("izp,pj->ijz", g, tt) - jets.einsum("pzj,ip->ijz", g, tt)
    raise UnsupportedRank(f"covariant derivative of rank {rank}")


def covariant_derivative(t: TensorField, g: TensorField) -> TensorField:
    """Field of ∇T with the differentiation index appended last."""
    p, q = t.rank
    if not (p == 0 or (p, q) in ((1, 0), (1, 1))):
        raise UnsupportedRank(f"covariant derivative of rank {t.rank}")

    def fn(x):
        return covariant_derivative_jet(t.at(x), christoffel_jet(g.at(x)), t.rank)

    return TensorField(t.dim, (p, q + 1), fn, depth=1, name=f"nabla[{t.name}]")


# -- pointwise suite --------------------------------------------------------------

@dataclass
class CurvatureSuite:
    """Curvature data at a batch of points."""

    points: np.ndarray
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray

    def lowered_riemann(self) -> np.ndarray:
        return np.einsum("nim,nmjkl->nijkl", self.metric, self.riemann)


def degeneracy_ratio(gval: np.ndarray) -> np.ndarray:
    """|det g| / Π‖row_i‖, in [0, 1] and invariant under rescaling each coordinate."""
    g = gval[None] if gval.ndim == 2 else gval
    d = np.abs(np.linalg.det(g))
    rows = np.prod(np.linalg.norm(g, axis=-1), axis=-1)
    return np.where(rows > 0, d / np.where(rows > 0, rows, 1.0), 0.0)


def check_nondegenerate(gval: np.ndarray) -> None:
    d = degeneracy_ratio(gval)
    if np.any(d < DET_TOL):
        raise DegenerateMetric(f"normalized |det g| = {d.min():.3e} below {DET_TOL}")


def christoffel(g: TensorField, points) -> np.ndarray:
    """Γ^i_jk at points (N, m) or at one point (m,)."""
    p = np.asarray(points, dtype=float)
    gj = g.jet(np.atleast_2d(p), 1)
    check_nondegenerate(gj.value)
    out = christoffel_jet(gj).value
    return out[0] if p.ndim == 1 else out


def riemann_suite(g: TensorField, points) -> CurvatureSuite:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gj = g.jet(pts, 2)
    check_nondegenerate(gj.value)
    gam = christoffel_jet(gj)
    riem = riemann_from_christoffel(gam).value
    ric = np.einsum("nkjkl->nlj", riem)
    ginv = np.linalg.inv(gj.value)
    scal = np.einsum("nij,nij->n", ginv, ric)
    return CurvatureSuite(pts, gj.value, gam.value, riem, ric, scal)


# -- ODE integration ---------------------------------------------------------------

def _segment_points(path) -> np.ndarray:
    pts = np.asarray(path, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("path needs at least two vertices")
    return pts


def transport_matrix(g: TensorField, path, steps: int = DEFAULT_STEPS, box: Box | None = None) -> np.ndarray:
    """Parallel transport map along a polyline; each segment is a unit parameter."""
    pts = _segment_points(path)
    if box is not None and not np.all(box.contains(pts)):
        raise PathLeavesDomain("path vertex outside the chart box")
    m = pts.shape[1]
    P = np.eye(m)[None]
    for a, b in zip(pts[:-1], pts[1:]):
        P = transport_segments(g, a[None], b[None], P, steps)
    return P[0]


def transport_segments(g: TensorField, a: np.ndarray, b: np.ndarray, P: np.ndarray, steps: int) -> np.ndarray:
    """Batched RK4 transport of matrices P (B, m, r) along straight segments a→b."""
    vel = b - a
    h = 1.0 / steps

    def rhs(s, Q):
        gam = christoffel_jet(g.jet(a + s * vel, 1)).value
        return -np.einsum("bijk,bj,bkr->bir", gam, vel, Q)

    s = 0.0
    for _ in range(steps):
        k1 = rhs(s, P)
        k2 = rhs(s + 0.5 * h, P + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, P + 0.5 * h * k2)
        k4 = rhs(s + h, P + h * k3)
        P = P + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return P


def parallel_transport(g: TensorField, path, v, steps: int = DEFAULT_STEPS, box: Box | None = None) -> np.ndarray:
    """Transport a vector (m,) or a (1,1) tensor (m, m) along a polyline."""
    P = transport_matrix(g, path, steps, box)
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return P @ v
    if v.ndim == 2:
        return P @ v @ np.linalg.inv(P)
    raise UnsupportedRank("parallel transport supports vectors and (1,1) tensors")


@dataclass
class Curve:
    """Sampled curve with coordinate velocity and acceleration."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    meta: dict = field(default_factory=dict)


def integrate_second_order(accel: Callable, p, v, T: float, steps: int, box: Box | None = None) -> Curve:
    """RK4 for x'' = accel(t, x, x'); ``accel`` works on single states."""
    x = np.asarray(p, dtype=float).copy()
    u = np.asarray(v, dtype=float).copy()
    h = T / steps
    ts = np.linspace(0.0, T, steps + 1)
    xs = np.empty((steps + 1, x.size))
    vs = np.empty_like(xs)
    acc = np.empty_like(xs)
    xs[0], vs[0] = x, u
    acc[0] = accel(0.0, x, u)
    for n in range(steps):
        t = ts[n]
        k1x, k1v = u, accel(t, x, u)
        k2x, k2v = u + 0.5 * h * k1v, accel(t + 0.5 * h, x + 0.5 * h * k1x, u + 0.5 * h * k1v)
        k3x, k3v = u + 0.5 * h * k2v, accel(t + 0.5 * h, x + 0.5 * h * k2x, u + 0.5 * h * k2v)
        k4x, k4v = u + h * k3v, accel(t + h, x + h * k3x, u + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        u = u + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if box is not None and not box.contains(x)[0]:
            raise PathLeavesDomain(f"curve left the domain at t = {ts[n + 1]:.6g}")
        xs[n + 1], vs[n + 1] = x, u
        acc[n + 1] = accel(ts[n + 1], x, u)
    return Curve(ts, xs, vs, acc)


def geodesic_integrate(g: TensorField, p, v, T: float = 1.0, steps: int | None = None,
                       box: Box | None = None) -> Curve:
    """Geodesic with initial point and velocity; ``steps`` defaults to 1000 per unit time."""
    if np.linalg.norm(v) == 0.0:
        raise ZeroVelocity("geodesic needs a nonzero initial velocity")
    steps = steps or max(1, int(round(DEFAULT_STEPS * T)))

    def accel(t, x, u):
        gam = christoffel_jet(g.jet(x[None], 1)).value[0]
        return -np.einsum("ijk,j,k->i", gam, u, u)

    return integrate_second_order(accel, p, v, T, steps, box)


def energy(g: TensorField, curve: Curve) -> np.ndarray:
    gv = g(curve.x)
    return np.einsum("ni,nij,nj->n", curve.v, gv, curve.v)
