"""Kähler structures on charts and their residual checks.

The Kähler form is ``ω = g(·, J·)``, i.e. ``ω_ij = g_ik J^k_j``, and a
symplectic potential ``τ`` satisfies ``dτ = ω`` with
``(dτ)_ij = ∂_i τ_j - ∂_j τ_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from .chart import Box, TensorField, christoffel_jet, covariant_derivative_jet, riemann_suite
from .errors import NotEinstein, QuadratureFailure
from .jets import Jet

QUAD_NODES = 24


@dataclass
class KahlerStructure:
    """Metric, complex structure and optional potential on a coordinate box."""

    g: TensorField
    J: TensorField
    box: Box
    tau: TensorField | None = None
    name: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def n(self) -> int:
        return self.g.dim // 2

    @property
    def omega(self) -> TensorField:
        if "omega" not in self.extras:
            self.extras["omega"] = kahler_form(self.g, self.J)
        return self.extras["omega"]

    def potential(self) -> TensorField:
        """The declared potential, or one built by homotopy quadrature."""
        if self.tau is None:
            self.tau = potential_from_omega(self.omega, self.box)
        return self.tau

    def sample(self, n: int = 20, seed: int = 0) -> np.ndarray:
        return self.box.sample(n, seed)


def kahler_form(g: TensorField, J: TensorField) -> TensorField:
    return TensorField(g.dim, (0, 2), lambda x: jets.einsum("ik,kj->ij", g.at(x), J.at(x)),
                       name=f"omega[{g.name}]")


# -- primitives by straight-line quadrature -----------------------------------------

def _gauss(nodes: int):
    s, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (s + 1.0), 0.5 * w


def potential_from_omega(omega: TensorField, box: Box, base=None, nodes: int = QUAD_NODES) -> TensorField:
    """Primitive τ with dτ = ω on a star-shaped box via the homotopy operator."""
    p0 = box.center if base is None else np.asarray(base, dtype=float)
    s_nodes, weights = _gauss(nodes)

    def fn(x: Jet):
        d = x - p0
        acc = None
        for s, w in zip(s_nodes, weights):
            q = d * s + p0
            term = jets.einsum("ij,i->j", omega.at(q), d) * (w * s)
            acc = term if acc is None else acc + term
        return acc

    return TensorField(omega.dim, (0, 1), fn, name="tau")


def line_primitive(alpha: TensorField, base, nodes: int = QUAD_NODES) -> TensorField:
    """Function f with df = α for a closed 1-form α, integrated along rays from ``base``."""
    p0 = np.asarray(base, dtype=float)
    s_nodes, weights = _gauss(nodes)

    def fn(x: Jet):
        d = x - p0
        acc = None
        for s, w in zip(s_nodes, weights):
            q = d * s + p0
            term = jets.einsum("i,i->", alpha.at(q), d) * w
            acc = term if acc is None else acc + term
        return acc

    return TensorField(alpha.dim, (0, 0), fn, name="primitive")


def check_quadrature(prim: TensorField, alpha: TensorField, points, tol: float = 1e-9) -> float:
    """Max deviation of d(prim) from α; raises if above ``tol``."""
    dj = prim.jet(points, 1).c[1]
    err = float(np.abs(dj - alpha(points)).max())
    if err > tol:
        raise QuadratureFailure(f"primitive derivative off by {err:.3e}")
    return err


# -- residuals ------------------------------------------------------------------------

@dataclass
class KahlerReport:
    hermitian: float
    j_squared: float
    nijenhuis: float
    nabla_j: float
    d_omega: float
    d_tau: float | None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    @property
    def max(self) -> float:
        return max(v for v in self.__dict__.values() if v is not None)


def kahler_residuals(ks: KahlerStructure, points) -> KahlerReport:
    pts = np.atleast_2d(points)
    gj = ks.g.jet(pts, 1)
    Jj = ks.J.jet(pts, 1)
    g0, J0 = gj.value, Jj.value
    m = ks.dim
    herm = np.einsum("nki,nkl,nlj->nij", J0, g0, J0) - g0
    jsq = np.einsum("nik,nkj->nij", J0, J0) + np.eye(m)
    dJ = Jj.c[1]  # dJ[n, i, k, l] = ∂_l J^i_k
    t1 = np.einsum("nlj,nikl->nijk", J0, dJ)
    t2 = np.einsum("nil,nljk->nijk", J0, dJ)
    # N^i_jk = -(J^l_j ∂_l J^i_k - J^l_k ∂_l J^i_j) + J^i_l (∂_j J^l_k - ∂_k J^l_j)
    nij = -(t1 - t1.transpose(0, 1, 3, 2)) + (t2.transpose(0, 1, 3, 2) - t2)
    gam = christoffel_jet(gj)
    nabJ = covariant_derivative_jet(Jj, gam, (1, 1)).value
    om = ks.omega.jet(pts, 1).c[1]  # om[n, i, j, k] = ∂_k ω_ij
    dom = (np.einsum("nbca->nabc", om) + np.einsum("ncab->nabc", om) + np.einsum("nabc->nabc", om))
    dtau = None
    if ks.tau is not None:
        tj = ks.tau.jet(pts, 1).c[1]  # tj[n, j, i] = ∂_i τ_j
        dt = tj.transpose(0, 2, 1) - tj
        dtau = float(np.abs(dt - ks.omega(pts)).max())
    return KahlerReport(
        hermitian=float(np.abs(herm).max()),
        j_squared=float(np.abs(jsq).max()),
        nijenhuis=float(np.abs(nij).max()),
        nabla_j=float(np.abs(nabJ).max()),
        d_omega=float(np.abs(dom).max()),
        d_tau=dtau,
    )


def einstein_residual(ks: KahlerStructure, points):
    """Return (max |Ric - Scal/(2n) g|, mean Scal, spread of Scal)."""
    s = riemann_suite(ks.g, points)
    m = ks.dim
    res = s.ricci - (s.scalar / m)[:, None, None] * s.metric
    return float(np.abs(res).max()), float(s.scalar.mean()), float(np.ptp(s.scalar))


def require_einstein(ks: KahlerStructure, points, tol: float = 1e-6) -> float:
    res, scal, spread = einstein_residual(ks, points)
    if res > tol or spread > tol * max(1.0, abs(scal)):
        raise NotEinstein(f"Einstein residual {res:.3e}, scalar spread {spread:.3e}")
    return scal


def holomorphic_model(g0: np.ndarray, J0: np.ndarray) -> np.ndarray:
    """Lowered model tensor H_ijkl = g(H(∂_k, ∂_l)∂_j, ∂_i) with unit holomorphic curvature."""
    om = np.einsum("...ik,...kj->...ij", g0, J0)
    m = g0.shape[-1]
    d = np.eye(m)
    up = 0.25 * (np.einsum("...jl,ik->...ijkl", g0, d) - np.einsum("...jk,il->...ijkl", g0, d)
                 + np.einsum("...jl,...ik->...ijkl", om, J0) - np.einsum("...jk,...il->...ijkl", om, J0)
                 + 2.0 * np.einsum("...kl,...ij->...ijkl", om, J0))
    return np.einsum("...ai,...ijkl->...ajkl", g0, up)


def holomorphic_curvature_fit(ks: KahlerStructure, points):
    """Least-squares constant c with R ≈ cH and the resulting max residual."""
    s = riemann_suite(ks.g, points)
    R = s.lowered_riemann()
    H = holomorphic_model(s.metric, ks.J(s.points))
    c = float(np.sum(R * H) / np.sum(H * H))
    return c, float(np.abs(R - c * H).max())


def holomorphic_curvature_residual(ks: KahlerStructure, c: float, points) -> float:
    s = riemann_suite(ks.g, points)
    H = holomorphic_model(s.metric, ks.J(s.points))
    return float(np.abs(s.lowered_riemann() - c * H).max())


def make_structure(dim: int, g_fn: Callable, J_fn: Callable, box: Box, tau_fn: Callable | None = None,
                   name: str = "") -> KahlerStructure:
    g = TensorField(dim, (0, 2), g_fn, name=f"g[{name}]")
    J = TensorField(dim, (1, 1), J_fn, name=f"J[{name}]")
    tau = TensorField(dim, (0, 1), tau_fn, name=f"tau[{name}]") if tau_fn else None
    return KahlerStructure(g, J, box, tau, name)
