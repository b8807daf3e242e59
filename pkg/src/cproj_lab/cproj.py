"""Solutions of the linear metrizability system and the metric ↔ solution maps.

A solution is a hermitian symmetric (0,2) field ``A`` with
``(∇_Z A)(X, Y) = g(Z,X)λ(Y) + g(Z,Y)λ(X) + ω(Z,X)λ(JY) + ω(Z,Y)λ(JX)``
where ``λ = ¼ d tr_g A``.  When the mobility is at least three, solutions
also satisfy ``∇λ = μ g + B A`` and ``dμ = 2B λ`` for a constant ``B``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import jets
from .chart import TensorField, christoffel_jet, covariant_derivative_jet
from .errors import BZero, DegenerateSolution, IndefiniteMetricWarning, NotHermitian
from .kahler import KahlerStructure


@dataclass
class CProjSolution:
    """A solution ``A`` with its gradient covector ``λ`` and, optionally, ``μ`` and ``B``."""

    ks: KahlerStructure
    A: TensorField
    lam: TensorField
    mu: TensorField | None = None
    B: float | None = None
    name: str = ""

    @property
    def Lambda(self) -> TensorField:
        g, lam = self.ks.g, self.lam
        return TensorField(g.dim, (1, 0), lambda x: jets.einsum("ij,j->i", jets.inv(g.at(x)), lam.at(x)),
                           name="Lambda")

    def with_mu(self, B: float) -> "CProjSolution":
        """Attach the μ determined by the trace of ``∇λ = μ g + B A``."""
        return CProjSolution(self.ks, self.A, self.lam, mu_field(self, B), B, self.name)


def trace_lambda(ks: KahlerStructure, A: TensorField) -> TensorField:
    """λ = ¼ d tr_g A."""
    g = ks.g

    def fn(x):
        tr = jets.einsum("ij,ij->", jets.inv(g.at(x)), A.at(x))
        return tr.derivative() * 0.25

    return TensorField(g.dim, (0, 1), fn, depth=1, name=f"lambda[{A.name}]")


def solution_from_tensor(ks: KahlerStructure, A: TensorField, lam: TensorField | None = None,
                         mu: TensorField | None = None, B: float | None = None, name: str = "") -> CProjSolution:
    return CProjSolution(ks, A, lam if lam is not None else trace_lambda(ks, A), mu, B, name or A.name)


def mu_field(sol: CProjSolution, B: float) -> TensorField:
    """μ = (tr_g ∇λ - B tr_g A) / (2n)."""
    g, lam, A = sol.ks.g, sol.lam, sol.A
    m = g.dim

    def fn(x):
        gj = g.at(x)
        gi = jets.inv(gj.truncate(gj.order - 1))
        nl = covariant_derivative_jet(lam.at(x), christoffel_jet(gj), (0, 1))
        trA = jets.einsum("ij,ij->", gi, A.at(x).truncate(gi.order))
        return (jets.einsum("ij,ij->", gi, nl) - trA * B) * (1.0 / m)

    return TensorField(m, (0, 0), fn, depth=1, name="mu")


# -- residuals ------------------------------------------------------------------

def _frame_norm(T: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Pointwise g-norm of a covariant tensor T[n, a, b, ...]."""
    k = T.ndim - 1
    letters = "abcdefgh"[:k]
    up = "pqrstuvw"[:k]
    expr = ",".join(["n" + letters] + [f"n{l}{u}" for l, u in zip(letters, up)] + ["n" + up])
    val = np.einsum(expr + "->n", T, *([ginv] * k), T)
    return np.sqrt(np.maximum(val, 0.0))


@dataclass
class MainAResult:
    max_abs: float
    max_gnorm: float
    nabla_A_max: float
    residual: np.ndarray


def mainA_rhs(g0, om0, J0, lam0):
    lJ = np.einsum("nk,nkj->nj", lam0, J0)
    return (np.einsum("nzx,ny->nxyz", g0, lam0) + np.einsum("nzy,nx->nxyz", g0, lam0)
            + np.einsum("nzx,ny->nxyz", om0, lJ) + np.einsum("nzy,nx->nxyz", om0, lJ))


def mainA_residual(sol: CProjSolution, points) -> MainAResult:
    """Residual of the metrizability equation; index order [x, y, z] = (∇_z A)(x, y)."""
    pts = np.atleast_2d(points)
    ks = sol.ks
    gj = ks.g.jet(pts, 1)
    nA = covariant_derivative_jet(sol.A.jet(pts, 1), christoffel_jet(gj), (0, 2)).value
    rhs = mainA_rhs(gj.value, ks.omega(pts), ks.J(pts), sol.lam(pts))
    res = nA - rhs
    ginv = np.linalg.inv(gj.value)
    return MainAResult(float(np.abs(res).max()), float(_frame_norm(res, ginv).max()),
                       float(np.abs(nA).max()), res)


def hermitian_residual(sol: CProjSolution, points) -> float:
    pts = np.atleast_2d(points)
    A = sol.A(pts)
    J = sol.ks.J(pts)
    herm = np.einsum("nki,nkl,nlj->nij", J, A, J) - A
    sym = A - np.swapaxes(A, 1, 2)
    return float(max(np.abs(herm).max(), np.abs(sym).max()))


def require_hermitian(sol: CProjSolution, points, tol: float = 1e-8) -> None:
    r = hermitian_residual(sol, points)
    if r > tol:
        raise NotHermitian(f"A fails J-invariance or symmetry by {r:.3e}")


def trace_identity_residual(sol: CProjSolution, points) -> float:
    """|λ - ¼ d tr_g A| for a solution whose λ was supplied explicitly."""
    ref = trace_lambda(sol.ks, sol.A)
    return float(np.abs(sol.lam(points) - ref(points)).max())


@dataclass
class TripleFit:
    B: float
    mu: np.ndarray
    residual: float
    B_spread: float


def _nabla_lambda(sol: CProjSolution, pts):
    gj = sol.ks.g.jet(pts, 1)
    return covariant_derivative_jet(sol.lam.jet(pts, 1), christoffel_jet(gj), (0, 1)).value, gj.value


def fit_mu_B(sol: CProjSolution, points) -> TripleFit:
    """Least-squares μ (per point) and a single B from ``∇λ = μ g + B A``."""
    pts = np.atleast_2d(points)
    nl, g0 = _nabla_lambda(sol, pts)
    A0 = sol.A(pts)
    N, m = pts.shape
    rows = m * m
    M = np.zeros((N * rows, N + 1))
    rhs = nl.reshape(N * rows)
    for i in range(N):
        M[i * rows:(i + 1) * rows, i] = g0[i].ravel()
        M[i * rows:(i + 1) * rows, N] = A0[i].ravel()
    coef, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    resid = float(np.abs(M @ coef - rhs).max())
    per = []
    for i in range(N):
        Mi = np.stack([g0[i].ravel(), A0[i].ravel()], axis=1)
        if np.linalg.matrix_rank(Mi, tol=1e-9) == 2:
            per.append(np.linalg.lstsq(Mi, nl[i].ravel(), rcond=None)[0][1])
    spread = float(np.ptp(per)) if per else float("nan")
    return TripleFit(float(coef[N]), coef[:N], resid, spread)


def fit_B_given_mu(sol: CProjSolution, points) -> TripleFit:
    """Single B from ``∇λ - μg = B A`` and ``dμ = 2Bλ`` with the solution's own μ.

    Needed in real dimension 2, where A is a multiple of g and the μ-free fit
    cannot separate μ from B.
    """
    if sol.mu is None:
        raise ValueError("fit needs μ")
    pts = np.atleast_2d(points)
    nl, g0 = _nabla_lambda(sol, pts)
    mu = sol.mu.jet(pts, 1)
    lhs = np.concatenate([sol.A(pts).ravel(), 2.0 * sol.lam(pts).ravel()])
    rhs = np.concatenate([(nl - mu.value[:, None, None] * g0).ravel(), mu.c[1].ravel()])
    B = float(lhs @ rhs / (lhs @ lhs))
    return TripleFit(B, mu.value, float(np.abs(B * lhs - rhs).max()), 0.0)


def triple_residual(sol: CProjSolution, points) -> dict:
    """Residuals of all three equations for a solution carrying μ and B."""
    if sol.mu is None or sol.B is None:
        raise ValueError("triple residual needs μ and B")
    pts = np.atleast_2d(points)
    nl, g0 = _nabla_lambda(sol, pts)
    mu = sol.mu.jet(pts, 1)
    A0 = sol.A(pts)
    eq2 = nl - mu.value[:, None, None] * g0 - sol.B * A0
    eq3 = mu.c[1] - 2.0 * sol.B * sol.lam(pts)
    return {
        "mainA": mainA_residual(sol, pts).max_abs,
        "nabla_lambda": float(np.abs(eq2).max()),
        "d_mu": float(np.abs(eq3).max()),
    }


def tanno_residual(sol: CProjSolution, points) -> float:
    """Third-order equation on μ; needs μ with three derivatives."""
    if sol.mu is None or sol.B is None:
        raise ValueError("tanno residual needs μ and B")
    pts = np.atleast_2d(points)
    ks = sol.ks
    B = sol.B
    gj = ks.g.jet(pts, 2)
    gam = christoffel_jet(gj)
    mj = sol.mu.jet(pts, 3)
    dmu = mj.derivative()
    hess = covariant_derivative_jet(dmu, gam, (0, 1))
    third = covariant_derivative_jet(hess, gam.truncate(1), (0, 2)).value  # [y, z, x]
    g0 = gj.value
    om = ks.omega(pts)
    dm = dmu.value
    J0 = ks.J(pts)
    dmJ = np.einsum("nk,nkj->nj", dm, J0)
    rhs = B * (2.0 * np.einsum("nx,nyz->nyzx", dm, g0)
               + np.einsum("nz,nxy->nyzx", dm, g0) + np.einsum("ny,nxz->nyzx", dm, g0)
               + np.einsum("nz,nxy->nyzx", dmJ, om) + np.einsum("ny,nxz->nyzx", dmJ, om))
    return float(np.abs(third - rhs).max())


# -- c-projective vector fields ----------------------------------------------------------

def lie_derivative_metric(v: TensorField, g: TensorField) -> TensorField:
    def fn(x):
        vj = v.at(x)
        gj = g.at(x)
        dv = vj.derivative()  # dv[k, i] = ∂_i v^k
        dg = gj.derivative()  # dg[i, j, k] = ∂_k g_ij
        g1 = gj.truncate(dv.order)
        v1 = vj.truncate(dv.order)
        return (jets.einsum("ijk,k->ij", dg, v1) + jets.einsum("kj,ki->ij", g1, dv)
                + jets.einsum("ik,kj->ij", g1, dv))

    return TensorField(g.dim, (0, 2), fn, depth=1, name=f"L_{v.name}g")


def cproj_field_tensor(v: TensorField, g: TensorField) -> TensorField:
    """f(v) = -½ (L_v g - tr_g(L_v g)/(2(n+1)) g)."""
    L = lie_derivative_metric(v, g)
    m = g.dim
    n = m // 2

    def fn(x):
        Lj = L.at(x)
        gj = g.at(x)
        tr = jets.einsum("ij,ij->", jets.inv(gj), Lj)
        return (Lj - gj * tr * (1.0 / (2 * (n + 1)))) * -0.5

    return TensorField(m, (0, 2), fn, name=f"f({v.name})")


def cproj_field_residual(v: TensorField, ks: KahlerStructure, points) -> float:
    sol = solution_from_tensor(ks, cproj_field_tensor(v, ks.g))
    return mainA_residual(sol, points).max_abs


@dataclass
class EssentialField:
    Lambda: TensorField
    residual: float  # |f(Λ) + B A - c g| with pointwise c
    constant_spread: float


def essential_field_from_solution(sol: CProjSolution, points) -> EssentialField:
    """Vector field Λ = g⁻¹λ; checks f(Λ) ≡ -B·A modulo constant multiples of g."""
    if sol.B is None or abs(sol.B) < 1e-12:
        raise BZero("essential field construction needs B != 0")
    pts = np.atleast_2d(points)
    Lam = sol.Lambda
    f = cproj_field_tensor(Lam, sol.ks.g)
    D = f(pts) + sol.B * sol.A(pts)
    g0 = sol.ks.g(pts)
    m = g0.shape[-1]
    c = np.einsum("nij,nij->n", np.linalg.inv(g0), D) / m
    res = D - c[:, None, None] * g0
    return EssentialField(Lam, float(np.abs(res).max()), float(np.ptp(c)))


# -- metric pairs ------------------------------------------------------------------------

@dataclass
class MetricPair:
    """Data attached to a pair of c-projectively equivalent metrics."""

    g: TensorField
    g_tilde: TensorField
    phi: TensorField
    Phi: TensorField
    A: TensorField
    lam: TensorField


def solution_from_metric_pair(g: TensorField, g_tilde: TensorField) -> MetricPair:
    m = g.dim
    n = m // 2

    def logratio(x):
        lt, _ = jets.logabsdet(g_tilde.at(x))
        l0, _ = jets.logabsdet(g.at(x))
        return lt - l0

    def A_fn(x):
        gj = g.at(x)
        fac = jets.exp(logratio(x) * (1.0 / (2 * (n + 1))))
        return jets.einsum("ij,jk->ik", jets.einsum("ij,jk->ik", gj, jets.inv(g_tilde.at(x))), gj) * fac

    def phi_fn(x):
        return logratio(x) * (1.0 / (4 * (n + 1)))

    A = TensorField(m, (0, 2), A_fn, name="A(g,g~)")
    phi = TensorField(m, (0, 0), phi_fn, name="phi")
    Phi = TensorField(m, (0, 1), lambda x: phi.at(x).derivative(), depth=1, name="Phi")

    def lam_fn(x):
        PG = jets.einsum("s,sr->r", Phi.at(x), jets.inv(g.at(x)))
        return jets.einsum("r,ri->i", PG, A.at(x)) * -1.0

    lam = TensorField(m, (0, 1), lam_fn, name="lambda(g,g~)")
    return MetricPair(g, g_tilde, phi, Phi, A, lam)


def pair_connection_residual(pair: MetricPair, J: TensorField, points) -> float:
    """Difference of Levi-Civita connections against the Φ-formula."""
    pts = np.atleast_2d(points)
    G = christoffel_jet(pair.g.jet(pts, 1)).value
    Gt = christoffel_jet(pair.g_tilde.jet(pts, 1)).value
    P = pair.Phi(pts)
    J0 = J(pts)
    m = P.shape[-1]
    d = np.eye(m)
    PJ = np.einsum("ns,nsk->nk", P, J0)
    expect = (np.einsum("ij,nk->nijk", d, P) + np.einsum("ik,nj->nijk", d, P)
              - np.einsum("nij,nk->nijk", J0, PJ) - np.einsum("nik,nj->nijk", J0, PJ))
    return float(np.abs(Gt - G - expect).max())


def metric_from_solution(g: TensorField, A: TensorField, check_points=None) -> TensorField:
    """g̃ = det(g⁻¹A)^{-1/2} g A⁻¹ g; warns when the result is indefinite at ``check_points``."""

    def fn(x):
        gj = g.at(x)
        Aj = A.at(x)
        A1 = jets.einsum("ij,jk->ik", jets.inv(gj), Aj)
        ld, _ = jets.logabsdet(A1)
        fac = jets.exp(ld * -0.5)
        return jets.einsum("ij,jk->ik", jets.einsum("ij,jk->ik", gj, jets.inv(Aj)), gj) * fac

    gt = TensorField(g.dim, (0, 2), fn, name=f"g~[{A.name}]")
    if check_points is not None:
        pts = np.atleast_2d(check_points)
        A1 = np.linalg.solve(g(pts), A(pts))
        dets = np.linalg.det(A1)
        if np.any(np.abs(dets) < 1e-10):
            raise DegenerateSolution("solution is degenerate at a sample point")
        ev = np.linalg.eigvalsh(gt(pts))
        if np.any(ev <= 0):
            warnings.warn("metric from solution is not positive definite", IndefiniteMetricWarning)
    return gt


@dataclass
class TransformedConstants:
    B_tilde: float
    B_spread: float
    Lambda_tilde: TensorField
    det_A: TensorField


def transform_constants(sol: CProjSolution, mu_values, points) -> TransformedConstants:
    """B̃ = (det A)^{1/2}(g(A⁻¹Λ, Λ) - μ) and Λ̃ = -(det A)^{1/2} A⁻¹Λ, A as (1,1)."""
    pts = np.atleast_2d(points)
    g0 = sol.ks.g(pts)
    A0 = sol.A(pts)
    lam = sol.lam(pts)
    d = np.linalg.det(np.linalg.solve(g0, A0))
    Ainv_lam = np.linalg.solve(A0, lam[..., None])[..., 0]
    q = np.einsum("ni,ni->n", Ainv_lam, lam)
    Bt = np.sqrt(np.abs(d)) * (q - np.asarray(mu_values))
    g, A, lamf = sol.ks.g, sol.A, sol.lam

    def Lt_fn(x):
        gj, Aj = g.at(x), A.at(x)
        ld, _ = jets.logabsdet(jets.einsum("ij,jk->ik", jets.inv(gj), Aj))
        return jets.einsum("ij,j->i", jets.inv(Aj), lamf.at(x)) * jets.exp(ld * 0.5) * -1.0

    def det_fn(x):
        ld, _ = jets.logabsdet(jets.einsum("ij,jk->ik", jets.inv(g.at(x)), A.at(x)))
        return jets.exp(ld)

    return TransformedConstants(float(Bt.mean()), float(np.ptp(Bt)),
                                TensorField(g.dim, (1, 0), Lt_fn, name="Lambda~"),
                                TensorField(g.dim, (0, 0), det_fn, name="detA"))


def transfer_solution(g: TensorField, g_tilde: TensorField, A_pair: TensorField, A_other: TensorField,
                      name: str = "") -> TensorField:
    """Map a solution for g to one for g̃ = metric_from_solution(g, A_pair).

    As endomorphisms the map is A' ↦ A' ∘ A_pair⁻¹; the result is lowered with g̃
    (any constant multiple of g̃ may be passed instead).
    """

    def fn(x):
        gi = jets.inv(g.at(x))
        Ao = jets.einsum("ij,jk->ik", gi, A_other.at(x))
        Ap = jets.einsum("ij,jk->ik", gi, A_pair.at(x))
        E = jets.einsum("ij,jk->ik", Ao, jets.inv(Ap))
        return jets.symmetrize(jets.einsum("ij,jk->ik", g_tilde.at(x), E))

    return TensorField(g.dim, (0, 2), fn, name=name or f"T({A_other.name})")


# -- Einstein relations ----------------------------------------------------------------------

def einstein_relations(pair: MetricPair, J: TensorField, B: float, B_tilde: float, points) -> dict:
    """Scalar-curvature relation for B and the Ricci / Kähler-Einstein transformation laws."""
    from .chart import riemann_suite

    pts = np.atleast_2d(points)
    s = riemann_suite(pair.g, pts)
    st = riemann_suite(pair.g_tilde, pts)
    m = pts.shape[-1]
    n = m // 2
    gj = pair.g.jet(pts, 1)
    nP = covariant_derivative_jet(pair.Phi.jet(pts, 1), christoffel_jet(gj), (0, 1)).value
    P = pair.Phi(pts)
    PJ = np.einsum("ns,nsk->nk", P, J(pts))
    Q = nP - np.einsum("na,nb->nab", P, P) + np.einsum("na,nb->nab", PJ, PJ)
    ric_expect = s.ricci - 2.0 * (n + 1) * Q
    ke = B * s.metric - B_tilde * st.metric + Q
    return {
        "scalar_B": float(np.abs(B + s.scalar / (4.0 * n * (n + 1))).max()),
        "scalar_B_tilde": float(np.abs(B_tilde + st.scalar / (4.0 * n * (n + 1))).max()),
        "ricci_transformation": float(np.abs(st.ricci - ric_expect).max()),
        "kahler_einstein_relation": float(np.abs(ke).max()),
    }
