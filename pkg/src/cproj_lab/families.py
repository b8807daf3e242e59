"""Explicit solution families on flat space and on Fubini–Study charts.

Flat ``ℂ^n`` (B = 0) carries constant hermitian solutions, solutions with
constant λ, and solutions with λ = μ p♭ for constant μ.  On the normalized
Fubini–Study chart (B = -1) every solution is generated by a function
``μ = Re(w* H w) / (1 + |z|²)`` with ``w = (1, z)`` and ``H`` hermitian.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .catalog import standard_J
from .chart import TensorField, christoffel_jet, covariant_derivative_jet
from .cproj import CProjSolution
from .kahler import KahlerStructure


def _const(arr):
    arr = np.asarray(arr, dtype=float)
    return lambda x: jets.Jet.constant(arr, x.batch, x.nvars, x.order)


def random_hermitian_real(m: int, rng: np.random.Generator) -> np.ndarray:
    """Random real symmetric matrix commuting with the standard complex structure."""
    J = standard_J(m)
    S = rng.normal(size=(m, m))
    S = S + S.T
    return 0.5 * (S + J.T @ S @ J)


def flat_constant(ks: KahlerStructure, C: np.ndarray, name: str = "const") -> CProjSolution:
    m = ks.dim
    zero = np.zeros(m)
    return CProjSolution(ks, TensorField(m, (0, 2), _const(C), name=name),
                         TensorField(m, (0, 1), _const(zero), name="lambda0"),
                         TensorField(m, (0, 0), _const(0.0), name="mu0"), 0.0, name)


def flat_linear(ks: KahlerStructure, a: np.ndarray, C: np.ndarray | None = None,
                name: str = "linear") -> CProjSolution:
    """Constant λ = a with A = C + p⊙a + (pω)⊙(aJ), ⊙ the plain symmetric sum."""
    m = ks.dim
    a = np.asarray(a, dtype=float)
    J = standard_J(m)
    om = J  # ω = g J with g = I
    aJ = a @ J
    C = np.zeros((m, m)) if C is None else np.asarray(C, dtype=float)

    def A_fn(x):
        pw = jets.einsum("z,zx->x", x, om)
        out = (jets.einsum("x,y->xy", x, a) + jets.einsum("x,y->xy", a, x)
               + jets.einsum("x,y->xy", pw, aJ) + jets.einsum("x,y->xy", aJ, pw))
        return out + C

    return CProjSolution(ks, TensorField(m, (0, 2), A_fn, name=name),
                         TensorField(m, (0, 1), _const(a), name="lambda"),
                         TensorField(m, (0, 0), _const(0.0), name="mu"), 0.0, name)


def flat_quadratic(ks: KahlerStructure, mu0: float = 1.0, C: np.ndarray | None = None,
                   name: str = "quadratic") -> CProjSolution:
    """λ = μ₀ p♭ and A = μ₀(p♭⊗p♭ + p♭J⊗p♭J) + C."""
    m = ks.dim
    J = standard_J(m)
    C = np.zeros((m, m)) if C is None else np.asarray(C, dtype=float)

    def A_fn(x):
        pJ = jets.einsum("k,kj->j", x, J)
        return (jets.einsum("x,y->xy", x, x) + jets.einsum("x,y->xy", pJ, pJ)) * mu0 + C

    return CProjSolution(ks, TensorField(m, (0, 2), A_fn, name=name),
                         TensorField(m, (0, 1), lambda x: x * mu0, name="lambda"),
                         TensorField(m, (0, 0), _const(mu0), name="mu"), 0.0, name)


def random_hermitian_complex(n1: int, rng: np.random.Generator) -> np.ndarray:
    M = rng.normal(size=(n1, n1)) + 1j * rng.normal(size=(n1, n1))
    return 0.5 * (M + M.conj().T)


def fs_mu(ks: KahlerStructure, H: np.ndarray) -> TensorField:
    """μ = Re(w* H w)/(1 + |z|²) with w = (1, z_1, ..., z_n)."""
    n = ks.n
    H = np.asarray(H, dtype=complex)
    if H.shape != (n + 1, n + 1):
        raise ValueError("H must be (n+1) x (n+1)")

    def fn(x):
        xs = [1.0] + [x[2 * a] for a in range(n)]
        ys = [0.0] + [x[2 * a + 1] for a in range(n)]
        rho = 1.0 + sum(x[2 * a] * x[2 * a] + x[2 * a + 1] * x[2 * a + 1] for a in range(n))
        acc = 0.0
        for a in range(n + 1):
            for b in range(n + 1):
                re, im = H[a, b].real, H[a, b].imag
                if re == 0.0 and im == 0.0:
                    continue
                sym = xs[a] * xs[b] + ys[a] * ys[b]
                skew = xs[a] * ys[b] - ys[a] * xs[b]
                acc = acc + sym * re - skew * im
        if not isinstance(acc, jets.Jet):
            acc = jets.Jet.constant(acc, x.batch, x.nvars, x.order)
        return acc / rho

    return TensorField(ks.dim, (0, 0), fn, name="mu_H")


def fs_solution(ks: KahlerStructure, H: np.ndarray, name: str = "") -> CProjSolution:
    """Solution with B = -1 generated by μ: λ = -½ dμ, A = μ g - ∇λ."""
    mu = fs_mu(ks, H)
    g = ks.g
    m = ks.dim
    lam = TensorField(m, (0, 1), lambda x: mu.at(x).derivative() * -0.5, depth=1, name="lambda_H")

    def A_fn(x):
        gj = g.at(x)
        nl = covariant_derivative_jet(lam.at(x), christoffel_jet(gj), (0, 1))
        k = nl.order
        return gj.truncate(k) * mu.at(x).truncate(k) - nl

    A = TensorField(m, (0, 2), A_fn, depth=1, name=name or "A_H")
    return CProjSolution(ks, A, lam, mu, -1.0, name or "fs")


def hermitian_to_real(H: np.ndarray) -> np.ndarray:
    """Real symmetric form of a hermitian H in coordinates (Re w_0, Im w_0, Re w_1, ...)."""
    H = np.asarray(H, dtype=complex)
    k = H.shape[0]
    out = np.zeros((2 * k, 2 * k))
    for a in range(k):
        for b in range(k):
            h, s = H[a, b].real, H[a, b].imag
            out[2 * a:2 * a + 2, 2 * b:2 * b + 2] = [[h, -s], [s, h]]
    return out


def fs_solution_cone(ks: KahlerStructure, H: np.ndarray, name: str = "") -> CProjSolution:
    """The same family as :func:`fs_solution`, read off from the constant tensor H on ℂ^{n+1}.

    Only first derivatives of the cone chart enter A and λ, so they carry one
    more order of exact derivatives than the μ-generated route.
    """
    from .catalog import fs_cone_chart
    from .cone import conify

    n, m = ks.n, ks.dim
    HR = hermitian_to_real(H)
    phi = fs_cone_chart(n)
    cb = conify(ks)

    def Ahat_fn(x):
        D = phi(x).derivative()
        return jets.einsum("ai,aj->ij", D, jets.einsum("ab,bj->aj", _const(HR)(x), D))

    Ahat = TensorField(m + 2, (0, 2), Ahat_fn, depth=1, name="Ahat_H")

    def lift_point(x):
        one = jets.Jet.constant(1.0, x.batch, x.nvars, x.order)
        zero = jets.Jet.constant(0.0, x.batch, x.nvars, x.order)
        y = jets.stack([one, zero] + [x[i] for i in range(m)])
        return Ahat.at(y), cb.lifts.at(y)

    def A_fn(x):
        T, E = lift_point(x)
        return jets.einsum("ia,ib->ab", E, jets.einsum("ij,jb->ib", T, E))

    def lam_fn(x):
        T, E = lift_point(x)
        return jets.einsum("j,ja->a", T[0], E) * -1.0

    return CProjSolution(ks, TensorField(m, (0, 2), A_fn, name=name or "A_H"),
                         TensorField(m, (0, 1), lam_fn, name="lambda_H"),
                         fs_mu(ks, H), -1.0, name or "fs_cone")
