"""Moving a solution set to a c-projectively equivalent metric with B = -1.

For ``B ≠ 0`` a constant rescaling suffices.  For ``B = 0`` a solution with
``μ = 1`` is produced first (through the 1-form ``σ`` when ``μ`` vanishes),
then the family ``A(t) = t(λ⊗λ + λJ⊗λJ) + g`` gives metrics ``g̃_t`` whose
constant is ``B̃(t) = (det A(t))^{1/2}(t² g(A(t)⁻¹Λ, Λ) - t)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .chart import TensorField
from .cproj import (CProjSolution, metric_from_solution, mu_field, trace_lambda, transfer_solution,
                    transform_constants)
from .errors import DegenerateSolution, IndefiniteMetricWarning, LambdaVanishes, NotBZero
from .kahler import KahlerStructure, line_primitive

B_TOL = 1e-8


def _const(value):
    return lambda x: jets.Jet.constant(np.asarray(value, dtype=float), x.batch, x.nvars, x.order)


def transfer(sol: CProjSolution, target: KahlerStructure, A_pair: TensorField, B: float | None = None,
             name: str = "") -> CProjSolution:
    """Carry a solution for g to the metric ``target.g`` (a constant multiple of g̃ from A_pair).

    As endomorphisms ``A' ↦ A' ∘ A_pair⁻¹``; the result is lowered with ``target.g``.
    """
    A = transfer_solution(sol.ks.g, target.g, A_pair, sol.A, name=name)
    out = CProjSolution(target, A, trace_lambda(target, A), None, None, A.name)
    return out.with_mu(B) if B is not None else out


@dataclass
class Normalization:
    """Result of :func:`normalize_B`."""

    ks: KahlerStructure
    method: str  # "identity", "rescale" or "deform"
    B_in: float
    factor: float  # g' = factor · g̃
    t0: float | None = None
    B_tilde: float | None = None
    B_tilde_spread: float | None = None
    df_dt0: float | None = None
    seed: CProjSolution | None = None  # the μ = 1 solution used by the deformation
    A_pair: TensorField | None = None
    diagnostics: dict = field(default_factory=dict)

    def carry(self, sol: CProjSolution, name: str = "") -> CProjSolution:
        """Image of a solution for the original metric, with B = -1 and μ attached."""
        if self.method == "identity":
            return sol if sol.mu is not None else sol.with_mu(-1.0)
        if self.method == "rescale":
            c = self.factor
            A = TensorField(sol.A.dim, (0, 2), lambda x: sol.A.at(x) * c, name=sol.A.name)
            mu = None
            if sol.mu is not None:
                mu = TensorField(sol.A.dim, (0, 0), lambda x: sol.mu.at(x) * (1.0 / c), name="mu")
            out = CProjSolution(self.ks, A, sol.lam, mu, sol.B / c if sol.B is not None else -1.0,
                                name or sol.name)
            return out if mu is not None else out.with_mu(-1.0)
        return transfer(sol, self.ks, self.A_pair, B=-1.0, name=name)


def _rescaled(ks: KahlerStructure, c: float, name: str) -> KahlerStructure:
    g = ks.g
    tau = ks.potential()
    return KahlerStructure(TensorField(g.dim, (0, 2), lambda x: g.at(x) * c, name=f"g[{name}]"), ks.J, ks.box,
                           TensorField(g.dim, (0, 1), lambda x: tau.at(x) * c, name=f"tau[{name}]"), name)


def mu_one_solution(sol: CProjSolution, points, base=None) -> CProjSolution:
    """From a B = 0 solution with λ ≢ 0, a solution (A₁, λ₁, 1)."""
    ks = sol.ks
    pts = np.atleast_2d(points)
    lam_vals = sol.lam(pts)
    if np.abs(lam_vals).max() < 1e-10:
        raise LambdaVanishes("λ vanishes on the sample; the solution is affine")
    mu = sol.mu if sol.mu is not None else mu_field(sol, 0.0)
    mu_vals = mu(pts)
    g, J = ks.g, ks.J
    m = ks.dim
    if np.abs(mu_vals).max() > 1e-8:
        mu0 = float(mu_vals.mean())
        lam1 = TensorField(m, (0, 1), lambda x: sol.lam.at(x) * (1.0 / mu0), name="lambda1")
    else:
        p0 = ks.box.center if base is None else np.asarray(base, dtype=float)
        lam = sol.lam
        lamJ = TensorField(m, (0, 1), lambda x: jets.einsum("k,kj->j", lam.at(x), J.at(x)), name="lambdaJ")
        f = line_primitive(lam, p0)
        fp = line_primitive(lamJ, p0)
        A = sol.A

        def sigma_fn(x):
            Ag = jets.einsum("ik,kj->ij", A.at(x), jets.inv(g.at(x)))
            lx = lam.at(x)
            return jets.einsum("ij,j->i", Ag, lx) - lx * f.at(x) + lamJ.at(x) * fp.at(x)

        sigma = TensorField(m, (0, 1), sigma_fn, name="sigma")
        c = float(np.einsum("ni,nij,nj->n", lam_vals, np.linalg.inv(g(pts)), lam_vals).mean())
        lam1 = TensorField(m, (0, 1), lambda x: sigma.at(x) * (1.0 / c), name="lambda1")

    def A1_fn(x):
        l1 = lam1.at(x)
        lJ = jets.einsum("k,kj->j", l1, J.at(x))
        return jets.einsum("i,j->ij", l1, l1) + jets.einsum("i,j->ij", lJ, lJ)

    A1 = TensorField(m, (0, 2), A1_fn, name="A1")
    return CProjSolution(ks, A1, lam1, TensorField(m, (0, 0), _const(1.0), name="mu1"), 0.0, "mu-one")


def family_member(seed: CProjSolution, t: float) -> CProjSolution:
    """(A(t), λ(t), μ(t)) = (t A₁ + g, t λ₁, t)."""
    ks = seed.ks
    g, A1, l1 = ks.g, seed.A, seed.lam
    m = ks.dim
    A = TensorField(m, (0, 2), lambda x: A1.at(x) * t + g.at(x), name=f"A(t={t:g})")
    lam = TensorField(m, (0, 1), lambda x: l1.at(x) * t, name="lambda(t)")
    return CProjSolution(ks, A, lam, TensorField(m, (0, 0), _const(t), name="mu(t)"), 0.0, A.name)


def f_of_t(seed: CProjSolution, t: float, points) -> np.ndarray:
    """f(t) = t² g(A(t)⁻¹Λ, Λ) - t pointwise, A(t) as an endomorphism."""
    pts = np.atleast_2d(points)
    g0 = seed.ks.g(pts)
    A1 = seed.A(pts)
    lam = seed.lam(pts)
    At = np.linalg.solve(g0, t * A1 + g0)
    Lam = np.linalg.solve(g0, lam[..., None])[..., 0]
    w = np.linalg.solve(At, Lam[..., None])[..., 0]
    return t * t * np.einsum("ni,nij,nj->n", w, g0, Lam) - t


def normalize_B(sol: CProjSolution, points, t_candidates=(0.5, 0.25, 0.1, 0.05, 0.01), tol: float = 1e-6,
                allow_rescale: bool = True) -> Normalization:
    """Find g' in the c-projective class with B' = -1 and a map carrying solutions to it."""
    ks = sol.ks
    pts = np.atleast_2d(points)
    if sol.B is None:
        raise ValueError("solution needs B (fit it with fit_mu_B first)")
    B = float(sol.B)
    if abs(B + 1.0) < B_TOL:
        return Normalization(ks, "identity", B, 1.0)
    if abs(B) > B_TOL:
        if not allow_rescale:
            raise NotBZero(f"B = {B:g} is not zero; rescale g by {-B:g} instead")
        if B > 0:
            warnings.warn("B > 0: the rescaled metric -B·g is negative definite", IndefiniteMetricWarning)
        return Normalization(_rescaled(ks, -B, f"{ks.name}*{-B:g}"), "rescale", B, -B)

    seed = mu_one_solution(sol, pts)
    h = 1e-4
    df0 = float(((f_of_t(seed, h, pts) - f_of_t(seed, -h, pts)) / (2 * h)).mean())
    for t in t_candidates:
        member = family_member(seed, t)
        A1 = np.linalg.solve(ks.g(pts), member.A(pts))
        if np.any(np.linalg.eigvalsh(0.5 * (A1 + np.swapaxes(A1, 1, 2))) <= 0):
            continue
        tc = transform_constants(member, np.full(len(pts), t), pts)
        if abs(tc.B_tilde) <= tol or tc.B_spread > tol * max(1.0, abs(tc.B_tilde)):
            continue
        c = -tc.B_tilde
        gt = metric_from_solution(ks.g, member.A)
        name = f"normalized({ks.name})"
        g2 = TensorField(ks.dim, (0, 2), lambda x, gt=gt, c=c: gt.at(x) * c, name=f"g[{name}]")
        ks2 = KahlerStructure(g2, ks.J, ks.box, None, name)
        return Normalization(ks2, "deform", B, c, t, tc.B_tilde, tc.B_spread, df0, seed, member.A,
                             {"f_t0": float(f_of_t(seed, t, pts).mean())})
    raise DegenerateSolution("no t in the candidate list gives a nondegenerate metric with B̃ ≠ 0")
