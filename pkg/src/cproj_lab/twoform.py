"""Hamiltonian and hermitian conformal Killing 2-forms versus solutions A.

``A = φ(J·,·)`` as matrices reads ``A = Jᵀφ``, so ``φ = -JᵀA``.  With
``f_λ = ¼ trace_ω φ`` the form ``ψ = φ - f_λ ω`` is conformal Killing, and for
real dimension above four ``φ = ψ - f_α ω`` with ``f_α = trace_ω ψ / (2n - 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .chart import TensorField, christoffel_jet, covariant_derivative_jet
from .cproj import CProjSolution, _frame_norm, mainA_residual, solution_from_tensor
from .errors import DimensionTooSmall
from .kahler import KahlerStructure


def phi_from_A(ks: KahlerStructure, A: TensorField) -> TensorField:
    J = ks.J
    return TensorField(ks.dim, (0, 2), lambda x: jets.einsum("ki,kj->ij", J.at(x), A.at(x)) * -1.0,
                       name=f"phi[{A.name}]")


def A_from_phi(ks: KahlerStructure, phi: TensorField) -> TensorField:
    J = ks.J
    return TensorField(ks.dim, (0, 2), lambda x: jets.einsum("ki,kj->ij", J.at(x), phi.at(x)),
                       name=f"A[{phi.name}]")


def trace_omega(ks: KahlerStructure, form: TensorField) -> TensorField:
    """Σ form(J e_i, e_i) over a g-orthonormal frame."""
    g, J = ks.g, ks.J

    def fn(x):
        JF = jets.einsum("ka,kb->ab", J.at(x), form.at(x))
        return jets.einsum("ab,ab->", jets.inv(g.at(x)), JF)

    return TensorField(ks.dim, (0, 0), fn, name="trace_omega")


def psi_from_phi(ks: KahlerStructure, phi: TensorField) -> TensorField:
    tr = trace_omega(ks, phi)
    om = ks.omega
    return TensorField(ks.dim, (0, 2), lambda x: phi.at(x) - om.at(x) * tr.at(x) * 0.25, name="psi")


def phi_from_psi(ks: KahlerStructure, psi: TensorField) -> TensorField:
    n = ks.n
    if 2 * n <= 4:
        raise DimensionTooSmall("ψ → φ needs real dimension above 4")
    tr = trace_omega(ks, psi)
    om = ks.omega
    return TensorField(ks.dim, (0, 2), lambda x: psi.at(x) - om.at(x) * tr.at(x) * (1.0 / (2 * n - 4)),
                       name="phi")


def _wedge(a, b):
    """(a ∧ b)_xy = a_x b_y - a_y b_x with a leading batch axis and extra leading indices on a."""
    return np.einsum("n...x,ny->n...xy", a, b) - np.einsum("n...y,nx->n...xy", a, b)


def hamiltonian_residual(ks: KahlerStructure, phi: TensorField, lam: TensorField, points) -> np.ndarray:
    """Pointwise g-norm of ∇_Z φ - Z♭∧Jλ - (JZ)♭∧λ, index order [x, y, z]."""
    pts = np.atleast_2d(points)
    gj = ks.g.jet(pts, 1)
    nphi = covariant_derivative_jet(phi.jet(pts, 1), christoffel_jet(gj), (0, 2)).value
    g0 = gj.value
    J0 = ks.J(pts)
    l0 = lam(pts)
    lJ = np.einsum("nk,nkj->nj", l0, J0)
    JZ = np.einsum("nxk,nkz->nzx", g0, J0)  # (JZ)♭ with Z = ∂_z, row z
    gz = np.swapaxes(g0, 1, 2)  # Z♭ rows
    rhs = _wedge(gz, lJ) + _wedge(JZ, l0)  # [n, z, x, y]
    res = nphi - np.moveaxis(rhs, 1, 3)
    return _frame_norm(res, np.linalg.inv(g0))


def conformal_killing_residual(ks: KahlerStructure, psi: TensorField, points) -> np.ndarray:
    """Pointwise g-norm of the hermitian twistor equation with α = -δψ/(2n - 1)."""
    pts = np.atleast_2d(points)
    gj = ks.g.jet(pts, 1)
    npsi = covariant_derivative_jet(psi.jet(pts, 1), christoffel_jet(gj), (0, 2)).value  # [x, y, z]
    g0 = gj.value
    gi = np.linalg.inv(g0)
    m = g0.shape[-1]
    delta = np.einsum("nxiz,niz->nx", npsi, gi)
    alpha = -delta / (m - 1)
    J0 = ks.J(pts)
    aJ = np.einsum("nk,nkj->nj", alpha, J0)
    JZ = np.einsum("nxk,nkz->nzx", g0, J0)
    gz = np.swapaxes(g0, 1, 2)
    om = ks.omega(pts)
    rhs = _wedge(gz, alpha) - _wedge(JZ, aJ) + np.einsum("nz,nxy->nzxy", aJ, om)
    res = npsi - np.moveaxis(rhs, 1, 3)
    return _frame_norm(res, gi)


@dataclass
class BridgeReport:
    A: TensorField
    phi: TensorField
    psi: TensorField
    hamiltonian: float
    mainA: float
    conformal_killing: float
    roundtrip_A: float
    roundtrip_phi: float | None

    def as_dict(self) -> dict:
        return {"hamiltonian_residual": self.hamiltonian, "mainA_residual": self.mainA,
                "conformal_killing_residual": self.conformal_killing,
                "roundtrip_A": self.roundtrip_A, "roundtrip_phi": self.roundtrip_phi}


def twoform_bridge(ks: KahlerStructure, points, A: TensorField | None = None, phi: TensorField | None = None,
                   psi: TensorField | None = None) -> BridgeReport:
    """Convert whichever object is given into the other two and report all residuals."""
    if sum(v is not None for v in (A, phi, psi)) != 1:
        raise ValueError("give exactly one of A, phi, psi")
    pts = np.atleast_2d(points)
    if psi is not None:
        phi = phi_from_psi(ks, psi)
    if phi is not None:
        A = A_from_phi(ks, phi)
    phi = phi if phi is not None else phi_from_A(ks, A)
    psi = psi if psi is not None else psi_from_phi(ks, phi)
    sol = solution_from_tensor(ks, A)
    main = mainA_residual(sol, pts).max_gnorm
    ham = float(hamiltonian_residual(ks, phi, sol.lam, pts).max())
    ck = float(conformal_killing_residual(ks, psi, pts).max())
    rtA = float(np.abs(A_from_phi(ks, phi_from_A(ks, A))(pts) - A(pts)).max())
    rtphi = None
    if 2 * ks.n > 4:
        rtphi = float(np.abs(phi_from_psi(ks, psi_from_phi(ks, phi))(pts) - phi(pts)).max())
    return BridgeReport(A, phi, psi, ham, main, ck, rtA, rtphi)


def solution_from_phi(ks: KahlerStructure, phi: TensorField) -> CProjSolution:
    return solution_from_tensor(ks, A_from_phi(ks, phi))
