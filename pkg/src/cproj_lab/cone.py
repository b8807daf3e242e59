"""Conification of a Kähler chart and the closed-form cone geometry.

Cone coordinates are ``(r, t, x^1 .. x^{2n})`` with ``r`` in ``[0.5, 2]``
and ``t`` in ``[-1, 1]``.  With ``θ = dt - 2τ`` the cone metric is
``dr² + r²(θ² + g)``; the horizontal lift of a base vector ``X`` is
``X^θ = X + 2τ(X) ∂_t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .chart import Box, TensorField, christoffel_jet, covariant_derivative_jet, riemann_suite
from .errors import WrongB
from .kahler import KahlerStructure, holomorphic_model

R_RANGE = (0.5, 2.0)
T_RANGE = (-1.0, 1.0)


@dataclass
class ConeBundle:
    """Cone Kähler structure with the fields needed to compare with its base."""

    base: KahlerStructure
    cone: KahlerStructure
    h: TensorField  # metric θ² + g on the (t, x) chart
    xi: TensorField
    eta: TensorField
    lifts: TensorField  # columns are the horizontal lifts of ∂_1 .. ∂_2n
    tau: TensorField | None = None

    @property
    def n(self) -> int:
        return self.base.n

    def base_points(self, cone_points) -> np.ndarray:
        return np.atleast_2d(cone_points)[:, 2:]

    def lift(self, cone_points, X) -> np.ndarray:
        """Horizontal lift of base vectors X (N, 2n) at cone points (N, 2n+2)."""
        E = self.lifts(np.atleast_2d(cone_points))
        return np.einsum("nia,na->ni", E, np.atleast_2d(X))

    def sample(self, n: int = 20, seed: int = 0) -> np.ndarray:
        return self.cone.box.sample(n, seed)


def _split(x):
    return x[0], x[1], x[2:]


def conify(base: KahlerStructure, r_range=R_RANGE, t_range=T_RANGE, tau: TensorField | None = None) -> ConeBundle:
    """Build the Kähler cone over ``base`` using ``tau`` or the base's declared or computed potential."""
    tau = base.potential() if tau is None else tau
    m = base.dim
    M = m + 2

    def g_hat(x):
        r, _, y = _split(x)
        g = base.g.at(y)
        ta = tau.at(y)
        r2 = r * r
        rows = [[1.0, 0.0] + [0.0] * m, [0.0, r2] + [ta[i] * r2 * -2.0 for i in range(m)]]
        for i in range(m):
            row = [0.0, ta[i] * r2 * -2.0]
            for j in range(m):
                row.append((ta[i] * ta[j] * 4.0 + g[i, j]) * r2)
            rows.append(row)
        return rows

    def J_hat(x):
        r, _, y = _split(x)
        J = base.J.at(y)
        ta = tau.at(y)
        tJ = jets.einsum("k,ki->i", ta, J)
        rows = [[0.0, -r] + [ta[i] * r * 2.0 for i in range(m)],
                [1.0 / r, 0.0] + [tJ[i] * 2.0 for i in range(m)]]
        for k in range(m):
            rows.append([0.0, 0.0] + [J[k, i] for i in range(m)])
        return rows

    def tau_hat(x):
        r, _, y = _split(x)
        ta = tau.at(y)
        r2 = r * r
        return [0.0, r2 * -0.5] + [ta[i] * r2 for i in range(m)]

    box = Box((r_range[0], t_range[0]) + base.box.lo, (r_range[1], t_range[1]) + base.box.hi)
    name = f"cone({base.name})"
    cone = KahlerStructure(
        TensorField(M, (0, 2), g_hat, name=f"g[{name}]"),
        TensorField(M, (1, 1), J_hat, name=f"J[{name}]"),
        box,
        TensorField(M, (0, 1), tau_hat, name=f"tau[{name}]"),
        name,
    )

    def h_fn(x):
        y = x[1:]
        g = base.g.at(y)
        ta = tau.at(y)
        rows = [[1.0] + [ta[i] * -2.0 for i in range(m)]]
        for i in range(m):
            rows.append([ta[i] * -2.0] + [ta[i] * ta[j] * 4.0 + g[i, j] for j in range(m)])
        return rows

    h = TensorField(m + 1, (0, 2), h_fn, name=f"h[{base.name}]")

    def xi_fn(x):
        return [x[0]] + [0.0] * (M - 1)

    def eta_fn(x):
        return [0.0, 1.0] + [0.0] * m

    def lifts_fn(x):
        _, _, y = _split(x)
        ta = tau.at(y)
        rows = [[0.0] * m, [ta[a] * 2.0 for a in range(m)]]
        for k in range(m):
            rows.append([1.0 if k == a else 0.0 for a in range(m)])
        return rows

    return ConeBundle(
        tau=tau,
        base=base,
        cone=cone,
        h=h,
        xi=TensorField(M, (1, 0), xi_fn, name="xi"),
        eta=TensorField(M, (1, 0), eta_fn, name="eta"),
        lifts=TensorField(M, (1, 1), lifts_fn, name="lifts"),
    )


def _nabla_vectors(V: jets.Jet, gam: np.ndarray) -> np.ndarray:
    """Covariant derivatives of vector fields stored as columns of V.

    Returns D[n, i, a, z] = (∇_z V_a)^i.
    """
    return np.einsum("niaz->niaz", V.c[1]) + np.einsum("nizp,npa->niaz", gam, V.value)


def connection_residuals(cb: ConeBundle, points) -> dict:
    """Closed-form Levi-Civita identities of the cone against chart numerics."""
    pts = np.atleast_2d(points)
    gam = christoffel_jet(cb.cone.g.jet(pts, 1)).value
    m = cb.base.dim
    Jh = cb.cone.J(pts)
    xi = cb.xi.jet(pts, 1)
    eta = cb.eta.jet(pts, 1)
    E = cb.lifts.jet(pts, 1)
    xiv, etav, Ev = xi.value, eta.value, E.value
    Dxi = xi.c[1] + np.einsum("nizp,np->niz", gam, xiv)
    Deta = eta.c[1] + np.einsum("nizp,np->niz", gam, etav)
    DE = _nabla_vectors(E, gam)
    eye = np.eye(m + 2)
    out = {
        "nabla_xi_is_identity": float(np.abs(Dxi - eye).max()),
        "nabla_eta_is_J": float(np.abs(Deta - Jh).max()),
        "nabla_xi_lift": float(np.abs(np.einsum("niaz,nz->nia", DE, xiv) - Ev).max()),
        "nabla_eta_lift": float(np.abs(np.einsum("niaz,nz->nia", DE, etav)
                                       - np.einsum("nij,nja->nia", Jh, Ev)).max()),
    }
    bp = cb.base_points(pts)
    gb = cb.base.g(bp)
    om = cb.base.omega(bp)
    gamb = christoffel_jet(cb.base.g.jet(bp, 1)).value  # Γ^c_ab
    lhs = np.einsum("nibz,nza->niab", DE, Ev)  # ∇_{E_a} E_b
    rhs = (np.einsum("ncab,nic->niab", gamb, Ev)
           + np.einsum("nab,ni->niab", om, etav)
           - np.einsum("nab,ni->niab", gb, xiv))
    out["nabla_lift_lift"] = float(np.abs(lhs - rhs).max())
    return out


def curvature_residuals(cb: ConeBundle, points) -> dict:
    """Cone curvature identities against chart numerics."""
    pts = np.atleast_2d(points)
    s = riemann_suite(cb.cone.g, pts)
    Rh = s.riemann  # R^i_jkl
    xiv = cb.xi(pts)
    etav = cb.eta(pts)
    out = {
        "curvature_kills_xi": float(np.abs(np.einsum("nijkl,nj->nikl", Rh, xiv)).max()),
        "curvature_kills_eta": float(np.abs(np.einsum("nijkl,nj->nikl", Rh, etav)).max()),
    }
    bp = cb.base_points(pts)
    sb = riemann_suite(cb.base.g, bp)
    Jb = cb.base.J(bp)
    Hlow = holomorphic_model(sb.metric, Jb)
    Hup = np.einsum("nia,najkl->nijkl", np.linalg.inv(sb.metric), Hlow)
    E = cb.lifts(pts)
    lhs = np.einsum("nijkl,nja,nkb,nlc->niabc", Rh, E, E, E)
    base_vec = sb.riemann - 4.0 * Hup  # components along ∂_d
    rhs = np.einsum("nid,ndabc->niabc", E, base_vec)
    out["horizontal_curvature"] = float(np.abs(lhs - rhs).max())
    # tangential part: compare with the curvature of h on the (t, x) chart
    ph = pts[:, 1:]
    sh = riemann_suite(cb.h, ph)
    hv = sh.metric
    d = np.eye(hv.shape[-1])
    model = np.einsum("njl,ik->nijkl", hv, d) - np.einsum("njk,il->nijkl", hv, d)
    expect = sh.riemann - model
    tang = Rh[:, :, 1:, 1:, 1:]
    out["tangential_curvature"] = float(np.abs(tang[:, 1:] - expect).max())
    out["tangential_normal_part"] = float(np.abs(tang[:, 0]).max())
    # Ric is invariant under constant rescaling, so no power of r appears
    ric_lift = np.einsum("nij,nia,njb->nab", s.ricci, E, E)
    ric_exp = sb.ricci - 2.0 * (cb.n + 1) * sb.metric
    out["ricci_lift"] = float(np.abs(ric_lift - ric_exp).max())
    return out


# -- parallel tensors on the cone versus solutions on the base ---------------------------------

def _vec(items, x):
    return jets.stack(items, batch=x.batch, nvars=x.nvars, order=x.order)


def _outer(a, b):
    return jets.einsum("i,j->ij", a, b)


def _sym(a, b):
    return _outer(a, b) + _outer(b, a)


def lift_solution(cb: ConeBundle, sol, points=None, tol: float = 1e-6) -> TensorField:
    """Â = μ dr² - r dr⊙λ + r²(μθ² + θ⊙λ(J·) + A) for a solution with B = -1.

    ``⊙`` is the plain symmetric sum a⊗b + b⊗a.  When ``points`` (base points)
    are given the triple residual is checked first.
    """
    if sol.B is None or abs(sol.B + 1.0) > 1e-9 or sol.mu is None:
        raise WrongB(f"lift needs a solution with B = -1 and μ, got B = {sol.B}")
    if points is not None:
        from .cproj import triple_residual
        res = triple_residual(sol, points)
        if max(res.values()) > tol:
            raise WrongB(f"solution fails the B = -1 system: {res}")
    base, tau = cb.base, cb.tau
    m = base.dim

    def fn(x):
        r, _, y = _split(x)
        mu = sol.mu.at(y)
        lam = sol.lam.at(y)
        A = sol.A.at(y)
        ta = tau.at(y)
        lJ = jets.einsum("k,kj->j", lam, base.J.at(y))
        dr = _vec([1.0, 0.0] + [0.0] * m, x)
        th = _vec([0.0, 1.0] + [ta[i] * -2.0 for i in range(m)], x)
        sg = _vec([0.0, 0.0] + [lam[i] for i in range(m)], x)
        lj = _vec([0.0, 0.0] + [lJ[i] for i in range(m)], x)
        zero = jets.Jet.constant(np.zeros((2, 2)), x.batch, x.nvars, x.order)
        Apad = jets.block_diag([zero, A])
        r2 = r * r
        return (_outer(dr, dr) * mu - _sym(dr, sg) * r
                + (_outer(th, th) * mu + _sym(th, lj) + Apad) * r2)

    return TensorField(m + 2, (0, 2), fn, name=f"lift({sol.name})")


def parallel_residual(cb: ConeBundle, T: TensorField, points) -> float:
    """max |∇̂T| at cone points."""
    pts = np.atleast_2d(points)
    gam = christoffel_jet(cb.cone.g.jet(pts, 1))
    return float(np.abs(covariant_derivative_jet(T.jet(pts, 1), gam, (0, 2)).value).max())


def read_solution(cb: ConeBundle, Ahat: TensorField, points) -> dict:
    """Recover (A, λ, μ) from a lifted tensor: μ = Â(∂_r, ∂_r), λ = -Â(∂_r, X^θ)/r, A = Â(X^θ, Y^θ)/r²."""
    pts = np.atleast_2d(points)
    T = Ahat(pts)
    E = cb.lifts(pts)
    r = pts[:, 0]
    return {
        "mu": T[:, 0, 0],
        "lam": -np.einsum("nj,nja->na", T[:, 0, :], E) / r[:, None],
        "A": np.einsum("nij,nia,njb->nab", T, E, E) / (r * r)[:, None, None],
    }


def hermitian_residual_cone(cb: ConeBundle, T: TensorField, points) -> float:
    pts = np.atleast_2d(points)
    T0 = T(pts)
    J = cb.cone.J(pts)
    return float(max(np.abs(np.einsum("nki,nkl,nlj->nij", J, T0, J) - T0).max(),
                     np.abs(T0 - np.swapaxes(T0, 1, 2)).max()))


# -- the system on P = ℝ × M with metric h -----------------------------------------------------

@dataclass
class SasakiTriple:
    """(L, σ, ρ) on P with coordinates (t, x)."""

    L: TensorField
    sigma: TensorField
    rho: TensorField


def sasaki_from_solution(cb: ConeBundle, sol) -> SasakiTriple:
    """L = μθ² + θ⊗λ(J·) + λ(J·)⊗θ + A, σ = λ, ρ = μ pulled back to P."""
    base, tau = cb.base, cb.tau
    m = base.dim

    def split(x):
        return x[1:]

    def L_fn(x):
        y = split(x)
        mu = sol.mu.at(y)
        lam = sol.lam.at(y)
        ta = tau.at(y)
        lJ = jets.einsum("k,kj->j", lam, base.J.at(y))
        th = _vec([1.0] + [ta[i] * -2.0 for i in range(m)], x)
        lj = _vec([0.0] + [lJ[i] for i in range(m)], x)
        zero = jets.Jet.constant(np.zeros((1, 1)), x.batch, x.nvars, x.order)
        return _outer(th, th) * mu + _sym(th, lj) + jets.block_diag([zero, sol.A.at(y)])

    def sigma_fn(x):
        lam = sol.lam.at(split(x))
        return _vec([0.0] + [lam[i] for i in range(m)], x)

    return SasakiTriple(TensorField(m + 1, (0, 2), L_fn, name="L"),
                        TensorField(m + 1, (0, 1), sigma_fn, name="sigma"),
                        TensorField(m + 1, (0, 0), lambda x: sol.mu.at(split(x)), name="rho"))


def sasaki_from_parallel(cb: ConeBundle, Ahat: TensorField, r0: float = 1.0) -> SasakiTriple:
    """Read (L, σ, ρ) off Â = ρ dr² - r dr⊙σ + r²L on the slice r = r0."""
    m = cb.base.dim

    def at_slice(x):
        r = jets.Jet.constant(np.full(1, r0), x.batch, x.nvars, x.order)
        return Ahat.at(jets.concatenate([r, x])), r0

    def L_fn(x):
        T, r = at_slice(x)
        return T[1:, 1:] * (1.0 / (r * r))

    def sigma_fn(x):
        T, r = at_slice(x)
        return T[0, 1:] * (-1.0 / r)

    def rho_fn(x):
        T, _ = at_slice(x)
        return T[0, 0]

    return SasakiTriple(TensorField(m + 1, (0, 2), L_fn, name="L"),
                        TensorField(m + 1, (0, 1), sigma_fn, name="sigma"),
                        TensorField(m + 1, (0, 0), rho_fn, name="rho"))


def sasaki_system_residual(cb: ConeBundle, triple: SasakiTriple, points, sol=None) -> dict:
    """Residuals of the system on (P, h), of the η-invariance conditions and of the ∂_t derivatives.

    ``points`` are P points (t, x).  With ``sol`` the triple is also compared to
    the one built from the solution.
    """
    pts = np.atleast_2d(points)
    hj = cb.h.jet(pts, 1)
    gam = christoffel_jet(hj)
    h0 = hj.value
    Lj = triple.L.jet(pts, 1)
    sj = triple.sigma.jet(pts, 1)
    rj = triple.rho.jet(pts, 1)
    nL = covariant_derivative_jet(Lj, gam, (0, 2)).value  # [x, y, z]
    ns = covariant_derivative_jet(sj, gam, (0, 1)).value  # [x, z]
    L0, s0, r0 = Lj.value, sj.value, rj.value
    eq1 = nL - np.einsum("nzx,ny->nxyz", h0, s0) - np.einsum("nzy,nx->nxyz", h0, s0)
    eq2 = ns - r0[:, None, None] * h0 + L0
    eq3 = rj.c[1] + 2.0 * s0
    out = {
        "system_L": float(np.abs(eq1).max()),
        "system_sigma": float(np.abs(eq2).max()),
        "system_rho": float(np.abs(eq3).max()),
    }
    # η = ∂_t and lifts E_a = ∂_a + 2τ_a ∂_t in (t, x) coordinates
    bp = pts[:, 1:]
    m = bp.shape[1]
    ta = cb.tau(bp)
    E = np.zeros((len(pts), m + 1, m))
    E[:, 0, :] = 2.0 * ta
    E[:, 1:, :] = np.eye(m)
    J = cb.base.J(bp)
    EJ = np.einsum("nia,nab->nib", E, J)  # lifts of J∂_b
    LE = np.einsum("nij,nia,njb->nab", L0, E, E)
    LJJ = np.einsum("nij,nia,njb->nab", L0, EJ, EJ)
    out["inv_sigma_eta"] = float(np.abs(s0[:, 0]).max())
    out["inv_sigma_JX"] = float(np.abs(np.einsum("ni,nib->nb", s0, EJ) - np.einsum("nj,nja->na", L0[:, 0, :], E)).max())
    out["inv_L_hermitian"] = float(np.abs(LJJ - LE).max())
    out["inv_rho"] = float(np.abs(r0 - L0[:, 0, 0]).max())
    out["lie_eta"] = float(max(np.abs(Lj.c[1][..., 0]).max(), np.abs(sj.c[1][..., 0]).max(),
                               np.abs(rj.c[1][..., 0]).max()))
    if sol is not None:
        ref = sasaki_from_solution(cb, sol)
        out["sasaki_formula"] = float(max(np.abs(ref.L(pts) - L0).max(), np.abs(ref.sigma(pts) - s0).max(),
                                          np.abs(ref.rho(pts) - r0).max()))
    return out


def invariance_conditions_hold(report: dict, tol: float = 1e-8) -> bool:
    return max(report["inv_sigma_eta"], report["inv_sigma_JX"], report["inv_L_hermitian"],
               report["inv_rho"]) < tol


# -- gauge change of the potential ------------------------------------------------------------

def gauge_shift_residual(base: KahlerStructure, f: TensorField, points, sol=None) -> dict:
    """Compare the cones for τ and τ + df through (r, t, p) ↦ (r, t + 2f(p), p).

    ``points`` are cone points for the τ cone.  Returns max pullback deviations
    of ĝ and, with a solution, of Â.
    """
    cb1 = conify(base)
    tau = cb1.tau
    m = base.dim
    tau2 = TensorField(m, (0, 1), lambda x: tau.at(x) + f.at(x).derivative(), depth=1, name="tau+df")
    cb2 = conify(base, tau=tau2)
    pts = np.atleast_2d(points)

    def shift(x):
        r, t, y = _split(x)
        return jets.concatenate([_vec([r], x), _vec([t + f.at(y) * 2.0], x), y])

    X = jets.Jet.variables(pts, 1)
    phi = shift(X)
    D = phi.c[1]  # D[n, i, a] = ∂_a φ^i
    q = phi.value

    def pulled(T2):
        return np.einsum("nia,nij,njb->nab", D, T2(q), D)

    out = {"metric": float(np.abs(pulled(cb2.cone.g) - cb1.cone.g(pts)).max())}
    if sol is not None:
        out["lift"] = float(np.abs(pulled(lift_solution(cb2, sol)) - lift_solution(cb1, sol)(pts)).max())
    return out
