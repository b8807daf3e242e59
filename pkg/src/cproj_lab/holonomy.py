"""Holonomy algebra sampling and parallel hermitian tensors at a point.

Generators are curvature endomorphisms ``R(∂_a, ∂_b)`` at the vertices of
random closed polygonal loops, carried back to the base point by parallel
transport along the loop.  Their span approximates the holonomy algebra;
symmetric hermitian tensors annihilated by it correspond to parallel
symmetric hermitian tensor fields.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .chart import Box, TensorField, riemann_suite, transport_segments
from .errors import IndefiniteMetricWarning, NonStabilized
from .kahler import KahlerStructure

SPAN_TOL = 1e-6
NULL_TOL = 1e-6
ABS_FLOOR = 1e-9
TRANSPORT_STEPS = 48
SEGMENTS = 4


@dataclass
class HolonomyConfig:
    n_loops: int = 4
    seed: int = 0
    span_tol: float = SPAN_TOL
    null_tol: float = NULL_TOL
    steps: int = TRANSPORT_STEPS
    max_loops: int = 64
    box_shrink: float = 0.9
    jobs: int | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class HolonomySample:
    base: np.ndarray
    generators: np.ndarray  # (G, m, m)
    span_basis: np.ndarray  # (s, m, m), orthonormal in the Frobenius product
    span_dim: int
    n_loops: int
    singular_values: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    indefinite: bool = False


@dataclass
class InvariantTensorSpace:
    dimension: int
    basis: np.ndarray  # (d, m, m)
    singular_values: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def _jobs(jobs: int | None) -> int:
    if jobs is not None:
        return max(1, int(jobs))
    try:
        return max(1, int(os.environ.get("CPROJ_LAB_JOBS", "1")))
    except ValueError:
        return 1


def random_loops(box: Box, base: np.ndarray, n_loops: int, seed: int, shrink: float = 0.9,
                 segments: int = SEGMENTS) -> np.ndarray:
    """Closed polygons (n_loops, segments + 1, m) starting and ending at ``base``.

    Loop ``j`` depends only on ``(seed, j)``, so a longer list extends a shorter one.
    """
    inner = box.shrink(shrink)
    lo, hi = np.array(inner.lo), np.array(inner.hi)
    out = np.empty((n_loops, segments + 1, len(base)))
    for j in range(n_loops):
        rng = np.random.default_rng([seed, j])
        verts = lo + (hi - lo) * rng.random((segments - 1, len(base)))
        out[j] = np.vstack([base, verts, base])
    return out


def _loop_generators(g: TensorField, loops: np.ndarray, steps: int) -> np.ndarray:
    """Curvature endomorphisms at every interior vertex, conjugated back to the base."""
    L, V, m = loops.shape
    P = np.broadcast_to(np.eye(m), (L, m, m)).copy()
    iu = np.triu_indices(m, 1)
    out = []
    for v in range(1, V - 1):
        P = transport_segments(g, loops[:, v - 1], loops[:, v], P, steps)
        R = riemann_suite(g, loops[:, v]).riemann  # R^i_jkl
        Rab = R[:, :, :, iu[0], iu[1]]  # (L, m, m, pairs)
        Pinv = np.linalg.inv(P)
        out.append(np.einsum("lip,lpqk,lqj->lkij", Pinv, Rab, P).reshape(-1, m, m))
    return np.concatenate(out, axis=0)


def _span(gens: np.ndarray, tol: float):
    G, m, _ = gens.shape
    if G == 0:
        return np.zeros((0, m, m)), np.zeros(0)
    flat = gens.reshape(G, m * m)
    _, s, vt = np.linalg.svd(flat, full_matrices=False)
    if s.size == 0 or s[0] < ABS_FLOOR:
        return np.zeros((0, m, m)), s
    keep = s > tol * s[0]
    return vt[keep].reshape(-1, m, m), s


def holonomy_algebra(ks: KahlerStructure, base=None, config: HolonomyConfig | None = None,
                     n_loops: int | None = None) -> HolonomySample:
    """Sample generators along ``n_loops`` loops and reduce them to an orthonormal span."""
    cfg = config or HolonomyConfig()
    L = cfg.n_loops if n_loops is None else n_loops
    g = ks.g
    p = ks.box.center if base is None else np.asarray(base, dtype=float)
    g0 = g(p[None])[0]
    indefinite = bool(np.any(np.linalg.eigvalsh(g0) <= 0))
    if indefinite:
        warnings.warn("indefinite metric: holonomy results are best effort", IndefiniteMetricWarning)
    loops = random_loops(ks.box, p, L, cfg.seed, cfg.box_shrink)
    parts = [riemann_suite(g, p[None]).riemann[0].transpose(2, 3, 0, 1).reshape(-1, len(p), len(p))]
    jobs = min(_jobs(cfg.jobs), max(1, L))
    chunks = np.array_split(np.arange(L), jobs)
    if jobs == 1:
        parts.append(_loop_generators(g, loops, cfg.steps))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            res = list(ex.map(lambda idx: _loop_generators(g, loops[idx], cfg.steps), [c for c in chunks if len(c)]))
        parts.extend(res)
    gens = np.concatenate(parts, axis=0)
    basis, s = _span(gens, cfg.span_tol)
    return HolonomySample(p, gens, basis, len(basis), L, s, indefinite)


def hermitian_basis(J0: np.ndarray) -> np.ndarray:
    """Orthonormal basis of symmetric S with JᵀSJ = S."""
    m = J0.shape[0]
    mats = []
    for a in range(m):
        for b in range(a, m):
            E = np.zeros((m, m))
            E[a, b] = E[b, a] = 1.0
            mats.append(0.5 * (E + J0.T @ E @ J0))
    M = np.array(mats).reshape(len(mats), m * m)
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    return vt[:rank].reshape(rank, m, m)


def invariant_tensor_dim(hs: HolonomySample, ks: KahlerStructure, null_tol: float = NULL_TOL) -> InvariantTensorSpace:
    """Symmetric hermitian S at the base with S(hX, Y) + S(X, hY) = 0 for every span element h."""
    J0 = ks.J(hs.base[None])[0]
    B = hermitian_basis(J0)
    k = len(B)
    if hs.span_dim == 0:
        return InvariantTensorSpace(k, B, np.zeros(0))
    # rows: for each h, entries of hᵀ S + S h as linear functions of the coefficients
    cols = [np.einsum("hpi,pj->hij", hs.span_basis, Bi) + np.einsum("ip,hpj->hij", Bi, hs.span_basis)
            for Bi in B]
    M = np.stack([c.reshape(-1) for c in cols], axis=1)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    s_full = np.zeros(k)
    s_full[: len(s)] = s
    null = vt[s_full <= null_tol]
    basis = np.einsum("dk,kij->dij", null, B)
    return InvariantTensorSpace(len(null), basis, s_full)


def common_kernel(hs: HolonomySample, m: int, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal (Euclidean) basis of vectors killed by every span element, as columns."""
    if hs.span_dim == 0:
        return np.eye(m)
    M = hs.span_basis.reshape(-1, m)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    s_full = np.zeros(m)
    s_full[: len(s)] = s
    return vt[s_full <= tol].T


def block_decomposition(hs: HolonomySample, ks: KahlerStructure, seed: int = 0,
                        cluster_tol: float = 1e-6) -> list:
    """[dim T₀, dim T₁, ...]: the trivial part first, then the irreducible blocks (sorted)."""
    if hs.indefinite:
        warnings.warn("indefinite metric: block decomposition is best effort", IndefiniteMetricWarning)
    m = len(hs.base)
    g0 = ks.g(hs.base[None])[0]
    K0 = common_kernel(hs, m)
    d0 = K0.shape[1]
    if d0 == m:
        return [m]
    inv = invariant_tensor_dim(hs, ks)
    rng = np.random.default_rng(seed)
    S = np.einsum("d,dij->ij", rng.normal(size=inv.dimension), inv.basis)
    # g-orthogonal complement of T₀ with a g-orthonormal basis
    if d0:
        Q = K0
        proj = np.eye(m) - Q @ np.linalg.solve(Q.T @ g0 @ Q, Q.T @ g0)
        C = np.linalg.svd(proj)[0][:, : m - d0]
    else:
        C = np.eye(m)
    Gc = C.T @ g0 @ C
    Sc = C.T @ S @ C
    ev = eigh(Sc, Gc, eigvals_only=True)
    scale = max(1.0, float(np.abs(ev).max()))
    blocks = []
    start = 0
    for i in range(1, len(ev) + 1):
        if i == len(ev) or ev[i] - ev[i - 1] > cluster_tol * scale:
            blocks.append(i - start)
            start = i
    return [d0] + sorted(blocks)


@dataclass
class ParallelTensorReport:
    dimension: int
    history: list  # [(n_loops, span_dim, D̂), ...]
    stabilized: bool
    config: dict
    sample: HolonomySample | None = None
    space: InvariantTensorSpace | None = None

    def as_dict(self) -> dict:
        return {"D_hat": self.dimension, "stabilized": self.stabilized,
                "history": [{"n_loops": a, "span_dim": b, "D_hat": c} for a, b, c in self.history],
                "config": self.config}


def parallel_tensor_dim(ks: KahlerStructure, config: HolonomyConfig | None = None, base=None) -> ParallelTensorReport:
    """D̂ with the stabilization rule: double the loop count until two doublings leave D̂ unchanged."""
    cfg = config or HolonomyConfig()
    history = []
    L = cfg.n_loops
    hs = inv = None
    while L <= cfg.max_loops:
        hs = holonomy_algebra(ks, base, cfg, n_loops=L)
        inv = invariant_tensor_dim(hs, ks, cfg.null_tol)
        history.append((L, hs.span_dim, inv.dimension))
        if len(history) >= 3 and len({h[2] for h in history[-3:]}) == 1 and \
                len({h[1] for h in history[-3:]}) == 1:
            return ParallelTensorReport(inv.dimension, history, True, cfg.as_dict(), hs, inv)
        L *= 2
    raise NonStabilized(f"D̂ did not stabilize up to {cfg.max_loops} loops: {history}")


def transported_tensor(ks: KahlerStructure, S: np.ndarray, base: np.ndarray, path_vertices: np.ndarray,
                       steps: int = TRANSPORT_STEPS) -> np.ndarray:
    """Parallel transport of a (0,2) tensor from ``base`` through the given vertices."""
    pts = np.vstack([base, path_vertices])
    m = len(base)
    P = np.eye(m)[None]
    for a, b in zip(pts[:-1], pts[1:]):
        P = transport_segments(ks.g, a[None], b[None], P, steps)
    Pinv = np.linalg.inv(P[0])
    return Pinv.T @ S @ Pinv
