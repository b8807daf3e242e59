"""Named Kähler structures with known answers.

Entries are built by :func:`build` from a construct tree such as
``{"construct": "catalog", "key": "fubini_study", "params": {"n": 1}}``.
Complex coordinates are ordered ``(x_1, y_1, x_2, y_2, ...)`` with
``J ∂_x = ∂_y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import jets
from .chart import Box, TensorField, riemann_suite
from .cone import ConeBundle, conify
from .errors import BadParams, SchemaError, UnknownKey
from .kahler import KahlerStructure

KEYS = ("flat", "fubini_study", "ricciflat4d", "product", "conify")
MAX_REAL_DIM = 12


@dataclass
class CatalogEntry:
    """A Kähler structure plus the facts the catalog knows about it."""

    key: str
    params: dict
    ks: KahlerStructure
    facts: dict = field(default_factory=dict)
    solution: object | None = None  # optional CProjSolution supplied with the entry
    vector_fields: dict = field(default_factory=dict)
    cone: ConeBundle | None = None

    def describe(self) -> dict:
        return {
            "key": self.key,
            "params": self.params,
            "dim": self.ks.dim,
            "box": {"lo": list(self.ks.box.lo), "hi": list(self.ks.box.hi)},
            "facts": self.facts,
            "has_solution": self.solution is not None,
            "vector_fields": sorted(self.vector_fields),
        }


def standard_J(m: int) -> np.ndarray:
    J = np.zeros((m, m))
    for a in range(0, m, 2):
        J[a + 1, a] = 1.0
        J[a, a + 1] = -1.0
    return J


def _const(arr):
    arr = np.asarray(arr, dtype=float)
    return lambda x: jets.Jet.constant(arr, x.batch, x.nvars, x.order)


def flat(n: int, half_width: float = 1.0) -> KahlerStructure:
    m = 2 * n
    J = standard_J(m)
    om = J.copy()  # ω = g J with g = I

    def tau(x):
        return jets.einsum("ij,i->j", om, x) * 0.5

    box = Box((-half_width,) * m, (half_width,) * m)
    return KahlerStructure(
        TensorField(m, (0, 2), _const(np.eye(m)), name=f"g[flat{n}]"),
        TensorField(m, (1, 1), _const(J), name=f"J[flat{n}]"),
        box,
        TensorField(m, (0, 1), tau, name=f"tau[flat{n}]"),
        f"flat(n={n})",
    )


def _fs_raw(n: int, scale: float, half_width: float) -> KahlerStructure:
    m = 2 * n
    J = standard_J(m)

    def g_fn(x):
        xs = [x[2 * a] for a in range(n)]
        ys = [x[2 * a + 1] for a in range(n)]
        rho = 1.0 + sum(u * u + v * v for u, v in zip(xs, ys))
        inv1 = rho.reciprocal()
        inv2 = inv1 * inv1
        rows = [[None] * m for _ in range(m)]
        for a in range(n):
            for b in range(n):
                # h_ab = δ_ab/ρ - conj(z_a) z_b/ρ²
                re = xs[a] * xs[b] + ys[a] * ys[b]
                im = xs[a] * ys[b] - ys[a] * xs[b]
                hre = (inv1 if a == b else 0.0) - re * inv2
                him = -(im * inv2)
                rows[2 * a][2 * b] = hre * scale
                rows[2 * a + 1][2 * b + 1] = hre * scale
                rows[2 * a][2 * b + 1] = him * scale
                rows[2 * a + 1][2 * b] = him * (-scale)
        return rows

    def tau_fn(x):
        # τ = ¼ d^cK ∘ J-type primitive of ω for K = log(1 + |z|²), scaled
        xs = [x[2 * a] for a in range(n)]
        ys = [x[2 * a + 1] for a in range(n)]
        rho = 1.0 + sum(u * u + v * v for u, v in zip(xs, ys))
        f = rho.reciprocal() * (0.5 * scale)
        out = []
        for a in range(n):
            out.append(ys[a] * f)
            out.append(-(xs[a] * f))
        return out

    box = Box((-half_width,) * m, (half_width,) * m)
    return KahlerStructure(
        TensorField(m, (0, 2), g_fn, name=f"g[FS{n}]"),
        TensorField(m, (1, 1), _const(J), name=f"J[FS{n}]"),
        box,
        TensorField(m, (0, 1), tau_fn, name=f"tau[FS{n}]"),
        f"fubini_study(n={n})",
    )


@lru_cache(maxsize=None)
def fs_scale(n: int, scal: float) -> float:
    """Constant c making c·g_FS have scalar curvature ``scal`` (computed numerically)."""
    raw = _fs_raw(n, 1.0, 1.0)
    s = riemann_suite(raw.g, np.zeros((1, 2 * n))).scalar[0]
    return float(s / scal)


def fubini_study(n: int, scal: float | None = None, half_width: float = 1.0) -> KahlerStructure:
    target = 4.0 * n * (n + 1) if scal is None else float(scal)
    return _fs_raw(n, fs_scale(n, target), half_width)


def ricciflat4d():
    """The four-dimensional Ricci-flat, non-flat Kähler metric with a non-parallel solution.

    Coordinates (x, y, s, t) on the box x - y >= 0.5, |s|, |t| <= 1.
    Returns the structure, the solution tensor A (0,2) and the vector field v.
    """
    def g_fn(X):
        x, y = X[0], X[1]
        d = x - y
        q = d.reciprocal()
        a = [0.0, 0.0, 1.0, x]
        b = [0.0, 0.0, 1.0, y]
        rows = []
        for i in range(4):
            row = []
            for j in range(4):
                val = q * (a[i] * a[j] + b[i] * b[j])
                if i == j and i < 2:
                    val = val + d
                row.append(val)
            rows.append(row)
        return rows

    def what_fn(X):
        x, y = X[0], X[1]
        # ω̂ = dx∧(ds + y dt) + dy∧(ds + x dt)
        z = 0.0
        return [[z, z, 1.0, y], [z, z, 1.0, x], [-1.0, -1.0, z, z], [-y, -x, z, z]]

    g = TensorField(4, (0, 2), g_fn, name="g[ricciflat4d]")
    what = TensorField(4, (0, 2), what_fn, name="omega_hat")

    def J_fn(X):
        return jets.einsum("ik,kj->ij", jets.inv(g.at(X)), what.at(X)) * -1.0

    def tau_fn(X):
        # primitive of ω = -ω̂: -( (x+y) ds + xy dt )
        x, y = X[0], X[1]
        return [0.0, 0.0, -(x + y), -(x * y)]

    def A_fn(X):
        x, y = X[0], X[1]
        A11 = [[x, 0.0, 0.0, 0.0], [0.0, y, 0.0, 0.0], [0.0, 0.0, x + y, x * y], [0.0, 0.0, -1.0, 0.0]]
        A11 = jets.stack(A11, batch=X.batch, nvars=X.nvars, order=X.order)
        return jets.einsum("ik,kj->ij", g.at(X), A11)

    def v_fn(X):
        return [X[0], X[1], X[2] * 2.0, X[3]]

    box = Box((1.5, 0.0, -1.0, -1.0), (3.0, 1.0, 1.0, 1.0))
    ks = KahlerStructure(g, TensorField(4, (1, 1), J_fn, name="J[ricciflat4d]"), box,
                         TensorField(4, (0, 1), tau_fn, name="tau[ricciflat4d]"), "ricciflat4d")
    A = TensorField(4, (0, 2), A_fn, name="A[ricciflat4d]")
    v = TensorField(4, (1, 0), v_fn, name="v[ricciflat4d]")
    return ks, A, v


def product(factors) -> KahlerStructure:
    """Riemannian product of Kähler structures with block coordinates."""
    sizes = [f.dim for f in factors]
    offs = np.cumsum([0] + sizes)
    m = int(offs[-1])

    def blockwise(attr):
        def fn(x):
            blocks = [getattr(f, attr).at(x[offs[i]:offs[i + 1]]) for i, f in enumerate(factors)]
            return jets.block_diag(blocks)
        return fn

    def tau_fn(x):
        parts = [f.potential().at(x[offs[i]:offs[i + 1]]) for i, f in enumerate(factors)]
        return jets.concatenate(parts)

    name = "x".join(f.name for f in factors)
    return KahlerStructure(
        TensorField(m, (0, 2), blockwise("g"), name=f"g[{name}]"),
        TensorField(m, (1, 1), blockwise("J"), name=f"J[{name}]"),
        Box.product([f.box for f in factors]),
        TensorField(m, (0, 1), tau_fn, name=f"tau[{name}]"),
        f"product({name})",
    )


def flat_real(k: int, half_width: float = 1.0) -> KahlerStructure:
    """Flat ℝ^{2k} = ℂ^k; same as :func:`flat` but named for realization plans."""
    return flat(k, half_width)


# -- construct trees --------------------------------------------------------------------

def _int_param(params: dict, name: str, lo: int, hi: int, default=None) -> int:
    v = params.get(name, default)
    if v is None or not isinstance(v, int) or isinstance(v, bool) or not lo <= v <= hi:
        raise BadParams(f"parameter {name!r} must be an integer in [{lo}, {hi}]")
    return v


def build(spec: dict) -> CatalogEntry:
    """Build a catalog entry from a construct tree."""
    if not isinstance(spec, dict) or "construct" not in spec:
        raise SchemaError("manifold spec needs a 'construct' field")
    kind = spec["construct"]
    if kind == "catalog":
        return _build_catalog(spec.get("key"), spec.get("params", {}) or {})
    if kind == "product":
        factors = spec.get("factors")
        if not isinstance(factors, list) or not factors:
            raise SchemaError("product needs a non-empty 'factors' list")
        entries = [build(f) for f in factors]
        ks = product([e.ks for e in entries])
        _check_dim(ks.dim + 0)
        return CatalogEntry("product", {"factors": [e.describe()["key"] for e in entries]}, ks,
                            facts={"factor_dims": [e.ks.dim for e in entries]})
    if kind == "conify":
        if "base" not in spec:
            raise SchemaError("conify needs a 'base'")
        base = build(spec["base"])
        _check_dim(base.ks.dim + 2)
        cb = conify(base.ks)
        return CatalogEntry("conify", {"base": base.key}, cb.cone,
                            facts={"base_dim": base.ks.dim}, cone=cb)
    raise SchemaError(f"unknown construct {kind!r}")


def _check_dim(d: int) -> None:
    if d > MAX_REAL_DIM:
        raise BadParams(f"real dimension {d} exceeds {MAX_REAL_DIM}")


def _build_catalog(key, params: dict) -> CatalogEntry:
    if key not in KEYS:
        raise UnknownKey(f"unknown catalog key {key!r}; known: {', '.join(KEYS)}")
    if not isinstance(params, dict):
        raise BadParams("params must be an object")
    if key == "flat":
        n = _int_param(params, "n", 1, 6, 2)
        return CatalogEntry(key, {"n": n}, flat(n), facts={"flat": True, "B": 0.0})
    if key == "fubini_study":
        n = _int_param(params, "n", 1, 5, 1)
        scal = params.get("scal")
        if scal is not None and (not isinstance(scal, (int, float)) or scal <= 0):
            raise BadParams("scal must be positive")
        ks = fubini_study(n, scal)
        target = 4.0 * n * (n + 1) if scal is None else float(scal)
        return CatalogEntry(key, {"n": n, **({"scal": scal} if scal is not None else {})}, ks,
                            facts={"scal": target, "holomorphic_curvature": target / (n * (n + 1)),
                                   "B": -target / (4.0 * n * (n + 1)), "scale": fs_scale(n, target)})
    if key == "ricciflat4d":
        if params:
            raise BadParams("ricciflat4d takes no parameters")
        from .cproj import solution_from_tensor
        ks, A, v = ricciflat4d()
        sol = solution_from_tensor(ks, A)
        return CatalogEntry(key, {}, ks, facts={"ricci_flat": True, "B": 0.0, "lie_v_g": 3.0},
                            solution=sol, vector_fields={"v": v})
    if key == "product":
        raise SchemaError("use the 'product' construct for products")
    raise SchemaError("use the 'conify' construct for cones")


def example_keys() -> list:
    return list(KEYS)


def examples() -> dict:
    """Ready-made construct trees used by the CLI and the tests."""
    fs = lambda n: {"construct": "catalog", "key": "fubini_study", "params": {"n": n}}
    return {
        "flat": {"construct": "catalog", "key": "flat", "params": {"n": 2}},
        "fubini_study": fs(1),
        "ricciflat4d": {"construct": "catalog", "key": "ricciflat4d", "params": {}},
        "product": {"construct": "product",
                    "factors": [{"construct": "catalog", "key": "flat", "params": {"n": 1}}, fs(1)]},
        "conify": {"construct": "conify", "base": fs(1)},
    }


def fs_cone_chart(n: int):
    """Map (r, t, z) ↦ r e^{it} (1, z)/√(1 + |z|²) ∈ ℂ^{n+1} on jets.

    It pulls the Euclidean metric back to the cone over the normalized
    Fubini–Study chart, so constant tensors in the image are parallel.
    """
    def phi(x):
        r, t = x[0], x[1]
        zs = [(x[2 + 2 * a], x[3 + 2 * a]) for a in range(n)]
        rho = 1.0 + sum(u * u + v * v for u, v in zs)
        f = r / jets.sqrt(rho)
        c, s = jets.cos(t), jets.sin(t)
        out = [f * c, f * s]
        for u, v in zs:
            out += [f * (c * u - s * v), f * (s * u + c * v)]
        return jets.stack(out)

    return phi
