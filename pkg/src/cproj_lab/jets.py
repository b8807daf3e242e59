"""Truncated multivariate Taylor jets (forward-mode derivatives up to order 3).

A :class:`Jet` carries, for a batch of ``N`` base points, the value of an
array-valued function together with its first three derivative tensors with
respect to ``m`` seed variables.  Coefficient ``k`` has shape
``(N,) + shape + (m,) * k``; derivative axes are trailing and fully
symmetric.  All products follow the Leibniz rule over index subsets, so no
factorials appear anywhere.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import JetOrderError

MAX_ORDER = 3
_DLETTERS = "UVW"


def _check_order(order: int) -> None:
    if order < 0 or order > MAX_ORDER:
        raise JetOrderError(f"jet order {order} outside 0..{MAX_ORDER}")


@lru_cache(maxsize=None)
def _subsets(k: int):
    """Index subsets of the k derivative slots as (taken, rest) letter strings."""
    letters = _DLETTERS[:k]
    out = []
    for r in range(k + 1):
        for combo in itertools.combinations(range(k), r):
            taken = "".join(letters[i] for i in combo)
            rest = "".join(letters[i] for i in range(k) if i not in combo)
            out.append((taken, rest))
    return tuple(out)


class Jet:
    """Batch of truncated Taylor expansions of an array-valued function."""

    __slots__ = ("c", "identity")

    def __init__(self, coeffs: Sequence[np.ndarray], identity: bool = False):
        _check_order(len(coeffs) - 1)
        self.c = tuple(coeffs)
        self.identity = identity

    # -- construction -------------------------------------------------
    @classmethod
    def variables(cls, points: np.ndarray, order: int) -> "Jet":
        """Identity seeds: the coordinate functions at ``points`` (N, m)."""
        _check_order(order)
        p = np.atleast_2d(np.asarray(points, dtype=float))
        n, m = p.shape
        coeffs = [p.copy()]
        if order >= 1:
            coeffs.append(np.broadcast_to(np.eye(m), (n, m, m)).copy())
        for k in range(2, order + 1):
            coeffs.append(np.zeros((n, m) + (m,) * k))
        return cls(coeffs, identity=True)

    @classmethod
    def constant(cls, value, batch: int, nvars: int, order: int) -> "Jet":
        v = np.asarray(value, dtype=float)
        v = np.broadcast_to(v, (batch,) + v.shape).copy()
        coeffs = [v] + [np.zeros(v.shape + (nvars,) * k) for k in range(1, order + 1)]
        return cls(coeffs)

    @classmethod
    def from_value_and_gradient(cls, value: np.ndarray, grad: "Jet") -> "Jet":
        """Reassemble a jet from its value and the jet of its gradient."""
        return cls((np.asarray(value, dtype=float),) + grad.c)

    # -- basic properties ---------------------------------------------
    @property
    def order(self) -> int:
        return len(self.c) - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    @property
    def batch(self) -> int:
        return self.c[0].shape[0]

    @property
    def shape(self) -> tuple:
        return self.c[0].shape[1:]

    @property
    def ndim(self) -> int:
        return self.c[0].ndim - 1

    @property
    def nvars(self) -> int:
        if self.order >= 1:
            return self.c[1].shape[-1]
        return -1

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, batch={self.batch}, order={self.order}, nvars={self.nvars})"

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.c[: order + 1])

    def derivative(self) -> "Jet":
        """Jet of the gradient; the new trailing value axis indexes variables."""
        if self.order < 1:
            raise JetOrderError("derivative of an order-0 jet")
        return Jet(self.c[1:])

    # -- indexing and reshaping ----------------------------------------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        full = (slice(None),) + idx
        return Jet([ck[full] for ck in self.c])

    def transpose(self, *axes) -> "Jet":
        nd = self.ndim
        if not axes:
            axes = tuple(reversed(range(nd)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        out = []
        for k, ck in enumerate(self.c):
            perm = (0,) + tuple(a + 1 for a in axes) + tuple(range(nd + 1, nd + 1 + k))
            out.append(ck.transpose(perm))
        return Jet(out)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        n = self.batch
        out = []
        for k, ck in enumerate(self.c):
            tail = ck.shape[ck.ndim - k:] if k else ()
            out.append(ck.reshape((n,) + tuple(shape) + tail))
        return Jet(out)

    def _expand(self, ndim: int) -> "Jet":
        """Insert leading singleton value axes up to ``ndim`` value axes."""
        pad = ndim - self.ndim
        if pad <= 0:
            return self
        out = []
        for ck in self.c:
            out.append(ck.reshape((ck.shape[0],) + (1,) * pad + ck.shape[1:]))
        return Jet(out)

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return np.asarray(other, dtype=float)

    def __add__(self, other):
        other = self._coerce(other)
        if isinstance(other, Jet):
            a, b = _align(self, other)
            k = min(a.order, b.order)
            return Jet([_bcast_add(a.c[i], b.c[i], i) for i in range(k + 1)])
        v = self.c[0] + other
        if v.shape != self.c[0].shape:
            raise ValueError("adding a constant may not change the jet shape")
        return Jet((v,) + self.c[1:])

    __radd__ = __add__

    def __neg__(self):
        return Jet([-ck for ck in self.c])

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if isinstance(other, Jet):
            return _mul(self, other)
        me = self._expand(other.ndim)
        out = []
        for k, ck in enumerate(me.c):
            out.append(ck * other.reshape(other.shape + (1,) * k))
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if isinstance(other, Jet):
            return _mul(self, other.reciprocal())
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        return self.power(float(p))

    def reciprocal(self) -> "Jet":
        return self.power(-1.0)

    def power(self, p: float) -> "Jet":
        u = self.c[0]
        d = [u ** p]
        coef = p
        for j in range(1, self.order + 1):
            d.append(coef * u ** (p - j))
            coef *= p - j
        return self.apply(d)

    def apply(self, derivs: Sequence[np.ndarray]) -> "Jet":
        """Compose with an elementwise function given its derivatives at the value."""
        return _faa_di_bruno(self, derivs)

    def sum(self, axis=None) -> "Jet":
        nd = self.ndim
        if axis is None:
            axes = tuple(range(nd))
        elif isinstance(axis, int):
            axes = (axis % nd,) if nd else ()
        else:
            axes = tuple(a % nd for a in axis)
        return Jet([ck.sum(axis=tuple(a + 1 for a in axes)) for ck in self.c])


def _align(a: Jet, b: Jet):
    nd = max(a.ndim, b.ndim)
    return a._expand(nd), b._expand(nd)


def _bcast_add(x, y, k):
    return x + y


def _mul(f: Jet, g: Jet) -> Jet:
    f, g = _align(f, g)
    order = min(f.order, g.order)
    out = [f.c[0] * g.c[0]]
    for k in range(1, order + 1):
        acc = None
        for taken, rest in _subsets(k):
            term = np.einsum(f"...{taken},...{rest}->...{_DLETTERS[:k]}",
                             f.c[len(taken)], g.c[len(rest)])
            acc = term if acc is None else acc + term
        out.append(acc)
    return Jet(out)


def _faa_di_bruno(u: Jet, d: Sequence[np.ndarray]) -> Jet:
    k = u.order
    out = [d[0]]
    if k >= 1:
        u1 = u.c[1]
        out.append(d[1][..., None] * u1)
    if k >= 2:
        u2 = u.c[2]
        outer = u1[..., :, None] * u1[..., None, :]
        out.append(d[2][..., None, None] * outer + d[1][..., None, None] * u2)
    if k >= 3:
        u3 = u.c[3]
        t3 = u1[..., :, None, None] * u1[..., None, :, None] * u1[..., None, None, :]
        mix = (u2[..., :, :, None] * u1[..., None, None, :]
               + u2[..., :, None, :] * u1[..., None, :, None]
               + u2[..., None, :, :] * u1[..., :, None, None])
        out.append(d[3][..., None, None, None] * t3 + d[2][..., None, None, None] * mix
                   + d[1][..., None, None, None] * u3)
    return Jet(out)


# -- elementwise functions ---------------------------------------------------

def exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return u.apply([e] * (u.order + 1))


def log(u: Jet) -> Jet:
    v = u.value
    d = [np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3]
    return u.apply(d[: u.order + 1])


def sqrt(u: Jet) -> Jet:
    return u.power(0.5)


def sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.apply([s, c, -s, -c][: u.order + 1])


def cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.apply([c, -s, -c, s][: u.order + 1])


# -- tensor algebra ------------------------------------------------------------

def einsum(subscripts: str, a, b=None) -> Jet:
    """Einstein summation over value axes with one or two jet operands.

    Plain arrays are treated as constants and must not carry a batch axis.
    Subscripts must use lowercase letters only.
    """
    if b is None:
        return _einsum1(subscripts, a)
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    if not isinstance(a, Jet):
        a = np.asarray(a, dtype=float)
        return Jet([np.einsum(f"{sa},...{sb}{_DLETTERS[:k]}->...{out}{_DLETTERS[:k]}", a, ck)
                    for k, ck in enumerate(b.c)])
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        return Jet([np.einsum(f"...{sa}{_DLETTERS[:k]},{sb}->...{out}{_DLETTERS[:k]}", ck, b)
                    for k, ck in enumerate(a.c)])
    order = min(a.order, b.order)
    res = [np.einsum(f"...{sa},...{sb}->...{out}", a.c[0], b.c[0])]
    for k in range(1, order + 1):
        acc = None
        for taken, rest in _subsets(k):
            term = np.einsum(f"...{sa}{taken},...{sb}{rest}->...{out}{_DLETTERS[:k]}",
                             a.c[len(taken)], b.c[len(rest)])
            acc = term if acc is None else acc + term
        res.append(acc)
    return Jet(res)


def _einsum1(subscripts: str, a: Jet) -> Jet:
    lhs, out = subscripts.split("->")
    return Jet([np.einsum(f"...{lhs}{_DLETTERS[:k]}->...{out}{_DLETTERS[:k]}", ck)
                for k, ck in enumerate(a.c)])


def matmul(a, b) -> Jet:
    return einsum("ij,jk->ik", a, b)


def inv(a: Jet) -> Jet:
    """Jet of the matrix inverse, solved order by order from A X = I."""
    x0 = np.linalg.inv(a.c[0])
    res = [x0]
    for k in range(1, a.order + 1):
        acc = None
        for taken, rest in _subsets(k):
            if not taken:
                continue
            term = np.einsum(f"...ij{taken},...jl{rest}->...il{_DLETTERS[:k]}",
                             a.c[len(taken)], res[len(rest)])
            acc = term if acc is None else acc + term
        res.append(-np.einsum(f"...ij,...jl{_DLETTERS[:k]}->...il{_DLETTERS[:k]}", x0, acc))
    return Jet(res)


def logabsdet(a: Jet):
    """Jet of log|det A| together with the sign of det A."""
    sign, ld = np.linalg.slogdet(a.c[0])
    if a.order == 0:
        return Jet([ld]), sign
    x = inv(a.truncate(a.order - 1))
    grad = einsum("ij,jiu->u", x, a.derivative())
    return Jet.from_value_and_gradient(ld, grad), sign


def det(a: Jet) -> Jet:
    ld, sign = logabsdet(a)
    return exp(ld) * sign


def trace(a: Jet) -> Jet:
    return einsum("ii->", a)


def stack(items, batch: int | None = None, nvars: int | None = None, order: int | None = None) -> Jet:
    """Convert nested lists of jets and numbers into one array-valued jet."""
    if isinstance(items, Jet):
        return items
    leaves = []
    _collect(items, leaves)
    jets = [x for x in leaves if isinstance(x, Jet)]
    if jets:
        batch = jets[0].batch
        order = min(j.order for j in jets) if order is None else min(order, *(j.order for j in jets))
        nvars = next((j.nvars for j in jets if j.order >= 1), nvars if nvars is not None else 0)
    if batch is None or order is None:
        raise ValueError("stack of constants needs batch and order")
    if nvars is None:
        nvars = 0
    return _stack_rec(items, batch, nvars, order)


def _collect(items, leaves):
    if isinstance(items, (list, tuple)):
        for it in items:
            _collect(it, leaves)
    else:
        leaves.append(items)


def _stack_rec(items, batch, nvars, order) -> Jet:
    if isinstance(items, (list, tuple)):
        parts = [_stack_rec(it, batch, nvars, order) for it in items]
        return Jet([np.stack([p.c[k] for p in parts], axis=1) for k in range(order + 1)])
    if isinstance(items, Jet):
        return items.truncate(order)
    return Jet.constant(items, batch, nvars, order)


def concatenate(jets: Sequence[Jet], axis: int = 0) -> Jet:
    order = min(j.order for j in jets)
    return Jet([np.concatenate([j.c[k] for j in jets], axis=axis + 1) for k in range(order + 1)])


def block_diag(blocks: Sequence[Jet]) -> Jet:
    """Block-diagonal matrix jet from square matrix jets sharing variables."""
    order = min(b.order for b in blocks)
    n = blocks[0].batch
    sizes = [b.shape[0] for b in blocks]
    tot = sum(sizes)
    m = next((b.nvars for b in blocks if b.order >= 1), 0)
    out = []
    for k in range(order + 1):
        arr = np.zeros((n, tot, tot) + (m,) * k)
        off = 0
        for b, s in zip(blocks, sizes):
            arr[:, off:off + s, off:off + s] = b.c[k]
            off += s
        out.append(arr)
    return Jet(out)


def compose(f: Jet, y: Jet) -> Jet:
    """Chain rule: ``f`` is a jet in variables y, ``y`` a jet of y in variables x."""
    order = min(f.order, y.order)
    n = f.batch
    shape = f.shape
    p = int(np.prod(shape)) if shape else 1
    fl = f.reshape((p,))
    out = [fl.c[0]]
    if order >= 1:
        y1 = y.c[1]
        out.append(np.einsum("zpi,zia->zpa", fl.c[1], y1))
    if order >= 2:
        y2 = y.c[2]
        out.append(np.einsum("zpij,zia,zjb->zpab", fl.c[2], y1, y1, optimize=True)
                   + np.einsum("zpi,ziab->zpab", fl.c[1], y2))
    if order >= 3:
        y3 = y.c[3]
        t1 = np.einsum("zpijk,zia,zjb,zkc->zpabc", fl.c[3], y1, y1, y1, optimize=True)
        m2 = np.einsum("zpij,ziab,zjc->zpabc", fl.c[2], y2, y1, optimize=True)
        t2 = m2 + m2.transpose(0, 1, 2, 4, 3) + m2.transpose(0, 1, 4, 3, 2)
        t3 = np.einsum("zpi,ziabc->zpabc", fl.c[1], y3)
        out.append(t1 + t2 + t3)
    res = Jet(out)
    return res.reshape(shape)


@lru_cache(maxsize=None)
def _canon3(m: int) -> np.ndarray:
    idx = np.empty((m, m, m), dtype=np.intp)
    for i, j, k in itertools.product(range(m), repeat=3):
        a, b, c = sorted((i, j, k))
        idx[i, j, k] = (a * m + b) * m + c
    return idx.reshape(-1)


def symmetrize(jet: Jet) -> Jet:
    """Make derivative tensors exactly symmetric by canonical index order."""
    out = list(jet.c)
    if jet.order >= 2:
        c2 = out[2]
        out[2] = 0.5 * (c2 + np.swapaxes(c2, -1, -2))
    if jet.order >= 3:
        c3 = out[3]
        m = c3.shape[-1]
        flat = c3.reshape(c3.shape[:-3] + (m**3,))
        out[3] = flat[..., _canon3(m)].reshape(c3.shape)
    return Jet(out, identity=jet.identity)
