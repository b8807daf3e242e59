"""Degree-of-mobility value lists and product-cone realizations.

A realization of ``k² + ℓ`` is the product of flat ``ℝ^{2k}`` with ``ℓ``
irreducible cone factors of real dimensions ``2k_i`` summing to
``2(n + 1 - k)``.  General factors are cones over flat ``ℂ^{k_i - 1}``;
Ricci-flat factors are cones over ``(ℂP¹)^{k_i - 1}`` with each factor scaled
to scalar curvature ``4k_i``, which makes the base Kähler–Einstein with the
normalization required for a Ricci-flat cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BadDimension, Infeasible

MODES = ("general", "einstein", "affine", "essential_general", "essential_einstein")


@dataclass
class MobilityList:
    n: int
    mode: str
    values: list
    attainable: list = field(default_factory=list)  # values realized with a non-affine partner

    def as_dict(self) -> dict:
        return {"n": self.n, "mode": self.mode, "values": self.values, "attainable": self.attainable}


def _kl_pairs(n: int, einstein: bool):
    kmax = n - 2 if einstein else n - 1
    div = 3 if einstein else 2
    for k in range(0, kmax + 1):
        for l in range(1, (n + 1 - k) // div + 1):
            yield k, l


def enumerate_values(n: int, mode: str = "general") -> MobilityList:
    """The value list for real dimension 2n."""
    if not isinstance(n, int) or n < 2:
        raise BadDimension("n must be an integer >= 2")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode in ("general", "einstein"):
        vals = {2, (n + 1) ** 2} | {k * k + l for k, l in _kl_pairs(n, mode == "einstein")}
        attain = sorted(v for v in vals if v >= 2)
    elif mode == "affine":
        vals = {k * k + l for k in range(0, n) for l in range(1, n - k + 1)} | {n * n}
        attain = sorted(vals)
    else:
        einstein = mode == "essential_einstein"
        vals = {0, 1, (n + 1) ** 2 - 1} | {k * k + l - 1 for k, l in _kl_pairs(n, einstein)}
        attain = sorted(vals)
    return MobilityList(n, mode, sorted(vals), attain)


def submaximal(n: int) -> int:
    vals = enumerate_values(n, "general").values
    return vals[-2]


@dataclass
class RealizationPlan:
    n: int
    k: int
    l: int
    einstein: bool
    factor_half_dims: list

    @property
    def expected(self) -> int:
        return self.k * self.k + self.l

    @property
    def cone_dim(self) -> int:
        return 2 * (self.n + 1)

    def validate(self) -> None:
        lo = 3 if self.einstein else 2
        if len(self.factor_half_dims) != self.l or any(ki < lo for ki in self.factor_half_dims):
            raise Infeasible("factor sizes violate the lower bound")
        if sum(self.factor_half_dims) != self.n + 1 - self.k:
            raise Infeasible("factor sizes do not add up to n + 1 - k")

    def recipe(self) -> dict:
        """Construct tree for the product cone (see :func:`catalog.build`)."""
        factors = []
        if self.k:
            factors.append({"construct": "catalog", "key": "flat", "params": {"n": self.k}})
        for ki in self.factor_half_dims:
            if self.einstein:
                base = {"construct": "product",
                        "factors": [{"construct": "catalog", "key": "fubini_study",
                                     "params": {"n": 1, "scal": 4 * ki}}] * (ki - 1)}
            else:
                base = {"construct": "catalog", "key": "flat", "params": {"n": ki - 1}}
            factors.append({"construct": "conify", "base": base})
        if len(factors) == 1:
            return factors[0]
        return {"construct": "product", "factors": factors}

    def as_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "l": self.l, "einstein": self.einstein,
                "factor_half_dims": self.factor_half_dims, "expected": self.expected,
                "recipe": self.recipe()}


def realization_plan(n: int, k: int, l: int, einstein: bool = False) -> RealizationPlan:
    """Greedy partition: every factor gets the minimum size, the remainder goes to the first."""
    if n < 1:
        raise BadDimension("n must be positive")
    lo = 3 if einstein else 2
    kmax = n - 2 if einstein else n - 1
    if not 0 <= k <= max(kmax, 0) or l < 1 or lo * l > n + 1 - k:
        raise Infeasible(f"(n, k, l) = ({n}, {k}, {l}) is outside the {'einstein' if einstein else 'general'} bounds")
    sizes = [lo] * l
    sizes[0] += (n + 1 - k) - lo * l
    plan = RealizationPlan(n, k, l, einstein, sizes)
    plan.validate()
    return plan


def flat_plan(n: int) -> dict:
    """Construct tree of the flat cone ℝ^{2(n+1)} (value (n+1)²)."""
    return {"construct": "catalog", "key": "flat", "params": {"n": n + 1}}


def realize_and_verify(plan: RealizationPlan | None = None, config=None, n_flat: int | None = None) -> dict:
    """Build the product cone, measure D̂ with the holonomy module and compare."""
    from .catalog import MAX_REAL_DIM, build
    from .holonomy import block_decomposition, parallel_tensor_dim

    if plan is None:
        if n_flat is None:
            raise ValueError("give a plan or n_flat")
        recipe, expected, dim = flat_plan(n_flat), (n_flat + 1) ** 2, 2 * (n_flat + 1)
        info = {"n": n_flat, "flat": True}
    else:
        plan.validate()
        recipe, expected, dim = plan.recipe(), plan.expected, plan.cone_dim
        info = plan.as_dict()
    if dim > MAX_REAL_DIM:
        raise BadDimension(f"cone dimension {dim} exceeds {MAX_REAL_DIM}")
    entry = build(recipe)
    rep = parallel_tensor_dim(entry.ks, config)
    blocks = block_decomposition(rep.sample, entry.ks)
    return {"plan": info, "expected": expected, "measured": rep.dimension, "match": rep.dimension == expected,
            "blocks": blocks, "holonomy": rep.as_dict()}
