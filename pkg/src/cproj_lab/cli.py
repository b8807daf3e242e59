"""Command line driver: ``cproj-lab verify|conify|holonomy-dim|mobility|jplanar|example``.

Every command prints one JSON report with ``"schema": "cproj-lab/1"``.  Module
errors become failed checks.  The exit code is 0 exactly when every check
passes, 2 for an invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .errors import CprojError, SchemaError

SCHEMA = "cproj-lab/1"
SUITES = ("kahler", "cproj", "conify", "holonomy", "mobility", "jplanar", "all")

DEFAULT_TOLERANCES = {
    "kahler": 1e-7,
    "cproj": 1e-7,
    "conify": 1e-6,
    "parallel": 1e-6,
    "jplanar": 1e-5,
    "geodesic": 1e-7,
    "nonzero": 1e-2,
}


@dataclass
class RunConfig:
    manifold: dict
    suite: str = "all"
    seed: int = 0
    points: int = 12
    loops: int = 4
    trials: int = 5
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    jobs: int = 1

    @classmethod
    def from_json(cls, data, **overrides) -> "RunConfig":
        """Accept a bare construct tree or ``{"manifold": tree, ...options}``."""
        if not isinstance(data, dict):
            raise SchemaError("configuration must be a JSON object")
        if "manifold" in data:
            opts = {k: v for k, v in data.items() if k != "manifold"}
            tree = data["manifold"]
        else:
            opts, tree = {}, data
        unknown = set(opts) - {"suite", "seed", "points", "loops", "trials", "tolerances", "jobs"}
        if unknown:
            raise SchemaError(f"unknown configuration keys: {sorted(unknown)}")
        opts.update({k: v for k, v in overrides.items() if v is not None})
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(opts.pop("tolerances", {}) or {})
        cfg = cls(manifold=tree, tolerances=tol, **opts)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.manifold, dict) or "construct" not in self.manifold:
            raise SchemaError("manifold must be a construct tree with a 'construct' field")
        if self.suite not in SUITES:
            raise SchemaError(f"suite must be one of {SUITES}")
        for name in ("seed", "points", "loops", "trials", "jobs"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < (0 if name == "seed" else 1):
                raise SchemaError(f"{name} must be a {'non-negative' if name == 'seed' else 'positive'} integer")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise SchemaError(f"tolerance {k!r} must be > 0")

    def echo(self) -> dict:
        return {"seed": self.seed, "points": self.points, "loops": self.loops, "trials": self.trials,
                "tolerances": dict(sorted(self.tolerances.items())), "suite": self.suite}


# -- checks ------------------------------------------------------------------------------

def check(name: str, value, tol: float, relation: str = "<") -> dict:
    """A check passes when ``value < tol`` (or ``value > tol`` for relation '>', '==' for exact)."""
    if relation == "==":
        ok = value == tol
    elif relation == ">":
        ok = bool(np.isfinite(value) and value > tol)
    else:
        ok = bool(np.isfinite(value) and value < tol)
    out = {"name": name, "max_residual": _num(value), "tolerance": _num(tol), "pass": ok}
    if relation != "<":
        out["relation"] = relation
    return out


def failed(name: str, err: BaseException) -> dict:
    return {"name": name, "max_residual": None, "tolerance": None, "pass": False,
            "error": f"{type(err).__name__}: {err}"}


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return float(v)


def _guard(name: str, fn: Callable[[], list]) -> list:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return fn()
    except (CprojError, ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
        return [failed(name, err)]


def _kahler_checks(entry, cfg: RunConfig) -> list:
    from .kahler import kahler_residuals
    tol = cfg.tolerances["kahler"]
    rep = kahler_residuals(entry.ks, entry.ks.sample(cfg.points, cfg.seed))
    return [check(f"kahler.{k}", v, tol) for k, v in rep.as_dict().items() if v is not None]


def _solutions(entry, cfg: RunConfig) -> list:
    """Known solutions for the entry: catalog-supplied, FS (normalized) or flat families."""
    from . import families
    rng = np.random.default_rng(cfg.seed)
    ks = entry.ks
    if entry.solution is not None:
        return [entry.solution]
    if entry.key == "fubini_study" and "scal" not in entry.params:
        return [families.fs_solution(ks, families.random_hermitian_complex(ks.n + 1, rng), "fs_random")]
    if entry.key == "flat":
        C = families.random_hermitian_real(ks.dim, rng)
        return [families.flat_linear(ks, rng.normal(size=ks.dim), C), families.flat_quadratic(ks, 1.0, C)]
    return []


def _cproj_checks(entry, cfg: RunConfig) -> list:
    from . import cproj
    from .chart import riemann_suite
    from .kahler import einstein_residual
    tol = cfg.tolerances["cproj"]
    pts = entry.ks.sample(cfg.points, cfg.seed)
    out = []
    for i, sol in enumerate(_solutions(entry, cfg)):
        tag = f"cproj.solution{i}"
        out += _guard(f"{tag}.mainA", lambda: [check(f"{tag}.mainA", cproj.mainA_residual(sol, pts).max_abs, tol)])
        out += _guard(f"{tag}.hermitian", lambda: [check(f"{tag}.hermitian", cproj.hermitian_residual(sol, pts), tol)])
        if sol.mu is not None and sol.B is not None:
            out += _guard(f"{tag}.triple", lambda: [check(f"{tag}.triple.{k}", v, tol)
                                                    for k, v in cproj.triple_residual(sol, pts).items()])
    facts = entry.facts
    if facts.get("ricci_flat"):
        def ricci():
            s = riemann_suite(entry.ks.g, pts)
            return [check("cproj.ricci_flat", float(np.abs(s.ricci).max()), tol),
                    check("cproj.curvature_nonzero", float(np.abs(s.riemann).max()), cfg.tolerances["nonzero"], ">")]
        out += _guard("cproj.ricci_flat", ricci)
    if entry.key == "fubini_study":
        def einstein():
            res, scal, _ = einstein_residual(entry.ks, pts)
            return [check("cproj.einstein", res, tol), check("cproj.scal", abs(scal - facts["scal"]), tol)]
        out += _guard("cproj.einstein", einstein)
    if entry.solution is not None and entry.key == "ricciflat4d":
        def nonparallel():
            from .chart import christoffel_jet, covariant_derivative_jet
            gj = entry.ks.g.jet(pts, 1)
            nA = covariant_derivative_jet(entry.solution.A.jet(pts, 1), christoffel_jet(gj), (0, 2)).value
            return [check("cproj.nabla_A_nonzero", float(np.abs(nA).max()), cfg.tolerances["nonzero"], ">")]
        out += _guard("cproj.nabla_A_nonzero", nonparallel)
    for name, v in sorted(entry.vector_fields.items()):
        def field_checks(v=v, name=name):
            res = [check(f"cproj.field_{name}", cproj.cproj_field_residual(v, entry.ks, pts), tol * 10)]
            if "lie_v_g" in facts:
                L = cproj.lie_derivative_metric(v, entry.ks.g)(pts)
                res.append(check(f"cproj.lie_{name}_g", float(np.abs(L - facts["lie_v_g"] * entry.ks.g(pts)).max()), tol))
            return res
        out += _guard(f"cproj.field_{name}", field_checks)
    return out


def _conify_checks(entry, cfg: RunConfig) -> list:
    from . import cone
    from .catalog import MAX_REAL_DIM
    from .kahler import kahler_residuals
    if entry.cone is not None:
        return [check("conify.cone_input", 0.0, 1.0)]  # already a cone; its own Kähler checks apply
    if entry.ks.dim + 2 > MAX_REAL_DIM:
        return [failed("conify", SchemaError(f"cone dimension exceeds {MAX_REAL_DIM}"))]
    tol = cfg.tolerances["conify"]
    cb = cone.conify(entry.ks)
    pts = cb.sample(cfg.points, cfg.seed)
    out = _guard("conify.kahler", lambda: [check(f"conify.kahler.{k}", v, tol)
                                           for k, v in kahler_residuals(cb.cone, pts).as_dict().items()
                                           if v is not None])
    out += _guard("conify.connection", lambda: [check(f"conify.{k}", v, tol)
                                                for k, v in cone.connection_residuals(cb, pts).items()])
    out += _guard("conify.curvature", lambda: [check(f"conify.{k}", v, tol)
                                               for k, v in cone.curvature_residuals(cb, pts).items()])
    for i, sol in enumerate(_solutions(entry, cfg)):
        if sol.B is None or abs(sol.B + 1.0) > 1e-12:
            continue

        def lifted(sol=sol, i=i):
            Ahat = cone.lift_solution(cb, sol)
            back = cone.read_solution(cb, Ahat, pts)
            bp = cb.base_points(pts)
            rt = max(float(np.abs(back["A"] - sol.A(bp)).max()), float(np.abs(back["lam"] - sol.lam(bp)).max()),
                     float(np.abs(back["mu"] - sol.mu(bp)).max()))
            return [check(f"conify.lift{i}.parallel", cone.parallel_residual(cb, Ahat, pts), cfg.tolerances["parallel"]),
                    check(f"conify.lift{i}.hermitian", cone.hermitian_residual_cone(cb, Ahat, pts), tol),
                    check(f"conify.lift{i}.readback", rt, tol)]
        out += _guard(f"conify.lift{i}", lifted)
    return out


def _holonomy_report(entry, cfg: RunConfig) -> dict:
    from .holonomy import HolonomyConfig, block_decomposition, parallel_tensor_dim
    hc = HolonomyConfig(n_loops=cfg.loops, seed=cfg.seed, jobs=cfg.jobs)
    rep = parallel_tensor_dim(entry.ks, hc)
    d = rep.as_dict()
    d["config"].pop("jobs", None)  # parallelism does not change the answer
    d["blocks"] = block_decomposition(rep.sample, entry.ks, seed=cfg.seed)
    return d


def _holonomy_checks(entry, cfg: RunConfig, sink: dict) -> list:
    def run():
        d = _holonomy_report(entry, cfg)
        sink["holonomy"] = d
        out = [check("holonomy.stabilized", d["stabilized"], True, "==")]
        hist = d["history"]
        spans = [h["span_dim"] for h in hist]
        dims = [h["D_hat"] for h in hist]
        # more loops can only enlarge the sampled span, so D̂ can only shrink
        out.append(check("holonomy.monotone", spans == sorted(spans) and dims == sorted(dims, reverse=True),
                         True, "=="))
        return out
    return _guard("holonomy", run)


def _mobility_checks(entry, cfg: RunConfig, sink: dict) -> list:
    from .mobility import enumerate_values
    n = entry.ks.n
    if n < 2:
        return []

    def run():
        lst = enumerate_values(n, "general")
        sink["mobility"] = lst.as_dict()
        v = lst.values
        return [check("mobility.max", v[-1], (n + 1) ** 2, "=="),
                check("mobility.submax", v[-2], n * n - 2 * n + 2, "==")]
    return _guard("mobility", run)


def _jplanar_checks(entry, cfg: RunConfig, sink: dict) -> list:
    from . import cproj, jplanar
    from .chart import geodesic_integrate
    ks = entry.ks
    rng = np.random.default_rng(cfg.seed)

    def geodesics():
        worst = 0.0
        for _ in range(cfg.trials):
            p, X = jplanar._random_start(ks.box, rng)
            span = float(np.min(np.array(ks.box.hi) - np.array(ks.box.lo)))
            X = X * 0.25 * span / np.sqrt(X @ ks.g(p[None])[0] @ X)
            worst = max(worst, jplanar.jplanar_residual(ks, geodesic_integrate(ks.g, p, X, 0.5, 100, ks.box)).residual)
        return [check("jplanar.geodesics", worst, cfg.tolerances["geodesic"])]
    out = _guard("jplanar.geodesics", geodesics)
    if entry.solution is not None:
        def probe():
            pts = ks.sample(cfg.points, cfg.seed)
            gt = cproj.metric_from_solution(ks.g, entry.solution.A, pts)
            rep = jplanar.equivalence_probe(ks, gt, trials=cfg.trials, seed=cfg.seed, both=False)
            sink["jplanar_probe"] = rep.as_dict()
            return [check("jplanar.probe", rep.max_residual, cfg.tolerances["jplanar"])]
        out += _guard("jplanar.probe", probe)
    return out


def run(cfg: RunConfig) -> dict:
    """Run the configured suite on the configured manifold and assemble a report."""
    from .catalog import build
    report = {"schema": SCHEMA, "version": __version__, "config": cfg.echo(), "manifold": cfg.manifold}
    try:
        entry = build(cfg.manifold)
    except CprojError as err:
        report.update(checks=[failed("build", err)], passed=False)
        return report
    report["entry"] = entry.describe()
    extra: dict = {}
    suites = SUITES[:-1] if cfg.suite == "all" else (cfg.suite,)
    tasks = {
        "kahler": lambda: _guard("kahler", lambda: _kahler_checks(entry, cfg)),
        "cproj": lambda: _guard("cproj", lambda: _cproj_checks(entry, cfg)),
        "conify": lambda: _guard("conify", lambda: _conify_checks(entry, cfg)),
        "holonomy": lambda: _holonomy_checks(entry, cfg, extra),
        "mobility": lambda: _mobility_checks(entry, cfg, extra),
        "jplanar": lambda: _jplanar_checks(entry, cfg, extra),
    }
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(lambda s: tasks[s](), suites))
    else:
        results = [tasks[s]() for s in suites]
    checks = [c for r in results for c in r]
    report["checks"] = checks
    report.update({k: extra[k] for k in sorted(extra)})
    report["passed"] = all(c["pass"] for c in checks)
    return report


# -- other commands -----------------------------------------------------------------------

def conify_report(tree: dict, cfg: RunConfig) -> dict:
    from .catalog import build
    report = {"schema": SCHEMA, "version": __version__, "config": cfg.echo(), "manifold": tree}
    try:
        entry = build(tree)
    except CprojError as err:
        report.update(checks=[failed("build", err)], passed=False)
        return report
    from .cone import conify
    checks = _guard("conify", lambda: _conify_checks(entry, cfg))
    if entry.cone is None and entry.ks.dim + 2 <= 12:
        cone = conify(entry.ks).cone
        report["cone"] = {"dim": cone.dim, "box": {"lo": list(cone.box.lo), "hi": list(cone.box.hi)},
                          "coordinates": ["r", "t"] + [f"x{i}" for i in range(entry.ks.dim)]}
    report["checks"] = checks
    report["passed"] = all(c["pass"] for c in checks)
    return report


def holonomy_report(tree: dict, cfg: RunConfig) -> dict:
    from .catalog import build
    report = {"schema": SCHEMA, "version": __version__, "config": cfg.echo(), "manifold": tree}
    extra: dict = {}
    try:
        entry = build(tree)
        checks = _holonomy_checks(entry, cfg, extra)
    except CprojError as err:
        checks = [failed("build", err)]
    report.update(extra)
    report["checks"] = checks
    report["passed"] = all(c["pass"] for c in checks)
    return report


def mobility_report(n: int, mode: str, realize=None, einstein: bool = False, loops: int = 4,
                    seed: int = 0, jobs: int = 1, table: int | None = None) -> dict:
    from .holonomy import HolonomyConfig
    from .mobility import MODES, enumerate_values, realization_plan, realize_and_verify
    report = {"schema": SCHEMA, "version": __version__,
              "config": {"n": n, "mode": mode, "seed": seed, "loops": loops, "realize": realize,
                         "einstein": einstein}}
    checks = []
    try:
        lst = enumerate_values(n, mode)
        report["values"] = lst.values
        report["attainable"] = lst.attainable
        checks.append(check("mobility.enumerate", 0.0, 1.0))
    except (CprojError, ValueError) as err:
        checks.append(failed("mobility.enumerate", err))
    if table:
        report["table"] = {str(m): {md: enumerate_values(m, md).values for md in MODES}
                           for m in range(2, table + 1)}
    if realize is not None:
        k, l = realize

        def run_plan():
            plan = realization_plan(n, k, l, einstein)
            res = realize_and_verify(plan, HolonomyConfig(n_loops=loops, seed=seed, jobs=jobs))
            res["holonomy"]["config"].pop("jobs", None)
            report["realization"] = res
            return [check("mobility.realize", res["measured"], res["expected"], "==")]
        checks += _guard("mobility.realize", run_plan)
    report["checks"] = checks
    report["passed"] = all(c["pass"] for c in checks)
    return report


def jplanar_report(tree: dict, cfg: RunConfig, csv_path: str | None = None) -> dict:
    from . import cproj, jplanar
    from .catalog import build
    report = {"schema": SCHEMA, "version": __version__, "config": cfg.echo(), "manifold": tree}
    checks = []
    try:
        entry = build(tree)
        if entry.solution is None:
            raise SchemaError("jplanar probe needs a manifold with a known solution (e.g. ricciflat4d)")
        ks = entry.ks

        def probe():
            gt = cproj.metric_from_solution(ks.g, entry.solution.A, ks.sample(cfg.points, cfg.seed))
            rep = jplanar.equivalence_probe(ks, gt, trials=cfg.trials, seed=cfg.seed)
            report["trials"] = [dict(t.__dict__) for t in rep.trials]
            if csv_path:
                t0 = rep.trials[0]
                from .chart import geodesic_integrate
                jplanar.write_csv(geodesic_integrate(gt, np.array(t0.p), np.array(t0.X), 0.5, 200, ks.box), csv_path)
            return [check("jplanar.probe", rep.max_residual, cfg.tolerances["jplanar"])]
        checks = _guard("jplanar.probe", probe)
    except CprojError as err:
        checks = [failed("jplanar", err)]
    report["checks"] = checks
    report["passed"] = all(c["pass"] for c in checks)
    return report


def example_report(action: str, key: str | None) -> dict:
    from .catalog import examples
    ex = examples()
    if action == "list":
        return {"schema": SCHEMA, "examples": sorted(ex)}
    if key not in ex:
        raise SchemaError(f"unknown example {key!r}; known: {', '.join(sorted(ex))}")
    return ex[key]


# -- entry point ---------------------------------------------------------------------------

def _load(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise SchemaError(f"cannot read {path}: {err}") from err


def _pair(text: str):
    try:
        k, l = (int(s) for s in text.split(","))
    except ValueError as err:
        raise argparse.ArgumentTypeError("expected k,l") from err
    return k, l


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get("CPROJ_LAB_JOBS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cproj-lab", description="c-projective geometry checks on Kähler charts")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--jobs", type=int, default=None, help="parallel workers (default: CPROJ_LAB_JOBS or 1)")
    p.add_argument("--out", help="write the JSON report here as well as to stdout")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, loops=False):
        sp.add_argument("file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--points", type=int)
        sp.add_argument("--trials", type=int)
        if loops:
            sp.add_argument("--loops", type=int)

    v = sub.add_parser("verify", help="run a verification suite on a manifold")
    common(v, loops=True)
    v.add_argument("--suite", choices=SUITES)
    common(sub.add_parser("conify", help="build and check the cone over a manifold"))
    h = sub.add_parser("holonomy-dim", help="dimension of parallel hermitian tensors")
    common(h, loops=True)
    m = sub.add_parser("mobility", help="degree-of-mobility value lists")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--mode", default="general")
    m.add_argument("--realize", type=_pair, help="k,l: build the product cone and measure its value")
    m.add_argument("--einstein", action="store_true", help="use Ricci-flat factors for --realize")
    m.add_argument("--loops", type=int, default=4)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--table", type=int, help="also list every mode for 2 <= n <= TABLE")
    j = sub.add_parser("jplanar", help="J-planar curve tools")
    jsub = j.add_subparsers(dest="action", required=True)
    jp = jsub.add_parser("probe", help="test geodesics of one metric for J-planarity w.r.t. the other")
    common(jp)
    jp.add_argument("--csv", help="write samples of the first probe curve")
    e = sub.add_parser("example", help="list or dump example construct trees")
    e.add_argument("action", choices=("list", "dump"))
    e.add_argument("key", nargs="?")
    return p


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)
    print(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    jobs = args.jobs if args.jobs is not None else _jobs_default()
    try:
        if args.command == "example":
            report = example_report(args.action, args.key)
            _emit(report, args.out)
            return 0
        if args.command == "mobility":
            report = mobility_report(args.n, args.mode, args.realize, args.einstein, args.loops, args.seed,
                                     jobs, args.table)
        else:
            overrides = {k: getattr(args, k, None) for k in ("seed", "points", "trials", "loops", "suite")}
            cfg = RunConfig.from_json(_load(args.file), jobs=jobs, **overrides)
            if args.command == "verify":
                report = run(cfg)
            elif args.command == "conify":
                report = conify_report(cfg.manifold, cfg)
            elif args.command == "holonomy-dim":
                report = holonomy_report(cfg.manifold, cfg)
            else:
                report = jplanar_report(cfg.manifold, cfg, args.csv)
    except SchemaError as err:
        _emit({"schema": SCHEMA, "error": f"SchemaError: {err}", "passed": False}, args.out)
        return 2
    _emit(report, args.out)
    return 0 if report.get("passed") else 1


if __name__ == "__main__":
    sys.exit(main())
