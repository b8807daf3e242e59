import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cproj_lab import families as F, jplanar as P
from cproj_lab.chart import TensorField, geodesic_integrate
from cproj_lab.cproj import metric_from_solution
from cproj_lab.errors import ZeroVelocity


def _complex_line_curve(ks, coeffs_a, coeffs_b, p=None):
    """p + a(t) u + b(t) Ju on a flat chart: it stays in a complex line."""
    p = np.zeros(ks.dim) if p is None else p
    u = np.zeros(ks.dim)
    u[0], u[-1] = 0.6, 0.3
    J0 = ks.J(p[None])[0]
    w = J0 @ u
    a, b = np.polynomial.Polynomial(coeffs_a), np.polynomial.Polynomial(coeffs_b)

    def fn(t):
        return (p + a(t) * u + b(t) * w, a.deriv()(t) * u + b.deriv()(t) * w,
                a.deriv(2)(t) * u + b.deriv(2)(t) * w)

    return fn


def test_geodesic_is_jplanar_with_zero_coefficients(fs2):
    p, X = np.array([0.1, -0.2, 0.05, 0.15]), np.array([0.3, 0.1, -0.2, 0.4])
    c1 = P.integrate_jplanar(fs2, p, X, T=0.5, steps=200)
    c2 = geodesic_integrate(fs2.g, p, X, 0.5, 200, fs2.box)
    assert np.array_equal(c1.x, c2.x)
    rep = P.jplanar_residual(fs2, c1)
    assert rep.residual < 1e-12
    assert np.abs(rep.alpha).max() < 1e-10 and np.abs(rep.beta).max() < 1e-10


def test_coefficients_are_recovered(fs2):
    p, X = np.array([0.1, 0.0, -0.1, 0.2]), np.array([0.2, -0.3, 0.1, 0.25])
    c = P.integrate_jplanar(fs2, p, X, alpha=[0.2, -0.4], beta=[0.5, 0.0, 0.3], T=0.5, steps=400)
    rec = P.jplanar_residual(fs2, c)
    assert rec.residual < 1e-12
    assert np.allclose(rec.alpha, c.meta["alpha"], atol=1e-10)
    assert np.allclose(rec.beta, c.meta["beta"], atol=1e-10)
    fd = P.jplanar_residual(fs2, c, acceleration="fd")
    assert fd.residual < 1e-7
    assert np.allclose(fd.beta, np.array(c.meta["beta"])[2:-2], atol=1e-7)


def test_distinct_beta_give_distinct_curves(fs1):
    p, X = np.array([0.1, 0.2]), np.array([0.5, 0.0])
    curves = [P.integrate_jplanar(fs1, p, X, beta=b, T=0.5, steps=200) for b in (0.0, 0.5, 1.0)]
    assert P.distinct_curves(curves) > 1e-2


def test_generic_curve_is_not_jplanar(fs2):
    def fn(t):
        return (np.array([0.1 * t, 0.2 * t * t, 0.1 * t ** 3, -0.1 * t]),
                np.array([0.1, 0.4 * t, 0.3 * t * t, -0.1]),
                np.array([0.0, 0.4, 0.6 * t, 0.0]))

    rep = P.jplanar_residual(fs2, P.curve_from_function(fn, 1.0, 50))
    assert rep.residual > 1e-2


def test_dimension_two_every_curve_is_jplanar(fs1):
    def fn(t):
        return np.array([0.2 * t, 0.3 * t ** 3]), np.array([0.2, 0.9 * t * t]), np.array([0.0, 1.8 * t])

    assert P.jplanar_residual(fs1, P.curve_from_function(fn, 1.0, 40)).residual == 0.0


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=4), st.lists(st.floats(-1, 1), min_size=3, max_size=4))
def test_curves_in_a_complex_line_are_jplanar(flat2, ca, cb):
    # any parametrization of a curve inside a complex line of flat space
    ca = [0.0, 0.5] + ca[2:]
    fn = _complex_line_curve(flat2, ca, [0.0] + cb[1:])
    rep = P.jplanar_residual(flat2, P.curve_from_function(fn, 0.5, 40))
    assert rep.residual < 1e-12


@pytest.fixture(scope="module")
def fs2_geodesic(fs2):
    return P.integrate_jplanar(fs2, np.array([0.0, 0.1, -0.1, 0.05]), np.array([0.4, 0.2, 0.1, -0.3]),
                               T=0.5, steps=400)


@given(st.floats(0.3, 3.0), st.floats(-0.5, 0.5))
def test_reparametrized_geodesic_stays_jplanar(fs2, fs2_geodesic, speed, bend):
    base = fs2_geodesic
    # s(t) = speed t + bend t²: x(s(t)) has velocity s' x' and acceleration s'' x' + s'² x''
    ts = np.linspace(0.0, 0.2, 41)
    s = speed * ts + bend * ts * ts
    s = np.clip(s, 0, 0.5)
    idx = np.clip(np.round(s / 0.5 * 400).astype(int), 0, 400)
    sp, spp = speed + 2 * bend * ts, np.full_like(ts, 2 * bend)
    from cproj_lab.chart import Curve
    c = Curve(ts, base.x[idx], sp[:, None] * base.v[idx],
              spp[:, None] * base.v[idx] + (sp * sp)[:, None] * base.a[idx])
    if np.any(sp == 0):
        return
    assert P.jplanar_residual(fs2, c).residual < 1e-12


def test_zero_velocity(fs2, flat2):
    with pytest.raises(ZeroVelocity):
        P.integrate_jplanar(fs2, np.zeros(4), np.zeros(4))
    still = P.curve_from_function(lambda t: (np.zeros(4), np.zeros(4), np.zeros(4)), 1.0, 10)
    with pytest.raises(ZeroVelocity):
        P.jplanar_residual(flat2, still)


def test_probe_on_affine_pair(fs2):
    scaled = TensorField(4, (0, 2), lambda x: fs2.g.at(x) * 2.5)
    rep = P.equivalence_probe(fs2, scaled, trials=3, steps=150)
    assert rep.max_residual < 1e-7


def test_probe_on_projective_pair(fs2):
    sol = F.fs_solution(fs2, np.diag([1.0, 2.0, 3.0]).astype(complex))
    pts = fs2.sample(6)
    gt = metric_from_solution(fs2.g, sol.A, pts)
    rep = P.equivalence_probe(fs2, gt, trials=1, steps=100)
    assert rep.max_residual < 1e-6
    assert {t.direction for t in rep.trials} == {"geodesic(g~) vs g", "geodesic(g) vs g~"}


def test_probe_detects_unrelated_metric(fs2):
    other = TensorField(4, (0, 2), lambda x: fs2.g.at(x) * (x[0] * x[0] + 1.0))
    assert P.equivalence_probe(fs2, other, trials=2, steps=150, both=False).max_residual > 1e-3


def test_probe_ricciflat_example(rf, rf_gt):
    rep = P.equivalence_probe(rf.ks, rf_gt, trials=2, steps=150, both=False)
    assert rep.max_residual < 1e-6


def test_csv_output(fs1, tmp_path):
    c = P.integrate_jplanar(fs1, np.array([0.0, 0.1]), np.array([0.4, 0.2]), beta=0.3, T=0.2, steps=20)
    path = tmp_path / "c.csv"
    P.write_csv(c, path, extra={"res": np.zeros(21)})
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "x0", "x1", "v0", "v1", "alpha", "beta", "res"]
    assert len(rows) == 22 and float(rows[-1][0]) == pytest.approx(0.2)


def test_coefficient_specs():
    assert P.coefficient(2)(5.0) == 2.0
    assert P.coefficient([1.0, 2.0, 3.0])(2.0) == 17.0
    assert P.coefficient(np.sin)(0.0) == 0.0
