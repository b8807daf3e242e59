import numpy as np
import pytest

from cproj_lab import catalog
from cproj_lab.chart import covariant_derivative, riemann_suite
from cproj_lab.cone import conify
from cproj_lab.errors import NotEinstein, QuadratureFailure
from cproj_lab.kahler import (KahlerStructure, check_quadrature, einstein_residual, holomorphic_curvature_fit,
                              holomorphic_curvature_residual, holomorphic_model, kahler_residuals,
                              line_primitive, potential_from_omega, require_einstein)


def test_flat_residuals_vanish(flat2):
    rep = kahler_residuals(flat2, flat2.sample(10))
    assert rep.max < 1e-12


def test_ricciflat_is_kahler(rf):
    rep = kahler_residuals(rf.ks, rf.ks.sample(20))
    assert rep.max < 1e-7
    assert rep.d_tau is not None and rep.d_tau < 1e-12


def test_fs1_cone_is_kahler(fs1):
    cb = conify(fs1)
    assert kahler_residuals(cb.cone, cb.sample(10)).max < 1e-7


@pytest.mark.parametrize("key", ["flat", "fubini_study", "ricciflat4d", "product"])
def test_nabla_omega_vanishes_independently(key):
    ks = catalog.build(catalog.examples()[key]).ks
    pts = ks.sample(10)
    assert kahler_residuals(ks, pts).max < 1e-7
    assert np.abs(covariant_derivative(ks.omega, ks.g)(pts)).max() < 1e-7


def test_non_integrable_J_is_detected(flat2):
    from cproj_lab.chart import TensorField
    from cproj_lab import jets

    def J_fn(x):
        # rotate the complex structure with the first coordinate: not parallel, not integrable in general
        c, s = jets.cos(x[0]), jets.sin(x[0])
        z = x[0] * 0.0
        return [[z, -c, z, s], [c, z, -s, z], [z, s * -1.0, z, -c], [s * -1.0, z, c, z]]

    bad = KahlerStructure(flat2.g, TensorField(4, (1, 1), J_fn), flat2.box)
    rep = kahler_residuals(bad, flat2.sample(5))
    assert rep.nabla_j > 1e-2


def test_einstein_residuals(flat2, fs2, rf):
    assert einstein_residual(flat2, flat2.sample(5))[0] == 0.0
    res, scal, spread = einstein_residual(rf.ks, rf.ks.sample(10))
    assert res < 1e-7 and abs(scal) < 1e-7
    res, scal, spread = einstein_residual(fs2, fs2.sample(10))
    assert res < 1e-7 and scal == pytest.approx(24.0, abs=1e-8) and spread < 1e-8
    assert require_einstein(fs2, fs2.sample(5)) == pytest.approx(24.0)


def test_require_einstein_rejects(rf, rf_gt):
    gt = KahlerStructure(rf_gt, rf.ks.J, rf.ks.box)
    with pytest.raises(NotEinstein):
        require_einstein(gt, rf.ks.sample(10))


def test_holomorphic_curvature(flat2, fs1, rf):
    assert holomorphic_curvature_residual(flat2, 0.0, flat2.sample(5)) == 0.0
    c, res = holomorphic_curvature_fit(fs1, fs1.sample(5, seed=7))
    assert c == pytest.approx(4.0, abs=1e-8) and res < 1e-7
    assert holomorphic_curvature_residual(fs1, 4.0, fs1.sample(5)) < 1e-7
    for c in (-1.0, 0.0, 1.0, 4.0):
        assert holomorphic_curvature_residual(rf.ks, c, rf.ks.sample(5)) > 1e-2


def test_model_matches_curvature_entrywise(fs2):
    # residual zero for c = 4 is the same statement as R = 4H entry by entry
    pts = fs2.sample(4)
    s = riemann_suite(fs2.g, pts)
    H = holomorphic_model(s.metric, fs2.J(pts))
    assert np.allclose(s.lowered_riemann(), 4.0 * H, atol=1e-8)


def test_potential_quadrature(flat2, fs1, rf):
    for ks in (flat2, fs1):
        tau = potential_from_omega(ks.omega, ks.box)
        pts = ks.sample(10)
        dt = tau.jet(pts, 1).c[1]
        assert np.abs(dt.transpose(0, 2, 1) - dt - ks.omega(pts)).max() < 1e-6
    tau_flat = potential_from_omega(flat2.omega, flat2.box)
    x = flat2.sample(3)
    assert np.allclose(tau_flat(x), 0.5 * np.einsum("ij,ni->nj", flat2.omega(x[:1])[0], x), atol=1e-13)
    tau = potential_from_omega(rf.ks.omega, rf.ks.box)
    pts = rf.ks.sample(5)
    dt = tau.jet(pts, 1).c[1]
    assert np.abs(dt.transpose(0, 2, 1) - dt - rf.ks.omega(pts)).max() < 1e-6


def test_line_primitive_and_failure(fs1):
    from cproj_lab.chart import TensorField
    from cproj_lab import jets
    closed = TensorField(2, (0, 1), lambda x: [x[1] * jets.cos(x[0] * x[1]), x[0] * jets.cos(x[0] * x[1])])
    f = line_primitive(closed, [0.0, 0.0])
    pts = fs1.sample(5)
    assert np.allclose(f(pts), np.sin(pts[:, 0] * pts[:, 1]), atol=1e-12)
    assert check_quadrature(f, closed, pts) < 1e-9
    not_closed = TensorField(2, (0, 1), lambda x: [x[1], x[1] * 0.0])
    with pytest.raises(QuadratureFailure):
        check_quadrature(line_primitive(not_closed, [0.0, 0.0]), not_closed, pts)
