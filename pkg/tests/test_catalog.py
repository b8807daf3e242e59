import numpy as np
import pytest

from cproj_lab import catalog
from cproj_lab.chart import riemann_suite
from cproj_lab.cone import conify
from cproj_lab.cproj import cproj_field_residual, lie_derivative_metric, mainA_residual
from cproj_lab.errors import BadParams, SchemaError, UnknownKey
from cproj_lab.kahler import einstein_residual, kahler_residuals


@pytest.mark.parametrize("key", catalog.example_keys())
def test_every_example_is_kahler(key):
    e = catalog.build(catalog.examples()[key])
    assert kahler_residuals(e.ks, e.ks.sample(10)).max < 1e-7
    assert e.describe()["dim"] == e.ks.dim


def test_flat_entry():
    e = catalog.build({"construct": "catalog", "key": "flat", "params": {"n": 2}})
    pts = e.ks.sample(3)
    assert np.array_equal(e.ks.g(pts), np.broadcast_to(np.eye(4), (3, 4, 4)))
    assert np.array_equal(e.ks.J(pts)[0], catalog.standard_J(4))


def test_ricciflat_entry_facts(rf):
    pts = rf.ks.sample(10)
    s = riemann_suite(rf.ks.g, pts)
    assert np.abs(s.ricci).max() < 1e-7 and np.abs(s.riemann).max() > 1e-2
    assert mainA_residual(rf.solution, pts).max_abs < 1e-6
    v = rf.vector_fields["v"]
    assert cproj_field_residual(v, rf.ks, pts) < 1e-6
    L = lie_derivative_metric(v, rf.ks.g)(pts)
    assert np.abs(L - 3.0 * rf.ks.g(pts)).max() < 1e-7
    assert np.all(rf.ks.box.sample(50)[:, 0] - rf.ks.box.sample(50)[:, 1] >= 0.5)


def test_fs2_entry():
    e = catalog.build({"construct": "catalog", "key": "fubini_study", "params": {"n": 2}})
    res, scal, _ = einstein_residual(e.ks, e.ks.sample(10))
    assert res < 1e-7 and scal == pytest.approx(24.0, abs=1e-8)
    assert e.facts["B"] == -1.0 and e.facts["scale"] == pytest.approx(1.0)


def test_fs_rescaled():
    e = catalog.build({"construct": "catalog", "key": "fubini_study", "params": {"n": 1, "scal": 24}})
    _, scal, _ = einstein_residual(e.ks, e.ks.sample(5))
    assert scal == pytest.approx(24.0, abs=1e-8) and e.facts["B"] == pytest.approx(-3.0)


@pytest.mark.parametrize("n", [1, 2])
def test_fs_cone_is_flat(n):
    cb = conify(catalog.fubini_study(n))
    assert np.abs(riemann_suite(cb.cone.g, cb.sample(8)).riemann).max() < 1e-6


def test_fs_cone_chart_pulls_back_cone_metric():
    from cproj_lab import jets
    from cproj_lab.jets import Jet
    cb = conify(catalog.fubini_study(1))
    phi = catalog.fs_cone_chart(1)
    pts = cb.sample(5)
    D = phi(Jet.variables(pts, 1)).c[1]
    assert np.allclose(np.einsum("nai,naj->nij", D, D), cb.cone.g(pts), atol=1e-12)


def test_product_and_conify_constructs():
    e = catalog.build(catalog.examples()["product"])
    assert e.ks.dim == 4 and e.facts["factor_dims"] == [2, 2]
    c = catalog.build(catalog.examples()["conify"])
    assert c.cone is not None and c.ks.dim == 4


def test_errors():
    with pytest.raises(UnknownKey):
        catalog.build({"construct": "catalog", "key": "sphere"})
    with pytest.raises(BadParams):
        catalog.build({"construct": "catalog", "key": "flat", "params": {"n": 0}})
    with pytest.raises(BadParams):
        catalog.build({"construct": "catalog", "key": "fubini_study", "params": {"n": 1, "scal": -1}})
    with pytest.raises(BadParams):
        catalog.build({"construct": "catalog", "key": "ricciflat4d", "params": {"a": 1}})
    with pytest.raises(SchemaError):
        catalog.build({"key": "flat"})
    with pytest.raises(SchemaError):
        catalog.build({"construct": "product", "factors": []})
    with pytest.raises(BadParams):
        catalog.build({"construct": "conify", "base": {"construct": "catalog", "key": "flat", "params": {"n": 6}}})
