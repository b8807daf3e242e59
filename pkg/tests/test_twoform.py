import numpy as np
import pytest
from hypothesis import given, strategies as st

from cproj_lab import catalog, cproj as C, families as F, twoform as T
from cproj_lab.chart import TensorField
from cproj_lab.errors import DimensionTooSmall


@pytest.fixture(scope="module")
def fs3():
    return catalog.fubini_study(3)


def test_g_maps_to_omega(fs1):
    pts = fs1.sample(5)
    assert np.allclose(T.phi_from_A(fs1, fs1.g)(pts), fs1.omega(pts), atol=1e-14)
    assert np.allclose(T.trace_omega(fs1, fs1.omega)(pts), 2.0, atol=1e-13)  # tr_ω ω = 2n


def test_round_trips_on_fs3(fs3):
    pts = fs3.sample(6)
    sol = F.fs_solution(fs3, F.random_hermitian_complex(4, np.random.default_rng(0)))
    rep = T.twoform_bridge(fs3, pts, A=sol.A)
    assert rep.roundtrip_A < 1e-9 and rep.roundtrip_phi < 1e-9
    assert rep.hamiltonian < 1e-7 and rep.conformal_killing < 1e-7
    assert abs(rep.hamiltonian - rep.mainA) < 1e-7
    back = T.twoform_bridge(fs3, pts, psi=rep.psi)
    assert np.abs(back.A(pts) - sol.A(pts)).max() < 1e-9
    assert np.abs(T.solution_from_phi(fs3, rep.phi).A(pts) - sol.A(pts)).max() < 1e-12


def test_ricciflat_hamiltonian(rf):
    rep = T.twoform_bridge(rf.ks, rf.ks.sample(10), A=rf.solution.A)
    assert rep.hamiltonian < 1e-7 and rep.roundtrip_phi is None


def test_psi_to_phi_needs_dimension_above_four(fs2):
    with pytest.raises(DimensionTooSmall):
        T.phi_from_psi(fs2, fs2.omega)


def test_exactly_one_input(fs1):
    with pytest.raises(ValueError):
        T.twoform_bridge(fs1, fs1.sample(2))


@given(st.integers(0, 10_000))
def test_hamiltonian_norm_equals_mainA_norm_on_non_solutions(seed):
    ks = catalog.fubini_study(3)
    rng = np.random.default_rng(seed)
    S = F.random_hermitian_real(6, rng)
    bad = TensorField(6, (0, 2), lambda x: ks.g.at(x) + (x[0] * 0.3) * S)
    pts = ks.sample(3, seed=seed % 97)
    rep = T.twoform_bridge(ks, pts, A=bad)
    assert rep.mainA > 1e-3
    assert abs(rep.hamiltonian - rep.mainA) < 1e-9 * max(1.0, rep.mainA)
    assert rep.roundtrip_phi < 1e-12
