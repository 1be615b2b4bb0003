import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nhskin as nh
from nhskin.models import SIGMA_X, SIGMA_Y, SIGMA_Z

from conftest import PARAMS, sort_spectrum


def test_symplectic_at_k0_is_scalar(symplectic):
    H = nh.bloch_matrix(symplectic, 0.0)
    np.testing.assert_allclose(H, 4.0 * np.eye(2), atol=1e-14)


def test_symplectic_at_half_pi(symplectic):
    H = nh.bloch_matrix(symplectic, np.pi / 2)
    expected = np.array([[-1.6j, -0.2], [-0.2, 1.6j]])
    np.testing.assert_allclose(H, expected, atol=1e-14)


def test_symplectic_at_pi(symplectic):
    np.testing.assert_allclose(nh.bloch_matrix(symplectic, np.pi),
                               -4.0 * np.eye(2), atol=1e-14)


def test_ordinary_values(ordinary):
    assert abs(nh.bloch_matrix(ordinary, 0.0)[0, 0]) < 1e-14
    # k = pi lands on the same spectral point as k = 0: the self-intersection
    assert abs(nh.bloch_matrix(ordinary, np.pi)[0, 0]) < 1e-14
    assert abs(nh.bloch_matrix(ordinary, np.pi / 2)[0, 0] - 2.0) < 1e-14
    val = nh.bloch_matrix(ordinary, np.pi / 9)[0, 0]
    assert abs(val - (2 * np.sin(np.pi / 9) - 1j * np.sin(2 * np.pi / 9))) < 1e-14


@settings(max_examples=30, deadline=None)
@given(k=st.floats(min_value=-10.0, max_value=10.0))
def test_bloch_periodicity(k):
    model = nh.build_symplectic_hn(PARAMS)
    H1 = nh.bloch_matrix(model, k)
    H2 = nh.bloch_matrix(model, k + 2 * np.pi)
    np.testing.assert_allclose(H1, H2, atol=1e-12)


@pytest.mark.parametrize("builder,n", [("symplectic", 120), ("ordinary", 60)])
def test_block_circulant_equivalence(builder, n, symplectic, ordinary):
    model = symplectic if builder == "symplectic" else ordinary
    H = nh.real_space_hamiltonian(model, n, nh.PBC)
    ev = np.linalg.eigvals(H.matrix)
    k = 2 * np.pi * np.arange(n) / n
    bloch_ev = np.concatenate([np.linalg.eigvals(nh.bloch_matrix(model, kk)) for kk in k])
    np.testing.assert_allclose(sort_spectrum(ev), sort_spectrum(bloch_ev), atol=1e-9)


def test_obc_matrix_banded_no_wrap(ordinary):
    n = 30
    H = nh.real_space_hamiltonian(ordinary, n, nh.OBC).matrix
    assert H[0, n - 1] == 0 and H[0, n - 2] == 0
    assert H[n - 1, 0] == 0 and H[n - 2, 0] == 0
    # bulk bands intact
    assert H[0, 1] == -1j and H[1, 0] == 1j
    assert H[0, 2] == -0.5 and H[2, 0] == 0.5


def test_winding_control_zeroes_one_direction(symplectic):
    n = 24
    pbc = nh.real_space_hamiltonian(symplectic, n, nh.PBC).matrix
    wc = nh.real_space_hamiltonian(
        symplectic, n, nh.winding_control(nh.Suppress.LEFTWARD_END_HOPS)).matrix
    # leftward wrap block (positive offset, lower-left corner) removed
    assert np.all(wc[2 * (n - 1):, :2] == 0)
    assert np.any(pbc[2 * (n - 1):, :2] != 0)
    # rightward wrap block intact, bulk unchanged
    np.testing.assert_array_equal(wc[:2, 2 * (n - 1):], pbc[:2, 2 * (n - 1):])
    interior = np.s_[2:2 * (n - 1), 2:2 * (n - 1)]
    np.testing.assert_array_equal(wc[interior], pbc[interior])


def test_real_space_requires_enough_sites(ordinary):
    with pytest.raises(ValueError):
        nh.real_space_hamiltonian(ordinary, 4, nh.PBC)


def test_atrs_holds_for_symplectic(symplectic):
    sym = nh.SymmetryDescriptor(nh.SymmetryKind.ATRS, SIGMA_Y)
    assert nh.check_symmetry(symplectic, sym).max_deviation < 1e-12


def test_pseudo_hermiticity_holds(symplectic):
    sym = nh.SymmetryDescriptor(nh.SymmetryKind.PSEUDO_HERMITICITY, SIGMA_X)
    assert nh.check_symmetry(symplectic, sym).max_deviation < 1e-12


def test_atrs_negative_control(symplectic):
    # 0.3 sigma_y cos k flips sign under T(.)^T T^{-1} at -k: breaks the symmetry
    broken = nh.models.with_extra_hopping(symplectic, +1, 0.15 * SIGMA_Y)
    broken = nh.models.with_extra_hopping(broken, -1, 0.15 * SIGMA_Y)
    sym = nh.SymmetryDescriptor(nh.SymmetryKind.ATRS, SIGMA_Y)
    assert nh.check_symmetry(broken, sym).max_deviation > 0.1


def test_symmetry_dimension_mismatch(ordinary):
    sym = nh.SymmetryDescriptor(nh.SymmetryKind.ATRS, SIGMA_Y)
    with pytest.raises(ValueError):
        nh.check_symmetry(ordinary, sym)


def test_atrs_operator_validation():
    with pytest.raises(ValueError):
        nh.SymmetryDescriptor(nh.SymmetryKind.ATRS, SIGMA_X)  # T T* = +1
    with pytest.raises(ValueError):
        nh.SymmetryDescriptor(nh.SymmetryKind.PSEUDO_HERMITICITY, SIGMA_Y @ SIGMA_X)


def test_hermitian_reduction():
    model = nh.build_symplectic_hn(nh.ModelParams(t_h=2.0, g=0.0, delta=0.1))
    for k in np.linspace(0, 2 * np.pi, 37):
        H = nh.bloch_matrix(model, k)
        np.testing.assert_allclose(H, H.conj().T, atol=1e-14)


def test_custom_model_entries():
    model = nh.build_custom(1, 1, [(1, 0, 0, 0.0, -1.0), (-1, 0, 0, 0.0, 1.0)])
    # H(k) = -i e^{ik} + i e^{-ik} = 2 sin k
    assert abs(nh.bloch_matrix(model, 0.3)[0, 0] - 2 * np.sin(0.3)) < 1e-14


def test_model_params_validation():
    with pytest.raises(ValueError):
        nh.ModelParams(t_h=float("nan"))
