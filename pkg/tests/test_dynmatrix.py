import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topamp import (ConfigurationError, DriveSpec, DynamicalMatrix, LatticeSpec, WaveguideSpec,
                    build_bogoliubov_matrix, build_dynamical_matrix, coupling_matrices, singular_decomposition,
                    stability)
from topamp.dynmatrix import doubled_hamiltonian, eigenvalues, random_stable_matrix

from conftest import chain


def test_normal_matrix_is_lower_triangular_with_gain_on_diagonal():
    dm = chain([0.3, 1.2], 5.0, 10, pump=0.4, delta=0.25)
    assert np.all(np.triu(dm.M, 1) == 0)
    assert np.allclose(np.diag(dm.M), 0.25 + 0.5j * (0.4 - 1.0))


def test_parametric_drive_needs_bogoliubov_form():
    cm = coupling_matrices(WaveguideSpec.equal([0.0], 2.0), LatticeSpec(4))
    with pytest.raises(ConfigurationError):
        build_dynamical_matrix(cm, DriveSpec(g_s=0.5))


def test_bogoliubov_blocks():
    cm = coupling_matrices(WaveguideSpec.equal([0.7], 2.0), LatticeSpec(5))
    dm = build_bogoliubov_matrix(cm, DriveSpec(pump=0.1, g_s=0.3, delta=1.0, parametric_factor=2))
    A = cm.sigma + (0.05j + 1.0) * np.eye(5)
    assert dm.dim == 10
    assert np.allclose(dm.M[:5, :5], A)
    assert np.allclose(dm.M[5:, 5:], -A.conj())
    assert np.allclose(dm.M[:5, 5:], 0.6 * np.eye(5))
    assert np.allclose(dm.M[5:, :5], -0.6 * np.eye(5))


@pytest.mark.parametrize("kwargs", [dict(pump=-0.1), dict(g_s=-1.0), dict(parametric_factor=3)])
def test_invalid_drive(kwargs):
    with pytest.raises(ConfigurationError):
        DriveSpec(**kwargs)


def test_drive_vector_shape_checked():
    d = DriveSpec(omega=np.ones(3))
    with pytest.raises(ConfigurationError):
        d.drive_vector(4)
    assert DriveSpec().drive_vector(4).tolist() == [0j] * 4
    assert DriveSpec.site_drive(4, -1)[3] == 1


@pytest.mark.parametrize("pump,stable", [(0.0, True), (0.99, True), (1.01, False), (1.7, False)])
def test_pump_threshold_is_total_decay(pump, stable):
    for l in (1.0, 30.0, 1000.0):
        assert stability(chain([0.0, 2.0], l, 60, pump=pump)).stable is stable


def test_parametric_threshold():
    # site block eigenvalues: -i Gamma/2 +- sqrt(Delta^2 - (f g)^2)
    cm = coupling_matrices(WaveguideSpec.equal([0.0], 50.0), LatticeSpec(40))
    for f in (1, 2):
        thr = np.sqrt(1.0 + 0.25) / f
        lo = build_bogoliubov_matrix(cm, DriveSpec(g_s=0.98 * thr, delta=1.0, parametric_factor=f))
        hi = build_bogoliubov_matrix(cm, DriveSpec(g_s=1.02 * thr, delta=1.0, parametric_factor=f))
        assert stability(lo).stable and not stability(hi).stable


def test_structured_eigenvalues_are_the_centre_of_the_dense_cluster():
    # every site block has the same eigenvalue pair, so the dense solver meets
    # 6-fold defective eigenvalues and scatters them by ~eps**(1/6)
    cm = coupling_matrices(WaveguideSpec.equal([0.4, 2.0], 0.7), LatticeSpec(6))
    dm = build_bogoliubov_matrix(cm, DriveSpec(g_s=0.4, delta=0.6))
    ours = eigenvalues(dm)
    dense = np.linalg.eigvals(dm.M)
    lam = -0.5j + np.sqrt(0.6 ** 2 - 0.4 ** 2)
    assert np.allclose(np.sort_complex(ours), [-lam.conjugate()] * 6 + [lam] * 6)
    upper = dense[dense.real > 0]
    assert upper.size == 6
    assert np.max(np.abs(upper - lam)) < 1e-2
    assert abs(upper.sum() / 6 - lam) < 1e-10


def test_dense_fallback_for_general_matrix(rng):
    A = rng.standard_normal((5, 5)) + 0j
    assert np.allclose(np.sort_complex(eigenvalues(A)), np.sort_complex(np.linalg.eigvals(A)))


def test_random_stable_matrix_is_stable(rng):
    for _ in range(5):
        M = random_stable_matrix(30, rng, margin=0.2)
        assert np.max(np.linalg.eigvals(M).imag) <= -0.2 + 1e-9


def test_svd_reconstructs_and_marks_edge():
    dm = chain([0.0], 1000.0, 40, pump=0.2)
    svd = singular_decomposition(dm, W=1)
    assert np.allclose(svd.reconstruct(), dm.M, atol=1e-12)
    assert list(svd.edge_set) == [39]
    assert svd.delta_obc == svd.S[-1] and svd.delta_pbc == svd.S[-2]
    assert svd.delta_obc < 1e-6 < 0.1 < svd.delta_pbc
    assert not svd.correspondence_broken
    assert set(svd.to_dict()) >= {"singular_values", "edge_set", "delta_obc", "delta_pbc"}


def test_trivial_winding_has_no_edge():
    svd = singular_decomposition(chain([0.0], 3.0, 10), W=0)
    assert svd.delta_obc is None and svd.edge_set.size == 0
    assert svd.delta_pbc == svd.S[-1]


def test_winding_out_of_range():
    dm = chain([0.0], 3.0, 4)
    with pytest.raises(ConfigurationError):
        singular_decomposition(dm, W=5)
    with pytest.raises(ConfigurationError):
        singular_decomposition(dm, W=-1)


def test_broken_correspondence_flagged():
    M = np.diag([3.0, 2.0, 1.0]).astype(complex)
    svd = singular_decomposition(M, W=1)
    assert not svd.correspondence_broken
    M = np.diag([1.0, 1.0, 1.0]).astype(complex)
    assert singular_decomposition(M, W=1).correspondence_broken


def test_decoupled_sublattices_give_exact_pairs():
    dm = chain([0.0, np.pi], 1000.0, 50, pump=0.2)
    S = singular_decomposition(dm).S
    assert np.array_equal(S[0::2], S[1::2])


def test_block_svd_matches_plain_svd(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    M = np.zeros((12, 12), dtype=complex)
    M[::2, ::2] = A
    M[1::2, 1::2] = 2 * A
    ours = singular_decomposition(M).S
    assert np.allclose(ours, np.linalg.svd(M, compute_uv=False), rtol=1e-13)


def test_dynamical_matrix_shape_checked():
    with pytest.raises(ConfigurationError):
        DynamicalMatrix("normal", np.zeros((3, 4)), 3)
    with pytest.raises(ConfigurationError):
        DynamicalMatrix("weird", np.zeros((3, 3)), 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2 ** 32 - 1))
def test_doubled_hamiltonian_spectrum_is_plus_minus_singular_values(n, seed):
    r = np.random.default_rng(seed)
    M = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    ev = np.linalg.eigvalsh(doubled_hamiltonian(M))
    S = singular_decomposition(M).S
    assert np.allclose(np.sort(ev), np.sort(np.concatenate([S, -S])), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2 ** 32 - 1))
def test_singular_values_descending_and_vectors_unitary(n, seed):
    r = np.random.default_rng(seed)
    M = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    svd = singular_decomposition(M)
    assert np.all(np.diff(svd.S) <= 0)
    assert np.allclose(svd.U.conj().T @ svd.U, np.eye(n), atol=1e-12)
    assert np.allclose(svd.V.conj().T @ svd.V, np.eye(n), atol=1e-12)
