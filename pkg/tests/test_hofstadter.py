import math

import numpy as np
import pytest

from topamp import ConfigurationError
from topamp.hofstadter import (EdgeCrossing, EdgeModeTable, HofstadterSpec, band_structure, bulk_band_edges,
                               edge_modes_in_gap, gap_interval, localization_index, strip_hamiltonian,
                               to_waveguide_spec)


@pytest.fixture(scope="module")
def q9():
    return HofstadterSpec(9, 60, n_ky=256)


def test_strip_is_hermitian(q9):
    for ky in (-2.0, 0.1, 1.3):
        H = strip_hamiltonian(q9, ky)
        assert np.max(np.abs(H - H.conj().T)) < 1e-12
        assert np.max(np.abs(np.linalg.eigvals(H).imag)) < 1e-10


def test_zero_flux_is_cosine_band_plus_open_chain():
    spec = HofstadterSpec(2, 12, phi=0.0)
    m = np.arange(1, 13)
    chain = -2 * np.cos(math.pi * m / 13)
    for ky in (0.0, 0.7, 2.5):
        E = np.linalg.eigvalsh(strip_hamiltonian(spec, ky))
        assert np.allclose(E, np.sort(-2 * np.cos(ky) + chain), atol=1e-12)


def test_reflection_symmetry(q9):
    # x -> L-1-x maps the on-site phase 2 pi x/q + ky to -(2 pi x/q) + 2 pi (L-1)/q + ky
    shift = 2 * math.pi * (q9.L - 1) / q9.q
    for ky in (0.3, 1.1, -2.0):
        a = np.linalg.eigvalsh(strip_hamiltonian(q9, ky))
        b = np.linalg.eigvalsh(strip_hamiltonian(q9, -ky - shift))
        assert np.allclose(a, b, atol=1e-10)
    commensurate = HofstadterSpec(9, 28)
    for ky in (0.3, 1.1):
        a = np.linalg.eigvalsh(strip_hamiltonian(commensurate, ky))
        b = np.linalg.eigvalsh(strip_hamiltonian(commensurate, -ky))
        assert np.allclose(a, b, atol=1e-10)


def test_localization_index_limits():
    L = 30
    left = np.zeros((L, 1)); left[0] = 1
    right = np.zeros((L, 1)); right[-1] = 1
    uniform = np.full((L, 1), 1 / math.sqrt(L))
    assert localization_index(left)[0] == pytest.approx(-1)
    assert localization_index(right)[0] == pytest.approx(1)
    assert localization_index(uniform)[0] == pytest.approx(0, abs=1e-12)


def test_band_structure_eta_bounded(q9):
    bs = band_structure(q9)
    assert bs.energies.shape == (256, 60)
    assert np.all(np.abs(bs.eta) <= 1 + 1e-12)
    assert len(list(bs.rows())) == 256 * 60


def test_bulk_bands_have_gaps(q9):
    edges = bulk_band_edges(q9)
    assert edges.shape == (9, 2)
    assert np.all(edges[1:3, 0] > edges[0:2, 1])


def _brute_force_crossings(spec, omega_c, eta_cut, n=4096):
    ky = -math.pi + 2 * math.pi * np.arange(n) / n
    count = 0
    E = [np.linalg.eigh(strip_hamiltonian(spec, k)) for k in ky]
    for i in range(n):
        e0, v0 = E[i]
        e1, _ = E[(i + 1) % n]
        m0 = np.sum(e0 < omega_c)
        m1 = np.sum(e1 < omega_c)
        if m0 != m1:
            m = min(m0, m1)
            if localization_index(v0[:, m:m + 1])[0] < eta_cut:
                count += 1
    return count


@pytest.mark.parametrize("gap", [1, 2])
def test_edge_crossings_in_gap(q9, gap):
    lo, hi = gap_interval(q9, gap)
    wc = 0.5 * (lo + hi)
    table = edge_modes_in_gap(q9, gap, wc)
    assert table.count == gap
    for c in table.crossings:
        assert c.eta < -0.9 and c.v > 0
        E = np.linalg.eigvalsh(strip_hamiltonian(q9, c.k))
        assert np.min(np.abs(E - wc)) < 1e-9
    assert _brute_force_crossings(q9, wc, -0.9) == gap


def test_opposite_edge_moves_the_other_way(q9):
    lo, hi = gap_interval(q9, 2)
    table = edge_modes_in_gap(q9, 2, 0.5 * (lo + hi), eta_cut=1.0)
    right_edge = [c for c in table.crossings if c.eta > 0.9]
    assert right_edge and all(c.v < 0 for c in right_edge)


def test_frequency_in_band_rejected(q9):
    edges = bulk_band_edges(q9)
    with pytest.raises(ConfigurationError, match="not in gap"):
        edge_modes_in_gap(q9, 1, float(edges[0].mean()))
    with pytest.raises(ConfigurationError):
        gap_interval(q9, 9)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        HofstadterSpec(9, 20)
    with pytest.raises(ConfigurationError):
        HofstadterSpec(1, 20)


def test_waveguide_from_second_gap(q9):
    lo, hi = gap_interval(q9, 2)
    table = edge_modes_in_gap(q9, 2, 0.5 * (lo + hi))
    wg = to_waveguide_spec(table, 0.3, 100.0)
    assert wg.n_modes == 2 and wg.chirality == "right"
    assert wg.k_res == tuple(c.k for c in table.crossings)
    assert np.allclose(wg.gamma_per_mode, [0.09 / c.v for c in table.crossings])
    doubled = to_waveguide_spec(table, 0.6, 100.0)
    assert np.allclose(doubled.gamma_per_mode, 4 * np.array(wg.gamma_per_mode))


def test_single_crossing_gives_single_mode():
    table = EdgeModeTable(1, -2.8, -0.9, [EdgeCrossing(0.2, 1.0, -0.98)])
    wg = to_waveguide_spec(table, 0.5, 10.0)
    assert wg.n_modes == 1 and wg.gamma_per_mode == (0.25,)


def test_mixed_velocities_rejected():
    table = EdgeModeTable(2, -1.7, 1.0, [EdgeCrossing(0.2, 1.0, -0.98), EdgeCrossing(0.9, -1.0, 0.98)])
    with pytest.raises(ConfigurationError, match="mixed"):
        to_waveguide_spec(table, 0.5, 10.0)
    with pytest.raises(ConfigurationError):
        to_waveguide_spec(EdgeModeTable(1, 0.0, -0.9), 0.5, 10.0)


def test_table_json():
    table = EdgeModeTable(1, -2.8, -0.9, [EdgeCrossing(0.2, 1.0, -0.98)])
    assert '"crossings"' in table.to_json()
