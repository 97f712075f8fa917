import math

import numpy as np
import pytest
from conftest import chain

from topamp import ConfigurationError, DriveSpec, DynamicalMatrix, WaveguideSpec
from topamp.dynamics import (default_times, evolve, evolve_ode, gap_scaling, initial_state, photon_number,
                             projections, saturation_time)
from topamp.dynmatrix import random_stable_matrix, singular_decomposition
from topamp.steadystate import steady_state


def test_default_grid():
    t = default_times()
    assert t.size == 200 and t[0] == pytest.approx(1e-2) and t[-1] == pytest.approx(1e3)


def test_initial_state_is_returned_exactly(rng):
    M = random_stable_matrix(6, rng)
    b0 = rng.normal(size=6) + 1j * rng.normal(size=6)
    traj = evolve(DynamicalMatrix.from_array(M), None, b0, [0.0, 1.0])
    assert np.array_equal(traj.states[0], b0)


def test_scalar_decay():
    dm = DynamicalMatrix.from_array(-0.5j * np.eye(4))
    b0 = np.arange(1, 5).astype(complex)
    t = np.linspace(0, 10, 11)
    traj = evolve(dm, None, b0, t)
    assert np.allclose(traj.states, np.exp(-t / 2)[:, None] * b0, rtol=1e-13, atol=0)


@pytest.mark.parametrize("n", [3, 16, 64])
def test_closed_form_matches_ode(rng, n):
    M = random_stable_matrix(n, rng)
    om = rng.normal(size=n) + 1j * rng.normal(size=n)
    dm = DynamicalMatrix.from_array(M)
    b0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    t = np.geomspace(1e-2, 20, 15)
    a = evolve(dm, DriveSpec(omega=om), b0, t).states
    b = evolve_ode(dm, DriveSpec(omega=om), b0, t).states
    rel = np.max(np.abs(a - b)) / np.max(np.abs(a))
    assert rel < 1e-8


def test_semigroup(rng):
    dm = chain([0, math.pi / 2], 5.0, 12, pump=0.3)
    b0 = rng.normal(size=12) + 0j
    t1, t2 = 1.7, 4.2
    mid = evolve(dm, None, b0, [t1]).states[0]
    two_step = evolve(dm, None, mid, [t2 - t1]).states[0]
    direct = evolve(dm, None, b0, [t2]).states[0]
    assert np.max(np.abs(two_step - direct)) < 1e-9 * max(1.0, np.max(np.abs(direct)))


def test_relaxes_to_steady_state():
    n = 10
    om = DriveSpec.site_drive(n)
    dm = chain([0.0], 2.0, n, pump=0.2, omega=om)
    svd = singular_decomposition(dm, 0)
    t_max = 50 / svd.delta_pbc
    traj = evolve(dm, None, np.zeros(n), [t_max])
    ss = steady_state(dm)
    assert np.linalg.norm(traj.states[-1] - ss.b_ss) < 1e-6


def test_times_validation():
    dm = chain([0.0], 2.0, 4)
    with pytest.raises(ConfigurationError):
        evolve(dm, None, np.zeros(4), [1.0, 0.5])
    with pytest.raises(ConfigurationError):
        evolve(dm, None, np.zeros(4), [])
    with pytest.raises(ConfigurationError):
        evolve(dm, None, np.zeros(3), [1.0])


def test_initial_state_presets():
    assert np.allclose(initial_state("uniform", 5), 0.2)
    assert not np.any(initial_state("edge-drive", 5))
    with pytest.raises(ConfigurationError):
        initial_state("random", 5)


def test_projection_orthonormality():
    dm = chain([0, math.pi / 2], 1000.0, 20, pump=0.7)
    svd = singular_decomposition(dm, 2)
    for m in (0, 7, 19):
        p = projections(evolve(dm, None, svd.V[:, m], [0.0]), svd).p[:, 0]
        assert p[m] == pytest.approx(1, abs=1e-12)
        assert np.max(np.delete(p, m)) < 1e-12
    assert np.array_equal(projections(evolve(dm, None, svd.V[:, 0], [0.0]), svd).edge_indices, svd.edge_set)


def test_projection_dimension_mismatch():
    dm = chain([0.0], 10.0, 6)
    svd = singular_decomposition(chain([0.0], 10.0, 7), 0)
    with pytest.raises(ConfigurationError):
        projections(evolve(dm, None, np.ones(6), [1.0]), svd)


def test_projection_may_exceed_one():
    dm = chain([0, math.pi / 2, math.pi / 3], 1000.0, 30, pump=0.7)
    svd = singular_decomposition(dm, 3)
    # the dynamics is stable but non-normal, so a bulk vector feeds transient growth
    ps = projections(evolve(dm, None, svd.V[:, 10], [0.0, 5.0, 50.0]), svd)
    assert np.all(ps.p >= 0)
    assert ps.p[:, 0].max() == pytest.approx(1)
    assert ps.p[:, -1].max() > 1


def _persistence(ps, rows, threshold):
    """First time the relative change of any selected projection exceeds ``threshold``."""
    p = ps.p[rows]
    rel = np.abs(p - p[:, :1]) / p[:, :1]
    hit = np.flatnonzero(np.any(rel > threshold, axis=0))
    return ps.times[hit[0]] if hit.size else np.inf


@pytest.fixture(scope="module")
def w3_system():
    dm = chain([0, math.pi / 2, math.pi / 3], 1000.0, 100, pump=0.7)
    return dm, singular_decomposition(dm, 3)


@pytest.mark.slow
def test_edge_projections_outlive_bulk(w3_system):
    dm, svd = w3_system
    t = np.geomspace(1e-3, 100, 250)
    edge = svd.edge_set
    b0 = svd.V[:, edge] @ np.array([0.5, 0.5, 1 / math.sqrt(2)])
    t_edge = _persistence(projections(evolve(dm, None, b0, t), svd), edge, 0.1)
    m = 50
    t_bulk = _persistence(projections(evolve(dm, None, svd.V[:, m], t), svd), [m], 0.1)
    assert t_edge >= 10 * t_bulk


def test_photon_number_decays_in_trivial_phase():
    n = 12
    dm = chain([0.0], 3.0, n, pump=0.1)
    traj = evolve(dm, None, initial_state("uniform", n), np.linspace(0, 200, 201))
    nph = photon_number(traj)
    assert np.all(nph >= 0)
    assert np.all(np.diff(nph) <= 1e-15)
    assert nph[-1] < 1e-6 * nph[0]


def test_saturation_time():
    t = np.linspace(0, 100, 1001)
    y = 1 - np.exp(-t / 10)
    ts = saturation_time(t, y, rel_tol=0.05)
    assert ts == pytest.approx(-10 * math.log(0.05 * y[-1]), abs=0.11)
    assert saturation_time(t, np.ones_like(t)) == 0.0


def test_gap_scaling_trivial_phase():
    wg = WaveguideSpec.equal([0.0], 3.0)
    gs = gap_scaling(wg, DriveSpec(pump=0.1), [10, 20])
    assert gs.winding == 0
    assert np.all(np.isnan(gs.delta_obc)) and np.all(gs.delta_pbc > 0)
    assert math.isnan(gs.r2)


def test_gap_scaling_topological():
    wg = WaveguideSpec.equal([0.0], 10.0)
    gs = gap_scaling(wg, DriveSpec(pump=0.7), [10, 15, 20])
    assert gs.winding == 1
    assert np.all(np.diff(gs.delta_obc) < 0)
    assert gs.r2 > 0.99
    assert len(list(gs.rows())) == 3


def test_bogoliubov_evolution_matches_ode(rng):
    from topamp import LatticeSpec, build_bogoliubov_matrix, coupling_matrices
    n = 8
    cm = coupling_matrices(WaveguideSpec.equal([0.0, math.pi], 5.0), LatticeSpec(n))
    dm = build_bogoliubov_matrix(cm, DriveSpec(g_s=0.2, delta=1.0, omega=DriveSpec.site_drive(n)))
    b0 = rng.normal(size=2 * n) + 0j
    t = np.linspace(0, 5, 6)
    a = evolve(dm, None, b0, t)
    b = evolve_ode(dm, None, b0, t)
    assert a.coherences.shape == (6, n)
    assert np.max(np.abs(a.states - b.states)) < 1e-8 * np.max(np.abs(a.states))
