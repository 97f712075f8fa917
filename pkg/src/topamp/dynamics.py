"""Transient coherence dynamics and finite-size gap scaling.

The coherences evolve as ``db/dt = -i H b + i Omega``. The closed form
``b(t) = exp(-i H t)(b_0 - b_ss) + b_ss`` subtracts two huge numbers when
the steady state is exponentially amplified, so :func:`evolve` instead
exponentiates the augmented generator ``[[-i H, i Omega], [0, 0]]`` acting on
``(b_0, 1)``, which gives the same vector without the cancellation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
from scipy.stats import linregress

from .bloch import BlochSymbol, winding_scalar
from .couplings import LatticeSpec, WaveguideSpec, coupling_matrices
from .dynmatrix import DriveSpec, DynamicalMatrix, SvdTriple, build_dynamical_matrix, singular_decomposition
from .errors import ConfigurationError
from .steadystate import MomentumProfile, momentum_coherences

log = logging.getLogger(__name__)

__all__ = [
    "Trajectory",
    "ProjectionSeries",
    "GapScaling",
    "default_times",
    "initial_state",
    "evolve",
    "evolve_ode",
    "projections",
    "photon_number",
    "saturation_time",
    "gap_scaling",
]


def default_times(n: int = 200, t_min: float = 1e-2, t_max: float = 1e3) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n_times, dim)
    n_sites: int
    k_profiles: list[MomentumProfile] | None = field(default=None, repr=False)

    @property
    def coherences(self) -> np.ndarray:
        return self.states[:, : self.n_sites]

    def with_profiles(self, pad: int = 1) -> Trajectory:
        self.k_profiles = [momentum_coherences(b, pad=pad) for b in self.coherences]
        return self

    def peak_counts(self) -> np.ndarray:
        if self.k_profiles is None:
            self.with_profiles()
        return np.array([p.n_peaks for p in self.k_profiles])


def _source(dm: DynamicalMatrix, drive: DriveSpec) -> np.ndarray:
    om = drive.drive_vector(dm.n_sites)
    return np.concatenate([om, -om.conj()]) if dm.kind == "bogoliubov" else om


def initial_state(preset: str, n_sites: int) -> np.ndarray:
    """``"uniform"``: ``b_r = 1/N``. ``"edge-drive"``: empty lattice, the drive does the rest."""
    if preset == "uniform":
        return np.full(n_sites, 1.0 / n_sites, dtype=complex)
    if preset == "edge-drive":
        return np.zeros(n_sites, dtype=complex)
    raise ConfigurationError(f"unknown initial-state preset {preset!r}")


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ConfigurationError("times must be a non-empty 1D sequence")
    if np.any(np.diff(t) <= 0):
        raise ConfigurationError("times must be strictly increasing")
    return t


def evolve(dm: DynamicalMatrix, drive: DriveSpec | None, b0, times) -> Trajectory:
    """Coherences at each requested time, from the exact matrix exponential.

    Parameters
    ----------
    dm : DynamicalMatrix
        Generator of the dynamics; may be unstable.
    drive : DriveSpec or None
        Coherent drive; ``None`` falls back to ``dm.drive``.
    b0 : array_like
        Initial coherences (length ``dm.dim``).
    times : array_like
        Strictly increasing times in units of ``1/Gamma``.
    """
    t = _check_times(times)
    drive = drive or dm.drive or DriveSpec()
    b0 = np.asarray(b0, dtype=complex)
    n = dm.dim
    if b0.shape != (n,):
        raise ConfigurationError(f"initial state has shape {b0.shape}, expected ({n},)")
    G = np.zeros((n + 1, n + 1), dtype=complex)
    G[:n, :n] = -1j * dm.M
    G[:n, n] = 1j * _source(dm, drive)
    x0 = np.append(b0, 1.0)
    states = np.empty((t.size, n), dtype=complex)
    for i, ti in enumerate(t):
        states[i] = b0 if ti == 0 else (sla.expm(ti * G) @ x0)[:n]
    return Trajectory(t, states, dm.n_sites)


def evolve_ode(dm: DynamicalMatrix, drive: DriveSpec | None, b0, times,
               rtol: float = 1e-12, atol: float = 1e-14) -> Trajectory:
    """Reference solution from an adaptive Runge-Kutta integrator (DOP853)."""
    t = _check_times(times)
    drive = drive or dm.drive or DriveSpec()
    A = -1j * dm.M
    src = 1j * _source(dm, drive)
    b0 = np.asarray(b0, dtype=complex)
    sol = solve_ivp(lambda _, y: A @ y + src, (0.0, float(t[-1])), b0, method="DOP853",
                    t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    return Trajectory(t, sol.y.T.copy(), dm.n_sites)


@dataclass
class ProjectionSeries:
    """``p[n, t] = |<v_n | b(t)>|^2`` with ``n`` in descending singular-value order."""

    times: np.ndarray
    p: np.ndarray
    edge_indices: np.ndarray

    @property
    def edge(self) -> np.ndarray:
        return self.p[self.edge_indices]

    @property
    def bulk(self) -> np.ndarray:
        mask = np.ones(self.p.shape[0], dtype=bool)
        mask[self.edge_indices] = False
        return self.p[mask]


def projections(traj: Trajectory, svd: SvdTriple) -> ProjectionSeries:
    if svd.V.shape[0] != traj.states.shape[1]:
        raise ConfigurationError(
            f"singular vectors have dimension {svd.V.shape[0]}, trajectory has {traj.states.shape[1]}")
    amp = svd.V.conj().T @ traj.states.T
    return ProjectionSeries(traj.times, np.abs(amp) ** 2, svd.edge_set)


def photon_number(traj: Trajectory) -> np.ndarray:
    """``N_ph(t) = sum_r |b_r(t)|^2`` over the lattice sites."""
    return np.sum(np.abs(traj.coherences) ** 2, axis=1)


def saturation_time(times, values, rel_tol: float = 0.05) -> float:
    """Last time at which ``values`` is further than ``rel_tol`` from its final value."""
    times = np.asarray(times)
    values = np.asarray(values)
    final = values[-1]
    outside = np.flatnonzero(np.abs(values - final) > rel_tol * abs(final))
    return float(times[outside[-1]]) if outside.size else float(times[0])


@dataclass
class GapScaling:
    """Edge and bulk singular-value gaps versus system size.

    ``slope``, ``intercept`` and ``r2`` describe the least-squares line of
    ``log(delta_obc)`` against ``N`` (``nan`` in the trivial phase).
    """

    n_sites: np.ndarray
    delta_obc: np.ndarray
    delta_pbc: np.ndarray
    broken: np.ndarray
    winding: int
    slope: float = float("nan")
    intercept: float = float("nan")
    r2: float = float("nan")

    @property
    def pbc_variation(self) -> float:
        """``(max - min) / mean`` of the bulk gap across sizes."""
        d = self.delta_pbc
        return float((d.max() - d.min()) / d.mean())

    def rows(self):
        for row in zip(self.n_sites, self.delta_obc, self.delta_pbc, self.broken):
            yield int(row[0]), float(row[1]), float(row[2]), bool(row[3])


def gap_scaling(wg: WaveguideSpec, drive: DriveSpec, sizes: Sequence[int], W: int | None = None) -> GapScaling:
    """Edge gap ``delta_obc`` and bulk gap ``delta_pbc`` for each lattice size."""
    if W is None:
        res = winding_scalar(BlochSymbol(wg, drive.pump))
        if res.W is None:
            raise ConfigurationError("bulk gap closes: winding number undefined")
        W = max(res.W, 0)
    if W == 0:
        log.info("trivial phase: no edge set, only delta_pbc is tabulated")
    sizes = np.asarray(sizes, dtype=int)
    obc, pbc, broken = [], [], []
    for n in sizes:
        dm = build_dynamical_matrix(coupling_matrices(wg, LatticeSpec(int(n))), replace_omega(drive))
        svd = singular_decomposition(dm, W)
        obc.append(np.nan if svd.delta_obc is None else svd.delta_obc)
        pbc.append(np.nan if svd.delta_pbc is None else svd.delta_pbc)
        broken.append(svd.correspondence_broken)
    out = GapScaling(sizes, np.array(obc), np.array(pbc), np.array(broken), W)
    if W > 0 and sizes.size >= 2:
        fit = linregress(sizes.astype(float), np.log(out.delta_obc))
        out.slope, out.intercept, out.r2 = float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)
    return out


def replace_omega(drive: DriveSpec) -> DriveSpec:
    """Same drive without the size-specific coherent amplitudes."""
    return DriveSpec(pump=drive.pump, g_s=drive.g_s, delta=drive.delta,
                     parametric_factor=drive.parametric_factor)
