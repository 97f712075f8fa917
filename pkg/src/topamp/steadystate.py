"""Steady states, zero-frequency response and momentum-space diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.signal import find_peaks

from .dynmatrix import DriveSpec, DynamicalMatrix, SvdTriple, _triangular_side, singular_decomposition, stability
from .errors import ConfigurationError, NumericalError

log = logging.getLogger(__name__)

__all__ = [
    "SteadyState",
    "Peak",
    "MomentumProfile",
    "METHODS",
    "TOL_SINGULAR",
    "steady_state",
    "greens_function",
    "momentum_grid",
    "momentum_coherences",
    "detect_peaks",
]

METHODS = ("direct_solve", "svd_sum", "svd_edge_only")
TOL_SINGULAR = 1e-14
MIN_HEIGHT_RATIO = 0.1
MIN_PROMINENCE_RATIO = 0.2


@dataclass
class SteadyState:
    b_ss: np.ndarray
    drive: DriveSpec
    method: str
    residual: float = float("nan")
    svd: SvdTriple | None = field(default=None, repr=False)

    @property
    def n_sites(self) -> int:
        return self.b_ss.size if self.drive.g_s == 0 else self.b_ss.size // 2

    @property
    def coherences(self) -> np.ndarray:
        """``<b_r>`` on the lattice sites (first half of a Bogoliubov vector)."""
        return self.b_ss[: self.n_sites]

    def rows(self):
        for r, b in enumerate(self.b_ss):
            yield r, float(b.real), float(b.imag), float(abs(b))


def _source(dm: DynamicalMatrix, drive: DriveSpec) -> np.ndarray:
    om = drive.drive_vector(dm.n_sites)
    if dm.kind == "bogoliubov":
        return np.concatenate([om, -om.conj()])
    return om


def _direct(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    side = _triangular_side(M)
    if side is not None:
        if np.any(np.abs(np.diag(M)) < TOL_SINGULAR):
            raise NumericalError("dynamical matrix is singular: system sits at threshold/transition")
        return sla.solve_triangular(M, rhs, lower=(side == "lower"))
    try:
        return sla.solve(M, rhs)
    except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        raise NumericalError(f"singular dynamical matrix at threshold/transition: {exc}") from exc


def steady_state(dm: DynamicalMatrix, drive: DriveSpec | None = None, method: str = "direct_solve",
                 W: int = 0) -> SteadyState:
    """Stationary coherences ``b_ss = H^-1 Omega``.

    Parameters
    ----------
    dm : DynamicalMatrix
        Normal or Bogoliubov generator.
    drive : DriveSpec, optional
        Source of the coherent drive; defaults to ``dm.drive``.
    method : {"direct_solve", "svd_sum", "svd_edge_only"}
        ``svd_sum`` evaluates ``sum_n v_n (u_n^dagger Omega) / s_n`` over every
        singular triple, ``svd_edge_only`` keeps only the ``W`` smallest.
    W : int
        Number of edge channels used by ``svd_edge_only``.
    """
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {method!r}")
    drive = drive or dm.drive or DriveSpec()
    if not stability(dm).stable:
        log.warning("dynamical matrix is unstable: the steady state is formal and the dynamics diverge")
    rhs = _source(dm, drive)
    svd = None
    if method == "direct_solve":
        b = _direct(dm.M, rhs)
    else:
        svd = singular_decomposition(dm, W if method == "svd_edge_only" else 0)
        if svd.S[-1] < TOL_SINGULAR:
            raise NumericalError("smallest singular value vanishes: system sits at threshold/transition")
        idx = svd.edge_set if method == "svd_edge_only" else np.arange(svd.S.size)
        coef = (svd.U[:, idx].conj().T @ rhs) / svd.S[idx]
        b = svd.V[:, idx] @ coef
    norm = np.linalg.norm(rhs)
    res = np.linalg.norm(dm.M @ b - rhs)
    residual = float(res / norm) if norm > 0 else 0.0
    # With exponential gain ||b|| can reach 1e17 and the residual relative to
    # ||Omega|| is bounded below by eps ||H|| ||b||; only a large normwise
    # backward error signals a genuine failure.
    backward = float(res / (np.linalg.norm(dm.M, 2) * np.linalg.norm(b) + norm)) if norm > 0 else 0.0
    if method == "direct_solve" and residual > 1e-10 and backward > 1e-12:
        log.warning("steady-state residual %.2e (backward error %.2e)", residual, backward)
    return SteadyState(b, drive, method, residual, svd)


def greens_function(dm: DynamicalMatrix | np.ndarray, omega: float = 0.0) -> np.ndarray:
    """Two-point response ``G(omega) = (i omega I - i H)^-1``."""
    M = dm.M if isinstance(dm, DynamicalMatrix) else np.asarray(dm, dtype=complex)
    n = M.shape[0]
    A = 1j * omega * np.eye(n) - 1j * M
    side = _triangular_side(A)
    if side is not None:
        if np.any(np.abs(np.diag(A)) < TOL_SINGULAR):
            raise NumericalError(f"omega={omega} coincides with a real eigenvalue; G is singular")
        return sla.solve_triangular(A, np.eye(n), lower=(side == "lower"))
    if np.linalg.svd(A, compute_uv=False)[-1] < TOL_SINGULAR:
        raise NumericalError(f"omega={omega} coincides with a real eigenvalue; G is singular")
    return sla.solve(A, np.eye(n))


# ---------------------------------------------------------------------------
# momentum space


@dataclass(frozen=True)
class Peak:
    k: float
    height: float
    width: float


@dataclass
class MomentumProfile:
    k_grid: np.ndarray
    bk: np.ndarray
    peaks: list[Peak]

    @property
    def n_peaks(self) -> int:
        return len(self.peaks)

    def rows(self):
        for k, b in zip(self.k_grid, self.bk):
            yield float(k), float(b.real), float(b.imag), float(abs(b))


def momentum_grid(n: int) -> np.ndarray:
    """``n`` momenta spanning ``(-pi, pi]``."""
    return -math.pi + 2.0 * math.pi * np.arange(1, n + 1) / n


def momentum_coherences(ss: SteadyState | np.ndarray, pad: int = 1,
                        min_height_ratio: float = MIN_HEIGHT_RATIO) -> MomentumProfile:
    """Discrete Fourier transform ``b_k = N^-1/2 sum_r exp(-i k r) b_r``.

    ``pad > 1`` evaluates the same sum on a ``pad``-times finer grid, which
    smooths plots but no longer satisfies Parseval.
    """
    b = ss.coherences if isinstance(ss, SteadyState) else np.asarray(ss, dtype=complex)
    if isinstance(ss, SteadyState) and ss.drive.g_s != 0:
        raise ConfigurationError("momentum profiles are defined for the normal (g_s = 0) kind")
    n = b.size
    if pad < 1:
        raise ConfigurationError("pad must be a positive integer")
    k = momentum_grid(n * pad)
    r = np.arange(n)
    bk = np.exp(-1j * np.outer(k, r)) @ b / math.sqrt(n)
    return MomentumProfile(k, bk, detect_peaks(np.abs(bk), k, min_height_ratio))


def _half_width(y: np.ndarray, i: int, dk: float) -> float:
    n = y.size
    half = y[i] / 2

    def walk(step: int) -> float:
        prev = y[i]
        for s in range(1, n):
            cur = y[(i + step * s) % n]
            if cur <= half:
                return (s - 1 + (prev - half) / (prev - cur)) * dk
            prev = cur
        return n * dk / 2

    return walk(-1) + walk(+1)


def detect_peaks(values, k=None, min_height_ratio: float = MIN_HEIGHT_RATIO,
                 min_prominence_ratio: float = MIN_PROMINENCE_RATIO) -> list[Peak]:
    """Local maxima of a periodic profile.

    A peak must exceed ``min_height_ratio`` times the global maximum and rise
    ``min_prominence_ratio`` times the global maximum above its surroundings;
    the second condition rejects the ripples that finite-size sums leave
    next to a main peak. Widths are full widths at half maximum, linearly
    interpolated between grid points.
    """
    y = np.abs(np.asarray(values, dtype=complex if np.iscomplexobj(values) else float))
    n = y.size
    if n == 0:
        raise ConfigurationError("cannot detect peaks in an empty profile")
    k = momentum_grid(n) if k is None else np.asarray(k, dtype=float)
    top = float(y.max())
    if top == 0 or n < 3:
        return []
    ext = np.concatenate([y, y, y])
    idx, _ = find_peaks(ext, height=min_height_ratio * top, prominence=min_prominence_ratio * top)
    idx = idx[(idx >= n) & (idx < 2 * n)] - n
    dk = 2 * math.pi / n
    return [Peak(float(k[i]), float(y[i]), float(_half_width(y, int(i), dk))) for i in idx]
