"""Bloch symbol of the translation-invariant chain and its winding number.

With equally spaced cavities and periodic boundaries the normal dynamical
matrix is diagonal in plane waves ``exp(i k j)`` with eigenvalue

    h(k) = i (P - Gamma) / 2 - i sum_l Gamma_l z_l / (1 - z_l),
    z_l = exp(i (k_l - k) - 1 / l_kappa).

The winding number is reported with the orientation that makes the
amplifying phases of this model non-negative: ``W`` equals the number of
zeros of ``h`` inside the unit disk in the variable ``u = exp(-i k)``, i.e.
minus the number of counter-clockwise turns of ``h(k)`` as ``k`` increases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .couplings import LatticeSpec, WaveguideSpec, coupling_matrices
from .dynmatrix import DriveSpec, build_bogoliubov_matrix, build_dynamical_matrix, stability
from .errors import ConfigurationError
from .parallel import parallel_map

log = logging.getLogger(__name__)

__all__ = [
    "BlochSymbol",
    "WindingResult",
    "AxisSpec",
    "PhaseDiagramGrid",
    "h_of_k",
    "dh_dk",
    "loop_trace",
    "k_grid",
    "winding_scalar",
    "winding_matrix",
    "winding_roots",
    "winding_det",
    "bogoliubov_block",
    "apply_params",
    "phase_diagram",
    "phase_cell",
    "N_GRID",
    "N_GRID_MAX",
    "TOL_GAP",
]

N_GRID = 4096
N_GRID_MAX = 2 ** 18
TOL_GAP = 1e-8
TOL_RESIDUAL = 1e-3
# largest phase step between neighbouring grid points that is still trusted
_MAX_STEP = math.pi / 4


@dataclass(frozen=True)
class BlochSymbol:
    wg: WaveguideSpec
    pump: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.wg.n_modes


@dataclass(frozen=True)
class WindingResult:
    """Winding number ``W`` (``None`` when the gap closes on the grid)."""

    W: int | None
    raw: float
    residual: float
    gap_closed: bool
    n_grid: int
    min_gap: float


def _z(sym: BlochSymbol, k):
    k = np.asarray(k, dtype=float)
    kl = np.asarray(sym.wg.k_res)
    sgn = -1.0 if sym.wg.chirality == "left" else 1.0
    return np.exp(1j * (kl - sgn * k[..., None]) - 1.0 / sym.wg.l_kappa)


def h_of_k(sym: BlochSymbol, k):
    """Bloch symbol at momentum ``k`` (scalar or array)."""
    g = np.asarray(sym.wg.gamma_per_mode)
    z = _z(sym, k)
    out = 0.5j * (sym.pump - sym.wg.gamma_total) - 1j * np.sum(g * z / (1.0 - z), axis=-1)
    return out if out.ndim else complex(out)


def dh_dk(sym: BlochSymbol, k):
    """Exact derivative of :func:`h_of_k`."""
    g = np.asarray(sym.wg.gamma_per_mode)
    z = _z(sym, k)
    sgn = -1.0 if sym.wg.chirality == "left" else 1.0
    return -sgn * np.sum(g * z / (1.0 - z) ** 2, axis=-1)


def k_grid(n: int) -> np.ndarray:
    """``n`` uniformly spaced momenta spanning ``(-pi, pi]``."""
    return -math.pi + 2.0 * math.pi * np.arange(1, n + 1) / n


def loop_trace(sym: BlochSymbol, n: int = 512):
    """``(k, Re h, Im h)`` over the Brillouin zone for loop plots."""
    k = k_grid(n)
    hk = h_of_k(sym, k)
    return k, hk.real, hk.imag


def _phase_winding(values: np.ndarray) -> tuple[float, float]:
    """Counter-clockwise turns of a closed sampled curve and its largest step."""
    steps = np.angle(np.roll(values, -1) / values)
    return float(steps.sum() / (2 * math.pi)), float(np.max(np.abs(steps)))


def _finish(raw: float, n: int, min_gap: float, tol_gap: float) -> WindingResult:
    if min_gap < tol_gap or not np.isfinite(raw):
        return WindingResult(None, raw, float("nan"), True, n, min_gap)
    W = int(round(raw))
    return WindingResult(W, raw, abs(raw - W), False, n, min_gap)


def winding_scalar(sym: BlochSymbol, n_grid: int = N_GRID, refine: bool = True,
                   tol_gap: float = TOL_GAP) -> WindingResult:
    """Winding of ``h(k)`` around the origin from accumulated phase steps.

    The grid is doubled (up to ``N_GRID_MAX``) while any phase step exceeds
    ``pi/4``, so loops that rush past the origin stay resolved.
    """
    n = int(n_grid)
    while True:
        hk = h_of_k(sym, k_grid(n))
        min_gap = float(np.min(np.abs(hk)))
        if min_gap < tol_gap:
            return _finish(float("nan"), n, min_gap, tol_gap)
        turns, step = _phase_winding(hk)
        raw = -turns
        if not refine or n >= N_GRID_MAX or step <= _MAX_STEP:
            return _finish(raw, n, min_gap, tol_gap)
        n *= 2


def bogoliubov_block(sym: BlochSymbol, k, delta: float, g_s: float,
                     parametric_factor: int = 1) -> np.ndarray:
    """2x2 off-diagonal block ``A(k)`` of the doubled Bogoliubov Hamiltonian.

    Acting on ``(b_k, b_{-k}^dagger)`` the coherence equations give
    ``[[h(k) + Delta, f g_s], [-f g_s, -conj(h(-k)) - Delta]]``.
    """
    k = np.asarray(k, dtype=float)
    c = parametric_factor * g_s
    A = np.empty(k.shape + (2, 2), dtype=complex)
    A[..., 0, 0] = h_of_k(sym, k) + delta
    A[..., 0, 1] = c
    A[..., 1, 0] = -c
    A[..., 1, 1] = -np.conj(h_of_k(sym, -k)) - delta
    return A


def _doubled(A: np.ndarray) -> np.ndarray:
    m = A.shape[-1]
    out = np.zeros(A.shape[:-2] + (2 * m, 2 * m), dtype=complex)
    out[..., :m, m:] = A
    out[..., m:, :m] = np.conj(np.swapaxes(A, -1, -2))
    return out


def _trace_winding(H: np.ndarray, dk: float) -> float:
    """(1 / 4 pi i) * integral of Tr(tau_z H^-1 dH/dk) with tau_z = diag(+1.., -1..)."""
    m = H.shape[-1] // 2
    dH = (np.roll(H, -1, axis=0) - np.roll(H, 1, axis=0)) / (2 * dk)
    X = np.linalg.solve(H, dH)
    d = np.einsum("kii->ki", X)
    integrand = d[:, :m].sum(axis=1) - d[:, m:].sum(axis=1)
    return float((integrand.sum() * dk / (4j * math.pi)).real)


def winding_matrix(sym: BlochSymbol, delta: float = 0.0, g_s: float = 0.0,
                   n_grid: int = N_GRID, parametric_factor: int = 1, refine: bool = True,
                   tol_gap: float = TOL_GAP) -> WindingResult:
    """Winding number from the trace formula on the doubled Bloch Hamiltonian.

    Without parametric drive the doubled Hamiltonian is the 2x2 block
    ``[[0, h + Delta], [conj(h + Delta), 0]]``; with ``g_s > 0`` it is the 4x4
    block built from :func:`bogoliubov_block`. ``d/dk`` uses central finite
    differences and the integral the periodic trapezoid rule. The grid is
    doubled until the result is within ``1e-3`` of an integer and the phase
    of ``det A`` is resolved.
    """
    n = int(n_grid)
    while True:
        k = k_grid(n)
        dk = 2 * math.pi / n
        if g_s == 0:
            A = (h_of_k(sym, k) + delta)[:, None, None]
        else:
            A = bogoliubov_block(sym, k, delta, g_s, parametric_factor)
        sv = np.linalg.svd(A, compute_uv=False)
        min_gap = float(sv[:, -1].min())
        if min_gap < tol_gap:
            return _finish(float("nan"), n, min_gap, tol_gap)
        raw = _trace_winding(_doubled(A), dk)
        _, step = _phase_winding(np.linalg.det(A))
        if not refine or n >= N_GRID_MAX or (abs(raw - round(raw)) < TOL_RESIDUAL and step <= _MAX_STEP):
            return _finish(raw, n, min_gap, tol_gap)
        n *= 2


def winding_det(sym: BlochSymbol, delta: float = 0.0, g_s: float = 0.0,
                n_grid: int = N_GRID, parametric_factor: int = 1) -> WindingResult:
    """Cross-check: phase winding of ``det A(k)`` (scalar ``h + Delta`` at ``g_s = 0``)."""
    n = int(n_grid)
    while True:
        k = k_grid(n)
        if g_s == 0:
            d = h_of_k(sym, k) + delta
        else:
            d = np.linalg.det(bogoliubov_block(sym, k, delta, g_s, parametric_factor))
        min_gap = float(np.min(np.abs(d)))
        if min_gap < TOL_GAP:
            return _finish(float("nan"), n, min_gap, TOL_GAP)
        turns, step = _phase_winding(d)
        if n >= N_GRID_MAX or step <= _MAX_STEP:
            return _finish(-turns, n, min_gap, TOL_GAP)
        n *= 2


def winding_roots(sym: BlochSymbol, delta: float = 0.0) -> int:
    """Winding as the number of zeros of ``h`` inside the unit disk in ``u = exp(-i k)``.

    Clearing the denominators ``1 - c_l u`` turns ``h = 0`` into a polynomial
    of degree ``n_modes``; its roots come from the companion matrix.
    """
    if sym.wg.chirality == "left":
        raise ConfigurationError("root counting is implemented for right-moving waveguides")
    c = np.exp(1j * np.asarray(sym.wg.k_res) - 1.0 / sym.wg.l_kappa)
    g = np.asarray(sym.wg.gamma_per_mode)
    const = 0.5j * (sym.pump - sym.wg.gamma_total) + delta
    poly = np.poly1d([const])
    for cl in c:
        poly = poly * np.poly1d([-cl, 1.0])
    for l, cl in enumerate(c):
        term = np.poly1d([-1j * g[l] * cl, 0.0])
        for m, cm in enumerate(c):
            if m != l:
                term = term * np.poly1d([-cm, 1.0])
        poly = poly + term
    coeffs = np.trim_zeros(poly.coeffs, "f")
    if coeffs.size <= 1:
        return 0
    roots = np.roots(coeffs)
    return int(np.sum(np.abs(roots) < 1.0))


# ---------------------------------------------------------------------------
# phase diagrams

SWEEPABLE = ("l_kappa", "pump", "g_s", "delta", "dk")


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: explicit ``values`` or ``n_points`` between ``min`` and ``max``."""

    name: str
    min: float = 0.0
    max: float = 1.0
    n_points: int = 1
    scale: str = "linear"
    values: tuple[float, ...] | None = None

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.n_points)
        if self.scale != "linear":
            raise ConfigurationError(f"axis scale must be 'linear' or 'log', got {self.scale!r}")
        return np.linspace(self.min, self.max, self.n_points)


def apply_params(wg: WaveguideSpec, drive: DriveSpec, params: dict) -> tuple[WaveguideSpec, DriveSpec]:
    """Copies of ``wg`` and ``drive`` with swept parameters substituted.

    ``dk`` sets the second resonant momentum to ``k_0 - dk``.
    """
    wkw, dkw = {}, {}
    for name, value in params.items():
        if name == "l_kappa":
            wkw["l_kappa"] = value
        elif name == "dk":
            if wg.n_modes < 2:
                raise ConfigurationError("dk needs at least two waveguide modes")
            ks = list(wkw.get("k_res", wg.k_res))
            ks[1] = ks[0] - value
            wkw["k_res"] = tuple(ks)
        elif name in ("pump", "g_s", "delta"):
            dkw[name] = value
        else:
            raise ConfigurationError(f"cannot sweep unknown parameter {name!r}")
    return replace(wg, **wkw), replace(drive, **dkw)


@dataclass
class PhaseDiagramGrid:
    """Winding number and stability over a 2D parameter grid.

    ``W`` is a float array with ``nan`` at gap-closing cells.
    """

    axes: tuple[AxisSpec, AxisSpec]
    x: np.ndarray
    y: np.ndarray
    W: np.ndarray
    stable: np.ndarray
    max_im: np.ndarray
    gap_closed: np.ndarray

    def rows(self):
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                w = self.W[i, j]
                yield (float(xv), float(yv), None if np.isnan(w) else int(w),
                       bool(self.stable[i, j]), float(self.max_im[i, j]))

    def windings(self, stable_only: bool = False) -> set[int]:
        mask = ~np.isnan(self.W)
        if stable_only:
            mask &= self.stable
        return {int(w) for w in self.W[mask]}


def phase_cell(wg: WaveguideSpec, drive: DriveSpec, n_grid: int = N_GRID, n_sites: int = 60,
               method: str = "det"):
    """Winding and finite-size stability at one parameter point.

    ``method="det"`` counts the phase winding of ``det A(k)``, which equals the
    trace formula of :func:`winding_matrix` and is several times cheaper;
    ``method="trace"`` evaluates the trace formula itself.
    """
    sym = BlochSymbol(wg, drive.pump)
    if drive.g_s == 0 and drive.delta == 0:
        res = winding_scalar(sym, n_grid)
    elif method == "trace":
        res = winding_matrix(sym, drive.delta, drive.g_s, n_grid, drive.parametric_factor)
    elif method == "det":
        res = winding_det(sym, drive.delta, drive.g_s, n_grid, drive.parametric_factor)
    else:
        raise ConfigurationError(f"unknown winding method {method!r}")
    cm = coupling_matrices(wg, LatticeSpec(n_sites))
    if drive.g_s == 0:
        dm = build_dynamical_matrix(cm, drive)
    else:
        dm = build_bogoliubov_matrix(cm, drive)
    st = stability(dm)
    return res.W, st.stable, st.max_im, res.gap_closed


def _cell_task(args):
    wg, drive, params, n_grid, n_sites, method = args
    wg, drive = apply_params(wg, drive, params)
    return phase_cell(wg, drive, n_grid, n_sites, method)


def phase_diagram(wg: WaveguideSpec, axes: Sequence[AxisSpec], drive: DriveSpec | None = None,
                  n_grid: int = N_GRID, n_sites: int = 60, workers: int | None = None,
                  method: str = "det") -> PhaseDiagramGrid:
    """Sweep two parameters and record ``(W, stable)`` for every cell."""
    if len(axes) != 2:
        raise ConfigurationError("a phase diagram needs exactly two axes")
    drive = drive or DriveSpec()
    ax, ay = axes
    x, y = ax.grid(), ay.grid()
    tasks = [(wg, drive, {ax.name: float(xv), ay.name: float(yv)}, n_grid, n_sites, method)
             for xv in x for yv in y]
    results = parallel_map(_cell_task, tasks, workers)
    shape = (x.size, y.size)
    W = np.array([np.nan if r[0] is None else r[0] for r in results], dtype=float).reshape(shape)
    stable = np.array([r[1] for r in results], dtype=bool).reshape(shape)
    max_im = np.array([r[2] for r in results]).reshape(shape)
    closed = np.array([r[3] for r in results], dtype=bool).reshape(shape)
    return PhaseDiagramGrid((ax, ay), x, y, W, stable, max_im, closed)
