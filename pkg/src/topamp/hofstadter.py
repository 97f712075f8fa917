"""Harper-Hofstadter strip and its chiral edge channels.

A strip of width ``L`` (open along X) and periodic along Y carries flux
``phi = 1/q`` per plaquette. After a Fourier transform along Y each momentum
``k_y`` gives a tridiagonal chain with on-site energy ``-2J cos(2 pi phi x + k_y)``
and hopping ``-J``. In the ``n``-th bulk gap each edge carries ``n`` chiral
branches. Their crossings with a cavity frequency ``omega_c`` define the
resonant momenta and group velocities of an effective multi-mode waveguide.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .couplings import WaveguideSpec
from .errors import ConfigurationError
from .parallel import parallel_map

__all__ = [
    "HofstadterSpec",
    "BandStructure",
    "EdgeCrossing",
    "EdgeModeTable",
    "strip_hamiltonian",
    "bulk_hamiltonian",
    "bulk_band_edges",
    "gap_interval",
    "localization_index",
    "band_structure",
    "edge_modes_in_gap",
    "to_waveguide_spec",
]

ETA_CUT = -0.9


@dataclass(frozen=True)
class HofstadterSpec:
    """Strip geometry.

    ``phi`` defaults to ``1/q``; passing ``phi=0`` emulates the field-free limit.
    """

    q: int
    L: int
    J_hop: float = 1.0
    n_ky: int = 512
    phi: float | None = None

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ConfigurationError(f"q must be an integer >= 2, got {self.q}")
        if int(self.L) != self.L or self.L < 3 * self.q:
            raise ConfigurationError(f"strip width L={self.L} must be at least 3q={3 * self.q}")
        if not self.J_hop > 0:
            raise ConfigurationError("J_hop must be positive")
        if self.n_ky < 8:
            raise ConfigurationError("n_ky must be at least 8")

    @property
    def flux(self) -> float:
        return 1.0 / self.q if self.phi is None else float(self.phi)

    @property
    def ky_grid(self) -> np.ndarray:
        return -math.pi + 2 * math.pi * np.arange(1, self.n_ky + 1) / self.n_ky


def strip_hamiltonian(spec: HofstadterSpec, ky: float) -> np.ndarray:
    """Hermitian ``L x L`` strip Hamiltonian at momentum ``ky``."""
    x = np.arange(spec.L)
    J = spec.J_hop
    H = np.diag(-2 * J * np.cos(2 * math.pi * spec.flux * x + ky)).astype(complex)
    off = np.full(spec.L - 1, -J)
    H += np.diag(off, 1) + np.diag(off, -1)
    return H


def bulk_hamiltonian(spec: HofstadterSpec, ky: float, theta: float) -> np.ndarray:
    """``q x q`` magnetic-cell Bloch matrix; ``theta = k_x q`` is the Bloch phase."""
    q = spec.q
    J = spec.J_hop
    x = np.arange(q)
    H = np.diag(-2 * J * np.cos(2 * math.pi * x / q + ky)).astype(complex)
    off = np.full(q - 1, -J, dtype=complex)
    H += np.diag(off, 1) + np.diag(off, -1)
    H[0, q - 1] += -J * np.exp(-1j * theta)
    H[q - 1, 0] += -J * np.exp(1j * theta)
    return H


def bulk_band_edges(spec: HofstadterSpec, n_sample: int = 65) -> np.ndarray:
    """``(q, 2)`` array of ``(min, max)`` per bulk band."""
    q = spec.q
    kys = np.linspace(0, 2 * math.pi / q, n_sample)
    thetas = np.linspace(0, 2 * math.pi, n_sample)
    E = np.array([sla.eigvalsh(bulk_hamiltonian(spec, ky, th)) for ky in kys for th in thetas])
    return np.column_stack([E.min(axis=0), E.max(axis=0)])


def gap_interval(spec: HofstadterSpec, n: int) -> tuple[float, float]:
    """Energy window of the ``n``-th bulk gap (counted from the bottom)."""
    if not 1 <= n < spec.q:
        raise ConfigurationError(f"gap index must be in [1, {spec.q - 1}], got {n}")
    edges = bulk_band_edges(spec)
    lo, hi = float(edges[n - 1, 1]), float(edges[n, 0])
    if hi <= lo:
        raise ConfigurationError(f"bands {n} and {n + 1} overlap: no gap")
    return lo, hi


def localization_index(psi: np.ndarray) -> np.ndarray:
    """``eta = sum_x (2x/(L-1) - 1) |psi(x)|^2`` for each column of ``psi``.

    ``-1`` for a state on the first site, ``+1`` on the last.
    """
    L = psi.shape[0]
    w = 2 * np.arange(L) / (L - 1) - 1
    return w @ (np.abs(psi) ** 2)


def _eigh(args):
    spec, ky = args
    E, V = np.linalg.eigh(strip_hamiltonian(spec, ky))
    return E, localization_index(V)


@dataclass
class BandStructure:
    ky: np.ndarray
    energies: np.ndarray  # (n_ky, L)
    eta: np.ndarray  # (n_ky, L)

    def rows(self):
        for i, k in enumerate(self.ky):
            for E, eta in zip(self.energies[i], self.eta[i]):
                yield float(k), float(E), float(eta)


def band_structure(spec: HofstadterSpec, workers: int | None = 1) -> BandStructure:
    ky = spec.ky_grid
    out = parallel_map(_eigh, [(spec, k) for k in ky], workers)
    return BandStructure(ky, np.array([o[0] for o in out]), np.array([o[1] for o in out]))


@dataclass(frozen=True)
class EdgeCrossing:
    k: float
    v: float
    eta: float


@dataclass
class EdgeModeTable:
    gap: int
    omega_c: float
    eta_cut: float
    crossings: list[EdgeCrossing] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.crossings)

    def to_dict(self) -> dict:
        return {"gap": self.gap, "omega_c": self.omega_c, "eta_cut": self.eta_cut,
                "crossings": [asdict(c) for c in self.crossings]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _level(spec: HofstadterSpec, ky: float, m: int) -> float:
    return float(sla.eigvalsh(strip_hamiltonian(spec, ky), subset_by_index=[m, m])[0])


def edge_modes_in_gap(spec: HofstadterSpec, n: int, omega_c: float, eta_cut: float = ETA_CUT,
                      h: float = 1e-5) -> EdgeModeTable:
    """Edge branches crossing ``omega_c`` in gap ``n`` on the edge with ``eta < eta_cut``.

    Sign changes of ``E_m(k_y) - omega_c`` are bracketed on the ``k_y`` grid
    and refined by Brent's method on the level that moves; the group velocity
    comes from a centred difference with step ``h``.
    """
    lo, hi = gap_interval(spec, n)
    if not lo < omega_c < hi:
        raise ConfigurationError(f"omega_c={omega_c} not in gap {n} ({lo:.6g}, {hi:.6g})")
    ky = spec.ky_grid
    below = np.array([np.sum(sla.eigvalsh(strip_hamiltonian(spec, k)) < omega_c) for k in ky])
    table = EdgeModeTable(n, float(omega_c), float(eta_cut))
    dk = 2 * math.pi / spec.n_ky
    for i in range(ky.size):
        j = (i + 1) % ky.size
        if below[i] == below[j]:
            continue
        if abs(int(below[i]) - int(below[j])) != 1:
            raise ConfigurationError("ky grid too coarse: several levels cross omega_c in one step")
        m = int(min(below[i], below[j]))
        a = ky[i]
        b = a + dk
        root = brentq(lambda k: _level(spec, k, m) - omega_c, a, b, xtol=1e-13)
        E, V = np.linalg.eigh(strip_hamiltonian(spec, root))
        eta = float(localization_index(V[:, m:m + 1])[0])
        if eta >= eta_cut:
            continue
        v = (_level(spec, root + h, m) - _level(spec, root - h, m)) / (2 * h)
        k_wrapped = float((root + math.pi) % (2 * math.pi) - math.pi)
        table.crossings.append(EdgeCrossing(k_wrapped, float(v), eta))
    table.crossings.sort(key=lambda c: c.k)
    return table


def to_waveguide_spec(table: EdgeModeTable, g, l_kappa: float) -> WaveguideSpec:
    """Effective waveguide with ``k_res = k_l`` and ``Gamma_l = g_l^2 / |v_l|``.

    All branches must propagate the same way; left-movers yield a
    ``chirality="left"`` waveguide.
    """
    if table.count == 0:
        raise ConfigurationError("no edge crossings to build a waveguide from")
    v = np.array([c.v for c in table.crossings])
    if np.any(v > 0) and np.any(v < 0) or np.any(v == 0):
        raise ConfigurationError("edge branches have mixed-sign group velocities: not a chiral set")
    g = np.broadcast_to(np.asarray(g, dtype=float), v.shape)
    gamma = g ** 2 / np.abs(v)
    chir = "right" if v[0] > 0 else "left"
    return WaveguideSpec(tuple(gamma), tuple(c.k for c in table.crossings), l_kappa, chir)
