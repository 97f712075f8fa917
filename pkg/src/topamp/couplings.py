"""Waveguide-mediated couplings between cavities.

Cavities at positions ``r_j`` exchange photons through a chiral waveguide that
carries ``n_modes`` channels. Eliminating the waveguide gives the complex
self-energy

    Sigma_ij = -i sum_l (Gamma_l / 2) exp(i k_l d - |d| / l_kappa) (1 + sign d),

with ``d = r_i - r_j``. Its real part is the coherent hopping ``J_ij`` and
``-2 Im`` is the dissipative coupling ``Gamma_ij``.

Units: the total decay rate ``Gamma = sum_l Gamma_l`` is the rate unit when
the waveguide is built with :meth:`WaveguideSpec.equal`, lengths are in units
of the lattice spacing ``a``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "WaveguideSpec",
    "LatticeSpec",
    "CouplingMatrices",
    "self_energy",
    "coupling_matrices",
]


@dataclass(frozen=True)
class WaveguideSpec:
    """Chiral multi-mode bath.

    Parameters
    ----------
    gamma_per_mode : sequence of float
        Decay rate of a cavity into each waveguide channel.
    k_res : sequence of float
        Resonant momentum of each channel, in units of ``1/a``.
    l_kappa : float
        Propagation length in units of ``a``; must be finite and positive.
    chirality : {"right", "left"}
        Propagation direction. ``"left"`` mirrors the positions.
    """

    gamma_per_mode: tuple[float, ...]
    k_res: tuple[float, ...]
    l_kappa: float
    chirality: str = "right"

    def __post_init__(self):
        object.__setattr__(self, "gamma_per_mode", tuple(float(g) for g in self.gamma_per_mode))
        object.__setattr__(self, "k_res", tuple(float(k) for k in self.k_res))
        object.__setattr__(self, "l_kappa", float(self.l_kappa))
        if len(self.gamma_per_mode) == 0:
            raise ConfigurationError("waveguide needs at least one mode")
        if len(self.gamma_per_mode) != len(self.k_res):
            raise ConfigurationError(
                f"gamma_per_mode has {len(self.gamma_per_mode)} entries but k_res has {len(self.k_res)}"
            )
        if any(g < 0 or not np.isfinite(g) for g in self.gamma_per_mode):
            raise ConfigurationError("decay rates must be finite and non-negative")
        if not self.gamma_total > 0:
            raise ConfigurationError("total decay rate must be positive")
        if not np.all(np.isfinite(self.k_res)):
            raise ConfigurationError("resonant momenta must be finite")
        if not (np.isfinite(self.l_kappa) and self.l_kappa > 0):
            raise ConfigurationError(f"l_kappa must be finite and positive, got {self.l_kappa}")
        if self.chirality not in ("right", "left"):
            raise ConfigurationError(f"chirality must be 'right' or 'left', got {self.chirality!r}")

    @classmethod
    def equal(cls, k_res: Sequence[float], l_kappa: float, gamma: float = 1.0, chirality: str = "right"):
        """Waveguide with the total rate ``gamma`` split evenly over the channels."""
        n = len(k_res)
        return cls((gamma / n,) * n, tuple(k_res), l_kappa, chirality)

    @property
    def n_modes(self) -> int:
        return len(self.k_res)

    @property
    def gamma_total(self) -> float:
        return float(sum(self.gamma_per_mode))

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "gamma_per_mode": list(self.gamma_per_mode),
            "k_res": list(self.k_res),
            "l_kappa": self.l_kappa,
            "chirality": self.chirality,
        }


@dataclass(frozen=True)
class LatticeSpec:
    """Cavity positions in units of the spacing ``a`` (default ``r_j = j``)."""

    n_sites: int
    positions: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ConfigurationError(f"n_sites must be a positive integer, got {self.n_sites}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.positions is not None:
            pos = tuple(float(r) for r in self.positions)
            if len(pos) != self.n_sites:
                raise ConfigurationError("positions must have n_sites entries")
            if np.any(np.diff(pos) <= 0):
                raise ConfigurationError("positions must be strictly increasing")
            object.__setattr__(self, "positions", pos)

    @property
    def r(self) -> np.ndarray:
        if self.positions is None:
            return np.arange(self.n_sites, dtype=float)
        return np.asarray(self.positions)


@dataclass(frozen=True)
class CouplingMatrices:
    """Coherent (``J``) and dissipative (``gamma``) coupling matrices.

    Both are stored as real arrays; ``sigma`` recombines them as
    ``J - i gamma / 2``.
    """

    J: np.ndarray
    gamma: np.ndarray
    positions: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return self.J.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        return self.J - 0.5j * self.gamma

    def to_json(self) -> str:
        return json.dumps({"n_sites": self.n_sites, "positions": self.positions.tolist(),
                           "J": self.J.tolist(), "Gamma": self.gamma.tolist()})

    def rows(self, which: str = "J"):
        """(i, j, Re, Im) rows of one matrix, row-major."""
        mat = {"J": self.J, "Gamma": self.gamma}[which]
        n = self.n_sites
        for i in range(n):
            for j in range(n):
                yield i, j, float(mat[i, j]), 0.0


def _separations(wg: WaveguideSpec, ri, rj):
    d = np.subtract(ri, rj, dtype=float)
    return -d if wg.chirality == "left" else d


def _sigma(wg: WaveguideSpec, d: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(d), dtype=complex)
    bound = np.zeros(np.shape(d))
    env = np.exp(-np.abs(d) / wg.l_kappa) * (1.0 + np.sign(d))
    for g, k in zip(wg.gamma_per_mode, wg.k_res):
        out += (-0.5j * g) * np.exp(1j * k * d) * env
        bound += 0.5 * g * env * (1.0 + np.abs(k * d))
    # Interfering modes (for instance k and k + pi) cancel exactly in exact
    # arithmetic; what survives below the rounding bound of the phase factors
    # is noise and is flushed so that decoupled sublattices stay decoupled.
    bound *= 8 * np.finfo(float).eps
    re = np.where(np.abs(out.real) <= bound, 0.0, out.real)
    im = np.where(np.abs(out.imag) <= bound, 0.0, out.imag)
    return re + 1j * im


def self_energy(wg: WaveguideSpec, ri: float, rj: float) -> complex:
    """Waveguide-mediated self-energy between cavities at ``ri`` and ``rj``.

    ``J_ij = Re`` and ``Gamma_ij = -2 Im`` of the returned value. With the
    convention ``sign(0) = 0`` the diagonal is ``-i Gamma / 2``.
    """
    return complex(_sigma(wg, _separations(wg, ri, rj)))


def coupling_matrices(wg: WaveguideSpec, lat: LatticeSpec) -> CouplingMatrices:
    """Pairwise couplings for every cavity of the lattice."""
    r = lat.r
    sig = _sigma(wg, _separations(wg, r[:, None], r[None, :]))
    return CouplingMatrices(J=sig.real.copy(), gamma=-2.0 * sig.imag, positions=r.copy())
