"""Dynamical matrices of the coherences and their singular structure.

The first moments ``b = (<b_1>, ..., <b_N>)`` obey ``db/dt = -i H b + i Omega``
with ``H_ij = J_ij - i Gamma_ij / 2 + (i P / 2 + Delta) delta_ij``. A local
two-photon drive couples ``<b>`` to ``<b^dagger>`` and the generator becomes the
``2N x 2N`` Bogoliubov matrix

    [[H + Delta,        f g_s I     ],
     [-f g_s I,   -(H + Delta)^*    ]]

where ``f`` is ``parametric_factor`` (1 reproduces the published phase
diagrams, 2 is the value obtained from the commutator ``[b, b^dagger^2]``).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import connected_components

from .couplings import CouplingMatrices
from .errors import ConfigurationError, NumericalError

log = logging.getLogger(__name__)

__all__ = [
    "DriveSpec",
    "DynamicalMatrix",
    "SvdTriple",
    "Stability",
    "TOL_STABILITY",
    "build_dynamical_matrix",
    "build_bogoliubov_matrix",
    "doubled_hamiltonian",
    "singular_decomposition",
    "stability",
    "eigenvalues",
]

TOL_STABILITY = 1e-9

# entries below this fraction of max|M| count as structural zeros when
# splitting a matrix into decoupled blocks
_DROP_TOL = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class DriveSpec:
    """Drive and pump parameters, all in units of the total decay rate.

    ``omega`` is either ``None`` (no coherent drive) or a length-N complex
    vector of local drive amplitudes.
    """

    pump: float = 0.0
    omega: np.ndarray | None = field(default=None, compare=False)
    g_s: float = 0.0
    delta: float = 0.0
    parametric_factor: int = 1

    def __post_init__(self):
        if self.pump < 0:
            raise ConfigurationError("pump rate must be non-negative")
        if self.g_s < 0:
            raise ConfigurationError("parametric amplitude must be non-negative")
        if self.parametric_factor not in (1, 2):
            raise ConfigurationError("parametric_factor must be 1 or 2")
        if self.omega is not None:
            object.__setattr__(self, "omega", np.asarray(self.omega, dtype=complex))
        if self.pump > 0 and self.g_s > 0:
            log.info("pump and parametric drive both active; outside the published parameter space")

    def drive_vector(self, n_sites: int) -> np.ndarray:
        if self.omega is None:
            return np.zeros(n_sites, dtype=complex)
        if self.omega.shape != (n_sites,):
            raise ConfigurationError(f"drive vector has shape {self.omega.shape}, expected ({n_sites},)")
        return self.omega

    @staticmethod
    def site_drive(n_sites: int, site: int = 0, amplitude: complex = 1.0) -> np.ndarray:
        """Drive vector with a single driven site (``site=-1`` for the last)."""
        om = np.zeros(n_sites, dtype=complex)
        om[site] = amplitude
        return om


@dataclass(frozen=True)
class DynamicalMatrix:
    kind: str
    M: np.ndarray
    n_sites: int
    drive: DriveSpec | None = None

    def __post_init__(self):
        if self.kind not in ("normal", "bogoliubov"):
            raise ConfigurationError(f"unknown matrix kind {self.kind!r}")
        size = self.n_sites if self.kind == "normal" else 2 * self.n_sites
        if self.M.shape != (size, size):
            raise ConfigurationError(f"{self.kind} matrix must be {size}x{size}, got {self.M.shape}")

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @classmethod
    def from_array(cls, M) -> DynamicalMatrix:
        M = np.asarray(M, dtype=complex)
        return cls("normal", M, M.shape[0])


@dataclass
class SvdTriple:
    """Descending singular decomposition ``M = U diag(S) V^dagger``.

    ``edge_set`` holds the indices of the ``W`` smallest singular values.
    ``delta_obc`` is the largest of them (``None`` when ``W = 0``) and
    ``delta_pbc`` the smallest of the remaining bulk values (``None`` when
    every value is an edge value).
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    winding: int
    edge_set: np.ndarray
    delta_obc: float | None
    delta_pbc: float | None

    @property
    def correspondence_broken(self) -> bool:
        """True when the edge values are not separated from the bulk."""
        if self.delta_obc is None or self.delta_pbc is None:
            return False
        return self.delta_obc >= self.delta_pbc

    @property
    def bulk_set(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.S.size), self.edge_set)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.conj().T

    def to_dict(self) -> dict:
        return {
            "singular_values": self.S.tolist(),
            "winding": self.winding,
            "edge_set": self.edge_set.tolist(),
            "delta_obc": self.delta_obc,
            "delta_pbc": self.delta_pbc,
            "correspondence_broken": self.correspondence_broken,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_dynamical_matrix(cm: CouplingMatrices, drive: DriveSpec) -> DynamicalMatrix:
    """Normal-kind ``N x N`` matrix; requires ``drive.g_s == 0``."""
    if drive.g_s != 0:
        raise ConfigurationError("parametric drive couples b and b^dagger; use build_bogoliubov_matrix")
    n = cm.n_sites
    M = cm.sigma.astype(complex)
    M[np.diag_indices(n)] += 0.5j * drive.pump + drive.delta
    return DynamicalMatrix("normal", M, n, drive)


def build_bogoliubov_matrix(cm: CouplingMatrices, drive: DriveSpec) -> DynamicalMatrix:
    """``2N x 2N`` generator acting on ``(<b>, <b^dagger>)``."""
    n = cm.n_sites
    A = cm.sigma.astype(complex)
    A[np.diag_indices(n)] += 0.5j * drive.pump + drive.delta
    c = drive.parametric_factor * drive.g_s * np.eye(n)
    M = np.block([[A, c], [-c, -A.conj()]])
    return DynamicalMatrix("bogoliubov", M, n, drive)


def doubled_hamiltonian(dm: DynamicalMatrix | np.ndarray) -> np.ndarray:
    """Hermitian ``[[0, M], [M^dagger, 0]]``; its spectrum is ``+-`` the singular values of ``M``."""
    M = dm.M if isinstance(dm, DynamicalMatrix) else np.asarray(dm, dtype=complex)
    n = M.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, n:] = M
    out[n:, :n] = M.conj().T
    return out


def _blocks(M: np.ndarray) -> list[np.ndarray]:
    """Index sets of decoupled diagonal blocks of ``M`` (after a permutation)."""
    scale = np.abs(M).max()
    if scale == 0:
        return [np.arange(M.shape[0])]
    adj = np.abs(M) > _DROP_TOL * scale
    ncomp, labels = connected_components(adj, directed=True, connection="weak")
    return [np.flatnonzero(labels == c) for c in range(ncomp)]


def _svd(M: np.ndarray):
    # Decoupled sublattices are decomposed separately so that symmetry-related
    # blocks give bitwise-identical singular values.
    blocks = _blocks(M)
    if len(blocks) == 1:
        try:
            return np.linalg.svd(M)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge: {exc}") from exc
    n = M.shape[0]
    U = np.zeros((n, n), dtype=complex)
    V = np.zeros((n, n), dtype=complex)
    S = np.zeros(n)
    col = 0
    for idx in blocks:
        u, s, vh = np.linalg.svd(M[np.ix_(idx, idx)])
        m = idx.size
        U[idx, col:col + m] = u
        V[idx, col:col + m] = vh.conj().T
        S[col:col + m] = s
        col += m
    order = np.argsort(-S, kind="stable")
    return U[:, order], S[order], V[:, order].conj().T


def singular_decomposition(dm: DynamicalMatrix | np.ndarray, W: int = 0) -> SvdTriple:
    """SVD of the dynamical matrix with the ``W`` smallest values marked as edge channels.

    Parameters
    ----------
    dm : DynamicalMatrix or array
        Matrix to decompose.
    W : int
        Number of topological channels, usually the bulk winding number.
    """
    M = dm.M if isinstance(dm, DynamicalMatrix) else np.asarray(dm, dtype=complex)
    n = M.shape[0]
    W = int(W)
    if W < 0 or W > n:
        raise ConfigurationError(f"winding {W} outside [0, {n}]")
    U, S, Vh = _svd(M)
    edge = np.arange(n - W, n)
    delta_obc = float(S[n - W]) if W > 0 else None
    delta_pbc = float(S[n - W - 1]) if W < n else None
    triple = SvdTriple(U, S, Vh.conj().T, W, edge, delta_obc, delta_pbc)
    if triple.correspondence_broken:
        log.warning("edge singular values merge with the bulk (delta_obc=%.3g >= delta_pbc=%.3g)",
                    delta_obc, delta_pbc)
    return triple


def _triangular_side(M: np.ndarray) -> str | None:
    if not np.any(np.triu(M, 1)):
        return "lower"
    if not np.any(np.tril(M, -1)):
        return "upper"
    return None


def eigenvalues(dm: DynamicalMatrix | np.ndarray) -> np.ndarray:
    """Eigenvalues, read off exactly when the matrix is (block) triangular.

    Chiral couplings make the normal matrix triangular and the Bogoliubov
    matrix block triangular in 2x2 site blocks. Dense QR iterations on such
    strongly non-normal matrices return pseudospectral noise, so the structure
    is used whenever it is present.
    """
    if isinstance(dm, DynamicalMatrix):
        M, kind, n = dm.M, dm.kind, dm.n_sites
    else:
        M = np.asarray(dm, dtype=complex)
        kind, n = "normal", M.shape[0]
    if kind == "normal":
        if _triangular_side(M) is not None:
            return np.diag(M).copy()
    else:
        perm = np.ravel(np.column_stack([np.arange(n), np.arange(n) + n]))
        P = M[np.ix_(perm, perm)]
        outside = P.copy()
        for i in range(n):
            outside[2 * i:2 * i + 2, 2 * i:2 * i + 2] = 0
        if _triangular_side(outside) is not None:
            vals = [np.linalg.eigvals(P[2 * i:2 * i + 2, 2 * i:2 * i + 2]) for i in range(n)]
            return np.concatenate(vals)
    try:
        return sla.eigvals(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


@dataclass(frozen=True)
class Stability:
    stable: bool
    max_im: float


def stability(dm: DynamicalMatrix | np.ndarray, tol: float = TOL_STABILITY) -> Stability:
    """Unstable iff some eigenvalue has imaginary part above ``tol``."""
    ev = eigenvalues(dm)
    max_im = float(np.max(ev.imag))
    return Stability(max_im <= tol, max_im)


def random_stable_matrix(n: int, rng: np.random.Generator, margin: float = 0.1) -> np.ndarray:
    """Dense complex matrix with every eigenvalue at ``Im <= -margin``."""
    A = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)
    shift = np.max(np.linalg.eigvals(A).imag) + margin
    return A - 1j * shift * np.eye(n)

