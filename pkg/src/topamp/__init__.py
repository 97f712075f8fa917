"""Topological multi-mode amplification in lattices coupled through chiral waveguides.

The submodules follow the computation pipeline:

``couplings``   waveguide-mediated coherent and dissipative couplings
``dynmatrix``   dynamical matrices, singular structure and stability
``bloch``       Bloch symbol, winding numbers and phase diagrams
``steadystate`` steady states, Green's functions and momentum profiles
``dynamics``    transient evolution, projections and gap scaling
``hofstadter``  Harper-Hofstadter strip edge channels as an effective waveguide
"""

__version__ = "0.1.0"

from .couplings import CouplingMatrices, LatticeSpec, WaveguideSpec, coupling_matrices, self_energy  # noqa: E402
from .dynmatrix import (  # noqa: E402
    DriveSpec,
    DynamicalMatrix,
    SvdTriple,
    build_bogoliubov_matrix,
    build_dynamical_matrix,
    singular_decomposition,
    stability,
)
from .errors import ConfigurationError, NumericalError  # noqa: E402

__all__ = [
    "__version__",
    "WaveguideSpec",
    "LatticeSpec",
    "CouplingMatrices",
    "coupling_matrices",
    "self_energy",
    "DriveSpec",
    "DynamicalMatrix",
    "SvdTriple",
    "build_dynamical_matrix",
    "build_bogoliubov_matrix",
    "singular_decomposition",
    "stability",
    "ConfigurationError",
    "NumericalError",
]
