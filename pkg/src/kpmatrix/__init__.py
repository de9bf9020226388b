"""Energy levels of one-dimensional periodic potentials by the infinite-well matrix method."""

from .bands import BandStructure, Gap, detect_gaps_by_spacing, partition_by_cell_count
from .dynamics import GaussianPacket, evolve, project
from .eigensolver import GridFunction, Spectrum, solve, wavefunction
from .errors import ConfigError, KPError, NumericalError, PotentialError, TruncationError
from .hamiltonian import HamiltonianMatrix, assemble
from .potential import (
    Barrier,
    PotentialSpec,
    SurfaceConfig,
    dimerized_kp,
    empty_box,
    kronig_penney,
    surface_kp,
    with_field,
)

__version__ = "0.1.0"

__all__ = [
    "Barrier", "BandStructure", "ConfigError", "Gap", "GaussianPacket", "GridFunction",
    "HamiltonianMatrix", "KPError", "NumericalError", "PotentialError", "PotentialSpec",
    "Spectrum", "SurfaceConfig", "TruncationError", "assemble", "detect_gaps_by_spacing",
    "dimerized_kp", "empty_box", "evolve", "kronig_penney", "partition_by_cell_count",
    "project", "solve", "surface_kp", "wavefunction", "with_field",
]
