"""Frustrated-tunneling saddle-point model with a spectral TDSE reference for hydrogen."""
from .amplitudes import AmplitudeOptions, PopulationGrid, population_grid, scan_roots
from .classifier import FilterThresholds, label_roots, partition
from .prefactors import PrefactorMode
from .problem import BranchSigns, FtProblem, SaddleRoot
from .pulse import PulseParams, a0_from_intensity
from .saddle import continue_family, critical_ell, find_all

__version__ = "0.1.0"
