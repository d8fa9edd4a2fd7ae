"""Classical exclusion statistics for particles in the lowest Landau level."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import ExstatError
from .model import Anyon, Boson, ExclusionG, Fermion, FluxSector, ParticleConfig, StatisticsKind

__all__ = [
    "__version__",
    "BACKEND",
    "ExstatError",
    "Anyon",
    "Boson",
    "ExclusionG",
    "Fermion",
    "FluxSector",
    "ParticleConfig",
    "StatisticsKind",
]
