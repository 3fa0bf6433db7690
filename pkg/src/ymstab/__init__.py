"""Wilson lattice gauge partition functions and their stability bounds at desk scale."""
__version__ = "0.1.0"

from ._accel import BACKEND
from .grouplib import GroupKind, haar_sample
from .latticegeom import LatticeSpec, enhanced_temporal_tree, retained_count
from .wilson import ActionParams, mc_partition_estimate, gauge_fixed_mc_estimate
from .weylquad import class_integral, single_plaquette_z, gue_integral
from .bounds import stability_certificate
from .anneal import AnnealSchedule, annealed_mc_estimate

__all__ = [
    "BACKEND", "GroupKind", "haar_sample", "LatticeSpec", "enhanced_temporal_tree",
    "retained_count", "ActionParams", "mc_partition_estimate", "gauge_fixed_mc_estimate",
    "class_integral", "single_plaquette_z", "gue_integral", "stability_certificate",
    "AnnealSchedule", "annealed_mc_estimate",
]
