"""Thermodynamic formalism on subshifts of finite type, symbolic coding of
a hyperbolic suspension flow, measure realization on unstable leaves, and
divergence-free correction of vector fields on periodic grids.

All public objects are immutable after construction and all operations are
pure, so values can be shared freely across threads or workers.
"""

from . import coding, errors, realization, sft, thermo, volume
from .sft import TransitionMatrix, Word, Cylinder, full_shift, golden_mean
from .thermo import (GibbsData, Potential, PressureEstimate, gibbs,
                     pressure_partition_sum, pressure_root,
                     transfer_spectral_pressure)
from .coding import (FlowPoint, SuspensionSystem, build_cat_partition,
                     default_system)
from .realization import LeafMeasureFamily, realize

__version__ = "0.1.0"

__all__ = [
    "errors", "sft", "thermo", "coding", "realization", "volume",
    "TransitionMatrix", "Word", "Cylinder", "full_shift", "golden_mean",
    "Potential", "PressureEstimate", "GibbsData",
    "pressure_partition_sum", "transfer_spectral_pressure",
    "pressure_root", "gibbs",
    "__version__",
]
