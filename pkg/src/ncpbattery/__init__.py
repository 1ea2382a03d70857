"""Local passivity certification and energy extraction for bipartite quantum batteries."""

from .battery import (
    BipartiteBattery,
    DensityMatrix,
    Hamiltonian,
    TripartiteState,
    XYParams,
    bell_mixture,
    bell_mixture_purification,
    purify,
    xy_hamiltonian,
)
from .extraction import ExtractionResult, extract_ncptp, ergotropy, max_work_cptp, witness
from .optimize import OptimizerConfig, global_minimize
from .passivity import PassivityVerdict, cptp_local_passive, ncptp_local_passive

__all__ = [
    "BipartiteBattery",
    "DensityMatrix",
    "ExtractionResult",
    "Hamiltonian",
    "OptimizerConfig",
    "PassivityVerdict",
    "TripartiteState",
    "XYParams",
    "bell_mixture",
    "bell_mixture_purification",
    "cptp_local_passive",
    "ergotropy",
    "extract_ncptp",
    "global_minimize",
    "max_work_cptp",
    "ncptp_local_passive",
    "purify",
    "witness",
    "xy_hamiltonian",
]

__version__ = "0.1.0"
