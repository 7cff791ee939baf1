"""Multi-time statistics of open quantum systems.

Joint probabilities of repeated projective measurements, Kolmogorov and
regression-theorem checks on them, coherence generation and detection
witnesses, Leggett-Garg-type scans and qubit dephasing models.
"""

from qmts.classicality import ClassicalityReport, MarkovianityReport, is_jCL, is_jM, kolmogorov_residual
from qmts.coherence import CoherenceClassification, cgd_witness, cgd_witness_divisible, classify_map
from qmts.dephasing import GaussianMixture, Lorentzian, NumericGrid, decoherence_function
from qmts.dynamics import (
    DilationModel,
    LindbladGenerator,
    PropagatorFamily,
    SingularPropagatorError,
    lindbladian_superoperator,
    propagate,
)
from qmts.leggett_garg import LgtiResult, lgti_residual, lgti_scan
from qmts.multitime import Hierarchy, MeasurementRecord, exact_hierarchy, markov_hierarchy, qrt_hierarchy
from qmts.operators import MeasurementBasis, Superoperator

__version__ = "0.1.0"

__all__ = [
    "ClassicalityReport",
    "CoherenceClassification",
    "DilationModel",
    "GaussianMixture",
    "Hierarchy",
    "LgtiResult",
    "LindbladGenerator",
    "Lorentzian",
    "MarkovianityReport",
    "MeasurementBasis",
    "MeasurementRecord",
    "NumericGrid",
    "PropagatorFamily",
    "SingularPropagatorError",
    "Superoperator",
    "cgd_witness",
    "cgd_witness_divisible",
    "classify_map",
    "decoherence_function",
    "exact_hierarchy",
    "is_jCL",
    "is_jM",
    "kolmogorov_residual",
    "lgti_residual",
    "lgti_scan",
    "lindbladian_superoperator",
    "markov_hierarchy",
    "propagate",
    "qrt_hierarchy",
]
