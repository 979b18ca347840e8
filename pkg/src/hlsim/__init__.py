"""Heisenberg-limited laser models: sector Liouvillians, beam observables and scaling sweeps."""

__version__ = "0.1.0"

from .errors import (
    ContractViolation,
    ConvergenceError,
    HLSimError,
    InvalidDimensionError,
    InvalidParameterError,
    NumericalError,
    SingularMatrixError,
    ValidationError,
)
from .model import (
    CavityDistribution,
    Family,
    LadderAmplitudes,
    ModelSpec,
    gain_flux,
    lambda_amplitudes,
    model_amplitudes,
    photon_flux,
    q_amplitudes,
    steady_distribution,
)
from .sectors import SectorOperator, dense_liouvillian, dissipator_sector, sector_generator
from .linalg import (
    BandedFactorization,
    banded_solve,
    deflated_solve,
    factorize,
    null_vector,
    slowest_eigenvalue,
)
from .observables import (
    BeamObservables,
    CorrelationSeries,
    beam_observables,
    coherence,
    coherence_at,
    condition4_deltas,
    g1_correlation,
    g2_correlation,
    ideal_references,
    mandel_q,
    mandel_q_by_integral,
)
from .harness import (
    FitResult,
    SweepRecord,
    analytic_reference,
    fit_power_law,
    oracle_suite,
    sweep_dimension,
    sweep_parameter,
)
from .io import read_csv, write_table

__all__ = [name for name in dir() if not name.startswith("_")]
