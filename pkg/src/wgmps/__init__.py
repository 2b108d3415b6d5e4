"""Matrix-product-state simulation of quantum emitters coupled to a waveguide.

The field is cut into time bins, one MPS site each; the emitters form one
extra site that is stepped through the chain. Delayed feedback is handled
by swapping the returning bin next to the emitters before each step.
"""
from .correlations import (
    CorrelationGrid,
    Spectrum,
    correlation_2op_2t,
    correlation_4op_2t,
    correlation_ss_2op,
    correlation_ss_4op,
    field_operators,
    g1_grid,
    g2_grid,
    normalize_g,
    spectrum_w,
    steady_state_time,
    time_dependent_spectrum,
)
from .errors import (
    ConfigError,
    ContractViolation,
    DimensionError,
    NumericError,
    ScenarioError,
    TruncationWarning,
)
from .evolution import BinsRecord, evolve, t_evol_mar, t_evol_nmar
from .model import (
    PumpSpec,
    SimParams,
    StepGenerator,
    StepPropagator,
    coupling,
    gaussian_pulse_pump,
    hamiltonian_1tls,
    hamiltonian_1tls_feedback,
    hamiltonian_2tls_mar,
    hamiltonian_2tls_nmar,
)
from .mps import Mps, SchmidtSpectrum, SiteTensor, Snapshot
from .observables import (
    TimeSeries,
    entanglement,
    flux,
    integrated_flux,
    loop_integrated_statistics,
    output_fluxes,
    populations,
    quanta_conservation,
    single_time_expectation,
)
from .operators import b_pop, b_pop_total, sigma_minus, sigma_plus, tls_pop
from .states import (
    Envelope,
    SystemState,
    entangled_pair,
    fock_pulse,
    gaussian_envelope,
    product_state,
    tls_excited,
    tls_ground,
    vacuum,
)
from .tensor_core import contract, matrix_exponential_unitary, svd_truncate, tensor_kron

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "b_pop",
    "b_pop_total",
    "BinsRecord",
    "ConfigError",
    "contract",
    "ContractViolation",
    "correlation_2op_2t",
    "correlation_4op_2t",
    "correlation_ss_2op",
    "correlation_ss_4op",
    "CorrelationGrid",
    "coupling",
    "DimensionError",
    "entangled_pair",
    "entanglement",
    "Envelope",
    "evolve",
    "field_operators",
    "flux",
    "fock_pulse",
    "g1_grid",
    "g2_grid",
    "gaussian_envelope",
    "gaussian_pulse_pump",
    "hamiltonian_1tls",
    "hamiltonian_1tls_feedback",
    "hamiltonian_2tls_mar",
    "hamiltonian_2tls_nmar",
    "integrated_flux",
    "loop_integrated_statistics",
    "matrix_exponential_unitary",
    "Mps",
    "normalize_g",
    "NumericError",
    "output_fluxes",
    "populations",
    "product_state",
    "PumpSpec",
    "quanta_conservation",
    "ScenarioError",
    "SchmidtSpectrum",
    "sigma_minus",
    "sigma_plus",
    "SimParams",
    "single_time_expectation",
    "SiteTensor",
    "Snapshot",
    "Spectrum",
    "spectrum_w",
    "steady_state_time",
    "StepGenerator",
    "StepPropagator",
    "svd_truncate",
    "SystemState",
    "t_evol_mar",
    "t_evol_nmar",
    "tensor_kron",
    "time_dependent_spectrum",
    "TimeSeries",
    "tls_excited",
    "tls_ground",
    "tls_pop",
    "TruncationWarning",
    "vacuum",
]
