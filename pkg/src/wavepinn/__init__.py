"""Physics-informed surrogate workbench for the 1D acoustic wave equation.

Trains small networks to satisfy the wave equation, a Gaussian initial
condition, and impedance boundary conditions (rigid, constant specific
impedance, or a rational frequency-dependent admittance handled through
auxiliary accumulator ODEs), with the source position as an extra network
input.  Ships the supporting toolchain: a hand-rolled reverse-mode
derivative engine, Latin hypercube collocation sampling, Miki-model
material fitting via vector fitting, a spectral-element reference solver,
and Table-style error metrics, all behind one CLI.
"""

from .core import (
    DomainSpec,
    FrequencyDependent,
    FrequencyIndependent,
    GaussianSource,
    Neumann,
    Normalization,
    PhysicalConstants,
    RationalAdmittance,
    analytic_free_field,
    ic_pressure,
    ic_velocity,
    to_normalized_frequency,
    to_normalized_time,
    to_physical_frequency,
    to_physical_time,
)
from .losses import LossReport, LossWeights, total_loss, total_loss_and_grads
from .material import (
    AccumulatorSeries,
    FrequencyBand,
    PorousLayer,
    VectorFitError,
    VectorFitResult,
    ade_integrate,
    estimate_accumulator_scales,
    evaluate_admittance,
    load_material,
    miki_surface_impedance,
    normalize_material,
    save_material,
    vector_fit,
)
from .metrics import (
    BenchmarkResult,
    ErrorSummary,
    ImpulseResponse,
    benchmark_eval,
    error_summary,
    extract_ir,
    inf_abs,
    mu_rel,
)
from .net import (
    DerivativeBundle,
    Network,
    NonFiniteLossError,
    forward,
    forward_with_input_derivs,
    init_glorot,
    init_siren,
    load_checkpoint,
    save_checkpoint,
)
from .reference import (
    ReceiverTraces,
    SolverConfig,
    SolverInstability,
    image_source_solution,
    reference_ir,
    solve_time_domain,
)
from .sampling import TrainingSet, assemble_training_set, latin_hypercube_centered
from .trainer import (
    TrainConfig,
    TrainResult,
    load_training_checkpoint,
    save_training_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AccumulatorSeries",
    "BenchmarkResult",
    "DerivativeBundle",
    "DomainSpec",
    "ErrorSummary",
    "FrequencyBand",
    "FrequencyDependent",
    "FrequencyIndependent",
    "GaussianSource",
    "ImpulseResponse",
    "LossReport",
    "LossWeights",
    "Network",
    "Neumann",
    "NonFiniteLossError",
    "Normalization",
    "PhysicalConstants",
    "PorousLayer",
    "RationalAdmittance",
    "ReceiverTraces",
    "SolverConfig",
    "SolverInstability",
    "TrainConfig",
    "TrainResult",
    "TrainingSet",
    "VectorFitError",
    "VectorFitResult",
    "ade_integrate",
    "analytic_free_field",
    "assemble_training_set",
    "benchmark_eval",
    "error_summary",
    "estimate_accumulator_scales",
    "evaluate_admittance",
    "extract_ir",
    "forward",
    "forward_with_input_derivs",
    "ic_pressure",
    "ic_velocity",
    "image_source_solution",
    "inf_abs",
    "init_glorot",
    "init_siren",
    "latin_hypercube_centered",
    "load_checkpoint",
    "load_material",
    "load_training_checkpoint",
    "miki_surface_impedance",
    "mu_rel",
    "normalize_material",
    "reference_ir",
    "save_checkpoint",
    "save_material",
    "save_training_checkpoint",
    "solve_time_domain",
    "to_normalized_frequency",
    "to_normalized_time",
    "to_physical_frequency",
    "to_physical_time",
    "total_loss",
    "total_loss_and_grads",
    "train",
    "vector_fit",
]
