"""Emulating an unknown unitary on a subspace from copies of its sample input/output states.

Modules
-------
numerics     dense linear-algebra kernels (fidelity, partial trace, superoperators)
instances    sample sets, problem instances, random generation
channels     the sampling channels, their spectral quantities and erase probability
emulator     the emulation circuit (exact enumeration or Monte Carlo)
dme          density-matrix exponentiation, repeat-until-success, noisy runs
extensions   mixed samples, controlled unitaries, conjugate bases, perturbed
             samples and projective measurements
experiments  seeded experiment harness behind the ``uqemu`` command
"""

from .channels import (
    build_D,
    build_W,
    erase_probability,
    lambda_D,
    lambda_perp,
    required_T,
)
from .dme import (
    NoiseBudget,
    controlled_dme,
    dme_error,
    dme_evolution,
    noisy_emulation_run,
    rus_swap_exponential,
)
from .emulator import (
    EXACT,
    ChannelEstimate,
    MonteCarlo,
    RunRecord,
    channel_estimate,
    channel_output,
    postselected_output,
    run_circuit_sampled,
    step_i_state,
)
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    EmulatorError,
    GapCollapseError,
    GenerationError,
    PostselectionError,
    PreconditionError,
    ResourceError,
)
from .experiments import ExperimentConfig, ResultRow, emit_results, parse_config, run_experiment
from .instances import EmulationProblem, SampleSet, generate_instance, haar_unitary, pauli_instance
from .numerics import trace_norm_distance, uhlmann_fidelity

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "ChannelEstimate",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "EmulationProblem",
    "EmulatorError",
    "ExperimentConfig",
    "GapCollapseError",
    "GenerationError",
    "MonteCarlo",
    "NoiseBudget",
    "PostselectionError",
    "PreconditionError",
    "ResourceError",
    "ResultRow",
    "RunRecord",
    "SampleSet",
    "build_D",
    "build_W",
    "channel_estimate",
    "channel_output",
    "controlled_dme",
    "dme_error",
    "dme_evolution",
    "emit_results",
    "erase_probability",
    "generate_instance",
    "haar_unitary",
    "lambda_D",
    "lambda_perp",
    "noisy_emulation_run",
    "parse_config",
    "pauli_instance",
    "postselected_output",
    "required_T",
    "run_circuit_sampled",
    "run_experiment",
    "rus_swap_exponential",
    "step_i_state",
    "trace_norm_distance",
    "uhlmann_fidelity",
]
