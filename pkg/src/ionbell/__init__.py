"""Desk-scale simulator of photon-heralded entanglement between two remote
trapped-ion qubits.

The package builds the ion-photon entangled source states, interferes the two
emitted photons on a 50/50 beamsplitter with partial mode overlap and
imperfect detectors, conditions the two-ion state on a cross-port coincidence,
and analyses the result with CHSH Bell-inequality estimators and
maximum-likelihood state tomography, all under a configurable noise budget
(state-detection error, magnetic dephasing, polarization error, leakage,
dark counts).

Basis conventions shared by every module:

* ion qubit: index 0 is the ``|1,1>`` Zeeman level, index 1 is ``|1,-1>``
* photon polarization: index 0 is H, index 1 is V
* composite systems are ordered ion (x) photon and ion_a (x) ion_b
* measurement outcomes: 0 = bright (fluorescing), 1 = dark

Hot numeric kernels (the complex Jacobi eigensolver and the tomography
fixed-point iteration) are numba-jitted by default; set the environment
variable ``IONBELL_DISABLE_NUMBA=1`` before import to run the pure-numpy
fallback path instead.
"""

from ._accel import BACKEND, HAVE_NUMBA
from .linalg import hermitian_eig, kron, partial_trace, sqrt_psd
from .states import (
    DensityMatrix,
    PureState,
    QubitChannel,
    apply_channel,
    concurrence,
    dephasing_channel,
    entanglement_of_formation,
    fidelity_with_pure,
    ion_ion_singlet,
    ion_photon_state,
    purity,
    replacement_channel,
    rotation_channel,
    werner_state,
)
from .herald import (
    HeraldResult,
    InterferometerModel,
    NoHeraldSupportError,
    beamsplitter_coincidence,
    cross_port_probability,
    false_herald_probability,
    joint_source_state,
    predict_ionion_from_ionphoton,
)
from .measure import (
    BASIS_SETTINGS,
    DetectionModel,
    RotationSetting,
    outcome_probabilities,
    rotation_map,
    sample_outcomes,
)
from .bell import (
    CHSH_SETTINGS_ION_ION,
    CHSH_SETTINGS_ION_PHOTON,
    ChshResult,
    CorrelationEstimate,
    chsh,
    chsh_predicted,
    correlation_from_counts,
    correlation_from_probs,
)
from .tomo import (
    CountsTable,
    ReconstructionResult,
    TomographySetting,
    bootstrap_measures,
    mle_reconstruct,
    simulate_tomography_counts,
)
from .runsim import (
    ConfigError,
    EventLog,
    ExperimentConfig,
    NoiseBudget,
    calibrate_collection_prob,
    fit_mode_overlap,
    rate_report,
    run_bell_experiment,
    run_tomography_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "BASIS_SETTINGS",
    "CHSH_SETTINGS_ION_ION",
    "CHSH_SETTINGS_ION_PHOTON",
    "ChshResult",
    "ConfigError",
    "CorrelationEstimate",
    "CountsTable",
    "DensityMatrix",
    "DetectionModel",
    "EventLog",
    "ExperimentConfig",
    "HeraldResult",
    "InterferometerModel",
    "NoHeraldSupportError",
    "NoiseBudget",
    "PureState",
    "QubitChannel",
    "ReconstructionResult",
    "RotationSetting",
    "TomographySetting",
    "apply_channel",
    "beamsplitter_coincidence",
    "bootstrap_measures",
    "calibrate_collection_prob",
    "chsh",
    "chsh_predicted",
    "concurrence",
    "correlation_from_counts",
    "correlation_from_probs",
    "cross_port_probability",
    "dephasing_channel",
    "entanglement_of_formation",
    "false_herald_probability",
    "fidelity_with_pure",
    "fit_mode_overlap",
    "hermitian_eig",
    "ion_ion_singlet",
    "ion_photon_state",
    "joint_source_state",
    "kron",
    "mle_reconstruct",
    "outcome_probabilities",
    "partial_trace",
    "predict_ionion_from_ionphoton",
    "purity",
    "rate_report",
    "replacement_channel",
    "rotation_channel",
    "rotation_map",
    "run_bell_experiment",
    "run_tomography_experiment",
    "sample_outcomes",
    "simulate_tomography_counts",
    "sqrt_psd",
    "werner_state",
]
