"""Hybrid atom-interferometer / optomechanical inertial sensor toolkit."""

from .atom_interferometer import (
    AccelSensitivity,
    InterferometerConfig,
    accel_sensitivity,
    phase_from_mirror_motion,
    population,
    qpn_accel_asd,
    qpn_phase,
    sensitivity_g,
    transfer_fn_sq,
)
from .fusion_sim import (
    SimConfig,
    SimRun,
    allan_deviation,
    estimate_accel,
    oscillator_response,
    readout,
    run_batch,
    run_cycles,
    synthesize_noise,
)
from .hybrid_optimizer import (
    HybridConfig,
    SpectrumTable,
    SweepResult,
    hybrid_noise_psd,
    hybrid_sigma,
    hybrid_spectrum,
    sweep_bandwidth,
)
from .noise_models import (
    NoisePsd,
    PiecewiseLogPsd,
    asd_of,
    default_peterson_table,
    load_peterson_table,
    peterson_accel_psd,
    peterson_noise_psd,
    white_noise_psd,
)
from .omrr_model import (
    OmrrConfig,
    disp_to_accel_tf,
    readout_limited_accel_asd,
    required_sigma_x,
    self_noise_accel_psd,
    thermal_accel_floor,
    thermal_displacement_psd,
)

__version__ = "0.1.0"

__all__ = [
    "AccelSensitivity",
    "HybridConfig",
    "InterferometerConfig",
    "NoisePsd",
    "OmrrConfig",
    "PiecewiseLogPsd",
    "SimConfig",
    "SimRun",
    "SpectrumTable",
    "SweepResult",
    "accel_sensitivity",
    "allan_deviation",
    "asd_of",
    "default_peterson_table",
    "disp_to_accel_tf",
    "estimate_accel",
    "hybrid_noise_psd",
    "hybrid_sigma",
    "hybrid_spectrum",
    "load_peterson_table",
    "oscillator_response",
    "peterson_accel_psd",
    "peterson_noise_psd",
    "phase_from_mirror_motion",
    "population",
    "qpn_accel_asd",
    "qpn_phase",
    "readout",
    "readout_limited_accel_asd",
    "required_sigma_x",
    "run_batch",
    "run_cycles",
    "self_noise_accel_psd",
    "sensitivity_g",
    "sweep_bandwidth",
    "synthesize_noise",
    "thermal_accel_floor",
    "thermal_displacement_psd",
    "transfer_fn_sq",
    "white_noise_psd",
]
