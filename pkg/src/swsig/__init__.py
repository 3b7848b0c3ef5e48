"""Signature (angle, delay, gain) estimation for spatial-wideband MIMO-OFDM channels."""

from .channel_model import (
    PathSignature,
    RadioScene,
    SpaceFrequencyResponse,
    SystemConfig,
    add_noise,
    denormalize_signature,
    normalize_signature,
    synthesize_response,
)
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    ModelMismatchError,
    SwsigError,
)
from .estimator import (
    AUTO,
    Cancellation,
    EstimatedSignature,
    EstimationReport,
    EstimatorOptions,
    Mode,
    estimate_scene,
)
from .spectrum import (
    AngleDelayMap,
    RotationOffset,
    angle_delay_map,
    dirichlet,
    predict_leakage_narrowband,
    rotate_response,
)

__version__ = "0.1.0"

__all__ = [
    "AUTO", "AngleDelayMap", "Cancellation", "ConfigurationError", "DegenerateInputError",
    "DomainError", "EstimatedSignature", "EstimationReport", "EstimatorOptions", "Mode",
    "ModelMismatchError", "PathSignature", "RadioScene", "RotationOffset",
    "SpaceFrequencyResponse", "SwsigError", "SystemConfig", "add_noise", "angle_delay_map",
    "denormalize_signature", "dirichlet", "estimate_scene", "normalize_signature",
    "predict_leakage_narrowband", "rotate_response", "synthesize_response",
]
