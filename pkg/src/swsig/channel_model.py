"""Space-frequency channel responses for a ULA + OFDM receiver.

The response of a scene with paths ``(phi_i, tau_i, beta_i)`` on antenna ``m``
and subcarrier ``n`` is

    H(m, n) = sum_i beta_i exp(-j2pi n tau_i) exp(-j2pi m phi_i)
                       exp(-j2pi (alpha/N) m n phi_i)

where the last factor is the spatial-wideband (beam squint) term.  For
``alpha == 0`` it is exactly one and the model is the usual separable
narrowband model.

Normalized angles and delays live on [0, 1) (cycles per antenna index and per
subcarrier index), which lines up with DFT bins.  Physical angles are recovered
by mapping [0.5, 1) onto [-0.5, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, DomainError


def wrap_unit(x: float) -> float:
    """Reduce ``x`` modulo 1 onto [0, 1), guarding the ``-tiny % 1 == 1.0`` case."""
    r = float(x) % 1.0
    return 0.0 if r >= 1.0 else r


@dataclass(frozen=True)
class SystemConfig:
    """Array and waveform geometry.

    ``alpha`` is the bandwidth selection parameter: the system bandwidth is
    ``alpha * carrier_freq`` and the subcarrier spacing ``alpha * fc / N``.
    """

    num_antennas: int
    num_subcarriers: int
    alpha: float = 0.0
    carrier_freq: float = 73e9
    d_over_lambda: float = 0.5

    def __post_init__(self):
        for name in ("num_antennas", "num_subcarriers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigurationError(f"{name} must be an integer, got {v!r}")
            if v < 2:
                raise ConfigurationError(f"{name} must be >= 2, got {v}")
            object.__setattr__(self, name, int(v))
        a = float(self.alpha)
        if not (0.0 <= a < 1.0) or not math.isfinite(a):
            raise ConfigurationError(f"alpha must lie in [0, 1), got {self.alpha}")
        object.__setattr__(self, "alpha", a)
        fc = float(self.carrier_freq)
        if not (fc > 0.0 and math.isfinite(fc)):
            raise ConfigurationError(f"carrier_freq must be > 0, got {self.carrier_freq}")
        object.__setattr__(self, "carrier_freq", fc)
        d = float(self.d_over_lambda)
        if not (d > 0.0 and math.isfinite(d)):
            raise ConfigurationError(f"d_over_lambda must be > 0, got {self.d_over_lambda}")
        object.__setattr__(self, "d_over_lambda", d)

    @property
    def M(self) -> int:
        return self.num_antennas

    @property
    def N(self) -> int:
        return self.num_subcarriers

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_antennas, self.num_subcarriers)

    @property
    def subcarrier_spacing(self) -> float:
        return self.alpha * self.carrier_freq / self.num_subcarriers

    def as_dict(self) -> dict:
        return {
            "M": self.num_antennas,
            "N": self.num_subcarriers,
            "alpha": self.alpha,
            "fc_hz": self.carrier_freq,
            "d_over_lambda": self.d_over_lambda,
        }


@dataclass(frozen=True)
class PathSignature:
    """One scatterer: normalized angle, normalized delay and complex gain."""

    norm_angle: float
    norm_delay: float
    gain: complex = 1.0 + 0.0j

    def __post_init__(self):
        object.__setattr__(self, "norm_angle", wrap_unit(self.norm_angle))
        object.__setattr__(self, "norm_delay", wrap_unit(self.norm_delay))
        object.__setattr__(self, "gain", complex(self.gain))


@dataclass(frozen=True)
class RadioScene:
    paths: tuple[PathSignature, ...] = ()

    def __post_init__(self):
        paths = tuple(self.paths)
        seen = set()
        for p in paths:
            if not isinstance(p, PathSignature):
                raise ConfigurationError(f"scene entries must be PathSignature, got {type(p).__name__}")
            if abs(p.gain) == 0.0 or not np.isfinite(p.gain):
                raise ConfigurationError("path gains must be finite and non-zero")
            key = (p.norm_angle, p.norm_delay)
            if key in seen:
                raise ConfigurationError(f"duplicate path signature {key}")
            seen.add(key)
        object.__setattr__(self, "paths", paths)

    @classmethod
    def from_tuples(cls, rows: Iterable[Sequence]) -> "RadioScene":
        """Build a scene from ``(phi, tau, gain)`` triples."""
        return cls(tuple(PathSignature(float(r[0]), float(r[1]), complex(r[2])) for r in rows))

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __add__(self, other: "RadioScene") -> "RadioScene":
        return RadioScene(self.paths + other.paths)


@dataclass(frozen=True)
class SpaceFrequencyResponse:
    """M x N complex matrix H(m, n) (antenna x subcarrier) bound to its config."""

    data: np.ndarray = field(repr=False)
    config: SystemConfig

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128, copy=True)
        if arr.shape != self.config.shape:
            raise ConfigurationError(
                f"response shape {arr.shape} does not match config {self.config.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("response contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def with_data(self, data: np.ndarray) -> "SpaceFrequencyResponse":
        return SpaceFrequencyResponse(data, self.config)

    @property
    def power(self) -> float:
        """Mean per-sample power over the M x N grid."""
        return float(np.mean(np.abs(self.data) ** 2))


def _indices(config: SystemConfig):
    m = np.arange(config.M, dtype=float)[:, None]
    n = np.arange(config.N, dtype=float)[None, :]
    return m, n


def wideband_phase(config: SystemConfig, phi: float) -> np.ndarray:
    """The wideband term exp(-j2pi (alpha/N) m n phi) as an M x N matrix."""
    if config.alpha == 0.0:
        return np.ones(config.shape, dtype=np.complex128)
    m, n = _indices(config)
    return np.exp(-2j * np.pi * (config.alpha / config.N) * (m * n) * phi)


def path_response(path: PathSignature, config: SystemConfig) -> np.ndarray:
    """Noiseless M x N contribution of a single path."""
    m = np.arange(config.M, dtype=float)
    n = np.arange(config.N, dtype=float)
    steer = np.exp(-2j * np.pi * m * path.norm_angle)[:, None]
    delay = np.exp(-2j * np.pi * n * path.norm_delay)[None, :]
    out = path.gain * (steer * delay)
    if config.alpha != 0.0:
        out = out * wideband_phase(config, path.norm_angle)
    return out


def synthesize_response(scene: RadioScene, config: SystemConfig) -> SpaceFrequencyResponse:
    """Exact noiseless spatial-wideband response of ``scene``."""
    H = np.zeros(config.shape, dtype=np.complex128)
    for path in scene:
        H += path_response(path, config)
    return SpaceFrequencyResponse(H, config)


def add_noise(H: SpaceFrequencyResponse, snr_db: float, seed: int) -> SpaceFrequencyResponse:
    """Add i.i.d. CN(0, sigma^2) noise at the given per-sample SNR.

    SNR is the mean per-sample signal power over the grid divided by sigma^2.
    Real and imaginary parts are each N(0, sigma^2 / 2), drawn from a PCG64
    generator seeded with ``seed``.
    """
    snr_db = float(snr_db)
    if math.isinf(snr_db) and snr_db > 0:
        return H
    if math.isnan(snr_db):
        raise ConfigurationError("snr_db is NaN")
    p_sig = H.power
    if p_sig == 0.0:
        raise DegenerateInputError("cannot set a finite SNR on a zero-power response")
    sigma2 = p_sig / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    w = rng.standard_normal(H.config.shape) + 1j * rng.standard_normal(H.config.shape)
    return H.with_data(H.data + math.sqrt(sigma2 / 2.0) * w)


def normalize_signature(angle_deg: float, delay_s: float, config: SystemConfig) -> tuple[float, float]:
    """Physical (angle in degrees, delay in seconds) -> (phi, tau) on [0, 1)."""
    if not (-90.0 <= angle_deg <= 90.0):
        raise DomainError(f"angle must lie in [-90, 90] degrees, got {angle_deg}")
    if delay_s < 0:
        raise DomainError(f"delay must be >= 0, got {delay_s}")
    phi = config.d_over_lambda * math.sin(math.radians(angle_deg))
    if config.alpha == 0.0:
        if delay_s > 0:
            raise DomainError("delay normalization is undefined for alpha == 0")
        tau = 0.0
    else:
        tau = config.subcarrier_spacing * delay_s
    return wrap_unit(phi), wrap_unit(tau)


def signed_angle(phi: float) -> float:
    """Map a normalized angle on [0, 1) to its signed representative on [-0.5, 0.5)."""
    phi = wrap_unit(phi)
    return phi - 1.0 if phi >= 0.5 else phi


def denormalize_signature(phi: float, tau: float, config: SystemConfig) -> tuple[float, float]:
    """(phi, tau) -> physical (angle in degrees, delay in seconds).

    ``phi`` values on [0.5, 1) are read as negative spatial frequencies.
    """
    s = signed_angle(phi) / config.d_over_lambda
    if abs(s) > 1.0:
        if abs(s) - 1.0 > 1e-12:
            raise DomainError(
                f"normalized angle {phi} is not reachable with d/lambda={config.d_over_lambda}"
            )
        s = math.copysign(1.0, s)
    angle = math.degrees(math.asin(s))
    tau = float(tau)
    if config.alpha == 0.0:
        if tau != 0.0:
            raise DomainError("delay denormalization is undefined for alpha == 0")
        return angle, 0.0
    return angle, tau / config.subcarrier_spacing
