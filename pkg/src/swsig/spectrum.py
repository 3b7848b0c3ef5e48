"""Angle-delay transforms, rotations and closed-form leakage predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel_model import RadioScene, SpaceFrequencyResponse, SystemConfig
from .errors import ConfigurationError, ModelMismatchError

# |sin(pi x)| below this is treated as the removable singularity of D_Q
_SINGULAR_EPS = 1e-12
# relative tolerance under which two peak powers are considered equal
PEAK_TIE_RTOL = 1e-6


@dataclass(frozen=True)
class AngleDelayMap:
    """M x N complex angle-delay spectrum G(k, l)."""

    data: np.ndarray = field(repr=False)
    config: SystemConfig

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128, copy=True)
        if arr.shape != self.config.shape:
            raise ConfigurationError(
                f"map shape {arr.shape} does not match config {self.config.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.data) ** 2

    def peak(self) -> tuple[int, int]:
        """Bin of the global maximum of |G|^2.

        Bins within 1 ppm of the maximum count as tied; the smallest
        ``(k, l)`` wins, so the answer is stable under float round-off.
        """
        P = self.power
        ks, ls = np.nonzero(P >= P.max() * (1.0 - PEAK_TIE_RTOL))
        k, l = min(zip(ks.tolist(), ls.tolist()))
        return int(k), int(l)


@dataclass(frozen=True)
class RotationOffset:
    """Fractional rotation in cycles per antenna / per subcarrier index."""

    d_angle: float = 0.0
    d_delay: float = 0.0


def angle_delay_map(H: SpaceFrequencyResponse) -> AngleDelayMap:
    """Unitary 2-D inverse DFT.

    G(k, l) = 1/sqrt(MN) sum_m sum_n H(m, n) exp(+j2pi mk/M) exp(+j2pi nl/N)

    ``numpy.fft.ifft2`` carries the +j kernel with a 1/(MN) factor, so the
    result is rescaled by sqrt(MN).
    """
    M, N = H.config.shape
    return AngleDelayMap(np.fft.ifft2(H.data) * math.sqrt(M * N), H.config)


def angle_delay_map_direct(H: SpaceFrequencyResponse) -> AngleDelayMap:
    """Same transform as :func:`angle_delay_map` evaluated as the literal double sum."""
    M, N = H.config.shape
    m = np.arange(M)
    n = np.arange(N)
    Fm = np.exp(2j * np.pi * np.outer(m, m) / M)
    Fn = np.exp(2j * np.pi * np.outer(n, n) / N)
    G = np.empty((M, N), dtype=np.complex128)
    for k in range(M):
        for l in range(N):
            G[k, l] = np.sum(H.data * np.outer(Fm[k], Fn[l]))
    return AngleDelayMap(G / math.sqrt(M * N), H.config)


def dirichlet(Q: int, x):
    """Phased Dirichlet kernel exp(-j pi x (Q-1)) sin(Q pi x) / sin(pi x).

    This equals the geometric sum ``sum_{q<Q} exp(-j2pi x q)``; at integer
    ``x`` it returns exactly ``Q``.
    """
    if Q < 1:
        raise ConfigurationError(f"Q must be >= 1, got {Q}")
    x = np.asarray(x, dtype=float)
    den = np.sin(np.pi * x)
    singular = np.abs(den) < _SINGULAR_EPS
    safe = np.where(singular, 1.0, den)
    val = np.exp(-1j * np.pi * x * (Q - 1)) * np.sin(Q * np.pi * x) / safe
    out = np.where(singular, complex(Q), val)
    return out[()] if out.ndim == 0 else out


def predict_leakage_narrowband(scene: RadioScene, config: SystemConfig, k, l):
    """Closed-form G(k, l) of a narrowband scene from Dirichlet kernels.

    ``k`` and ``l`` may be scalars or broadcastable integer arrays.
    """
    if config.alpha != 0.0:
        raise ModelMismatchError("the Dirichlet closed form only holds for alpha == 0")
    M, N = config.shape
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    total = np.zeros(np.broadcast(k, l).shape, dtype=np.complex128)
    for p in scene:
        total = total + p.gain * dirichlet(M, p.norm_angle - k / M) * dirichlet(N, p.norm_delay - l / N)
    total = total / math.sqrt(M * N)
    return total[()] if total.ndim == 0 else total


def predicted_spread_bins(phi: float, config: SystemConfig) -> int:
    """Squint spread of a path in bins: alpha*M*phi rounded half-up."""
    return int(math.floor(config.alpha * config.M * float(phi) + 0.5))


def neighborhood_bins(config: SystemConfig) -> int:
    """Worst-case spread ceil(alpha*M), used as the default search neighborhood."""
    return int(math.ceil(config.alpha * config.M - 1e-12))


def rotation_phases(Q: int, delta: float) -> np.ndarray:
    """Diagonal of the rotation matrix: exp(j2pi q delta), q = 0..Q-1."""
    return np.exp(2j * np.pi * np.arange(Q) * delta)


def rotate_response(H: SpaceFrequencyResponse, off: RotationOffset) -> SpaceFrequencyResponse:
    """H_rot(m, n) = exp(j2pi m d_angle) H(m, n) exp(j2pi n d_delay).

    A tone at ``phi`` moves to ``phi - d_angle``; rotating by
    ``phi - k/M`` concentrates it on bin ``k``.
    """
    M, N = H.config.shape
    a = rotation_phases(M, off.d_angle)[:, None]
    b = rotation_phases(N, off.d_delay)[None, :]
    return H.with_data(a * H.data * b)


def support_width_3db(G: AngleDelayMap, axis: int, peak: tuple[int, int] | None = None) -> int:
    """Contiguous (modular) count of bins within 3 dB of the peak along one axis.

    The cut passes through ``peak`` (the global maximum by default); ``axis=0``
    walks the angle index, ``axis=1`` the delay index.
    """
    P = G.power
    if peak is None:
        peak = G.peak()
    k0, l0 = peak
    line = P[:, l0] if axis == 0 else P[k0, :]
    c = k0 if axis == 0 else l0
    half = line[c] / 2.0
    Q = line.size
    width = 1
    for step in (1, -1):
        i = 1
        while i < Q and line[(c + step * i) % Q] >= half:
            width += 1
            i += 1
    return min(width, Q)
