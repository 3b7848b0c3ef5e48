"""Two-stage rotation estimator for spatial-wideband AoA/ToA signatures.

Pipeline per detected cluster:

1. coarse correction: for each candidate angle bin ``k`` around the raw peak,
   undo the wideband term with the hypothesis ``phi = k/M`` and keep the
   ``(k, l)`` with the largest conjugated angle-delay power;
2. fine rotation: grid search of fractional rotations within half a bin of
   the corrected coarse bin;
3. complex gain by projecting the conjugated, rotated response on the
   corrected bin.

``Mode.ONE_STAGE`` skips step 1 (the direct-rotation baseline).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .channel_model import (
    PathSignature,
    RadioScene,
    SpaceFrequencyResponse,
    SystemConfig,
    path_response,
    wideband_phase,
    wrap_unit,
)
from .errors import ConfigurationError
from .spectrum import (
    PEAK_TIE_RTOL,
    AngleDelayMap,
    RotationOffset,
    angle_delay_map,
    neighborhood_bins,
    rotation_phases,
)

AUTO = "auto"

# relative tolerance under which two candidate powers count as tied
_TIE_RTOL = 1e-9
# peaks this far below the strongest one are FFT round-off, not paths
_NUMERIC_FLOOR = 1e-12


class Mode(str, enum.Enum):
    TWO_STAGE = "two-stage"
    ONE_STAGE = "one-stage"


class Cancellation(str, enum.Enum):
    NONE = "none"
    SUCCESSIVE = "successive"


@dataclass(frozen=True)
class EstimatorOptions:
    """Knobs of the estimator.

    ``neighborhood`` is the half-width (in bins) of the stage-1 search window
    along angle and delay; ``"auto"`` resolves to ``ceil(alpha * M)`` on both
    axes.  It also sets the cluster exclusion window used by detection, in
    both modes, so the two modes always see the same clusters.
    """

    rotation_counts: tuple[int, int] = (5, 5)
    neighborhood: Union[tuple[int, int], str] = AUTO
    max_paths: Union[int, str] = AUTO
    detection_threshold_factor: float = 12.0
    mode: Mode = Mode.TWO_STAGE
    cancellation: Cancellation = Cancellation.NONE

    def __post_init__(self):
        rm, rn = (int(r) for r in self.rotation_counts)
        if rm < 2 or rn < 2:
            raise ConfigurationError(f"rotation counts must be >= 2, got {self.rotation_counts}")
        object.__setattr__(self, "rotation_counts", (rm, rn))
        if self.neighborhood != AUTO:
            mn, nn = (int(v) for v in self.neighborhood)
            if mn < 0 or nn < 0:
                raise ConfigurationError(f"neighborhood must be >= 0, got {self.neighborhood}")
            object.__setattr__(self, "neighborhood", (mn, nn))
        if self.max_paths != AUTO:
            if int(self.max_paths) < 1:
                raise ConfigurationError(f"max_paths must be >= 1, got {self.max_paths}")
            object.__setattr__(self, "max_paths", int(self.max_paths))
        g = float(self.detection_threshold_factor)
        if not g > 0:
            raise ConfigurationError(f"detection threshold factor must be > 0, got {g}")
        object.__setattr__(self, "detection_threshold_factor", g)
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
            object.__setattr__(self, "cancellation", Cancellation(self.cancellation))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def resolved_neighborhood(self, config: SystemConfig) -> tuple[int, int]:
        if self.neighborhood == AUTO:
            nb = neighborhood_bins(config)
            return nb, nb
        return self.neighborhood

    def search_neighborhood(self, config: SystemConfig) -> tuple[int, int]:
        if self.mode is Mode.ONE_STAGE:
            return 0, 0
        return self.resolved_neighborhood(config)

    def as_dict(self, config: SystemConfig | None = None) -> dict:
        d = {
            "mode": self.mode.value,
            "rot_m": self.rotation_counts[0],
            "rot_n": self.rotation_counts[1],
            "nbr": self.neighborhood if self.neighborhood == AUTO else list(self.neighborhood),
            "max_paths": self.max_paths,
            "gamma": self.detection_threshold_factor,
            "cancellation": self.cancellation.value,
        }
        if config is not None:
            d["nbr_resolved"] = list(self.resolved_neighborhood(config))
        return d


@dataclass(frozen=True)
class Cluster:
    k: int
    l: int
    power: float


@dataclass(frozen=True)
class CoarseCorrection:
    k: int
    l: int
    power: float
    conjugated: SpaceFrequencyResponse = field(repr=False)
    remainder_map: AngleDelayMap = field(repr=False)


@dataclass(frozen=True)
class EstimatedSignature:
    raw_bin: tuple[int, int]
    coarse_bin: tuple[int, int]
    norm_angle: float
    norm_delay: float
    gain: complex
    peak_power: float
    coarse_power: float = 0.0
    offset: RotationOffset = RotationOffset()

    def as_path(self) -> PathSignature:
        return PathSignature(self.norm_angle, self.norm_delay, self.gain)


@dataclass(frozen=True)
class EstimationReport:
    estimates: tuple[EstimatedSignature, ...]
    config: SystemConfig
    options: EstimatorOptions

    def __len__(self) -> int:
        return len(self.estimates)

    def __iter__(self):
        return iter(self.estimates)

    def as_scene(self) -> RadioScene:
        return RadioScene(tuple(e.as_path() for e in self.estimates))


def _mod_window(center: int, half: int, size: int) -> np.ndarray:
    if 2 * half + 1 >= size:
        return np.arange(size)
    return np.arange(center - half, center + half + 1) % size


def _mod_dist(a: int, b: int, size: int) -> int:
    d = abs(a - b) % size
    return min(d, size - d)


def detect_clusters(G: AngleDelayMap, opts: EstimatorOptions) -> list[Cluster]:
    """Iterative peak picking on |G|^2.

    Each pick blanks a modular window of half-width ``(M_nbr + 1, N_nbr + 1)``.
    Picking stops after ``max_paths`` peaks or when the next peak drops below
    ``gamma * median`` of the bins still in play.  Peaks equal to within
    1 ppm are taken in ascending ``(k, l)`` order.
    """
    M, N = G.config.shape
    P = G.power.copy()
    live = np.ones((M, N), dtype=bool)
    mn, nn = opts.resolved_neighborhood(G.config)
    limit = math.inf if opts.max_paths == AUTO else opts.max_paths
    found: list[Cluster] = []
    first = None
    while len(found) < limit and live.any():
        vals = np.where(live, P, -np.inf)
        peak = float(vals.max())
        if peak <= 0.0:
            break
        if first is None:
            first = peak
        elif peak < _NUMERIC_FLOOR * first:
            break
        if peak < opts.detection_threshold_factor * float(np.median(P[live])):
            break
        ks, ls = np.nonzero(vals >= peak * (1.0 - PEAK_TIE_RTOL))
        k, l = min(zip(ks.tolist(), ls.tolist()))
        found.append(Cluster(k, l, float(P[k, l])))
        live[np.ix_(_mod_window(k, mn + 1, M), _mod_window(l, nn + 1, N))] = False
    return found


def conjugate_wideband(H: SpaceFrequencyResponse, phi_hyp: float) -> SpaceFrequencyResponse:
    """Multiply by exp(+j2pi (alpha/N) m n phi_hyp), cancelling the squint of a path at phi_hyp."""
    if H.config.alpha == 0.0:
        return H
    return H.with_data(H.data * np.conj(wideband_phase(H.config, phi_hyp)))


def stage1_correct_coarse(
    H: SpaceFrequencyResponse,
    raw_peak: tuple[int, int],
    opts: EstimatorOptions,
) -> CoarseCorrection:
    """Search the neighborhood of ``raw_peak`` for the squint-free coarse bin."""
    cfg = H.config
    M, N = cfg.shape
    k0, l0 = (int(v) for v in raw_peak)
    mn, nn = opts.search_neighborhood(cfg)
    ls = _mod_window(l0, nn, N)
    best = None
    for k in _mod_window(k0, mn, M).tolist():
        Hc = conjugate_wideband(H, k / M)
        Gc = angle_delay_map(Hc)
        col = np.abs(Gc.data[k, ls]) ** 2
        for l, p in zip(ls.tolist(), col.tolist()):
            key = (_mod_dist(k, k0, M) + _mod_dist(l, l0, N), k, l)
            if best is None:
                best = (p, key, Hc, Gc)
                continue
            bp, bkey = best[0], best[1]
            if p > bp * (1.0 + _TIE_RTOL) or (p >= bp * (1.0 - _TIE_RTOL) and key < bkey):
                best = (p, key, Hc, Gc)
    p, key, Hc, Gc = best
    return CoarseCorrection(key[1], key[2], p, Hc, Gc)


def _offset_grid(Q: int, R: int) -> np.ndarray:
    # R points from -1/(2Q) to +1/(2Q) inclusive
    return (-0.5 + np.arange(R) / (R - 1)) / Q


def rotated_bin_value(H: SpaceFrequencyResponse, k: int, l: int, off: RotationOffset) -> complex:
    """G_rot(k, l) of the response rotated by ``off``, without a full transform."""
    M, N = H.config.shape
    a = np.exp(2j * np.pi * np.arange(M) * (k / M + off.d_angle))
    b = np.exp(2j * np.pi * np.arange(N) * (l / N + off.d_delay))
    return complex(a @ H.data @ b) / math.sqrt(M * N)


def stage2_fine_rotation(
    Hc: SpaceFrequencyResponse,
    coarse: tuple[int, int],
    opts: EstimatorOptions,
) -> tuple[RotationOffset, float]:
    """Grid search for the rotation maximizing |G_rot(k, l)|^2 at the coarse bin.

    Returns the best offset and its power.  Ties go to the smaller |d_angle|,
    then the smaller |d_delay|.
    """
    cfg = Hc.config
    M, N = cfg.shape
    rm, rn = opts.rotation_counts
    if rm < 2 or rn < 2:
        raise ConfigurationError("rotation counts must be >= 2")
    k, l = coarse
    dphis = _offset_grid(M, rm)
    dtaus = _offset_grid(N, rn)
    base_m = np.exp(2j * np.pi * np.arange(M) * k / M)
    base_n = np.exp(2j * np.pi * np.arange(N) * l / N)
    cols = [base_n * rotation_phases(N, dt) for dt in dtaus]
    scale = 1.0 / (M * N)
    best = None
    for dp in dphis:
        row = (base_m * rotation_phases(M, dp)) @ Hc.data
        for dt, b in zip(dtaus, cols):
            p = abs(row @ b) ** 2 * scale
            key = (abs(dp), abs(dt))
            if best is None:
                best = (p, key, dp, dt)
                continue
            bp, bkey = best[0], best[1]
            if p > bp * (1.0 + _TIE_RTOL) or (p >= bp * (1.0 - _TIE_RTOL) and key < bkey):
                best = (p, key, dp, dt)
    return RotationOffset(float(best[2]), float(best[3])), float(best[0])


def estimate_coefficient(H: SpaceFrequencyResponse, est: EstimatedSignature) -> complex:
    """Complex gain from the conjugated, rotated response at the corrected bin.

    The conjugation uses the coarse hypothesis ``k/M``.  The projection is
    scaled by 1/(MN) so an on-grid noiseless path returns its gain exactly.
    """
    M, N = H.config.shape
    k, l = est.coarse_bin
    Hc = conjugate_wideband(H, k / M)
    return rotated_bin_value(Hc, k, l, est.offset) / math.sqrt(M * N)


def estimate_scene(
    H: SpaceFrequencyResponse,
    opts: EstimatorOptions | None = None,
) -> EstimationReport:
    """Run detection and both rotation stages for every cluster of ``H``."""
    opts = opts or EstimatorOptions()
    cfg = H.config
    M, N = cfg.shape
    clusters = detect_clusters(angle_delay_map(H), opts)
    work = H
    out = []
    for c in clusters:
        s1 = stage1_correct_coarse(work, (c.k, c.l), opts)
        off, p2 = stage2_fine_rotation(s1.conjugated, (s1.k, s1.l), opts)
        est = EstimatedSignature(
            raw_bin=(c.k, c.l),
            coarse_bin=(s1.k, s1.l),
            norm_angle=wrap_unit(s1.k / M + off.d_angle),
            norm_delay=wrap_unit(s1.l / N + off.d_delay),
            gain=0j,
            peak_power=p2,
            coarse_power=s1.power,
            offset=off,
        )
        gain = estimate_coefficient(work, est)
        est = replace(est, gain=gain)
        out.append(est)
        if opts.cancellation is Cancellation.SUCCESSIVE and gain != 0:
            work = work.with_data(work.data - path_response(est.as_path(), cfg))
    return EstimationReport(tuple(out), cfg, opts)
