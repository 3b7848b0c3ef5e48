"""Monte Carlo harness: random scenes, hit/false scoring, RMSE and sweeps.

Seeding: every trial carries one 64-bit seed.  Independent streams are split
off it with :func:`mix_seed` (SplitMix64 of ``seed XOR stream``): stream 1
draws the scene, stream 2 the noise.  Sweeps derive the trial seed as
``mix_seed(base_seed, trial_index)``, so the same trial index sees the same
scene across SNRs and modes, and results never depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .channel_model import (
    PathSignature,
    RadioScene,
    SystemConfig,
    add_noise,
    denormalize_signature,
    synthesize_response,
)
from .errors import ConfigurationError, DomainError
from .estimator import EstimationReport, EstimatorOptions, estimate_scene
from .spectrum import predicted_spread_bins

_MASK64 = 0xFFFFFFFFFFFFFFFF
SCENE_STREAM = 1
NOISE_STREAM = 2
MAX_REJECTIONS = 10_000

SWEEP_COLUMNS = (
    "alpha", "K", "snr_db", "mode", "trials",
    "hit_rate", "false_rate", "rmse_angle_rad", "rmse_delay_s", "rmse_gain",
)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(seed: int, index: int) -> int:
    return splitmix64((int(seed) ^ int(index)) & _MASK64)


@dataclass(frozen=True)
class TrialSpec:
    """One Monte Carlo trial; ``seed`` fixes scene, gains and noise.

    With ``known_count`` the estimator is told to return exactly K clusters,
    standing in for an external cluster counter.  ``min_separation=False``
    draws signatures with no rejection, so clusters may merge.
    """

    config: SystemConfig
    num_targets: int
    snr_db: float
    seed: int
    opts: EstimatorOptions = field(default_factory=EstimatorOptions)
    known_count: bool = True
    min_separation: bool = True

    def __post_init__(self):
        if int(self.num_targets) < 1:
            raise ConfigurationError(f"num_targets must be >= 1, got {self.num_targets}")

    @property
    def cell(self) -> tuple:
        return (self.config.alpha, self.num_targets, float(self.snr_db), self.opts.mode.value)


@dataclass(frozen=True)
class ScoreReport:
    hits: int
    falses: int
    misses: int
    num_estimates: int
    rmse_angle_rad: float
    rmse_angle_norm: float
    rmse_delay_s: float
    rmse_delay_norm: float
    rmse_gain: float


def _circ_diff(a: float, b: float) -> float:
    """Signed difference a - b wrapped onto [-0.5, 0.5)."""
    return (a - b + 0.5) % 1.0 - 0.5


def _bin_separation(p: PathSignature, q: PathSignature, cfg: SystemConfig) -> float:
    return max(abs(_circ_diff(p.norm_angle, q.norm_angle)) * cfg.M,
               abs(_circ_diff(p.norm_delay, q.norm_delay)) * cfg.N)


def random_scene(spec: TrialSpec) -> RadioScene:
    """Uniform signatures on [0, 1)^2 with unit-modulus, uniform-phase gains.

    Paths closer than ``2 * max(spread) + 1`` bins (Chebyshev, modular) to an
    already accepted path are redrawn.
    """
    cfg = spec.config
    rng = np.random.default_rng(mix_seed(spec.seed, SCENE_STREAM))
    sigs: list[tuple[float, float]] = []
    attempts = 0
    while len(sigs) < spec.num_targets:
        if attempts >= MAX_REJECTIONS:
            raise ConfigurationError(
                f"could not place {spec.num_targets} separated paths in {MAX_REJECTIONS} draws"
            )
        attempts += 1
        phi, tau = rng.random(2)
        cand = PathSignature(phi, tau)
        if spec.min_separation:
            ok = True
            for a, b in sigs:
                other = PathSignature(a, b)
                sep = 2 * max(predicted_spread_bins(phi, cfg), predicted_spread_bins(a, cfg)) + 1
                if _bin_separation(cand, other, cfg) < sep:
                    ok = False
                    break
            if not ok:
                continue
        elif (cand.norm_angle, cand.norm_delay) in sigs:
            continue
        sigs.append((cand.norm_angle, cand.norm_delay))
    psi = rng.random(len(sigs)) * 2.0 * np.pi
    return RadioScene(tuple(PathSignature(a, b, complex(np.exp(1j * p))) for (a, b), p in zip(sigs, psi)))


def _physical_angle(phi: float, cfg: SystemConfig) -> float:
    return math.radians(denormalize_signature(phi, 0.0, cfg)[0])


def match_and_score(truth: RadioScene, report: EstimationReport | Sequence, config: SystemConfig) -> ScoreReport:
    """Greedy one-to-one matching of estimates to truth paths.

    Estimates are visited in decreasing ``peak_power``; each claims the
    closest unmatched truth path lying strictly within one bin in both angle
    and delay.  Anything unmatched is a false alarm.  RMSEs use hits only.
    """
    ests = list(report)
    order = sorted(range(len(ests)), key=lambda i: (-ests[i].peak_power, i))
    truths = list(truth)
    taken = [False] * len(truths)
    pairs = []
    for i in order:
        e = ests[i]
        best = None
        for j, t in enumerate(truths):
            if taken[j]:
                continue
            da = abs(_circ_diff(e.norm_angle, t.norm_angle)) * config.M
            dd = abs(_circ_diff(e.norm_delay, t.norm_delay)) * config.N
            if da < 1.0 and dd < 1.0:
                d = da * da + dd * dd
                if best is None or d < best[0]:
                    best = (d, j)
        if best is not None:
            taken[best[1]] = True
            pairs.append((e, truths[best[1]]))
    hits = len(pairs)
    nan = float("nan")
    if not pairs:
        return ScoreReport(0, len(ests), len(truths), len(ests), nan, nan, nan, nan, nan)
    ea, en, dn, ds, eg = [], [], [], [], []
    for e, t in pairs:
        en.append(_circ_diff(e.norm_angle, t.norm_angle))
        dn.append(_circ_diff(e.norm_delay, t.norm_delay))
        try:
            ea.append(_physical_angle(e.norm_angle, config) - _physical_angle(t.norm_angle, config))
        except DomainError:
            ea.append(nan)
        ds.append(dn[-1] / config.subcarrier_spacing if config.alpha > 0 else nan)
        eg.append(abs(complex(e.gain) - t.gain))

    def rms(v):
        return float(np.sqrt(np.mean(np.square(v))))

    return ScoreReport(
        hits=hits,
        falses=len(ests) - hits,
        misses=len(truths) - hits,
        num_estimates=len(ests),
        rmse_angle_rad=rms(ea),
        rmse_angle_norm=rms(en),
        rmse_delay_s=rms(ds),
        rmse_delay_norm=rms(dn),
        rmse_gain=rms(eg),
    )


def run_trial(spec: TrialSpec) -> ScoreReport:
    scene = random_scene(spec)
    H = synthesize_response(scene, spec.config)
    H = add_noise(H, spec.snr_db, mix_seed(spec.seed, NOISE_STREAM))
    opts = spec.opts
    if spec.known_count:
        opts = replace(opts, max_paths=spec.num_targets)
    return match_and_score(scene, estimate_scene(H, opts), spec.config)


def aggregate(specs: Sequence[TrialSpec], scores: Sequence[ScoreReport]) -> list[dict]:
    """Per-cell rates and mean RMSEs, cells in first-appearance order."""
    cells: dict[tuple, list[ScoreReport]] = {}
    for s, r in zip(specs, scores):
        cells.setdefault(s.cell, []).append(r)
    rows = []
    for (alpha, K, snr, mode), rs in cells.items():
        hits = sum(r.hits for r in rs)
        dets = sum(r.num_estimates for r in rs)
        falses = sum(r.falses for r in rs)
        with_hits = [r for r in rs if r.hits > 0]

        def mean_of(attr):
            if not with_hits:
                return float("nan")
            return float(np.mean([getattr(r, attr) for r in with_hits]))

        rows.append({
            "alpha": alpha,
            "K": K,
            "snr_db": snr,
            "mode": mode,
            "trials": len(rs),
            "hit_rate": hits / (K * len(rs)),
            "false_rate": falses / dets if dets else 0.0,
            "rmse_angle_rad": mean_of("rmse_angle_rad"),
            "rmse_delay_s": mean_of("rmse_delay_s"),
            "rmse_gain": mean_of("rmse_gain"),
        })
    return rows


def run_trials(specs: Sequence[TrialSpec], parallelism: int = 1) -> list[dict]:
    """Run every trial and aggregate; output is independent of ``parallelism``."""
    specs = list(specs)
    if not specs:
        raise ConfigurationError("empty trial grid")
    if parallelism <= 1:
        scores = [run_trial(s) for s in specs]
    else:
        chunk = max(1, len(specs) // (4 * parallelism))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            scores = list(pool.map(run_trial, specs, chunksize=chunk))
    return aggregate(specs, scores)


@dataclass(frozen=True)
class SweepSpec:
    """Axes of a parameter sweep; see :func:`swsig.io.load_sweep` for the file form."""

    M: int = 64
    N: int = 64
    fc_hz: float = 73e9
    d_over_lambda: float = 0.5
    alphas: tuple[float, ...] = (0.1,)
    targets: tuple[int, ...] = (5,)
    snrs_db: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0)
    modes: tuple[str, ...] = ("two-stage", "one-stage")
    trials: int = 300
    seed: int = 0
    options: EstimatorOptions = field(default_factory=EstimatorOptions)
    known_count: bool = True
    min_separation: bool = True

    def as_dict(self) -> dict:
        d = {
            "M": self.M, "N": self.N, "fc_hz": self.fc_hz, "d_over_lambda": self.d_over_lambda,
            "alpha": list(self.alphas), "K": list(self.targets), "snr_db": list(self.snrs_db),
            "mode": list(self.modes), "trials": self.trials, "seed": self.seed,
            "known_count": self.known_count, "min_separation": self.min_separation,
        }
        d.update({f"est_{k}": v for k, v in self.options.as_dict().items()})
        return d


def build_trials(sweep: SweepSpec) -> list[TrialSpec]:
    specs = []
    for alpha in sweep.alphas:
        cfg = SystemConfig(sweep.M, sweep.N, alpha, sweep.fc_hz, sweep.d_over_lambda)
        for K in sweep.targets:
            for snr in sweep.snrs_db:
                for mode in sweep.modes:
                    opts = replace(sweep.options, mode=mode)
                    for t in range(sweep.trials):
                        specs.append(TrialSpec(
                            cfg, K, snr, mix_seed(sweep.seed, t), opts,
                            known_count=sweep.known_count, min_separation=sweep.min_separation,
                        ))
    return specs


def run_sweep(sweep: SweepSpec, parallelism: int = 1) -> list[dict]:
    return run_trials(build_trials(sweep), parallelism)


def iter_cells(rows: Iterable[dict], **match) -> list[dict]:
    """Rows whose fields equal every keyword given."""
    return [r for r in rows if all(r[k] == v for k, v in match.items())]
