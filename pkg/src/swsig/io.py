"""Scene/sweep documents and CSV export.

Scene documents are YAML (JSON is accepted as a subset)::

    config:            # optional; command-line flags override it
      M: 128
      N: 128
      alpha: 0.1
      fc_hz: 7.3e10
      d_over_lambda: 0.5
    paths:
      - {norm_angle: 0.626953125, norm_delay: 0.69140625, gain_re: 0.5, gain_im: 0.5}
      - {angle_deg: 30.0, delay_s: 1.0e-8, gain_re: 1.0, gain_im: 0.0}

Each path gives either ``norm_angle`` or ``angle_deg`` and either
``norm_delay`` or ``delay_s``; gains default to 1 + 0j.

Every CSV starts with a ``#`` block: one ``# key: <json>`` line per field of
the resolved configuration, followed by the column header.
"""

from __future__ import annotations

import csv
import io as _io
import json
import sys
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from .channel_model import (
    PathSignature,
    RadioScene,
    SpaceFrequencyResponse,
    SystemConfig,
    normalize_signature,
)
from .errors import ConfigurationError
from .estimator import AUTO, EstimationReport, EstimatorOptions, Mode
from .evaluation import SWEEP_COLUMNS, SweepSpec
from .spectrum import AngleDelayMap

REPORT_COLUMNS = (
    "path_idx", "k_raw", "l_raw", "k_corr", "l_corr",
    "phi_norm", "tau_norm", "gain_re", "gain_im", "peak_power",
)

_CONFIG_KEYS = {"M", "N", "alpha", "fc_hz", "d_over_lambda"}


def read_document(path) -> dict:
    """Parse a YAML/JSON file; an empty file is an empty document."""
    text = Path(path).read_text()
    doc = yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: expected a mapping at top level")
    return doc


def config_from_mapping(base: Mapping | None, overrides: Mapping | None = None) -> SystemConfig:
    """Merge config mappings (later wins, ``None`` values ignored) into a SystemConfig."""
    merged = {"M": 128, "N": 128, "alpha": 0.0, "fc_hz": 73e9, "d_over_lambda": 0.5}
    for src in (base or {}), (overrides or {}):
        unknown = set(src) - _CONFIG_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: v for k, v in src.items() if v is not None})
    try:
        return SystemConfig(
            int(merged["M"]), int(merged["N"]), float(merged["alpha"]),
            float(merged["fc_hz"]), float(merged["d_over_lambda"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc


def scene_from_mapping(doc: Mapping, config: SystemConfig) -> RadioScene:
    paths = []
    for i, p in enumerate(doc.get("paths") or []):
        try:
            if "norm_angle" in p:
                phi = float(p["norm_angle"])
            else:
                phi, _ = normalize_signature(float(p["angle_deg"]), 0.0, config)
            if "norm_delay" in p:
                tau = float(p["norm_delay"])
            else:
                _, tau = normalize_signature(0.0, float(p["delay_s"]), config)
            gain = complex(float(p.get("gain_re", 1.0)), float(p.get("gain_im", 0.0)))
        except KeyError as exc:
            raise ConfigurationError(f"path {i}: missing field {exc}") from exc
        paths.append(PathSignature(phi, tau, gain))
    return RadioScene(tuple(paths))


def scene_to_mapping(scene: RadioScene, config: SystemConfig | None = None) -> dict:
    doc: dict = {}
    if config is not None:
        doc["config"] = config.as_dict()
    doc["paths"] = [
        {"norm_angle": p.norm_angle, "norm_delay": p.norm_delay,
         "gain_re": p.gain.real, "gain_im": p.gain.imag}
        for p in scene
    ]
    return doc


def write_scene(path, scene: RadioScene, config: SystemConfig | None = None) -> None:
    Path(path).write_text(yaml.safe_dump(scene_to_mapping(scene, config), sort_keys=False))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_csv(header: Mapping, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def emit(text: str, out) -> None:
    """Write to a file path, or stdout when ``out`` is None or '-'."""
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def parse_csv(text: str) -> tuple[dict, list[str], list[list[str]]]:
    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            if val:
                header[key.strip()] = json.loads(val)
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ConfigurationError("CSV has no column header")
    return header, rows[0], rows[1:]


def response_rows(H: SpaceFrequencyResponse):
    M, N = H.config.shape
    d = H.data
    for m in range(M):
        for n in range(N):
            yield (m, n, d[m, n].real, d[m, n].imag)


def response_csv(H: SpaceFrequencyResponse, header: Mapping) -> str:
    return format_csv(header, ("m", "n", "re", "im"), response_rows(H))


def read_response_csv(path, config: SystemConfig | None = None) -> SpaceFrequencyResponse:
    """Load an ``m,n,re,im`` CSV; the config comes from its header unless given."""
    header, cols, rows = parse_csv(Path(path).read_text())
    if [c.strip() for c in cols] != ["m", "n", "re", "im"]:
        raise ConfigurationError(f"{path}: expected columns m,n,re,im, got {cols}")
    if config is None:
        if "config" not in header:
            raise ConfigurationError(f"{path}: no config in header; pass it explicitly")
        config = config_from_mapping(header["config"])
    data = np.zeros(config.shape, dtype=np.complex128)
    seen = 0
    for r in rows:
        m, n = int(r[0]), int(r[1])
        if not (0 <= m < config.M and 0 <= n < config.N):
            raise ConfigurationError(f"{path}: index ({m}, {n}) outside {config.shape}")
        data[m, n] = complex(float(r[2]), float(r[3]))
        seen += 1
    if seen != config.M * config.N:
        raise ConfigurationError(f"{path}: expected {config.M * config.N} rows, got {seen}")
    return SpaceFrequencyResponse(data, config)


def map_csv(G: AngleDelayMap, header: Mapping, magnitude_db: bool = False) -> str:
    M, N = G.config.shape
    if magnitude_db:
        with np.errstate(divide="ignore"):
            mag = 20.0 * np.log10(np.abs(G.data))
        rows = ((k, l, mag[k, l]) for k in range(M) for l in range(N))
        return format_csv(header, ("k", "l", "mag_db"), rows)
    d = G.data
    rows = ((k, l, d[k, l].real, d[k, l].imag) for k in range(M) for l in range(N))
    return format_csv(header, ("k", "l", "re", "im"), rows)


def report_rows(report: EstimationReport):
    for i, e in enumerate(report):
        yield (i, e.raw_bin[0], e.raw_bin[1], e.coarse_bin[0], e.coarse_bin[1],
               e.norm_angle, e.norm_delay, e.gain.real, e.gain.imag, e.peak_power)


def report_csv(report: EstimationReport, header: Mapping) -> str:
    return format_csv(header, REPORT_COLUMNS, report_rows(report))


def sweep_csv(rows: Sequence[Mapping], header: Mapping) -> str:
    return format_csv(header, SWEEP_COLUMNS, ([r[c] for c in SWEEP_COLUMNS] for r in rows))


def _as_tuple(v, cast):
    if isinstance(v, (list, tuple)):
        return tuple(cast(x) for x in v)
    return (cast(v),)


def options_from_mapping(d: Mapping | None) -> EstimatorOptions:
    d = dict(d or {})
    nbr = d.get("nbr", AUTO)
    if nbr != AUTO:
        nbr = tuple(nbr) if isinstance(nbr, (list, tuple)) else (int(nbr), int(nbr))
    return EstimatorOptions(
        rotation_counts=(int(d.get("rot_m", 5)), int(d.get("rot_n", 5))),
        neighborhood=nbr,
        max_paths=d.get("max_paths", AUTO),
        detection_threshold_factor=float(d.get("gamma", 12.0)),
        mode=d.get("mode", "two-stage"),
        cancellation=d.get("cancellation", "none"),
    )


def load_sweep(path) -> SweepSpec:
    """Read a sweep document.

    Keys: ``M, N, fc_hz, d_over_lambda, alpha, K, snr_db, mode, trials, seed,
    known_count, min_separation`` and an optional ``estimator`` mapping with
    ``rot_m, rot_n, nbr, gamma, max_paths, cancellation``.  Axis keys take a
    scalar or a list.
    """
    doc = read_document(path)
    est = doc.get("estimator")
    try:
        return SweepSpec(
            M=int(doc.get("M", 64)),
            N=int(doc.get("N", doc.get("M", 64))),
            fc_hz=float(doc.get("fc_hz", 73e9)),
            d_over_lambda=float(doc.get("d_over_lambda", 0.5)),
            alphas=_as_tuple(doc.get("alpha", 0.1), float),
            targets=_as_tuple(doc.get("K", 5), int),
            snrs_db=_as_tuple(doc.get("snr_db", [0, 10, 20, 30]), float),
            modes=tuple(Mode(m).value for m in _as_tuple(doc.get("mode", ["two-stage", "one-stage"]), str)),
            trials=int(doc.get("trials", 300)),
            seed=int(doc.get("seed", 0)),
            options=options_from_mapping(est),
            known_count=bool(doc.get("known_count", True)),
            min_separation=bool(doc.get("min_separation", True)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{path}: {exc}") from exc
