"""Command-line front end.

Exit codes: 0 success, 1 I/O error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys

import yaml

from . import io
from .channel_model import PathSignature, RadioScene, add_noise, synthesize_response
from .errors import SwsigError
from .estimator import AUTO, EstimatorOptions, estimate_scene
from .evaluation import run_sweep
from .spectrum import angle_delay_map

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 1, 2

TABLE1_PATH = (80.25, 88.50)


class _IOFailure(Exception):
    pass


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("system configuration")
    g.add_argument("--M", type=int, default=None, help="number of antennas")
    g.add_argument("--N", type=int, default=None, help="number of subcarriers")
    g.add_argument("--alpha", type=float, default=None, help="bandwidth parameter, f_s = alpha * f_c")
    g.add_argument("--fc", type=float, default=None, help="carrier frequency in Hz")
    g.add_argument("--d-over-lambda", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")
    return p


def _estimator_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("estimator")
    g.add_argument("--mode", choices=["two-stage", "one-stage"], default="two-stage")
    g.add_argument("--nbr", default=AUTO, help="neighborhood half-width: 'auto', K or K,L")
    g.add_argument("--rot-m", type=int, default=5)
    g.add_argument("--rot-n", type=int, default=5)
    g.add_argument("--gamma", type=float, default=12.0, help="detection threshold factor")
    g.add_argument("--max-paths", default=AUTO, help="'auto' or a positive integer")
    g.add_argument("--cancellation", choices=["none", "successive"], default="none")
    return p


def _overrides(args) -> dict:
    return {"M": args.M, "N": args.N, "alpha": args.alpha,
            "fc_hz": args.fc, "d_over_lambda": args.d_over_lambda}


def _read_doc(path) -> dict:
    try:
        return io.read_document(path)
    except (OSError, yaml.YAMLError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def _options(args) -> EstimatorOptions:
    nbr = args.nbr
    if nbr != AUTO:
        parts = [int(x) for x in str(nbr).split(",")]
        nbr = (parts[0], parts[-1])
    max_paths = args.max_paths if args.max_paths == AUTO else int(args.max_paths)
    return EstimatorOptions(
        rotation_counts=(args.rot_m, args.rot_n),
        neighborhood=nbr,
        max_paths=max_paths,
        detection_threshold_factor=args.gamma,
        mode=args.mode,
        cancellation=args.cancellation,
    )


def _scene_and_config(args):
    doc = _read_doc(args.scene)
    cfg = io.config_from_mapping(doc.get("config"), _overrides(args))
    return io.scene_from_mapping(doc, cfg), cfg


def _load_response(args):
    """Response from a CSV (``*.csv``) or synthesized from a scene document."""
    header = {}
    if str(args.input).lower().endswith(".csv"):
        try:
            text = open(args.input).read()
        except OSError as exc:
            raise _IOFailure(f"cannot read {args.input}: {exc}") from exc
        hdr, _, _ = io.parse_csv(text)
        base = hdr.get("config")
        cfg = io.config_from_mapping(base, _overrides(args))
        H = io.read_response_csv(args.input, cfg)
        header["source"] = str(args.input)
        return H, header
    doc = _read_doc(args.input)
    cfg = io.config_from_mapping(doc.get("config"), _overrides(args))
    scene = io.scene_from_mapping(doc, cfg)
    H = synthesize_response(scene, cfg)
    snr = getattr(args, "snr", math.inf)
    if not math.isinf(snr):
        H = add_noise(H, snr, args.seed)
    header.update({"source": str(args.input), "snr_db": snr, "seed": args.seed})
    return H, header


def cmd_synth(args) -> int:
    scene, cfg = _scene_and_config(args)
    H = synthesize_response(scene, cfg)
    if not math.isinf(args.snr):
        H = add_noise(H, args.snr, args.seed)
    header = {"command": "synth", "config": cfg.as_dict(), "num_paths": len(scene),
              "snr_db": args.snr, "seed": args.seed}
    io.emit(io.response_csv(H, header), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    H, src = _load_response(args)
    G = angle_delay_map(H)
    k, l = G.peak()
    header = {"command": "spectrum", "config": H.config.as_dict(), **src,
              "peak_bin": [k, l], "seed": args.seed}
    io.emit(io.map_csv(G, header, magnitude_db=args.mag_db), args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    opts = _options(args)
    H, src = _load_response(args)
    report = estimate_scene(H, opts)
    header = {"command": "estimate", "config": H.config.as_dict(), **src,
              "estimator": opts.as_dict(H.config), "seed": args.seed}
    io.emit(io.report_csv(report, header), args.out)
    return EXIT_OK


def table1_rows(alphas, M: int = 128, N: int = 128, fc: float = 73e9, d_over_lambda: float = 0.5):
    """Raw peak bins of the reference path for each bandwidth parameter."""
    rows = []
    for a in alphas:
        cfg = io.config_from_mapping({"M": M, "N": N, "alpha": a, "fc_hz": fc,
                                      "d_over_lambda": d_over_lambda})
        scene = RadioScene((PathSignature(TABLE1_PATH[0] / M, TABLE1_PATH[1] / N, 1.0),))
        k, l = angle_delay_map(synthesize_response(scene, cfg)).peak()
        rows.append((a, k, l))
    return rows


def cmd_table1(args) -> int:
    alphas = [float(x) for x in args.alpha_list.split(",") if x.strip()]
    base = io.config_from_mapping(None, {**_overrides(args), "alpha": None})
    rows = table1_rows(alphas, base.M, base.N, base.carrier_freq, base.d_over_lambda)
    header = {"command": "table1", "config": {**base.as_dict(), "alpha": alphas},
              "path_bins": list(TABLE1_PATH), "seed": args.seed}
    io.emit(io.format_csv(header, ("alpha", "angle_bin", "delay_bin"), rows), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        sweep = io.load_sweep(args.sweep)
    except (OSError, yaml.YAMLError) as exc:
        raise _IOFailure(f"cannot read {args.sweep}: {exc}") from exc
    if args.trials is not None:
        sweep = type(sweep)(**{**sweep.__dict__, "trials": args.trials})
    if args.seed_override is not None:
        sweep = type(sweep)(**{**sweep.__dict__, "seed": args.seed_override})
    rows = run_sweep(sweep, parallelism=args.jobs)
    header = {"command": "sweep", "sweep": sweep.as_dict(),
              "false_rate_denominator": "total detections"}
    io.emit(io.sweep_csv(rows, header), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    cfgp = _config_parent()
    estp = _estimator_parent()
    parser = argparse.ArgumentParser(prog="swsig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[cfgp], help="synthesize H(m, n) from a scene file")
    p.add_argument("scene")
    p.add_argument("--snr", type=float, default=math.inf, help="per-sample SNR in dB (default: noiseless)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("spectrum", parents=[cfgp], help="angle-delay map of a response CSV or scene")
    p.add_argument("input")
    p.add_argument("--snr", type=float, default=math.inf)
    p.add_argument("--mag-db", action="store_true", help="emit k,l,mag_db instead of k,l,re,im")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("estimate", parents=[cfgp, estp], help="estimate path signatures")
    p.add_argument("input")
    p.add_argument("--snr", type=float, default=math.inf)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("table1", parents=[cfgp], help="coarse-bin shift of the reference path vs alpha")
    p.add_argument("--alpha-list", default="0.01,0.05,0.1,0.2")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("sweep", help="Monte Carlo sweep from a sweep file")
    p.add_argument("sweep")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trials", type=int, default=None, help="override trials per cell")
    p.add_argument("--seed", dest="seed_override", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"swsig: {exc}", file=sys.stderr)
        return EXIT_IO
    except SwsigError as exc:
        print(f"swsig: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"swsig: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"swsig: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
