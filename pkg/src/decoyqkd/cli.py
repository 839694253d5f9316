"""Command-line front end: one verb per analysis, JSON/CSV emission.

Exit codes: 0 success, 2 configuration or validation error, 3 when every
session of the requested work aborted without certifying any key.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic, harness
from .core import ConfigError, SessionConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_ABORTED = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON session configuration (defaults otherwise)")
    parser.add_argument("--seed", type=int, default=None,
                        help="root RNG seed (overrides the config)")
    parser.add_argument("--out", type=Path, default=None,
                        help="output file (stdout summary otherwise)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--scale", type=int, default=1, metavar="K",
                        help="divide the sifted-bit target by K for quick runs")
    parser.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decoyqkd",
        description="Decoy-state BB84 session simulator and security analysis",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="one session, certified key report")
    _add_common(p_run)
    p_run.add_argument("--key-out", type=Path, default=None,
                       help="write the distilled key as packed binary")
    p_run.add_argument("--dump-raw", type=Path, default=None,
                       help="write the detection-event raw stream")

    p_camp = sub.add_parser("campaign", help="many independent sessions")
    _add_common(p_camp)
    p_camp.add_argument("--sessions", type=int, default=10)

    p_ratio = sub.add_parser("sweep-ratio",
                             help="rate versus transmittance ratio under attack")
    _add_common(p_ratio)
    p_ratio.add_argument("--block-fractions", type=str,
                         default="0,0.3,0.45,0.6,0.7,0.765,0.8,0.85,1.0")
    p_ratio.add_argument("--sessions-per-point", type=int, default=1)

    p_dur = sub.add_parser("sweep-duration",
                           help="rate versus session duration")
    _add_common(p_dur)
    p_dur.add_argument("--durations", type=str,
                       default="0.1,0.2,0.4,1.0,9.2,38.7")
    p_dur.add_argument("--sessions-per-point", type=int, default=1)

    p_pred = sub.add_parser("predict",
                            help="closed-form expectations, no Monte-Carlo")
    _add_common(p_pred)
    p_pred.add_argument("--duration", type=float, default=None,
                        help="apply finite-session deflation for this length")
    return parser


def _prepare_config(args) -> SessionConfig:
    cfg = (harness.load_config(args.config) if args.config
           else harness.load_config({}))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.scale != 1:
        if args.scale < 1:
            raise ConfigError("--scale must be >= 1")
        cfg = replace(cfg, target_sifted_bits=max(
            1000, cfg.target_sifted_bits // args.scale))
    return harness.load_config({}) if cfg is None else cfg


def _write_rows(path, fmt: str, header: list[str], rows: list[list]) -> None:
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(payload, indent=2) + "\n"
        if path is None:
            sys.stdout.write(text)
        else:
            Path(path).write_text(text, encoding="utf-8")
        return
    if path is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _prepare_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.verb == "run":
        records = "clicked" if args.dump_raw else "none"
        report, result = harness.run_certified_session(cfg, records=records)
        if args.dump_raw:
            from . import rawdump
            rawdump.dump_records(
                rawdump.pack_detections(result.pulses, result.detections),
                args.dump_raw)
        if args.key_out:
            import numpy as np
            key = harness.extract_key(cfg, report, result)
            Path(args.key_out).write_bytes(np.packbits(key).tobytes())
        if args.out:
            harness.emit_report([report], args.format, args.out)
        else:
            print(json.dumps(harness.report_to_dict(report), indent=2))
        return EXIT_ALL_ABORTED if report.aborted else EXIT_OK

    if args.verb == "campaign":
        seed = args.seed if args.seed is not None else cfg.seed
        reports, summary = harness.run_campaign(
            cfg, args.sessions, seed, workers=args.workers)
        if args.out:
            harness.emit_report(reports, args.format, args.out)
        print(f"sessions={summary.n_sessions} aborted={summary.n_aborted} "
              f"rate={summary.rate_bps_mean:.1f} bps "
              f"ratio={summary.ratio_mean:.4f} "
              f"eps_mu={summary.eps_mu_mean:.4%} "
              f"eps_nu={summary.eps_nu_mean:.4%}")
        return EXIT_ALL_ABORTED if summary.all_aborted else EXIT_OK

    if args.verb == "sweep-ratio":
        fractions = [float(x) for x in args.block_fractions.split(",") if x]
        seed = args.seed if args.seed is not None else cfg.seed
        points = harness.sweep_ratio(cfg, fractions, seed,
                                     sessions_per_point=args.sessions_per_point,
                                     workers=args.workers)
        rows = [[p.block_fraction, harness._fmt(p.ratio_mean),
                 harness._fmt(p.rate_bound_bps_mean),
                 harness._fmt(p.rate_bps_mean), p.n_aborted]
                for p in points]
        _write_rows(args.out, args.format,
                    ["block_fraction", "ratio", "rate_bound_bps", "rate_bps",
                     "n_aborted"], rows)
        certified = any(p.rate_bps_mean > 0 for p in points)
        return EXIT_OK if certified else EXIT_ALL_ABORTED

    if args.verb == "sweep-duration":
        durations = [float(x) for x in args.durations.split(",") if x]
        seed = args.seed if args.seed is not None else cfg.seed
        points = harness.sweep_duration(
            cfg, durations, seed,
            sessions_per_point=args.sessions_per_point, workers=args.workers)
        rows = [[p.duration_seconds, p.target_sifted_bits,
                 harness._fmt(p.rate_bound_bps_mean),
                 harness._fmt(p.rate_bps_mean), p.n_aborted]
                for p in points]
        _write_rows(args.out, args.format,
                    ["duration_seconds", "target_sifted_bits",
                     "rate_bound_bps", "rate_bps", "n_aborted"], rows)
        certified = any(p.rate_bps_mean > 0 for p in points)
        return EXIT_OK if certified else EXIT_ALL_ABORTED

    if args.verb == "predict":
        pred = analytic.predict_analytic(cfg, duration_seconds=args.duration)
        row = {
            "q_mu": pred.q_mu, "q_nu": pred.q_nu,
            "eps_mu": pred.eps_mu, "eps_nu": pred.eps_nu,
            "ratio": pred.ratio, "q1_lower": pred.q1_lower,
            "eps1_upper": pred.eps1_upper, "rate_bps": pred.rate_bps,
            "duration_seconds": pred.duration_seconds,
        }
        _write_rows(args.out, args.format, list(row), [list(row.values())])
        return EXIT_OK

    raise AssertionError(f"unhandled verb {args.verb!r}")


if __name__ == "__main__":
    raise SystemExit(main())
