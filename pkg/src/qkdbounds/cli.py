"""Command-line surface: single-point rates, figure data, verification runs.

Every command reads an optional INI config (defaults otherwise), writes CSV
into the output directory, and prints a human-readable summary. Numeric CSV
cells use repr() so reruns are byte-identical and parse back exactly.

Exit codes: 0 success, 2 configuration problem, 3 validity-condition
violation, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from typing import Optional, Sequence

from .channel import simulate_observables
from .config import RunConfig, load_config
from .errors import (
    ConditionViolation,
    ConfigError,
    DomainError,
    NoFeasiblePointError,
    ScaleError,
    UnsupportedModeError,
    VacuousBoundsError,
    VerificationError,
)
from .observed import DECOY, SIGNAL, VACUUM
from .optimizer import (
    SweepRow,
    build_window,
    max_distance,
    optimize_lambdas,
    sweep,
    trusted_best_rate,
)
from .oracles import soundness_campaign
from .protocols import (
    GLLP,
    ONE_DECOY,
    WEAK_VACUUM,
    KeyRateReport,
    gllp_rate_untrusted,
    one_decoy_rate_untrusted,
    wv_rate_untrusted,
)

_PROTOCOL_FLAG = {"gllp": GLLP, "wv": WEAK_VACUUM, "one-decoy": ONE_DECOY}

# Window half-widths for the delta-dependence outputs. The ladder spans the
# regime where tagging dominates up to where photon-number slack dominates.
_FIG5_DELTAS = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2)
_SWEEP_DELTAS = (0.005, 0.01, 0.02, 0.05, 0.1)

_FIGURE_COLUMNS = (
    "distance_km",
    "delta",
    "protocol",
    "rate_untrusted",
    "rate_trusted",
    "ratio",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _figure_cells(row: SweepRow, protocol_name: str):
    return (
        row.distance_km,
        row.delta,
        protocol_name,
        row.rate_untrusted,
        row.rate_trusted,
        row.ratio,
    )


def _resolve_protocol(cfg: RunConfig, flag: Optional[str]) -> str:
    if flag is None:
        return cfg.protocol_name
    return _PROTOCOL_FLAG[flag]


def _print_report(report: KeyRateReport) -> None:
    if report.q1_lower is not None:
        print(f"q1_lower: {report.q1_lower!r}")
    if report.e1_upper is not None:
        print(f"e1_upper: {report.e1_upper!r}")
    if report.q_omega_lower is not None:
        print(f"q_omega_lower: {report.q_omega_lower!r}")
    if report.condition_flags:
        print("conditions:")
        for name, value in report.condition_flags.items():
            print(f"  {name}: {value}")
    if report.intermediates:
        print("intermediates:")
        for name, value in report.intermediates.items():
            print(f"  {name}: {_fmt(value)}")


def _pinned_report(
    cfg: RunConfig, protocol: str, distance_km: float
) -> KeyRateReport:
    source = cfg.source_spec()
    window = build_window(source, cfg.delta, cfg.epsilon)
    params = cfg.protocol_params(protocol)
    n_mean = source.mean_photons
    obs_s = simulate_observables(
        n_mean * params.lambda_signal, distance_km, cfg.detector, SIGNAL
    )
    if protocol == GLLP:
        return gllp_rate_untrusted(obs_s, window, params, source)
    obs_d = simulate_observables(
        n_mean * params.lambda_decoy, distance_km, cfg.detector, DECOY
    )
    if protocol == WEAK_VACUUM:
        obs_v = simulate_observables(0.0, distance_km, cfg.detector, VACUUM)
        return wv_rate_untrusted(obs_s, obs_d, obs_v, window, params, source)
    return one_decoy_rate_untrusted(obs_s, obs_d, window, params, source)


def cmd_rate(cfg: RunConfig, args, out_dir: str) -> int:
    protocol = _resolve_protocol(cfg, args.protocol)
    distance = (
        args.distance if args.distance is not None else cfg.distances_km[0]
    )
    source = cfg.source_spec()
    spec = cfg.sweep_spec(distances_km=(distance,), protocol=protocol)
    pinned = cfg.lambda_signal is not None and (
        protocol == GLLP or cfg.lambda_decoy is not None
    )
    if pinned:
        lam_s = cfg.lambda_signal
        lam_d = cfg.lambda_decoy if protocol != GLLP else math.nan
        report = _pinned_report(cfg, protocol, distance)
    else:
        lam_s, lam_d, report = optimize_lambdas(
            distance, spec, source, cfg.detector, delta=cfg.delta,
            epsilon=cfg.epsilon,
        )
    trusted = trusted_best_rate(distance, spec, source, cfg.detector, delta=cfg.delta)
    ratio = report.rate / trusted if trusted > 0.0 else math.nan

    print(f"protocol: {protocol}")
    print(f"distance_km: {distance!r}")
    print(f"delta: {cfg.delta!r}")
    print(f"lambda_signal: {lam_s!r}")
    if protocol != GLLP:
        print(f"lambda_decoy: {lam_d!r}")
    print(f"rate_untrusted: {report.rate!r}")
    print(f"rate_trusted: {trusted!r}")
    print(f"ratio: {ratio!r}")
    _print_report(report)

    _write_csv(
        os.path.join(out_dir, "rate.csv"),
        _FIGURE_COLUMNS,
        [(distance, cfg.delta, protocol, report.rate, trusted, ratio)],
    )
    return 0


def cmd_figures(cfg: RunConfig, args, out_dir: str) -> int:
    source = cfg.source_spec()
    detector = cfg.detector

    gllp_distances = tuple(float(d) for d in range(0, 46, 2))
    decoy_distances = tuple(float(d) for d in range(0, 145, 5))

    plans = (
        ("fig2.csv", GLLP, gllp_distances),
        ("fig3.csv", WEAK_VACUUM, decoy_distances),
        ("fig4.csv", ONE_DECOY, decoy_distances),
    )
    for filename, protocol, distances in plans:
        spec = cfg.sweep_spec(
            distances_km=distances, protocol=protocol, delta_grid=(cfg.delta,)
        )
        rows = sweep(spec, source, detector, epsilon=cfg.epsilon)
        _write_csv(
            os.path.join(out_dir, filename),
            _FIGURE_COLUMNS,
            (_figure_cells(r, protocol) for r in rows),
        )
        print(f"wrote {filename} ({len(rows)} rows)")

    deltas = cfg.delta_grid if len(cfg.delta_grid) > 1 else _FIG5_DELTAS
    fig5_rows = []
    for delta in deltas:
        spec = cfg.sweep_spec(protocol=WEAK_VACUUM, delta_grid=(delta,))
        reach = max_distance(spec, source, detector, delta=delta)
        if reach > 0.0:
            _, _, report = optimize_lambdas(
                reach, spec, source, detector, delta=delta, epsilon=cfg.epsilon
            )
            rate_u = report.rate
        else:
            rate_u = 0.0
        rate_t = trusted_best_rate(reach, spec, source, detector, delta=delta)
        ratio = rate_u / rate_t if rate_t > 0.0 else math.nan
        fig5_rows.append((reach, delta, WEAK_VACUUM, rate_u, rate_t, ratio))
    _write_csv(os.path.join(out_dir, "fig5.csv"), _FIGURE_COLUMNS, fig5_rows)
    print(f"wrote fig5.csv ({len(fig5_rows)} rows)")
    return 0


def cmd_verify(cfg: RunConfig, args, out_dir: str) -> int:
    report = soundness_campaign(
        args.trials, args.seed, corrupt_q1_shift=args.corrupt_q1_shift
    )
    _write_csv(
        os.path.join(out_dir, "campaign.csv"),
        (
            "trial",
            "mean_photons",
            "delta",
            "lambda_signal",
            "lambda_decoy",
            "family",
            "q1_true",
            "q1_wv",
            "q1_od",
            "violations",
            "y1_split",
        ),
        (
            (
                r.trial,
                r.mean_photons,
                r.delta,
                r.lambda_signal,
                r.lambda_decoy,
                r.family,
                r.q1_true,
                r.q1_wv,
                r.q1_od,
                r.violations,
                int(r.y1_split),
            )
            for r in report.rows
        ),
    )
    print(f"trials: {report.trials}")
    print(f"violations: {report.violation_count}")
    print(f"y1_split_trials: {report.y1_split_count}")
    if report.violations:
        for v in report.violations[:10]:
            print(
                f"  trial {v.trial}: {v.kind} bound={v.bound!r} "
                f"truth={v.truth!r} ({v.detail})"
            )
        raise VerificationError(
            f"{report.violation_count} bound violations in {report.trials} trials"
        )
    return 0


def cmd_max_distance(cfg: RunConfig, args, out_dir: str) -> int:
    protocol = _resolve_protocol(cfg, args.protocol)
    source = cfg.source_spec()
    spec = cfg.sweep_spec(protocol=protocol)
    untrusted = max_distance(spec, source, cfg.detector, delta=cfg.delta)
    trusted = max_distance(
        spec, source, cfg.detector, delta=cfg.delta, trusted=True
    )
    gap = trusted - untrusted
    print(f"protocol: {protocol}")
    print(f"delta: {cfg.delta!r}")
    print(f"max_distance_untrusted_km: {untrusted!r}")
    print(f"max_distance_trusted_km: {trusted!r}")
    print(f"gap_km: {gap!r}")
    _write_csv(
        os.path.join(out_dir, "max_distance.csv"),
        ("protocol", "delta", "untrusted_km", "trusted_km", "gap_km"),
        [(protocol, cfg.delta, untrusted, trusted, gap)],
    )
    return 0


def cmd_sweep_delta(cfg: RunConfig, args, out_dir: str) -> int:
    protocol = _resolve_protocol(cfg, args.protocol)
    source = cfg.source_spec()
    deltas = cfg.delta_grid if len(cfg.delta_grid) > 1 else _SWEEP_DELTAS
    rows = []
    for delta in deltas:
        spec = cfg.sweep_spec(protocol=protocol, delta_grid=(delta,))
        reach = max_distance(spec, source, cfg.detector, delta=delta)
        print(f"delta {delta!r}: max_distance_km {reach!r}")
        rows.append((delta, protocol, reach))
    _write_csv(
        os.path.join(out_dir, "sweep_delta.csv"),
        ("delta", "protocol", "max_distance_km"),
        rows,
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdbounds",
        description=(
            "Key-rate lower bounds for an attenuated source whose photon-number "
            "distribution is only trusted inside a window"
        ),
        epilog=(
            "Environment: QKD_THREADS caps compiled-kernel threads; "
            "QKD_NO_NUMBA=1 forces the pure-numpy backend."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="INI config file")
        p.add_argument(
            "--out", metavar="DIR", help="output directory (default from config)"
        )

    def protocol_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--protocol",
            choices=tuple(_PROTOCOL_FLAG),
            help="protocol override (default from config)",
        )

    p = sub.add_parser("rate", help="single-point key rate with intermediates")
    common(p)
    protocol_flag(p)
    p.add_argument(
        "--distance", type=float, metavar="KM",
        help="fiber length (default: first configured distance)",
    )
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("figures", help="regenerate all figure CSV data")
    common(p)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="run the adversary-oracle soundness campaign")
    common(p)
    p.add_argument("--trials", type=int, default=1000, metavar="N")
    p.add_argument("--seed", type=int, default=7, metavar="N")
    p.add_argument(
        "--corrupt-q1-shift", type=float, default=0.0, help=argparse.SUPPRESS
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "max-distance", help="largest distance with positive rate, both models"
    )
    common(p)
    protocol_flag(p)
    p.set_defaults(func=cmd_max_distance)

    p = sub.add_parser(
        "sweep-delta", help="untrusted max distance across window widths"
    )
    common(p)
    protocol_flag(p)
    p.set_defaults(func=cmd_sweep_delta)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        out_dir = args.out if args.out is not None else cfg.output_directory
        os.makedirs(out_dir, exist_ok=True)
        return args.func(cfg, args, out_dir)
    except (ConfigError, DomainError, UnsupportedModeError, ScaleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConditionViolation, VacuousBoundsError, NoFeasiblePointError) as exc:
        print(f"condition violation: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
