"""Command-line interface.

One subcommand per pipeline stage plus ``run`` for the end-to-end flow.
Stages exchange headered CSV files, so any stage can be rerun or audited
in isolation and piping all stages equals a single ``run``.

Exit codes: 0 on success, 2 for configuration errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import sys

from . import ingest as ing
from . import network as net
from .aggregate import AggregationParams, aggregate, exclude_edges, write_table
from .ingest import FilterConstraints
from .pipeline import (
    RunConfig,
    RunReport,
    detect_all,
    read_segments,
    run,
    write_segments,
)
from .segments import DetectionParams
from .timeutil import halfmonths_between, parse_iso_date

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


class DataError(Exception):
    pass


def _parse_window(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return parse_iso_date(a), parse_iso_date(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("window must be YYYY-MM-DD:YYYY-MM-DD") from exc


def _detection_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau-min", type=int, default=20)
    parser.add_argument("--tau-max", type=int, default=180)
    parser.add_argument("--eps-gap-macro", type=int, default=6, help="months")
    parser.add_argument("--eps-gap-meso", type=int, default=7, help="days")
    parser.add_argument("--phi", type=float, default=0.5)


def _detection_params(args) -> DetectionParams:
    return DetectionParams(
        tau_min_days=args.tau_min,
        tau_max_days=args.tau_max,
        eps_gap_macro_months=args.eps_gap_macro,
        eps_gap_meso_days=args.eps_gap_meso,
        phi=args.phi,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempmig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("network", help="build the cell partition from towers")
    p.add_argument("--towers", required=True)
    p.add_argument("--polygons")
    p.add_argument("--regions", help="cell_id,region_id,zone table to attach")
    p.add_argument("--merge-radius", type=float, default=2000.0)
    p.add_argument("--out-cells", required=True)
    p.add_argument("--out-towers", required=True)

    p = sub.add_parser("ingest", help="stream CDR files into daily series and profiles")
    p.add_argument("--cdr", nargs="+", required=True)
    p.add_argument("--tower-map", required=True)
    p.add_argument("--out-daily", required=True)
    p.add_argument("--out-profiles", required=True)
    p.add_argument("--report")
    p.add_argument("--bot-threshold", type=float, default=ing.DEFAULT_BOT_THRESHOLD)
    p.add_argument("--partitions", type=int, default=1)

    p = sub.add_parser("filter", help="select users meeting observational constraints")
    p.add_argument("--profiles", required=True)
    p.add_argument("--min-span", type=int, required=True)
    p.add_argument("--min-frac", type=float, required=True)
    p.add_argument("--max-gap", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("detect", help="multi-scale stay detection per user")
    p.add_argument("--daily", required=True)
    p.add_argument("--users", help="optional user list to restrict to")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    _detection_args(p)

    for name in ("aggregate", "weight"):
        p = sub.add_parser(name, help=f"{name} half-month migration statistics")
        p.add_argument("--segments", required=True)
        p.add_argument("--regions", required=True)
        p.add_argument("--tau", type=int, default=20)
        p.add_argument("--eps-tol", type=int, default=7)
        p.add_argument("--sigma", type=int, default=8)
        p.add_argument("--eps-gap-meso", type=int, default=7)
        p.add_argument("--low-confidence", action="store_true")
        p.add_argument("--window", type=_parse_window, action="append", required=True)
        p.add_argument("--no-edge-exclusion", action="store_true")
        p.add_argument("--out", required=True)
        if name == "weight":
            p.add_argument("--strata", required=True)
            p.add_argument("--weights-out", help="audit dump of the weight table")

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--scenario", required=True, help="key=value scenario file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-cdr", required=True)
    p.add_argument("--out-truth", required=True)

    p = sub.add_parser("validate", help="sensitivity experiments on a synthetic corpus")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--deltas", type=int, nargs="+", default=[30, 90, 180, 290, 360])
    p.add_argument("--omegas", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    p.add_argument("--out-prefix", required=True)

    p = sub.add_parser("run", help="end-to-end pipeline")
    p.add_argument("--cdr", nargs="+", required=True)
    p.add_argument("--tower-map", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--strata")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tau", type=int, nargs="+", default=[20, 30, 60])
    p.add_argument("--eps-tol", type=int, default=7)
    p.add_argument("--sigma", type=int, default=8)
    p.add_argument("--low-confidence", action="store_true")
    p.add_argument("--no-weighting", action="store_true")
    p.add_argument("--window", type=_parse_window, action="append")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--partitions", type=int, default=1)
    _detection_args(p)
    return parser


def _cmd_network(args) -> int:
    towers = net.read_towers(args.towers)
    polygons = net.read_city_polygons(args.polygons) if args.polygons else []
    network = net.build_network(towers, polygons, args.merge_radius)
    if args.regions:
        net.assign_regions(network, net.read_region_table(args.regions))
    net.write_network(network, args.out_cells, args.out_towers)
    return EXIT_OK


def _cmd_ingest(args) -> int:
    tower_map = net.read_tower_map(args.tower_map)
    users, counters = ing.ingest_files(args.cdr, tower_map, n_partitions=args.partitions)
    profiles = {uid: acc.profile(uid) for uid, acc in users.items()}
    kept, bots = ing.filter_bots(profiles, args.bot_threshold)
    ing.write_daily_series({uid: users[uid].daily_series() for uid in kept}, args.out_daily)
    ing.write_profiles({uid: profiles[uid] for uid in kept}, args.out_profiles)
    if args.report:
        report = RunReport(counters=counters, users_in=len(users), bots_removed=len(bots))
        report.write(args.report)
    return EXIT_OK


def _cmd_filter(args) -> int:
    profiles = ing.read_profiles(args.profiles)
    constraints = FilterConstraints(args.min_span, args.min_frac, args.max_gap)
    ing.write_user_list(ing.select_subset(profiles, constraints), args.out)
    return EXIT_OK


def _cmd_detect(args) -> int:
    users_daily = ing.read_daily_series(args.daily)
    if args.users:
        allowed = ing.read_user_list(args.users)
        users_daily = {u: s for u, s in users_daily.items() if u in allowed}
    timelines = detect_all(users_daily, _detection_params(args), args.workers)
    write_segments(timelines, args.out)
    return EXIT_OK


def _aggregation_params(args) -> AggregationParams:
    return AggregationParams(
        tau_min_days=args.tau,
        eps_tol_days=args.eps_tol,
        sigma_days=args.sigma,
        eps_gap_meso_days=args.eps_gap_meso,
        low_confidence=args.low_confidence,
    )


def _cmd_aggregate(args, weighted: bool) -> int:
    timelines = read_segments(args.segments)
    region_table = net.read_region_table(args.regions)
    units = []
    for w0, w1 in args.window:
        units.extend(halfmonths_between(w0, w1))
    units = sorted(set(units), key=lambda u: u.key())
    params = _aggregation_params(args)

    weight_fn = None
    if weighted:
        from .weighting import compute_weights, make_weight_fn, read_strata, write_weights
        from .aggregate import user_outcomes

        strata, cell_map = read_strata(args.strata)
        outcomes = []
        for uid in sorted(timelines):
            outcomes.extend(user_outcomes(timelines[uid], units, params))
        weight_table = compute_weights(strata, outcomes, cell_map)
        if args.weights_out:
            write_weights(weight_table, args.weights_out)
        weight_fn = make_weight_fn(weight_table, cell_map)

    table = aggregate(
        (timelines[u] for u in sorted(timelines)), units,
        lambda cell: region_table[cell], params, weight_fn=weight_fn,
    )
    if not args.no_edge_exclusion:
        exclude_edges(table, args.tau, args.window)
    write_table(table, args.out)
    return EXIT_OK


def _cmd_synth(args) -> int:
    from dataclasses import replace

    from .synth import generate, load_config, write_cdr, write_truth

    config = load_config(args.scenario)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    truth = generate(config)
    write_cdr(truth, args.out_cdr)
    write_truth(truth, args.out_truth)
    return EXIT_OK


def _cmd_validate(args) -> int:
    from dataclasses import replace

    from .synth import generate, load_config
    from .validate import home_accuracy, migration_recall

    config = load_config(args.scenario)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    truth = generate(config)
    home = home_accuracy(truth, args.deltas, args.omegas, seed=config.seed)
    home.write_csv(args.out_prefix + "_home_accuracy.csv", "accuracy")
    recall = migration_recall(truth, args.omegas, delta=max(args.deltas), seed=config.seed)
    recall.write_csv(args.out_prefix + "_migration_recall.csv", "recall")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = RunConfig(
        cdr_paths=args.cdr,
        tower_map_path=args.tower_map,
        region_path=args.regions,
        strata_path=args.strata,
        out_dir=args.out_dir,
        detection=_detection_params(args),
        eps_tol_days=args.eps_tol,
        sigma_days=args.sigma,
        tau_list=tuple(args.tau),
        low_confidence=args.low_confidence,
        weighted=not args.no_weighting,
        windows=args.window,
        workers=args.workers,
        spill_partitions=args.partitions,
    )
    run(config)
    return EXIT_OK


_COMMANDS = {
    "network": _cmd_network,
    "ingest": _cmd_ingest,
    "filter": _cmd_filter,
    "detect": _cmd_detect,
    "aggregate": lambda args: _cmd_aggregate(args, weighted=False),
    "weight": lambda args: _cmd_aggregate(args, weighted=True),
    "synth": _cmd_synth,
    "validate": _cmd_validate,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (net.NetworkError, DataError, OSError) as exc:
        print(f"tempmig: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyError as exc:
        print(f"tempmig: data error: missing column or key {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"tempmig: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
