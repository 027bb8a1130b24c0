"""Command-line entry points.

One executable with subcommands for the batch workflow: validate and
normalize arc data, compute signatures, fit and evaluate models, rank lanes,
run seeded simulations, play out hub what-ifs, and serve the HTTP API.

Exit codes: 0 success, 2 usage errors, 3 data errors, 4 numeric failures.
Outputs are byte-identical for identical config and seed; timestamps go to a
``<output>.meta.json`` sidecar, never into the output itself.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dependence import direction_curves, direction_flow_delta
from .features import (
    VARIANTS,
    build_design,
    build_signature_tables,
    node_sets_from_arcs,
)
from .geometry import NodeKind, NodeSet, PolarGrid, polar_matrix
from .hub import HubConfig, hub_experiment
from .metrics import adjusted_r2, mape
from .ranking import predict_costs, rank_all, write_ranking_csv
from .regression import GradientBoostedRegressor, LinearFlowRegressor, load_model, save_model
from .simulate import (
    OperatorPolicy,
    SyntheticNetworkConfig,
    generate_network,
    run_episode,
    state_for_network,
    write_series_csv,
)
from .spectra import geosig, magnitude_spectrum, triangular_mask, fft2d, write_geosig_csv, write_pgm
from .store import MalformedRowError, ingest_arcs, restore, write_arcs

CONFIG_VERSION = 1
PORT_ENV_VAR = "LANESIG_PORT"


class DataError(Exception):
    """Bad input data; maps to exit code 3."""


def _write_sidecar(out_path: str | Path) -> None:
    meta = {"created_at": datetime.now(timezone.utc).isoformat()}
    with open(f"{out_path}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh)
        fh.write("\n")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {path!r}: {exc}") from exc
    version = config.get("version")
    if version != CONFIG_VERSION:
        raise DataError(f"config version {version!r} unsupported, expected {CONFIG_VERSION}")
    return config


def grid_from_options(config: dict, args: argparse.Namespace) -> PolarGrid:
    section = config.get("grid", {})
    try:
        return PolarGrid(
            theta_bins=args.theta_bins or section.get("theta_bins", 4),
            r_bins=args.r_bins or section.get("r_bins", 17),
            r_step=args.r_step or section.get("r_step", 100.0),
            r_unit=args.r_unit or section.get("r_unit", "miles"),
        )
    except ValueError as exc:
        raise DataError(f"bad grid options: {exc}") from exc


def _load_arcs(path: str):
    try:
        return ingest_arcs(path)
    except (OSError, MalformedRowError) as exc:
        raise DataError(str(exc)) from exc


def cmd_ingest(args: argparse.Namespace, config: dict) -> int:
    arcs = _load_arcs(args.arcs)
    if args.out:
        write_arcs(arcs, args.out)
        _write_sidecar(args.out)
    weeks = sorted({a.week for a in arcs})
    origins = {a.origin_id for a in arcs}
    dests = {a.dest_id for a in arcs}
    print(
        f"{len(arcs)} arcs, {len(origins)} origins, {len(dests)} destinations, "
        f"weeks {weeks[0]}..{weeks[-1]}"
    )
    return 0


def cmd_geosig(args: argparse.Namespace, config: dict) -> int:
    grid = grid_from_options(config, args)
    try:
        targets = NodeSet.from_csv(args.nodes, NodeKind.OTHER)
        origins = (
            NodeSet.from_csv(args.origins, NodeKind.OTHER) if args.origins else targets
        )
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    signatures = [
        geosig(node, targets, grid, mask_max=args.mask_max) for node in origins
    ]
    write_geosig_csv(signatures, args.out)
    _write_sidecar(args.out)
    if args.pgm_dir:
        os.makedirs(args.pgm_dir, exist_ok=True)
        for node in origins:
            pm = polar_matrix(node, targets, grid)
            write_pgm(pm.values, Path(args.pgm_dir) / f"{node.id}_polar.pgm")
            image = magnitude_spectrum(triangular_mask(fft2d(pm), args.mask_max))
            write_pgm(image, Path(args.pgm_dir) / f"{node.id}_magnitude.pgm")
    print(f"wrote {len(signatures)} signatures to {args.out}")
    return 0


def _fit_model(kind: str, X, y, args: argparse.Namespace):
    if kind == "linear":
        return LinearFlowRegressor().fit(X, y)
    return GradientBoostedRegressor(
        n_iterations=args.iterations,
        learning_rate=args.learning_rate,
        max_depth=args.max_depth,
    ).fit(X, y)


def cmd_fit(args: argparse.Namespace, config: dict) -> int:
    grid = grid_from_options(config, args)
    arcs = _load_arcs(args.arcs)
    fc_set, dest_set = node_sets_from_arcs(arcs)
    tables = build_signature_tables(fc_set, dest_set, grid)
    target = "cost" if args.variant == "cost" else "flow"
    dataset = build_design(arcs, tables, args.variant, grid, target=target)
    model = _fit_model(args.model, dataset.X, dataset.y, args)
    save_model(model, args.out, args.variant, dataset.feature_names)
    _write_sidecar(args.out)
    pred = model.predict(dataset.X)
    print(
        f"variant={args.variant} model={args.model} p={dataset.X.shape[1]} "
        f"adj_r2={adjusted_r2(dataset.y, pred, dataset.X.shape[1]):.4f} "
        f"train_mape={mape(dataset.y, pred):.4f}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace, config: dict) -> int:
    grid = grid_from_options(config, args)
    train = _load_arcs(args.train)
    test = _load_arcs(args.test)
    fc_set, dest_set = node_sets_from_arcs(train)
    tables = build_signature_tables(fc_set, dest_set, grid)
    variants = [v.strip() for v in args.variants.split(",")]
    rows = []
    for variant in variants:
        if variant not in VARIANTS:
            raise DataError(f"unknown variant {variant!r}")
        target = "cost" if variant == "cost" else "flow"
        ds_train = build_design(train, tables, variant, grid, target=target)
        ds_test = build_design(test, tables, variant, grid, target=target)
        model = _fit_model(args.model, ds_train.X, ds_train.y, args)
        pred_train = model.predict(ds_train.X)
        pred_test = model.predict(ds_test.X)
        rows.append(
            (
                variant,
                adjusted_r2(ds_train.y, pred_train, ds_train.X.shape[1]),
                mape(ds_train.y, pred_train),
                mape(ds_test.y, pred_test),
            )
        )
    print(f"{'variant':<8} {'adj_r2':>8} {'train_mape':>11} {'test_mape':>10}")
    for variant, r2a, m_train, m_test in rows:
        print(f"{variant:<8} {r2a:>8.4f} {m_train:>11.4f} {m_test:>10.4f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("variant,adj_r2,train_mape,test_mape\n")
            for variant, r2a, m_train, m_test in rows:
                fh.write(f"{variant},{r2a!r},{m_train!r},{m_test!r}\n")
        _write_sidecar(args.out)
    return 0


def cmd_rank(args: argparse.Namespace, config: dict) -> int:
    grid = grid_from_options(config, args)
    arcs = _load_arcs(args.arcs)
    try:
        model, variant, _ = load_model(args.model)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if variant != "cost":
        raise DataError(f"ranking needs a cost-variant model, got {variant!r}")
    fc_set, dest_set = node_sets_from_arcs(arcs)
    tables = build_signature_tables(fc_set, dest_set, grid)
    week = args.week if args.week is not None else max(a.week for a in arcs)
    weekly = [a for a in arcs if a.week == week]
    if not weekly:
        raise DataError(f"no arcs for week {week}")
    predictions = predict_costs(model, weekly, tables)
    tables_by_dest = rank_all(predictions, week=week)
    write_ranking_csv(tables_by_dest.values(), args.out)
    _write_sidecar(args.out)
    if predictions.clamped:
        print(f"note: {len(predictions.clamped)} negative predictions clamped to 0")
    print(f"ranked {len(tables_by_dest)} destinations for week {week}")
    return 0


def cmd_simulate(args: argparse.Namespace, config: dict) -> int:
    section = config.get("simulate", {})
    cfg = SyntheticNetworkConfig(
        seed=args.seed,
        n_fc=args.n_fc or section.get("n_fc", 20),
        n_dest=args.n_dest or section.get("n_dest", 10),
        weeks=args.weeks or section.get("weeks", 8),
    )
    policy = OperatorPolicy(kind="true_cost_top_m", m=args.operator_m)
    rows = []
    series_log = None
    for episode_seed in range(args.seeds):
        net = generate_network(dataclasses.replace(cfg, seed=cfg.seed + episode_seed))
        state = state_for_network(net)
        log = run_episode(
            state,
            net,
            policy,
            weeks=cfg.weeks,
            k=args.k,
            mode=args.mode,
            seed=episode_seed,
        )
        if series_log is None:
            series_log = log
        for dest_id in net.dest_ids:
            trajectory = log.expected_trajectory[dest_id]
            rows.append(
                {
                    "seed": episode_seed,
                    "dest_id": dest_id,
                    "weeks": cfg.weeks,
                    "final_expected_mean": trajectory[-1].mean,
                    "final_expected_sd": trajectory[-1].sd,
                    "final_k_suggested": trajectory[-1].k_suggested,
                }
            )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("seed,dest_id,weeks,final_expected_mean,final_expected_sd,final_k_suggested\n")
        for row in rows:
            fh.write(
                f"{row['seed']},{row['dest_id']},{row['weeks']},"
                f"{row['final_expected_mean']!r},{row['final_expected_sd']!r},"
                f"{row['final_k_suggested']}\n"
            )
    _write_sidecar(args.out)
    if args.series and series_log is not None:
        write_series_csv(series_log, args.series)
        _write_sidecar(args.series)
    print(f"simulated {args.seeds} episodes -> {args.out}")
    return 0


def cmd_whatif_hub(args: argparse.Namespace, config: dict) -> int:
    grid = grid_from_options(config, args)
    arcs = _load_arcs(args.arcs)
    try:
        model, variant, _ = load_model(args.model)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if variant != "d":
        raise DataError(f"hub what-if needs a 'd'-variant flow model, got {variant!r}")
    fc_set, dest_set = node_sets_from_arcs(arcs)
    tables = build_signature_tables(fc_set, dest_set, grid)
    dataset = build_design(arcs, tables, "d", grid, target="flow")
    from .geometry import GeoNode

    hub = GeoNode("HUB", args.lat, args.lon, 0.0)
    curves = direction_curves(model, dataset.X, dataset.feature_names)
    baseline = direction_flow_delta(model, dataset.X, dataset.feature_names, curves=curves)
    result = hub_experiment(dataset, hub, args.fraction, HubConfig(seed=args.seed))
    deltas = direction_flow_delta(
        model, result.dataset.X, result.dataset.feature_names, curves=curves
    )
    report = {
        "fraction": args.fraction,
        "modified_rows": len(result.modified_rows),
        "truncated": result.truncated,
        "baseline_deltas": baseline,
        "hub_deltas": deltas,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_sidecar(args.out)
    print(f"wrote hub report to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace, config: dict) -> int:
    import uvicorn

    from .service import SessionConfig, build_session, create_app

    section = config.get("serve", {})
    if args.demo:
        net = generate_network(
            SyntheticNetworkConfig(
                seed=args.seed,
                n_fc=args.n_fc or 10,
                n_dest=args.n_dest or 6,
                weeks=args.weeks or 2,
            )
        )
        arcs = list(net.arcs)
    elif args.arcs:
        arcs = _load_arcs(args.arcs)
    else:
        raise DataError("serve needs --arcs or --demo")
    state = None
    if args.state:
        try:
            state = restore(args.state)
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from exc
    session = build_session(
        arcs,
        log_path=args.log,
        state=state,
        config=SessionConfig(
            feedback_mode=args.mode,
            api_token=section.get("api_token"),
        ),
        flow_iterations=args.iterations,
    )
    port = args.port or int(os.environ.get(PORT_ENV_VAR, "8787"))
    uvicorn.run(create_app(session), host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lanesig",
        description="Middle-mile lane toolkit: signatures, cost models, rankings, "
        "and a learning lane recommender.",
    )
    parser.add_argument("--config", help=f"JSON config file (version {CONFIG_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grid_flags(p):
        p.add_argument("--theta-bins", type=int, default=None)
        p.add_argument("--r-bins", type=int, default=None)
        p.add_argument("--r-step", type=float, default=None)
        p.add_argument("--r-unit", choices=("degrees", "miles"), default=None)

    p = sub.add_parser("ingest", help="validate an arc CSV and print a summary")
    p.add_argument("--arcs", required=True)
    p.add_argument("--out", help="write a normalized copy here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("geosig", help="compute signatures for a node set")
    p.add_argument("--nodes", required=True, help="target node CSV (id,lat,lon,measure)")
    p.add_argument("--origins", help="origin node CSV; defaults to --nodes")
    p.add_argument("--out", required=True)
    p.add_argument("--mask-max", type=int, default=2)
    p.add_argument("--pgm-dir", help="also write polar and smoothed bitmaps here")
    add_grid_flags(p)
    p.set_defaults(func=cmd_geosig)

    p = sub.add_parser("fit", help="fit one model variant and save the artifact")
    p.add_argument("--arcs", required=True)
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--model", choices=("linear", "gbrt"), default="linear")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-depth", type=int, default=3)
    add_grid_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="fit variants on train data, report against test")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--variants", default="null,a,b,c,d")
    p.add_argument("--model", choices=("linear", "gbrt"), default="linear")
    p.add_argument("--out", help="also write the report as CSV")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-depth", type=int, default=3)
    add_grid_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="rank origins per destination by predicted cost")
    p.add_argument("--model", required=True, help="cost-variant model artifact")
    p.add_argument("--arcs", required=True)
    p.add_argument("--week", type=int, default=None, help="defaults to the latest week")
    p.add_argument("--out", required=True)
    add_grid_flags(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("simulate", help="run seeded recommendation episodes")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="base seed for the networks")
    p.add_argument("--n-fc", type=int, default=None)
    p.add_argument("--n-dest", type=int, default=None)
    p.add_argument("--weeks", type=int, default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--operator-m", type=int, default=8)
    p.add_argument("--mode", choices=("not_selected", "any_recommended"), default="not_selected")
    p.add_argument("--out", required=True)
    p.add_argument("--series", help="write the first episode's per-arc series CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("whatif-hub", help="direction deltas after inserting a hub")
    p.add_argument("--model", required=True, help="'d'-variant flow model artifact")
    p.add_argument("--arcs", required=True)
    p.add_argument("--lat", type=float, required=True)
    p.add_argument("--lon", type=float, required=True)
    p.add_argument("--fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    add_grid_flags(p)
    p.set_defaults(func=cmd_whatif_hub)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--arcs")
    p.add_argument("--demo", action="store_true", help="serve a synthetic network")
    p.add_argument("--state", help="restore bandit state from a snapshot")
    p.add_argument("--log", default="events.jsonl")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help=f"default from ${PORT_ENV_VAR} or 8787")
    p.add_argument("--mode", choices=("not_selected", "any_recommended"), default="not_selected")
    p.add_argument("--iterations", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-fc", type=int, default=None)
    p.add_argument("--n-dest", type=int, default=None)
    p.add_argument("--weeks", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
