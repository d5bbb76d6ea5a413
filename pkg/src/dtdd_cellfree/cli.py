"""Command-line interface: campaign runs, closed-form validation, scheduling
audits, and the exhaustive oracle."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np
import yaml

from .closed_form import PowerConfig, dl_power_coeffs, dl_sinrs_mfp, ul_sinrs_mrc
from .estimation import PilotConfig, estimation_stats
from .geometry import NetworkConfig, build_geometry
from .harness import (
    config_from_dict,
    emit_results,
    run_campaign,
)
from .pilots import random_assignment
from .scheduler import (
    SchedulingContext,
    exhaustive_schedule,
    greedy_schedule,
    submodularity_audit,
)
from .signal_oracle import oracle_dl_sinr, oracle_ul_sinr


def _load_config(path: str):
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    return config_from_dict(doc)


def _apply_overrides(config, args):
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.drops is not None:
        config = replace(config, drops=args.drops)
    return config


def _random_fixture(seed: int, num_aps=3, num_ues=4, n_antennas=2, tau_p=2):
    """Small pilot-sharing instance with both cross-link interference types."""
    rng = np.random.default_rng(seed)
    network = NetworkConfig(
        num_aps=num_aps,
        antennas_per_ap=n_antennas,
        num_ues=num_ues,
        cli_residual_db=-30.0,
    )
    geometry = build_geometry(network, rng)
    pilot_config = PilotConfig.uniform(tau=200, tau_p=tau_p, num_ues=num_ues, power=10.0)
    assignment = random_assignment(num_ues, tau_p, rng)
    stats = estimation_stats(geometry, pilot_config, assignment, network.noise_power)
    ues = rng.permutation(num_ues)
    ue_ul = tuple(sorted(int(u) for u in ues[: num_ues // 2]))
    ue_dl = tuple(sorted(int(u) for u in ues[num_ues // 2 :]))
    powers = PowerConfig.from_snr(network.noise_power, 10.0, 10.0, num_ues, num_aps)
    return network, geometry, pilot_config, assignment, stats, ue_ul, ue_dl, powers


def _cmd_run(args) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    result = run_campaign(config, threads=args.threads)
    files = emit_results(result, args.format, args.out)
    for point in result.points:
        label = point.params or {"point": "single"}
        print(
            f"{label}: median={point.median_sum_se:.4f} "
            f"90%-likely={point.likely90_sum_se:.4f} bits/slot/Hz"
        )
    print("wrote: " + ", ".join(files))
    return 0


def _cmd_validate(args) -> int:
    worst = 0.0
    for i in range(args.fixtures):
        pieces = _random_fixture(args.seed + i)
        network, geometry, pilot_config, assignment, stats, ue_ul, ue_dl, powers = pieces
        aps = np.arange(network.num_aps)
        schedule_ul = tuple(int(m) for m in aps[: max(1, network.num_aps // 2)])
        schedule_dl = tuple(int(m) for m in aps[max(1, network.num_aps // 2) :])
        from .closed_form import Schedule

        schedule = Schedule(ap_ul=schedule_ul, ap_dl=schedule_dl, ue_ul=ue_ul, ue_dl=ue_dl)
        powers_k = powers.with_kappa(
            dl_power_coeffs(stats, schedule, network.antennas_per_ap)
        )
        closed_args = (
            schedule,
            stats,
            geometry,
            powers_k,
            assignment,
            pilot_config,
            network.antennas_per_ap,
            network.noise_power,
        )
        ul = ul_sinrs_mrc(*closed_args)
        dl = dl_sinrs_mfp(*closed_args)
        rng = np.random.default_rng(9000 + i)
        for k in ue_ul:
            est = oracle_ul_sinr(
                k,
                schedule,
                geometry,
                powers_k,
                assignment,
                pilot_config,
                network.antennas_per_ap,
                network.noise_power,
                rng,
                n_realizations=args.realizations,
            )
            rel = abs(est.sinr - ul[k]) / ul[k]
            worst = max(worst, rel)
            print(f"fixture {i} UL UE {k}: closed={ul[k]:.6g} oracle={est.sinr:.6g} rel={rel:.3%}")
        for n in ue_dl:
            est = oracle_dl_sinr(
                n,
                schedule,
                geometry,
                powers_k,
                assignment,
                pilot_config,
                network.antennas_per_ap,
                network.noise_power,
                rng,
                n_realizations=args.realizations,
            )
            rel = abs(est - dl[n]) / dl[n]
            worst = max(worst, rel)
            print(f"fixture {i} DL UE {n}: closed={dl[n]:.6g} oracle={est:.6g} rel={rel:.3%}")
    print(f"worst relative error: {worst:.3%} (tolerance {args.tolerance:.0%})")
    return 0 if worst <= args.tolerance else 1


def _cmd_audit(args) -> int:
    pieces = _random_fixture(args.seed, num_aps=6, num_ues=8, n_antennas=2, tau_p=2)
    network, geometry, pilot_config, assignment, stats, ue_ul, ue_dl, powers = pieces
    context = SchedulingContext(
        stats=stats,
        geometry=geometry,
        powers=powers,
        assignment=assignment,
        pilot_config=pilot_config,
        ue_ul=ue_ul,
        ue_dl=ue_dl,
        n_antennas=network.antennas_per_ap,
        noise_power=network.noise_power,
    )
    report = submodularity_audit(context, args.trials, np.random.default_rng(args.seed))
    print(
        f"checks={report.checks} clamped_checks={report.clamped_checks} "
        f"submodularity_violations={report.submodularity_violations} "
        f"clamped_submodularity_violations={report.clamped_submodularity_violations} "
        f"monotonicity_violations={report.monotonicity_violations}"
    )
    if report.examples:
        for ex in report.examples:
            print(f"  violation: {ex}")
    return 0 if report.submodularity_violations == 0 else 1


def _cmd_oracle(args) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    if config.network.num_aps > args.max_aps:
        print(
            f"refusing: {config.network.num_aps} APs exceeds exhaustive cap {args.max_aps}",
            file=sys.stderr,
        )
        return 2
    from .harness import _drop_streams, _split_demand  # drop 0 pieces
    from .pilots import iterative_allocation, PilotAllocParams

    streams = _drop_streams(config.seed, 0)
    geometry = build_geometry(config.network, streams["geometry"])
    ue_ul, ue_dl = _split_demand(
        config.network.num_ues, config.ul_fraction, streams["demand"]
    )
    noise = config.network.noise_power
    pilot_power = np.full(config.network.num_ues, noise * 10 ** (config.pilot_snr_db / 10))
    tau_p = min(config.tau_p, config.network.num_ues)
    assignment = random_assignment(config.network.num_ues, tau_p, streams["pilots"])
    pilot_config = PilotConfig(tau=config.tau, tau_p=tau_p, pilot_power=pilot_power)
    if config.allocation == "iterative":
        assignment = iterative_allocation(
            geometry, pilot_config, assignment, PilotAllocParams(config.alloc_n_iter), noise
        )
    stats = estimation_stats(geometry, pilot_config, assignment, noise)
    powers = PowerConfig.from_snr(
        noise, config.ul_snr_db, config.dl_snr_db, config.network.num_ues, config.network.num_aps
    )
    context = SchedulingContext(
        stats=stats,
        geometry=geometry,
        powers=powers,
        assignment=assignment,
        pilot_config=pilot_config,
        ue_ul=ue_ul,
        ue_dl=ue_dl,
        n_antennas=config.network.antennas_per_ap,
        noise_power=noise,
    )
    aps = range(config.network.num_aps)
    greedy = greedy_schedule(aps, context)
    best = exhaustive_schedule(aps, context, metric=args.metric, max_aps=args.max_aps)
    print(f"greedy:     modes={greedy.schedule.mode_labels(config.network.num_aps)}")
    print(f"            objective={greedy.objective_value:.6g} evals={greedy.evaluations}")
    print(f"exhaustive: modes={best.schedule.mode_labels(config.network.num_aps)}")
    print(f"            objective={best.objective_value:.6g} evals={best.evaluations}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtddcf",
        description="Dynamic-TDD cell-free massive MIMO simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--drops", type=int, default=None)
    run.add_argument("--out", default="out")
    run.add_argument("--format", choices=("csv", "json", "both"), default="both")
    run.add_argument("--threads", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate", help="closed-form vs signal-level oracle")
    validate.add_argument("--seed", type=int, default=1)
    validate.add_argument("--fixtures", type=int, default=2)
    validate.add_argument("--realizations", type=int, default=100_000)
    validate.add_argument("--tolerance", type=float, default=0.02)
    validate.set_defaults(func=_cmd_validate)

    audit = sub.add_parser("audit", help="submodularity and monotonicity audit")
    audit.add_argument("--seed", type=int, default=1)
    audit.add_argument("--trials", type=int, default=10_000)
    audit.set_defaults(func=_cmd_audit)

    oracle = sub.add_parser("oracle", help="exhaustive schedule search on small M")
    oracle.add_argument("--config", required=True)
    oracle.add_argument("--seed", type=int, default=None)
    oracle.add_argument("--drops", type=int, default=None)
    oracle.add_argument("--metric", choices=("lower_bound", "true_sum_se"), default="true_sum_se")
    oracle.add_argument("--max-aps", type=int, default=16)
    oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
