"""Experiment campaigns: Monte-Carlo over UE drops, scheme comparison, CDF
and percentile metrics, parameter sweeps, and result emission.

Scheme comparisons are paired: every scheme evaluated under the same campaign
seed sees identical UE drops, demand splits, pilot draws, and channel streams,
so per-drop deltas are seed-stable. Per-drop streams depend only on the
campaign seed and the drop index, which makes campaigns append-only
reproducible: growing the drop count never changes earlier drops.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import __version__
from .cellular import (
    CellularConfig,
    build_cellular_layout,
    cellular_pilots_and_stats,
    cellular_tdd_sum_se,
    fd_cellular_sum_se,
)
from .closed_form import (
    PowerConfig,
    Schedule,
    SEReport,
    dl_power_coeffs,
    report_from_sinrs,
    dl_sinrs_mfp,
    sum_se,
    ul_sinrs_mrc,
)
from .estimation import PilotConfig, estimation_stats
from .geometry import NetworkConfig, build_geometry
from .montecarlo import McParams, mc_sum_se
from .pilots import PilotAllocParams, cellular_assignment, iterative_allocation, random_assignment
from .scheduler import SchedulingContext, exhaustive_schedule, greedy_schedule

SCHEMES = ("cf_dtdd_greedy", "cf_dtdd_exhaustive", "cf_tdd", "cellular_tdd", "cellular_fd")
PROCESSINGS = ("mrc_mfp", "mmse_rzf")
ALLOCATIONS = ("random", "cellular", "iterative")
SWEEP_PARAMS = ("snr_db", "cli_db", "ul_fraction", "num_ues")


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkConfig = NetworkConfig()
    tau: int = 200
    tau_p: int = 4
    pilot_snr_db: float = 20.0
    allocation: str = "iterative"
    alloc_n_iter: int = 1000
    ul_snr_db: float = 10.0
    dl_snr_db: float = 10.0
    ul_fraction: float = 0.5
    scheme: str = "cf_dtdd_greedy"
    processing: str = "mrc_mfp"
    num_cells: int = 4
    cell_antennas: int | None = None
    fd_cli_db: float = -70.0
    n_realizations: int = 200
    rzf_xi: float | None = None
    drops: int = 200
    seed: int = 0
    sweep: dict | None = None

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError(f"drops must be >= 1, got {self.drops}")
        if not 0.0 <= self.ul_fraction <= 1.0:
            raise ValueError(f"ul_fraction must be in [0, 1], got {self.ul_fraction}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.processing not in PROCESSINGS:
            raise ValueError(f"unknown processing {self.processing!r}")
        if self.allocation not in ALLOCATIONS:
            raise ValueError(f"unknown allocation {self.allocation!r}")
        if self.scheme in ("cf_dtdd_exhaustive", "cellular_tdd", "cellular_fd"):
            if self.processing != "mrc_mfp":
                raise ValueError(f"scheme {self.scheme} supports mrc_mfp processing only")
        if self.sweep is not None:
            for name in self.sweep:
                if name not in SWEEP_PARAMS:
                    raise ValueError(f"unknown sweep parameter {name!r}")

    def resolved_cell_antennas(self) -> int:
        if self.cell_antennas is not None:
            return self.cell_antennas
        total = self.network.num_aps * self.network.antennas_per_ap
        return max(1, total // self.num_cells)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from the nested config-file layout."""
    doc = dict(doc)
    kwargs: dict = {}
    if "network" in doc:
        kwargs["network"] = NetworkConfig(**doc.pop("network"))
    pilot = doc.pop("pilot", {})
    for src, dst in (
        ("tau", "tau"),
        ("tau_p", "tau_p"),
        ("pilot_snr_db", "pilot_snr_db"),
        ("allocation", "allocation"),
        ("n_iter", "alloc_n_iter"),
    ):
        if src in pilot:
            kwargs[dst] = pilot[src]
    powers = doc.pop("powers", {})
    for name in ("ul_snr_db", "dl_snr_db"):
        if name in powers:
            kwargs[name] = powers[name]
    demand = doc.pop("demand", {})
    if "ul_fraction" in demand:
        kwargs["ul_fraction"] = demand["ul_fraction"]
    cells = doc.pop("cells", {})
    if "num_cells" in cells:
        kwargs["num_cells"] = cells["num_cells"]
    if "antennas" in cells:
        kwargs["cell_antennas"] = cells["antennas"]
    mc = doc.pop("mc", {})
    if "n_realizations" in mc:
        kwargs["n_realizations"] = mc["n_realizations"]
    if "rzf_xi" in mc:
        kwargs["rzf_xi"] = mc["rzf_xi"]
    kwargs.update(doc)
    return ExperimentConfig(**kwargs)


def config_to_dict(config: ExperimentConfig) -> dict:
    doc = asdict(config)
    doc["network"] = asdict(config.network)
    return doc


def _drop_streams(seed: int, drop: int) -> dict:
    root = np.random.SeedSequence(entropy=seed, spawn_key=(drop,))
    names = ("geometry", "demand", "pilots", "channels")
    children = root.spawn(len(names))
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def _split_demand(num_ues: int, ul_fraction: float, rng: np.random.Generator):
    n_ul = int(round(ul_fraction * num_ues))
    perm = rng.permutation(num_ues)
    ue_ul = tuple(sorted(int(u) for u in perm[:n_ul]))
    ue_dl = tuple(sorted(int(u) for u in perm[n_ul:]))
    return ue_ul, ue_dl


@dataclass
class DropResult:
    report: SEReport
    schedule: Schedule | None
    prelog: float

    @property
    def ul_sum_se(self) -> float:
        return float(self.prelog * self.report.ul_se.sum())

    @property
    def dl_sum_se(self) -> float:
        return float(self.prelog * self.report.dl_se.sum())

    @property
    def sum_se(self) -> float:
        return self.report.sum_se


def run_drop(config: ExperimentConfig, drop: int) -> DropResult:
    """Evaluate one UE drop under the configured scheme."""
    streams = _drop_streams(config.seed, drop)
    network = config.network
    noise = network.noise_power
    geometry = build_geometry(network, streams["geometry"])
    ue_ul, ue_dl = _split_demand(network.num_ues, config.ul_fraction, streams["demand"])

    pilot_power = np.full(
        network.num_ues, noise * 10.0 ** (config.pilot_snr_db / 10.0)
    )

    if config.scheme in ("cellular_tdd", "cellular_fd"):
        return _run_cellular_drop(config, geometry, ue_ul, ue_dl, pilot_power)

    tau_p = min(config.tau_p, network.num_ues)
    if config.allocation == "cellular":
        assignment, eff_tau_p = cellular_assignment(geometry, tau_p, config.num_cells)
        pilot_config = PilotConfig(tau=config.tau, tau_p=eff_tau_p, pilot_power=pilot_power)
    else:
        assignment = random_assignment(network.num_ues, tau_p, streams["pilots"])
        pilot_config = PilotConfig(tau=config.tau, tau_p=tau_p, pilot_power=pilot_power)
        if config.allocation == "iterative":
            assignment = iterative_allocation(
                geometry,
                pilot_config,
                assignment,
                PilotAllocParams(n_iter=config.alloc_n_iter),
                noise,
            )
    stats = estimation_stats(geometry, pilot_config, assignment, noise)
    powers = PowerConfig.from_snr(
        noise, config.ul_snr_db, config.dl_snr_db, network.num_ues, network.num_aps
    )
    n_ant = network.antennas_per_ap
    prelog = pilot_config.prelog

    common = dict(
        stats=stats,
        geometry=geometry,
        assignment=assignment,
        pilot_config=pilot_config,
    )

    if config.scheme in ("cf_dtdd_greedy", "cf_dtdd_exhaustive"):
        context = SchedulingContext(
            powers=powers,
            ue_ul=ue_ul,
            ue_dl=ue_dl,
            n_antennas=n_ant,
            noise_power=noise,
            **common,
        )
        if config.scheme == "cf_dtdd_greedy":
            schedule = greedy_schedule(range(network.num_aps), context).schedule
        else:
            schedule = exhaustive_schedule(
                range(network.num_aps), context, metric="true_sum_se"
            ).schedule
        powers_k = powers.with_kappa(dl_power_coeffs(stats, schedule, n_ant))
        if config.processing == "mrc_mfp":
            report = sum_se(
                schedule, stats, geometry, powers_k, assignment, pilot_config, n_ant, noise
            )
        else:
            params = McParams(
                n_realizations=config.n_realizations,
                rzf_xi=config.rzf_xi,
                dl_per_antenna_power=noise * 10.0 ** (config.dl_snr_db / 10.0),
            )
            report = mc_sum_se(
                schedule,
                stats,
                geometry,
                powers_k,
                assignment,
                pilot_config,
                n_ant,
                noise,
                params,
                streams["channels"],
            )
        return DropResult(report=report, schedule=schedule, prelog=prelog)

    # Static TDD cell-free: every AP serves each direction in its own phase,
    # phases weighted by the demand split; no cross-link interference.
    all_aps = tuple(range(network.num_aps))
    ul_phase = Schedule(ap_ul=all_aps, ap_dl=(), ue_ul=ue_ul, ue_dl=ue_dl)
    dl_phase = Schedule(ap_ul=(), ap_dl=all_aps, ue_ul=ue_ul, ue_dl=ue_dl)
    w_ul = len(ue_ul) / network.num_ues
    powers_dl = powers.with_kappa(dl_power_coeffs(stats, dl_phase, n_ant))
    if config.processing == "mrc_mfp":
        ul = ul_sinrs_mrc(ul_phase, powers=powers, n_antennas=n_ant, noise_power=noise, **common)
        dl = dl_sinrs_mfp(dl_phase, powers=powers_dl, n_antennas=n_ant, noise_power=noise, **common)
        report = report_from_sinrs(ul, dl, ue_ul, ue_dl, prelog, w_ul, 1.0 - w_ul)
    else:
        params = McParams(
            n_realizations=config.n_realizations,
            rzf_xi=config.rzf_xi,
            dl_per_antenna_power=noise * 10.0 ** (config.dl_snr_db / 10.0),
        )
        mc_args = dict(n_antennas=n_ant, noise_power=noise, params=params, **common)
        rep_ul = mc_sum_se(ul_phase, powers=powers, rng=streams["channels"], **mc_args)
        rep_dl = mc_sum_se(dl_phase, powers=powers_dl, rng=streams["channels"], **mc_args)
        ul_se = w_ul * rep_ul.ul_se
        dl_se = (1.0 - w_ul) * rep_dl.dl_se
        report = SEReport(
            ul_sinr=rep_ul.ul_sinr,
            dl_sinr=rep_dl.dl_sinr,
            ul_se=ul_se,
            dl_se=dl_se,
            sum_se=float(prelog * (ul_se.sum() + dl_se.sum())),
        )
    return DropResult(report=report, schedule=None, prelog=prelog)


def _run_cellular_drop(config, geometry, ue_ul, ue_dl, pilot_power) -> DropResult:
    network = config.network
    noise = network.noise_power
    n_ant = config.resolved_cell_antennas()
    cell_config = CellularConfig(
        num_cells=config.num_cells,
        n_tx=n_ant,
        n_rx=n_ant,
        inter_bs_cli_db=config.fd_cli_db,
    )
    layout = build_cellular_layout(network, geometry.ue_positions, cell_config)
    tau_p = min(config.tau_p, network.num_ues)
    assignment, pilot_config, stats = cellular_pilots_and_stats(
        layout, config.tau, tau_p, pilot_power, noise
    )
    ul_power = np.full(network.num_ues, noise * 10.0 ** (config.ul_snr_db / 10.0))
    dl_power = np.full(config.num_cells, noise * 10.0 ** (config.dl_snr_db / 10.0))
    evaluate = fd_cellular_sum_se if config.scheme == "cellular_fd" else cellular_tdd_sum_se
    report = evaluate(
        layout, stats, assignment, pilot_config, ue_ul, ue_dl, ul_power, dl_power, noise
    )
    return DropResult(report=report, schedule=None, prelog=pilot_config.prelog)


def percentile_90_likely(samples) -> float:
    """Value exceeded with probability 0.9: the 10th percentile, interpolated."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    return float(np.percentile(samples, 10.0, method="linear"))


@dataclass
class SweepPointResult:
    params: dict
    sum_se: list
    ul_se: list
    dl_se: list
    median_sum_se: float
    likely90_sum_se: float

    def cdf(self) -> tuple:
        values = np.sort(np.asarray(self.sum_se))
        probs = np.arange(1, len(values) + 1) / len(values)
        return values, probs


@dataclass
class CampaignResult:
    config: dict
    seed: int
    version: str
    drops: int
    points: list
    wall_clock_s: float = 0.0

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "drops": self.drops,
            "wall_clock_s": self.wall_clock_s,
            "points": [asdict(p) for p in self.points],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CampaignResult":
        doc = json.loads(text)
        points = [SweepPointResult(**p) for p in doc["points"]]
        return cls(
            config=doc["config"],
            seed=doc["seed"],
            version=doc["version"],
            drops=doc["drops"],
            points=points,
            wall_clock_s=doc["wall_clock_s"],
        )


def expand_sweep(sweep: dict | None) -> list:
    """Cartesian grid of named sweep values; a single empty point if no sweep."""
    if not sweep:
        return [{}]
    points = [{}]
    for name in sweep:
        points = [dict(p, **{name: value}) for p in points for value in sweep[name]]
    return points


def apply_sweep_point(config: ExperimentConfig, point: dict) -> ExperimentConfig:
    cfg = config
    for name, value in point.items():
        if name == "snr_db":
            cfg = replace(cfg, ul_snr_db=value, dl_snr_db=value)
        elif name == "cli_db":
            cfg = replace(
                cfg, network=replace(cfg.network, cli_residual_db=value), fd_cli_db=value
            )
        elif name == "ul_fraction":
            cfg = replace(cfg, ul_fraction=value)
        elif name == "num_ues":
            cfg = replace(cfg, network=replace(cfg.network, num_ues=value))
        else:
            raise ValueError(f"unknown sweep parameter {name!r}")
    return cfg


def run_campaign(config: ExperimentConfig, threads: int = 1) -> CampaignResult:
    """Run every sweep point over the configured number of paired drops."""
    started = time.perf_counter()
    points = []
    for point in expand_sweep(config.sweep):
        cfg = apply_sweep_point(config, point)

        def one(drop, cfg=cfg):
            try:
                return run_drop(cfg, drop)
            except Exception as exc:
                raise RuntimeError(f"drop {drop} failed at sweep point {point}: {exc}") from exc

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(cfg.drops)))
        else:
            results = [one(d) for d in range(cfg.drops)]
        sums = [r.sum_se for r in results]
        points.append(
            SweepPointResult(
                params=point,
                sum_se=sums,
                ul_se=[r.ul_sum_se for r in results],
                dl_se=[r.dl_sum_se for r in results],
                median_sum_se=float(np.median(sums)),
                likely90_sum_se=percentile_90_likely(sums),
            )
        )
    return CampaignResult(
        config=config_to_dict(config),
        seed=config.seed,
        version=__version__,
        drops=config.drops,
        points=points,
        wall_clock_s=time.perf_counter() - started,
    )


def campaign_csv(result: CampaignResult) -> str:
    """One row per (sweep point, drop); float cells carry full precision."""
    param_names = sorted({name for p in result.points for name in p.params})
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(param_names + ["drop", "sum_se", "ul_se", "dl_se"])
    for point in result.points:
        for drop in range(len(point.sum_se)):
            row = [_fmt(point.params[n]) if n in point.params else "" for n in param_names]
            row += [
                str(drop),
                _fmt(point.sum_se[drop]),
                _fmt(point.ul_se[drop]),
                _fmt(point.dl_se[drop]),
            ]
            writer.writerow(row)
    return buffer.getvalue()


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_results(result: CampaignResult, fmt: str, path: str) -> list:
    """Write the campaign to disk; returns the created file paths."""
    os.makedirs(path, exist_ok=True)
    written = []
    try:
        if fmt in ("csv", "both"):
            target = os.path.join(path, "results.csv")
            with open(target, "w") as fh:
                fh.write(campaign_csv(result))
            written.append(target)
        if fmt in ("json", "both"):
            target = os.path.join(path, "results.json")
            with open(target, "w") as fh:
                fh.write(result.to_json())
            written.append(target)
    except OSError as exc:
        raise OSError(f"failed writing results under {path!r}: {exc}") from exc
    if not written:
        raise ValueError(f"unknown format {fmt!r}")
    return written
