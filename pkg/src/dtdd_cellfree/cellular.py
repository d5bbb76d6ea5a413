"""Cellular multi-cell baselines: full-duplex BSs with MRC/MFP and a
half-duplex TDD variant.

Each cell hosts one BS at its center; UEs attach to the nearest BS and only
their own BS serves them. Identically indexed UEs across cells share pilots,
so the per-link estimate variances come from the same LMMSE machinery as the
cell-free system, evaluated on the BS-to-UE gain matrix. FD BSs cancel their
own self-interference perfectly; the residual channel between distinct BSs
has a flat per-entry variance set in dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .closed_form import SEReport, report_from_sinrs
from .estimation import EstimationStats, PilotAssignment, PilotConfig, estimation_stats
from .geometry import NetworkConfig, NetworkGeometry, geometry_from_positions, place_aps_grid
from .pilots import cellular_assignment


@dataclass(frozen=True)
class CellularConfig:
    """Cell count, per-BS array sizes, and the inter-BS residual CLI level."""

    num_cells: int
    n_tx: int
    n_rx: int
    inter_bs_cli_db: float = float("-inf")

    def __post_init__(self):
        root = math.isqrt(self.num_cells)
        if self.num_cells < 1 or root * root != self.num_cells:
            raise ValueError(
                f"num_cells must be a positive square number, got {self.num_cells}"
            )
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be >= 1")


@dataclass(frozen=True)
class CellularLayout:
    """BS-side geometry: gains, attachment map, and inter-BS CLI variances.

    geometry.beta holds the (L, K) BS-to-UE gains; geometry.zeta is replaced
    by the flat inter-BS residual variance matrix rho.
    """

    geometry: NetworkGeometry
    cell_of: np.ndarray
    config: CellularConfig


def build_cellular_layout(
    network: NetworkConfig, ue_positions: np.ndarray, config: CellularConfig
) -> CellularLayout:
    bs_positions = place_aps_grid(config.num_cells, network.area_side_m)
    base = geometry_from_positions(
        replace(network, num_aps=config.num_cells), bs_positions, ue_positions
    )
    rho = 10.0 ** (config.inter_bs_cli_db / 10.0) * np.ones(
        (config.num_cells, config.num_cells)
    )
    np.fill_diagonal(rho, 0.0)
    geometry = replace(base, zeta=rho)
    dist = np.linalg.norm(
        bs_positions[:, None, :] - np.asarray(ue_positions)[None, :, :], axis=-1
    )
    cell_of = np.argmin(dist, axis=0)
    return CellularLayout(geometry=geometry, cell_of=cell_of, config=config)


def cellular_pilots_and_stats(
    layout: CellularLayout,
    tau: int,
    tau_p: int,
    pilot_power: np.ndarray,
    noise_power: float,
) -> tuple[PilotAssignment, PilotConfig, EstimationStats]:
    """Per-cell orthogonal pilots, reused across cells by local index."""
    assignment, effective_tau_p = cellular_assignment(
        layout.geometry, tau_p, layout.config.num_cells
    )
    pilot_config = PilotConfig(tau=tau, tau_p=effective_tau_p, pilot_power=pilot_power)
    stats = estimation_stats(layout.geometry, pilot_config, assignment, noise_power)
    return assignment, pilot_config, stats


def fd_power_coeffs(
    stats: EstimationStats, cell_of: np.ndarray, ue_dl, n_tx: int
) -> np.ndarray:
    """Per-BS DL coefficient over the BS's own DL UEs, zero elsewhere."""
    num_bs, num_ues = stats.alpha_sq.shape
    kappa = np.zeros((num_bs, num_ues))
    ue_dl = np.asarray(ue_dl, dtype=int)
    for bs in range(num_bs):
        own = ue_dl[cell_of[ue_dl] == bs]
        if len(own) == 0:
            continue
        kappa[bs, own] = 1.0 / (n_tx * stats.alpha_sq[bs, own].sum())
    return kappa


def _fd_ul_sinrs(
    layout: CellularLayout,
    stats: EstimationStats,
    assignment: PilotAssignment,
    ue_ul: np.ndarray,
    ue_dl: np.ndarray,
    ul_power: np.ndarray,
    dl_power: np.ndarray,
    kappa: np.ndarray,
    noise_power: float,
    with_cross_link: bool,
) -> np.ndarray:
    beta = layout.geometry.beta
    rho = layout.geometry.zeta
    sigma_sq = stats.alpha_sq
    n_rx = layout.config.n_rx
    n_tx = layout.config.n_tx
    cell_of = layout.cell_of
    num_ues = beta.shape[1]
    sinr = np.zeros(num_ues)
    if len(ue_ul) == 0:
        return sinr

    is_ul = np.zeros(num_ues, dtype=bool)
    is_ul[ue_ul] = True

    # One leakage weight per transmitting BS: E_d,j * sum_n kappa_jn^2 sigma_jjn^2.
    bs_leak = np.zeros(beta.shape[0])
    if with_cross_link and len(ue_dl):
        for bs in range(beta.shape[0]):
            own = ue_dl[cell_of[ue_dl] == bs]
            if len(own):
                bs_leak[bs] = dl_power[bs] * np.sum(kappa[bs, own] ** 2 * sigma_sq[bs, own])

    for k in ue_ul:
        home = cell_of[k]
        num = n_rx * sigma_sq[home, k] * ul_power[k]
        mui = float(beta[home, ue_ul] @ ul_power[ue_ul])
        sharers = assignment.sharers(k)
        sharers = sharers[is_ul[sharers]]
        if len(sharers):
            mui += n_rx * float(sigma_sq[home, sharers] @ ul_power[sharers])
        ibs = 0.0
        if with_cross_link:
            others = np.arange(beta.shape[0]) != home
            ibs = n_tx * float(rho[home, others] @ bs_leak[others])
        sinr[k] = num / (ibs + mui + noise_power)
    return sinr


def _fd_dl_sinrs(
    layout: CellularLayout,
    stats: EstimationStats,
    assignment: PilotAssignment,
    ue_ul: np.ndarray,
    ue_dl: np.ndarray,
    ul_power: np.ndarray,
    dl_power: np.ndarray,
    kappa: np.ndarray,
    noise_power: float,
    with_cross_link: bool,
) -> np.ndarray:
    beta = layout.geometry.beta
    epsilon = layout.geometry.epsilon
    sigma_sq = stats.alpha_sq
    n_tx = layout.config.n_tx
    cell_of = layout.cell_of
    num_bs, num_ues = beta.shape
    sinr = np.zeros(num_ues)
    if len(ue_dl) == 0:
        return sinr

    is_dl = np.zeros(num_ues, dtype=bool)
    is_dl[ue_dl] = True

    bs_leak = np.zeros(num_bs)
    for bs in range(num_bs):
        own = ue_dl[cell_of[ue_dl] == bs]
        if len(own):
            bs_leak[bs] = dl_power[bs] * np.sum(kappa[bs, own] ** 2 * sigma_sq[bs, own])

    for n in ue_dl:
        home = cell_of[n]
        num = n_tx**2 * kappa[home, n] ** 2 * dl_power[home] * sigma_sq[home, n] ** 2
        mui = n_tx * float(beta[:, n] @ bs_leak)
        sharers = assignment.sharers(n)
        sharers = sharers[is_dl[sharers]]
        for q in sharers:
            bs = cell_of[q]
            mui += (
                n_tx**2
                * dl_power[bs]
                * kappa[bs, q] ** 2
                * sigma_sq[bs, q]
                * sigma_sq[bs, n]
            )
        iui = 0.0
        if with_cross_link and len(ue_ul):
            iui = float(epsilon[n, ue_ul] @ ul_power[ue_ul])
        sinr[n] = num / (iui + mui + noise_power)
    return sinr


def fd_cellular_sum_se(
    layout: CellularLayout,
    stats: EstimationStats,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    ue_ul,
    ue_dl,
    ul_power: np.ndarray,
    dl_power: np.ndarray,
    noise_power: float,
) -> SEReport:
    """Sum UL-DL SE of the FD cellular system, both directions simultaneous."""
    ue_ul = np.asarray(ue_ul, dtype=int)
    ue_dl = np.asarray(ue_dl, dtype=int)
    _validate_demands(layout, ue_ul, ue_dl)
    kappa = fd_power_coeffs(stats, layout.cell_of, ue_dl, layout.config.n_tx)
    ul = _fd_ul_sinrs(
        layout, stats, assignment, ue_ul, ue_dl, ul_power, dl_power, kappa,
        noise_power, with_cross_link=True,
    )
    dl = _fd_dl_sinrs(
        layout, stats, assignment, ue_ul, ue_dl, ul_power, dl_power, kappa,
        noise_power, with_cross_link=True,
    )
    return report_from_sinrs(ul, dl, ue_ul, ue_dl, pilot_config.prelog)


def cellular_tdd_sum_se(
    layout: CellularLayout,
    stats: EstimationStats,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    ue_ul,
    ue_dl,
    ul_power: np.ndarray,
    dl_power: np.ndarray,
    noise_power: float,
) -> SEReport:
    """Half-duplex cellular baseline: the frame is split between an all-UL and
    an all-DL phase weighted by the demand fractions, so neither cross-link
    interference term appears."""
    ue_ul = np.asarray(ue_ul, dtype=int)
    ue_dl = np.asarray(ue_dl, dtype=int)
    _validate_demands(layout, ue_ul, ue_dl)
    total = len(ue_ul) + len(ue_dl)
    w_ul = len(ue_ul) / total if total else 0.0
    kappa = fd_power_coeffs(stats, layout.cell_of, ue_dl, layout.config.n_tx)
    ul = _fd_ul_sinrs(
        layout, stats, assignment, ue_ul, ue_dl, ul_power, dl_power, kappa,
        noise_power, with_cross_link=False,
    )
    dl = _fd_dl_sinrs(
        layout, stats, assignment, ue_ul, ue_dl, ul_power, dl_power, kappa,
        noise_power, with_cross_link=False,
    )
    return report_from_sinrs(
        ul, dl, ue_ul, ue_dl, pilot_config.prelog, ul_weight=w_ul, dl_weight=1.0 - w_ul
    )


def _validate_demands(layout: CellularLayout, ue_ul: np.ndarray, ue_dl: np.ndarray) -> None:
    num_ues = layout.geometry.num_ues
    demanded = set(ue_ul.tolist()) | set(ue_dl.tolist())
    if demanded != set(range(num_ues)):
        raise ValueError(
            f"demand sets cover {len(demanded)} UEs but the layout has {num_ues}"
        )
    if len(layout.cell_of) != num_ues:
        raise ValueError(
            f"attachment map covers {len(layout.cell_of)} UEs, layout has {num_ues}"
        )
