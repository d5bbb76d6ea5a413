"""Pilot allocation: random and cell-based baselines, plus the iterative
scheme that lifts the worst UE's estimate quality at its nearest AP."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import PilotAssignment, PilotConfig
from .geometry import NetworkGeometry, place_aps_grid


@dataclass(frozen=True)
class PilotAllocParams:
    """Iteration budget and optional quality threshold for the iterative scheme."""

    n_iter: int = 1000
    alpha_threshold: float = float("inf")

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")


def random_assignment(num_ues: int, tau_p: int, rng: np.random.Generator) -> PilotAssignment:
    """Uniformly random group per UE; identity assignment when tau_p == K."""
    if tau_p < 1:
        raise ValueError(f"tau_p must be >= 1, got {tau_p}")
    if tau_p == num_ues:
        labels = np.arange(num_ues)
    else:
        labels = rng.integers(0, tau_p, size=num_ues)
    return PilotAssignment.from_labels(labels, tau_p)


def cellular_assignment(
    geometry: NetworkGeometry, tau_p: int, num_cells: int
) -> tuple[PilotAssignment, int]:
    """Cluster UEs by nearest cell center, assign pilots round-robin per cluster.

    Within a cluster pilots are orthogonal; if some cluster has more UEs than
    tau_p, the effective pilot length grows to the largest cluster size.
    Returns the assignment and the effective pilot length actually used.
    """
    root = math.isqrt(num_cells)
    if num_cells < 1 or root * root != num_cells:
        raise ValueError(f"num_cells must be a positive square number, got {num_cells}")
    centers = place_aps_grid(num_cells, geometry.area_side_m)
    dist = np.linalg.norm(geometry.ue_positions[:, None, :] - centers[None, :, :], axis=-1)
    cell_of = np.argmin(dist, axis=1)

    sizes = np.bincount(cell_of, minlength=num_cells)
    effective_tau_p = max(tau_p, int(sizes.max()) if len(sizes) else tau_p)

    labels = np.empty(geometry.num_ues, dtype=int)
    for cell in range(num_cells):
        members = np.flatnonzero(cell_of == cell)
        labels[members] = np.arange(len(members)) % effective_tau_p
    return PilotAssignment.from_labels(labels, effective_tau_p), effective_tau_p


def nearest_ap(geometry: NetworkGeometry) -> np.ndarray:
    """Index of each UE's closest AP, ties to the lowest AP index."""
    dist = np.linalg.norm(
        geometry.ap_positions[:, None, :] - geometry.ue_positions[None, :, :], axis=-1
    )
    return np.argmin(dist, axis=0)


def _alpha_at_nearest(
    geometry: NetworkGeometry,
    pilot_config: PilotConfig,
    groups: list[np.ndarray],
    home_ap: np.ndarray,
    noise_power: float,
) -> np.ndarray:
    """Estimate amplitude alpha of every UE at its nearest AP under ``groups``."""
    beta = geometry.beta
    tau_p = pilot_config.tau_p
    ep = pilot_config.pilot_power
    alpha = np.empty(geometry.num_ues)
    for members in groups:
        for k in members:
            m = home_ap[k]
            load = tau_p * float(beta[m, members] @ ep[members]) + noise_power
            alpha[k] = math.sqrt(tau_p * ep[k] * beta[m, k] ** 2 / load)
    return alpha


def iterative_allocation(
    geometry: NetworkGeometry,
    pilot_config: PilotConfig,
    initial: PilotAssignment,
    params: PilotAllocParams = PilotAllocParams(),
    noise_power: float = 1.0,
) -> PilotAssignment:
    """Iteratively move the worst-estimated UE to the pilot that helps it most.

    Each step finds the UE with the smallest estimate amplitude at its nearest
    AP, tentatively evaluates it in every pilot group, and moves it to the
    best one. Stops on iteration budget, on reaching the quality threshold, or
    as soon as a move fails to improve the current minimum (the move is then
    reverted, which keeps the min-alpha trajectory non-decreasing).
    """
    tau_p = initial.num_groups
    groups = [g.copy() for g in initial.groups]
    home_ap = nearest_ap(geometry)
    beta = geometry.beta
    ep = pilot_config.pilot_power
    tp = pilot_config.tau_p

    alpha = _alpha_at_nearest(geometry, pilot_config, groups, home_ap, noise_power)
    current_min = alpha.min()

    for _ in range(params.n_iter):
        if current_min >= params.alpha_threshold:
            break
        k_star = int(np.argmin(alpha))
        m = home_ap[k_star]
        p_old = next(p for p, g in enumerate(groups) if k_star in g)

        candidates = np.empty(tau_p)
        for p, members in enumerate(groups):
            others = members[members != k_star]
            load = tp * (float(beta[m, others] @ ep[others]) + ep[k_star] * beta[m, k_star])
            load += noise_power
            candidates[p] = math.sqrt(tp * ep[k_star] * beta[m, k_star] ** 2 / load)
        p_star = int(np.argmax(candidates))

        if p_star == p_old:
            break
        new_groups = [g.copy() for g in groups]
        new_groups[p_old] = new_groups[p_old][new_groups[p_old] != k_star]
        new_groups[p_star] = np.sort(np.append(new_groups[p_star], k_star))
        new_alpha = _alpha_at_nearest(geometry, pilot_config, new_groups, home_ap, noise_power)
        new_min = new_alpha.min()
        if new_min <= current_min:
            break
        groups, alpha, current_min = new_groups, new_alpha, new_min

    return PilotAssignment(groups, num_ues=geometry.num_ues)


def min_alpha_at_nearest(
    geometry: NetworkGeometry,
    pilot_config: PilotConfig,
    assignment: PilotAssignment,
    noise_power: float = 1.0,
) -> float:
    """The quality metric the iterative scheme optimizes, for external checks."""
    home_ap = nearest_ap(geometry)
    alpha = _alpha_at_nearest(geometry, pilot_config, assignment.groups, home_ap, noise_power)
    return float(alpha.min())
