"""Network layouts, pathloss, and cross-link interference variances.

APs sit on a centered square grid; UEs are dropped uniformly at random.
Large-scale coefficients follow a bounded power-law pathloss model. The
residual AP-to-AP interference variance ``zeta`` is the inter-AP pathloss
scaled by a configurable suppression factor in dB; the UE-to-UE variance
``epsilon`` is plain pathloss (UEs cannot cancel each other).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of the square service area and its radio nodes."""

    area_side_m: float = 1000.0
    num_aps: int = 16
    antennas_per_ap: int = 4
    num_ues: int = 16
    pathloss_exponent: float = -3.76
    reference_distance_m: float = 10.0
    noise_power: float = 1.0
    cli_residual_db: float = float("-inf")

    def __post_init__(self):
        if self.num_aps < 1:
            raise ValueError(f"num_aps must be >= 1, got {self.num_aps}")
        if self.antennas_per_ap < 1:
            raise ValueError(f"antennas_per_ap must be >= 1, got {self.antennas_per_ap}")
        if self.num_ues < 1:
            raise ValueError(f"num_ues must be >= 1, got {self.num_ues}")
        if not self.area_side_m > 0:
            raise ValueError(f"area_side_m must be > 0, got {self.area_side_m}")
        if not self.reference_distance_m > 0:
            raise ValueError(
                f"reference_distance_m must be > 0, got {self.reference_distance_m}"
            )
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")


@dataclass(frozen=True)
class NetworkGeometry:
    """One realization of node positions and large-scale statistics.

    Immutable after construction; safe to share across workers.

    Attributes:
        area_side_m: side of the square service area in meters.
        ap_positions: (M, 2) coordinates in meters.
        ue_positions: (K, 2) coordinates in meters.
        beta: (M, K) large-scale gains, one per AP-UE link.
        zeta: (M, M) residual AP-to-AP interference variances, zero diagonal.
        epsilon: (K, K) UE-to-UE interference variances, zero diagonal.
    """

    area_side_m: float
    ap_positions: np.ndarray
    ue_positions: np.ndarray
    beta: np.ndarray
    zeta: np.ndarray
    epsilon: np.ndarray

    @property
    def num_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def num_ues(self) -> int:
        return self.ue_positions.shape[0]

    def to_json(self) -> str:
        doc = {
            "area_side_m": self.area_side_m,
            "ap_positions": self.ap_positions.tolist(),
            "ue_positions": self.ue_positions.tolist(),
            "beta": self.beta.tolist(),
            "zeta": self.zeta.tolist(),
            "epsilon": self.epsilon.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "NetworkGeometry":
        doc = json.loads(text)
        return cls(
            area_side_m=float(doc["area_side_m"]),
            ap_positions=np.asarray(doc["ap_positions"], dtype=float),
            ue_positions=np.asarray(doc["ue_positions"], dtype=float),
            beta=np.asarray(doc["beta"], dtype=float),
            zeta=np.asarray(doc["zeta"], dtype=float),
            epsilon=np.asarray(doc["epsilon"], dtype=float),
        )


def place_aps_grid(num_aps: int, area_side_m: float) -> np.ndarray:
    """Cell-centered ceil(sqrt(M)) x ceil(sqrt(M)) grid truncated to M points.

    Truncation is row-major from the bottom-left corner, so the layout is
    deterministic for non-square M.
    """
    if num_aps < 1:
        raise ValueError(f"num_aps must be >= 1, got {num_aps}")
    n = math.isqrt(num_aps)
    if n * n < num_aps:
        n += 1
    cell = area_side_m / n
    coords = [((c + 0.5) * cell, (r + 0.5) * cell) for r in range(n) for c in range(n)]
    return np.asarray(coords[:num_aps], dtype=float)


def drop_ues(num_ues: int, area_side_m: float, rng: np.random.Generator) -> np.ndarray:
    """K i.i.d. uniform points in the square, reproducible from the generator state."""
    if num_ues < 1:
        raise ValueError(f"num_ues must be >= 1, got {num_ues}")
    return rng.uniform(0.0, area_side_m, size=(num_ues, 2))


def pathloss(distance_m, config: NetworkConfig):
    """Large-scale gain (max(d, d_ref)/d_ref)^exponent; accepts arrays.

    Distances below the reference distance clamp to it, which bounds the
    near-field gain at 1.
    """
    d = np.maximum(np.asarray(distance_m, dtype=float), config.reference_distance_m)
    return (d / config.reference_distance_m) ** config.pathloss_exponent


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


def build_geometry(config: NetworkConfig, rng: np.random.Generator) -> NetworkGeometry:
    """Place nodes and populate beta, zeta, and epsilon for one UE drop."""
    ap_pos = place_aps_grid(config.num_aps, config.area_side_m)
    ue_pos = drop_ues(config.num_ues, config.area_side_m, rng)
    return geometry_from_positions(config, ap_pos, ue_pos)


def geometry_from_positions(
    config: NetworkConfig, ap_positions: np.ndarray, ue_positions: np.ndarray
) -> NetworkGeometry:
    """Large-scale statistics for externally supplied node positions."""
    ap_pos = np.asarray(ap_positions, dtype=float)
    ue_pos = np.asarray(ue_positions, dtype=float)
    beta = pathloss(_pairwise_distances(ap_pos, ue_pos), config)

    suppression = 10.0 ** (config.cli_residual_db / 10.0)
    zeta = pathloss(_pairwise_distances(ap_pos, ap_pos), config) * suppression
    np.fill_diagonal(zeta, 0.0)

    epsilon = pathloss(_pairwise_distances(ue_pos, ue_pos), config)
    np.fill_diagonal(epsilon, 0.0)

    return NetworkGeometry(
        area_side_m=config.area_side_m,
        ap_positions=ap_pos,
        ue_positions=ue_pos,
        beta=beta,
        zeta=zeta,
        epsilon=epsilon,
    )


def config_to_dict(config: NetworkConfig) -> dict:
    return asdict(config)


def config_from_dict(doc: dict) -> NetworkConfig:
    return NetworkConfig(**doc)
