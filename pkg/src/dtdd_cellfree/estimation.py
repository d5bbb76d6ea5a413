"""LMMSE channel-estimation statistics and channel/estimate draws.

Every AP estimates the channel from every UE out of shared pilot
observations. With pilot reuse, UEs in the same pilot group contaminate
each other's estimates; the per-link estimate variance ``alpha_sq`` and
error variance ``alpha_bar_sq`` fully parameterize the Gaussian split of
the channel into estimate plus error.

Estimates are drawn directly from their marginal distribution in the hot
path; simulating the pilot phase explicitly gives identical statistics and
lives in the validation oracle only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import NetworkGeometry


@dataclass(frozen=True)
class PilotConfig:
    """Slot structure and per-UE pilot powers.

    Attributes:
        tau: symbols per slot.
        tau_p: pilot symbols per slot (first part of the slot).
        pilot_power: (K,) per-UE pilot power, linear scale.
    """

    tau: int
    tau_p: int
    pilot_power: np.ndarray

    def __post_init__(self):
        if not 1 <= self.tau_p <= self.tau:
            raise ValueError(f"need 1 <= tau_p <= tau, got tau_p={self.tau_p}, tau={self.tau}")
        power = np.asarray(self.pilot_power, dtype=float)
        if np.any(power <= 0):
            raise ValueError("pilot_power entries must be > 0")
        object.__setattr__(self, "pilot_power", power)

    @classmethod
    def uniform(cls, tau: int, tau_p: int, num_ues: int, power: float) -> "PilotConfig":
        return cls(tau=tau, tau_p=tau_p, pilot_power=np.full(num_ues, float(power)))

    @property
    def prelog(self) -> float:
        return (self.tau - self.tau_p) / self.tau


class PilotAssignment:
    """Partition of UE indices into tau_p pilot groups."""

    def __init__(self, groups, num_ues: int):
        self.groups = [np.asarray(sorted(g), dtype=int) for g in groups]
        self.num_ues = num_ues
        flat = np.concatenate([g for g in self.groups]) if self.groups else np.array([], dtype=int)
        if len(flat) != num_ues or len(np.unique(flat)) != num_ues:
            raise ValueError("pilot groups must partition the UE index set")
        if num_ues and (flat.min() < 0 or flat.max() >= num_ues):
            bad = flat[(flat < 0) | (flat >= num_ues)][0]
            raise ValueError(f"UE index {bad} out of range")
        self.group_of = np.empty(num_ues, dtype=int)
        for p, members in enumerate(self.groups):
            self.group_of[members] = p

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    def sharers(self, ue: int) -> np.ndarray:
        """Indices sharing this UE's pilot, the UE itself excluded."""
        members = self.groups[self.group_of[ue]]
        return members[members != ue]

    @classmethod
    def from_labels(cls, labels, num_groups: int) -> "PilotAssignment":
        labels = np.asarray(labels, dtype=int)
        groups = [np.flatnonzero(labels == p) for p in range(num_groups)]
        return cls(groups, num_ues=len(labels))

    def to_json(self) -> str:
        return json.dumps(self.group_of.tolist())

    @classmethod
    def from_json(cls, text: str, num_groups: int | None = None) -> "PilotAssignment":
        labels = json.loads(text)
        if num_groups is None:
            num_groups = max(labels) + 1
        return cls.from_labels(labels, num_groups)

    def __eq__(self, other):
        return (
            isinstance(other, PilotAssignment)
            and self.num_ues == other.num_ues
            and np.array_equal(self.group_of, other.group_of)
        )


@dataclass(frozen=True)
class EstimationStats:
    """Per-link LMMSE statistics: estimate variance, error variance, and the
    contamination-aware scaling c used by both."""

    alpha_sq: np.ndarray
    alpha_bar_sq: np.ndarray
    c: np.ndarray


def estimation_stats(
    geometry: NetworkGeometry,
    pilot_config: PilotConfig,
    assignment: PilotAssignment,
    noise_power: float = 1.0,
) -> EstimationStats:
    """Closed-form estimate/error variances for a pilot assignment.

    For UE k in group p at AP m:
        c_mk      = (tau_p * sum_{n in group p} E_p,n * beta_mn + N0)^-1
        alpha_mk^2 = c_mk * tau_p * E_p,k * beta_mk^2
    The group sum includes k itself, so c is shared by all UEs in a group.
    """
    beta = geometry.beta
    num_aps, num_ues = beta.shape
    if assignment.num_ues != num_ues:
        raise ValueError(
            f"assignment covers {assignment.num_ues} UEs, geometry has {num_ues}"
        )
    tau_p = pilot_config.tau_p
    ep = pilot_config.pilot_power

    c = np.zeros_like(beta)
    for members in assignment.groups:
        if len(members) == 0:
            continue
        load = tau_p * (beta[:, members] @ ep[members]) + noise_power
        c[:, members] = (1.0 / load)[:, None]
    alpha_sq = c * tau_p * ep[None, :] * beta**2
    alpha_bar_sq = np.maximum(beta - alpha_sq, 0.0)
    return EstimationStats(alpha_sq=alpha_sq, alpha_bar_sq=alpha_bar_sq, c=c)


def complex_normal(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian with per-entry variance ``var``.

    Each component is a real Gaussian at variance var/2.
    """
    var = np.asarray(var, dtype=float)
    draw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.sqrt(var / 2.0) * draw


@dataclass(frozen=True)
class ChannelBlock:
    """One coherence-interval realization of all random channels.

    Attributes:
        f_hat: (M, N, K) channel estimates, per-entry variance alpha_sq.
        f_err: (M, N, K) estimation errors, per-entry variance alpha_bar_sq.
        g_ap: (M, M, N, N) residual AP-to-AP channels, entry variance zeta.
        g_ue: (K, K) UE-to-UE scalars, entry (n, k) has variance epsilon[n, k].
    """

    f_hat: np.ndarray
    f_err: np.ndarray
    g_ap: np.ndarray
    g_ue: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return self.f_hat + self.f_err


def draw_channel_block(
    geometry: NetworkGeometry,
    stats: EstimationStats,
    n_antennas: int,
    rng: np.random.Generator,
    batch: int | None = None,
) -> ChannelBlock:
    """Draw estimates, errors, and both cross-link channels.

    With ``batch`` set, a leading batch axis is prepended to every array so
    Monte-Carlo loops can be vectorized.
    """
    num_aps, num_ues = geometry.beta.shape
    lead = () if batch is None else (batch,)
    f_hat = complex_normal(
        rng, lead + (num_aps, n_antennas, num_ues), stats.alpha_sq[:, None, :]
    )
    f_err = complex_normal(
        rng, lead + (num_aps, n_antennas, num_ues), stats.alpha_bar_sq[:, None, :]
    )
    g_ap = complex_normal(
        rng,
        lead + (num_aps, num_aps, n_antennas, n_antennas),
        geometry.zeta[:, :, None, None],
    )
    g_ue = complex_normal(rng, lead + (num_ues, num_ues), geometry.epsilon)
    return ChannelBlock(f_hat=f_hat, f_err=f_err, g_ap=g_ap, g_ue=g_ue)
