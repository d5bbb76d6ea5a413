"""Closed-form SINR and spectral efficiency for MRC uplink and matched-filter
downlink in a dynamic-TDD cell-free network.

Uplink SINR of UE k served by the UL AP set:

    N * E_u,k * (sum_m a_mk)^2
    --------------------------------------------------
    NCoh + Coh + IAP + N0 * sum_m a_mk

with a_mk the estimate variance, NCoh the non-coherent inter-UE term (summed
over all UL UEs, which folds in the beamforming-uncertainty variance), Coh
the coherent pilot-contamination term over same-pilot UL UEs, and IAP the
residual DL-AP-to-UL-AP leakage. The downlink mirror uses the matched-filter
gain with per-AP power coefficients kappa and adds the UL-UE-to-DL-UE term.
Empty serving sets yield SINR 0 rather than an error, since partial schedules
arise inside the greedy scheduler.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .estimation import EstimationStats, PilotAssignment, PilotConfig
from .geometry import NetworkGeometry


@dataclass(frozen=True)
class Schedule:
    """AP mode partition plus the fixed UE demand split."""

    ap_ul: tuple
    ap_dl: tuple
    ue_ul: tuple
    ue_dl: tuple

    def __post_init__(self):
        object.__setattr__(self, "ap_ul", tuple(sorted(int(i) for i in self.ap_ul)))
        object.__setattr__(self, "ap_dl", tuple(sorted(int(i) for i in self.ap_dl)))
        object.__setattr__(self, "ue_ul", tuple(sorted(int(i) for i in self.ue_ul)))
        object.__setattr__(self, "ue_dl", tuple(sorted(int(i) for i in self.ue_dl)))
        if set(self.ap_ul) & set(self.ap_dl):
            raise ValueError("ap_ul and ap_dl must be disjoint")
        if set(self.ue_ul) & set(self.ue_dl):
            raise ValueError("ue_ul and ue_dl must be disjoint")

    def validate_complete(self, num_aps: int, num_ues: int) -> None:
        if set(self.ap_ul) | set(self.ap_dl) != set(range(num_aps)):
            raise ValueError("schedule does not assign every AP a mode")
        if set(self.ue_ul) | set(self.ue_dl) != set(range(num_ues)):
            raise ValueError("schedule does not cover every UE demand")

    def mode_labels(self, num_aps: int) -> list:
        labels = [None] * num_aps
        for m in self.ap_ul:
            labels[m] = "UL"
        for m in self.ap_dl:
            labels[m] = "DL"
        return labels

    def to_json(self, num_aps: int) -> str:
        return json.dumps(self.mode_labels(num_aps))

    @classmethod
    def from_mode_labels(cls, labels, ue_ul, ue_dl) -> "Schedule":
        ap_ul = [m for m, lab in enumerate(labels) if lab == "UL"]
        ap_dl = [m for m, lab in enumerate(labels) if lab == "DL"]
        return cls(ap_ul=tuple(ap_ul), ap_dl=tuple(ap_dl), ue_ul=tuple(ue_ul), ue_dl=tuple(ue_dl))


@dataclass(frozen=True)
class PowerConfig:
    """Linear data powers and downlink power-control coefficients.

    kappa is zero until filled by dl_power_coeffs for a concrete schedule.
    """

    ul_power: np.ndarray
    dl_power: np.ndarray
    kappa: np.ndarray | None = None

    def __post_init__(self):
        ul = np.asarray(self.ul_power, dtype=float)
        dl = np.asarray(self.dl_power, dtype=float)
        if np.any(ul < 0) or np.any(dl < 0):
            raise ValueError("data powers must be >= 0")
        object.__setattr__(self, "ul_power", ul)
        object.__setattr__(self, "dl_power", dl)
        if self.kappa is None:
            object.__setattr__(self, "kappa", np.zeros((len(dl), len(ul))))

    @classmethod
    def from_snr(
        cls, noise_power: float, ul_snr_db: float, dl_snr_db: float, num_ues: int, num_aps: int
    ) -> "PowerConfig":
        ul = np.full(num_ues, noise_power * 10.0 ** (ul_snr_db / 10.0))
        dl = np.full(num_aps, noise_power * 10.0 ** (dl_snr_db / 10.0))
        return cls(ul_power=ul, dl_power=dl)

    def with_kappa(self, kappa: np.ndarray) -> "PowerConfig":
        return replace(self, kappa=kappa)


@dataclass(frozen=True)
class SEReport:
    """Per-UE SINRs and SEs plus the pre-log-scaled sum, arrays indexed by UE."""

    ul_sinr: np.ndarray
    dl_sinr: np.ndarray
    ul_se: np.ndarray
    dl_se: np.ndarray
    sum_se: float

    def to_dict(self) -> dict:
        return {
            "ul_sinr": self.ul_sinr.tolist(),
            "dl_sinr": self.dl_sinr.tolist(),
            "ul_se": self.ul_se.tolist(),
            "dl_se": self.dl_se.tolist(),
            "sum_se": self.sum_se,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def kappa_values_per_ap(stats: EstimationStats, ue_dl, n_antennas: int) -> np.ndarray:
    """Per-AP coefficient 1 / (N * sum_{n in U_d} alpha_jn^2), zero if U_d empty.

    The value does not depend on the served UE, so one number per AP row
    suffices; which rows count is decided by schedule membership.
    """
    num_aps = stats.alpha_sq.shape[0]
    ue_dl = np.asarray(ue_dl, dtype=int)
    if len(ue_dl) == 0:
        return np.zeros(num_aps)
    denom = n_antennas * stats.alpha_sq[:, ue_dl].sum(axis=1)
    out = np.zeros(num_aps)
    np.divide(1.0, denom, out=out, where=denom > 0)
    return out


def dl_power_coeffs(stats: EstimationStats, schedule: Schedule, n_antennas: int) -> np.ndarray:
    """(M, K) kappa matrix: populated on (j in A_d, n in U_d), zero elsewhere."""
    num_aps, num_ues = stats.alpha_sq.shape
    kappa = np.zeros((num_aps, num_ues))
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)
    if len(ap_dl) == 0 or len(ue_dl) == 0:
        return kappa
    per_ap = kappa_values_per_ap(stats, ue_dl, n_antennas)
    kappa[np.ix_(ap_dl, ue_dl)] = per_ap[ap_dl][:, None]
    return kappa


def _ul_sharers(assignment: PilotAssignment, k: int, is_ul: np.ndarray) -> np.ndarray:
    sharers = assignment.sharers(k)
    return sharers[is_ul[sharers]]


def _dl_sharers(assignment: PilotAssignment, n: int, is_dl: np.ndarray) -> np.ndarray:
    sharers = assignment.sharers(n)
    return sharers[is_dl[sharers]]


def ul_sinrs_mrc(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    n_antennas: int,
    noise_power: float,
) -> np.ndarray:
    """Uplink MRC SINR for every UE; zero outside ue_ul or when A_u is empty."""
    num_aps, num_ues = geometry.beta.shape
    sinr = np.zeros(num_ues)
    ap_ul = np.asarray(schedule.ap_ul, dtype=int)
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)
    if len(ap_ul) == 0 or len(ue_ul) == 0:
        return sinr

    n_ant = n_antennas
    eu = powers.ul_power
    ep = pilot_config.pilot_power
    alpha_u = stats.alpha_sq[ap_ul]
    beta_u = geometry.beta[ap_ul]
    is_ul = np.zeros(num_ues, dtype=bool)
    is_ul[ue_ul] = True

    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)
    # Residual DL leakage collapses to one weight per UL AP:
    #   iap_m = sum_{j in A_d} zeta_mj * E_d,j * sum_{n in U_d} kappa_jn^2 alpha_jn^2
    if len(ap_dl) > 0 and len(ue_dl) > 0:
        w_dl = powers.dl_power[ap_dl] * np.sum(
            powers.kappa[np.ix_(ap_dl, ue_dl)] ** 2 * stats.alpha_sq[np.ix_(ap_dl, ue_dl)],
            axis=1,
        )
        iap_per_ap = geometry.zeta[np.ix_(ap_ul, ap_dl)] @ w_dl
    else:
        iap_per_ap = np.zeros(len(ap_ul))

    beta_active = beta_u[:, ue_ul]
    eu_active = eu[ue_ul]
    for k in ue_ul:
        a_k = alpha_u[:, k]
        gain_sum = a_k.sum()
        if gain_sum <= 0:
            continue
        ncoh = float(eu_active @ (a_k @ beta_active))
        coh = 0.0
        for n in _ul_sharers(assignment, k, is_ul):
            t = float(np.sum(a_k * np.sqrt(ep[n] / ep[k]) * beta_u[:, n] / beta_u[:, k]))
            coh += eu[n] * t * t
        coh *= n_ant
        iap = n_ant * float(a_k @ iap_per_ap)
        denom = ncoh + coh + iap + noise_power * gain_sum
        sinr[k] = n_ant * eu[k] * gain_sum**2 / denom
    return sinr


def dl_sinrs_mfp(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    n_antennas: int,
    noise_power: float,
) -> np.ndarray:
    """Downlink matched-filter SINR per UE; zero outside ue_dl or when A_d empty."""
    num_aps, num_ues = geometry.beta.shape
    sinr = np.zeros(num_ues)
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)
    if len(ap_dl) == 0 or len(ue_dl) == 0:
        return sinr

    n_ant = n_antennas
    ed = powers.dl_power
    eu = powers.ul_power
    ep = pilot_config.pilot_power
    kappa = powers.kappa
    alpha_d = stats.alpha_sq[ap_dl]
    beta_d = geometry.beta[ap_dl]
    is_dl = np.zeros(num_ues, dtype=bool)
    is_dl[ue_dl] = True
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)

    sq_ed = np.sqrt(ed[ap_dl])
    # Shared non-coherent weight per DL AP, reused for every victim UE.
    w_dl = ed[ap_dl] * np.sum(
        kappa[np.ix_(ap_dl, ue_dl)] ** 2 * stats.alpha_sq[np.ix_(ap_dl, ue_dl)], axis=1
    )

    for n in ue_dl:
        gain = float(np.sum(kappa[ap_dl, n] * sq_ed * alpha_d[:, n]))
        if gain <= 0:
            continue
        num = n_ant**2 * gain**2
        ncoh = n_ant * float(w_dl @ beta_d[:, n])
        coh = 0.0
        for q in _dl_sharers(assignment, n, is_dl):
            t = float(
                np.sum(
                    sq_ed
                    * kappa[ap_dl, q]
                    * alpha_d[:, q]
                    * np.sqrt(ep[n] / ep[q])
                    * beta_d[:, n]
                    / beta_d[:, q]
                )
            )
            coh += t * t
        coh *= n_ant**2
        iu = float(eu[ue_ul] @ geometry.epsilon[n, ue_ul]) if len(ue_ul) else 0.0
        sinr[n] = num / (ncoh + coh + iu + noise_power)
    return sinr


def ul_sinr_mrc(k: int, *args, **kwargs) -> float:
    """Single-UE convenience wrapper around ul_sinrs_mrc."""
    return float(ul_sinrs_mrc(*args, **kwargs)[k])


def dl_sinr_mfp(n: int, *args, **kwargs) -> float:
    """Single-UE convenience wrapper around dl_sinrs_mfp."""
    return float(dl_sinrs_mfp(*args, **kwargs)[n])


def report_from_sinrs(
    ul_sinr: np.ndarray,
    dl_sinr: np.ndarray,
    ue_ul,
    ue_dl,
    prelog: float,
    ul_weight: float = 1.0,
    dl_weight: float = 1.0,
) -> SEReport:
    """Compose per-UE SEs and the pre-log-scaled sum.

    The direction weights are 1 for dynamic TDD, where the per-UE entries obey
    se = log2(1 + sinr) exactly; static-TDD frames fold each direction's share
    of the data phase into its entries so that the sum identity
    sum_se = prelog * (sum ul_se + sum dl_se) holds for every frame type.
    """
    ul_se = np.zeros_like(ul_sinr)
    dl_se = np.zeros_like(dl_sinr)
    ue_ul = np.asarray(ue_ul, dtype=int)
    ue_dl = np.asarray(ue_dl, dtype=int)
    if len(ue_ul):
        ul_se[ue_ul] = ul_weight * np.log2(1.0 + ul_sinr[ue_ul])
    if len(ue_dl):
        dl_se[ue_dl] = dl_weight * np.log2(1.0 + dl_sinr[ue_dl])
    sum_se = prelog * (ul_se.sum() + dl_se.sum())
    return SEReport(
        ul_sinr=ul_sinr, dl_sinr=dl_sinr, ul_se=ul_se, dl_se=dl_se, sum_se=float(sum_se)
    )


def sum_se(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    n_antennas: int,
    noise_power: float,
) -> SEReport:
    """Closed-form sum UL-DL SE for a complete schedule (Theorems 1-2 path)."""
    schedule.validate_complete(geometry.num_aps, geometry.num_ues)
    args = (schedule, stats, geometry, powers, assignment, pilot_config, n_antennas, noise_power)
    ul = ul_sinrs_mrc(*args)
    dl = dl_sinrs_mfp(*args)
    return report_from_sinrs(ul, dl, schedule.ue_ul, schedule.ue_dl, pilot_config.prelog)
