"""Monte-Carlo spectral efficiency under centralized MMSE combining and RZF
precoding, with matched-filter variants for cross-checks.

Uplink SINRs are conditional on the stacked channel estimates: the
estimation error and the residual DL-AP leakage enter through a known
block-diagonal covariance, so the combiner whitens them. Downlink SEs use
the use-and-then-forget bound, estimating the mean effective channel and its
fluctuations by sample averaging across realizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closed_form import PowerConfig, Schedule, SEReport, dl_power_coeffs, report_from_sinrs
from .estimation import EstimationStats, PilotAssignment, PilotConfig, complex_normal
from .geometry import NetworkGeometry


@dataclass(frozen=True)
class McParams:
    """Realization count, RZF regularization, and the per-antenna DL budget.

    rzf_xi defaults to the noise power when left unset.
    """

    n_realizations: int = 200
    rzf_xi: float | None = None
    dl_per_antenna_power: float = 1.0

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if self.rzf_xi is not None and not self.rzf_xi > 0:
            raise ValueError(f"rzf_xi must be > 0, got {self.rzf_xi}")
        if not self.dl_per_antenna_power > 0:
            raise ValueError("dl_per_antenna_power must be > 0")

    def xi(self, noise_power: float) -> float:
        return self.rzf_xi if self.rzf_xi is not None else noise_power


@dataclass(frozen=True)
class StackedRealization:
    """Stacked channel draws for one coherence interval.

    Uplink arrays stack the UL APs' antennas (rows) against UL UEs (columns);
    downlink arrays do the same for DL APs and DL UEs. g_cross holds the
    residual channel between the DL and UL AP antenna stacks.
    """

    f_hat_ul: np.ndarray
    f_err_ul: np.ndarray
    f_hat_dl: np.ndarray
    f_err_dl: np.ndarray
    g_cross: np.ndarray

    @property
    def f_ul(self) -> np.ndarray:
        return self.f_hat_ul + self.f_err_ul

    @property
    def f_dl(self) -> np.ndarray:
        return self.f_hat_dl + self.f_err_dl


def _stack_variances(var_ap_ue: np.ndarray, n_antennas: int) -> np.ndarray:
    return np.repeat(var_ap_ue, n_antennas, axis=0)


def draw_stacked_realization(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    n_antennas: int,
    rng: np.random.Generator,
) -> StackedRealization:
    ap_ul = np.asarray(schedule.ap_ul, dtype=int)
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)

    def draw_pair(aps, ues):
        if len(aps) == 0 or len(ues) == 0:
            return (
                np.zeros((len(aps) * n_antennas, len(ues)), dtype=complex),
                np.zeros((len(aps) * n_antennas, len(ues)), dtype=complex),
            )
        var_hat = _stack_variances(stats.alpha_sq[np.ix_(aps, ues)], n_antennas)
        var_err = _stack_variances(stats.alpha_bar_sq[np.ix_(aps, ues)], n_antennas)
        return (
            complex_normal(rng, var_hat.shape, var_hat),
            complex_normal(rng, var_err.shape, var_err),
        )

    f_hat_ul, f_err_ul = draw_pair(ap_ul, ue_ul)
    f_hat_dl, f_err_dl = draw_pair(ap_dl, ue_dl)

    if len(ap_ul) and len(ap_dl):
        var_g = np.kron(
            geometry.zeta[np.ix_(ap_ul, ap_dl)], np.ones((n_antennas, n_antennas))
        )
        g_cross = complex_normal(rng, var_g.shape, var_g)
    else:
        g_cross = np.zeros((len(ap_ul) * n_antennas, len(ap_dl) * n_antennas), dtype=complex)

    return StackedRealization(
        f_hat_ul=f_hat_ul,
        f_err_ul=f_err_ul,
        f_hat_dl=f_hat_dl,
        f_err_dl=f_err_dl,
        g_cross=g_cross,
    )


def rzf_precoder(
    f_hat_dl: np.ndarray, xi: float, n_antennas: int, per_antenna_power: float
) -> tuple[np.ndarray, float]:
    """Regularized zero-forcing precoder with the min-rule power normalization.

    Returns the scaled precoder and kappa; after scaling, every DL AP
    satisfies tr(P_j P_j^H) <= N * E_d with equality at the binding AP.
    """
    dim, num_dl_ues = f_hat_dl.shape
    if num_dl_ues == 0 or dim == 0:
        return f_hat_dl.copy(), 0.0
    q_d = f_hat_dl @ f_hat_dl.conj().T + xi * np.eye(dim)
    p0 = np.linalg.solve(q_d, f_hat_dl)
    blocks = p0.reshape(dim // n_antennas, n_antennas, num_dl_ues)
    traces = np.sum(np.abs(blocks) ** 2, axis=(1, 2))
    kappa_sq = np.min(n_antennas * per_antenna_power / np.maximum(traces, 1e-300))
    kappa = float(np.sqrt(kappa_sq))
    return kappa * p0, kappa


def mfp_precoder(
    f_hat_dl: np.ndarray,
    schedule: Schedule,
    powers: PowerConfig,
    n_antennas: int,
) -> np.ndarray:
    """Matched-filter direction with the closed-form per-AP power coefficients.

    Column n is the stacked estimate scaled by kappa_jn * sqrt(E_d,j) per AP
    block, so the Monte-Carlo bound on this precoder targets the same signal
    model as the closed-form downlink SINR.
    """
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)
    scale = powers.kappa[np.ix_(ap_dl, ue_dl)] * np.sqrt(powers.dl_power[ap_dl])[:, None]
    return f_hat_dl * _stack_variances(scale, n_antennas)


def per_ap_traces(precoder: np.ndarray, n_antennas: int) -> np.ndarray:
    """tr(P_j P_j^H) for each DL AP block of a stacked precoder."""
    if precoder.size == 0:
        return np.zeros(precoder.shape[0] // max(n_antennas, 1))
    blocks = precoder.reshape(-1, n_antennas, precoder.shape[1])
    return np.sum(np.abs(blocks) ** 2, axis=(1, 2))


def ul_interference_diagonal(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    n_antennas: int,
    dl_traces: np.ndarray | None,
) -> np.ndarray:
    """Diagonal of the estimation-error plus DL-leakage covariance.

    Per UL AP m the covariance is a scaled identity: the error part sums
    E_u,k * alpha_bar_mk^2 over UL UEs, and the leakage part sums
    zeta_mj * tr(P_j P_j^H) over DL APs; antenna blocks repeat the scalar.
    """
    ap_ul = np.asarray(schedule.ap_ul, dtype=int)
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    per_ap = np.zeros(len(ap_ul))
    if len(ue_ul):
        per_ap += stats.alpha_bar_sq[np.ix_(ap_ul, ue_ul)] @ powers.ul_power[ue_ul]
    if dl_traces is not None and len(ap_dl):
        per_ap += geometry.zeta[np.ix_(ap_ul, ap_dl)] @ dl_traces
    return np.repeat(per_ap, n_antennas)


def sampled_cli_covariance(g_cross: np.ndarray, precoder: np.ndarray) -> np.ndarray:
    """Single-realization DL-leakage covariance sum_n (G p_n)(G p_n)^H.

    Validation-path alternative to the closed-form diagonal above.
    """
    gp = g_cross @ precoder
    return gp @ gp.conj().T


def ul_sinrs_for_combiner(
    combiner: np.ndarray,
    f_hat_ul: np.ndarray,
    ul_power: np.ndarray,
    r_diag: np.ndarray,
    noise_power: float,
) -> np.ndarray:
    """Conditional UL SINR of each UE for an arbitrary stacked combiner."""
    cross = combiner.conj().T @ f_hat_ul
    quad = np.real(
        np.einsum("dk,d,dk->k", combiner.conj(), r_diag + noise_power, combiner)
    )
    power_cross = ul_power[None, :] * np.abs(cross) ** 2
    signal = np.diag(power_cross)
    interference = power_cross.sum(axis=1) - signal
    return signal / (interference + quad)


def mmse_combiner(
    f_hat_ul: np.ndarray, ul_power: np.ndarray, r_diag: np.ndarray, noise_power: float
) -> np.ndarray:
    dim = f_hat_ul.shape[0]
    q_u = (f_hat_ul * ul_power[None, :]) @ f_hat_ul.conj().T
    q_u += np.diag(r_diag) + noise_power * np.eye(dim)
    return np.linalg.solve(q_u, f_hat_ul)


def mc_sum_se(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    n_antennas: int,
    noise_power: float,
    params: McParams,
    rng: np.random.Generator,
    processing: str = "mmse_rzf",
) -> SEReport:
    """Monte-Carlo sum UL-DL SE for a complete schedule.

    processing "mmse_rzf" uses the centralized MMSE combiner and the RZF
    precoder; "mrc_mfp" keeps the same estimator but substitutes matched
    filters, which is the consistency bridge to the closed forms. Uplink SE
    averages log2(1 + sinr) across realizations; downlink SE applies the
    use-and-then-forget bound to the accumulated statistics. Reported SINR
    entries are the effective values 2^se - 1 so the report invariants hold.
    """
    if processing not in ("mmse_rzf", "mrc_mfp"):
        raise ValueError(f"unknown processing {processing!r}")
    schedule.validate_complete(geometry.num_aps, geometry.num_ues)
    num_ues = geometry.num_ues
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)
    have_ul = len(schedule.ap_ul) > 0 and len(ue_ul) > 0
    have_dl = len(schedule.ap_dl) > 0 and len(ue_dl) > 0
    xi = params.xi(noise_power)

    ul_se_acc = np.zeros(len(ue_ul))
    dl_mean = np.zeros(len(ue_dl), dtype=complex)
    dl_sq = np.zeros(len(ue_dl))
    dl_cross = np.zeros((len(ue_dl), len(ue_dl)))

    for _ in range(params.n_realizations):
        real = draw_stacked_realization(schedule, stats, geometry, n_antennas, rng)

        precoder = None
        traces = None
        if have_dl:
            if processing == "mmse_rzf":
                precoder, _ = rzf_precoder(
                    real.f_hat_dl, xi, n_antennas, params.dl_per_antenna_power
                )
            else:
                precoder = mfp_precoder(real.f_hat_dl, schedule, powers, n_antennas)
            traces = per_ap_traces(precoder, n_antennas)
            gains = real.f_dl.conj().T @ precoder
            diag = np.diag(gains)
            dl_mean += diag
            dl_sq += np.abs(diag) ** 2
            dl_cross += np.abs(gains) ** 2

        if have_ul:
            r_diag = ul_interference_diagonal(
                schedule, stats, geometry, powers, n_antennas, traces
            )
            if processing == "mmse_rzf":
                combiner = mmse_combiner(
                    real.f_hat_ul, powers.ul_power[ue_ul], r_diag, noise_power
                )
            else:
                combiner = real.f_hat_ul
            sinrs = ul_sinrs_for_combiner(
                combiner, real.f_hat_ul, powers.ul_power[ue_ul], r_diag, noise_power
            )
            ul_se_acc += np.log2(1.0 + sinrs)

    ul_se = np.zeros(num_ues)
    dl_se = np.zeros(num_ues)
    if have_ul:
        ul_se[ue_ul] = ul_se_acc / params.n_realizations
    if have_dl:
        r = params.n_realizations
        mean = dl_mean / r
        var = np.maximum(dl_sq / r - np.abs(mean) ** 2, 0.0)
        cross = dl_cross / r
        inter = cross.sum(axis=1) - np.diag(cross)
        cli = geometry.epsilon[np.ix_(ue_dl, ue_ul)] @ powers.ul_power[ue_ul] if len(ue_ul) else 0.0
        sinr_dl = np.abs(mean) ** 2 / (var + inter + cli + noise_power)
        dl_se[ue_dl] = np.log2(1.0 + sinr_dl)

    prelog = pilot_config.prelog
    ul_sinr = np.exp2(ul_se) - 1.0
    dl_sinr = np.exp2(dl_se) - 1.0
    sum_val = prelog * (ul_se.sum() + dl_se.sum())
    return SEReport(ul_sinr=ul_sinr, dl_sinr=dl_sinr, ul_se=ul_se, dl_se=dl_se, sum_se=float(sum_val))


def dl_uatf_sinrs(
    schedule: Schedule,
    stats: EstimationStats,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    n_antennas: int,
    noise_power: float,
    n_realizations: int,
    rng: np.random.Generator,
    precoder_kind: str = "mfp",
    xi: float | None = None,
    per_antenna_power: float = 1.0,
) -> np.ndarray:
    """Downlink use-and-then-forget SINR estimates for one precoder family.

    The matched-filter variant converges to the closed-form downlink SINR,
    which is the estimator-consistency check the test suite pins down.
    """
    ue_dl = np.asarray(schedule.ue_dl, dtype=int)
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)
    mean = np.zeros(len(ue_dl), dtype=complex)
    sq = np.zeros(len(ue_dl))
    cross = np.zeros((len(ue_dl), len(ue_dl)))
    for _ in range(n_realizations):
        real = draw_stacked_realization(schedule, stats, geometry, n_antennas, rng)
        if precoder_kind == "mfp":
            precoder = mfp_precoder(real.f_hat_dl, schedule, powers, n_antennas)
        else:
            precoder, _ = rzf_precoder(real.f_hat_dl, xi, n_antennas, per_antenna_power)
        gains = real.f_dl.conj().T @ precoder
        diag = np.diag(gains)
        mean += diag
        sq += np.abs(diag) ** 2
        cross += np.abs(gains) ** 2
    mean /= n_realizations
    var = np.maximum(sq / n_realizations - np.abs(mean) ** 2, 0.0)
    cross /= n_realizations
    inter = cross.sum(axis=1) - np.diag(cross)
    cli = geometry.epsilon[np.ix_(ue_dl, ue_ul)] @ powers.ul_power[ue_ul] if len(ue_ul) else 0.0
    return np.abs(mean) ** 2 / (var + inter + cli + noise_power)
