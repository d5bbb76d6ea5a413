"""Signal-level Monte-Carlo oracles for validating closed-form SINRs.

These estimators simulate the pilot phase explicitly: true channels are drawn
i.i.d. at the pathloss variance, the shared pilot observation is formed with
receiver noise, and the LMMSE estimate is the scaled projection. Estimates of
pilot-sharing UEs therefore carry the exact cross-correlations that produce
coherent contamination, which is the effect the closed forms must reproduce.
Every expectation in the effective-SINR expressions is then estimated by
sample averaging, term by term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cellular import CellularLayout
from .closed_form import PowerConfig, Schedule
from .estimation import PilotAssignment, PilotConfig, complex_normal
from .geometry import NetworkGeometry


def simulate_pilot_phase(
    beta: np.ndarray,
    pilot_config: PilotConfig,
    assignment: PilotAssignment,
    noise_power: float,
    n_antennas: int,
    rng: np.random.Generator,
    batch: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw true channels and their LMMSE estimates from shared pilots.

    Returns (f, f_hat), both shaped (batch, M, N, K). The estimate of UE k is
    gain_mk times the projected pilot observation of k's group, so it embeds
    the channels of every UE sharing the pilot plus noise.
    """
    num_aps, num_ues = beta.shape
    tau_p = pilot_config.tau_p
    ep = pilot_config.pilot_power

    f = complex_normal(rng, (batch, num_aps, n_antennas, num_ues), beta[None, :, None, :])
    f_hat = np.zeros_like(f)
    for members in assignment.groups:
        if len(members) == 0:
            continue
        obs = np.einsum("bmnk,k->bmn", f[..., members], np.sqrt(tau_p * ep[members]))
        obs = obs + complex_normal(rng, obs.shape, noise_power)
        load = tau_p * (beta[:, members] @ ep[members]) + noise_power
        for k in members:
            gain = np.sqrt(tau_p * ep[k]) * beta[:, k] / load
            f_hat[..., k] = gain[None, :, None] * obs
    return f, f_hat


@dataclass
class UlOracleEstimate:
    """Term-by-term sample means of the uplink effective-SINR expression."""

    gain: float
    bu_var: float
    coherent_plus_noncoherent: dict
    inter_ap: float
    noise: float
    sinr: float


def oracle_ul_sinr(
    k: int,
    schedule: Schedule,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    n_antennas: int,
    noise_power: float,
    rng: np.random.Generator,
    n_realizations: int = 100_000,
    batch: int = 10_000,
) -> UlOracleEstimate:
    """Estimate the MRC uplink SINR of UE k from raw signal-model draws."""
    ap_ul = np.asarray(schedule.ap_ul, dtype=int)
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_ul = [n for n in schedule.ue_ul if n != k]
    ue_dl = list(schedule.ue_dl)
    eu = powers.ul_power
    ed = powers.dl_power
    kappa = powers.kappa

    sum_s = 0.0 + 0.0j
    sum_s2 = 0.0
    sum_t2 = {n: 0.0 for n in ue_ul}
    sum_iap2 = {n: 0.0 for n in ue_dl}
    sum_norm = 0.0
    done = 0
    while done < n_realizations:
        b = min(batch, n_realizations - done)
        f, f_hat = simulate_pilot_phase(
            geometry.beta, pilot_config, assignment, noise_power, n_antennas, rng, b
        )
        v = f_hat[..., k][:, ap_ul, :]
        s = np.einsum("bmn,bmn->b", v.conj(), f[..., k][:, ap_ul, :])
        sum_s += s.sum()
        sum_s2 += float(np.sum(np.abs(s) ** 2))
        sum_norm += float(np.sum(np.abs(v) ** 2))
        for n in ue_ul:
            t = np.einsum("bmn,bmn->b", v.conj(), f[..., n][:, ap_ul, :])
            sum_t2[n] += float(np.sum(np.abs(t) ** 2))
        if len(ap_dl) and len(ue_dl):
            g_cross = complex_normal(
                rng,
                (b, len(ap_ul), len(ap_dl), n_antennas, n_antennas),
                geometry.zeta[np.ix_(ap_ul, ap_dl)][None, :, :, None, None],
            )
            for n in ue_dl:
                w = kappa[ap_dl, n] * np.sqrt(ed[ap_dl])
                x = np.einsum(
                    "bmi,bmjio,bjo,j->b",
                    v.conj(),
                    g_cross,
                    f_hat[..., n][:, ap_dl, :].conj(),
                    w,
                )
                sum_iap2[n] += float(np.sum(np.abs(x) ** 2))
        done += b

    r = n_realizations
    mean_s = sum_s / r
    gain = eu[k] * abs(mean_s) ** 2
    bu_var = eu[k] * (sum_s2 / r - abs(mean_s) ** 2)
    mui = {n: eu[n] * sum_t2[n] / r for n in ue_ul}
    iap = sum(sum_iap2[n] / r for n in ue_dl)
    noise = noise_power * sum_norm / r
    denom = bu_var + sum(mui.values()) + iap + noise
    return UlOracleEstimate(
        gain=gain,
        bu_var=bu_var,
        coherent_plus_noncoherent=mui,
        inter_ap=iap,
        noise=noise,
        sinr=gain / denom,
    )


def oracle_dl_sinr(
    n: int,
    schedule: Schedule,
    geometry: NetworkGeometry,
    powers: PowerConfig,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    n_antennas: int,
    noise_power: float,
    rng: np.random.Generator,
    n_realizations: int = 100_000,
    batch: int = 10_000,
) -> float:
    """Estimate the matched-filter downlink SINR of UE n from signal draws."""
    ap_dl = np.asarray(schedule.ap_dl, dtype=int)
    ue_ul = np.asarray(schedule.ue_ul, dtype=int)
    ue_dl_other = [q for q in schedule.ue_dl if q != n]
    eu = powers.ul_power
    ed = powers.dl_power
    kappa = powers.kappa

    sum_d = 0.0 + 0.0j
    sum_d2 = 0.0
    sum_cross2 = {q: 0.0 for q in ue_dl_other}
    sum_cli = 0.0
    done = 0
    while done < n_realizations:
        b = min(batch, n_realizations - done)
        f, f_hat = simulate_pilot_phase(
            geometry.beta, pilot_config, assignment, noise_power, n_antennas, rng, b
        )
        f_n = f[..., n][:, ap_dl, :]
        w_n = kappa[ap_dl, n] * np.sqrt(ed[ap_dl])
        d = np.einsum("bmn,bmn,m->b", f_hat[..., n][:, ap_dl, :].conj(), f_n, w_n)
        sum_d += d.sum()
        sum_d2 += float(np.sum(np.abs(d) ** 2))
        for q in ue_dl_other:
            w_q = kappa[ap_dl, q] * np.sqrt(ed[ap_dl])
            x = np.einsum("bmn,bmn,m->b", f_hat[..., q][:, ap_dl, :].conj(), f_n, w_q)
            sum_cross2[q] += float(np.sum(np.abs(x) ** 2))
        if len(ue_ul):
            g = complex_normal(rng, (b, len(ue_ul)), geometry.epsilon[n, ue_ul][None, :])
            sum_cli += float(np.sum(np.abs(g) ** 2 @ eu[ue_ul]))
        done += b

    r = n_realizations
    mean_d = sum_d / r
    var_d = sum_d2 / r - abs(mean_d) ** 2
    cross = sum(v / r for v in sum_cross2.values())
    cli = sum_cli / r
    return abs(mean_d) ** 2 / (var_d + cross + cli + noise_power)


def empirical_estimate_variance(
    geometry: NetworkGeometry,
    pilot_config: PilotConfig,
    assignment: PilotAssignment,
    noise_power: float,
    n_antennas: int,
    rng: np.random.Generator,
    n_realizations: int = 50_000,
) -> np.ndarray:
    """Sample per-entry variance of the explicit pilot-phase estimates, (M, K)."""
    f, f_hat = simulate_pilot_phase(
        geometry.beta, pilot_config, assignment, noise_power, n_antennas, rng, n_realizations
    )
    return np.mean(np.abs(f_hat) ** 2, axis=(0, 2))


def oracle_fd_sinrs(
    layout: CellularLayout,
    assignment: PilotAssignment,
    pilot_config: PilotConfig,
    ue_ul,
    ue_dl,
    ul_power: np.ndarray,
    dl_power: np.ndarray,
    kappa: np.ndarray,
    noise_power: float,
    rng: np.random.Generator,
    n_realizations: int = 100_000,
    batch: int = 10_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Signal-level SINR estimates for the FD cellular system.

    MRC combining and MFP precoding at each BS on its own estimates; the
    receive and transmit arrays see independently estimated channels. Returns
    per-UE UL and DL SINR estimates (zeros outside the demand sets).
    """
    beta = layout.geometry.beta
    rho = layout.geometry.zeta
    epsilon = layout.geometry.epsilon
    cell_of = layout.cell_of
    n_rx, n_tx = layout.config.n_rx, layout.config.n_tx
    num_bs, num_ues = beta.shape
    ue_ul = np.asarray(ue_ul, dtype=int)
    ue_dl = np.asarray(ue_dl, dtype=int)

    ul_acc = {
        k: {"s": 0.0 + 0.0j, "s2": 0.0, "mui": 0.0, "ibs": 0.0, "norm": 0.0} for k in ue_ul
    }
    dl_acc = {
        n: {"d": 0.0 + 0.0j, "d2": 0.0, "cross": 0.0, "cli": 0.0} for n in ue_dl
    }

    done = 0
    while done < n_realizations:
        b = min(batch, n_realizations - done)
        f_u, f_hat_u = simulate_pilot_phase(
            beta, pilot_config, assignment, noise_power, n_rx, rng, b
        )
        f_d, f_hat_d = simulate_pilot_phase(
            beta, pilot_config, assignment, noise_power, n_tx, rng, b
        )
        t_cross = complex_normal(
            rng, (b, num_bs, num_bs, n_rx, n_tx), rho[None, :, :, None, None]
        )
        g_ue = complex_normal(rng, (b, num_ues, num_ues), epsilon[None, :, :])

        for k in ue_ul:
            home = cell_of[k]
            v = f_hat_u[:, home, :, k]
            s = np.einsum("bn,bn->b", v.conj(), f_u[:, home, :, k])
            acc = ul_acc[k]
            acc["s"] += s.sum()
            acc["s2"] += float(np.sum(np.abs(s) ** 2))
            acc["norm"] += float(np.sum(np.abs(v) ** 2))
            for kp in ue_ul:
                if kp == k:
                    continue
                t = np.einsum("bn,bn->b", v.conj(), f_u[:, home, :, kp])
                acc["mui"] += ul_power[kp] * float(np.sum(np.abs(t) ** 2))
            for n in ue_dl:
                bs = cell_of[n]
                if bs == home:
                    continue  # own self-interference is perfectly cancelled
                w = kappa[bs, n] * np.sqrt(dl_power[bs])
                x = w * np.einsum(
                    "bi,bio,bo->b", v.conj(), t_cross[:, home, bs], f_hat_d[:, bs, :, n].conj()
                )
                acc["ibs"] += float(np.sum(np.abs(x) ** 2))

        for n in ue_dl:
            home = cell_of[n]
            acc = dl_acc[n]
            w = kappa[home, n] * np.sqrt(dl_power[home])
            d = w * np.einsum("bo,bo->b", f_hat_d[:, home, :, n].conj(), f_d[:, home, :, n])
            acc["d"] += d.sum()
            acc["d2"] += float(np.sum(np.abs(d) ** 2))
            for q in ue_dl:
                if q == n:
                    continue
                bs = cell_of[q]
                wq = kappa[bs, q] * np.sqrt(dl_power[bs])
                x = wq * np.einsum(
                    "bo,bo->b", f_hat_d[:, bs, :, q].conj(), f_d[:, bs, :, n]
                )
                acc["cross"] += float(np.sum(np.abs(x) ** 2))
            if len(ue_ul):
                acc["cli"] += float(
                    np.sum(np.abs(g_ue[:, n, ue_ul]) ** 2 @ ul_power[ue_ul])
                )
        done += b

    r = n_realizations
    ul_sinr = np.zeros(num_ues)
    for k in ue_ul:
        acc = ul_acc[k]
        mean_s = acc["s"] / r
        gain = ul_power[k] * abs(mean_s) ** 2
        bu = ul_power[k] * (acc["s2"] / r - abs(mean_s) ** 2)
        denom = bu + acc["mui"] / r + acc["ibs"] / r + noise_power * acc["norm"] / r
        ul_sinr[k] = gain / denom

    dl_sinr = np.zeros(num_ues)
    for n in ue_dl:
        acc = dl_acc[n]
        mean_d = acc["d"] / r
        var_d = acc["d2"] / r - abs(mean_d) ** 2
        denom = var_d + acc["cross"] / r + acc["cli"] / r + noise_power
        dl_sinr[n] = abs(mean_d) ** 2 / denom

    return ul_sinr, dl_sinr
