"""AP mode selection: greedy maximization of a product-SINR lower bound,
exhaustive search oracle, and submodularity/monotonicity audits.

The lower bound keeps only the coherent pilot-contamination interference, so
each UE contributes a ratio of per-AP gain sums to per-AP interference sums
over its serving set. Maximizing the sum of 2*log2(ratio) is equivalent to
maximizing the product of ratios, which is the set function the greedy
algorithm exploits. Ratios are clamped to [sinr_floor, sinr_cap] so that
unserved UEs (gain 0) and contamination-free UEs (interference 0) keep the
comparison finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .closed_form import (
    PowerConfig,
    Schedule,
    dl_power_coeffs,
    kappa_values_per_ap,
    report_from_sinrs,
    dl_sinrs_mfp,
    ul_sinrs_mrc,
)
from .estimation import EstimationStats, PilotAssignment, PilotConfig
from .geometry import NetworkGeometry

DEFAULT_SINR_FLOOR = 1e-9
DEFAULT_SINR_CAP = 1e9


@dataclass(frozen=True)
class SchedulingContext:
    """Everything a schedule search needs besides the AP set itself."""

    stats: EstimationStats
    geometry: NetworkGeometry
    powers: PowerConfig
    assignment: PilotAssignment
    pilot_config: PilotConfig
    ue_ul: tuple
    ue_dl: tuple
    n_antennas: int
    noise_power: float
    sinr_floor: float = DEFAULT_SINR_FLOOR
    sinr_cap: float = DEFAULT_SINR_CAP


@dataclass(frozen=True)
class GreedyObjectiveTerms:
    """Per-(AP, UE) gain and interference entries of the scheduling objective.

    g and i merge the UL and DL definitions column-wise: column k carries the
    UL terms if UE k demands uplink and the DL terms otherwise. The split
    matrices are kept for inspection and tests.
    """

    g_u: np.ndarray
    i_u: np.ndarray
    g_d: np.ndarray
    i_d: np.ndarray
    g: np.ndarray
    i: np.ndarray
    ue_is_ul: np.ndarray
    sinr_floor: float = DEFAULT_SINR_FLOOR
    sinr_cap: float = DEFAULT_SINR_CAP


@dataclass(frozen=True)
class ScheduleSearchResult:
    schedule: Schedule
    objective_value: float
    evaluations: int


def objective_terms(context: SchedulingContext) -> GreedyObjectiveTerms:
    """Populate G and I for every (AP, UE) pair.

    The DL coefficients enter through the per-AP kappa value, which depends
    only on the AP's own statistics and the DL demand set; schedule membership
    is applied later through the serving-set sums. Interference sums run over
    pilot sharers in the same demand direction, matching what actually leaks
    into the data phase.
    """
    stats, geometry = context.stats, context.geometry
    num_aps, num_ues = geometry.beta.shape
    eu = context.powers.ul_power
    ed = context.powers.dl_power
    ep = context.pilot_config.pilot_power
    alpha = stats.alpha_sq
    beta = geometry.beta

    ue_is_ul = np.zeros(num_ues, dtype=bool)
    ue_is_ul[list(context.ue_ul)] = True
    ue_is_dl = np.zeros(num_ues, dtype=bool)
    ue_is_dl[list(context.ue_dl)] = True

    kappa_ap = kappa_values_per_ap(stats, np.asarray(context.ue_dl, dtype=int), context.n_antennas)

    g_u = np.zeros((num_aps, num_ues))
    i_u = np.zeros((num_aps, num_ues))
    g_d = np.zeros((num_aps, num_ues))
    i_d = np.zeros((num_aps, num_ues))

    for k in range(num_ues):
        sharers = context.assignment.sharers(k)
        if ue_is_ul[k]:
            g_u[:, k] = np.sqrt(eu[k]) * alpha[:, k]
            for n in sharers[ue_is_ul[sharers]]:
                i_u[:, k] += (
                    np.sqrt(eu[n]) * alpha[:, k] * np.sqrt(ep[n] / ep[k]) * beta[:, n] / beta[:, k]
                )
        elif ue_is_dl[k]:
            g_d[:, k] = kappa_ap * np.sqrt(ed) * alpha[:, k]
            for q in sharers[ue_is_dl[sharers]]:
                i_d[:, k] += (
                    np.sqrt(ed) * kappa_ap * alpha[:, q] * np.sqrt(ep[k] / ep[q]) * beta[:, k] / beta[:, q]
                )

    g = np.where(ue_is_ul[None, :], g_u, g_d)
    i = np.where(ue_is_ul[None, :], i_u, i_d)
    return GreedyObjectiveTerms(
        g_u=g_u,
        i_u=i_u,
        g_d=g_d,
        i_d=i_d,
        g=g,
        i=i,
        ue_is_ul=ue_is_ul,
        sinr_floor=context.sinr_floor,
        sinr_cap=context.sinr_cap,
    )


def _clamped_ratios(sg: np.ndarray, si: np.ndarray, floor: float, cap: float) -> np.ndarray:
    ratio = np.full_like(sg, floor)
    served = sg > 0
    zero_int = served & (si <= 0)
    ratio[zero_int] = cap
    pos = served & (si > 0)
    ratio[pos] = np.clip(sg[pos] / si[pos], floor, cap)
    return ratio


def _cost_from_sums(sg: np.ndarray, si: np.ndarray, floor: float, cap: float) -> float:
    return float(2.0 * np.sum(np.log2(_clamped_ratios(sg, si, floor, cap))))


def _serving_sums(schedule: Schedule, terms: GreedyObjectiveTerms) -> tuple:
    num_ues = terms.g.shape[1]
    sg = np.zeros(num_ues)
    si = np.zeros(num_ues)
    ap_ul = list(schedule.ap_ul)
    ap_dl = list(schedule.ap_dl)
    if ap_ul:
        sg += np.where(terms.ue_is_ul, terms.g[ap_ul].sum(axis=0), 0.0)
        si += np.where(terms.ue_is_ul, terms.i[ap_ul].sum(axis=0), 0.0)
    if ap_dl:
        sg += np.where(~terms.ue_is_ul, terms.g[ap_dl].sum(axis=0), 0.0)
        si += np.where(~terms.ue_is_ul, terms.i[ap_dl].sum(axis=0), 0.0)
    return sg, si


def lower_bound_cost(schedule: Schedule, terms: GreedyObjectiveTerms) -> float:
    """Log-domain scheduling objective of a partial or complete schedule."""
    sg, si = _serving_sums(schedule, terms)
    return _cost_from_sums(sg, si, terms.sinr_floor, terms.sinr_cap)


def greedy_schedule(
    ap_set, context: SchedulingContext, metric: str = "lower_bound"
) -> ScheduleSearchResult:
    """Schedule every AP by repeatedly committing the best single-AP addition.

    Each step evaluates, for every unscheduled AP, the full-schedule value
    with the candidate tentatively added to the UL set and, separately, to
    the DL set; ties go to UL. Exactly M commit steps and at most M*(M+1)
    evaluations. metric "lower_bound" scores candidates with the clamped
    product-SINR cost; "true_sum_se" scores them with the closed-form sum SE,
    mirroring the exhaustive oracle's metric choices.
    """
    ap_set = sorted(int(m) for m in ap_set)
    if not ap_set:
        raise ValueError("ap_set must be nonempty")
    if metric not in ("lower_bound", "true_sum_se"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "true_sum_se":
        return _greedy_true_sum_se(ap_set, context)
    terms = objective_terms(context)
    floor, cap = terms.sinr_floor, terms.sinr_cap
    ue_is_ul = terms.ue_is_ul
    modes = _candidate_modes(context)

    sg = np.zeros(terms.g.shape[1])
    si = np.zeros(terms.g.shape[1])
    ap_ul: list = []
    ap_dl: list = []
    unscheduled = list(ap_set)
    evaluations = 0

    while unscheduled:
        best = None
        for mode in modes:
            mask = ue_is_ul if mode == "UL" else ~ue_is_ul
            for ap in unscheduled:
                cand_sg = sg + np.where(mask, terms.g[ap], 0.0)
                cand_si = si + np.where(mask, terms.i[ap], 0.0)
                cost = _cost_from_sums(cand_sg, cand_si, floor, cap)
                evaluations += 1
                # Strict > keeps ties on UL because UL candidates come first.
                if best is None or cost > best[0]:
                    best = (cost, mode, ap, cand_sg, cand_si)
        _, mode, ap, sg, si = best
        (ap_ul if mode == "UL" else ap_dl).append(ap)
        unscheduled.remove(ap)

    schedule = Schedule(
        ap_ul=tuple(ap_ul), ap_dl=tuple(ap_dl), ue_ul=context.ue_ul, ue_dl=context.ue_dl
    )
    return ScheduleSearchResult(
        schedule=schedule,
        objective_value=_cost_from_sums(sg, si, floor, cap),
        evaluations=evaluations,
    )


def _candidate_modes(context: SchedulingContext) -> tuple:
    """Candidate directions for greedy commits; a direction with no demanded
    UEs is inert (its additions serve nobody), so it is only offered when the
    other direction is empty too."""
    if len(context.ue_ul) == 0 and len(context.ue_dl) > 0:
        return ("DL",)
    if len(context.ue_dl) == 0 and len(context.ue_ul) > 0:
        return ("UL",)
    return ("UL", "DL")


def _greedy_true_sum_se(ap_set, context: SchedulingContext) -> ScheduleSearchResult:
    ap_ul: list = []
    ap_dl: list = []
    unscheduled = list(ap_set)
    evaluations = 0
    value = 0.0
    modes = _candidate_modes(context)
    while unscheduled:
        best = None
        for mode in modes:
            for ap in unscheduled:
                schedule = Schedule(
                    ap_ul=tuple(ap_ul + [ap]) if mode == "UL" else tuple(ap_ul),
                    ap_dl=tuple(ap_dl + [ap]) if mode == "DL" else tuple(ap_dl),
                    ue_ul=context.ue_ul,
                    ue_dl=context.ue_dl,
                )
                cost = _true_sum_se(schedule, context)
                evaluations += 1
                if best is None or cost > best[0]:
                    best = (cost, mode, ap)
        value, mode, ap = best
        (ap_ul if mode == "UL" else ap_dl).append(ap)
        unscheduled.remove(ap)
    schedule = Schedule(
        ap_ul=tuple(ap_ul), ap_dl=tuple(ap_dl), ue_ul=context.ue_ul, ue_dl=context.ue_dl
    )
    return ScheduleSearchResult(schedule=schedule, objective_value=value, evaluations=evaluations)


def empty_schedule_cost(context: SchedulingContext) -> float:
    """Cost of the all-unserved schedule, the f(empty)=0 baseline for the
    greedy approximation guarantee on the log-domain objective."""
    terms = objective_terms(context)
    empty = Schedule(ap_ul=(), ap_dl=(), ue_ul=context.ue_ul, ue_dl=context.ue_dl)
    return lower_bound_cost(empty, terms)


def _true_sum_se(schedule: Schedule, context: SchedulingContext) -> float:
    kappa = dl_power_coeffs(context.stats, schedule, context.n_antennas)
    powers = context.powers.with_kappa(kappa)
    args = (
        schedule,
        context.stats,
        context.geometry,
        powers,
        context.assignment,
        context.pilot_config,
        context.n_antennas,
        context.noise_power,
    )
    ul = ul_sinrs_mrc(*args)
    dl = dl_sinrs_mfp(*args)
    report = report_from_sinrs(ul, dl, context.ue_ul, context.ue_dl, context.pilot_config.prelog)
    return report.sum_se


def exhaustive_schedule(
    ap_set,
    context: SchedulingContext,
    metric: str = "lower_bound",
    max_aps: int = 16,
) -> ScheduleSearchResult:
    """Enumerate all 2^M mode assignments and return the best schedule.

    metric "lower_bound" scores with the greedy objective; "true_sum_se"
    scores with the closed-form sum SE, recomputing kappa per candidate DL
    set. Refuses AP sets larger than max_aps.
    """
    ap_set = sorted(int(m) for m in ap_set)
    m_total = len(ap_set)
    if m_total == 0:
        raise ValueError("ap_set must be nonempty")
    if m_total > max_aps:
        raise ValueError(f"exhaustive search over {m_total} APs exceeds the cap of {max_aps}")
    if metric not in ("lower_bound", "true_sum_se"):
        raise ValueError(f"unknown metric {metric!r}")

    terms = objective_terms(context) if metric == "lower_bound" else None
    best = None
    evaluations = 0
    for code in range(2**m_total):
        ap_ul = tuple(ap_set[i] for i in range(m_total) if code & (1 << i))
        ap_dl = tuple(ap_set[i] for i in range(m_total) if not code & (1 << i))
        schedule = Schedule(ap_ul=ap_ul, ap_dl=ap_dl, ue_ul=context.ue_ul, ue_dl=context.ue_dl)
        if metric == "lower_bound":
            value = lower_bound_cost(schedule, terms)
        else:
            value = _true_sum_se(schedule, context)
        evaluations += 1
        if best is None or value > best[0]:
            best = (value, schedule)
    return ScheduleSearchResult(schedule=best[1], objective_value=best[0], evaluations=evaluations)


@dataclass
class AuditReport:
    """Counts from randomized submodularity/monotonicity checks.

    checks counts increment checks on configurations free of clamping;
    clamped_checks counts the ones where some ratio hit a clamp bound and the
    clamped value was used instead. Violations are tallied per bucket, since
    only the clamp-free bucket speaks to the raw product-SINR property.
    """

    checks: int = 0
    clamped_checks: int = 0
    discarded: int = 0
    submodularity_violations: int = 0
    clamped_submodularity_violations: int = 0
    monotonicity_checks: int = 0
    monotonicity_violations: int = 0
    worst_submodularity_gap: float = 0.0
    examples: list = field(default_factory=list)


def product_sinr(ap_ul, ap_dl, terms: GreedyObjectiveTerms) -> tuple:
    """Product of per-UE ratios, clamped only where the raw value is 0 or
    unbounded; returns (value, clamped) where clamped marks such entries.

    An unserved UE would make the raw product ill-defined, so it contributes
    the floor value and trips the clamp flag; a contamination-free UE does the
    same through the cap.
    """
    schedule_sums = _serving_sums(
        Schedule(ap_ul=tuple(ap_ul), ap_dl=tuple(ap_dl), ue_ul=(), ue_dl=()), terms
    )
    sg, si = schedule_sums
    ratio = _clamped_ratios(sg, si, terms.sinr_floor, terms.sinr_cap)
    clamped = bool(np.any(ratio <= terms.sinr_floor) or np.any(ratio >= terms.sinr_cap))
    return float(np.prod(ratio)), clamped


def submodularity_audit(
    context: SchedulingContext,
    trials: int,
    rng: np.random.Generator,
    tolerance: float = 1e-9,
    keep_examples: int = 5,
) -> AuditReport:
    """Sample nested mode-labeled AP sets and check diminishing increments.

    Draws A_s subset A_t with a common random mode map and one extra AP j,
    seeding A_s with one AP of each demanded mode so every UE is served, then
    checks
        f(A_s + j) - f(A_s) >= f(A_t + j) - f(A_t)
    and monotone non-decrease at the given relative tolerance. Checks where
    any of the four configurations hit a clamp bound are tallied separately.
    The report records observed violations; it does not assert the property.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    terms = objective_terms(context)
    num_aps = context.geometry.num_aps
    report = AuditReport()
    need_ul = len(context.ue_ul) > 0
    need_dl = len(context.ue_dl) > 0

    for _ in range(trials):
        modes = rng.integers(0, 2, size=num_aps)  # 1 -> UL
        j = int(rng.integers(0, num_aps))
        rest = [m for m in range(num_aps) if m != j]
        rng.shuffle(rest)
        # Seed the small set so both demanded directions are served.
        seed: list = []
        if need_ul:
            ul_rest = [m for m in rest if modes[m] == 1]
            if not ul_rest:
                report.discarded += 1
                continue
            seed.append(ul_rest[0])
        if need_dl:
            dl_rest = [m for m in rest if modes[m] == 0 and m not in seed]
            if not dl_rest:
                report.discarded += 1
                continue
            seed.append(dl_rest[0])
        remaining = [m for m in rest if m not in seed]
        n_small = int(rng.integers(0, len(remaining) + 1))
        small = set(seed) | set(remaining[:n_small])
        n_big = int(rng.integers(n_small, len(remaining) + 1))
        big = set(seed) | set(remaining[:n_big])

        def split(aps):
            return (
                tuple(m for m in sorted(aps) if modes[m] == 1),
                tuple(m for m in sorted(aps) if modes[m] == 0),
            )

        f_vals = []
        any_clamped = False
        for aps in (small, small | {j}, big, big | {j}):
            value, clamped = product_sinr(*split(aps), terms)
            any_clamped |= clamped
            f_vals.append(value)

        f_s, f_sj, f_t, f_tj = f_vals
        scale = max(abs(v) for v in f_vals) or 1.0
        gap = (f_tj - f_t) - (f_sj - f_s)
        violated = gap > tolerance * scale
        if any_clamped:
            report.clamped_checks += 1
            report.clamped_submodularity_violations += int(violated)
        else:
            report.checks += 1
            if violated:
                report.submodularity_violations += 1
                report.worst_submodularity_gap = max(
                    report.worst_submodularity_gap, gap / scale
                )
                if len(report.examples) < keep_examples:
                    report.examples.append(
                        {"small": sorted(small), "big": sorted(big), "j": j, "gap": gap / scale}
                    )
        report.monotonicity_checks += 2
        if f_sj < f_s - tolerance * scale:
            report.monotonicity_violations += 1
        if f_tj < f_t - tolerance * scale:
            report.monotonicity_violations += 1

    return report
