"""Per-slot resource allocation.

The scheduler is a drift-plus-penalty step: queue pressure (local backlog
view plus a latency virtual queue) is traded against energy with weight V.
For the shared (beam, surface configuration) pair, a greedy sweep walks the
element groups in index order and keeps, per candidate beam, the group state
(off, or one of the 2^b quantized phases applied to the whole group) that
minimizes the surrogate objective

    J(w, phi) = sum_k [ sigma V tau_pay P*_k - W_k tau_pay R_k(P*_k) ]
                + (1 - sigma) tau_pay P_ris * (active element count)

with P*_k the closed-form water-filling power for the candidate gains. The
surface power enters unweighted by V: it acts as a tie-break toward "off"
rather than a hard veto (a V-weighted term would shut the surface down at
any practically calibrated V).

Transmit power is then re-sized so no UE schedules more bits than its
buffer holds: the rate cap binds the undiscounted rate at Q/tau_pay, so a
rate backoff mu_d < 1 deliberately leaves a (1 - mu_d) service shortfall.

The cycle count of the search is accounted with the closed-form expression
used for overhead bookkeeping, independent of the implementation's true
instruction count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .channel import Codebooks, RisConfiguration, power_for_rate
from .estimation import CsiEstimate
from .scenario import ScenarioConfig

LN2 = math.log(2.0)
_TINY = 1e-300

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:                                   # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):                        # type: ignore
        def deco(fn):
            return fn
        return deco if not (args and callable(args[0])) else args[0]


@dataclass
class RaDecision:
    """Output of one allocation round."""

    beam_idx: int
    ris_config: RisConfiguration
    power: np.ndarray          # (K,) W
    rate: np.ndarray           # (K,) bit/s scheduled (discounted)
    cpu: np.ndarray            # (K,) cycles/s
    n_ra: int                  # accounted cycles for the search
    tau_ra: float              # s
    objective: float


@dataclass
class VirtualQueueState:
    """Latency virtual queues, one per UE, in bits."""

    z: np.ndarray

    @classmethod
    def zeros(cls, num_ues: int) -> "VirtualQueueState":
        return cls(np.zeros(num_ues))


def ra_overhead(cfg: ScenarioConfig) -> Tuple[int, float]:
    """Accounted (cycles, seconds) of the joint beam/configuration search.

    mu_mult multiplications per objective evaluation, one evaluation per
    candidate state, per group, per beam.
    """
    k, m, n = cfg.num_ues, cfg.num_antennas, cfg.num_elements
    n_g = cfg.group_size
    mu_mult = 2 * (k * (3 * n // n_g + m + 4) + 3)
    n_ra = cfg.ap_codebook_size * (cfg.num_phases + 1) * (n // n_g) * mu_mult
    return n_ra, n_ra / cfg.f_ra


# ---------------------------------------------------------------------------
# greedy joint search over (beam, surface configuration)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _greedy_kernel(wd, vmat, n_groups, group_size, phases, w_k, sigma_v,
                   tau_pay, b_k, noise_bk, p_max, mu_d, ris_tie):
    """Group-sequential sweep for every candidate beam at once.

    wd:   (C, K) beamformed direct channels
    vmat: (C, K, N) beamformed per-element reflected contributions
    Returns per-beam (objective, phase indices, active flags).
    """
    c_ap, k_ues, n_el = vmat.shape
    n_states = phases.shape[0] + 1          # "off" plus each phase
    phase_idx = np.zeros((c_ap, n_el), np.int64)
    active = np.ones((c_ap, n_el), np.bool_)
    best_obj = np.zeros(c_ap)

    for c in range(c_ap):
        # start from all elements on at phase index 0
        g = np.zeros(k_ues, np.complex128)
        for k in range(k_ues):
            acc = wd[c, k]
            for n in range(n_el):
                acc += vmat[c, k, n]
            g[k] = acc
        n_act = n_el

        for grp in range(n_groups):
            lo = grp * group_size
            hi = lo + group_size
            cur = np.zeros(k_ues, np.complex128)
            vsum = np.zeros(k_ues, np.complex128)
            grp_on = active[c, lo]
            cur_phase = phases[phase_idx[c, lo]] if grp_on else 0.0 + 0.0j
            for k in range(k_ues):
                vs = 0.0 + 0.0j
                for n in range(lo, hi):
                    vs += vmat[c, k, n]
                vsum[k] = vs
                cur[k] = vs * cur_phase

            best_j = 1e300
            best_s = 0
            for s in range(n_states):
                if s == 0:
                    cand_act = n_act - (group_size if grp_on else 0)
                else:
                    cand_act = n_act + (0 if grp_on else group_size)
                obj = ris_tie * cand_act
                for k in range(k_ues):
                    if s == 0:
                        gk = g[k] - cur[k]
                    else:
                        gk = g[k] - cur[k] + phases[s - 1] * vsum[k]
                    gain = gk.real * gk.real + gk.imag * gk.imag
                    if gain > 0.0:
                        if sigma_v > 0.0:
                            p = w_k[k] * b_k / (sigma_v * 0.6931471805599453) \
                                - noise_bk / gain
                            if p < 0.0:
                                p = 0.0
                            elif p > p_max:
                                p = p_max
                        else:
                            p = p_max
                        r = mu_d * b_k * np.log2(1.0 + p * gain / noise_bk)
                    else:
                        p = 0.0
                        r = 0.0
                    obj += sigma_v * tau_pay * p - w_k[k] * tau_pay * r
                if obj < best_j:
                    best_j = obj
                    best_s = s

            # apply the winning state to the group
            if best_s == 0:
                for n in range(lo, hi):
                    active[c, n] = False
                    phase_idx[c, n] = 0
                for k in range(k_ues):
                    g[k] = g[k] - cur[k]
                n_act -= group_size if grp_on else 0
            else:
                for n in range(lo, hi):
                    active[c, n] = True
                    phase_idx[c, n] = best_s - 1
                for k in range(k_ues):
                    g[k] = g[k] - cur[k] + phases[best_s - 1] * vsum[k]
                n_act += 0 if grp_on else group_size
            best_obj[c] = best_j

    return best_obj, phase_idx, active


def _greedy_numpy(wd, vmat, n_groups, group_size, phases, w_k, sigma_v,
                  tau_pay, b_k, noise_bk, p_max, mu_d, ris_tie):
    """Vectorized reference implementation of `_greedy_kernel`."""
    c_ap, k_ues, n_el = vmat.shape
    n_states = len(phases) + 1
    phi = np.ones((c_ap, n_el), complex)
    active = np.ones((c_ap, n_el), bool)
    phase_idx = np.zeros((c_ap, n_el), np.int64)
    g = wd + vmat.sum(axis=2)
    n_act = np.full(c_ap, n_el, float)
    best_obj = np.zeros(c_ap)

    for grp in range(n_groups):
        lo, hi = grp * group_size, (grp + 1) * group_size
        cur = np.einsum("ckn,cn->ck", vmat[:, :, lo:hi], phi[:, lo:hi])
        vsum = vmat[:, :, lo:hi].sum(axis=2)
        grp_on = active[:, lo]

        cand = np.empty((n_states, c_ap, k_ues), complex)
        cand[0] = g - cur
        for s in range(1, n_states):
            cand[s] = g - cur + phases[s - 1] * vsum
        gain = np.abs(cand) ** 2

        if sigma_v > 0.0:
            p = w_k[None, None, :] * b_k / (sigma_v * LN2) \
                - noise_bk / np.maximum(gain, _TINY)
            p = np.clip(p, 0.0, p_max)
        else:
            p = np.full_like(gain, p_max)
        p = np.where(gain > 0.0, p, 0.0)
        r = mu_d * b_k * np.log2(1.0 + p * gain / noise_bk)

        cand_act = np.empty((n_states, c_ap))
        cand_act[0] = n_act - np.where(grp_on, group_size, 0)
        cand_act[1:] = (n_act + np.where(grp_on, 0, group_size))[None, :]
        obj = (sigma_v * tau_pay * p - w_k[None, None, :] * tau_pay * r).sum(axis=2)
        obj += ris_tie * cand_act

        best = obj.argmin(axis=0)
        pick = np.arange(c_ap)
        best_obj = obj[best, pick]
        g = cand[best, pick]
        n_act = cand_act[best, pick]
        off = best == 0
        active[:, lo:hi] = ~off[:, None]
        phase_idx[:, lo:hi] = np.where(off, 0, best - 1)[:, None]
        phi[:, lo:hi] = np.where(off[:, None], 0.0,
                                 np.asarray(phases)[np.where(off, 0, best - 1)][:, None])
    return best_obj, phase_idx, active


def surrogate_objective(csi: CsiEstimate, weights: np.ndarray,
                        codebooks: Codebooks, cfg: ScenarioConfig,
                        tau_pay: float, beam_idx: int,
                        ris: RisConfiguration) -> float:
    """Evaluate the search objective for one explicit (beam, configuration).

    Matches what the greedy sweep minimizes; power here is the uncapped
    closed form (selection ignores buffer caps).
    """
    beam = codebooks.ap_beams[beam_idx]
    phasor = ris.phasor
    b_k = cfg.bandwidth_per_ue
    noise = cfg.noise_power_per_ue
    sigma_v = cfg.energy_weight * cfg.lyapunov_v
    ris_tie = (1.0 - cfg.energy_weight) * tau_pay * cfg.ris_element_power
    total = ris_tie * ris.num_active
    for k in range(cfg.num_ues):
        g = np.vdot(beam, csi.direct[k] + csi.cascade[k] @ phasor)
        gain = abs(g) ** 2
        if gain <= 0.0:
            continue
        if sigma_v > 0.0:
            p = weights[k] * b_k / (sigma_v * LN2) - noise / gain
            p = min(max(p, 0.0), cfg.p_max_ue)
        else:
            p = cfg.p_max_ue
        r = cfg.rate_backoff * b_k * math.log2(1.0 + p * gain / noise)
        total += sigma_v * tau_pay * p - weights[k] * tau_pay * r
    return float(total)


def greedy_joint_search(csi: CsiEstimate, weights: np.ndarray,
                        codebooks: Codebooks, cfg: ScenarioConfig,
                        tau_pay: float,
                        use_numba: Optional[bool] = None
                        ) -> Tuple[int, RisConfiguration, float]:
    """Pick the (beam, surface configuration) pair minimizing the surrogate.

    Invalid CSI short-circuits to the control fallback (beam 0, control
    configuration); the caller must zero all rates in that case.
    """
    if not csi.valid:
        return 0, codebooks.ctl_config, 0.0

    beams = codebooks.ap_beams
    wd = beams.conj() @ csi.direct.T                       # (C, K)
    vmat = np.einsum("cm,kmn->ckn", beams.conj(), csi.cascade)
    phases = np.exp(2j * np.pi * np.arange(cfg.num_phases) / cfg.num_phases)
    args = (
        wd.astype(np.complex128), vmat.astype(np.complex128),
        cfg.num_elements // cfg.group_size, cfg.group_size, phases,
        np.asarray(weights, float),
        cfg.energy_weight * cfg.lyapunov_v, tau_pay,
        cfg.bandwidth_per_ue, cfg.noise_power_per_ue,
        cfg.p_max_ue, cfg.rate_backoff,
        (1.0 - cfg.energy_weight) * tau_pay * cfg.ris_element_power,
    )
    if use_numba is None:
        use_numba = _HAVE_NUMBA
    impl = _greedy_kernel if use_numba else _greedy_numpy
    best_obj, phase_idx, active = impl(*args)

    best = int(np.argmin(best_obj))
    ris = RisConfiguration(active[best].copy(), phase_idx[best].copy(),
                           cfg.phase_bits)
    return best, ris, float(best_obj[best])


# ---------------------------------------------------------------------------
# power, CPU, virtual queues
# ---------------------------------------------------------------------------

def allocate_power(gains: np.ndarray, weights: np.ndarray,
                   buffers: np.ndarray, cfg: ScenarioConfig,
                   tau_pay: float) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form per-UE power and the scheduled (discounted, capped) rate.

    P* = clip(W B / (sigma V ln2) - N0 B / gain, 0, P_max); sigma V = 0
    degenerates to P_max. Power is then lowered to the level that fills the
    buffer exactly (undiscounted), so pressure spikes never burn energy on
    bits that do not exist.
    """
    k = cfg.num_ues
    b_k = cfg.bandwidth_per_ue
    noise = cfg.noise_power_per_ue
    sigma_v = cfg.energy_weight * cfg.lyapunov_v
    power = np.zeros(k)
    rate = np.zeros(k)
    for i in range(k):
        gain = float(gains[i])
        if gain <= 0.0:
            continue
        if sigma_v > 0.0:
            p_star = weights[i] * b_k / (sigma_v * LN2) - noise / gain
            p_star = min(max(p_star, 0.0), cfg.p_max_ue)
        else:
            p_star = cfg.p_max_ue
        if p_star <= 0.0:
            continue
        # never schedule more bits than the buffer holds
        full_rate = b_k * math.log2(1.0 + p_star * gain / noise)
        cap_rate = buffers[i] / tau_pay
        if full_rate > cap_rate:
            p_star = (2.0 ** (cap_rate / b_k) - 1.0) * noise / gain
            full_rate = cap_rate
        power[i] = p_star
        rate[i] = cfg.rate_backoff * b_k * math.log2(1.0 + p_star * gain / noise)
    return power, rate


def allocate_cpu(remote_queues: np.ndarray, vq: VirtualQueueState,
                 cfg: ScenarioConfig, tau_pay: float) -> np.ndarray:
    """Max-weight greedy CPU split; leftover cycles stay idle.

    UEs are served in descending (Q_e + Z) J order, each getting exactly the
    frequency that empties its remote queue within the payload window,
    subject to the remaining budget.
    """
    j_k = cfg.per_ue("bits_per_cycle")
    weight = (remote_queues + vq.z) * j_k
    order = np.argsort(-weight, kind="stable")
    f = np.zeros(cfg.num_ues)
    remaining = cfg.f_max
    for i in order:
        if remaining <= 0.0:
            break
        need = remote_queues[i] / (tau_pay * j_k[i])
        f[i] = min(remaining, need)
        remaining -= f[i]
    return f


def update_virtual_queues(vq: VirtualQueueState, total_queues: np.ndarray,
                          cfg: ScenarioConfig) -> VirtualQueueState:
    """Z <- max(0, Z + Q(t+1) - arrival_rate * latency_bound)."""
    target = cfg.per_ue("arrival_rate") * cfg.latency_bound
    return VirtualQueueState(np.maximum(0.0, vq.z + total_queues - target))


# ---------------------------------------------------------------------------
# trade-off weight calibration
# ---------------------------------------------------------------------------

@dataclass
class CalibrationResult:
    v: float
    feasible: bool
    target: float
    evaluations: List[Tuple[float, float]] = field(default_factory=list)
    monotonicity_violations: int = 0


def calibrate_v(cfg: ScenarioConfig, lo: float = 1.0, hi: float = 1e20,
                steps: int = 16, seeds: int = 12,
                target: Optional[float] = None,
                probe_points: int = 0) -> CalibrationResult:
    """Largest V whose mean max-UE latency stays at or below the target.

    Log-scale bisection on error-free runs (perfect CSI, no packet losses,
    no rate backoff); each probe averages `seeds` independent runs. Returns
    the range endpoint with a cleared `feasible` flag when even the lower
    endpoint misses the target.
    """
    from .engine import run  # deferred: engine depends on this module

    if target is None:
        target = cfg.latency_bound
    base = cfg.with_overrides(
        ce_mode="perfect", rate_backoff=1.0,
        loss_prob_ini_u=0.0, loss_prob_ini_r=0.0,
        loss_prob_set_u=0.0, loss_prob_set_r=0.0,
    )
    result = CalibrationResult(v=lo, feasible=True, target=target)

    def metric(v: float) -> float:
        vals = []
        for s in range(seeds):
            out = run(base.with_overrides(lyapunov_v=v, rng_seed=cfg.rng_seed + s),
                      collect_trace=False)
            vals.append(out.summary.max_final_latency)
        val = float(np.mean(vals))
        result.evaluations.append((v, val))
        return val

    if probe_points > 1:
        grid = np.logspace(math.log10(lo), math.log10(hi), probe_points)
        vals = [metric(v) for v in grid]
        result.monotonicity_violations = int(
            np.sum(np.diff(vals) < -1e-9 * np.maximum(vals[:-1], 1e-12))
        )

    if metric(lo) > target:
        result.v = lo
        result.feasible = False
        return result
    if metric(hi) <= target:
        result.v = hi
        return result

    llo, lhi = math.log10(lo), math.log10(hi)
    for _ in range(steps):
        mid = 10 ** ((llo + lhi) / 2.0)
        if metric(mid) <= target:
            llo = math.log10(mid)
        else:
            lhi = math.log10(mid)
    result.v = 10 ** llo
    return result
