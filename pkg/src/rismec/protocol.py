"""Slot protocol: timing split, control packet outcomes, and loss effects.

Each slot runs four phases: an initialization signaling phase (ACKs, queue
reports from the UEs, the sounding start command to the surface), the
algorithmic phase (channel sounding plus the allocation computation), a
setup signaling phase (per-UE power/rate commands, the configuration
command to the surface), and the payload phase. Four control packets can be
lost, each with its own probability: the per-UE queue report (INI_U), the
sounding start command (INI_R), the per-UE parameter command (SET_U), and
the configuration command (SET_R). ACKs are never lost, and the backhaul to
the edge server is ideal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .allocation import RaDecision, ra_overhead
from .channel import RisConfiguration
from .scenario import ScenarioConfig


class InfeasibleSlotError(ValueError):
    """The control overhead does not fit into the configured slot."""


@dataclass(frozen=True)
class SlotTiming:
    """Durations of the slot phases, all in seconds."""

    tau_ini: float
    tau_ce: float
    tau_ra: float
    tau_set: float
    tau_pay: float

    @property
    def tau_ctl(self) -> float:
        return self.tau_ini + self.tau_ce + self.tau_ra + self.tau_set

    @property
    def tau(self) -> float:
        return self.tau_ctl + self.tau_pay


def compute_timing(cfg: ScenarioConfig) -> SlotTiming:
    """Fill the phase durations; the payload gets whatever the slot leaves.

    tau_ini = tau_s + 3T (ACK round, queue reports, sounding start);
    tau_ce  = (tau_s + N_p T)(C_ce + 1) (direct round plus one per sweep);
    tau_set = 2 tau_s + 2T (parameter and configuration commands);
    tau_ra  from the accounted search cycles.
    """
    t = cfg.tti
    tau_ini = cfg.ris_switch + 3.0 * t
    tau_ce = (cfg.ris_switch + cfg.pilot_len * t) * (cfg.ce_codebook_size + 1)
    _, tau_ra = ra_overhead(cfg)
    tau_set = 2.0 * cfg.ris_switch + 2.0 * t
    tau_ctl = tau_ini + tau_ce + tau_ra + tau_set
    if cfg.slot <= tau_ctl:
        raise InfeasibleSlotError(
            f"slot {cfg.slot:.6g} s does not exceed control overhead "
            f"{tau_ctl:.6g} s"
        )
    return SlotTiming(tau_ini, tau_ce, tau_ra, tau_set, cfg.slot - tau_ctl)


@dataclass
class PacketOutcomes:
    """Loss flags for one slot; per-UE packets carry one flag per UE."""

    ini_u_lost: np.ndarray     # (K,) bool
    ini_r_lost: bool
    set_u_lost: np.ndarray     # (K,) bool
    set_r_lost: bool

    @classmethod
    def none(cls, num_ues: int) -> "PacketOutcomes":
        return cls(np.zeros(num_ues, bool), False, np.zeros(num_ues, bool), False)


def sample_outcomes(rng: np.random.Generator, cfg: ScenarioConfig) -> PacketOutcomes:
    """Independent Bernoulli losses per packet instance."""
    k = cfg.num_ues
    return PacketOutcomes(
        ini_u_lost=rng.random(k) < cfg.loss_prob_ini_u,
        ini_r_lost=bool(rng.random() < cfg.loss_prob_ini_r),
        set_u_lost=rng.random(k) < cfg.loss_prob_set_u,
        set_r_lost=bool(rng.random() < cfg.loss_prob_set_r),
    )


@dataclass
class EffectiveDecision:
    """What the nodes actually apply during the payload phase."""

    power: np.ndarray                 # (K,) W actually transmitted
    rate: np.ndarray                  # (K,) bit/s the UEs aim for
    ris_config: RisConfiguration      # configuration actually loaded
    es_queue_view: np.ndarray         # (K,) bits, scheduler's belief


@dataclass
class SlotHistory:
    """Carry-over state the loss rules fall back to."""

    power: np.ndarray
    rate: np.ndarray
    ris_config: RisConfiguration

    @classmethod
    def initial(cls, num_ues: int, ctl_config: RisConfiguration) -> "SlotHistory":
        # before the first slot nothing was commanded: silent UEs, control
        # configuration on the surface
        return cls(np.zeros(num_ues), np.zeros(num_ues), ctl_config)


def update_es_view(ini_u_lost: np.ndarray, q_u_now: np.ndarray,
                   q_u_prev: np.ndarray, served_prev: np.ndarray) -> np.ndarray:
    """Scheduler's belief about the local queues after the report round.

    A received report reveals the true queue. On a lost report the scheduler
    rolls its last known queue forward by the data it saw arrive on the
    uplink, which misses the newest arrivals:
        view = max(0, Q_u(t-1) - served(t-1)).
    """
    inferred = np.maximum(0.0, q_u_prev - served_prev)
    return np.where(ini_u_lost, inferred, q_u_now)


def apply_loss_effects(outcomes: PacketOutcomes, decision: RaDecision,
                       history: SlotHistory, es_view: np.ndarray,
                       csi_valid: bool) -> EffectiveDecision:
    """Translate packet losses into the decisions the nodes actually apply.

    Application order: the sounding failure acts globally first, then the
    per-UE parameter command, then the configuration command. A sounding
    failure leaves the scheduler without channel state: no rate can be
    assigned (the nominal throughput is zero for everyone), but the UEs
    never learn of the failure and keep transmitting with their previous
    power, so the slot still burns transmit energy; the surface, never told
    to sweep, stays in the all-on control configuration it loaded for the
    signaling phase.
    """
    power = decision.power.copy()
    rate = decision.rate.copy()
    ris = decision.ris_config

    if outcomes.ini_r_lost or not csi_valid:
        rate = np.zeros_like(rate)
        power = history.power.copy()
        ris = decision.ris_config   # the scheduler's fallback: control config

    lost = outcomes.set_u_lost
    if np.any(lost):
        power = np.where(lost, history.power, power)
        rate = np.where(lost, history.rate, rate)

    if outcomes.set_r_lost:
        ris = history.ris_config

    return EffectiveDecision(power, rate, ris, es_view.copy())
