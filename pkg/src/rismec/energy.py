"""Per-slot energy accounting for UEs, AP, surface, and edge server.

Control-side terms are charged every slot regardless of packet outcomes
(transmissions happen; decoding may fail downstream). The weighted total
mixes user-side and network-side consumption through sigma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .protocol import SlotTiming
from .scenario import ScenarioConfig


@dataclass
class EnergyLedger:
    """Joules spent in one slot, split by node and by payload/control."""

    ue: np.ndarray            # (K,) total per UE
    ue_ctl: np.ndarray        # (K,) control share per UE
    es: float
    es_ctl: float
    ap: float                 # AP spends energy only on control
    ris: float
    ris_ctl: float
    total_weighted: float     # sigma-weighted system total


def slot_energy(timing: SlotTiming, power_eff: np.ndarray,
                active_elements: int, cfg: ScenarioConfig) -> EnergyLedger:
    """Evaluate every energy term for one slot.

    ES:  tau_pay gamma_c f_max^3 (compute window burns the full budget)
         plus gamma_c f_ra^3 tau_ra for the allocation task.
    UE:  tau_pay P_k plus one report packet and (C_ce + 1) pilot sequences.
    AP:  2 P_ctl T (K + 1) -- ACK and parameter commands to K UEs, start and
         configuration commands to the surface.
    RIS: active-element dissipation during the payload, plus all N elements
         held on while the control configuration is loaded and during the
         reflected-path sounding.
    """
    k = cfg.num_ues
    tau_pay = timing.tau_pay
    t = cfg.tti

    es_ctl = cfg.gamma_c * cfg.f_ra ** 3 * timing.tau_ra
    es = tau_pay * cfg.gamma_c * cfg.f_max ** 3 + es_ctl

    ue_ctl_each = cfg.p_ctl_ue * t * (1.0 + cfg.pilot_len * (cfg.ce_codebook_size + 1))
    ue_ctl = np.full(k, ue_ctl_each)
    ue = tau_pay * np.asarray(power_eff, float) + ue_ctl

    ap = 2.0 * cfg.p_ctl_ap * t * (k + 1)

    ris_ctl = (timing.tau_ini + timing.tau_set
               + cfg.ce_codebook_size * cfg.pilot_len * t) \
        * cfg.num_elements * cfg.ris_element_power
    ris = tau_pay * cfg.ris_element_power * active_elements + ris_ctl

    sigma = cfg.energy_weight
    total = sigma * float(np.sum(ue)) + (1.0 - sigma) * (es + ap + ris)
    return EnergyLedger(ue, ue_ctl, es, es_ctl, ap, ris, ris_ctl, total)
