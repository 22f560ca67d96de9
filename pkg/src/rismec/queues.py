"""Traffic arrivals, throughput gating, queue evolution, and latency.

Two queues per UE: a local transmit buffer and a remote compute buffer at
the edge server. Payload data moves local -> remote at the actual
throughput, and leaves the remote queue as the server spends cycles on it.
A scheduled rate above the true channel capacity loses the whole payload
(nothing is decoded), which the gating rule models as zero actual
throughput for that slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ScenarioConfig


@dataclass
class QueueState:
    """Per-UE buffers in bits, plus conservation counters.

    Bits are real-valued in the queue arithmetic (rate times time is not an
    integer); arrivals themselves are integers.
    """

    q_local: np.ndarray        # (K,) UE transmit buffers
    q_remote: np.ndarray       # (K,) edge server compute buffers
    cum_arrived: np.ndarray    # (K,) total bits that ever arrived
    cum_processed: np.ndarray  # (K,) total bits the server finished

    @classmethod
    def zeros(cls, num_ues: int) -> "QueueState":
        return cls(*(np.zeros(num_ues) for _ in range(4)))

    @property
    def q_total(self) -> np.ndarray:
        return self.q_local + self.q_remote


def draw_arrivals(rng: np.random.Generator, cfg: ScenarioConfig) -> np.ndarray:
    """Bits arriving at each UE during one slot.

    Poisson with mean arrival_rate * slot by default; the deterministic mode
    feeds exactly the rounded mean every slot (useful when debugging queue
    dynamics).
    """
    mean = cfg.per_ue("arrival_rate") * cfg.slot
    if cfg.arrival_mode == "deterministic":
        return np.round(mean)
    return rng.poisson(mean).astype(float)


def actual_throughput(rate_eff: np.ndarray, capacity_true: np.ndarray) -> np.ndarray:
    """All-or-nothing gating: the payload decodes only if the scheduled rate
    does not exceed the true capacity (boundary included)."""
    rate_eff = np.asarray(rate_eff, float)
    return np.where(rate_eff > np.asarray(capacity_true, float), 0.0, rate_eff)


def step_queues(state: QueueState, throughput: np.ndarray, cpu: np.ndarray,
                arrivals: np.ndarray, tau_pay: float,
                cfg: ScenarioConfig) -> QueueState:
    """One slot of queue evolution.

    Local:  Q_u <- max(0, Q_u - tau_pay R~) + A
    Remote: Q_e <- max(0, Q_e - tau_pay f J) + min(Q_u, tau_pay R~)
    The transfer term uses the pre-update local queue.
    """
    j_k = cfg.per_ue("bits_per_cycle")
    transferred = np.minimum(state.q_local, tau_pay * np.asarray(throughput))
    processed = np.minimum(state.q_remote, tau_pay * np.asarray(cpu) * j_k)
    return QueueState(
        q_local=state.q_local - transferred + np.asarray(arrivals, float),
        q_remote=state.q_remote - processed + transferred,
        cum_arrived=state.cum_arrived + np.asarray(arrivals, float),
        cum_processed=state.cum_processed + processed,
    )


def latency(q_total: np.ndarray, cfg: ScenarioConfig) -> np.ndarray:
    """Average offloading latency per UE: backlog over mean arrival rate.

    Undefined (NaN, never zero) for a UE with zero arrival rate.
    """
    rates = cfg.per_ue("arrival_rate")
    safe = np.asarray(q_total, float) / np.where(rates > 0.0, rates, 1.0)
    return np.where(rates > 0.0, safe, np.nan)


def conservation_gap(state: QueueState) -> np.ndarray:
    """Relative ledger error: arrivals vs queued plus processed bits."""
    lhs = state.cum_arrived
    rhs = state.q_local + state.q_remote + state.cum_processed
    return np.abs(lhs - rhs) / np.maximum(lhs, 1.0)
