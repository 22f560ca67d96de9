"""Run orchestration: the per-slot loop, aggregation, and parameter sweeps.

Slot phases execute in protocol order: draw the channel, initialization
signaling (queue reports feed the scheduler's view), sounding and resource
allocation, setup signaling (loss effects produce the decisions actually
applied), payload (true-capacity gating), queue and virtual-queue updates,
and energy accounting.

The scheduler prices service pressure with its *view* of the local queues
(stale after a lost report), while the physical rate cap uses the true
buffer: a UE cannot transmit bits it does not hold, whatever it was told.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .allocation import (RaDecision, VirtualQueueState, allocate_cpu,
                         allocate_power, greedy_joint_search, ra_overhead,
                         update_virtual_queues)
from .channel import (build_codebooks, capacity, draw_channels,
                      effective_channel)
from .energy import EnergyLedger, slot_energy
from .estimation import CsiEstimate, estimate
from .protocol import (EffectiveDecision, PacketOutcomes, SlotHistory,
                       SlotTiming, apply_loss_effects, compute_timing,
                       sample_outcomes, update_es_view)
from .queues import (QueueState, actual_throughput, conservation_gap,
                     draw_arrivals, latency, step_queues)
from .scenario import (RngStreams, ScenarioConfig, build_geometry,
                       config_metadata)


@dataclass
class SlotLedger:
    """Everything observable about one slot."""

    slot: int
    outcomes: PacketOutcomes
    beam_idx: int
    objective: float
    active_elements: int
    es_view: np.ndarray          # (K,) bits
    arrivals: np.ndarray         # (K,) bits
    q_local: np.ndarray          # (K,) bits, end of slot
    q_remote: np.ndarray         # (K,) bits, end of slot
    latency_s: np.ndarray        # (K,) s, end of slot
    rate_nominal: np.ndarray     # (K,) bit/s commanded
    rate_actual: np.ndarray      # (K,) bit/s after gating
    capacity_bps: np.ndarray     # (K,) bit/s true
    power_w: np.ndarray          # (K,) W transmitted
    virtual_q: np.ndarray        # (K,) bits
    energy: EnergyLedger

    @property
    def q_total(self) -> np.ndarray:
        return self.q_local + self.q_remote


@dataclass
class RunSummary:
    """Aggregates of one run plus full reproduction metadata."""

    mean_energy: float           # J per slot, sigma-weighted
    mean_power: float            # W, mean_energy / slot duration
    max_final_latency: float     # s, worst UE at the final slot
    final_latency: np.ndarray    # (K,) s
    latency_trajectory: np.ndarray   # (num_slots, K) s
    constraint_violated: bool    # max_final_latency > latency_bound
    timing: SlotTiming
    n_ra: int
    metadata: dict = field(repr=False, default_factory=dict)


@dataclass
class RunResult:
    summary: RunSummary
    trace: List[SlotLedger]
    config: ScenarioConfig


def run(cfg: ScenarioConfig, collect_trace: bool = True,
        check_aggregation: bool = True,
        channel_log: Optional[list] = None) -> RunResult:
    """Simulate `cfg.num_slots` slots and aggregate.

    Identical (config, seed) pairs produce bit-identical results; every
    stochastic input draws from its own seeded stream. Pass a list as
    `channel_log` to capture the raw channel realizations (debugging).
    """
    cfg.validate()
    streams = RngStreams.from_seed(cfg.rng_seed)
    geom = build_geometry(streams.positions, cfg)
    books = build_codebooks(cfg)
    timing = compute_timing(cfg)
    n_ra, _ = ra_overhead(cfg)
    k = cfg.num_ues
    tau_pay = timing.tau_pay
    beams = books.ap_beams

    state = QueueState.zeros(k)
    vq = VirtualQueueState.zeros(k)
    history = SlotHistory.initial(k, books.ctl_config)
    prev_q_local = np.zeros(k)
    prev_served = np.zeros(k)

    trace: List[SlotLedger] = []
    energy_sum = 0.0
    latency_rows = np.zeros((cfg.num_slots, k))
    last_latency = np.full(k, np.nan)
    max_gap = 0.0

    for t in range(1, cfg.num_slots + 1):
        chan = draw_channels(streams.channels, cfg, geom, t)
        if channel_log is not None:
            channel_log.append(chan)
        outcomes = sample_outcomes(streams.packet_loss, cfg)

        # initialization: queue reports refresh (or roll forward) the view
        es_view = update_es_view(outcomes.ini_u_lost, state.q_local,
                                 prev_q_local, prev_served)

        # algorithmic: sounding happens only if the surface got the command
        if outcomes.ini_r_lost:
            csi = CsiEstimate(np.zeros_like(chan.direct),
                              np.zeros_like(chan.cascade),
                              np.zeros(k), np.zeros(k), valid=False)
        else:
            csi = estimate(streams.ce_noise, chan, books, cfg)

        weights = es_view + vq.z
        if csi.valid:
            beam_idx, ris, objective = greedy_joint_search(
                csi, weights, books, cfg, tau_pay)
            w = beams[beam_idx]
            phasor = ris.phasor
            gains_est = np.array([
                abs(effective_channel(csi.direct[i], csi.cascade[i], w, phasor)) ** 2
                for i in range(k)
            ])
            power, rate = allocate_power(gains_est, weights, state.q_local,
                                         cfg, tau_pay)
        else:
            beam_idx, ris, objective = 0, books.ctl_config, 0.0
            power = np.zeros(k)
            rate = np.zeros(k)
        cpu = allocate_cpu(state.q_remote, vq, cfg, tau_pay)
        decision = RaDecision(beam_idx, ris, power, rate, cpu, n_ra,
                              timing.tau_ra, objective)

        # setup: losses decide what is actually applied
        eff = apply_loss_effects(outcomes, decision, history, es_view,
                                 csi.valid)

        # payload: gate against the true capacity under the loaded configuration
        w = beams[beam_idx]
        phasor_eff = eff.ris_config.phasor
        cap = np.array([
            capacity(effective_channel(chan.direct[i], chan.cascade[i], w,
                                       phasor_eff),
                     eff.power[i], cfg.bandwidth_per_ue, cfg.noise_density)
            for i in range(k)
        ])
        throughput = actual_throughput(eff.rate, cap)

        arrivals = draw_arrivals(streams.arrivals, cfg)
        prev_q_local = state.q_local.copy()
        prev_served = tau_pay * throughput
        state = step_queues(state, throughput, cpu, arrivals, tau_pay, cfg)
        vq = update_virtual_queues(vq, state.q_total, cfg)

        ledger = slot_energy(timing, eff.power, eff.ris_config.num_active, cfg)
        energy_sum += ledger.total_weighted
        lat = latency(state.q_total, cfg)
        latency_rows[t - 1] = lat
        last_latency = lat
        max_gap = max(max_gap, float(np.max(conservation_gap(state))))

        history = SlotHistory(eff.power.copy(), eff.rate.copy(), eff.ris_config)

        if collect_trace:
            trace.append(SlotLedger(
                slot=t, outcomes=outcomes, beam_idx=beam_idx,
                objective=objective,
                active_elements=eff.ris_config.num_active,
                es_view=es_view.copy(), arrivals=arrivals.copy(),
                q_local=state.q_local.copy(), q_remote=state.q_remote.copy(),
                latency_s=lat.copy(), rate_nominal=eff.rate.copy(),
                rate_actual=throughput.copy(), capacity_bps=cap,
                power_w=eff.power.copy(), virtual_q=vq.z.copy(),
                energy=ledger,
            ))

    n = max(cfg.num_slots, 1)
    mean_energy = energy_sum / n if cfg.num_slots else 0.0
    max_final = float(np.nanmax(last_latency)) if cfg.num_slots else 0.0
    summary = RunSummary(
        mean_energy=mean_energy,
        mean_power=mean_energy / cfg.slot,
        max_final_latency=max_final,
        final_latency=last_latency,
        latency_trajectory=latency_rows,
        constraint_violated=bool(max_final > cfg.latency_bound),
        timing=timing,
        n_ra=n_ra,
        metadata={**config_metadata(cfg), "version": __version__,
                  "conservation_gap": max_gap},
    )

    if collect_trace and check_aggregation and cfg.num_slots:
        recomputed = float(np.mean([s.energy.total_weighted for s in trace]))
        if abs(recomputed - summary.mean_energy) > 1e-9 * max(abs(recomputed), 1e-30):
            raise RuntimeError("aggregation mismatch between summary and trace")

    return RunResult(summary, trace, cfg)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

_PERR_FIELDS = {
    "INI_U": "loss_prob_ini_u",
    "INI_R": "loss_prob_ini_r",
    "SET_U": "loss_prob_set_u",
    "SET_R": "loss_prob_set_r",
}


def apply_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Derive the configuration of one sweep point."""
    if axis == "tau":
        return cfg.with_overrides(slot=float(value))
    if axis.startswith("perr:"):
        name = axis.split(":", 1)[1].upper()
        if name not in _PERR_FIELDS:
            raise ValueError(f"unknown packet type {name!r}")
        return cfg.with_overrides(**{_PERR_FIELDS[name]: float(value)})
    if axis == "ce":
        if isinstance(value, str):
            c_raw, mu_raw = value.split(":")
            value = (int(c_raw), float(mu_raw))
        c_ce, mu = value
        return cfg.with_overrides(ce_codebook_size=int(c_ce),
                                  rate_backoff=float(mu))
    raise ValueError(f"unknown sweep axis {axis!r}")


@dataclass
class SweepRow:
    axis: str
    value: object
    seed: int
    mean_energy: float = np.nan
    mean_power: float = np.nan
    max_final_latency: float = np.nan
    constraint_violated: bool = False
    max_conservation_gap: float = 0.0
    error: str = ""


def _run_point(args) -> SweepRow:
    cfg_point, axis, value, seed = args
    row = SweepRow(axis=axis, value=value, seed=seed)
    try:
        out = run(cfg_point.with_overrides(rng_seed=seed), collect_trace=False)
    except Exception as exc:   # infeasible points are recorded, not fatal
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    s = out.summary
    row.mean_energy = s.mean_energy
    row.mean_power = s.mean_power
    row.max_final_latency = s.max_final_latency
    row.constraint_violated = s.constraint_violated
    row.max_conservation_gap = s.metadata["conservation_gap"]
    return row


def sweep(cfg: ScenarioConfig, axis: str, values: Sequence,
          seeds: Sequence[int] | int, workers: Optional[int] = None
          ) -> List[SweepRow]:
    """Cartesian product of values x seeds, each simulated independently.

    Points run in parallel processes when `workers` allows; results return
    in deterministic (value, seed) order regardless of scheduling. A point
    that fails (e.g. the overhead no longer fits the slot) is recorded with
    its error and the sweep continues.
    """
    if isinstance(seeds, int):
        seeds = [cfg.rng_seed + i for i in range(seeds)]
    jobs = []
    for value in values:
        try:
            cfg_point = apply_axis(cfg, axis, value)
        except Exception as exc:
            for seed in seeds:
                row = SweepRow(axis=axis, value=value, seed=seed,
                               error=f"{type(exc).__name__}: {exc}")
                jobs.append(("done", row))
            continue
        for seed in seeds:
            jobs.append(("run", (cfg_point, axis, value, seed)))

    runnable = [payload for kind, payload in jobs if kind == "run"]
    if workers is None:
        workers = min(os.cpu_count() or 1, max(1, len(runnable)))
    if workers > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, runnable, chunksize=8))
    else:
        results = [_run_point(p) for p in runnable]

    out: List[SweepRow] = []
    it = iter(results)
    for kind, payload in jobs:
        out.append(payload if kind == "done" else next(it))
    return out


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _metadata_lines(meta: dict) -> List[str]:
    return [f"# {key} = {meta[key]}" for key in sorted(meta)]


def trace_to_csv(result: RunResult) -> str:
    """Per-slot trace as CSV text with '#' metadata header lines."""
    k = result.config.num_ues
    buf = io.StringIO()
    for line in _metadata_lines(result.summary.metadata):
        buf.write(line + "\n")
    wr = csv.writer(buf)

    def ue_cols(name):
        return [f"{name}_u{i}" for i in range(k)]

    header = (["slot", "beam_idx", "objective", "active_elements",
               "ini_r_lost", "set_r_lost"]
              + ue_cols("ini_u_lost") + ue_cols("set_u_lost")
              + ue_cols("arrivals") + ue_cols("es_view")
              + ue_cols("q_local") + ue_cols("q_remote")
              + ue_cols("latency_s") + ue_cols("rate_nominal")
              + ue_cols("rate_actual") + ue_cols("capacity")
              + ue_cols("power_w") + ue_cols("virtual_q")
              + ["e_ue_total", "e_es", "e_ap", "e_ris", "e_total_weighted"])
    wr.writerow(header)
    for s in result.trace:
        row = [s.slot, s.beam_idx, repr(s.objective), s.active_elements,
               int(s.outcomes.ini_r_lost), int(s.outcomes.set_r_lost)]
        row += [int(v) for v in s.outcomes.ini_u_lost]
        row += [int(v) for v in s.outcomes.set_u_lost]
        for arr in (s.arrivals, s.es_view, s.q_local, s.q_remote, s.latency_s,
                    s.rate_nominal, s.rate_actual, s.capacity_bps, s.power_w,
                    s.virtual_q):
            row += [repr(float(v)) for v in arr]
        e = s.energy
        row += [repr(float(np.sum(e.ue))), repr(e.es), repr(e.ap), repr(e.ris),
                repr(e.total_weighted)]
        wr.writerow(row)
    return buf.getvalue()


def summary_to_csv(rows: Sequence[SweepRow], meta: Optional[dict] = None) -> str:
    """Long-format sweep results as CSV text."""
    buf = io.StringIO()
    if meta:
        for line in _metadata_lines(meta):
            buf.write(line + "\n")
    wr = csv.writer(buf)
    wr.writerow(["axis", "value", "seed", "mean_energy_j", "mean_power_w",
                 "max_final_latency_s", "constraint_violated", "error"])
    for r in rows:
        wr.writerow([r.axis, r.value, r.seed, repr(r.mean_energy),
                     repr(r.mean_power), repr(r.max_final_latency),
                     int(r.constraint_violated), r.error])
    return buf.getvalue()
