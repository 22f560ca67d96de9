"""rismec: slot-level simulator of computation offloading over a
reconfigurable-surface-aided edge link, with explicit control overhead,
signaling failures, and energy accounting."""

__version__ = "0.1.0"

from .scenario import (ScenarioConfig, ConfigError, load_config,  # noqa: F401
                       sample_ue_positions, build_geometry, Geometry,
                       RngStreams, PRESETS, dbm_to_watt, watt_to_dbm,
                       db_to_linear)
from .channel import (RisConfiguration, ChannelRealization, Codebooks,  # noqa: F401
                      draw_channels, effective_channel, capacity,
                      nominal_rate, build_codebooks, power_for_rate,
                      dump_direct_csv)
from .estimation import (CsiEstimate, analytic_variances,  # noqa: F401
                         estimate_analytic, estimate_pilot_level, estimate)
from .allocation import (RaDecision, VirtualQueueState, ra_overhead,  # noqa: F401
                         greedy_joint_search, allocate_power, allocate_cpu,
                         update_virtual_queues, calibrate_v,
                         surrogate_objective)
from .protocol import (SlotTiming, PacketOutcomes, EffectiveDecision,  # noqa: F401
                       SlotHistory, compute_timing, sample_outcomes,
                       apply_loss_effects, update_es_view,
                       InfeasibleSlotError)
from .queues import (QueueState, draw_arrivals, actual_throughput,  # noqa: F401
                     step_queues, latency, conservation_gap)
from .energy import EnergyLedger, slot_energy  # noqa: F401
from .engine import (SlotLedger, RunSummary, RunResult, run, sweep,  # noqa: F401
                     apply_axis, SweepRow, trace_to_csv, summary_to_csv)
