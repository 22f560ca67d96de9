"""The energy/latency trade-off of the slot duration (error-free).

Longer slots amortize the fixed control overhead (mean power drops) but
hold data longer (latency grows roughly linearly once the scheduler's
latency reserve is exhausted). The sweet spot is the longest slot that
still meets the latency bound. Reduced seed count for a quick run; pass
--plot to draw the three panels.
"""

import sys

import numpy as np

import rismec
from rismec.allocation import calibrate_v

SEEDS = 12
TAUS = [round(0.06 + 0.02 * i, 3) for i in range(13)]

base = rismec.load_config("ce_mode = perfect\nrate_backoff = 1.0")
print("calibrating the energy/latency weight on the 100 ms slot ...")
cal = calibrate_v(base, steps=12, seeds=8)
print(f"  V = {cal.v:.3e} (feasible: {cal.feasible})")

cfg = base.with_overrides(lyapunov_v=cal.v)
rows = rismec.sweep(cfg, "tau", TAUS, SEEDS, workers=2)

lat, power, energy = {}, {}, {}
for r in rows:
    lat.setdefault(r.value, []).append(r.max_final_latency)
    power.setdefault(r.value, []).append(r.mean_power)
    energy.setdefault(r.value, []).append(r.mean_energy)

print(f"\n{'tau [ms]':>9} {'energy [mJ]':>12} {'power [mW]':>11} "
      f"{'max latency [ms]':>17}")
for t in TAUS:
    flag = " <-- bound" if np.mean(lat[t]) > cfg.latency_bound else ""
    print(f"{t * 1e3:9.0f} {np.mean(energy[t]) * 1e3:12.4f} "
          f"{np.mean(power[t]) * 1e3:11.2f} {np.mean(lat[t]) * 1e3:17.1f}{flag}")

crossing = next((t for t in TAUS if np.mean(lat[t]) >= cfg.latency_bound), None)
print(f"\nlatency crosses the {cfg.latency_bound * 1e3:.0f} ms bound near "
      f"tau = {crossing and crossing * 1e3:.0f} ms; power keeps falling with "
      "tau, so the best feasible point is just below the crossing")

if "--plot" in sys.argv:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6, 7))
    xs = [t * 1e3 for t in TAUS]
    axes[0].plot(xs, [np.mean(energy[t]) * 1e3 for t in TAUS], "o-")
    axes[0].set_ylabel("energy / slot [mJ]")
    axes[1].plot(xs, [np.mean(power[t]) * 1e3 for t in TAUS], "o-")
    axes[1].set_ylabel("mean power [mW]")
    axes[2].plot(xs, [np.mean(lat[t]) * 1e3 for t in TAUS], "o-")
    axes[2].axhline(cfg.latency_bound * 1e3, ls="--", c="k")
    axes[2].set_ylabel("max latency [ms]")
    axes[2].set_xlabel("slot duration [ms]")
    fig.tight_layout()
    fig.savefig("slot_duration_tradeoff.png", dpi=120)
    print("wrote slot_duration_tradeoff.png")
