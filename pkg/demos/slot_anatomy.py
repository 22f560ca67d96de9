"""Where does the slot go?

Breaks one slot into its four phases and shows how the control packet
duration (TTI) and the sounding codebook size eat into the payload window.
The long-TTI preset makes the sounding round dominate the slot, which is
the regime where reconfigurable-surface control is genuinely expensive.
"""

import rismec

print("=== phase split, default scenario (tau = 100 ms, TTI = 1/14 ms) ===")
cfg = rismec.load_config("")
t = rismec.compute_timing(cfg)
for name, val in [("initialization", t.tau_ini), ("sounding", t.tau_ce),
                  ("allocation", t.tau_ra), ("setup", t.tau_set),
                  ("payload", t.tau_pay)]:
    print(f"  {name:15s} {val * 1e3:9.4f} ms  ({val / cfg.slot * 100:5.2f} %)")
print(f"  control total   {t.tau_ctl * 1e3:9.4f} ms")

print("\n=== same slot with the long-TTI preset (T = 10/14 ms) ===")
cfg_long = rismec.load_config("preset = long_tti")
t = rismec.compute_timing(cfg_long)
for name, val in [("initialization", t.tau_ini), ("sounding", t.tau_ce),
                  ("allocation", t.tau_ra), ("setup", t.tau_set),
                  ("payload", t.tau_pay)]:
    print(f"  {name:15s} {val * 1e3:9.4f} ms  ({val / cfg_long.slot * 100:5.2f} %)")
print("  note: sounding alone now costs ~46 ms of every 100 ms slot")

print("\n=== sounding overhead vs codebook size (default TTI) ===")
for c_ce in (16, 32, 64, 128):
    t = rismec.compute_timing(rismec.load_config(f"ce_codebook_size = {c_ce}"))
    print(f"  C_ce = {c_ce:4d}: sounding {t.tau_ce * 1e3:7.3f} ms, "
          f"payload {t.tau_pay * 1e3:7.3f} ms")

print("\n=== allocation cost vs element grouping ===")
for n_g in (1, 2, 4, 8, 64):
    cfg = rismec.load_config(f"group_size = {n_g}")
    n_ra, tau_ra = rismec.ra_overhead(cfg)
    print(f"  group size {n_g:3d}: {n_ra:>12,} cycles -> {tau_ra * 1e3:7.3f} ms"
          f" at f_ra = {cfg.f_ra / 1e9:.1f} GHz")
print("\nfiner grouping buys beamforming gain but pays quadratically in "
      "search time")
