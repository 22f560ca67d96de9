"""Scenario configuration: parameters, unit handling, geometry, and RNG streams.

Every quantity is stored in linear SI units (W, Hz, s, m, bits). dB and dBm
inputs are converted exactly once at load time. The access point sits at a
fixed position, the reflecting surface at the origin, and user terminals are
placed (or sampled uniformly) inside a semicircular disc around the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

PACKET_TYPES = ("INI_U", "INI_R", "SET_U", "SET_R")

CE_MODES = ("perfect", "analytic_noise", "pilot_level")
ARRIVAL_MODES = ("poisson", "deterministic")

# Alternate TTI value shipped as a named preset: the default 1/14 ms control
# packet makes the channel-sounding overhead ~5 ms, the long variant ~50 ms.
PRESETS = {
    "default": {},
    "long_tti": {"tti_s": 10.0 / 14.0 * 1e-3},
}


class ConfigError(ValueError):
    """Raised when a configuration document cannot be parsed or validated."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """All simulation parameters in linear SI units.

    Immutable after load; share freely across parallel runs. Use
    :func:`load_config` / :meth:`with_overrides` instead of mutating.
    """

    # population
    num_ues: int = 4                 # K
    num_antennas: int = 8            # M, at the access point
    num_elements: int = 64           # N, reflecting elements

    # spectrum / noise
    bandwidth: float = 5e8           # Hz, total; per-UE share is bandwidth/num_ues
    noise_density: float = 1e-20     # W/Hz  (-170 dBm/Hz)
    ref_gain: float = 10 ** -3.8     # linear power gain at 1 m (-38 dB)

    # geometry (surface at the origin, z = 0 plane)
    radius: float = 100.0            # m, semicircle radius for UE placement
    ap_position: tuple = (50.0 * math.sqrt(2.0), 50.0 * math.sqrt(2.0), 0.0)
    ue_positions: Optional[tuple] = None   # ((x, y, z), ...) or None to sample

    # slot structure
    slot: float = 0.1                # s, total slot duration (tau)
    tti: float = 1.0 / 14.0 * 1e-3   # s, control packet duration (T)
    ris_switch: float = 0.0          # s, surface reconfiguration guard time
    pilot_len: int = 1               # TTIs per pilot sequence

    # codebooks / quantization
    ce_codebook_size: int = 64       # sounding configurations per estimation round
    ap_codebook_size: int = 25       # candidate AP beams
    phase_bits: int = 2              # b, bits per element phase
    group_size: int = 2              # elements sharing one phase in the search

    # computation
    f_max: float = 4.5e9             # cycles/s, edge server budget
    f_ra: float = 0.5e9              # cycles/s, used for the allocation task
    gamma_c: float = 5.7e-32         # J s^2/cycle^3, effective switching capacitance
    bits_per_cycle: tuple = (0.1,)   # per UE (broadcast if single value)

    # traffic / service targets
    arrival_rate: tuple = (5e4,)     # bit/s per UE (broadcast if single value)
    latency_bound: float = 0.3       # s, average offloading latency target
    energy_weight: float = 0.5       # sigma: 1 = user-centric, 0 = network-centric

    # power
    p_ctl_ue: float = 0.1            # W  (20 dBm), UE control/pilot power
    p_ctl_ap: float = dbm_to_watt(24.0)   # W, AP control power
    p_max_ue: float = 0.1            # W, UE payload power ceiling
    ris_element_power: float = 1e-4  # W per active element

    # scheduler knobs
    lyapunov_v: float = 1e4          # energy/latency trade-off weight
    rate_backoff: float = 1.0        # multiplicative discount on scheduled rate

    # control packet loss probabilities
    loss_prob_ini_u: float = 0.0
    loss_prob_ini_r: float = 0.0
    loss_prob_set_u: float = 0.0
    loss_prob_set_r: float = 0.0

    # modes
    ce_mode: str = "analytic_noise"
    arrival_mode: str = "poisson"

    # run control
    num_slots: int = 100
    rng_seed: int = 1

    # -- derived quantities ------------------------------------------------

    @property
    def bandwidth_per_ue(self) -> float:
        return self.bandwidth / self.num_ues

    @property
    def noise_power_per_ue(self) -> float:
        return self.noise_density * self.bandwidth_per_ue

    @property
    def num_phases(self) -> int:
        return 2 ** self.phase_bits

    @property
    def loss_prob(self) -> dict:
        return {
            "INI_U": self.loss_prob_ini_u,
            "INI_R": self.loss_prob_ini_r,
            "SET_U": self.loss_prob_set_u,
            "SET_R": self.loss_prob_set_r,
        }

    def per_ue(self, name: str) -> np.ndarray:
        """Broadcast a per-UE tuple field (single value or K values) to shape (K,)."""
        raw = getattr(self, name)
        arr = np.asarray(raw, dtype=float)
        if arr.size == 1:
            return np.full(self.num_ues, float(arr.reshape(-1)[0]))
        if arr.size != self.num_ues:
            raise ConfigError(
                f"{name}: expected 1 or {self.num_ues} values, got {arr.size}"
            )
        return arr.copy()

    def ap_position_arr(self) -> np.ndarray:
        return np.asarray(self.ap_position, dtype=float)

    def ue_positions_arr(self) -> Optional[np.ndarray]:
        if self.ue_positions is None:
            return None
        return np.asarray(self.ue_positions, dtype=float).reshape(self.num_ues, 3)

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        def positive(name):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")

        for name in ("num_ues", "num_antennas", "num_elements", "bandwidth",
                     "noise_density", "slot", "tti", "pilot_len",
                     "ce_codebook_size", "ap_codebook_size", "group_size",
                     "f_max", "f_ra", "gamma_c", "latency_bound",
                     "p_ctl_ue", "p_ctl_ap", "p_max_ue"):
            positive(name)
        for name in ("ref_gain", "ris_switch", "ris_element_power",
                     "lyapunov_v", "radius"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.phase_bits < 1:
            raise ConfigError("phase_bits must be >= 1")
        if not 0.0 <= self.energy_weight <= 1.0:
            raise ConfigError("energy_weight must lie in [0, 1]")
        if not 0.0 < self.rate_backoff <= 1.0:
            raise ConfigError("rate_backoff must lie in (0, 1]")
        for key in ("loss_prob_ini_u", "loss_prob_ini_r",
                    "loss_prob_set_u", "loss_prob_set_r"):
            p = getattr(self, key)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{key} must lie in [0, 1]")
        if self.num_elements % self.group_size != 0:
            raise ConfigError(
                f"group_size: {self.num_elements} mod {self.group_size} != 0"
            )
        if self.ce_mode not in CE_MODES:
            raise ConfigError(f"ce_mode must be one of {CE_MODES}")
        if self.arrival_mode not in ARRIVAL_MODES:
            raise ConfigError(f"arrival_mode must be one of {ARRIVAL_MODES}")
        if self.num_slots < 0:
            raise ConfigError("num_slots must be >= 0")
        self.per_ue("bits_per_cycle")
        rates = self.per_ue("arrival_rate")
        if np.any(rates < 0):
            raise ConfigError("arrival_rate entries must be >= 0")
        pos = self.ue_positions_arr()
        if pos is not None:
            # placement must stay inside the semicircular cell around the surface
            d = np.linalg.norm(pos[:, :2], axis=1)
            if np.any(d > self.radius * (1 + 1e-9)):
                raise ConfigError("ue_positions: a UE lies outside radius")


# ---------------------------------------------------------------------------
# key=value document parsing
# ---------------------------------------------------------------------------

_INT_KEYS = {
    "num_ues", "num_antennas", "num_elements", "pilot_len",
    "ce_codebook_size", "ap_codebook_size", "phase_bits", "group_size",
    "num_slots", "rng_seed",
}
_FLOAT_KEYS = {
    "bandwidth_hz": "bandwidth",
    "radius_m": "radius",
    "slot_s": "slot",
    "tti_s": "tti",
    "ris_switch_s": "ris_switch",
    "f_max_hz": "f_max",
    "f_ra_hz": "f_ra",
    "gamma_c": "gamma_c",
    "latency_bound_s": "latency_bound",
    "energy_weight": "energy_weight",
    "p_max_ue_w": "p_max_ue",
    "ris_element_power_w": "ris_element_power",
    "lyapunov_v": "lyapunov_v",
    "rate_backoff": "rate_backoff",
    "loss_prob_ini_u": "loss_prob_ini_u",
    "loss_prob_ini_r": "loss_prob_ini_r",
    "loss_prob_set_u": "loss_prob_set_u",
    "loss_prob_set_r": "loss_prob_set_r",
}
# quantities accepted either in linear or logarithmic form
_DB_KEYS = {
    "noise_density_dbm_hz": ("noise_density", dbm_to_watt),
    "noise_density_w_hz": ("noise_density", float),
    "ref_gain_db": ("ref_gain", db_to_linear),
    "ref_gain": ("ref_gain", float),
    "p_ctl_ue_dbm": ("p_ctl_ue", dbm_to_watt),
    "p_ctl_ue_w": ("p_ctl_ue", float),
    "p_ctl_ap_dbm": ("p_ctl_ap", dbm_to_watt),
    "p_ctl_ap_w": ("p_ctl_ap", float),
}
_STR_KEYS = {"ce_mode", "arrival_mode"}
_LIST_KEYS = {"bits_per_cycle", "arrival_rate_bps"}


def _parse_scalar(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse number from {raw!r}") from exc


def _parse_vector3(key: str, raw: str) -> tuple:
    parts = [p for p in raw.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 3 coordinates, got {len(parts)}")
    return tuple(_parse_scalar(key, p) for p in parts)


def parse_document(text: str) -> dict:
    """Parse a plain key=value document ('#' starts a comment) into a dict."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = raw
    return out


def load_config(text: str = "", overrides: Optional[dict] = None) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a key=value document.

    Unset keys take the built-in defaults. `overrides` (e.g. from CLI
    --set key=value) are applied after the document, same key syntax.
    """
    kv = parse_document(text)
    if overrides:
        kv.update({str(k): str(v) for k, v in overrides.items()})

    kwargs = {}
    if "preset" in kv:
        name = kv.pop("preset")
        if name not in PRESETS:
            raise ConfigError(f"preset: unknown name {name!r}, have {sorted(PRESETS)}")
        for pk, pv in PRESETS[name].items():
            kv.setdefault(pk, str(pv))

    for key, raw in kv.items():
        if key in _INT_KEYS:
            val = _parse_scalar(key, raw)
            if val != int(val):
                raise ConfigError(f"{key}: expected an integer, got {raw!r}")
            kwargs[key] = int(val)
        elif key in _FLOAT_KEYS:
            kwargs[_FLOAT_KEYS[key]] = _parse_scalar(key, raw)
        elif key in _DB_KEYS:
            field_name, conv = _DB_KEYS[key]
            kwargs[field_name] = conv(_parse_scalar(key, raw))
        elif key in _STR_KEYS:
            kwargs[key] = raw
        elif key == "arrival_rate_bps":
            kwargs["arrival_rate"] = tuple(
                _parse_scalar(key, p) for p in raw.split(",") if p.strip()
            )
        elif key == "bits_per_cycle":
            kwargs["bits_per_cycle"] = tuple(
                _parse_scalar(key, p) for p in raw.split(",") if p.strip()
            )
        elif key == "ap_position_m":
            kwargs["ap_position"] = _parse_vector3(key, raw)
        elif key == "ue_positions_m":
            trip = [t for t in raw.split(";") if t.strip()]
            kwargs["ue_positions"] = tuple(_parse_vector3(key, t) for t in trip)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")

    cfg = ScenarioConfig(**kwargs)
    cfg.validate()
    return cfg


def config_metadata(cfg: ScenarioConfig) -> dict:
    """Flat mapping of every knob, for echoing into output headers."""
    meta = {}
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(repr(v) for v in val)
        meta[f.name] = val
    return meta


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Geometry:
    """UE/AP placement with the distances every propagation model needs."""

    ap_position: np.ndarray        # (3,)
    ue_positions: np.ndarray       # (K, 3)
    dist_ap_ue: np.ndarray         # (K,)
    dist_ris_ue: np.ndarray        # (K,), surface at the origin
    dist_ris_ap: float

    @classmethod
    def from_positions(cls, ap: np.ndarray, ues: np.ndarray) -> "Geometry":
        ap = np.asarray(ap, float)
        ues = np.asarray(ues, float)
        g = cls(
            ap_position=ap,
            ue_positions=ues,
            dist_ap_ue=np.linalg.norm(ues - ap[None, :], axis=1),
            dist_ris_ue=np.linalg.norm(ues, axis=1),
            dist_ris_ap=float(np.linalg.norm(ap)),
        )
        for arr in (g.ap_position, g.ue_positions, g.dist_ap_ue, g.dist_ris_ue):
            arr.setflags(write=False)
        return g


def sample_ue_positions(rng: np.random.Generator, cfg: ScenarioConfig) -> np.ndarray:
    """Uniform positions over the semicircular disc (z=0) on the AP's side.

    The half-plane is chosen so the AP azimuth lies inside it. Sampling in
    (sqrt(u), angle) keeps the density uniform over area.
    """
    k = cfg.num_ues
    radii = cfg.radius * np.sqrt(rng.random(k))
    ap = cfg.ap_position_arr()
    base = math.atan2(ap[1], ap[0]) - math.pi / 2.0
    angles = base + math.pi * rng.random(k)
    pos = np.zeros((k, 3))
    pos[:, 0] = radii * np.cos(angles)
    pos[:, 1] = radii * np.sin(angles)
    return pos


def build_geometry(rng: np.random.Generator, cfg: ScenarioConfig) -> Geometry:
    pos = cfg.ue_positions_arr()
    if pos is None:
        pos = sample_ue_positions(rng, cfg)
    return Geometry.from_positions(cfg.ap_position_arr(), pos)


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

@dataclass
class RngStreams:
    """Independent generators per noise source.

    Toggling one source (say packet losses) must not perturb the draws of the
    others, so each gets its own child seed from the master.
    """

    positions: np.random.Generator
    channels: np.random.Generator
    arrivals: np.random.Generator
    ce_noise: np.random.Generator
    packet_loss: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(5)
        return cls(*(np.random.default_rng(c) for c in children))
