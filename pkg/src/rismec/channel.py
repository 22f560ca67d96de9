"""Propagation model, surface configurations, codebooks, and link rates.

Block Rayleigh fading: each slot draws an independent realization of the
direct UE-AP vectors and of the cascaded UE-surface-AP matrices (entrywise
product of the two hops). Far field, frequency flat within the slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.linalg import hadamard

from .scenario import ConfigError, Geometry, ScenarioConfig


@dataclass(frozen=True)
class RisConfiguration:
    """Per-element on/off state plus a phase index on the b-bit grid."""

    active: np.ndarray       # (N,) bool
    phase_idx: np.ndarray    # (N,) int in [0, 2^b)
    phase_bits: int

    def __post_init__(self):
        if self.active.shape != self.phase_idx.shape:
            raise ValueError("active/phase_idx shape mismatch")
        if np.any(self.phase_idx < 0) or np.any(self.phase_idx >= 2 ** self.phase_bits):
            raise ValueError("phase index outside the quantization grid")
        self.active.setflags(write=False)
        self.phase_idx.setflags(write=False)

    @property
    def phasor(self) -> np.ndarray:
        """Complex per-element coefficients alpha_n * exp(j 2 pi i_n / 2^b)."""
        phase = 2.0 * np.pi * self.phase_idx / (2 ** self.phase_bits)
        return np.where(self.active, np.exp(1j * phase), 0.0 + 0.0j)

    @property
    def num_active(self) -> int:
        return int(np.count_nonzero(self.active))

    @classmethod
    def all_on(cls, num_elements: int, phase_bits: int,
               phase_idx: Optional[np.ndarray] = None) -> "RisConfiguration":
        if phase_idx is None:
            phase_idx = np.zeros(num_elements, dtype=np.int64)
        return cls(np.ones(num_elements, bool), np.asarray(phase_idx, np.int64),
                   phase_bits)

    @classmethod
    def all_off(cls, num_elements: int, phase_bits: int) -> "RisConfiguration":
        return cls(np.zeros(num_elements, bool),
                   np.zeros(num_elements, np.int64), phase_bits)


@dataclass
class ChannelRealization:
    """One slot's true channels.

    direct:    (K, M)    UE -> AP
    cascade:   (K, M, N) equivalent reflected channel per UE
    The two hop factors are kept so the cascade composition can be audited.
    """

    direct: np.ndarray
    cascade: np.ndarray
    hop_ue_ris: np.ndarray    # (K, N)
    hop_ris_ap: np.ndarray    # (M, N)
    slot: int = 0


@dataclass
class Codebooks:
    """Deterministic beam and sounding codebooks plus the control configuration."""

    ap_beams: np.ndarray                  # (C_ap, M), unit-norm rows
    ce_phasors: np.ndarray                # (N, C_ce) complex sweep matrix
    ce_configs: List[RisConfiguration]
    ce_pinv: np.ndarray                   # (C_ce, N) right pseudo-inverse of ce_phasors
    ctl_config: RisConfiguration
    warnings: List[str]


def _complex_gaussian(rng: np.random.Generator, shape, var) -> np.ndarray:
    scale = np.sqrt(np.asarray(var, float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(rng: np.random.Generator, cfg: ScenarioConfig,
                  geom: Geometry, slot: int = 0) -> ChannelRealization:
    """Fresh independent Rayleigh realization for one slot.

    Per-entry variances: direct ref_gain * d_ap_ue^-3; the cascade entry is
    the product of UE-surface (ref_gain * d_ris_ue^-2) and surface-AP
    (ref_gain * d_ris_ap^-2) coefficients.
    """
    if (np.any(geom.dist_ap_ue <= 0) or np.any(geom.dist_ris_ue <= 0)
            or geom.dist_ris_ap <= 0):
        raise ConfigError("degenerate geometry: zero distance between nodes")
    k, m, n = cfg.num_ues, cfg.num_antennas, cfg.num_elements

    var_direct = cfg.ref_gain * geom.dist_ap_ue ** -3.0          # (K,)
    direct = _complex_gaussian(rng, (k, m), var_direct[:, None])

    var_ue_ris = cfg.ref_gain * geom.dist_ris_ue ** -2.0         # (K,)
    hop_ue_ris = _complex_gaussian(rng, (k, n), var_ue_ris[:, None])
    var_ris_ap = cfg.ref_gain * geom.dist_ris_ap ** -2.0
    hop_ris_ap = _complex_gaussian(rng, (m, n), var_ris_ap)

    cascade = hop_ue_ris[:, None, :] * hop_ris_ap[None, :, :]    # (K, M, N)
    return ChannelRealization(direct, cascade, hop_ue_ris, hop_ris_ap, slot)


def effective_channel(direct_k: np.ndarray, cascade_k: np.ndarray,
                      beam: np.ndarray, phasor: np.ndarray) -> complex:
    """Beamformed scalar channel g = w^H (d + G phi) for one UE."""
    return complex(np.vdot(beam, direct_k + cascade_k @ phasor))


def capacity(g: complex, power: float, bandwidth: float,
             noise_density: float) -> float:
    """Shannon rate (bit/s) of the scalar link at transmit power `power`."""
    if power <= 0.0:
        return 0.0
    noise = noise_density * bandwidth
    return bandwidth * math.log2(1.0 + power * abs(g) ** 2 / noise)


def nominal_rate(g_est: complex, power: float, bandwidth: float,
                 noise_density: float, rate_backoff: float) -> float:
    """Scheduled rate: capacity computed on the estimated channel, then
    discounted by `rate_backoff` as a hedge against estimation error."""
    return rate_backoff * capacity(g_est, power, bandwidth, noise_density)


def power_for_rate(rate: float, g: complex, bandwidth: float,
                   noise_density: float) -> float:
    """Inverse of `capacity` in the power argument (0 when the gain is 0)."""
    gain = abs(g) ** 2
    if rate <= 0.0 or gain <= 0.0:
        return 0.0
    noise = noise_density * bandwidth
    return (2.0 ** (rate / bandwidth) - 1.0) * noise / gain


def _sounding_matrix(cfg: ScenarioConfig, warnings: List[str]) -> np.ndarray:
    """(N, C_ce) sweep matrix with rows as orthogonal as the grid allows.

    Power-of-two sizes use +-1 Walsh rows mapped onto the {0, pi} phases of
    the b-bit grid. Other sizes fall back to a phase-quantized DFT, which is
    only approximately orthogonal; least squares then runs through the
    pseudo-inverse.
    """
    n, c = cfg.num_elements, cfg.ce_codebook_size
    size = max(n, c)
    if size & (size - 1) == 0:
        mat = hadamard(size).astype(float)
        if c >= n:
            phi = mat[:n, :c].astype(complex)
        else:
            warnings.append(
                f"ce codebook: {c} sweeps < {n} elements, reflected-path "
                "least squares is rank deficient"
            )
            phi = mat[:n, :c].astype(complex)
    else:
        warnings.append(
            f"ce codebook: size {c} is not a power of two, using a "
            "phase-quantized DFT design (approximately orthogonal)"
        )
        grid = 2 ** cfg.phase_bits
        angle = 2.0 * np.pi * np.outer(np.arange(n), np.arange(c)) / c
        idx = np.round(angle / (2.0 * np.pi / grid)).astype(int) % grid
        phi = np.exp(2j * np.pi * idx / grid)
    return phi


def dump_direct_csv(realizations) -> str:
    """Debug dump of direct channels as CSV rows (slot, ue, antenna, re, im)."""
    lines = ["slot,ue,antenna,re,im"]
    for chan in realizations:
        k_ues, m_ant = chan.direct.shape
        for k in range(k_ues):
            for m in range(m_ant):
                v = chan.direct[k, m]
                lines.append(f"{chan.slot},{k},{m},{float(v.real)!r},{float(v.imag)!r}")
    return "\n".join(lines) + "\n"


def build_codebooks(cfg: ScenarioConfig) -> Codebooks:
    """Deterministic codebooks for a given configuration (no RNG involved).

    AP beams: uniformly spaced steering vectors of a half-wavelength array
    covering the full sector in sine space. Sounding configurations: all
    elements on, phases from the orthogonal design above. Control
    configuration: all on, phase index 0 (wide-coverage proxy).
    """
    m, c_ap = cfg.num_antennas, cfg.ap_codebook_size
    if cfg.phase_bits < 1:
        raise ConfigError("phase_bits must be >= 1 to realize the 0/pi sweep")

    directions = np.linspace(-1.0, 1.0, c_ap)
    steer = np.exp(1j * np.pi * np.outer(directions, np.arange(m))) / np.sqrt(m)

    warnings: List[str] = []
    phi = _sounding_matrix(cfg, warnings)
    # map each sweep column onto a surface configuration on the b-bit grid
    grid = cfg.num_phases
    idx = (np.round(np.angle(phi) / (2.0 * np.pi / grid)).astype(int)) % grid
    configs = [
        RisConfiguration(np.ones(cfg.num_elements, bool), idx[:, i].astype(np.int64),
                         cfg.phase_bits)
        for i in range(cfg.ce_codebook_size)
    ]
    # exact quantized matrix actually loaded during sounding
    phi_q = np.stack([c.phasor for c in configs], axis=1)
    pinv = np.linalg.pinv(phi_q)

    ctl = RisConfiguration.all_on(cfg.num_elements, cfg.phase_bits)
    return Codebooks(steer, phi_q, configs, pinv, ctl, warnings)
