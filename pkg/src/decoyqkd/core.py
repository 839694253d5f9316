"""Shared domain types for the decoy-state BB84 simulator.

Holds the session configuration with its validation rules, the per-pulse and
per-detection record types, per-intensity-class counters, the decoy security
bounds container, the final key report, and the binary entropy function used
throughout the classical post-processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional


class IntensityClass(Enum):
    """Pulse intensity class: bright signal pulses or weak decoy pulses."""

    SIGNAL = 0
    DECOY = 1


class DetectionCause(Enum):
    """What fired the detector on a clicked gate."""

    PHOTON = 0
    DARK = 1
    AFTERPULSE = 2


class AlarmVerdict(Enum):
    """Outcome of the transmittance-ratio eavesdropping check."""

    OK = "ok"
    PNS_SUSPECTED = "pns_suspected"
    ARTIFACT_SUSPECTED = "artifact_suspected"


@dataclass(frozen=True)
class PnsAttack:
    """Photon-number-splitting eavesdropper.

    Eve counts photons nondestructively, keeps one photon of every
    multi-photon pulse and forwards the rest over a lossless line, and blocks
    a fraction ``block_fraction`` of single-photon pulses to hide the gain.
    ``bypass_bob_loss`` additionally lets forwarded photons skip the receiver
    internal loss (default: only the fibre channel is bypassed).
    """

    block_fraction: float
    bypass_bob_loss: bool = False


class ConfigError(ValueError):
    """A session configuration violates an invariant; message names the field."""


def db_to_transmittance(loss_db: float) -> float:
    """Convert a loss in dB to a linear power transmittance."""
    return 10.0 ** (-loss_db / 10.0)


# Paper-grade defaults for a 25 km one-way fibre system: signal/decoy means
# 0.425/0.204, 7.143 MHz clock, 4.7 dB channel, 2.5 dB receiver, overall
# detection efficiency 1.95e-2, summed dark rate 9.4e-5 per gate.
DEFAULT_CHANNEL_TRANSMITTANCE = db_to_transmittance(4.7)
DEFAULT_BOB_TRANSMITTANCE = db_to_transmittance(2.5)
DEFAULT_SYSTEM_EFFICIENCY = 1.95e-2
DEFAULT_DETECTOR_EFFICIENCY = DEFAULT_SYSTEM_EFFICIENCY / (
    DEFAULT_CHANNEL_TRANSMITTANCE * DEFAULT_BOB_TRANSMITTANCE
)
# Misrouting probability calibrated so the signal-class QBER comes out at
# 1.72% under the defaults: e_d = (eps_mu*(mu*eta + Y0) - Y0/2) / (mu*eta).
DEFAULT_OPTICAL_ERROR_PROB = 0.01172


@dataclass(frozen=True)
class SessionConfig:
    """All physical and protocol parameters of one QKD session.

    Losses may be given either as linear transmittances or in dB (the
    ``*_loss_db`` fields); ``validate_config`` canonicalizes dB inputs and all
    internal math uses linear transmittances. Counts are 64-bit, probabilities
    double precision.
    """

    mu: float = 0.425
    nu: float = 0.204
    decoy_probability: float = 0.25
    clock_rate_hz: float = 7.143e6
    channel_transmittance: Optional[float] = None
    channel_loss_db: Optional[float] = None
    bob_transmittance: Optional[float] = None
    bob_loss_db: Optional[float] = None
    detector_efficiency: float = DEFAULT_DETECTOR_EFFICIENCY
    dark_count_prob: float = 9.4e-5
    optical_error_prob: float = DEFAULT_OPTICAL_ERROR_PROB
    afterpulse_prob: float = 0.0
    attack: Optional[PnsAttack] = None
    target_sifted_bits: int = 1_000_000
    bound_sigmas: float = 10.0
    alarm_sigmas: float = 10.0
    f_ec_assumed: float = 1.10
    seed: int = 1
    block_size: int = 1 << 22
    max_pulses: Optional[int] = None

    @property
    def eta_system(self) -> float:
        """Overall per-photon detection probability: channel * receiver * detector."""
        return (
            self.channel_transmittance
            * self.bob_transmittance
            * self.detector_efficiency
        )

    @property
    def eta_bob(self) -> float:
        """Receiver-internal per-photon detection probability (channel excluded)."""
        return self.bob_transmittance * self.detector_efficiency

    @property
    def pulse_budget(self) -> int:
        """Hard cap on emitted pulses before a session aborts as starved."""
        if self.max_pulses is not None:
            return self.max_pulses
        return max(100_000_000, 2000 * self.target_sifted_bits)


def _check_prob(name: str, value: float, *, open_zero: bool = False,
                open_one: bool = False) -> None:
    lo_ok = value > 0.0 if open_zero else value >= 0.0
    hi_ok = value < 1.0 if open_one else value <= 1.0
    if not (lo_ok and hi_ok and math.isfinite(value)):
        lo = "(" if open_zero else "["
        hi = ")" if open_one else "]"
        raise ConfigError(f"{name}={value!r} must lie in {lo}0, 1{hi}")


def _resolve_transmittance(name: str, linear: Optional[float],
                           loss_db: Optional[float], default: float) -> float:
    if linear is not None and loss_db is not None:
        raise ConfigError(
            f"give either {name}_transmittance or {name}_loss_db, not both"
        )
    if loss_db is not None:
        if loss_db < 0 or not math.isfinite(loss_db):
            raise ConfigError(f"{name}_loss_db={loss_db!r} must be >= 0")
        return db_to_transmittance(loss_db)
    if linear is None:
        return default
    _check_prob(f"{name}_transmittance", linear)
    return linear


def validate_config(cfg: SessionConfig) -> SessionConfig:
    """Validate every invariant and return the canonical config.

    dB loss fields are converted to linear transmittances; the returned config
    carries only linear values. Raises :class:`ConfigError` naming the
    offending field otherwise.
    """
    channel = _resolve_transmittance(
        "channel", cfg.channel_transmittance, cfg.channel_loss_db,
        DEFAULT_CHANNEL_TRANSMITTANCE,
    )
    bob = _resolve_transmittance(
        "bob", cfg.bob_transmittance, cfg.bob_loss_db, DEFAULT_BOB_TRANSMITTANCE,
    )

    if not (math.isfinite(cfg.mu) and cfg.mu > 0):
        raise ConfigError(f"mu={cfg.mu!r} must be > 0")
    if not (math.isfinite(cfg.nu) and 0 < cfg.nu < cfg.mu):
        raise ConfigError(
            f"nu={cfg.nu!r} must satisfy 0 < nu < mu (mu={cfg.mu!r}); the "
            "decoy bound denominators mu*nu - nu^2 and mu^2 - nu^2 must be positive"
        )
    _check_prob("decoy_probability", cfg.decoy_probability, open_zero=True,
                open_one=True)
    if not (math.isfinite(cfg.clock_rate_hz) and cfg.clock_rate_hz > 0):
        raise ConfigError(f"clock_rate_hz={cfg.clock_rate_hz!r} must be > 0")
    _check_prob("detector_efficiency", cfg.detector_efficiency)
    _check_prob("dark_count_prob", cfg.dark_count_prob)
    _check_prob("optical_error_prob", cfg.optical_error_prob)
    _check_prob("afterpulse_prob", cfg.afterpulse_prob)
    if cfg.attack is not None:
        _check_prob("attack.block_fraction", cfg.attack.block_fraction)
    if cfg.target_sifted_bits <= 0:
        raise ConfigError(
            f"target_sifted_bits={cfg.target_sifted_bits!r} must be > 0")
    if cfg.bound_sigmas < 0:
        raise ConfigError(f"bound_sigmas={cfg.bound_sigmas!r} must be >= 0")
    if cfg.alarm_sigmas < 0:
        raise ConfigError(f"alarm_sigmas={cfg.alarm_sigmas!r} must be >= 0")
    if cfg.f_ec_assumed < 1.0:
        raise ConfigError(f"f_ec_assumed={cfg.f_ec_assumed!r} must be >= 1")
    if cfg.block_size < 100_000:
        raise ConfigError(
            f"block_size={cfg.block_size!r} must be >= 1e5 (afterpulse memory "
            "is truncated at block boundaries; small blocks bias it)"
        )
    if cfg.max_pulses is not None and cfg.max_pulses <= 0:
        raise ConfigError(f"max_pulses={cfg.max_pulses!r} must be > 0")
    if not (0 <= cfg.seed < 2 ** 64):
        raise ConfigError(f"seed={cfg.seed!r} must be a 64-bit non-negative integer")

    return replace(
        cfg,
        channel_transmittance=channel,
        channel_loss_db=None,
        bob_transmittance=bob,
        bob_loss_db=None,
    )


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy H2(x) = -x log2 x - (1-x) log2 (1-x).

    The limits at 0 and 1 are defined as 0. Raises ValueError outside [0, 1].
    """
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"binary_entropy argument {x!r} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


@dataclass(frozen=True)
class PulseRecord:
    """Ground truth for one emitted pulse."""

    index: int
    intensity_class: IntensityClass
    photon_count: int
    alice_basis: int
    alice_bit: int


@dataclass(frozen=True)
class DetectionRecord:
    """Bob's measurement outcome for one clock cycle."""

    index: int
    clicked: bool
    bob_basis: int
    bob_bit: Optional[int]
    cause: Optional[DetectionCause]

    def __post_init__(self):
        if self.clicked and (self.bob_bit is None or self.cause is None):
            raise ValueError("clicked detection needs bob_bit and cause")
        if not self.clicked and self.bob_bit is not None:
            raise ValueError("bob_bit is defined only when clicked")


@dataclass
class ClassTally:
    """Counters for one intensity class.

    Invariant: error_count <= sifted_count <= clicked_count <= sent_count.
    Tallies merge associatively, so parallel workers can count privately and
    combine.
    """

    sent_count: int = 0
    clicked_count: int = 0
    sifted_count: int = 0
    error_count: int = 0

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        if not (0 <= self.error_count <= self.sifted_count
                <= self.clicked_count <= self.sent_count):
            raise ValueError(
                "tally ordering violated: "
                f"errors={self.error_count} sifted={self.sifted_count} "
                f"clicked={self.clicked_count} sent={self.sent_count}"
            )

    @property
    def q(self) -> float:
        """Measured transmittance: clicked / sent."""
        return self.clicked_count / self.sent_count if self.sent_count else 0.0

    @property
    def eps(self) -> float:
        """Measured sifted-bit error rate: errors / sifted."""
        return self.error_count / self.sifted_count if self.sifted_count else 0.0

    def merge(self, other: "ClassTally") -> "ClassTally":
        return ClassTally(
            self.sent_count + other.sent_count,
            self.clicked_count + other.clicked_count,
            self.sifted_count + other.sifted_count,
            self.error_count + other.error_count,
        )

    def __add__(self, other: "ClassTally") -> "ClassTally":
        return self.merge(other)


@dataclass(frozen=True)
class DecoyBounds:
    """Security bounds estimated from the per-class tallies.

    ``q_nu_lower`` is the statistically deflated decoy transmittance,
    ``q1_lower`` the lower bound on the single-photon transmittance (clamped
    at 0; ``q1_clamped`` records whether the clamp fired), ``eps1_upper`` the
    upper bound on the single-photon error rate (NaN and ``eps1_defined``
    False when q1_lower = 0, in which case no key may be distilled).
    """

    q_nu_lower: float
    q1_lower: float
    eps1_upper: float
    sigma_used: float
    q_nu_clamped: bool = False
    q1_clamped: bool = False
    eps1_clamped: bool = False

    @property
    def eps1_defined(self) -> bool:
        return not math.isnan(self.eps1_upper)


@dataclass(frozen=True)
class KeyReport:
    """Certified outcome of one session, ready for serialization.

    ``rate_bps`` is the certified key rate: zero whenever the report is
    aborted (collapsed bounds, ratio alarm, or failed reconciliation).
    ``rate_bound_bps`` keeps the raw secure-rate certificate implied by the
    decoy bounds alone, which is what the rate-versus-ratio curve plots.
    """

    n_mu_sift: int
    n_1_sift_lower: int
    leaked_bits: int
    f_ec_achieved: float
    secure_length: int
    session_seconds: float
    rate_bps: float
    ratio_measured: float
    ratio_expected: float
    alarm: AlarmVerdict
    aborted: bool
    rate_bound_bps: float
    q_mu: float
    q_nu: float
    eps_mu: float
    eps_nu: float
    q1_lower: float
    eps1_upper: float
    pulses_emitted: int
    seed: int
    config: Optional[SessionConfig] = None
