"""Closed-form predictions the Monte-Carlo results are checked against.

For a Poissonian source of mean x behind total efficiency eta the threshold
detector clicks with probability Q_x = 1 - (1 - Y0) e^{-x eta}; the sifted
error rate is modelled as (e_d x eta + Y0/2) / Q_x (misrouted photons plus
fair-coin dark counts). The same machinery evaluates the interceptor's
closed forms, which makes the "keep Bob's rate unchanged" blocking fraction a
one-dimensional root find.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from . import estimator
from .core import PnsAttack, SessionConfig, binary_entropy, validate_config


@dataclass(frozen=True)
class ClassPrediction:
    """Closed-form per-class statistics."""

    q: float
    eps: float


def predict_class(cfg: SessionConfig, mean_photons: float) -> ClassPrediction:
    """No-attack click probability and error rate for one intensity class."""
    x_eta = mean_photons * cfg.eta_system
    q = 1.0 - (1.0 - cfg.dark_count_prob) * math.exp(-x_eta)
    eps = (cfg.optical_error_prob * x_eta + 0.5 * cfg.dark_count_prob) / q
    return ClassPrediction(q=q, eps=min(eps, 0.5))


def predict_class_attacked(cfg: SessionConfig, mean_photons: float,
                           attack: PnsAttack) -> ClassPrediction:
    """Per-class statistics with the photon-number splitter in the line.

    Forwarded photons see only the receiver (and optionally just the
    detector), so the click probability averages (1 - eta_fwd)^m over the
    forwarded photon number m: vacuum stays vacuum, singles pass with
    probability 1 - block_fraction, and n >= 2 forwards n - 1.
    """
    x = mean_photons
    eta_fwd = cfg.detector_efficiency if attack.bypass_bob_loss else cfg.eta_bob
    b = attack.block_fraction
    qm = 1.0 - eta_fwd
    p0 = math.exp(-x)
    p1 = x * p0
    # E[(1 - eta)^m] split by emitted photon number.
    if qm > 0.0:
        multi = (math.exp(-x * eta_fwd) - p0 - p1 * qm) / qm
    else:
        multi = 0.0
    survive = p0 + p1 * (b + (1.0 - b) * qm) + multi
    q = 1.0 - (1.0 - cfg.dark_count_prob) * survive
    photon_click = 1.0 - survive
    wrong = cfg.optical_error_prob * photon_click \
        + 0.5 * cfg.dark_count_prob * survive
    eps = wrong / q if q > 0 else 0.5
    return ClassPrediction(q=q, eps=min(eps, 0.5))


def rate_matched_block_fraction(cfg: SessionConfig) -> float:
    """Blocking fraction at which the attacked signal rate equals the honest one.

    The interceptor's lossless line raises Bob's click rate; blocking
    single-photon pulses lowers it again. Solves for the fraction that leaves
    the signal-class click probability unchanged. Raises if even full
    blocking cannot hide the gain.
    """
    cfg = validate_config(cfg)
    attack = cfg.attack if cfg.attack is not None else PnsAttack(0.0)
    honest = predict_class(cfg, cfg.mu).q

    def gap(b: float) -> float:
        probe = PnsAttack(b, bypass_bob_loss=attack.bypass_bob_loss)
        return predict_class_attacked(cfg, cfg.mu, probe).q - honest

    if gap(1.0) > 0.0:
        raise ValueError(
            "lossless forwarding outruns full single-photon blocking; "
            "no rate-matching block fraction exists for this configuration"
        )
    if gap(0.0) <= 0.0:
        return 0.0
    return float(brentq(gap, 0.0, 1.0, xtol=1e-12))


@dataclass(frozen=True)
class AnalyticPrediction:
    """Closed-form session-level expectations."""

    q_mu: float
    q_nu: float
    eps_mu: float
    eps_nu: float
    ratio: float
    q1_lower: float
    eps1_upper: float
    rate_bps: float
    duration_seconds: Optional[float]


def predict_analytic(cfg: SessionConfig,
                     duration_seconds: Optional[float] = None
                     ) -> AnalyticPrediction:
    """Evaluate the full certificate chain on the closed forms, no Monte-Carlo.

    With ``duration_seconds`` the decoy transmittance is statistically
    deflated for the pulse counts of a session of that length; without it the
    asymptotic (infinite-session) rate is returned. The assumed error
    correction efficiency ``cfg.f_ec_assumed`` prices the reconciliation leak.
    """
    cfg = validate_config(cfg)
    sig = predict_class(cfg, cfg.mu)
    dec = predict_class(cfg, cfg.nu)

    q_nu_l = dec.q
    if duration_seconds is not None:
        n_nu = max(1, int(duration_seconds * cfg.clock_rate_hz
                          * cfg.decoy_probability))
        q_nu_l = estimator.q_nu_lower(dec.q, n_nu, cfg.bound_sigmas)

    q1 = estimator.q1_lower(cfg.mu, cfg.nu, sig.q, q_nu_l, sig.eps)
    eps1 = estimator.eps1_upper(sig.eps, sig.q, q1)

    signal_fraction = 1.0 - cfg.decoy_probability
    if q1 > 0.0 and not math.isnan(eps1):
        per_pulse = 0.5 * signal_fraction * (
            q1 * (1.0 - binary_entropy(eps1))
            - sig.q * cfg.f_ec_assumed * binary_entropy(sig.eps)
        )
        rate = max(0.0, per_pulse * cfg.clock_rate_hz)
    else:
        rate = 0.0

    return AnalyticPrediction(
        q_mu=sig.q,
        q_nu=dec.q,
        eps_mu=sig.eps,
        eps_nu=dec.eps,
        ratio=dec.q / sig.q,
        q1_lower=q1,
        eps1_upper=eps1,
        rate_bps=rate,
        duration_seconds=duration_seconds,
    )


def expected_sift_rate_per_pulse(cfg: SessionConfig) -> float:
    """Expected sifted bits per emitted pulse (both classes), no attack."""
    cfg = validate_config(cfg)
    sig = predict_class(cfg, cfg.mu)
    dec = predict_class(cfg, cfg.nu)
    q_avg = ((1.0 - cfg.decoy_probability) * sig.q
             + cfg.decoy_probability * dec.q)
    return 0.5 * q_avg
