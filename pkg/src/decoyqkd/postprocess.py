"""Key distillation: leak accounting, secure length, Toeplitz hashing, certificate.

The secure length of a session is

    L = -N_mu_sift * f_ec * H2(eps_mu) + N_1_sift^L * (1 - H2(eps_1^U))

floored at zero: the first term pays for the reconciliation leak, the second
credits only the provably single-photon sifted bits. Privacy amplification
compresses the reconciled string to L bits with a seeded Toeplitz matrix over
GF(2), a universal-2 family.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional

import gmpy2
import numpy as np

from . import estimator
from .cascade import ReconciliationResult, cascade_reconcile, poly_hash64
from .core import (
    AlarmVerdict,
    ClassTally,
    DecoyBounds,
    KeyReport,
    SessionConfig,
    binary_entropy,
    validate_config,
)

__all__ = [
    "cascade_reconcile",
    "ReconciliationResult",
    "poly_hash64",
    "fec_efficiency",
    "secure_length",
    "n1_sift_lower",
    "privacy_amplify",
    "certify",
]


def fec_efficiency(leaked_bits: int, n: int, eps: float) -> float:
    """Reconciliation efficiency relative to the Shannon limit: leak / (n H2(eps))."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not (0.0 < eps < 0.5):
        raise ValueError(
            f"eps={eps!r} must be in (0, 0.5); the Shannon cost vanishes at 0")
    return leaked_bits / (n * binary_entropy(eps))


def secure_length(n_mu_sift: int, n_1_sift_lower: int, eps_mu: float,
                  eps1_upper: float, f_ec: float) -> int:
    """Certified secret length, floored at zero (negative means abort, no key)."""
    value = (-n_mu_sift * f_ec * binary_entropy(eps_mu)
             + n_1_sift_lower * (1.0 - binary_entropy(eps1_upper)))
    return max(0, math.floor(value))


def n1_sift_lower(q1_lower: float, n_signal_sent: int) -> int:
    """Lower bound on sifted bits from single-photon signal pulses.

    Half of the single-photon clicks survive basis sifting, and the click
    count is bounded by the transmittance bound times the number of signal
    pulses sent.
    """
    if q1_lower < 0 or n_signal_sent < 0:
        raise ValueError("q1_lower and n_signal_sent must be >= 0")
    return math.floor(0.5 * q1_lower * n_signal_sent)


def _bits_to_strided_int(bits: np.ndarray) -> gmpy2.mpz:
    # One bit per 32-bit slot: coefficient sums of the integer product then
    # reproduce the GF(2) convolution without carry interference.
    slots = np.ascontiguousarray(bits, dtype="<u4")
    return gmpy2.mpz(int.from_bytes(slots.tobytes(), "little"))


def _gf2_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    total = a.size + b.size - 1
    product = int(_bits_to_strided_int(a) * _bits_to_strided_int(b))
    buf = product.to_bytes(4 * (total + 1), "little")
    slots = np.frombuffer(buf, dtype="<u4")[:total]
    return (slots & 1).astype(np.uint8)


def privacy_amplify(reconciled_bits: np.ndarray, out_length: int,
                    hash_seed: np.ndarray) -> np.ndarray:
    """Compress the reconciled key with a seeded Toeplitz matrix over GF(2).

    The seed's ``n + out_length - 1`` bits define T[i, j] = seed[i - j + n - 1]
    (constant along diagonals); the output is T x, computed as a slice of the
    GF(2) convolution of seed and input. Deterministic given the seed.
    """
    bits = np.ascontiguousarray(reconciled_bits, dtype=np.uint8)
    seed = np.ascontiguousarray(hash_seed, dtype=np.uint8)
    n = bits.size
    if out_length < 0:
        raise ValueError("out_length must be >= 0")
    if out_length > n:
        raise ValueError(
            f"out_length={out_length} exceeds input length {n}")
    if out_length == 0:
        return np.zeros(0, dtype=np.uint8)
    needed = n + out_length - 1
    if seed.size != needed:
        raise ValueError(
            f"hash seed must have input + output - 1 = {needed} bits, "
            f"got {seed.size}")
    return _gf2_convolve(seed, bits)[n - 1: n - 1 + out_length]


def _certificate_bits(n_mu_sift: int, n_1_low: int, eps_mu: float,
                      eps1_up: float, leaked_bits: Optional[int],
                      f_ec_assumed: float) -> int:
    """Secure length with the reconciliation cost taken from the actual leak.

    With f_ec measured as leak / (n H2(eps)) the first term of the length
    formula equals the disclosed bit count exactly, so charging the leak
    directly is the same accounting without a 0/0 at eps_mu = 0.
    """
    if math.isnan(eps1_up):
        return 0
    if leaked_bits is None:
        ec_cost = n_mu_sift * f_ec_assumed * binary_entropy(eps_mu)
    else:
        ec_cost = float(leaked_bits)
    gain = n_1_low * (1.0 - binary_entropy(eps1_up))
    return max(0, math.floor(gain - ec_cost))


def certify(tally_signal: ClassTally, tally_decoy: ClassTally,
            bounds: DecoyBounds, reconciliation: Optional[ReconciliationResult],
            cfg: SessionConfig) -> KeyReport:
    """Assemble the certified key report for one completed session.

    The report is marked aborted — certified length and rate zero — when the
    single-photon bounds collapsed, the transmittance-ratio alarm fired in
    either direction, or reconciliation is missing or failed verification.
    ``rate_bound_bps`` retains the raw certificate implied by the bounds.
    """
    cfg = validate_config(cfg)
    pulses_emitted = tally_signal.sent_count + tally_decoy.sent_count
    if pulses_emitted <= 0:
        raise ValueError("certify needs a non-empty session")
    seconds = pulses_emitted / cfg.clock_rate_hz

    eps_mu = tally_signal.eps
    n_mu_sift = tally_signal.sifted_count
    n1_low = n1_sift_lower(bounds.q1_lower, tally_signal.sent_count)

    ratio_expected = estimator.expected_ratio(
        cfg.mu, cfg.nu, cfg.eta_system, cfg.dark_count_prob)
    if tally_signal.clicked_count > 0 and tally_decoy.clicked_count > 0:
        ratio_measured = tally_decoy.q / tally_signal.q
        tol = cfg.alarm_sigmas * estimator.ratio_sigma(
            tally_signal.q, tally_signal.sent_count,
            tally_decoy.q, tally_decoy.sent_count) / ratio_expected
        alarm = estimator.pns_alarm(ratio_measured, ratio_expected, tol, tol)
    else:
        ratio_measured = math.nan
        alarm = AlarmVerdict.OK

    leaked = reconciliation.leaked_bits if reconciliation is not None else None
    if (reconciliation is not None and n_mu_sift > 0
            and 0.0 < eps_mu < 0.5):
        f_ec_achieved = fec_efficiency(leaked, n_mu_sift, eps_mu)
    else:
        f_ec_achieved = math.nan

    bound_bits = _certificate_bits(n_mu_sift, n1_low, eps_mu,
                                   bounds.eps1_upper, leaked,
                                   cfg.f_ec_assumed)
    rate_bound = bound_bits / seconds

    aborted = (
        bounds.q1_lower == 0.0
        or not bounds.eps1_defined
        or alarm is not AlarmVerdict.OK
        or reconciliation is None
        or not reconciliation.verified
        or math.isnan(ratio_measured)
    )
    secure = 0 if aborted else bound_bits

    return KeyReport(
        n_mu_sift=n_mu_sift,
        n_1_sift_lower=n1_low,
        leaked_bits=leaked if leaked is not None else 0,
        f_ec_achieved=f_ec_achieved,
        secure_length=secure,
        session_seconds=seconds,
        rate_bps=max(0.0, secure / seconds),
        ratio_measured=ratio_measured,
        ratio_expected=ratio_expected,
        alarm=alarm,
        aborted=aborted,
        rate_bound_bps=rate_bound,
        q_mu=tally_signal.q,
        q_nu=tally_decoy.q,
        eps_mu=eps_mu,
        eps_nu=tally_decoy.eps,
        q1_lower=bounds.q1_lower,
        eps1_upper=bounds.eps1_upper,
        pulses_emitted=pulses_emitted,
        seed=cfg.seed,
        config=cfg,
    )
