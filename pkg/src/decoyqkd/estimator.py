"""Decoy-state security bounds and the transmittance-ratio attack monitor.

Everything here is pure arithmetic over the measured per-class tallies, so a
certificate can be audited from the counters alone; no randomness is involved.
"""

from __future__ import annotations

import math

from .core import AlarmVerdict, ClassTally, DecoyBounds


def q_nu_lower(q_nu: float, n_nu_sent: int, sigmas: float) -> float:
    """Deflate the measured decoy transmittance by ``sigmas`` standard deviations.

    The standard deviation is the binomial one for a click probability
    estimated from ``n_nu_sent`` pulses: sqrt(q_nu (1 - q_nu) / n_nu_sent).
    Ten standard deviations leave a failure probability of about 1.5e-23.
    Clamped at 0.
    """
    if n_nu_sent <= 0:
        raise ValueError("n_nu_sent must be > 0 to deflate the decoy transmittance")
    if not (0.0 <= q_nu <= 1.0):
        raise ValueError(f"q_nu={q_nu!r} outside [0, 1]")
    sigma = math.sqrt(q_nu * (1.0 - q_nu) / n_nu_sent)
    return max(0.0, q_nu - sigmas * sigma)


def _q1_bracket_terms(mu: float, nu: float) -> tuple[float, float, float]:
    if not (0.0 < nu < mu):
        raise ValueError(f"need 0 < nu < mu, got nu={nu!r}, mu={mu!r}")
    prefactor = mu * mu * math.exp(-mu) / (mu * nu - nu * nu)
    e_nu = math.exp(nu)
    e_mu = math.exp(mu)
    return prefactor, e_nu, e_mu


def q1_lower(mu: float, nu: float, q_mu: float, q_nu_low: float,
             eps_mu: float) -> float:
    """Lower-bound the single-photon transmittance from one weak decoy state.

    Q1 is the joint probability that a signal pulse carries exactly one photon
    and produces a click. With the deflated decoy transmittance Q_nu^L this is

        Q1^L = mu^2 e^-mu / (mu nu - nu^2) *
               [ Q_nu^L e^nu  -  Q_mu e^mu nu^2/mu^2
                 -  eps_mu Q_mu e^mu (mu^2 - nu^2) / (mu^2 / 2) ]

    where the last term removes the worst-case vacuum/dark contribution using
    the measured signal error rate with dark errors at rate 1/2. Clamped at 0.
    """
    prefactor, e_nu, e_mu = _q1_bracket_terms(mu, nu)
    bracket = (
        q_nu_low * e_nu
        - q_mu * e_mu * (nu * nu) / (mu * mu)
        - eps_mu * q_mu * e_mu * (mu * mu - nu * nu) / (0.5 * mu * mu)
    )
    return max(0.0, prefactor * bracket)


def q1_lower_decoy_scaled(mu: float, nu: float, q_nu: float, q_nu_low: float,
                          eps_mu: float, q_mu: float) -> float:
    """Variant of :func:`q1_lower` with the decoy transmittance in the
    subtracted term (``Q_nu e^mu nu^2/mu^2`` instead of ``Q_mu ...``).

    Some write-ups of the one-decoy bound scale the decoy rather than the
    signal transmittance there. Because Q_nu < Q_mu, this subtracts less and
    yields a looser-looking but unsound bound (it can exceed the true
    single-photon transmittance), so the pipeline never uses it; it exists
    only for side-by-side comparison.
    """
    prefactor, e_nu, e_mu = _q1_bracket_terms(mu, nu)
    bracket = (
        q_nu_low * e_nu
        - q_nu * e_mu * (nu * nu) / (mu * mu)
        - eps_mu * q_mu * e_mu * (mu * mu - nu * nu) / (0.5 * mu * mu)
    )
    return max(0.0, prefactor * bracket)


def eps1_upper(eps_mu: float, q_mu: float, q1_low: float) -> float:
    """Upper-bound the single-photon error rate.

    Attributes every signal bit error to single-photon pulses:
    eps1^U = eps_mu Q_mu / Q1^L, capped at 1/2. Returns NaN when
    ``q1_low`` is 0 — the bound is undefined and the caller must abort.
    """
    if q1_low < 0:
        raise ValueError(f"q1_low={q1_low!r} must be >= 0")
    if q1_low == 0.0:
        return math.nan
    return min(0.5, eps_mu * q_mu / q1_low)


def decoy_bounds(tally_mu: ClassTally, tally_nu: ClassTally, mu: float,
                 nu: float, sigmas: float) -> DecoyBounds:
    """Assemble the full bound set from the measured per-class tallies."""
    q_nu_l = q_nu_lower(tally_nu.q, tally_nu.sent_count, sigmas)
    q1 = q1_lower(mu, nu, tally_mu.q, q_nu_l, tally_mu.eps)
    eps1 = eps1_upper(tally_mu.eps, tally_mu.q, q1)
    return DecoyBounds(
        q_nu_lower=q_nu_l,
        q1_lower=q1,
        eps1_upper=eps1,
        sigma_used=sigmas,
        q_nu_clamped=(q_nu_l == 0.0 and tally_nu.q > 0.0),
        q1_clamped=(q1 == 0.0),
        eps1_clamped=(not math.isnan(eps1)) and eps1 == 0.5,
    )


def expected_ratio(mu: float, nu: float, eta: float, y0: float) -> float:
    """Expected decoy-to-signal transmittance ratio with no eavesdropper.

    (nu * eta + Y0) / (mu * eta + Y0): each class clicks at roughly its mean
    photon number times the system efficiency, plus the dark rate.
    """
    denom = mu * eta + y0
    if denom <= 0.0:
        raise ValueError("mu * eta + y0 must be positive")
    return (nu * eta + y0) / denom


def ratio_sigma(q_mu: float, n_mu_sent: int, q_nu: float,
                n_nu_sent: int) -> float:
    """One-sigma statistical spread of the measured ratio Q_nu / Q_mu.

    First-order error propagation with independent binomial uncertainties on
    the two measured transmittances.
    """
    if n_mu_sent <= 0 or n_nu_sent <= 0 or q_mu <= 0.0 or q_nu <= 0.0:
        raise ValueError("ratio_sigma needs positive counts and transmittances")
    rel_mu = (1.0 - q_mu) / (q_mu * n_mu_sent)
    rel_nu = (1.0 - q_nu) / (q_nu * n_nu_sent)
    return (q_nu / q_mu) * math.sqrt(rel_mu + rel_nu)


def pns_alarm(ratio_measured: float, ratio_expected: float, lower_tol: float,
              upper_tol: float) -> AlarmVerdict:
    """Classify the measured transmittance ratio against its expectation.

    A ratio below expectation beyond ``lower_tol`` (relative) indicates that
    weak pulses were suppressed relative to bright ones — the signature of a
    photon-number-splitting attack. A ratio above expectation beyond
    ``upper_tol`` points at source/detector artifacts (intensity
    miscalibration, afterpulsing) that would inflate the certified rate.
    """
    if ratio_expected <= 0.0:
        raise ValueError("ratio_expected must be positive")
    if ratio_measured < ratio_expected * (1.0 - lower_tol):
        return AlarmVerdict.PNS_SUSPECTED
    if ratio_measured > ratio_expected * (1.0 + upper_tol):
        return AlarmVerdict.ARTIFACT_SUSPECTED
    return AlarmVerdict.OK
