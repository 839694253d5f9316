import math

import numpy as np
import pytest

from decoyqkd import (
    AlarmVerdict,
    ClassTally,
    decoy_bounds,
    eps1_upper,
    expected_ratio,
    pns_alarm,
    q1_lower,
    q1_lower_decoy_scaled,
    q_nu_lower,
    ratio_sigma,
)

# One production-scale session: 38.7 s of 7.143 MHz pulses, one quarter decoys.
PAPER_N_NU = int(0.25 * 7.143e6 * 38.7)
PAPER_N_MU = int(0.75 * 7.143e6 * 38.7)


class TestQNuLower:
    def test_zero_sigmas_identity(self):
        assert q_nu_lower(0.004072, PAPER_N_NU, 0) == 0.004072

    def test_paper_scale_deflation(self):
        # mpmath oracle: 0.004072 - 10*sqrt(q(1-q)/69108525) at 50 digits.
        got = q_nu_lower(0.004072, PAPER_N_NU, 10)
        assert math.isclose(got, 0.0039953958948014168, rel_tol=1e-12)
        # About 1.88% below the measured value.
        assert math.isclose(got, 0.004072 * (1 - 0.0188), rel_tol=2e-4)

    def test_clamped_to_zero(self):
        assert q_nu_lower(1e-6, 100, 10) == 0.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            q_nu_lower(0.004, 0, 10)


class TestQ1Lower:
    # Frozen via a 50-digit mpmath evaluation of the bound.
    ORACLE_FULL = 4.453521152170e-3
    ORACLE_NO_EPS = 5.342518918837e-3

    def test_paper_point(self):
        got = q1_lower(0.425, 0.204, q_mu=8.3815e-3, q_nu_low=4.072e-3,
                       eps_mu=0.0172)
        assert math.isclose(got, self.ORACLE_FULL, rel_tol=1e-11)
        assert abs(got - 4.454e-3) < 1e-6

    def test_paper_point_no_error_term(self):
        got = q1_lower(0.425, 0.204, q_mu=8.3815e-3, q_nu_low=4.072e-3,
                       eps_mu=0.0)
        assert math.isclose(got, self.ORACLE_NO_EPS, rel_tol=1e-11)
        assert abs(got - 5.343e-3) < 1e-6

    def test_clamp_negative_bracket(self):
        assert q1_lower(0.425, 0.204, q_mu=8.3815e-3, q_nu_low=0.0,
                        eps_mu=0.3) == 0.0

    def test_rejects_bad_ordering(self):
        with pytest.raises(ValueError):
            q1_lower(0.2, 0.2, 0.008, 0.004, 0.0)
        with pytest.raises(ValueError):
            q1_lower(0.2, 0.4, 0.008, 0.004, 0.0)

    def test_monotone_in_decoy_bound_and_error(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            mu = rng.uniform(0.15, 1.0)
            nu = rng.uniform(0.02, 0.9) * mu
            q_mu = rng.uniform(1e-4, 0.05)
            q_nu_low = q_mu * rng.uniform(0.2, 0.8)
            eps = rng.uniform(0.0, 0.1)
            base = q1_lower(mu, nu, q_mu, q_nu_low, eps)
            up = q1_lower(mu, nu, q_mu, q_nu_low * 1.05, eps)
            worse = q1_lower(mu, nu, q_mu, q_nu_low, eps + 0.01)
            assert up >= base
            assert worse <= base

    def test_decoy_scaled_variant_is_looser(self):
        # The alternative transcription subtracts the (smaller) decoy
        # transmittance and therefore never yields a smaller bound.
        rng = np.random.default_rng(6)
        for _ in range(200):
            mu = rng.uniform(0.2, 0.9)
            nu = rng.uniform(0.1, 0.8) * mu
            q_mu = rng.uniform(1e-3, 0.05)
            q_nu = q_mu * rng.uniform(0.2, 0.7)
            eps = rng.uniform(0.0, 0.05)
            main = q1_lower(mu, nu, q_mu, q_nu, eps)
            alt = q1_lower_decoy_scaled(mu, nu, q_nu, q_nu, eps, q_mu)
            assert alt >= main


class TestEps1Upper:
    def test_zero_errors(self):
        assert eps1_upper(0.0, 8.3815e-3, 4.454e-3) == 0.0

    def test_paper_point(self):
        got = eps1_upper(0.0172, 8.3815e-3, 4.454e-3)
        assert abs(got - 0.03236) < 1e-4

    def test_identity_ratio(self):
        assert eps1_upper(0.0172, 8.3815e-3, 8.3815e-3) == 0.0172

    def test_cap_at_half(self):
        assert eps1_upper(0.4, 0.01, 1e-4) == 0.5

    def test_undefined_when_no_single_photons(self):
        assert math.isnan(eps1_upper(0.0172, 8.3815e-3, 0.0))


class TestExpectedRatio:
    def test_paper_value(self):
        got = expected_ratio(0.425, 0.204, 1.95e-2, 9.4e-5)
        assert abs(got - 0.486) < 1e-3

    def test_equal_intensities(self):
        assert expected_ratio(0.3, 0.3, 0.02, 1e-4) == 1.0

    def test_dark_counts_only(self):
        assert expected_ratio(0.425, 0.204, 0.0, 9.4e-5) == 1.0

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            expected_ratio(0.425, 0.204, 0.0, 0.0)


class TestPnsAlarm:
    def test_exact_match_ok(self):
        assert pns_alarm(0.486, 0.486, 0.02, 0.02) is AlarmVerdict.OK

    def test_seventeen_percent_deficit(self):
        tol = 10 * ratio_sigma(8.3815e-3, PAPER_N_MU, 4.072e-3,
                               PAPER_N_NU) / 0.486
        assert tol < 0.05
        assert pns_alarm(0.403, 0.486, tol, tol) is AlarmVerdict.PNS_SUSPECTED

    def test_excess_is_artifact(self):
        tol = 10 * ratio_sigma(8.3815e-3, PAPER_N_MU, 4.072e-3,
                               PAPER_N_NU) / 0.486
        assert pns_alarm(0.55, 0.486, tol, tol) is AlarmVerdict.ARTIFACT_SUSPECTED

    def test_requires_positive_expectation(self):
        with pytest.raises(ValueError):
            pns_alarm(0.4, 0.0, 0.02, 0.02)


class TestDecoyBounds:
    def test_flags_propagate(self):
        tally_mu = ClassTally(1_000_000, 8400, 4200, 72)
        tally_nu = ClassTally(300_000, 1200, 600, 16)
        b = decoy_bounds(tally_mu, tally_nu, 0.425, 0.204, sigmas=10)
        assert b.sigma_used == 10
        assert b.q_nu_lower < tally_nu.q
        assert b.q1_lower >= 0.0
        assert b.eps1_defined == (b.q1_lower > 0.0)

    def test_collapsed_decoy_statistics(self):
        tally_mu = ClassTally(10_000, 84, 42, 1)
        tally_nu = ClassTally(100, 1, 1, 0)
        b = decoy_bounds(tally_mu, tally_nu, 0.425, 0.204, sigmas=10)
        assert b.q_nu_lower == 0.0
        assert b.q_nu_clamped
        assert b.q1_clamped and b.q1_lower == 0.0
        assert not b.eps1_defined
