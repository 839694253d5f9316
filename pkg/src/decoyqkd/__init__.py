"""Desk-scale simulator and analysis library for one-way decoy-state BB84 QKD.

Pulse-level Monte-Carlo of source, channel, optional photon-number-splitting
eavesdropper, and detectors; BB84 sifting; one-decoy security bounds with
statistical deflation; Cascade reconciliation with exact leak accounting;
Toeplitz privacy amplification; and a certified secure-rate report per session.
"""

from .analytic import (
    AnalyticPrediction,
    predict_analytic,
    predict_class,
    predict_class_attacked,
    rate_matched_block_fraction,
)
from .cascade import ReconciliationResult, cascade_reconcile, poly_hash64
from .core import (
    AlarmVerdict,
    ClassTally,
    ConfigError,
    DecoyBounds,
    DetectionCause,
    DetectionRecord,
    IntensityClass,
    KeyReport,
    PnsAttack,
    PulseRecord,
    SessionConfig,
    binary_entropy,
    db_to_transmittance,
    validate_config,
)
from .estimator import (
    decoy_bounds,
    eps1_upper,
    expected_ratio,
    pns_alarm,
    q1_lower,
    q1_lower_decoy_scaled,
    q_nu_lower,
    ratio_sigma,
)
from .harness import (
    CampaignSummary,
    DurationPoint,
    RatioPoint,
    emit_report,
    extract_key,
    load_config,
    min_positive_duration,
    run_campaign,
    run_certified_session,
    sweep_duration,
    sweep_ratio,
)
from .photonics import (
    DetectionBatch,
    PulseBatch,
    SessionResult,
    SiftStarvationError,
    channel_transmit,
    choose_class,
    detect,
    pns_intercept,
    run_session,
    sample_photon_number,
)
from .postprocess import (
    certify,
    fec_efficiency,
    n1_sift_lower,
    privacy_amplify,
    secure_length,
)
from .protocol import SiftAlignmentError, SiftedBatch, assign_bases_and_bits, sift

__version__ = "0.1.0"
