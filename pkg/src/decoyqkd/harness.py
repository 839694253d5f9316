"""Session orchestration: config files, campaigns, figure sweeps, report emission."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import analytic, estimator
from .cascade import cascade_reconcile
from .core import (
    AlarmVerdict,
    ConfigError,
    KeyReport,
    PnsAttack,
    SessionConfig,
    validate_config,
)
from .photonics import SessionResult, block_rng, run_session
from .postprocess import certify, privacy_amplify

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(SessionConfig)}

CSV_COLUMNS = [
    "session_index", "seconds", "q_mu", "q_nu", "eps_mu", "eps_nu", "ratio",
    "q1_lower", "eps1_upper", "secure_length", "rate_bps", "alarm",
]


def load_config(source: Union[str, Path, dict]) -> SessionConfig:
    """Build a validated :class:`SessionConfig` from a JSON file or dict.

    Unspecified fields take the library defaults (the 25 km reference
    system); dB loss fields are accepted and canonicalized. Unknown keys are
    rejected so typos cannot silently fall back to defaults.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{source}: invalid JSON at line {exc.lineno}, column "
                f"{exc.colno}: {exc.msg}") from exc
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")

    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown configuration fields: {sorted(unknown)}")

    attack = data.get("attack")
    if attack is not None:
        if not isinstance(attack, dict):
            raise ConfigError("attack must be an object or null")
        kind = attack.get("kind", "pns")
        if kind in ("none", None):
            data["attack"] = None
        elif kind == "pns":
            extra = set(attack) - {"kind", "block_fraction", "bypass_bob_loss"}
            if extra:
                raise ConfigError(f"unknown attack fields: {sorted(extra)}")
            if "block_fraction" not in attack:
                raise ConfigError("attack.block_fraction is required")
            data["attack"] = PnsAttack(
                block_fraction=float(attack["block_fraction"]),
                bypass_bob_loss=bool(attack.get("bypass_bob_loss", False)),
            )
        else:
            raise ConfigError(f"unknown attack kind {kind!r}")

    try:
        cfg = SessionConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return validate_config(cfg)


def session_seed(campaign_seed: int, session_index: int) -> int:
    """Derived 64-bit root seed for one session of a campaign."""
    ss = np.random.SeedSequence((campaign_seed, session_index))
    return int(ss.generate_state(1, np.uint64)[0])


def run_certified_session(cfg: SessionConfig, records: str = "none"):
    """Run the full pipeline for one session: simulate, bound, reconcile, certify.

    Returns ``(report, session_result)``. Reconciliation is skipped (and the
    report aborted) when the bounds collapse or the measured signal error rate
    leaves the correctable range.
    """
    cfg = validate_config(cfg)
    result = run_session(cfg, records=records)
    bounds = estimator.decoy_bounds(result.tally_signal, result.tally_decoy,
                                    cfg.mu, cfg.nu, cfg.bound_sigmas)
    reconciliation = None
    eps_mu = result.tally_signal.eps
    if (bounds.q1_lower > 0.0 and bounds.eps1_defined
            and len(result.sifted_signal) > 0 and eps_mu < 0.5):
        qber_estimate = min(max(eps_mu, 1e-4), 0.49)
        rng = block_rng(cfg.seed, 0, stream=2)
        reconciliation = cascade_reconcile(
            result.sifted_signal.alice_bits,
            result.sifted_signal.bob_bits,
            qber_estimate, rng)
    report = certify(result.tally_signal, result.tally_decoy, bounds,
                     reconciliation, cfg)
    return report, result


def extract_key(cfg: SessionConfig, report: KeyReport,
                result: SessionResult) -> np.ndarray:
    """Produce the final key bits for a certified session via Toeplitz hashing."""
    if report.aborted or report.secure_length == 0:
        return np.zeros(0, dtype=np.uint8)
    bits = result.sifted_signal.alice_bits
    rng = block_rng(cfg.seed, 0, stream=3)
    seed_bits = rng.integers(0, 2, bits.size + report.secure_length - 1,
                             dtype=np.uint8)
    return privacy_amplify(bits, report.secure_length, seed_bits)


def _campaign_worker(args) -> KeyReport:
    cfg, seed = args
    report, _ = run_certified_session(replace(cfg, seed=seed))
    return report


@dataclass(frozen=True)
class CampaignSummary:
    """Mean/spread statistics over the sessions of a campaign."""

    n_sessions: int
    n_aborted: int
    rate_bps_mean: float
    rate_bps_std: float
    rate_bound_bps_mean: float
    q_mu_mean: float
    q_mu_std: float
    q_nu_mean: float
    q_nu_std: float
    eps_mu_mean: float
    eps_mu_std: float
    eps_nu_mean: float
    eps_nu_std: float
    ratio_mean: float
    ratio_std: float

    @property
    def all_aborted(self) -> bool:
        return self.n_aborted == self.n_sessions


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return math.nan, math.nan
    mean = statistics.fmean(vals)
    std = statistics.pstdev(vals) if len(vals) > 1 else 0.0
    return mean, std


def summarize(reports: Sequence[KeyReport]) -> CampaignSummary:
    rate = _mean_std([r.rate_bps for r in reports])
    q_mu = _mean_std([r.q_mu for r in reports])
    q_nu = _mean_std([r.q_nu for r in reports])
    eps_mu = _mean_std([r.eps_mu for r in reports])
    eps_nu = _mean_std([r.eps_nu for r in reports])
    ratio = _mean_std([r.ratio_measured for r in reports])
    bound = _mean_std([r.rate_bound_bps for r in reports])
    return CampaignSummary(
        n_sessions=len(reports),
        n_aborted=sum(1 for r in reports if r.aborted),
        rate_bps_mean=rate[0], rate_bps_std=rate[1],
        rate_bound_bps_mean=bound[0],
        q_mu_mean=q_mu[0], q_mu_std=q_mu[1],
        q_nu_mean=q_nu[0], q_nu_std=q_nu[1],
        eps_mu_mean=eps_mu[0], eps_mu_std=eps_mu[1],
        eps_nu_mean=eps_nu[0], eps_nu_std=eps_nu[1],
        ratio_mean=ratio[0], ratio_std=ratio[1],
    )


def run_campaign(cfg: SessionConfig, n_sessions: int, seed: int,
                 workers: int = 1):
    """Run independent sessions with per-session derived seeds.

    Returns ``(reports, summary)`` ordered by session index; deterministic
    for a fixed seed regardless of worker count. Individual aborted sessions
    are recorded in their reports, not fatal to the campaign.
    """
    if n_sessions < 1:
        raise ValueError("n_sessions must be >= 1")
    cfg = validate_config(cfg)
    jobs = [(cfg, session_seed(seed, i)) for i in range(n_sessions)]
    if workers > 1 and n_sessions > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_campaign_worker, jobs))
    else:
        reports = [_campaign_worker(job) for job in jobs]
    return reports, summarize(reports)


@dataclass(frozen=True)
class RatioPoint:
    """One attack strength in the rate-versus-ratio sweep."""

    block_fraction: float
    ratio_mean: float
    rate_bound_bps_mean: float
    rate_bps_mean: float
    n_aborted: int


def sweep_ratio(cfg: SessionConfig, block_fractions: Sequence[float],
                seed: int, sessions_per_point: int = 1,
                workers: int = 1) -> list[RatioPoint]:
    """Trace certified rate against the measured transmittance ratio.

    Block fraction 0 runs with the interceptor switched off entirely (the
    no-eavesdropper reference point); any positive fraction enables the
    photon-number splitter at that single-photon blocking strength.
    ``rate_bound_bps_mean`` is the raw certificate the bounds support;
    ``rate_bps_mean`` additionally zeroes alarmed or aborted sessions.
    """
    cfg = validate_config(cfg)
    points = []
    for i, frac in enumerate(block_fractions):
        if not (0.0 <= frac <= 1.0):
            raise ValueError(f"block fraction {frac!r} outside [0, 1]")
        if frac == 0.0:
            attack = None
        else:
            bypass = cfg.attack.bypass_bob_loss if cfg.attack else False
            attack = PnsAttack(frac, bypass_bob_loss=bypass)
        reports, summary = run_campaign(
            replace(cfg, attack=attack), sessions_per_point,
            session_seed(seed, i), workers=workers)
        points.append(RatioPoint(
            block_fraction=frac,
            ratio_mean=summary.ratio_mean,
            rate_bound_bps_mean=summary.rate_bound_bps_mean,
            rate_bps_mean=summary.rate_bps_mean,
            n_aborted=summary.n_aborted,
        ))
    return points


@dataclass(frozen=True)
class DurationPoint:
    """One session length in the rate-versus-duration sweep."""

    duration_seconds: float
    target_sifted_bits: int
    rate_bps_mean: float
    rate_bound_bps_mean: float
    n_aborted: int


def sweep_duration(cfg: SessionConfig, durations_seconds: Sequence[float],
                   seed: int, sessions_per_point: int = 1,
                   workers: int = 1) -> list[DurationPoint]:
    """Certified rate as a function of session duration.

    Each duration is mapped to the sifted-bit target its statistics support
    (expected sift rate times duration); shorter sessions estimate the decoy
    transmittance less precisely and the statistical deflation eats the rate.
    """
    cfg = validate_config(cfg)
    sift_rate = analytic.expected_sift_rate_per_pulse(cfg) * cfg.clock_rate_hz
    points = []
    for i, duration in enumerate(durations_seconds):
        if duration <= 0:
            raise ValueError(f"duration {duration!r} must be > 0")
        target = max(1, round(duration * sift_rate))
        reports, summary = run_campaign(
            replace(cfg, target_sifted_bits=target), sessions_per_point,
            session_seed(seed, i), workers=workers)
        points.append(DurationPoint(
            duration_seconds=duration,
            target_sifted_bits=target,
            rate_bps_mean=summary.rate_bps_mean,
            rate_bound_bps_mean=summary.rate_bound_bps_mean,
            n_aborted=summary.n_aborted,
        ))
    return points


def min_positive_duration(points: Sequence[DurationPoint]) -> Optional[float]:
    """Shortest swept duration whose mean certified rate is positive."""
    positive = [p.duration_seconds for p in points if p.rate_bps_mean > 0.0]
    return min(positive) if positive else None


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".9g")
    return str(value)


def _round9(value: float) -> float:
    if math.isnan(value):
        return value
    return float(format(value, ".9g"))


def report_to_dict(report: KeyReport) -> dict:
    """KeyReport as a JSON-ready dict: enums to strings, floats to 9 digits."""
    out = {}
    for field in dataclasses.fields(KeyReport):
        value = getattr(report, field.name)
        if isinstance(value, AlarmVerdict):
            value = value.value
        elif isinstance(value, SessionConfig):
            value = dataclasses.asdict(value)
            if value["attack"] is not None:
                value["attack"]["kind"] = "pns"
        elif isinstance(value, float):
            value = None if math.isnan(value) else _round9(value)
        out[field.name] = value
    return out


def emit_report(reports: Sequence[KeyReport], format: str,
                path: Union[str, Path]) -> None:
    """Write campaign reports as CSV (fixed column set) or JSON (full schema).

    Numbers are serialized with 9 significant digits; identical campaigns
    produce byte-identical files.
    """
    if format not in ("json", "csv"):
        raise ValueError(f"format={format!r} must be 'json' or 'csv'")
    path = Path(path)
    if format == "json":
        payload = [report_to_dict(r) for r in reports]
        path.write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n",
                        encoding="utf-8")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i, r in enumerate(reports):
            writer.writerow([
                i, _fmt(r.session_seconds), _fmt(r.q_mu), _fmt(r.q_nu),
                _fmt(r.eps_mu), _fmt(r.eps_nu), _fmt(r.ratio_measured),
                _fmt(r.q1_lower), _fmt(r.eps1_upper), r.secure_length,
                _fmt(r.rate_bps), r.alarm.value,
            ])
