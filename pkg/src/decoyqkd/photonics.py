"""Pulse-level Monte-Carlo of source, fibre channel, PNS eavesdropper, and detector.

The single-pulse operations (:func:`choose_class`, :func:`sample_photon_number`,
:func:`channel_transmit`, :func:`pns_intercept`, :func:`detect`) model each
stage explicitly and accept numpy arrays. :func:`run_session` streams pulses in
fixed-size blocks; each block draws from an independent RNG stream derived from
``(seed, block_index)``, so a session is reproducible regardless of how blocks
are scheduled. Inside the block loop the source->channel->detector chain is
collapsed through the exact Poisson/binomial thinning identities (a photon
emitted with mean x and independently surviving with probability t is a
Poisson(x*t) arrival), which leaves the per-pulse click statistics identical
to composing the stage operations while skipping the intermediate draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    ClassTally,
    DetectionCause,
    IntensityClass,
    PnsAttack,
    SessionConfig,
    validate_config,
)
from .protocol import SiftedBatch

ArrayLike = Union[int, np.ndarray]

CAUSE_NONE = -1
CAUSE_PHOTON = DetectionCause.PHOTON.value
CAUSE_DARK = DetectionCause.DARK.value
CAUSE_AFTERPULSE = DetectionCause.AFTERPULSE.value


class SiftStarvationError(RuntimeError):
    """The sifted-bit target was not reached within the pulse budget."""


def block_rng(seed: int, block_index: int, stream: int = 0) -> np.random.Generator:
    """Independent RNG stream for one pulse block of one session.

    ``stream`` 0 drives the physics; auxiliary draws (full-record backfill)
    use a separate stream so record retention cannot perturb the realization.
    """
    return np.random.default_rng(
        np.random.SeedSequence((seed, block_index, stream)))


def choose_class(decoy_probability: float, rng: np.random.Generator,
                 size: Optional[int] = None):
    """Pick signal or decoy for each clock cycle.

    Returns an :class:`IntensityClass` for a scalar call, or a uint8 array
    (0 = signal, 1 = decoy) when ``size`` is given.
    """
    if not (0.0 <= decoy_probability <= 1.0):
        raise ValueError(f"decoy_probability={decoy_probability!r} outside [0, 1]")
    if size is None:
        return (IntensityClass.DECOY if rng.random() < decoy_probability
                else IntensityClass.SIGNAL)
    return (rng.random(size) < decoy_probability).astype(np.uint8)


def sample_photon_number(mean: float, rng: np.random.Generator,
                         size: Optional[int] = None) -> ArrayLike:
    """Poissonian photon number of a weak coherent pulse with the given mean."""
    if mean < 0:
        raise ValueError(f"mean photon number {mean!r} must be >= 0")
    return rng.poisson(mean, size)


def channel_transmit(photon_count: ArrayLike, transmittance: float,
                     rng: np.random.Generator) -> ArrayLike:
    """Each photon independently survives the fibre with the given probability."""
    if not (0.0 <= transmittance <= 1.0):
        raise ValueError(f"transmittance={transmittance!r} outside [0, 1]")
    return rng.binomial(photon_count, transmittance)


def pns_intercept(photon_count: ArrayLike, attack: PnsAttack,
                  rng: np.random.Generator):
    """Eve's photon-number-splitting transformation of one pulse.

    Vacuum stays vacuum; a single photon is blocked with probability
    ``attack.block_fraction`` and otherwise forwarded; of n >= 2 photons Eve
    keeps one and forwards n - 1. Returns ``(forwarded_count, lossless)`` with
    ``lossless`` True: forwarded photons travel Eve's substituted line and
    bypass the fibre loss downstream.
    """
    if not isinstance(attack, PnsAttack):
        raise ValueError("pns_intercept requires an active PNS attack descriptor")
    n = np.asarray(photon_count)
    scalar = n.ndim == 0
    n = np.atleast_1d(n)
    forwarded = np.where(n >= 2, n - 1, 0)
    singles = np.nonzero(n == 1)[0]
    if singles.size:
        passed = rng.random(singles.size) >= attack.block_fraction
        forwarded[singles] = passed.astype(forwarded.dtype)
    if scalar:
        return int(forwarded[0]), True
    return forwarded, True


def _photon_click_prob(photons: np.ndarray, eta: float) -> np.ndarray:
    """P(at least one of n photons detected), each with probability eta."""
    if eta <= 0.0:
        return np.zeros(photons.shape, dtype=float)
    if eta >= 1.0:
        return (photons > 0).astype(float)
    high = int(photons.max()) if photons.size else 0
    if high <= 64:
        # Poissonian photon numbers are tiny; a power table beats expm1.
        table = -np.expm1(np.arange(high + 1) * np.log1p(-eta))
        return table[photons]
    return -np.expm1(photons * np.log1p(-eta))


@dataclass
class DetectFragment:
    """Vectorized detection outcome: click flags, bit correctness, causes.

    ``bit_wrong`` is meaningful only where ``clicked`` and assumes matched
    measurement bases (the basis layer lives in the protocol module); ``cause``
    is -1 where no click occurred.
    """

    clicked: np.ndarray
    bit_wrong: np.ndarray
    cause: np.ndarray


def detect(arrived_photons: ArrayLike, lossless: bool, cfg: SessionConfig,
           prior_click: ArrayLike, rng: np.random.Generator) -> DetectFragment:
    """Threshold detector: any number of arriving photons makes at most one click.

    The click probability is
    ``1 - (1 - Y0) * (1 - p_ap * prior_click) * (1 - eta_eff)^arrived`` with
    ``eta_eff`` the receiver transmittance times detector efficiency (fibre
    loss is applied upstream, or skipped entirely when ``lossless`` marks an
    eavesdropper-substituted line). A photon-caused click records the wrong
    bit with probability ``optical_error_prob``; dark and afterpulse clicks
    are fair coin flips. A photon click coincident with a dark count is
    attributed to the photon.
    """
    del lossless  # bookkeeping flag from pns_intercept; eta_eff is unchanged
    photons = np.atleast_1d(np.asarray(arrived_photons))
    p_ph = _photon_click_prob(photons, cfg.eta_bob)
    u = rng.random(photons.shape)
    photon_click = u < p_ph
    dark_click = ~photon_click & (u < p_ph + (1.0 - p_ph) * cfg.dark_count_prob)
    clicked = photon_click | dark_click
    cause = np.full(photons.shape, CAUSE_NONE, dtype=np.int8)
    cause[photon_click] = CAUSE_PHOTON
    cause[dark_click] = CAUSE_DARK
    if cfg.afterpulse_prob > 0.0:
        prior = np.broadcast_to(np.atleast_1d(np.asarray(prior_click)),
                                photons.shape)
        ap_click = ~clicked & prior & (rng.random(photons.shape)
                                       < cfg.afterpulse_prob)
        clicked = clicked | ap_click
        cause[ap_click] = CAUSE_AFTERPULSE
    p_wrong = np.where(cause == CAUSE_PHOTON, cfg.optical_error_prob, 0.5)
    bit_wrong = clicked & (rng.random(photons.shape) < p_wrong)
    return DetectFragment(clicked=clicked, bit_wrong=bit_wrong, cause=cause)


@dataclass
class PulseBatch:
    """Column-oriented ground truth for a set of pulses."""

    index: np.ndarray
    intensity_class: np.ndarray
    photon_count: np.ndarray
    alice_basis: np.ndarray
    alice_bit: np.ndarray

    def __len__(self) -> int:
        return self.index.size


@dataclass
class DetectionBatch:
    """Column-oriented detection outcomes aligned with a :class:`PulseBatch`."""

    index: np.ndarray
    clicked: np.ndarray
    bob_basis: np.ndarray
    bob_bit: np.ndarray
    cause: np.ndarray

    def __len__(self) -> int:
        return self.index.size


@dataclass
class SessionResult:
    """Everything one Monte-Carlo session produced.

    ``pulses``/``detections`` cover every clicked pulse (``records="clicked"``,
    the default), every emitted pulse (``records="all"``; memory-bound to small
    sessions), or nothing (``records="none"``). Tallies and sifted batches are
    always complete. Simulated wall time is ``pulses_emitted / clock_rate_hz``.
    """

    config: SessionConfig
    pulses: PulseBatch
    detections: DetectionBatch
    sifted_signal: SiftedBatch
    sifted_decoy: SiftedBatch
    tally_signal: ClassTally
    tally_decoy: ClassTally
    pulses_emitted: int
    record_mode: str

    @property
    def seconds(self) -> float:
        return self.pulses_emitted / self.config.clock_rate_hz

    @property
    def sifted_total(self) -> int:
        return self.tally_signal.sifted_count + self.tally_decoy.sifted_count


def _empty_u8(n: int = 0) -> np.ndarray:
    return np.zeros(n, dtype=np.uint8)


def _simulate_block(cfg: SessionConfig, rng: np.random.Generator,
                    rng_extra: Optional[np.random.Generator], size: int,
                    keep_all: bool):
    """One block of pulses; returns per-pulse arrays and clicked-row data.

    Alice's and Bob's basis/bit draws are consumed from the main stream only
    for clicked pulses, so the physics realization is identical whether or not
    full records are kept; ``records="all"`` fills in the unclicked rows from
    the auxiliary stream.
    """
    decoy = rng.random(size) < cfg.decoy_probability
    lam = np.where(decoy, cfg.nu, cfg.mu)
    photons = rng.poisson(lam)

    attack = cfg.attack
    if attack is None:
        p_ph = _photon_click_prob(photons, cfg.eta_system)
    else:
        forwarded = np.where(photons >= 2, photons - 1, 0)
        singles = np.nonzero(photons == 1)[0]
        if singles.size:
            passed = rng.random(singles.size) >= attack.block_fraction
            forwarded[singles] = passed.astype(forwarded.dtype)
        eta_fwd = (cfg.detector_efficiency if attack.bypass_bob_loss
                   else cfg.eta_bob)
        p_ph = _photon_click_prob(forwarded, eta_fwd)

    u = rng.random(size)
    photon_click = u < p_ph
    dark_click = ~photon_click & (u < p_ph + (1.0 - p_ph) * cfg.dark_count_prob)
    clicked = photon_click | dark_click
    cause = np.full(size, CAUSE_NONE, dtype=np.int8)
    cause[photon_click] = CAUSE_PHOTON
    cause[dark_click] = CAUSE_DARK

    if cfg.afterpulse_prob > 0.0:
        ap_armed = rng.random(size) < cfg.afterpulse_prob
        # One-gate memory: any click can seed the next gate, including a
        # fresh afterpulse, so iterate to the (monotone) fixed point.
        prev = np.empty(size, dtype=bool)
        while True:
            prev[0] = False
            prev[1:] = clicked[:-1]
            newly = prev & ap_armed & ~clicked
            if not newly.any():
                break
            clicked |= newly
            cause[newly] = CAUSE_AFTERPULSE

    click_idx = np.nonzero(clicked)[0]
    k = click_idx.size
    a_basis = rng.integers(0, 2, k, dtype=np.uint8)
    a_bit = rng.integers(0, 2, k, dtype=np.uint8)
    b_basis = rng.integers(0, 2, k, dtype=np.uint8)
    click_cause = cause[click_idx]
    match = a_basis == b_basis
    p_wrong = np.where(match & (click_cause == CAUSE_PHOTON),
                       cfg.optical_error_prob, 0.5)
    flip = (rng.random(k) < p_wrong).astype(np.uint8)
    b_bit = a_bit ^ flip

    sift_per_pulse = np.zeros(size, dtype=bool)
    sift_per_pulse[click_idx[match]] = True

    full = None
    if keep_all:
        fa_basis = _empty_u8(size)
        fa_bit = _empty_u8(size)
        fb_basis = _empty_u8(size)
        unclicked = np.nonzero(~clicked)[0]
        fa_basis[unclicked] = rng_extra.integers(0, 2, unclicked.size,
                                                 dtype=np.uint8)
        fa_bit[unclicked] = rng_extra.integers(0, 2, unclicked.size,
                                               dtype=np.uint8)
        fb_basis[unclicked] = rng_extra.integers(0, 2, unclicked.size,
                                                 dtype=np.uint8)
        fa_basis[click_idx] = a_basis
        fa_bit[click_idx] = a_bit
        fb_basis[click_idx] = b_basis
        full = (fa_basis, fa_bit, fb_basis)

    return {
        "decoy": decoy,
        "photons": photons,
        "clicked": clicked,
        "cause": cause,
        "sift": sift_per_pulse,
        "click_idx": click_idx,
        "a_basis": a_basis,
        "a_bit": a_bit,
        "b_basis": b_basis,
        "b_bit": b_bit,
        "match": match,
        "full": full,
    }


def run_session(cfg: SessionConfig, records: str = "clicked") -> SessionResult:
    """Stream pulses until the combined sifted-bit target is reached.

    Pulses flow through class choice, Poissonian photon sampling, the PNS
    interceptor or the lossy fibre, threshold detection, and basis sifting.
    The session stops at the exact pulse that yields the target-th sifted bit
    (signal and decoy counted together). Deterministic for a fixed seed.

    Raises :class:`SiftStarvationError` if the pulse budget is exhausted
    first (an all-loss configuration never sifts anything).
    """
    if records not in ("clicked", "all", "none"):
        raise ValueError(f"records={records!r} not in {{'clicked', 'all', 'none'}}")
    cfg = validate_config(cfg)
    target = cfg.target_sifted_bits
    budget = cfg.pulse_budget

    tally_s = ClassTally()
    tally_d = ClassTally()
    chunks: list[dict] = []
    sift_bits: dict[str, list[np.ndarray]] = {
        "s_idx": [], "s_a": [], "s_b": [], "d_idx": [], "d_a": [], "d_b": [],
    }

    emitted = 0
    sifted_so_far = 0
    block_index = 0
    while sifted_so_far < target:
        if emitted >= budget:
            raise SiftStarvationError(
                f"pulse budget {budget} exhausted with "
                f"{sifted_so_far}/{target} sifted bits "
                f"(sift rate {sifted_so_far / max(emitted, 1):.3e} per pulse)"
            )
        size = min(cfg.block_size, budget - emitted)
        rng = block_rng(cfg.seed, block_index)
        rng_extra = (block_rng(cfg.seed, block_index, stream=1)
                     if records == "all" else None)
        blk = _simulate_block(cfg, rng, rng_extra, size, records == "all")

        block_sift = int(np.count_nonzero(blk["sift"]))
        if sifted_so_far + block_sift >= target:
            needed = target - sifted_so_far
            csum = np.cumsum(blk["sift"])
            keep = int(np.searchsorted(csum, needed)) + 1
        else:
            keep = size

        decoy = blk["decoy"][:keep]
        clicked = blk["clicked"][:keep]
        click_rows = blk["click_idx"] < keep
        click_idx = blk["click_idx"][click_rows]
        c_decoy = decoy[click_idx]
        match = blk["match"][click_rows]
        a_bit = blk["a_bit"][click_rows]
        b_bit = blk["b_bit"][click_rows]
        err = match & (a_bit != b_bit)

        sent_d = int(np.count_nonzero(decoy))
        clicked_d = int(np.count_nonzero(c_decoy))
        sift_d = int(np.count_nonzero(match & c_decoy))
        err_d = int(np.count_nonzero(err & c_decoy))
        tally_d = tally_d + ClassTally(sent_d, clicked_d, sift_d, err_d)
        tally_s = tally_s + ClassTally(
            keep - sent_d,
            click_idx.size - clicked_d,
            int(np.count_nonzero(match)) - sift_d,
            int(np.count_nonzero(err)) - err_d,
        )

        global_click = click_idx.astype(np.int64) + emitted
        for cls, key in ((False, "s"), (True, "d")):
            rows = match & (c_decoy == cls)
            sift_bits[f"{key}_idx"].append(global_click[rows])
            sift_bits[f"{key}_a"].append(a_bit[rows])
            sift_bits[f"{key}_b"].append(b_bit[rows])

        if records == "clicked":
            chunks.append({
                "index": global_click,
                "class": c_decoy.astype(np.uint8),
                "photons": blk["photons"][click_idx].astype(np.int32),
                "a_basis": blk["a_basis"][click_rows],
                "a_bit": a_bit,
                "clicked": np.ones(click_idx.size, dtype=bool),
                "b_basis": blk["b_basis"][click_rows],
                "b_bit": b_bit,
                "cause": blk["cause"][click_idx],
            })
        elif records == "all":
            fa_basis, fa_bit, fb_basis = blk["full"]
            fb_bit = _empty_u8(keep)
            fb_bit[click_idx] = b_bit
            chunks.append({
                "index": np.arange(emitted, emitted + keep, dtype=np.int64),
                "class": decoy.astype(np.uint8),
                "photons": blk["photons"][:keep].astype(np.int32),
                "a_basis": fa_basis[:keep],
                "a_bit": fa_bit[:keep],
                "clicked": clicked.copy(),
                "b_basis": fb_basis[:keep],
                "b_bit": fb_bit,
                "cause": blk["cause"][:keep].copy(),
            })

        emitted += keep
        sifted_so_far += int(np.count_nonzero(blk["sift"][:keep]))
        block_index += 1

    def _cat(key: str, dtype) -> np.ndarray:
        arrays = [c[key] for c in chunks]
        return (np.concatenate(arrays) if arrays
                else np.zeros(0, dtype=dtype))

    pulses = PulseBatch(
        index=_cat("index", np.int64),
        intensity_class=_cat("class", np.uint8),
        photon_count=_cat("photons", np.int32),
        alice_basis=_cat("a_basis", np.uint8),
        alice_bit=_cat("a_bit", np.uint8),
    )
    detections = DetectionBatch(
        index=pulses.index,
        clicked=_cat("clicked", bool),
        bob_basis=_cat("b_basis", np.uint8),
        bob_bit=_cat("b_bit", np.uint8),
        cause=_cat("cause", np.int8),
    )

    def _sift_batch(key: str, cls: IntensityClass) -> SiftedBatch:
        idx = sift_bits[f"{key}_idx"]
        return SiftedBatch(
            intensity_class=cls,
            indices=np.concatenate(idx) if idx else np.zeros(0, np.int64),
            alice_bits=(np.concatenate(sift_bits[f"{key}_a"])
                        if idx else _empty_u8()),
            bob_bits=(np.concatenate(sift_bits[f"{key}_b"])
                      if idx else _empty_u8()),
        )

    return SessionResult(
        config=cfg,
        pulses=pulses,
        detections=detections,
        sifted_signal=_sift_batch("s", IntensityClass.SIGNAL),
        sifted_decoy=_sift_batch("d", IntensityClass.DECOY),
        tally_signal=tally_s,
        tally_decoy=tally_d,
        pulses_emitted=emitted,
        record_mode=records,
    )
