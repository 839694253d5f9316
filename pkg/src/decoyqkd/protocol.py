"""BB84 basis/bit bookkeeping: random bases, sifting, per-class tallies.

Sifting keeps a pulse in the key material of its intensity class iff Bob
clicked and both parties chose the same basis; on average half of all clicks
survive. Everything here is a pure function of the streams: no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClassTally, IntensityClass


class SiftAlignmentError(ValueError):
    """Pulse and detection streams are not index-aligned."""


def assign_bases_and_bits(n: int, rng: np.random.Generator):
    """Independent uniform basis and key bit for each of n pulses."""
    if n < 0:
        raise ValueError(f"n={n!r} must be >= 0")
    bases = rng.integers(0, 2, n, dtype=np.uint8)
    bits = rng.integers(0, 2, n, dtype=np.uint8)
    return bases, bits


@dataclass
class SiftedBatch:
    """Aligned sifted bit strings of one intensity class.

    Alice's and Bob's sequences have equal length; the error positions are
    exactly the indices where they differ.
    """

    intensity_class: IntensityClass
    indices: np.ndarray
    alice_bits: np.ndarray
    bob_bits: np.ndarray

    def __post_init__(self):
        if not (len(self.alice_bits) == len(self.bob_bits)
                == len(self.indices)):
            raise ValueError("sifted sequences must have equal lengths")

    def __len__(self) -> int:
        return len(self.alice_bits)

    @property
    def error_count(self) -> int:
        return int(np.count_nonzero(self.alice_bits != self.bob_bits))


def sift(pulses, detections):
    """Sift index-aligned pulse and detection streams.

    Returns ``(sifted_signal, sifted_decoy, tally_signal, tally_decoy)``.
    The streams must cover every emitted pulse (sent counts are read off the
    pulse rows); a pulse joins the sifted batch of its class iff it clicked
    and the bases agree.
    """
    if len(pulses) != len(detections) or not np.array_equal(
            pulses.index, detections.index):
        raise SiftAlignmentError(
            "pulse and detection streams must be index-aligned")

    decoy = pulses.intensity_class.astype(bool)
    clicked = detections.clicked
    match = clicked & (pulses.alice_basis == detections.bob_basis)
    err = match & (pulses.alice_bit != detections.bob_bit)

    out = []
    for cls in (IntensityClass.SIGNAL, IntensityClass.DECOY):
        mine = decoy if cls is IntensityClass.DECOY else ~decoy
        kept = match & mine
        out.append(SiftedBatch(
            intensity_class=cls,
            indices=pulses.index[kept],
            alice_bits=pulses.alice_bit[kept].copy(),
            bob_bits=detections.bob_bit[kept].copy(),
        ))
    tallies = []
    for cls in (IntensityClass.SIGNAL, IntensityClass.DECOY):
        mine = decoy if cls is IntensityClass.DECOY else ~decoy
        tallies.append(ClassTally(
            sent_count=int(np.count_nonzero(mine)),
            clicked_count=int(np.count_nonzero(clicked & mine)),
            sifted_count=int(np.count_nonzero(match & mine)),
            error_count=int(np.count_nonzero(err & mine)),
        ))
    return out[0], out[1], tallies[0], tallies[1]
