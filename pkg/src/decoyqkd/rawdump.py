"""Binary raw-stream dump of detection events for offline analysis.

One record per detection event, 9 bytes, little-endian, no header or padding:

    bytes 0-7   uint64  pulse index (clock-cycle ordinal within the session)
    byte  8     uint8   flags:
                          bit 0    intensity class (0 = signal, 1 = decoy)
                          bit 1    clicked
                          bit 2    measurement basis
                          bit 3    measured bit
                          bits 4-5 cause (0 photon, 1 dark, 2 afterpulse,
                                   3 none/unclicked)
                          bits 6-7 reserved, zero

Sifted batches serialize to the same record layout for pipeline debugging;
their basis bit is stored as 0 because the matched basis value is not
retained after sifting.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np

FLAG_DECOY = 0x01
FLAG_CLICKED = 0x02
FLAG_BASIS = 0x04
FLAG_BIT = 0x08
CAUSE_SHIFT = 4
CAUSE_MASK = 0x30
CAUSE_NONE_CODE = 3

RECORD_DTYPE = np.dtype([("index", "<u8"), ("flags", "u1")])
RECORD_SIZE = RECORD_DTYPE.itemsize  # 9 bytes


def pack_detections(pulses, detections) -> np.ndarray:
    """Pack aligned pulse/detection batches into raw records."""
    if len(pulses) != len(detections) or not np.array_equal(
            pulses.index, detections.index):
        raise ValueError("pulse and detection batches must be index-aligned")
    n = len(pulses)
    flags = np.zeros(n, dtype=np.uint8)
    flags |= (pulses.intensity_class & 1).astype(np.uint8) * FLAG_DECOY
    flags |= detections.clicked.astype(np.uint8) * FLAG_CLICKED
    flags |= (detections.bob_basis & 1).astype(np.uint8) * FLAG_BASIS
    flags |= (detections.bob_bit & 1).astype(np.uint8) * FLAG_BIT
    cause = np.where(detections.cause < 0, CAUSE_NONE_CODE,
                     detections.cause).astype(np.uint8)
    flags |= cause << CAUSE_SHIFT
    records = np.empty(n, dtype=RECORD_DTYPE)
    records["index"] = pulses.index
    records["flags"] = flags
    return records


def pack_sifted(batch, party: str = "bob") -> np.ndarray:
    """Serialize a sifted batch; ``party`` selects whose bits go in the record."""
    if party not in ("alice", "bob"):
        raise ValueError("party must be 'alice' or 'bob'")
    bits = batch.alice_bits if party == "alice" else batch.bob_bits
    n = len(batch)
    flags = np.full(n, FLAG_CLICKED | (CAUSE_NONE_CODE << CAUSE_SHIFT),
                    dtype=np.uint8)
    flags |= np.uint8(FLAG_DECOY) * np.uint8(batch.intensity_class.value)
    flags |= (bits & 1).astype(np.uint8) * FLAG_BIT
    records = np.empty(n, dtype=RECORD_DTYPE)
    records["index"] = batch.indices
    records["flags"] = flags
    return records


def dump_records(records: np.ndarray, path: Union[str, Path]) -> None:
    Path(path).write_bytes(records.tobytes())


def load_records(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) % RECORD_SIZE:
        raise ValueError(
            f"{path}: size {len(data)} is not a multiple of {RECORD_SIZE}")
    return np.frombuffer(data, dtype=RECORD_DTYPE).copy()


def unpack_flags(records: np.ndarray) -> dict:
    """Decode the flag byte into separate arrays."""
    flags = records["flags"]
    cause = ((flags & CAUSE_MASK) >> CAUSE_SHIFT).astype(np.int8)
    return {
        "index": records["index"].astype(np.int64),
        "intensity_class": (flags & FLAG_DECOY).astype(np.uint8),
        "clicked": (flags & FLAG_CLICKED).astype(bool),
        "basis": ((flags & FLAG_BASIS) > 0).astype(np.uint8),
        "bit": ((flags & FLAG_BIT) > 0).astype(np.uint8),
        "cause": np.where(cause == CAUSE_NONE_CODE, -1, cause).astype(np.int8),
    }
