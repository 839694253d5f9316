"""Dumping detection events to the 9-byte binary record stream.

Each detection event serializes to a little-endian uint64 pulse index plus a
flag byte packing intensity class, click, basis, bit, and cause; the format
suits offline analysis of long sessions without keeping Python objects
around. This demo writes a session's events, reads them back, and tabulates
click causes.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from decoyqkd import SessionConfig, run_session
from decoyqkd.rawdump import (
    RECORD_SIZE,
    dump_records,
    load_records,
    pack_detections,
    unpack_flags,
)

cfg = replace(SessionConfig(), target_sifted_bits=20_000, seed=707)
res = run_session(cfg, records="clicked")
records = pack_detections(res.pulses, res.detections)

path = Path(tempfile.mkdtemp()) / "detections.bin"
dump_records(records, path)
size = path.stat().st_size
print(f"wrote {len(records):,} records ({size:,} bytes, "
      f"{RECORD_SIZE} bytes each) to {path}")

decoded = unpack_flags(load_records(path))
assert np.array_equal(decoded["index"], res.pulses.index)

causes = decoded["cause"]
names = {0: "photon", 1: "dark count", 2: "afterpulse"}
print("\nclick causes:")
for code, name in names.items():
    count = int((causes == code).sum())
    print(f"  {name:<11} {count:>8,}  ({count / len(records):.2%})")

decoy = decoded["intensity_class"].astype(bool)
print(f"\nsignal-class events: {int((~decoy).sum()):,}")
print(f"decoy-class events:  {int(decoy.sum()):,}")
