"""Cascade information reconciliation with exact leak accounting.

Four passes over the sifted key: pass 1 splits the string into blocks of
k1 = ceil(0.73 / qber_estimate) bits, each later pass doubles the block size
and works on a fresh random interleaving. Alice discloses every top-level
block parity; an odd-parity block is binary-searched (one disclosed half
parity per level) down to a single bit, which Bob flips. A correction flips
the parity of the bit's block in every other pass, so localization cascades
back into earlier, smaller blocks until no odd block remains.

Leak accounting is exact: every disclosed parity counts once, and a parity
whose value is already determined by previously disclosed ones (the sibling
of a disclosed half, or an interval disclosed by an earlier search — both
sides track Bob's corrections, so stored parities stay current) is never
charged again. A 64-bit polynomial checksum over the corrected string
verifies success; a mismatch marks the result failed and the caller must
abort key generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

N_PASSES = 4
FIRST_BLOCK_FACTOR = 0.73

# CRC-64/XZ: reflected polynomial checksum over the packed bit string.
_CRC64_POLY = 0xC96C5795D7870F42


def _crc64_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC64_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_TABLE = _crc64_table()


def poly_hash64(bits: np.ndarray) -> int:
    """64-bit polynomial (CRC-64/XZ) hash of a bit array."""
    crc = 0xFFFFFFFFFFFFFFFF
    for byte in np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes():
        crc = _TABLE[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFFFFFFFFFF


@dataclass
class ReconciliationResult:
    """Outcome of one reconciliation run.

    ``leaked_bits`` counts every parity bit Alice disclosed. ``verified``
    reports whether the final checksum matched; when it did, the probability
    that errors survived undetected is bounded by the hash collision rate.
    """

    corrected_bits: np.ndarray
    leaked_bits: int
    passes: int
    residual_error_estimate: float
    verified: bool
    corrections: int


def first_block_size(qber_estimate: float, n: int) -> int:
    """Pass-1 block size: ceil(0.73 / qber), capped at the string length."""
    return max(1, min(math.ceil(FIRST_BLOCK_FACTOR / qber_estimate), n))


def cascade_reconcile(alice_bits: np.ndarray, bob_bits: np.ndarray,
                      qber_estimate: float,
                      rng: np.random.Generator) -> ReconciliationResult:
    """Reconcile Bob's string onto Alice's, counting every disclosed parity.

    ``alice_bits``/``bob_bits`` must be equal-length 0/1 arrays and
    ``qber_estimate`` must lie strictly between 0 and 1/2.
    """
    alice = np.ascontiguousarray(alice_bits, dtype=np.uint8)
    bob = np.ascontiguousarray(bob_bits, dtype=np.uint8)
    if alice.shape != bob.shape or alice.ndim != 1:
        raise ValueError("alice and bob bit strings must be equal-length 1-D")
    if not (0.0 < qber_estimate < 0.5):
        raise ValueError(f"qber_estimate={qber_estimate!r} must be in (0, 0.5)")
    n = alice.size
    if n == 0:
        return ReconciliationResult(bob.copy(), 0, N_PASSES, 0.0, True, 0)

    k1 = first_block_size(qber_estimate, n)
    block_sizes = [min(k1 * (1 << p), n) for p in range(N_PASSES)]

    perms = [np.arange(n, dtype=np.int64)]
    for _ in range(1, N_PASSES):
        perms.append(rng.permutation(n).astype(np.int64))
    invs = []
    for perm in perms:
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n, dtype=np.int64)
        invs.append(inv)

    corrected = bob.copy()
    mismatch = alice ^ corrected
    # Per-pass views of the mismatch string and running block parities.
    mis = [mismatch[perm].copy() for perm in perms]
    block_par = []
    for p, k in enumerate(block_sizes):
        offsets = np.arange(0, n, k)
        block_par.append((np.add.reduceat(mis[p].astype(np.int64), offsets)
                          & 1).astype(np.uint8))

    known: set[tuple[int, int, int]] = set()
    leak = 0
    corrections = 0

    def fix_one(p: int, b: int) -> None:
        nonlocal leak, corrections
        k = block_sizes[p]
        lo, hi = b * k, min((b + 1) * k, n)
        while hi - lo > 1:
            mid = lo + (hi - lo + 1) // 2
            node = (p, lo, mid)
            if node not in known:
                leak += 1
                known.add(node)
                known.add((p, mid, hi))  # sibling follows from the parent
            if np.count_nonzero(mis[p][lo:mid]) & 1:
                hi = mid
            else:
                lo = mid
        j = perms[p][lo]
        corrected[j] ^= 1
        corrections += 1
        for r in range(N_PASSES):
            pos = invs[r][j]
            mis[r][pos] ^= 1
            block_par[r][pos // block_sizes[r]] ^= 1

    def drain_upto(limit: int) -> None:
        # Service the smallest-block pass first: a correction there can even
        # out a pending odd block of a later pass before its (deeper, more
        # expensive) search runs, and fresh odd blocks in earlier passes
        # preempt the current pass after every fix.
        while True:
            q = next((r for r in range(limit + 1) if block_par[r].any()), None)
            if q is None:
                return
            for b in np.nonzero(block_par[q])[0]:
                if not block_par[q][b]:
                    continue
                fix_one(q, b)
                if q and any(block_par[r].any() for r in range(q)):
                    break

    for active in range(N_PASSES):
        leak += block_par[active].size  # Alice broadcasts her block parities
        drain_upto(active)

    verified = poly_hash64(alice) == poly_hash64(corrected)
    residual = 2.0 ** -64 if verified else 1.0
    return ReconciliationResult(
        corrected_bits=corrected,
        leaked_bits=leak,
        passes=N_PASSES,
        residual_error_estimate=residual,
        verified=verified,
        corrections=corrections,
    )
