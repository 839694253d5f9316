"""Certified secure bit rate, session by session.

Every session independently measures its statistics, bounds the single-photon
contribution, reconciles, and certifies a key length. The certified rate
stays positive and stable across the campaign. At the full production scale
(a million sifted bits per session, tens of seconds of simulated time each)
the defaults certify about 5.5-5.9 kbit/s; the scaled-down sessions here pay
more statistical deflation and land a bit lower.
"""

from dataclasses import replace

from decoyqkd import SessionConfig, run_campaign

cfg = replace(SessionConfig(), target_sifted_bits=150_000)
reports, summary = run_campaign(cfg, n_sessions=8, seed=303, workers=2)

print("session   seconds   secure bits   rate (bit/s)   verdict")
for i, r in enumerate(reports):
    print(f"{i:>7}   {r.session_seconds:7.2f}   {r.secure_length:>11,}   "
          f"{r.rate_bps:>12,.0f}   {r.alarm.value}")

print()
print(f"mean rate {summary.rate_bps_mean:,.0f} bit/s over "
      f"{summary.n_sessions} sessions, {summary.n_aborted} aborted")
print("Scale target_sifted_bits to 1_000_000 for production-scale sessions")
print("(about half a minute of compute each).")
