"""
Wavelet decision space
======================

An accelerogram of 2048 samples is described by 2048 wavelet coefficients.
Dropping the two finest detail bands leaves 512 numbers, which is what the
swarm optimizes.  This script shows the band layout, checks that the
transform is lossless, and measures how much of a broadband signal survives
the projection onto the active bands.
"""

import numpy as np

from etef import AccelTimeSeries, BandLayout, decode, dwt_forward, dwt_inverse, encode

layout = BandLayout.default()
print("band sizes  :", layout.band_sizes)
print("active bands:", layout.active_bands, "->", layout.n_vars, "variables")

rng = np.random.default_rng(0)
x = AccelTimeSeries(rng.standard_normal(2048) * 0.1)

coeffs = dwt_forward(x, "db4")
back = dwt_inverse(coeffs, "db4")
print(f"round trip error: {np.max(np.abs(back.samples - x.samples)):.2e}")

# white noise spreads its energy evenly, so about a quarter survives
kept = decode(encode(x, layout))
ratio = np.sum(kept.samples**2) / np.sum(x.samples**2)
print(f"energy kept by the 512-variable projection: {ratio:.1%}")

# frequencies above Nyquist/4 (12.5 Hz at dt = 0.01 s) live in the dropped bands
t = x.time
low = AccelTimeSeries(np.sin(2 * np.pi * 2.0 * t))
high = AccelTimeSeries(np.sin(2 * np.pi * 40.0 * t))
for name, s in (("2 Hz", low), ("40 Hz", high)):
    p = decode(encode(s, layout))
    print(f"{name:>6} sine: {np.sum(p.samples**2) / np.sum(s.samples**2):.1%} of energy kept")
