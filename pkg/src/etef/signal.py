"""
Accelerograms and the reduced wavelet parameterization.

A candidate excitation is a uniformly sampled acceleration history (g units)
whose length is a power of two.  It is represented in the optimizer by the
coefficients of a periodic orthogonal discrete wavelet transform, keeping only
a subset of the bands (the "active" bands) as decision variables.

For a 2048-sample record the default layout decomposes to 11 levels and pins
the two finest detail bands (1024 + 512 coefficients) to zero, which leaves
512 decision variables.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

__all__ = [
    "AccelTimeSeries",
    "BandLayout",
    "DecisionVector",
    "Wavelet",
    "get_wavelet",
    "dwt_forward",
    "dwt_inverse",
    "decode",
    "decode_batch",
    "encode",
    "read_accelerogram",
    "write_accelerogram",
    "fit_length",
]


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class AccelTimeSeries:
    """Uniformly sampled ground acceleration, in g.

    Parameters
    ----------
    samples : array_like
        One acceleration value per step.  The length must be a power of two.
    dt : float, optional
        Step size in seconds.  Default 0.01.
    """

    samples: np.ndarray
    dt: float = 0.01

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not _is_pow2(arr.size):
            raise ValueError(f"series length {arr.size} is not a power of two")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def length(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.length * self.dt

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.length) * self.dt

    def scaled(self, factor: float) -> "AccelTimeSeries":
        return AccelTimeSeries(self.samples * factor, self.dt)

    @classmethod
    def zeros(cls, length: int = 2048, dt: float = 0.01) -> "AccelTimeSeries":
        return cls(np.zeros(length), dt)


# ---------------------------------------------------------------------------
# Wavelet filters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Wavelet:
    """Orthogonal two-channel filter pair (analysis lowpass ``h``, highpass ``g``)."""

    name: str
    h: np.ndarray
    g: np.ndarray = field(repr=False)

    @property
    def length(self) -> int:
        return self.h.size


def _daubechies_lowpass(order: int) -> np.ndarray:
    # Spectral factorization of the Daubechies half-band polynomial.
    if order == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    coeffs = [comb(order - 1 + k, k) for k in range(order)]
    y_roots = np.roots(coeffs[::-1])
    z_roots = []
    for y in y_roots:
        # z + 1/z = 2 - 4y, keep the root inside the unit circle
        zz = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        z_roots.append(zz[np.argmin(np.abs(zz))])
    poly = np.poly(np.concatenate([-np.ones(order), np.array(z_roots)]))
    h = np.real(poly)
    h *= np.sqrt(2.0) / h.sum()
    return h


@lru_cache(maxsize=None)
def get_wavelet(name: str = "db4") -> Wavelet:
    """Return the filter pair for ``"haar"`` or ``"dbN"`` (N >= 1).

    >>> get_wavelet("db2").h.round(4)
    array([ 0.483 ,  0.8365,  0.2241, -0.1294])
    """
    key = name.lower()
    if key == "haar":
        order = 1
    elif key.startswith("db") and key[2:].isdigit() and int(key[2:]) >= 1:
        order = int(key[2:])
    else:
        raise ValueError(f"unknown wavelet {name!r}; use 'haar' or 'dbN'")
    if order > 20:
        raise ValueError("Daubechies order above 20 is numerically unreliable")
    h = _daubechies_lowpass(order)
    n = np.arange(h.size)
    g = (-1.0) ** n * h[::-1]
    h.setflags(write=False)
    g.setflags(write=False)
    return Wavelet(key, h, g)


def _as_wavelet(wavelet) -> Wavelet:
    return wavelet if isinstance(wavelet, Wavelet) else get_wavelet(wavelet)


def _analysis_step(x: np.ndarray, w: Wavelet):
    n = x.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(w.length)[None, :]) % n
    blocks = x[..., idx]
    return blocks @ w.h, blocks @ w.g


def _synthesis_step(a: np.ndarray, d: np.ndarray, w: Wavelet) -> np.ndarray:
    half = a.shape[-1]
    n = 2 * half
    out = np.zeros(a.shape[:-1] + (n,))
    base = 2 * np.arange(half)
    for k in range(w.length):
        # for a fixed tap the target positions are distinct
        out[..., (base + k) % n] += a * w.h[k] + d * w.g[k]
    return out


# ---------------------------------------------------------------------------
# Multilevel transform
# ---------------------------------------------------------------------------


def dwt_forward(series, wavelet="db4", levels: int | None = None) -> list[np.ndarray]:
    """Multilevel periodic DWT.

    Parameters
    ----------
    series : AccelTimeSeries or ndarray
        Signal(s); an array may carry leading batch axes.
    wavelet : str or Wavelet
    levels : int, optional
        Decomposition depth, at most ``log2(length)``.  Defaults to the full depth.

    Returns
    -------
    list of ndarray
        ``[cA_L, cD_L, cD_{L-1}, ..., cD_1]``, coarsest first.  Band sizes are
        ``N/2**L, N/2**L, N/2**(L-1), ..., N/2``.
    """
    x = series.samples if isinstance(series, AccelTimeSeries) else np.asarray(series, float)
    n = x.shape[-1]
    if not _is_pow2(n):
        raise ValueError(f"series length {n} is not a power of two")
    max_levels = n.bit_length() - 1
    if levels is None:
        levels = max_levels
    if not 0 <= levels <= max_levels:
        raise ValueError(f"levels={levels} outside [0, {max_levels}] for length {n}")
    w = _as_wavelet(wavelet)
    details = []
    a = x
    for _ in range(levels):
        a, d = _analysis_step(a, w)
        details.append(d)
    return [a] + details[::-1]


def _check_bands(coeffs) -> int:
    if len(coeffs) == 0:
        raise ValueError("empty coefficient set")
    sizes = [np.shape(c)[-1] for c in coeffs]
    if sizes[0] < 1 or (len(sizes) > 1 and sizes[1] != sizes[0]):
        raise ValueError(f"inconsistent band sizes {sizes}")
    for i in range(2, len(sizes)):
        if sizes[i] != 2 * sizes[i - 1]:
            raise ValueError(f"inconsistent band sizes {sizes}")
    if len(sizes) == 1:
        total = sizes[0]
    else:
        total = 2 * sizes[-1]
    if not _is_pow2(total):
        raise ValueError(f"band sizes {sizes} do not form a dyadic decomposition")
    return total


def dwt_inverse(coeffs, wavelet="db4", dt: float = 0.01) -> AccelTimeSeries:
    """Invert :func:`dwt_forward` and wrap the result as an :class:`AccelTimeSeries`."""
    return AccelTimeSeries(_inverse_array(coeffs, wavelet), dt)


def _inverse_array(coeffs, wavelet) -> np.ndarray:
    _check_bands(coeffs)
    w = _as_wavelet(wavelet)
    a = np.asarray(coeffs[0], float)
    for d in coeffs[1:]:
        a = _synthesis_step(a, np.asarray(d, float), w)
    return a


# ---------------------------------------------------------------------------
# Decision-variable layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandLayout:
    """Which wavelet bands are optimized.

    Band indices follow :func:`dwt_forward` ordering: 0 is the coarsest
    approximation, 1 the coarsest detail and ``levels`` the finest detail.
    """

    signal_length: int = 2048
    levels: int | None = None
    active_bands: tuple[int, ...] | None = None

    def __post_init__(self):
        if not _is_pow2(self.signal_length):
            raise ValueError(f"signal_length {self.signal_length} is not a power of two")
        max_levels = self.signal_length.bit_length() - 1
        levels = max_levels if self.levels is None else self.levels
        if not 0 <= levels <= max_levels:
            raise ValueError(f"levels={levels} outside [0, {max_levels}]")
        object.__setattr__(self, "levels", levels)
        if self.active_bands is None:
            active = tuple(range(max(1, levels - 1)))
        else:
            active = tuple(sorted(set(int(b) for b in self.active_bands)))
        if not active or active[0] < 0 or active[-1] > levels:
            raise ValueError(f"active bands {active} outside [0, {levels}]")
        object.__setattr__(self, "active_bands", active)

    @classmethod
    def default(cls, signal_length: int = 2048) -> "BandLayout":
        """Full-depth decomposition with the two finest detail bands dropped."""
        return cls(signal_length)

    @property
    def band_sizes(self) -> tuple[int, ...]:
        n, L = self.signal_length, self.levels
        return (n >> L,) + tuple(n >> (L - i + 1) for i in range(1, L + 1))

    @property
    def n_vars(self) -> int:
        sizes = self.band_sizes
        return sum(sizes[b] for b in self.active_bands)

    def slices(self) -> dict[int, slice]:
        out, start = {}, 0
        sizes = self.band_sizes
        for b in self.active_bands:
            out[b] = slice(start, start + sizes[b])
            start += sizes[b]
        return out


@dataclass(frozen=True)
class DecisionVector:
    values: np.ndarray
    layout: BandLayout

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.layout.n_vars,):
            raise ValueError(
                f"decision vector has shape {v.shape}, layout needs ({self.layout.n_vars},)"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _embed(values: np.ndarray, layout: BandLayout) -> list[np.ndarray]:
    batch = values.shape[:-1]
    coeffs = [np.zeros(batch + (s,)) for s in layout.band_sizes]
    for b, sl in layout.slices().items():
        coeffs[b] = values[..., sl]
    return coeffs


def decode(vector: DecisionVector, wavelet="db4", dt: float = 0.01) -> AccelTimeSeries:
    """Map a decision vector to its accelerogram (inactive bands zeroed)."""
    return AccelTimeSeries(decode_batch(vector.values, vector.layout, wavelet), dt)


def decode_batch(values, layout: BandLayout, wavelet="db4") -> np.ndarray:
    """Decode a ``(..., n_vars)`` array of raw coefficient vectors to ``(..., N)`` samples."""
    values = np.asarray(values, float)
    if values.shape[-1] != layout.n_vars:
        raise ValueError(f"expected {layout.n_vars} values, got {values.shape[-1]}")
    return _inverse_array(_embed(values, layout), wavelet)


def encode(series: AccelTimeSeries, layout: BandLayout, wavelet="db4") -> DecisionVector:
    """Project a series onto the active bands of ``layout``."""
    if series.length != layout.signal_length:
        raise ValueError(
            f"series length {series.length} does not match layout length {layout.signal_length}"
        )
    coeffs = dwt_forward(series, wavelet, layout.levels)
    values = np.concatenate([coeffs[b] for b in layout.active_bands])
    return DecisionVector(values, layout)


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------


def read_accelerogram(
    path, *, fit: bool = False, length: int | None = None, dt_tol: float = 1e-9
) -> AccelTimeSeries:
    """Read a two-column ``time_s, accel_g`` CSV with one header line.

    With ``fit=True`` the record is zero-padded or truncated (with a warning)
    to ``length``, or to the next power of two when ``length`` is omitted.
    """
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns, found {data.shape[1]}")
    t, a = data[:, 0], data[:, 1]
    if t.size < 2:
        raise ValueError(f"{path}: need at least two samples")
    steps = np.diff(t)
    dt = float(f"{steps.mean():.12g}")
    if np.max(np.abs(steps - dt)) > dt_tol:
        raise ValueError(f"{path}: sampling interval is not uniform")
    if fit and (length is not None or not _is_pow2(a.size)):
        a = fit_length(a, length)
    elif not _is_pow2(a.size):
        raise ValueError(f"{path}: length {a.size} is not a power of two")
    return AccelTimeSeries(a, dt)


def fit_length(samples, length: int | None = None) -> np.ndarray:
    """Zero-pad or truncate to ``length`` (default: the next power of two)."""
    samples = np.asarray(samples, float)
    if length is None:
        length = 1 << max(0, (samples.size - 1).bit_length())
    if samples.size == length:
        return samples
    warnings.warn(f"record of {samples.size} samples fitted to {length}", stacklevel=2)
    if samples.size > length:
        return samples[:length].copy()
    return np.concatenate([samples, np.zeros(length - samples.size)])


def write_accelerogram(path, series: AccelTimeSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "accel_g"])
        for t, a in zip(series.time, series.samples):
            writer.writerow([repr(float(t)), repr(float(a))])
