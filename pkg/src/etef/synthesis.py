"""
ETEF generation: decision vectors -> accelerograms -> spectral mismatch -> PSO.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pso
from .signal import AccelTimeSeries, BandLayout, DecisionVector, decode_batch, encode
from .spectra import (
    PeriodGrid,
    SpectrumGrid,
    TargetSpec,
    TimeGrid,
    objective_batch,
    peak_spectrum_batch,
    running_spectrum,
    target_grid,
)

__all__ = ["EtefProblem", "synthetic_record_bank", "record_seeding", "generate_etef", "EtefResult"]


@dataclass
class EtefProblem:
    """Spectral matching problem over a reduced wavelet space."""

    layout: BandLayout
    target: SpectrumGrid
    dt: float = 0.01
    wavelet: str = "db4"
    damping_ratio: float = 0.05

    @classmethod
    def build(
        cls,
        spec: TargetSpec,
        layout: BandLayout,
        periods: PeriodGrid,
        times: TimeGrid | None = None,
        dt: float = 0.01,
        wavelet: str = "db4",
        damping_ratio: float = 0.05,
    ) -> "EtefProblem":
        if times is None:
            times = TimeGrid.uniform(layout.signal_length, dt)
        times.indices(layout.signal_length, dt)
        return cls(layout, target_grid(spec, periods, times), dt, wavelet, damping_ratio)

    @property
    def n_vars(self) -> int:
        return self.layout.n_vars

    def decode(self, values) -> AccelTimeSeries:
        return AccelTimeSeries(decode_batch(values, self.layout, self.wavelet), self.dt)

    def __call__(self, X) -> np.ndarray:
        """Objective for a ``(P, n_vars)`` batch of decision vectors."""
        X = np.atleast_2d(X)
        samples = decode_batch(X, self.layout, self.wavelet)
        return objective_batch(samples, self.target, self.dt, self.damping_ratio)

    def evaluate_series(self, series: AccelTimeSeries) -> float:
        return float(objective_batch(series.samples[None, :], self.target, series.dt, self.damping_ratio)[0])

    def spectrum(self, series: AccelTimeSeries) -> SpectrumGrid:
        return running_spectrum(series, self.target.periods, self.target.times, self.damping_ratio)

    def zero_objective(self) -> float:
        return float(np.sum(self.target.values**2))


def synthetic_record_bank(
    problem: EtefProblem,
    n_records: int,
    seed: int | None = 0,
    f_min: float | None = None,
    correction_passes: int = 3,
) -> np.ndarray:
    """Random records shaped after the target, for seeding without real motions.

    Each record is Gaussian noise whose Fourier amplitude follows
    ``shape(1/f) / f`` (pseudo-velocity-like scaling of the target shape),
    modulated in time by the target's intensifying profile.  The amplitude
    curve is then corrected ``correction_passes`` times by the ratio of the
    target to the mean peak spectrum of a small trial batch.  Records are
    projected onto
    the active wavelet bands and rescaled by the least-squares amplitude
    that best fits the whole target grid.

    Returns
    -------
    ndarray, shape (n_records, signal_length)
    """
    rng = np.random.default_rng(seed)
    n, dt = problem.layout.signal_length, problem.dt
    periods = problem.target.periods.periods
    if f_min is None:
        f_min = 0.75 / periods[-1]
    f = np.fft.rfftfreq(n, dt)
    keep = f >= f_min
    f_safe = np.where(keep, f, f_min)
    # shape is recovered from the last target column, up to the profile factor
    last = problem.target.values[:, -1]
    shape = np.interp(np.log(1.0 / f_safe), np.log(periods), last)
    amp = np.where(keep, shape / f_safe, 0.0)
    t = np.arange(n) * dt
    times = problem.target.times.times
    profile_col = np.max(problem.target.values, axis=0)
    envelope = np.interp(t, times, profile_col)
    if envelope.max() > 0:
        envelope = envelope / envelope.max()

    def draw(count):
        spec = rng.standard_normal((count, f.size)) + 1j * rng.standard_normal((count, f.size))
        return np.fft.irfft(spec * amp, n) * envelope

    # nudge the mean final spectrum toward the target shape
    log_T = np.log(periods)
    for _ in range(correction_passes):
        mean_peak = peak_spectrum_batch(draw(16), periods, dt, problem.damping_ratio).mean(axis=0)
        ratio = np.where(mean_peak > 0, last / np.where(mean_peak > 0, mean_peak, 1.0), 1.0)
        amp = amp * np.interp(np.log(1.0 / f_safe), log_T, ratio)

    raw = draw(n_records)
    coeffs = np.array([encode(AccelTimeSeries(x, dt), problem.layout, problem.wavelet).values for x in raw])
    records = decode_batch(coeffs, problem.layout, problem.wavelet)
    T = problem.target.values
    for r in range(n_records):
        S = problem.spectrum(AccelTimeSeries(records[r], dt)).values
        denom = np.sum(S * S)
        if denom > 0:
            records[r] *= np.sum(S * T) / denom
    return records


def record_seeding(records, layout: BandLayout, wavelet: str = "db4") -> pso.Seeding:
    """Encode a bank of accelerograms into a correlated seeding distribution."""
    rows = []
    for rec in records:
        if not isinstance(rec, AccelTimeSeries):
            rec = AccelTimeSeries(rec)
        if rec.length != layout.signal_length:
            raise ValueError(
                f"record length {rec.length} does not match signal length {layout.signal_length}"
            )
        rows.append(encode(rec, layout, wavelet).values)
    return pso.Seeding.from_records(np.array(rows))


@dataclass
class EtefResult:
    series: AccelTimeSeries
    vector: DecisionVector
    objective: float
    log: pso.ConvergenceLog
    problem: EtefProblem = field(repr=False)


def generate_etef(problem: EtefProblem, config: pso.SwarmConfig, seeding: pso.Seeding | None = None, callback=None) -> EtefResult:
    """Run the swarm on ``problem`` and decode the best particle."""
    res = pso.run(problem, config, seeding, dim=problem.n_vars, vectorized=True, callback=callback)
    vec = DecisionVector(res.best_position, problem.layout)
    return EtefResult(problem.decode(res.best_position), vec, res.best_value, res.log, problem)
