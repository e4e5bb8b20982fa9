"""
Running spectra and the matching objective
==========================================

The ET target grows linearly in time: at time t the spectrum of the motion
recorded so far should equal (t / t_target) times the design shape.  Here a
white-noise record with a rising envelope is scored against such a target.
"""

import numpy as np

from etef import (
    AccelTimeSeries,
    DesignSpectrum,
    DesignSpectrumParams,
    PeriodGrid,
    TargetSpec,
    TimeGrid,
    objective,
    running_spectrum,
    target_grid,
)

dt, n = 0.01, 2048
t = np.arange(n) * dt
rng = np.random.default_rng(1)
ground = AccelTimeSeries(0.05 * rng.standard_normal(n) * t / t[-1], dt)

periods = PeriodGrid.log_spaced(120)
times = TimeGrid.uniform(n, dt)
shape = DesignSpectrum(DesignSpectrumParams(S_DS=1.0, S_D1=0.6))
target = target_grid(TargetSpec(shape, target_time=10.0), periods, times)

grid = running_spectrum(ground, periods, times)
print("S_a rows are running maxima:", bool(np.all(np.diff(grid.values, axis=1) >= 0)))

for T in (0.1, 0.5, 1.0, 3.0):
    i = int(np.argmin(np.abs(periods.periods - T)))
    row = grid.values[i]
    print(f"T = {periods.periods[i]:5.2f} s  S_a(5 s) = {row[500]:.3f} g  "
          f"S_a(10 s) = {row[1000]:.3f} g  target(10 s) = {target.values[i, 1000]:.3f} g")

J = objective(ground, target)
print(f"objective {J:.1f}, zero-signal objective {np.sum(target.values ** 2):.1f}")
