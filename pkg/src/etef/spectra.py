"""
Linear SDOF response, running acceleration spectra and the matching objective.

The oscillator is integrated with the piecewise-exact scheme: the ground
acceleration is taken as linear between samples and the discrete propagator
is the exact matrix exponential of the continuous system over one step.  The
spectral quantity is the peak *absolute* acceleration ``|x'' + a_g|``, and the
running spectrum keeps its cumulative maximum over time, so one integration
pass per period yields the whole time-period grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .signal import AccelTimeSeries

__all__ = [
    "PeriodGrid",
    "TimeGrid",
    "SpectrumGrid",
    "TargetSpec",
    "DesignSpectrumParams",
    "DesignSpectrum",
    "FlatSpectrum",
    "linear_profile",
    "sdof_absolute_accel",
    "running_spectrum",
    "design_spectrum",
    "target_grid",
    "objective",
    "objective_batch",
    "peak_spectrum_batch",
    "read_spectrum_csv",
]


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodGrid:
    periods: np.ndarray

    def __post_init__(self):
        p = np.array(self.periods, dtype=float).ravel()
        if p.size == 0 or np.any(p <= 0):
            raise ValueError("periods must be positive")
        if np.any(np.diff(p) <= 0):
            raise ValueError("periods must be strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "periods", p)

    @classmethod
    def log_spaced(cls, m: int = 120, t_min: float = 0.02, t_max: float = 5.0) -> "PeriodGrid":
        p = np.geomspace(t_min, t_max, m)
        p[0], p[-1] = t_min, t_max
        return cls(p)

    def __len__(self):
        return self.periods.size


@dataclass(frozen=True)
class TimeGrid:
    """Sampling instants of the objective; they must fall on signal samples."""

    times: np.ndarray
    dt: float = 0.01

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        if t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("times must be nonnegative and strictly increasing")
        idx = np.rint(t / self.dt)
        if np.max(np.abs(idx * self.dt - t)) > 1e-9:
            raise ValueError("times must lie on multiples of dt")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, n: int = 2048, dt: float = 0.01) -> "TimeGrid":
        return cls(np.arange(n) * dt, dt)

    @classmethod
    def for_series(cls, series: AccelTimeSeries) -> "TimeGrid":
        return cls.uniform(series.length, series.dt)

    def indices(self, length: int, dt: float) -> np.ndarray:
        if abs(dt - self.dt) > 1e-12:
            raise ValueError(f"time grid dt {self.dt} does not match signal dt {dt}")
        idx = np.rint(self.times / dt).astype(int)
        if idx[-1] >= length:
            raise ValueError(f"time {self.times[-1]} s lies beyond the signal")
        return idx

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class SpectrumGrid:
    """Spectral accelerations (g) with rows over periods and columns over times."""

    values: np.ndarray
    periods: PeriodGrid
    times: TimeGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.periods), len(self.times)):
            raise ValueError(
                f"grid shape {v.shape} does not match {len(self.periods)} periods x "
                f"{len(self.times)} times"
            )
        if np.any(v < 0):
            raise ValueError("spectral values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def at_time(self, t: float) -> np.ndarray:
        return self.values[:, int(np.argmin(np.abs(self.times.times - t)))]

    def at_period(self, period: float) -> np.ndarray:
        return self.values[int(np.argmin(np.abs(self.periods.periods - period))), :]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["period_s"] + [repr(float(t)) for t in self.times.times])
            for T, row in zip(self.periods.periods, self.values):
                writer.writerow([repr(float(T))] + [repr(float(x)) for x in row])


def read_spectrum_csv(path, dt: float | None = None) -> SpectrumGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    times = np.array([float(x) for x in rows[0][1:]])
    body = np.array([[float(x) for x in r] for r in rows[1:] if r])
    if dt is None:
        dt = float(f"{times[1] - times[0]:.12g}") if times.size > 1 else 0.01
    return SpectrumGrid(body[:, 1:], PeriodGrid(body[:, 0]), TimeGrid(times, dt))


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignSpectrumParams:
    S_DS: float
    S_D1: float
    T_L: float = 8.0

    def __post_init__(self):
        if min(self.S_DS, self.S_D1, self.T_L) <= 0:
            raise ValueError("S_DS, S_D1 and T_L must be positive")
        if self.T_L <= self.S_D1 / self.S_DS:
            raise ValueError("T_L must exceed S_D1/S_DS")

    @property
    def T0(self) -> float:
        return 0.2 * self.S_D1 / self.S_DS

    @property
    def Ts(self) -> float:
        return self.S_D1 / self.S_DS


def design_spectrum(params: DesignSpectrumParams, period):
    """Two-parameter code design spectrum (g).

    Linear rise from ``0.4 S_DS`` at ``T = 0`` to ``S_DS`` at ``T0``, plateau up
    to ``Ts``, ``S_D1/T`` up to ``T_L`` and ``S_D1 T_L / T**2`` beyond.
    """
    T = np.asarray(period, dtype=float)
    if np.any(T < 0):
        raise ValueError("period must be nonnegative")
    S_DS, S_D1, T_L = params.S_DS, params.S_D1, params.T_L
    T0, Ts = params.T0, params.Ts
    safe = np.where(T > 0, T, 1.0)
    sa = np.where(
        T < T0,
        S_DS * (0.4 + 0.6 * T / T0),
        np.where(T <= Ts, S_DS, np.where(T <= T_L, S_D1 / safe, S_D1 * T_L / safe**2)),
    )
    return sa if sa.ndim else float(sa)


class DesignSpectrum:
    def __init__(self, params: DesignSpectrumParams):
        self.params = params

    def __call__(self, period):
        return design_spectrum(self.params, period)

    def __repr__(self):
        return f"DesignSpectrum({self.params})"


class FlatSpectrum:
    """Period-independent target ordinate."""

    def __init__(self, value: float):
        if value < 0:
            raise ValueError("spectral ordinate must be nonnegative")
        self.value = float(value)

    def __call__(self, period):
        return np.full(np.shape(period), self.value) if np.ndim(period) else self.value

    def __repr__(self):
        return f"FlatSpectrum({self.value})"


def linear_profile(target_time: float) -> Callable:
    def g(t):
        return np.asarray(t, dtype=float) / target_time

    g.__name__ = "linear"
    return g


PROFILES = {"linear": linear_profile}


@dataclass(frozen=True)
class TargetSpec:
    """``S_aT(t, T) = profile(t) * shape(T)``."""

    shape: Callable
    target_time: float = 10.0
    profile: Callable | str = "linear"

    def __post_init__(self):
        if not self.target_time > 0:
            raise ValueError("target_time must be positive")
        if isinstance(self.profile, str):
            if self.profile not in PROFILES:
                raise ValueError(f"unknown profile {self.profile!r}")
            object.__setattr__(self, "profile", PROFILES[self.profile](self.target_time))
        g = self.profile
        if abs(float(g(0.0))) > 1e-12 or abs(float(g(self.target_time)) - 1.0) > 1e-12:
            raise ValueError("profile must satisfy g(0) = 0 and g(target_time) = 1")
        probe = np.linspace(0.0, 2.0 * self.target_time, 201)
        if np.any(np.diff(np.asarray(g(probe), dtype=float)) < 0):
            raise ValueError("profile must be nondecreasing")


def target_grid(spec: TargetSpec, periods: PeriodGrid, times: TimeGrid) -> SpectrumGrid:
    shape = np.asarray(spec.shape(periods.periods), dtype=float)
    if np.any(shape < 0):
        raise ValueError("target shape must be nonnegative")
    g = np.asarray(spec.profile(times.times), dtype=float)
    return SpectrumGrid(np.outer(shape, g), periods, times)


# ---------------------------------------------------------------------------
# SDOF integration
# ---------------------------------------------------------------------------


def _propagators(periods, zeta: float, dt: float):
    """Per-period step matrices for ``s_{j+1} = Phi s_j + c p_j + d p_{j+1}``."""
    periods = np.atleast_1d(np.asarray(periods, dtype=float))
    if np.any(periods <= 0):
        raise ValueError("period must be positive")
    if not 0 <= zeta < 1:
        raise ValueError("damping ratio must lie in [0, 1)")
    m = periods.size
    Phi = np.empty((m, 2, 2))
    c = np.empty((m, 2))
    d = np.empty((m, 2))
    omegas = 2 * np.pi / periods
    for i, w in enumerate(omegas):
        F = np.zeros((4, 4))
        F[0, 1] = 1.0
        F[1, 0] = -w * w
        F[1, 1] = -2 * zeta * w
        F[1, 2] = 1.0
        F[2, 3] = 1.0
        E = expm(F * dt)
        Phi[i] = E[:2, :2]
        d[i] = E[:2, 3] / dt
        c[i] = E[:2, 2] - d[i]
    return omegas, Phi, c, d


def _abs_accel_steps(ground: np.ndarray, periods, zeta: float, dt: float):
    """Yield ``(j, acc)`` with ``acc[p, i]`` the absolute acceleration of
    oscillator ``i`` under ground record ``p`` at sample ``j``."""
    omegas, Phi, c, d = _propagators(periods, zeta, dt)
    P, n = ground.shape
    u = np.zeros((P, omegas.size))
    v = np.zeros_like(u)
    k = omegas**2
    cv = 2 * zeta * omegas
    yield 0, np.zeros_like(u)
    load = -ground
    for j in range(n - 1):
        p0 = load[:, j : j + 1]
        p1 = load[:, j + 1 : j + 2]
        u, v = (
            Phi[:, 0, 0] * u + Phi[:, 0, 1] * v + c[:, 0] * p0 + d[:, 0] * p1,
            Phi[:, 1, 0] * u + Phi[:, 1, 1] * v + c[:, 1] * p0 + d[:, 1] * p1,
        )
        yield j + 1, -(k * u + cv * v)


def sdof_absolute_accel(ground: AccelTimeSeries, period: float, damping_ratio: float = 0.05):
    """Absolute acceleration history (g) of a linear SDOF starting at rest."""
    if not period > 0:
        raise ValueError("period must be positive")
    out = np.empty(ground.length)
    for j, acc in _abs_accel_steps(ground.samples[None, :], [period], damping_ratio, ground.dt):
        out[j] = acc[0, 0]
    return out


def running_spectrum(
    ground: AccelTimeSeries,
    periods: PeriodGrid,
    times: TimeGrid | None = None,
    damping_ratio: float = 0.05,
) -> SpectrumGrid:
    """Cumulative peak absolute acceleration on the (period, time) grid."""
    if times is None:
        times = TimeGrid.for_series(ground)
    cols = times.indices(ground.length, ground.dt)
    values = np.empty((len(periods), cols.size))
    running = np.zeros(len(periods))
    col = 0
    for j, acc in _abs_accel_steps(ground.samples[None, :], periods.periods, damping_ratio, ground.dt):
        np.maximum(running, np.abs(acc[0]), out=running)
        while col < cols.size and cols[col] == j:
            values[:, col] = running
            col += 1
        if col == cols.size:
            break
    return SpectrumGrid(values, periods, times)


def objective_batch(samples, target: SpectrumGrid, dt: float, damping_ratio: float = 0.05):
    """Squared spectral mismatch for each row of ``samples`` (``(P, N)`` in g).

    The running maximum is accumulated during integration so no full
    ``(P, m, n)`` response array is formed.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    cols = target.times.indices(samples.shape[1], dt)
    tv = target.values
    P = samples.shape[0]
    total = np.zeros(P)
    running = np.zeros((P, len(target.periods)))
    col = 0
    for j, acc in _abs_accel_steps(samples, target.periods.periods, damping_ratio, dt):
        np.maximum(running, np.abs(acc), out=running)
        while col < cols.size and cols[col] == j:
            diff = running - tv[:, col]
            total += np.einsum("pi,pi->p", diff, diff)
            col += 1
        if col == cols.size:
            break
    return total


def peak_spectrum_batch(samples, periods, dt: float, damping_ratio: float = 0.05) -> np.ndarray:
    """Full-duration peak absolute acceleration, shape ``(P, m)``, for each row of ``samples``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    periods = periods.periods if isinstance(periods, PeriodGrid) else np.atleast_1d(periods)
    peak = np.zeros((samples.shape[0], np.size(periods)))
    for _, acc in _abs_accel_steps(samples, periods, damping_ratio, dt):
        np.maximum(peak, np.abs(acc), out=peak)
    return peak


def objective(
    ground: AccelTimeSeries,
    target: SpectrumGrid,
    periods: PeriodGrid | None = None,
    times: TimeGrid | None = None,
    damping_ratio: float = 0.05,
) -> float:
    """Sum over the grid of squared differences between running and target spectra."""
    if periods is not None and not np.array_equal(periods.periods, target.periods.periods):
        raise ValueError("period grid does not match the target grid")
    if times is not None and not np.array_equal(times.times, target.times.times):
        raise ValueError("time grid does not match the target grid")
    return float(objective_batch(ground.samples[None, :], target, ground.dt, damping_ratio)[0])
