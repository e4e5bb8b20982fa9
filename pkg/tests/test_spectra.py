import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from etef.signal import AccelTimeSeries
from etef.spectra import (
    DesignSpectrum,
    DesignSpectrumParams,
    FlatSpectrum,
    PeriodGrid,
    SpectrumGrid,
    TargetSpec,
    TimeGrid,
    design_spectrum,
    objective,
    objective_batch,
    peak_spectrum_batch,
    read_spectrum_csv,
    running_spectrum,
    sdof_absolute_accel,
    target_grid,
)


# -- grids -------------------------------------------------------------------


def test_period_grid_default():
    g = PeriodGrid.log_spaced()
    assert len(g) == 120
    assert g.periods[0] == 0.02 and g.periods[-1] == 5.0
    r = g.periods[1:] / g.periods[:-1]
    np.testing.assert_allclose(r, r[0], rtol=1e-12)


@pytest.mark.parametrize("bad", [[0.1, 0.1], [0.2, 0.1], [-1.0, 1.0], []])
def test_period_grid_rejects(bad):
    with pytest.raises(ValueError):
        PeriodGrid(bad)


def test_time_grid():
    g = TimeGrid.uniform()
    assert len(g) == 2048 and g.times[-1] == pytest.approx(20.47)
    with pytest.raises(ValueError):
        TimeGrid([0.0, 0.015], 0.01)
    with pytest.raises(ValueError):
        TimeGrid([0.0, 1.0]).indices(50, 0.01)


def test_spectrum_grid_validates():
    p, t = PeriodGrid([0.1, 0.2]), TimeGrid([0.0, 0.01])
    with pytest.raises(ValueError):
        SpectrumGrid(np.ones((2, 3)), p, t)
    with pytest.raises(ValueError):
        SpectrumGrid(-np.ones((2, 2)), p, t)


# -- design spectrum and targets -------------------------------------------------


def test_design_spectrum_hand_values():
    p = DesignSpectrumParams(S_DS=1.0, S_D1=0.6, T_L=4.0)
    assert design_spectrum(p, 0.0) == pytest.approx(0.4)
    assert p.T0 == pytest.approx(0.12) and p.Ts == pytest.approx(0.6)
    assert design_spectrum(p, 0.06) == pytest.approx(0.7)
    assert design_spectrum(p, 0.3) == pytest.approx(1.0)
    assert design_spectrum(p, 1.2) == pytest.approx(0.5)
    assert design_spectrum(p, 8.0) == pytest.approx(0.6 * 4.0 / 64.0)


def test_design_spectrum_continuity_and_decay():
    p = DesignSpectrumParams(S_DS=0.9, S_D1=0.45, T_L=6.0)
    eps = 1e-9
    for corner in (p.T0, p.Ts, p.T_L):
        lo, hi = design_spectrum(p, corner - eps), design_spectrum(p, corner + eps)
        assert lo == pytest.approx(hi, abs=1e-7)
    for T in (0.8, 1.6, 3.2):
        assert design_spectrum(p, T) * T == pytest.approx(p.S_D1)
    with pytest.raises(ValueError):
        design_spectrum(p, -0.1)
    with pytest.raises(ValueError):
        DesignSpectrumParams(1.0, 2.0, T_L=1.5)


def test_target_grid_separable():
    shape = DesignSpectrum(DesignSpectrumParams(1.0, 0.6))
    spec = TargetSpec(shape, target_time=4.0)
    periods = PeriodGrid.log_spaced(10)
    times = TimeGrid.uniform(512)
    grid = target_grid(spec, periods, times)
    np.testing.assert_array_equal(grid.at_time(4.0), shape(periods.periods))
    np.testing.assert_array_equal(grid.values[:, 0], 0.0)
    np.testing.assert_allclose(grid.at_time(2.0), 0.5 * shape(periods.periods), rtol=1e-15)


def test_target_spec_validates_profile():
    with pytest.raises(ValueError):
        TargetSpec(FlatSpectrum(1.0), profile=lambda t: np.asarray(t) * 0 + 1)
    with pytest.raises(ValueError):
        TargetSpec(FlatSpectrum(1.0), target_time=2.0, profile=lambda t: np.sin(np.pi * np.asarray(t) / 4))
    with pytest.raises(ValueError):
        TargetSpec(FlatSpectrum(1.0), profile="cubic")
    with pytest.raises(ValueError):
        FlatSpectrum(-1.0)


# -- SDOF -------------------------------------------------------------------------


def test_zero_ground_zero_response():
    out = sdof_absolute_accel(AccelTimeSeries.zeros(256), 0.5)
    assert np.all(out == 0)


@pytest.mark.parametrize("T,zeta", [(0.0, 0.05), (-1.0, 0.05), (1.0, 1.0), (1.0, -0.1)])
def test_sdof_domain_errors(T, zeta):
    with pytest.raises(ValueError):
        sdof_absolute_accel(AccelTimeSeries.zeros(16), T, zeta)


def test_resonant_steady_state_matches_closed_form():
    T, zeta, dt, A = 1.0, 0.05, 0.01, 0.1
    n = 8192  # about 80 cycles
    t = np.arange(n) * dt
    ground = AccelTimeSeries(A * np.sin(2 * np.pi * t / T), dt)
    acc = sdof_absolute_accel(ground, T, zeta)
    # closed form at r = 1: |x_abs''| = A sqrt(1 + (2 zeta)^2) / (2 zeta)
    expected = A * np.sqrt(1 + 4 * zeta**2) / (2 * zeta)
    steady = np.max(np.abs(acc[-int(10 * T / dt):]))
    assert steady == pytest.approx(expected, rel=0.01)


@pytest.mark.parametrize("r", [0.5, 1.3, 2.0])
def test_off_resonance_amplitude(r):
    T, zeta, dt = 0.8, 0.05, 0.005
    n = 16384
    t = np.arange(n) * dt
    w = 2 * np.pi / T
    ground = AccelTimeSeries(np.cos(r * w * t), dt)
    acc = sdof_absolute_accel(ground, T, zeta)
    expected = np.sqrt(1 + (2 * zeta * r) ** 2) / np.sqrt((1 - r * r) ** 2 + (2 * zeta * r) ** 2)
    assert np.max(np.abs(acc[-2000:])) == pytest.approx(expected, rel=0.01)


def _oversampled_reference(x, dt, T, zeta, factor=10):
    # RK integration of the same ODE on a grid 10x finer, input linearly interpolated
    w = 2 * np.pi / T
    t = np.arange(x.size) * dt
    t_fine = np.arange((x.size - 1) * factor + 1) * (dt / factor)

    def rhs(tt, y):
        ag = np.interp(tt, t, x)
        return [y[1], -ag - 2 * zeta * w * y[1] - w * w * y[0]]

    sol = solve_ivp(rhs, (0, t[-1]), [0.0, 0.0], t_eval=t_fine, max_step=dt / factor,
                    rtol=1e-10, atol=1e-14)
    u, v = sol.y
    return -(w * w * u + 2 * zeta * w * v)[::factor]


def test_rigid_limit_tracks_ground():
    dt, n, T, zeta = 0.01, 1024, 0.02, 0.05
    t = np.arange(n) * dt
    x = 0.3 * np.sin(2 * np.pi * 0.7 * t) + 0.2 * np.sin(2 * np.pi * 1.9 * t + 0.4)
    x *= np.minimum(1.0, t / 2.0)
    acc = sdof_absolute_accel(AccelTimeSeries(x, dt), T, zeta)
    ref = _oversampled_reference(x, dt, T, zeta)
    scale = np.max(np.abs(x))
    assert np.max(np.abs(acc - x)) <= 0.05 * scale
    assert np.max(np.abs(acc - ref)) <= 0.05 * scale
    assert np.max(np.abs(acc - ref)) <= 1e-3 * scale


def test_piecewise_exact_matches_reference_for_random_input():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(256) * 0.1
    for T in (0.1, 0.7, 3.0):
        acc = sdof_absolute_accel(AccelTimeSeries(x), T)
        ref = _oversampled_reference(x, 0.01, T, 0.05)
        np.testing.assert_allclose(acc, ref, atol=1e-6 * np.max(np.abs(ref)))


# -- running spectrum and objective ----------------------------------------------


def test_running_spectrum_is_cumulative_max():
    rng = np.random.default_rng(1)
    g = AccelTimeSeries(rng.standard_normal(512) * 0.2)
    periods = PeriodGrid.log_spaced(15)
    grid = running_spectrum(g, periods)
    assert np.all(np.diff(grid.values, axis=1) >= 0)
    for i, T in enumerate(periods.periods):
        acc = np.abs(sdof_absolute_accel(g, T))
        np.testing.assert_array_equal(grid.values[i], np.maximum.accumulate(acc))


def test_last_column_equals_peak_search():
    rng = np.random.default_rng(2)
    g = AccelTimeSeries(rng.standard_normal(512) * 0.2)
    periods = PeriodGrid.log_spaced(12)
    last = running_spectrum(g, periods).values[:, -1]
    peaks = [np.max(np.abs(sdof_absolute_accel(g, T))) for T in periods.periods]
    np.testing.assert_array_equal(last, peaks)
    np.testing.assert_array_equal(peak_spectrum_batch(g.samples, periods, g.dt)[0], peaks)


def test_zero_ground_zero_grid():
    grid = running_spectrum(AccelTimeSeries.zeros(64), PeriodGrid.log_spaced(5))
    assert np.all(grid.values == 0)


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(0.0, 50.0), seed=st.integers(0, 2**16))
def test_running_spectrum_scales_linearly(alpha, seed):
    g = AccelTimeSeries(np.random.default_rng(seed).standard_normal(128))
    periods = PeriodGrid.log_spaced(8)
    a = running_spectrum(g.scaled(alpha), periods).values
    b = alpha * running_spectrum(g, periods).values
    assert np.max(np.abs(a - b)) <= 1e-10 * max(np.max(np.abs(b)), 1e-300)


def test_objective_single_cell():
    g = AccelTimeSeries(np.random.default_rng(3).standard_normal(64))
    periods, times = PeriodGrid([0.5]), TimeGrid([0.4])
    s = running_spectrum(g, periods, times).values[0, 0]
    g = g.scaled(0.3 / s)
    target = SpectrumGrid([[0.1]], periods, times)
    assert objective(g, target) == pytest.approx(0.04, rel=1e-12)


def test_objective_zero_on_own_spectrum():
    g = AccelTimeSeries(np.random.default_rng(4).standard_normal(128))
    periods = PeriodGrid.log_spaced(6)
    target = running_spectrum(g, periods)
    assert objective(g, target) == 0.0


@pytest.mark.parametrize("case", range(5))
def test_objective_matches_brute_force(case, brute_force_objective):
    rng = np.random.default_rng(100 + case)
    g = AccelTimeSeries(rng.standard_normal(128) * 0.3)
    periods = PeriodGrid(np.sort(rng.uniform(0.05, 3.0, 10)))
    times = TimeGrid(np.sort(rng.choice(128, 64, replace=False)) * 0.01)
    target = SpectrumGrid(rng.uniform(0, 1, (10, 64)), periods, times)
    got = objective(g, target, periods, times)
    assert got == pytest.approx(brute_force_objective(g, target), rel=1e-9)


def test_objective_batch_matches_single():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((4, 128))
    periods = PeriodGrid.log_spaced(7)
    target = target_grid(TargetSpec(FlatSpectrum(0.4), 1.0), periods, TimeGrid.uniform(128))
    batch = objective_batch(X, target, 0.01)
    for p in range(4):
        assert batch[p] == pytest.approx(objective(AccelTimeSeries(X[p]), target), rel=1e-13)


def test_objective_grid_mismatch():
    g = AccelTimeSeries.zeros(64)
    periods = PeriodGrid([0.5, 1.0])
    target = SpectrumGrid(np.zeros((2, 1)), periods, TimeGrid([0.1]))
    with pytest.raises(ValueError):
        objective(g, target, PeriodGrid([0.5, 1.1]))
    with pytest.raises(ValueError):
        objective(g, target, periods, TimeGrid([0.2]))
    late = SpectrumGrid(np.zeros((2, 1)), periods, TimeGrid([5.0]))
    with pytest.raises(ValueError):
        objective(g, late)


def test_objective_of_zero_signal_is_target_energy():
    periods = PeriodGrid.log_spaced(9)
    target = target_grid(TargetSpec(FlatSpectrum(0.5), 2.0), periods, TimeGrid.uniform(256))
    assert objective(AccelTimeSeries.zeros(256), target) == pytest.approx(np.sum(target.values**2))


def test_spectrum_csv_round_trip(tmp_path):
    g = AccelTimeSeries(np.random.default_rng(6).standard_normal(256))
    grid = running_spectrum(g, PeriodGrid.log_spaced(5))
    grid.to_csv(tmp_path / "s.csv")
    back = read_spectrum_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.values, grid.values)
    np.testing.assert_array_equal(back.periods.periods, grid.periods.periods)
    np.testing.assert_array_equal(back.times.times, grid.times.times)
    assert back.times.dt == grid.times.dt
