import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etef.pso import (
    ConvergenceLog,
    Seeding,
    SwarmConfig,
    bounds_from_seeding,
    cca_multiplier,
    damp_inertia,
    init_swarm,
    move_particle,
    run,
    velocity_update,
)


def sphere(x):
    return float(np.sum(x * x))


# -- constants -----------------------------------------------------------------


def test_cca_multiplier_reported_value():
    assert cca_multiplier(2.05, 2.05) == pytest.approx(0.729, abs=1e-3)


def test_cca_multiplier_hand_value():
    assert cca_multiplier(2.5, 2.5) == pytest.approx(2 / (3 + np.sqrt(5)), abs=1e-12)
    assert cca_multiplier(2.5, 2.5) == pytest.approx(0.38197, abs=1e-5)


@pytest.mark.parametrize("c1,c2", [(2.0, 2.0), (1.0, 1.0), (0.0, 3.9)])
def test_cca_multiplier_domain(c1, c2):
    with pytest.raises(ValueError, match="greater than 4"):
        cca_multiplier(c1, c2)


def test_damp_inertia():
    assert damp_inertia(1.0, 0.99) == pytest.approx(0.99)
    assert damp_inertia(0.8, 1.0) == 0.8
    w = 0.9
    for _ in range(25):
        w = damp_inertia(w, 0.97)
    assert w == pytest.approx(0.9 * 0.97**25, rel=1e-13)
    for bad in (0.0, 1.2, -0.5):
        with pytest.raises(ValueError):
            damp_inertia(1.0, bad)


@pytest.mark.parametrize(
    "kw",
    [
        dict(n_pop=1),
        dict(xi=0.0),
        dict(xi=1.5),
        dict(c1=-1.0),
        dict(mode="constriction", c1=2.0, c2=2.0),
        dict(mode="chaotic"),
        dict(max_iters=-1),
        dict(max_retries=-1),
        dict(bounds=(1.0, 1.0)),
        dict(random_granularity="row"),
    ],
)
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        SwarmConfig(**kw)


def test_defaults():
    cfg = SwarmConfig()
    assert (cfg.n_pop, cfg.omega, cfg.xi, cfg.c1, cfg.c2) == (400, 0.8, 1.0, 1.0, 1.0)
    assert cfg.mode == "plain" and cfg.max_retries == 50
    assert cfg.random_granularity == "scalar"


# -- velocity -------------------------------------------------------------------


def test_velocity_no_attraction_keeps_velocity():
    cfg = SwarmConfig(omega=1.0, c1=0.0, c2=0.0)
    v = np.array([0.3, -2.0])
    x = np.zeros(2)
    out = velocity_update(x, v, x + 1, x - 1, cfg, 1.0, np.random.default_rng(0))
    np.testing.assert_array_equal(out, v)


def test_velocity_at_attractors():
    x = np.array([1.0, 2.0])
    v = np.array([0.5, -0.5])
    rng = np.random.default_rng(0)
    plain = SwarmConfig(omega=0.8)
    np.testing.assert_allclose(velocity_update(x, v, x, x, plain, 0.8, rng), 0.8 * v)
    cca = SwarmConfig(mode="constriction", c1=2.05, c2=2.05)
    K = cca_multiplier(2.05, 2.05)
    np.testing.assert_allclose(velocity_update(x, v, x, x, cca, K, rng), K * v)


def test_constriction_form_with_fixed_randoms():
    cfg = SwarmConfig(mode="constriction", c1=2.05, c2=2.05)
    K = cfg.initial_multiplier
    x, v = np.array([0.0]), np.array([1.0])
    p, g = np.array([1.0]), np.array([-2.0])
    out = velocity_update(x, v, p, g, cfg, K, r=(1.0, 0.0))
    # attraction weight is 2.05 * K, inertia weight K
    assert out[0] == pytest.approx(K * 1.0 + 2.05 * K * 1.0)
    out = velocity_update(x, v, p, g, cfg, K, r=(0.0, 1.0))
    assert out[0] == pytest.approx(K * 1.0 + 2.05 * K * (-2.0))


def test_plain_form_with_fixed_randoms():
    cfg = SwarmConfig(omega=0.7, c1=1.5, c2=0.5)
    x, v, p, g = (np.array([a]) for a in (1.0, 2.0, 3.0, -1.0))
    out = velocity_update(x, v, p, g, cfg, 0.7, r=(0.25, 0.5))
    assert out[0] == pytest.approx(0.7 * 2 + 1.5 * 0.25 * 2 + 0.5 * 0.5 * (-2))


def test_scalar_granularity_uses_one_pair():
    cfg = SwarmConfig(omega=0.0, c1=1.0, c2=0.0)
    x = np.zeros(6)
    p = np.arange(1.0, 7.0)
    out = velocity_update(x, np.zeros(6), p, x, cfg, 0.0, np.random.default_rng(3))
    ratio = out / p
    np.testing.assert_allclose(ratio, ratio[0])
    cfg_c = SwarmConfig(omega=0.0, c1=1.0, c2=0.0, random_granularity="component")
    out = velocity_update(x, np.zeros(6), p, x, cfg_c, 0.0, np.random.default_rng(3))
    assert np.ptp(out / p) > 0


# -- fly-back --------------------------------------------------------------------


def test_move_inside_accepted_first_try():
    cfg = SwarmConfig(omega=1.0, c1=0.0, c2=0.0)
    x = np.zeros(3)
    v = np.array([0.5, -1.0, 1.0])
    lo, hi = -np.ones(3), np.ones(3)
    x_new, v_new, k = move_particle(x, v, x, x, lo, hi, cfg, 1.0, np.random.default_rng(0))
    assert k == 0
    np.testing.assert_array_equal(x_new, v)


def test_move_redraws_until_feasible():
    # the inertia-free move lands outside unless r1 is small enough
    cfg = SwarmConfig(omega=0.0, c1=1.0, c2=0.0, max_retries=500)
    x = np.array([0.0])
    p = np.array([4.0])
    x_new, _, k = move_particle(x, np.zeros(1), p, x, np.array([-1.0]), np.array([1.0]), cfg, 0.0,
                                np.random.default_rng(1))
    assert -1.0 <= x_new[0] <= 1.0
    assert x_new[0] > 0


def test_adversarial_move_stays_put():
    cfg = SwarmConfig(omega=1.0, c1=0.0, c2=0.0, max_retries=7)
    x = np.array([0.2, -0.1])
    v = np.array([100.0, 0.0])
    x_new, v_new, k = move_particle(x, v, x, x, -np.ones(2), np.ones(2), cfg, 1.0,
                                    np.random.default_rng(0))
    assert k == 8
    np.testing.assert_array_equal(x_new, x)
    np.testing.assert_array_equal(v_new, 0.0)


# -- seeding ---------------------------------------------------------------------


def test_identity_covariance_sample_variance():
    s = Seeding.from_covariance(np.eye(4))
    x = s.sample(10_000, np.random.default_rng(0))
    np.testing.assert_allclose(x.var(axis=0), 1.0, rtol=0.1)


def test_zero_covariance_collapses_to_mean():
    mean = np.array([1.0, -2.0, 0.5])
    cfg = SwarmConfig(n_pop=5, bounds=(-10.0, 10.0))
    sw = init_swarm(cfg, Seeding.from_covariance(np.zeros((3, 3)), mean))
    np.testing.assert_array_equal(sw.position, np.tile(mean, (5, 1)))
    np.testing.assert_array_equal(sw.velocity, 0.0)


def test_non_psd_covariance_rejected():
    with pytest.raises(ValueError, match="semidefinite"):
        Seeding.from_covariance(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        Seeding.from_covariance(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_single_record_rank_one():
    rec = np.array([1.0, -2.0, 0.5, 3.0])
    s = Seeding.from_records(rec[None, :])
    x = s.sample(50, np.random.default_rng(0))
    for row in x:
        cross = np.linalg.norm(row * rec.dot(rec) - rec * row.dot(rec))
        assert cross < 1e-10 * np.linalg.norm(row) * rec.dot(rec) + 1e-14


def test_records_covariance_is_second_moment():
    C = np.random.default_rng(1).standard_normal((7, 3))
    s = Seeding.from_records(C)
    np.testing.assert_allclose(s.factor.T @ s.factor, C.T @ C / 7)


def test_bounds_from_seeding():
    s = Seeding.from_covariance(np.diag([4.0, 0.0, 1.0]))
    lo, hi = bounds_from_seeding(s, 3.0)
    np.testing.assert_allclose(hi, [6.0, 3e-6 * 2, 3.0])
    np.testing.assert_allclose(lo, -hi)


def test_init_clips_into_bounds_and_is_reproducible():
    s = Seeding.from_covariance(np.eye(5) * 100)
    cfg = SwarmConfig(n_pop=30, bounds=(-1.0, 1.0), seed=4)
    a, b = init_swarm(cfg, s), init_swarm(cfg, s)
    assert np.all(np.abs(a.position) <= 1)
    np.testing.assert_array_equal(a.position, b.position)
    assert np.all(np.isinf(a.pbest_value))


def test_uniform_fallback_needs_bounds():
    with pytest.raises(ValueError):
        init_swarm(SwarmConfig(n_pop=4), None, 3)
    sw = init_swarm(SwarmConfig(n_pop=4, bounds=(np.zeros(3), np.ones(3))))
    assert sw.position.shape == (4, 3)


# -- driver ------------------------------------------------------------------------


def test_max_iters_zero():
    cfg = SwarmConfig(n_pop=8, max_iters=0, bounds=(-1.0, 1.0))
    best, value, log = run(sphere, cfg, dim=4)
    assert len(log) == 1 and log[0].evaluations == 8
    assert value == pytest.approx(sphere(best))


def test_constant_objective():
    cfg = SwarmConfig(n_pop=6, max_iters=10, bounds=(-1.0, 1.0))
    _, value, log = run(lambda x: 3.5, cfg, dim=2)
    assert value == 3.5
    assert all(e.gbest_value == 3.5 for e in log)


def test_evaluation_accounting_and_omega_log():
    cfg = SwarmConfig(n_pop=10, max_iters=12, xi=0.9, omega=1.0, bounds=(-5.0, 5.0))
    _, _, log = run(sphere, cfg, dim=3)
    assert [e.evaluations for e in log] == [10 * (k + 1) for k in range(13)]
    np.testing.assert_allclose([e.omega for e in log], 0.9 ** np.arange(13), rtol=1e-12)


def test_constriction_multiplier_is_logged():
    cfg = SwarmConfig(n_pop=6, max_iters=3, mode="constriction", c1=2.05, c2=2.05, xi=0.99,
                      bounds=(-1.0, 1.0))
    _, _, log = run(sphere, cfg, dim=2)
    K = cca_multiplier(2.05, 2.05)
    np.testing.assert_allclose([e.omega for e in log], K * 0.99 ** np.arange(4))


def test_best_is_best_evaluated():
    seen = []

    def f(x):
        v = sphere(x - 0.3)
        seen.append(v)
        return v

    cfg = SwarmConfig(n_pop=12, max_iters=20, bounds=(-2.0, 2.0), seed=2)
    best, value, log = run(f, cfg, dim=4)
    assert value == min(seen)
    assert value == f(best)
    assert np.all(np.diff(log.best_values) <= 0)


def test_pbest_dominance_and_bounds_each_iteration():
    lo, hi = -np.ones(5) * 0.5, np.ones(5) * 2.0
    cfg = SwarmConfig(n_pop=15, max_iters=25, bounds=(lo, hi), omega=1.2, c1=2.0, c2=2.0,
                      max_retries=3)

    def check(entry, swarm):
        assert np.all(swarm.position >= lo) and np.all(swarm.position <= hi)
        vals = np.array([sphere(x - 1.0) for x in swarm.position])
        assert np.all(swarm.pbest_value <= vals)

    run(lambda x: sphere(x - 1.0), cfg, dim=5, callback=check)


@settings(max_examples=25, deadline=None)
@given(
    width=st.floats(1e-6, 0.1),
    omega=st.floats(0.5, 3.0),
    c=st.floats(0.5, 4.0),
    seed=st.integers(0, 10_000),
)
def test_tight_bounds_fuzz(width, omega, c, seed):
    lo = -width * np.ones(6)
    hi = width * np.linspace(0.5, 3.0, 6)
    cfg = SwarmConfig(n_pop=8, max_iters=15, bounds=(lo, hi), omega=omega, c1=c, c2=c, seed=seed,
                      max_retries=5)
    offset = 10.0 * np.arange(6)  # optimum far outside the box

    def check(entry, swarm):
        assert np.all(swarm.position >= lo) and np.all(swarm.position <= hi)

    _, _, log = run(lambda x: sphere(x - offset), cfg, dim=6, callback=check)
    assert np.all(np.diff(log.best_values) <= 0)


def test_vectorized_and_threaded_runs_agree():
    def batch(X):
        return np.sum((X - 0.2) ** 2, axis=1)

    base = dict(n_pop=10, max_iters=15, bounds=(-1.0, 1.0), seed=9)
    a = run(lambda x: float(batch(x[None])[0]), SwarmConfig(**base), dim=4)
    b = run(batch, SwarmConfig(**base), dim=4, vectorized=True)
    c = run(batch, SwarmConfig(**base, threads=3), dim=4, vectorized=True)
    assert a.best_value == b.best_value == c.best_value
    np.testing.assert_array_equal(b.log.best_values, c.log.best_values)


def test_determinism():
    cfg = SwarmConfig(n_pop=10, max_iters=20, bounds=(-3.0, 3.0), seed=5)
    a = run(sphere, cfg, dim=5)
    b = run(sphere, cfg, dim=5)
    np.testing.assert_array_equal(a.best_position, b.best_position)
    np.testing.assert_array_equal(a.log.best_values, b.log.best_values)
    c = run(sphere, SwarmConfig(n_pop=10, max_iters=20, bounds=(-3.0, 3.0), seed=6), dim=5)
    assert not np.array_equal(a.best_position, c.best_position)


def test_objective_shape_checked():
    cfg = SwarmConfig(n_pop=4, max_iters=1, bounds=(-1.0, 1.0))
    with pytest.raises(ValueError):
        run(lambda X: np.zeros(3), cfg, dim=2, vectorized=True)


def test_convergence_log_round_trip(tmp_path):
    cfg = SwarmConfig(n_pop=6, max_iters=5, bounds=(-1.0, 1.0))
    _, _, log = run(sphere, cfg, dim=2)
    log.to_jsonl(tmp_path / "c.jsonl")
    back = ConvergenceLog.from_jsonl(tmp_path / "c.jsonl")
    assert [(e.iteration, e.gbest_value, e.omega, e.evaluations, e.elapsed_s) for e in back] == [
        (e.iteration, e.gbest_value, e.omega, e.evaluations, e.elapsed_s) for e in log
    ]
