"""
Bounded particle swarm optimizer.

Velocity rule (plain mode)::

    v' = w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)

and in constriction mode ``v' = K [v + c1 r1 (pbest - x) + c2 r2 (gbest - x)]``
with ``K = 2 / |2 - phi - sqrt(phi**2 - 4 phi)|``, ``phi = c1 + c2 > 4``.  The
inertia (or ``K``) is multiplied by ``xi`` after every iteration.

Bounds are enforced by a same-iteration fly-back: a move that leaves the box
is discarded and the velocity is recomputed with fresh random numbers until
the tentative position is feasible.  After ``max_retries`` failed redraws the
particle stays where it is with zero velocity.  Infeasible points are never
evaluated.

Random numbers come from one ``SeedSequence``: child 0 drives the initial
sampling and children ``1..n_pop`` are per-particle streams, so evaluating
particles in parallel cannot change a run.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "SwarmConfig",
    "Seeding",
    "Swarm",
    "LogEntry",
    "ConvergenceLog",
    "cca_multiplier",
    "damp_inertia",
    "velocity_update",
    "move_particle",
    "init_swarm",
    "run",
    "bounds_from_seeding",
]


def cca_multiplier(c1: float, c2: float) -> float:
    """Constriction multiplier for ``phi = c1 + c2``; ``phi`` must exceed 4.

    >>> round(cca_multiplier(2.05, 2.05), 4)
    0.7298
    """
    phi = c1 + c2
    if not phi > 4:
        raise ValueError(f"phi = c1 + c2 must be greater than 4, got {phi}")
    return 2.0 / abs(2.0 - phi - math.sqrt(phi * phi - 4.0 * phi))


def damp_inertia(omega_prev: float, xi: float) -> float:
    if not 0 < xi <= 1:
        raise ValueError(f"damping factor xi must lie in (0, 1], got {xi}")
    return xi * omega_prev


@dataclass
class SwarmConfig:
    """PSO settings.  Defaults are the tuned values ``n_pop=400, w=0.8, xi=1, c1=c2=1``.

    ``bounds`` is ``(lower, upper)``, each a scalar or per-variable array; when
    ``None`` it is derived from the seeding distribution (mean +/- ``bound_k`` std).
    ``random_granularity`` selects one scalar ``r1, r2`` pair per particle
    (``"scalar"``) or independent draws per component (``"component"``).
    """

    n_pop: int = 400
    omega: float = 0.8
    xi: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    mode: str = "plain"
    max_iters: int = 1000
    bounds: tuple | None = None
    bound_k: float = 6.0
    seed: int = 0
    max_retries: int = 50
    random_granularity: str = "scalar"
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_pop < 2:
            raise ValueError("n_pop must be at least 2")
        if not 0 < self.xi <= 1:
            raise ValueError("xi must lie in (0, 1]")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be nonnegative")
        if self.mode not in ("plain", "constriction"):
            raise ValueError(f"mode must be 'plain' or 'constriction', got {self.mode!r}")
        if self.mode == "constriction" and not self.c1 + self.c2 > 4:
            raise ValueError("constriction mode needs c1 + c2 > 4")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")
        if self.random_granularity not in ("scalar", "component"):
            raise ValueError("random_granularity must be 'scalar' or 'component'")
        if self.bounds is not None:
            lo, hi = self.bounds
            if np.any(np.asarray(lo, float) >= np.asarray(hi, float)):
                raise ValueError("lower bounds must be strictly below upper bounds")

    @property
    def initial_multiplier(self) -> float:
        """Velocity multiplier at iteration 0 (``omega`` or the constriction ``K``)."""
        if self.mode == "constriction":
            return cca_multiplier(self.c1, self.c2)
        return self.omega


@dataclass
class Seeding:
    """Distribution of the initial swarm.

    Exactly one of the following is used, in this order of precedence:

    * ``factor`` - rows ``f_k`` with sampled deviations ``sum_k z_k f_k``,
      ``z ~ N(0, 1)``, i.e. covariance ``F^T F``.  Built by :meth:`from_records`.
    * ``covariance`` - explicit PSD matrix.
    * neither - independent uniform draws within the bounds.
    """

    mean: np.ndarray | None = None
    covariance: np.ndarray | None = None
    factor: np.ndarray | None = None

    @classmethod
    def from_covariance(cls, covariance, mean=None, tol: float = 1e-10) -> "Seeding":
        cov = np.atleast_2d(np.asarray(covariance, float))
        if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be a symmetric square matrix")
        evals, evecs = np.linalg.eigh(cov)
        scale = max(1.0, float(np.max(np.abs(evals))))
        if evals.min() < -tol * scale:
            raise ValueError("covariance is not positive semidefinite")
        root = evecs * np.sqrt(np.clip(evals, 0.0, None))
        d = cov.shape[0]
        mean = np.zeros(d) if mean is None else np.asarray(mean, float)
        return cls(mean=mean, covariance=cov, factor=root.T)

    @classmethod
    def from_records(cls, coefficient_vectors) -> "Seeding":
        """Zero-mean second-moment model of encoded records.

        Each row is one record's decision vector.  The sign of a ground motion
        is arbitrary, so the mean is pinned to zero and the covariance is
        ``C^T C / N``; a single record gives a rank-one distribution along it.
        """
        C = np.atleast_2d(np.asarray(coefficient_vectors, float))
        if C.shape[0] == 0:
            raise ValueError("record bank is empty")
        return cls(mean=np.zeros(C.shape[1]), factor=C / np.sqrt(C.shape[0]))

    @property
    def dim(self) -> int | None:
        if self.factor is not None:
            return self.factor.shape[1]
        if self.covariance is not None:
            return self.covariance.shape[0]
        return None if self.mean is None else self.mean.size

    def std(self) -> np.ndarray:
        return np.sqrt(np.sum(self.factor**2, axis=0))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.factor.shape[0]))
        return self.mean + z @ self.factor


def bounds_from_seeding(seeding: Seeding, k: float = 6.0):
    """Per-variable box ``mean +/- k std`` with a floor on degenerate widths."""
    std = seeding.std()
    top = float(std.max())
    if top == 0:
        raise ValueError("seeding distribution is degenerate; supply explicit bounds")
    std = np.maximum(std, 1e-6 * top)
    return seeding.mean - k * std, seeding.mean + k * std


def _resolve_bounds(config: SwarmConfig, seeding: Seeding | None, dim: int | None):
    if config.bounds is not None:
        lo, hi = (np.asarray(b, float) for b in config.bounds)
        if dim is None:
            dim = max(lo.size, hi.size)
            if dim == 1:
                raise ValueError("scalar bounds need a dimension from the seeding")
        return np.broadcast_to(lo, (dim,)).copy(), np.broadcast_to(hi, (dim,)).copy()
    if seeding is None or seeding.factor is None:
        raise ValueError("bounds are required when the seeding has no covariance")
    return bounds_from_seeding(seeding, config.bound_k)


@dataclass
class Swarm:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rngs: list = field(repr=False)

    @property
    def n_pop(self) -> int:
        return self.position.shape[0]

    def gbest_index(self) -> int:
        # argmin returns the first of equal minima
        return int(np.argmin(self.pbest_value))


def _streams(seed: int, n_pop: int):
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(n_pop + 1)
    return np.random.default_rng(children[0]), [np.random.default_rng(c) for c in children[1:]]


def init_swarm(config: SwarmConfig, seeding: Seeding | None = None, dim: int | None = None) -> Swarm:
    """Sample the initial swarm, clip it into bounds, zero the velocities.

    ``pbest_value`` is left at ``inf`` until the first evaluation.
    """
    if seeding is not None and seeding.factor is None and seeding.covariance is not None:
        seeding = Seeding.from_covariance(seeding.covariance, seeding.mean)
    if seeding is not None and seeding.dim is not None:
        if dim is not None and dim != seeding.dim:
            raise ValueError(f"seeding dimension {seeding.dim} does not match {dim}")
        dim = seeding.dim
    lo, hi = _resolve_bounds(config, seeding, dim)
    master, rngs = _streams(config.seed, config.n_pop)
    if seeding is not None and seeding.factor is not None:
        x = seeding.sample(config.n_pop, master)
    else:
        x = master.uniform(lo, hi, size=(config.n_pop, lo.size))
    x = np.clip(x, lo, hi)
    return Swarm(
        position=x,
        velocity=np.zeros_like(x),
        pbest_position=x.copy(),
        pbest_value=np.full(config.n_pop, np.inf),
        lower=lo,
        upper=hi,
        rngs=rngs,
    )


def _draw(rng: np.random.Generator, dim: int, granularity: str):
    if granularity == "component":
        return rng.random(dim), rng.random(dim)
    r = rng.random(2)
    return r[0], r[1]


def velocity_update(
    x, v, pbest, gbest, config: SwarmConfig, omega_now: float, rng=None, r=None
) -> np.ndarray:
    """New velocity of one particle.

    ``omega_now`` is the current inertia in plain mode and the current
    constriction multiplier in constriction mode.  ``r`` overrides the random
    pair ``(r1, r2)``; otherwise it is drawn from ``rng``.
    """
    if r is None:
        r = _draw(rng, np.size(x), config.random_granularity)
    r1, r2 = r
    pull = config.c1 * r1 * (pbest - x) + config.c2 * r2 * (gbest - x)
    if config.mode == "constriction":
        return omega_now * (v + pull)
    return omega_now * v + pull


def move_particle(
    x, v, pbest, gbest, lower, upper, config: SwarmConfig, omega_now: float, rng
):
    """Fly-back move.  Returns ``(new_position, new_velocity, redraws)``.

    ``redraws`` counts the rejected tentative moves; when it exceeds
    ``max_retries`` the particle stays at ``x`` with zero velocity.
    """
    for attempt in range(config.max_retries + 1):
        v_new = velocity_update(x, v, pbest, gbest, config, omega_now, rng)
        x_new = x + v_new
        if np.all(x_new >= lower) and np.all(x_new <= upper):
            return x_new, v_new, attempt
    return x.copy(), np.zeros_like(v), config.max_retries + 1


@dataclass
class LogEntry:
    iteration: int
    gbest_value: float
    omega: float
    evaluations: int
    elapsed_s: float
    redraws: int = 0
    stalled: int = 0


class ConvergenceLog(list):
    """One :class:`LogEntry` per iteration (entry 0 is the initial swarm)."""

    @property
    def best_values(self) -> np.ndarray:
        return np.array([e.gbest_value for e in self])

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for e in self:
                rec = {
                    "iteration": e.iteration,
                    "gbest_value": e.gbest_value,
                    "omega": e.omega,
                    "evaluations": e.evaluations,
                    "elapsed_s": e.elapsed_s,
                }
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "ConvergenceLog":
        out = cls()
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    out.append(LogEntry(**json.loads(line)))
        return out


def _evaluator(objective: Callable, vectorized: bool, threads: int):
    def evaluate(X: np.ndarray) -> np.ndarray:
        if vectorized:
            if threads > 1 and X.shape[0] > 1:
                chunks = np.array_split(X, threads)
                with ThreadPoolExecutor(threads) as pool:
                    parts = list(pool.map(objective, chunks))
                vals = np.concatenate([np.asarray(p, float) for p in parts])
            else:
                vals = np.asarray(objective(X), float)
        elif threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                vals = np.array(list(pool.map(objective, X)), float)
        else:
            vals = np.array([objective(x) for x in X], float)
        if vals.shape != (X.shape[0],):
            raise ValueError(f"objective returned shape {vals.shape} for {X.shape[0]} points")
        return vals

    return evaluate


@dataclass
class RunResult:
    best_position: np.ndarray
    best_value: float
    log: ConvergenceLog
    swarm: Swarm = field(repr=False)

    def __iter__(self):
        return iter((self.best_position, self.best_value, self.log))


def run(
    objective: Callable,
    config: SwarmConfig,
    seeding: Seeding | None = None,
    dim: int | None = None,
    vectorized: bool = False,
    callback: Callable | None = None,
) -> RunResult:
    """Minimize ``objective`` over the bounded box.

    Parameters
    ----------
    objective : callable
        ``f(x) -> float``, or ``f(X) -> array`` over rows when ``vectorized``.
    config : SwarmConfig
    seeding : Seeding, optional
        Initial distribution; uniform within ``config.bounds`` when omitted.
    dim : int, optional
        Problem dimension, needed only with scalar bounds and no seeding.
    callback : callable, optional
        Called as ``callback(entry, swarm)`` after each logged iteration.

    Returns
    -------
    RunResult
        Unpacks as ``(best_position, best_value, log)``.
    """
    config.validate()
    evaluate = _evaluator(objective, vectorized, config.threads)
    t0 = time.perf_counter()
    swarm = init_swarm(config, seeding, dim)
    values = evaluate(swarm.position)
    evaluations = values.size
    swarm.pbest_value = values.copy()
    g = swarm.gbest_index()
    gbest_x, gbest_f = swarm.pbest_position[g].copy(), float(swarm.pbest_value[g])

    log = ConvergenceLog()
    omega = config.initial_multiplier
    log.append(LogEntry(0, gbest_f, omega, evaluations, time.perf_counter() - t0))
    if callback:
        callback(log[-1], swarm)

    for it in range(1, config.max_iters + 1):
        redraws = stalled = 0
        for i in range(swarm.n_pop):
            x_new, v_new, k = move_particle(
                swarm.position[i],
                swarm.velocity[i],
                swarm.pbest_position[i],
                gbest_x,
                swarm.lower,
                swarm.upper,
                config,
                omega,
                swarm.rngs[i],
            )
            swarm.position[i] = x_new
            swarm.velocity[i] = v_new
            redraws += k
            stalled += k > config.max_retries
        values = evaluate(swarm.position)
        evaluations += values.size
        improved = values < swarm.pbest_value
        swarm.pbest_position[improved] = swarm.position[improved]
        swarm.pbest_value[improved] = values[improved]
        g = swarm.gbest_index()
        if swarm.pbest_value[g] < gbest_f:
            gbest_x, gbest_f = swarm.pbest_position[g].copy(), float(swarm.pbest_value[g])
        omega = damp_inertia(omega, config.xi)
        log.append(
            LogEntry(it, gbest_f, omega, evaluations, time.perf_counter() - t0, redraws, stalled)
        )
        if callback:
            callback(log[-1], swarm)

    return RunResult(gbest_x, gbest_f, log, swarm)
