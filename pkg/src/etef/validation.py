"""
Nonlinear shear-building model with degrading, pinching Bouc-Wen stories.

Each story ``i`` carries the restoring force

    f_i = k_i * (alpha * d_i + (1 - alpha) * z_i)

where ``d_i = u_i - u_{i-1}`` is the story drift and ``z_i`` the hysteretic
displacement governed by the Baber-Noori type law with the pinching function
used by Ma et al.:

    dz/dt = h(z) / eta * [A d' - nu * (beta |d'| |z|^(n-1) z + gamma d' |z|^n)]

    nu  = 1 + delta_v   * e          eta = 1 + delta_eta * e
    z_u = (A / (nu (beta + gamma)))^(1/n)
    zeta_1 = zeta_s (1 - exp(-p e))
    zeta_2 = (psi + delta_psi e) (lambda + zeta_1)
    h(z) = 1 - zeta_1 exp(-(z sgn(d') - q z_u)^2 / zeta_2^2)

with ``e = (1 - alpha) w_i^2 \\int z dd`` the normalized dissipated energy,
``w_i^2 = k_i / m_i``.  Parameter names map one-to-one: ``p, psi, lam (lambda),
q, n, alpha, beta, gamma, A, zeta_s, delta_psi, delta_v (nu), delta_eta``.

Damping is Rayleigh, ``C = a M + b K`` with the elastic stiffness matrix.
Units: SI (kg, N/m, m, s); ground acceleration is given in g.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from .signal import AccelTimeSeries
from .spectra import peak_spectrum_batch

__all__ = [
    "G",
    "BoucWenParams",
    "MdofModel",
    "Response",
    "EdpReport",
    "SimulationError",
    "bouc_wen_rate",
    "mdof_simulate",
    "natural_periods",
    "scale_to_intensity",
    "extract_edps",
    "default_three_story",
    "write_edp_csv",
]

G = 9.81


class SimulationError(RuntimeError):
    def __init__(self, message: str, time: float | None = None):
        super().__init__(message if time is None else f"{message} (t = {time:.6g} s)")
        self.time = time


@dataclass(frozen=True)
class BoucWenParams:
    p: float = 2.0
    psi: float = 0.05
    lam: float = 0.5
    q: float = 0.25
    n: float = 1.0
    alpha: float = 0.04
    beta: float = 280.0
    gamma: float = 160.0
    A: float = 1.0
    zeta_s: float = 0.99
    delta_psi: float = 0.005
    delta_v: float = 0.002
    delta_eta: float = 0.001

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.beta + self.gamma > 0:
            raise ValueError("beta + gamma must be positive")

    @property
    def yield_z(self) -> float:
        """Ultimate hysteretic displacement before degradation."""
        return (self.A / (self.beta + self.gamma)) ** (1.0 / self.n)


def _rate(z, e, dv, P):
    nu = 1.0 + P.delta_v * e
    eta = 1.0 + P.delta_eta * e
    az = np.abs(z)
    core = P.A * dv - nu * (P.beta * np.abs(dv) * az ** (P.n - 1.0) * z + P.gamma * dv * az**P.n)
    zeta1 = P.zeta_s * (1.0 - np.exp(-P.p * e))
    zeta2 = (P.psi + P.delta_psi * e) * (P.lam + zeta1)
    z_u = (P.A / (nu * (P.beta + P.gamma))) ** (1.0 / P.n)
    h = 1.0 - zeta1 * np.exp(-((z * np.sign(dv) - P.q * z_u) ** 2) / zeta2**2)
    return h * core / eta


def bouc_wen_rate(z, energy, drift_velocity, params: BoucWenParams):
    """Rate of the hysteretic displacement.

    Parameters
    ----------
    z : float or ndarray
        Hysteretic displacement.
    energy : float or ndarray
        Normalized dissipated energy ``e`` driving degradation and pinching.
    drift_velocity : float or ndarray
    params : BoucWenParams

    Returns
    -------
    float or ndarray
        ``dz/dt``; exactly zero when ``drift_velocity`` is zero.
    """
    z = np.asarray(z, dtype=float)
    e = np.asarray(energy, dtype=float)
    dv = np.asarray(drift_velocity, dtype=float)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(e)) and np.all(np.isfinite(dv))):
        raise ValueError("non-finite Bouc-Wen state")
    rate = _rate(z, e, dv, params)
    return rate if rate.ndim else float(rate)


@dataclass
class MdofModel:
    """Shear building, story 1 at the base.

    ``bouc_wen`` is one parameter block shared by all stories or a sequence
    with one block per story.
    """

    masses: np.ndarray
    stiffnesses: np.ndarray
    heights: np.ndarray | None = None
    bouc_wen: BoucWenParams | Sequence[BoucWenParams] = field(default_factory=BoucWenParams)
    rayleigh_a: float = 0.4602
    rayleigh_b: float = 0.0041

    def __post_init__(self):
        self.masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        self.stiffnesses = np.atleast_1d(np.asarray(self.stiffnesses, dtype=float))
        n = self.masses.size
        if n < 1 or self.stiffnesses.size != n:
            raise ValueError("masses and stiffnesses must have the same nonzero length")
        if np.any(self.masses <= 0) or np.any(self.stiffnesses <= 0):
            raise ValueError("masses and stiffnesses must be positive")
        if self.heights is None:
            self.heights = np.full(n, 3.0)
        self.heights = np.atleast_1d(np.asarray(self.heights, dtype=float))
        if self.heights.size != n or np.any(self.heights <= 0):
            raise ValueError("need one positive height per story")
        if isinstance(self.bouc_wen, BoucWenParams):
            self.bouc_wen = [self.bouc_wen] * n
        self.bouc_wen = list(self.bouc_wen)
        if len(self.bouc_wen) != n:
            raise ValueError("need one Bouc-Wen block per story")
        if self.rayleigh_a < 0 or self.rayleigh_b < 0:
            raise ValueError("Rayleigh coefficients must be nonnegative")

    @property
    def n_stories(self) -> int:
        return self.masses.size

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.masses)

    @property
    def drift_matrix(self) -> np.ndarray:
        n = self.n_stories
        return np.eye(n) - np.eye(n, k=-1)

    @property
    def K(self) -> np.ndarray:
        R = self.drift_matrix
        return R.T @ np.diag(self.stiffnesses) @ R

    @property
    def C(self) -> np.ndarray:
        return self.rayleigh_a * self.M + self.rayleigh_b * self.K

    def _bw_arrays(self):
        names = ["p", "psi", "lam", "q", "n", "alpha", "beta", "gamma", "A", "zeta_s",
                 "delta_psi", "delta_v", "delta_eta"]
        return {k: np.array([getattr(b, k) for b in self.bouc_wen]) for k in names}


def default_three_story() -> MdofModel:
    """Three-story example whose periods are about 2.57, 1.23 and 0.88 s."""
    return MdofModel(
        masses=[1.0e5, 4.965e4, 3.124e4],
        stiffnesses=[1.918e6, 9.592e5, 6.703e5],
        heights=[3.0, 3.0, 3.0],
    )


def natural_periods(model: MdofModel):
    """Undamped periods (descending) and effective modal masses in % of the total.

    Returns
    -------
    periods : ndarray
    participation : ndarray
        Effective mass of each mode as a percentage; sums to 100.
    modes : ndarray
        Mass-normalized mode shapes as columns, same order as ``periods``.
    """
    M, K = model.M, model.K
    if np.linalg.cond(M) > 1e14:
        raise ValueError("mass matrix is singular")
    w2, phi = eigh(K, M)
    order = np.argsort(w2)
    w2, phi = w2[order], phi[:, order]
    periods = 2 * np.pi / np.sqrt(w2)
    ones = np.ones(model.n_stories)
    L = phi.T @ M @ ones
    m_eff = L**2 / np.einsum("in,ij,jn->n", phi, M, phi)
    return periods, 100.0 * m_eff / model.masses.sum(), phi


@dataclass
class Response:
    """Floor histories relative to the ground, sampled at the record steps."""

    time: np.ndarray
    u: np.ndarray  # (n_t, n_stories)
    v: np.ndarray
    z: np.ndarray
    input_energy: np.ndarray
    kinetic_energy: np.ndarray
    damping_energy: np.ndarray
    strain_energy: np.ndarray
    hysteretic_energy: np.ndarray
    input_id: str = ""

    @property
    def drift(self) -> np.ndarray:
        return np.diff(np.concatenate([np.zeros((self.u.shape[0], 1)), self.u], axis=1), axis=1)

    def energy_balance_error(self) -> float:
        """Peak imbalance relative to the peak input energy."""
        out = self.kinetic_energy + self.damping_energy + self.strain_energy + self.hysteretic_energy
        peak = np.max(np.abs(self.input_energy))
        if peak == 0:
            return 0.0
        return float(np.max(np.abs(self.input_energy - out)) / peak)


def mdof_simulate(
    model: MdofModel,
    ground: AccelTimeSeries,
    substeps: int = 2,
    rtol: float = 1e-8,
    input_id: str = "",
) -> Response:
    """Integrate the building under ``ground`` (in g) from rest.

    The augmented state ``[u, v, z, W_z, E_in, E_damp]`` is advanced by an
    error-controlled Dormand-Prince 5(4) scheme, one record interval at a time
    (the ground acceleration is linear inside each interval), with the step
    capped at ``dt / substeps``.
    """
    n = model.n_stories
    M_diag = model.masses
    C = model.C
    R = model.drift_matrix
    k = model.stiffnesses
    bw = model._bw_arrays()
    alpha = bw["alpha"]
    w2 = k / M_diag
    a_g = ground.samples * G
    dt = ground.dt
    nt = ground.length

    # per-story parameter arrays, same attribute names as BoucWenParams
    P = SimpleNamespace(**bw)

    def rhs_factory(t0, ag0, ag1):
        slope = (ag1 - ag0) / dt

        def rhs(t, y):
            u, v, z, Wz = y[:n], y[n : 2 * n], y[2 * n : 3 * n], y[3 * n : 4 * n]
            ag = ag0 + slope * (t - t0)
            d = R @ u
            dv = R @ v
            f_story = k * (alpha * d + (1 - alpha) * z)
            damping = C @ v
            acc = (-M_diag * ag - damping - R.T @ f_story) / M_diag
            e = (1 - alpha) * w2 * Wz
            zdot = _rate(z, e, dv, P)
            out = np.empty_like(y)
            out[:n] = v
            out[n : 2 * n] = acc
            out[2 * n : 3 * n] = zdot
            out[3 * n : 4 * n] = z * dv
            out[4 * n] = -np.dot(v, M_diag) * ag
            out[4 * n + 1] = v @ damping
            return out

        return rhs

    size = 4 * n + 2
    y = np.zeros(size)
    hist = np.zeros((nt, size))
    disp_scale = max(float(np.max(np.abs(a_g))) / np.min(w2), 1e-12)
    atol = np.full(size, 1e-8 * disp_scale)
    atol[n : 2 * n] = 1e-8 * disp_scale * np.sqrt(np.max(w2))
    atol[2 * n : 3 * n] = 1e-8 * min(disp_scale, float(np.min([b.yield_z for b in model.bouc_wen])))
    atol[3 * n : 4 * n] = 1e-10 * disp_scale**2
    atol[4 * n :] = 1e-10 * M_diag.sum() * np.max(w2) * disp_scale**2
    max_step = dt / substeps
    for j in range(nt - 1):
        if a_g[j] == 0 and a_g[j + 1] == 0 and not np.any(y):
            hist[j + 1] = y
            continue
        t0 = j * dt
        sol = solve_ivp(
            rhs_factory(t0, a_g[j], a_g[j + 1]),
            (t0, t0 + dt),
            y,
            method="RK45",
            rtol=rtol,
            atol=atol,
            max_step=max_step,
            first_step=max_step,
        )
        if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
            raise SimulationError(f"integration failed: {sol.message}", float(sol.t[-1]))
        y = sol.y[:, -1]
        hist[j + 1] = y

    u, v, z, Wz = (hist[:, i * n : (i + 1) * n] for i in range(4))
    d = u @ R.T
    kinetic = 0.5 * np.einsum("ti,i,ti->t", v, M_diag, v)
    elastic = 0.5 * np.einsum("ti,i,ti->t", d, alpha * k, d)
    stored_z = 0.5 * np.einsum("ti,i,ti->t", z, (1 - alpha) * k, z)
    work_z = Wz @ ((1 - alpha) * k)
    return Response(
        time=ground.time,
        u=u,
        v=v,
        z=z,
        input_energy=hist[:, 4 * n],
        kinetic_energy=kinetic,
        damping_energy=hist[:, 4 * n + 1],
        strain_energy=elastic + stored_z,
        hysteretic_energy=work_z - stored_z,
        input_id=input_id,
    )


def scale_to_intensity(
    series: AccelTimeSeries, T1: float, target_sa: float = 0.1, damping_ratio: float = 0.05
):
    """Scale ``series`` so its spectral acceleration at ``T1`` equals ``target_sa`` (g).

    Returns ``(scaled_series, factor)``.
    """
    sa = float(peak_spectrum_batch(series.samples, [T1], series.dt, damping_ratio)[0, 0])
    if sa == 0:
        raise ValueError(f"spectral ordinate at T1 = {T1} s is zero; cannot scale")
    factor = target_sa / sa
    return series.scaled(factor), factor


@dataclass
class EdpReport:
    drift_ratio_pct: np.ndarray
    roof_displacement: float
    input_id: str = ""

    def __post_init__(self):
        self.drift_ratio_pct = np.asarray(self.drift_ratio_pct, dtype=float)
        if np.any(self.drift_ratio_pct < 0) or self.roof_displacement < 0:
            raise ValueError("EDP peaks must be nonnegative")

    def as_row(self) -> dict:
        row = {"input": self.input_id}
        for i, d in enumerate(self.drift_ratio_pct, start=1):
            row[f"drift_story_{i}_pct"] = float(d)
        row["roof_displacement_m"] = float(self.roof_displacement)
        return row


def extract_edps(histories, story_heights, input_id: str | None = None) -> EdpReport:
    """Peak inter-story drift ratios (%) and peak roof displacement.

    ``histories`` is a :class:`Response` or an ``(n_t, n_stories)`` array of
    floor displacements relative to the ground.
    """
    u = histories.u if isinstance(histories, Response) else np.atleast_2d(np.asarray(histories, float))
    h = np.asarray(story_heights, dtype=float)
    if u.shape[1] != h.size:
        raise ValueError("one height per story is required")
    drift = np.diff(np.concatenate([np.zeros((u.shape[0], 1)), u], axis=1), axis=1)
    ratio = 100.0 * np.max(np.abs(drift), axis=0) / h
    if input_id is None:
        input_id = getattr(histories, "input_id", "")
    return EdpReport(ratio, float(np.max(np.abs(u[:, -1]))), input_id)


def write_edp_csv(path, rows: Sequence[dict]) -> None:
    if not rows:
        raise ValueError("no EDP rows to write")
    fields = list(rows[0].keys())
    for r in rows[1:]:
        for key in r:
            if key not in fields:
                fields.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
