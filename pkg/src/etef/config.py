"""
Run and model configuration files.

Both are INI files read with :mod:`configparser`.  Every key is checked
against the schema below; unknown sections or keys raise
:class:`ConfigError`.  A bundled base file (``--scale desk`` or
``--scale paper``) can be layered under a user file.

Run file sections and keys (defaults in brackets)::

    [signal]   length [2048], dt [0.01], wavelet [db4], levels [full depth],
               active_bands [all but the two finest detail bands]
    [target]   shape = design | flat, S_DS, S_D1, T_L [8.0], flat_value,
               target_time [10.0], profile [linear], damping_ratio [0.05]
    [grid]     n_periods [120], period_min [0.02], period_max [5.0],
               time_stride [1]
    [pso]      n_pop, omega, xi, c1, c2, mode, max_iters, max_retries,
               bound_k, bound_lower, bound_upper, random_granularity
    [seeding]  kind = synthetic | records | covariance | uniform,
               records_dir, covariance_file, n_records [100]
    [run]      seed [0], output_dir [etef_run], threads [1]

Model file sections::

    [model]    masses, stiffnesses, heights (comma lists, SI units),
               rayleigh_a [0.4602], rayleigh_b [0.0041]
    [bouc_wen] any BoucWenParams field
    [study]    target_sa [0.1], damping_ratio [0.05], period [first mode]
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .pso import Seeding, SwarmConfig
from .signal import BandLayout, read_accelerogram
from .spectra import (
    DesignSpectrum,
    DesignSpectrumParams,
    FlatSpectrum,
    PeriodGrid,
    TargetSpec,
    TimeGrid,
)
from .validation import BoucWenParams, MdofModel

__all__ = ["ConfigError", "RunConfig", "ModelConfig", "load_run_config", "load_model_config", "bundled"]


class ConfigError(ValueError):
    pass


_RUN_SCHEMA = {
    "signal": {"length": int, "dt": float, "wavelet": str, "levels": int, "active_bands": "ints"},
    "target": {
        "shape": str,
        "S_DS": float,
        "S_D1": float,
        "T_L": float,
        "flat_value": float,
        "target_time": float,
        "profile": str,
        "damping_ratio": float,
    },
    "grid": {"n_periods": int, "period_min": float, "period_max": float, "time_stride": int},
    "pso": {
        "n_pop": int,
        "omega": float,
        "xi": float,
        "c1": float,
        "c2": float,
        "mode": str,
        "max_iters": int,
        "max_retries": int,
        "bound_k": float,
        "bound_lower": float,
        "bound_upper": float,
        "random_granularity": str,
    },
    "seeding": {"kind": str, "records_dir": str, "covariance_file": str, "n_records": int},
    "run": {"seed": int, "output_dir": str, "threads": int},
}

_MODEL_SCHEMA = {
    "model": {
        "masses": "floats",
        "stiffnesses": "floats",
        "heights": "floats",
        "rayleigh_a": float,
        "rayleigh_b": float,
    },
    "bouc_wen": {f.name: float for f in fields(BoucWenParams)},
    "study": {"target_sa": float, "damping_ratio": float, "period": float},
}


def bundled(name: str) -> Path:
    """Path of a file shipped in ``etef/data``."""
    return Path(str(resources.files("etef") / "data" / name))


def _parse(parser: configparser.ConfigParser, schema: dict, source: str) -> dict:
    out: dict = {}
    for section in parser.sections():
        if section not in schema:
            raise ConfigError(f"{source}: unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in schema[section]:
                raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
            kind = schema[section][key]
            try:
                if kind == "ints":
                    val = tuple(int(x) for x in raw.split(",") if x.strip())
                elif kind == "floats":
                    val = [float(x) for x in raw.split(",") if x.strip()]
                else:
                    val = kind(raw.strip())
            except ValueError:
                raise ConfigError(f"{source}: [{section}] {key} = {raw!r} is not a valid {getattr(kind, '__name__', kind)}") from None
            out[section][key] = val
    return out


def _read(paths, schema) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (S_DS)
    for p in paths:
        p = Path(p)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"{p}: {exc}") from None
    return _parse(parser, schema, ", ".join(str(p) for p in paths))


@dataclass
class RunConfig:
    layout: BandLayout
    dt: float
    wavelet: str
    target: TargetSpec
    target_section: dict
    periods: PeriodGrid
    times: TimeGrid
    damping_ratio: float
    swarm: SwarmConfig
    seeding_kind: str = "synthetic"
    records_dir: Path | None = None
    covariance_file: Path | None = None
    n_records: int = 100
    seed: int = 0
    output_dir: Path = Path("etef_run")
    threads: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    def problem(self):
        from .synthesis import EtefProblem

        return EtefProblem.build(
            self.target, self.layout, self.periods, self.times, self.dt, self.wavelet, self.damping_ratio
        )

    def seeding(self, problem=None) -> Seeding | None:
        from .synthesis import record_seeding, synthetic_record_bank

        kind = self.seeding_kind
        if kind == "uniform":
            return None
        if kind == "covariance":
            path = self.covariance_file
            cov = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, delimiter=",")
            if cov.shape != (self.layout.n_vars, self.layout.n_vars):
                raise ConfigError(
                    f"[seeding] covariance_file has shape {cov.shape}, expected "
                    f"({self.layout.n_vars}, {self.layout.n_vars})"
                )
            try:
                return Seeding.from_covariance(cov)
            except ValueError as exc:
                raise ConfigError(f"[seeding] covariance_file: {exc}") from None
        if kind == "records":
            files = sorted(self.records_dir.glob("*.csv"))
            if not files:
                raise ConfigError(f"[seeding] records_dir {self.records_dir} holds no .csv records")
            records = []
            for f in files:
                try:
                    rec = read_accelerogram(f, fit=True, length=self.layout.signal_length)
                except ValueError as exc:
                    raise ConfigError(f"[seeding] {exc}") from None
                records.append(rec)
            return record_seeding(records, self.layout, self.wavelet)
        problem = problem or self.problem()
        bank = synthetic_record_bank(problem, self.n_records, seed=self.seed)
        return record_seeding(bank, self.layout, self.wavelet)

    def to_dict(self) -> dict:
        return {s: dict(v) for s, v in self.raw.items()}


def load_run_config(path=None, *, scale: str | None = None, seed: int | None = None,
                    output_dir=None, threads: int | None = None) -> RunConfig:
    """Parse, layer and validate a run configuration.  Raises :class:`ConfigError`."""
    paths = []
    if scale is not None:
        if scale not in ("desk", "paper"):
            raise ConfigError(f"--scale must be 'desk' or 'paper', got {scale!r}")
        paths.append(bundled(f"{scale}.ini"))
    if path is not None:
        paths.append(Path(path))
    if not paths:
        raise ConfigError("no configuration given (use --config and/or --scale)")
    raw = _read(paths, _RUN_SCHEMA)
    base_dir = Path(path).resolve().parent if path is not None else Path.cwd()
    sig, tgt, grd = raw.get("signal", {}), raw.get("target", {}), raw.get("grid", {})
    pso_s, sd, run_s = raw.get("pso", {}), raw.get("seeding", {}), raw.get("run", {})

    try:
        length = sig.get("length", 2048)
        dt = sig.get("dt", 0.01)
        if not dt > 0:
            raise ConfigError("[signal] dt must be positive")
        layout = BandLayout(length, sig.get("levels"), sig.get("active_bands"))
    except ValueError as exc:
        raise ConfigError(f"[signal] {exc}") from None
    wavelet = sig.get("wavelet", "db4")
    try:
        from .signal import get_wavelet

        get_wavelet(wavelet)
    except ValueError as exc:
        raise ConfigError(f"[signal] wavelet: {exc}") from None

    shape_kind = tgt.get("shape", "design")
    try:
        if shape_kind == "design":
            missing = [k for k in ("S_DS", "S_D1") if k not in tgt]
            if missing:
                raise ConfigError(f"[target] {', '.join(missing)} required for shape = design")
            shape = DesignSpectrum(DesignSpectrumParams(tgt["S_DS"], tgt["S_D1"], tgt.get("T_L", 8.0)))
        elif shape_kind == "flat":
            if "flat_value" not in tgt:
                raise ConfigError("[target] flat_value required for shape = flat")
            shape = FlatSpectrum(tgt["flat_value"])
        else:
            raise ConfigError(f"[target] shape must be 'design' or 'flat', got {shape_kind!r}")
        target = TargetSpec(shape, tgt.get("target_time", 10.0), tgt.get("profile", "linear"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[target] {exc}") from None
    zeta = tgt.get("damping_ratio", 0.05)
    if not 0 <= zeta < 1:
        raise ConfigError("[target] damping_ratio must lie in [0, 1)")

    try:
        periods = PeriodGrid.log_spaced(
            grd.get("n_periods", 120), grd.get("period_min", 0.02), grd.get("period_max", 5.0)
        )
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    stride = grd.get("time_stride", 1)
    if stride < 1:
        raise ConfigError("[grid] time_stride must be at least 1")
    times = TimeGrid(np.arange(0, length, stride) * dt, dt)

    run_seed = run_s.get("seed", 0) if seed is None else seed
    n_threads = run_s.get("threads", 1) if threads is None else threads
    if n_threads < 1:
        raise ConfigError("[run] threads must be at least 1")
    bounds = None
    if "bound_lower" in pso_s or "bound_upper" in pso_s:
        if not ("bound_lower" in pso_s and "bound_upper" in pso_s):
            raise ConfigError("[pso] bound_lower and bound_upper must be given together")
        bounds = (pso_s["bound_lower"], pso_s["bound_upper"])
    swarm_kw = {k: v for k, v in pso_s.items() if k not in ("bound_lower", "bound_upper")}
    try:
        swarm = SwarmConfig(**swarm_kw, bounds=bounds, seed=run_seed, threads=n_threads)
    except ValueError as exc:
        raise ConfigError(f"[pso] {exc}") from None

    kind = sd.get("kind", "synthetic")
    if kind not in ("synthetic", "records", "covariance", "uniform"):
        raise ConfigError(f"[seeding] kind must be synthetic, records, covariance or uniform, got {kind!r}")
    records_dir = covariance_file = None
    if kind == "records":
        if "records_dir" not in sd:
            raise ConfigError("[seeding] records_dir required for kind = records")
        records_dir = (base_dir / sd["records_dir"]).resolve()
        if not records_dir.is_dir():
            raise ConfigError(f"[seeding] records_dir {records_dir} does not exist")
    if kind == "covariance":
        if "covariance_file" not in sd:
            raise ConfigError("[seeding] covariance_file required for kind = covariance")
        covariance_file = (base_dir / sd["covariance_file"]).resolve()
        if not covariance_file.is_file():
            raise ConfigError(f"[seeding] covariance_file {covariance_file} does not exist")
    if kind == "uniform" and bounds is None:
        raise ConfigError("[seeding] kind = uniform needs [pso] bound_lower and bound_upper")
    n_records = sd.get("n_records", 100)
    if n_records < 1:
        raise ConfigError("[seeding] n_records must be at least 1")

    out = Path(output_dir) if output_dir is not None else Path(run_s.get("output_dir", "etef_run"))
    raw.setdefault("run", {})["seed"] = run_seed
    return RunConfig(
        layout=layout,
        dt=dt,
        wavelet=wavelet,
        target=target,
        target_section=dict(tgt),
        periods=periods,
        times=times,
        damping_ratio=zeta,
        swarm=swarm,
        seeding_kind=kind,
        records_dir=records_dir,
        covariance_file=covariance_file,
        n_records=n_records,
        seed=run_seed,
        output_dir=out,
        threads=n_threads,
        raw=raw,
    )


@dataclass
class ModelConfig:
    model: MdofModel
    target_sa: float = 0.1
    damping_ratio: float = 0.05
    period: float | None = None


def load_model_config(path) -> ModelConfig:
    raw = _read([path], _MODEL_SCHEMA)
    m = raw.get("model", {})
    for key in ("masses", "stiffnesses"):
        if key not in m:
            raise ConfigError(f"[model] {key} is required")
    try:
        bw = BoucWenParams(**raw.get("bouc_wen", {}))
        model = MdofModel(
            masses=m["masses"],
            stiffnesses=m["stiffnesses"],
            heights=m.get("heights"),
            bouc_wen=bw,
            rayleigh_a=m.get("rayleigh_a", 0.4602),
            rayleigh_b=m.get("rayleigh_b", 0.0041),
        )
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None
    st = raw.get("study", {})
    if st.get("target_sa", 0.1) <= 0:
        raise ConfigError("[study] target_sa must be positive")
    return ModelConfig(model, st.get("target_sa", 0.1), st.get("damping_ratio", 0.05), st.get("period"))
