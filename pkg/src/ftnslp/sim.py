"""Experiment orchestration: scenario configs, designs, metrics and sweeps.

A scenario config captures every scalar of one design instance and maps 1:1
onto the JSON config schema (unknown keys are rejected). Sweeps fan a base
config across one axis, run independent seeded trials per point, and emit
CSV rows plus mean/std aggregates and a sensing-only baseline per point.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .channel import (
    Dimensions,
    SensingPrior,
    assemble_effective,
    build_window,
    sample_comm_channel,
    whiten,
)
from .ci import (
    CISystem,
    SymbolBlock,
    build_ci_system,
    build_energy_form,
    ci_margins,
    random_qpsk,
    stack_complex,
)
from .pulse import PulseSpec, build_pulse_tables
from .sensing import build_lift
from .solver import DesignProblem, Solution, minorization_solve, sca_solve
from .util import db_to_linear

__all__ = [
    "ScenarioConfig",
    "MetricsRecord",
    "ConfigError",
    "build_design",
    "run_design",
    "throughput",
    "export_constellation",
    "run_sweep",
    "aggregate_rows",
    "write_sweep_csv",
    "SWEEP_COLUMNS",
    "CONSTELLATION_COLUMNS",
]

SWEEP_COLUMNS = [
    "axis",
    "trial",
    "mmse",
    "throughput",
    "energy",
    "min_margin",
    "iterations",
    "wall_time_s",
    "status",
]
CONSTELLATION_COLUMNS = ["user", "slot", "re", "im", "margin"]

SWEEP_AXES = ("E", "Gamma", "tau", "L", "K")


class ConfigError(ValueError):
    """Raised for unparseable or invalid scenario configs."""


def _from_dict(cls, data: dict, path: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config keys at {path or 'top level'}: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class DimsConfig:
    n_tx: int = 3
    n_rx: int = 8
    n_users: int = 2
    block_len: int = 15
    taps: int = 3
    half_width: int = 3


@dataclass(frozen=True)
class PulseConfig:
    rolloff: float = 0.3
    nominal_period: float = 1e-3
    compression: float = 0.9


@dataclass(frozen=True)
class PowerConfig:
    comm_noise_dbm: float = 0.0
    radar_noise_dbm: float = 0.0
    trm_dbm: float = 20.0


@dataclass(frozen=True)
class SeedConfig:
    channel: int = 1
    symbols: int = 2
    init: int = 3
    noise: int = 4


@dataclass(frozen=True)
class SolverConfig:
    eps: float | None = None  # outer stop; default 1e-6 * ||S0||_F^2
    i_max: int = 100
    eps_rho_rel: float = 1e-6
    ipm_tol: float = 1e-7
    mmse_stop_dbm: float | None = None


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "E"
    values: tuple = ()
    trials: int | None = None

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    dims: DimsConfig = field(default_factory=DimsConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    powers: PowerConfig = field(default_factory=PowerConfig)
    qos_db: float = 15.0
    energy_dbm: float = 30.0
    energy_mode: str = "total"
    window_mode: str = "truncate"
    algorithm: str = "minorization"
    subsolver: str = "bps"
    seeds: SeedConfig = field(default_factory=SeedConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    trials: int = 20
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if self.energy_mode not in ("total", "per-antenna"):
            raise ConfigError(f"energy_mode must be total|per-antenna, got {self.energy_mode!r}")
        if self.window_mode not in ("truncate", "fold"):
            raise ConfigError(f"window_mode must be truncate|fold, got {self.window_mode!r}")
        if self.algorithm not in ("minorization", "sca"):
            raise ConfigError(f"algorithm must be minorization|sca, got {self.algorithm!r}")
        if self.subsolver not in ("bps", "ipm"):
            raise ConfigError(f"subsolver must be bps|ipm, got {self.subsolver!r}")
        if self.energy_mode == "per-antenna" and self.subsolver == "bps":
            raise ConfigError("per-antenna energy budgets require subsolver=ipm")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        sections = {
            "dims": DimsConfig,
            "pulse": PulseConfig,
            "powers": PowerConfig,
            "seeds": SeedConfig,
            "solver": SolverConfig,
            "sweep": SweepSpec,
        }
        for key, sub in sections.items():
            val = data.get(key)
            if val is None:
                continue
            if isinstance(val, dict):
                data[key] = _from_dict(sub, val, key)
            elif not isinstance(val, sub):
                raise ConfigError(f"config section {key!r} must be an object")
        try:
            cfg = _from_dict(cls, data, "")
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if out.get("sweep") and isinstance(out["sweep"].get("values"), tuple):
            out["sweep"]["values"] = list(out["sweep"]["values"])
        return out

    def replace(self, **kwargs) -> "ScenarioConfig":
        return dataclasses.replace(self, **kwargs)

    def qos_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.qos_db, dtype=float), (self.dims.n_users,)).copy()


@dataclass
class MetricsRecord:
    mmse: float
    objective_trace: list
    throughput_bits_per_t0: float
    energy_used: float
    min_ci_margin: float
    wall_time_s: float
    iterations: int
    status: str
    constellation: list | None = None


# ---------------------------------------------------------------------------
# Design assembly and execution
# ---------------------------------------------------------------------------


def build_design(scn: ScenarioConfig, ci_free: bool = False):
    """All matrices for one instance; returns (problem, block, comm channel)."""
    d = scn.dims
    dims = Dimensions(
        n_tx=d.n_tx,
        n_rx=d.n_rx,
        n_users=d.n_users,
        block_len=d.block_len,
        taps=d.taps,
        half_width=d.half_width,
    )
    spec = PulseSpec(
        rolloff=scn.pulse.rolloff,
        nominal_period=scn.pulse.nominal_period,
        compression=scn.pulse.compression,
        half_width=d.half_width,
    )
    tables = build_pulse_tables(spec, dims.block_len, dims.l1)
    sigma_c2 = float(db_to_linear(scn.powers.comm_noise_dbm))
    comm = sample_comm_channel(np.random.default_rng(scn.seeds.channel), dims, sigma_c2)
    window = build_window(dims, scn.window_mode)
    whitener, _ = whiten(window, tables.gram_ext)
    eff = assemble_effective(comm, tables, window, whitener, dims)
    block = random_qpsk(np.random.default_rng(scn.seeds.symbols), dims.n_users, dims.block_len)
    if ci_free:
        n_real = 2 * dims.n_tx * dims.block_len
        cis = CISystem(
            psi=np.zeros((0, n_real)),
            gamma=np.zeros(0),
            sigma_vec=np.sqrt(sigma_c2 * np.tile(eff.noise_eigs, dims.n_users)),
            qos=scn.qos_vector(),
        )
    else:
        cis = build_ci_system(eff, block, scn.qos_vector(), sigma_c2)
    energy = build_energy_form(tables, dims, scn.energy_dbm, scn.energy_mode)
    prior = SensingPrior(
        trm_power=float(db_to_linear(scn.powers.trm_dbm)),
        noise_power=float(db_to_linear(scn.powers.radar_noise_dbm)),
    )
    problem = DesignProblem(
        dims=dims,
        pulse=tables,
        eff=eff,
        block=block,
        ci_sys=cis,
        energy=energy,
        lift_tables=build_lift(tables, dims),
        sigma_r2=prior.noise_power,
        sigma_h2=prior.trm_power,
        n_rx=dims.n_rx,
    )
    return problem, block, comm


def _degenerate_rows(cis: CISystem) -> bool:
    """A numerically-zero constraint row with a negative bound is unsatisfiable."""
    if cis.psi.shape[0] == 0:
        return False
    norms = np.linalg.norm(cis.psi, axis=1)
    return bool(np.any((norms < 1e-13 * max(1.0, norms.max())) & (cis.gamma < 0)))


def run_design(scn: ScenarioConfig, ci_free: bool = False, with_constellation: bool = True):
    """Sample data and channel, run the configured algorithm, compute metrics."""
    t0 = time.perf_counter()
    problem, block, _ = build_design(scn, ci_free=ci_free)
    if _degenerate_rows(problem.ci_sys):
        sol = Solution(
            s_block=np.zeros((problem.dims.n_tx, problem.dims.block_len), dtype=complex),
            objective_trace=[],
            mmse_trace=[],
            iter_times=[],
            energy=np.nan,
            min_margin=np.nan,
            iterations=0,
            wall_time=time.perf_counter() - t0,
            status="infeasible",
            diagnostics={"reason": "zero effective-channel row with negative QoS bound"},
        )
        return sol, _metrics(scn, problem, block, sol, with_constellation=False)

    solve = minorization_solve if scn.algorithm == "minorization" else sca_solve
    mmse_stop = (
        float(db_to_linear(scn.solver.mmse_stop_dbm))
        if scn.solver.mmse_stop_dbm is not None
        else None
    )
    sol = solve(
        problem,
        np.random.default_rng(scn.seeds.init),
        eps=scn.solver.eps,
        i_max=scn.solver.i_max,
        subsolver=scn.subsolver,
        ipm_tol=scn.solver.ipm_tol,
        mmse_stop=mmse_stop,
        eps_rho=scn.solver.eps_rho_rel,
    )
    return sol, _metrics(scn, problem, block, sol, with_constellation)


def _metrics(scn, problem, block, sol: Solution, with_constellation: bool) -> MetricsRecord:
    if sol.status == "infeasible":
        return MetricsRecord(
            mmse=np.nan,
            objective_trace=[],
            throughput_bits_per_t0=np.nan,
            energy_used=np.nan,
            min_ci_margin=np.nan,
            wall_time_s=sol.wall_time,
            iterations=0,
            status=sol.status,
            constellation=None,
        )
    sigma_c2 = float(db_to_linear(scn.powers.comm_noise_dbm))
    tp = np.nan
    constellation = None
    if problem.ci_sys.gamma.size:
        y = problem.eff.effective @ sol.s_block.reshape(-1)
        noise_vars = sigma_c2 * np.tile(problem.eff.noise_eigs, problem.dims.n_users)
        tp = throughput(y, block.data.reshape(-1), noise_vars, scn.pulse.compression)
        if with_constellation:
            constellation = export_constellation(sol, problem.eff, problem.ci_sys, block)
    return MetricsRecord(
        mmse=sol.mmse_trace[-1] if sol.mmse_trace else np.nan,
        objective_trace=list(sol.objective_trace),
        throughput_bits_per_t0=tp,
        energy_used=sol.energy,
        min_ci_margin=sol.min_margin,
        wall_time_s=sol.wall_time,
        iterations=sol.iterations,
        status=sol.status,
        constellation=constellation,
    )


def qfunc(x):
    """Gaussian tail probability via the complementary error function."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def throughput(y_noiseless: np.ndarray, d: np.ndarray, noise_vars: np.ndarray, tau: float) -> float:
    """Expected correctly-received bits per symbol slot, normalized by the compression.

    Aligns each received symbol with its data symbol, measures the two
    distances to the QPSK detection thresholds, and scores 2 bits through
    the per-threshold flip probabilities.
    """
    u = np.conj(d) * y_noiseless
    h1 = (u.real + u.imag) / np.sqrt(2.0)
    h2 = (u.real - u.imag) / np.sqrt(2.0)
    sigma_dim = np.sqrt(np.asarray(noise_vars, dtype=float) / 2.0)
    p1 = qfunc(h1 / sigma_dim)
    p2 = qfunc(h2 / sigma_dim)
    bits = 2.0 * (1.0 - p1) * (1.0 - p2) + (1.0 - p1) * p2 + p1 * (1.0 - p2)
    return float(bits.mean() / tau)


def export_constellation(sol: Solution, eff, cis: CISystem, block: SymbolBlock) -> list:
    """Noise-free received symbols with per-symbol margins: (user, slot, re, im, margin)."""
    y = eff.effective @ sol.s_block.reshape(-1)
    margins = ci_margins(stack_complex(sol.s_block.reshape(-1)), cis)
    kl = y.size
    L = block.data.shape[1]
    out = []
    for i in range(kl):
        out.append(
            (
                i // L,
                i % L,
                float(y[i].real),
                float(y[i].imag),
                float(min(margins[i], margins[kl + i])),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _apply_axis(scn: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "E":
        return scn.replace(energy_dbm=float(value))
    if axis == "Gamma":
        return scn.replace(qos_db=float(value))
    if axis == "tau":
        return scn.replace(pulse=dataclasses.replace(scn.pulse, compression=float(value)))
    if axis == "L":
        return scn.replace(dims=dataclasses.replace(scn.dims, block_len=int(value)))
    if axis == "K":
        return scn.replace(dims=dataclasses.replace(scn.dims, n_users=int(value)))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def _trial_seeds(base: SeedConfig, value, trial: int) -> SeedConfig:
    vbits = int(np.float64(value).view(np.uint64))
    def derive(stream_seed):
        return int(np.random.SeedSequence([stream_seed, vbits, trial]).generate_state(1)[0])
    return SeedConfig(
        channel=derive(base.channel),
        symbols=derive(base.symbols),
        init=derive(base.init),
        noise=derive(base.noise),
    )


def _sweep_task(args):
    cfg_dict, axis, value, trial, ci_free = args
    scn = ScenarioConfig.from_dict(cfg_dict)
    scn = _apply_axis(scn, axis, value)
    if ci_free:
        # sensing-only lower-bound row: the problem is nonconvex and solved
        # by a local method, so take the best of a few starts
        best = None
        for init in range(3):
            run = scn.replace(seeds=_trial_seeds(scn.seeds, value, init))
            sol, metrics = run_design(run, ci_free=True, with_constellation=False)
            if metrics.status != "optimal" and metrics.status != "iteration-limit":
                continue
            if best is None or metrics.mmse < best.mmse:
                best = metrics
        metrics = best if best is not None else run_design(scn, ci_free=True, with_constellation=False)[1]
    else:
        scn = scn.replace(seeds=_trial_seeds(scn.seeds, value, trial))
        _, metrics = run_design(scn, ci_free=False, with_constellation=False)
    return {
        "axis": value,
        "trial": "baseline" if ci_free else trial,
        "mmse": metrics.mmse,
        "throughput": metrics.throughput_bits_per_t0,
        "energy": metrics.energy_used,
        "min_margin": metrics.min_ci_margin,
        "iterations": metrics.iterations,
        "wall_time_s": metrics.wall_time_s,
        "status": metrics.status,
    }


def aggregate_rows(rows: list, value) -> list:
    """Mean and sample-stddev rows over the feasible trials of one sweep point."""
    good = [r for r in rows if r["status"] != "infeasible" and r["trial"] != "baseline"]
    out = []
    for kind, reducer in (("mean", np.mean), ("std", lambda v: np.std(v, ddof=1) if len(v) > 1 else 0.0)):
        rec = {"axis": value, "trial": kind, "status": "aggregate"}
        for col in ("mmse", "throughput", "energy", "min_margin", "iterations", "wall_time_s"):
            vals = [r[col] for r in good if np.isfinite(r[col])]
            rec[col] = float(reducer(vals)) if vals else np.nan
        out.append(rec)
    return out


def run_sweep(
    base: ScenarioConfig,
    axis: str,
    values,
    trials: int | None = None,
    threads: int = 1,
    baseline: bool = True,
) -> list:
    """Run `trials` independent seeds per axis value; emit trial + aggregate + baseline rows."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = sorted(values)
    trials = trials if trials is not None else base.trials
    cfg_dict = base.to_dict()
    cfg_dict.pop("sweep", None)
    tasks = []
    for value in values:
        for trial in range(trials):
            tasks.append((cfg_dict, axis, value, trial, False))
        if baseline:
            tasks.append((cfg_dict, axis, value, 0, True))

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows = []
    for value in values:
        point = [r for r, t in zip(results, tasks) if t[2] == value and not t[4]]
        point_base = [r for r, t in zip(results, tasks) if t[2] == value and t[4]]
        rows.extend(point)
        rows.extend(aggregate_rows(point, value))
        rows.extend(point_base)
    return rows


def write_sweep_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in SWEEP_COLUMNS})


def write_constellation_csv(records: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONSTELLATION_COLUMNS)
        writer.writerows(records)
