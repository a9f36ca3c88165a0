"""Scenario configuration, resolution and file output.

A configuration file is flat ``key = value`` text with dotted section names
(TOML syntax)::

    system.omega0_atom = 1.4
    system.g0 = 0.02
    modulation.kind = "ajc"
    modulation.epsilon = 0.2
    modulation.xi_rule = "fock"
    initial.fock = "g,0"
    horizon.t_end_dimensionless = 3.0
    horizon.unit = "theta_g0_t"

Unknown keys are errors.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import sys as _sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

if _sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .effective import ResonanceChoice, adiabatic_shift, build_effective, resonance_frequency, resonant_regime_shifts, theta_order_K
from .errors import ConfigError, NCQEDError
from .hilbert import coherent_state, fock_state
from .model import ModulationSpec, SystemParams, derive_params, interaction_hamiltonian, lab_hamiltonian
from .observables import ObservableSeries, averaged, averaging_window, measure
from .solver import IntegratorConfig, default_dt, evolve

CSV_HEADER = ("t_raw", "t_dimensionless", "n_mean", "N", "p_e", "p_g", "sz", "P_g0", "P_e1", "P_g2", "norm_drift")
CSV_POPULATIONS = {"P_g0": ("g", 0), "P_e1": ("e", 1), "P_g2": ("g", 2)}

RESONANCE_KINDS = ("ajc", "jc", "dce", "explicit", "bichromatic")
XI_RULES = ("fock", "fock_caption", "resonant_minus", "resonant_plus", "adiabatic")
TIME_UNITS = ("omega_t", "theta_g0_t", "delta_theta_t", "epsilon_t")
FRAMES = ("lab", "interaction", "effective")
OBJECTIVES = ("peak_N", "final_N", "peak_Pe")

STEPS_PER_PERIOD = 200


@dataclass(frozen=True)
class ModulationConfig:
    kind: str = "ajc"
    order: int = 1
    epsilon: float = 0.0
    fourier_s: tuple = (0.0, 1.0)
    fourier_c: tuple = ()
    eta: float | None = None
    xi: float = 0.0
    xi_delta0: float | None = None
    xi_rule: str | None = None
    x: float = 0.0
    epsilon_minus: float | None = None
    xi_minus: float | None = None


@dataclass(frozen=True)
class InitialConfig:
    fock: str | None = "g,0"
    coherent: str | None = None


@dataclass(frozen=True)
class HorizonConfig:
    t_end: float | None = None
    t_end_dimensionless: float | None = None
    unit: str = "omega_t"


@dataclass(frozen=True)
class IntegratorSection:
    method: str = "rk4_fixed"
    dt: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    sample_stride: int = 50
    tail_guard: float | None = 1e-6
    norm_guard: float | None = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    frame: str = "lab"
    n_max: int = 15
    squeezing_limit: bool = False
    correction: bool | None = None
    atom_sign: int = -1


@dataclass(frozen=True)
class OutputConfig:
    populations: tuple = ("P_g0", "P_e1", "P_g2")
    average: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemParams = SystemParams()
    modulation: ModulationConfig = ModulationConfig()
    initial: InitialConfig = InitialConfig()
    horizon: HorizonConfig = HorizonConfig()
    integrator: IntegratorSection = IntegratorSection()
    model: ModelConfig = ModelConfig()
    outputs: OutputConfig = OutputConfig()


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig
    parameter: str
    values: tuple
    objective: str = "peak_N"

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep grid is empty")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown sweep objective {self.objective!r}")


_SECTION_TYPES = {
    "system": SystemParams,
    "modulation": ModulationConfig,
    "initial": InitialConfig,
    "horizon": HorizonConfig,
    "integrator": IntegratorSection,
    "model": ModelConfig,
    "outputs": OutputConfig,
}


def _coerce(value):
    return tuple(value) if isinstance(value, list) else value


def _build_section(name, values: dict, base=None):
    cls = _SECTION_TYPES[name]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(name + '.' + k for k in unknown)}")
    base = base if base is not None else cls()
    try:
        return replace(base, **{k: _coerce(v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def config_from_dict(data: dict) -> tuple[ScenarioConfig, dict | None]:
    """Build a ScenarioConfig from nested dicts; returns the ``sweep`` section separately."""
    data = dict(data)
    sweep = data.pop("sweep", None)
    unknown = set(data) - set(_SECTION_TYPES)
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")
    sections = {name: _build_section(name, vals) for name, vals in data.items()}
    cfg = ScenarioConfig(**sections)
    validate(cfg)
    return cfg, sweep


def parse_config_text(text: str) -> tuple[ScenarioConfig, dict | None]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return config_from_dict(data)


def load_config(path) -> tuple[ScenarioConfig, dict | None]:
    return parse_config_text(Path(path).read_text())


def load_sweep(path) -> SweepConfig:
    base, sweep = load_config(path)
    if sweep is None:
        raise ConfigError("config has no [sweep] section")
    allowed = {"parameter", "values", "objective"}
    if set(sweep) - allowed:
        raise ConfigError(f"unknown key(s) {sorted('sweep.' + k for k in set(sweep) - allowed)}")
    return SweepConfig(base, sweep["parameter"], tuple(sweep["values"]), sweep.get("objective", "peak_N"))


def with_value(cfg: ScenarioConfig, path: str, value) -> ScenarioConfig:
    """Copy of ``cfg`` with the dotted parameter ``path`` set to ``value``."""
    section, _, key = path.partition(".")
    if section not in _SECTION_TYPES or not key:
        raise ConfigError(f"bad parameter path {path!r}")
    new_section = _build_section(section, {key: value}, getattr(cfg, section))
    out = replace(cfg, **{section: new_section})
    validate(out)
    return out


def validate(cfg: ScenarioConfig):
    m = cfg.modulation
    if m.kind not in RESONANCE_KINDS:
        raise ConfigError(f"modulation.kind must be one of {RESONANCE_KINDS}")
    if m.xi_rule is not None and m.xi_rule not in XI_RULES:
        raise ConfigError(f"modulation.xi_rule must be one of {XI_RULES}")
    if m.xi_rule is not None and m.xi_delta0 is not None:
        raise ConfigError("set at most one of modulation.xi_rule and modulation.xi_delta0")
    if m.kind == "explicit" and m.eta is None:
        raise ConfigError("modulation.eta is required for kind = 'explicit'")
    if (m.kind == "bichromatic") != (cfg.system.modulated_parameter == "coupling_bichromatic"):
        raise ConfigError("modulation.kind 'bichromatic' goes with system.modulated_parameter 'coupling_bichromatic'")
    if m.xi_rule == "adiabatic" and m.kind != "bichromatic":
        raise ConfigError("the adiabatic shift schedule applies to bichromatic modulation only")
    if cfg.horizon.unit not in TIME_UNITS:
        raise ConfigError(f"horizon.unit must be one of {TIME_UNITS}")
    if (cfg.horizon.t_end is None) == (cfg.horizon.t_end_dimensionless is None):
        raise ConfigError("set exactly one of horizon.t_end and horizon.t_end_dimensionless")
    end = cfg.horizon.t_end if cfg.horizon.t_end is not None else cfg.horizon.t_end_dimensionless
    if end < 0:
        raise ConfigError("horizon must be >= 0")
    if cfg.model.frame not in FRAMES:
        raise ConfigError(f"model.frame must be one of {FRAMES}")
    if (cfg.initial.fock is None) == (cfg.initial.coherent is None):
        raise ConfigError("set exactly one of initial.fock and initial.coherent")
    for name in cfg.outputs.populations:
        if name not in CSV_POPULATIONS:
            raise ConfigError(f"unsupported population column {name!r}")


def _parse_initial(init: InitialConfig):
    spec = init.fock if init.fock is not None else init.coherent
    atom, _, rest = spec.partition(",")
    atom = atom.strip()
    if atom not in ("g", "e"):
        raise ConfigError(f"initial atom must be g or e, got {atom!r}")
    if init.fock is not None:
        return "fock", atom, int(rest), 0.0
    return "coherent", atom, 0, complex(rest.strip().replace(" ", ""))


@dataclass
class Resolved:
    """Everything needed to run one scenario."""

    config: ScenarioConfig
    sys: SystemParams
    mod: ModulationSpec
    derived: Any
    xi: Any
    eta: float
    hamiltonian: Any
    psi0: np.ndarray
    n0: int
    t_end: float
    time_scale: float
    integrator: IntegratorConfig
    metadata: dict = field(default_factory=dict)


def _shift(cfg: ScenarioConfig, d_pre, n0: int):
    m = cfg.modulation
    if m.xi_delta0 is not None:
        return m.xi_delta0 * d_pre.delta0
    rule = m.xi_rule
    if rule is None:
        return m.xi
    if rule == "fock":
        return -2 * d_pre.delta0 * (1 + n0 + m.x)
    if rule == "fock_caption":
        return -d_pre.delta0 * (1 + n0 + m.x)
    if rule in ("resonant_minus", "resonant_plus"):
        lo, hi = resonant_regime_shifts(d_pre)
        return lo if rule == "resonant_minus" else hi
    eps = m.epsilon

    def schedule(t, _d=d_pre):
        return adiabatic_shift(t, _d, eps)

    return schedule


def resolve(cfg: ScenarioConfig) -> Resolved:
    validate(cfg)
    sys = cfg.system
    m = cfg.modulation
    kind, atom, n0, alpha = _parse_initial(cfg.initial)
    n_max = cfg.model.n_max
    psi0 = fock_state(atom, n0, n_max) if kind == "fock" else coherent_state(atom, alpha, n_max)

    # eta is not known yet; this spec only feeds the eta-independent detunings and delta0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        pre_mod = ModulationSpec(epsilon=m.epsilon, fourier_s=m.fourier_s, fourier_c=m.fourier_c, eta=1.0)
    d_pre = derive_params(sys, pre_mod)
    xi = _shift(cfg, d_pre, n0)

    choice = None
    if m.kind == "explicit":
        eta = float(m.eta)
    elif m.kind == "bichromatic":
        eta = 1.0
    else:
        choice = ResonanceChoice(m.kind.upper(), m.order, float(xi))
        eta = resonance_frequency(choice, d_pre)

    if m.kind == "bichromatic":
        xi_m = xi if m.xi_minus is None else m.xi_minus
        eps_m = m.epsilon if m.epsilon_minus is None else m.epsilon_minus
        mod = ModulationSpec(epsilon=m.epsilon, eta=eta, epsilon_minus=eps_m, xi=xi, xi_minus=xi_m)
    else:
        mod = ModulationSpec(epsilon=m.epsilon, fourier_s=m.fourier_s, fourier_c=m.fourier_c, eta=eta)
    d = derive_params(sys, mod)

    frame = cfg.model.frame
    if frame == "lab":
        H = lab_hamiltonian(sys, mod, n_max)
    elif frame == "interaction":
        H = interaction_hamiltonian(sys, mod, n_max)
    else:
        H = build_effective(choice, sys, mod, d, n_max, initial_atom_sign=cfg.model.atom_sign,
                            squeezing_limit=cfg.model.squeezing_limit,
                            include_correction=cfg.model.correction).matrix

    theta_eff = theta_order_K(m.order, mod, d) if m.kind not in ("bichromatic",) else d.theta
    unit = cfg.horizon.unit
    if unit == "omega_t":
        scale = sys.omega
    elif unit == "theta_g0_t":
        scale = abs(theta_eff) * sys.g0
    elif unit == "delta_theta_t":
        scale = abs(d.delta0 * theta_eff)
    else:
        scale = m.epsilon
    if not scale > 0:
        raise ConfigError(f"time unit {unit!r} is degenerate for these parameters")
    t_end = cfg.horizon.t_end if cfg.horizon.t_end is not None else cfg.horizon.t_end_dimensionless / scale

    it = cfg.integrator
    eta_fast = max(eta, d.delta_plus, 2 * sys.omega)
    dt = it.dt if it.dt is not None else default_dt(eta_fast, STEPS_PER_PERIOD)
    integ = IntegratorConfig(method=it.method, dt=dt, rtol=it.rtol, atol=it.atol,
                             sample_stride=it.sample_stride, tail_guard=it.tail_guard,
                             norm_guard=it.norm_guard)

    meta = {
        "version": __version__,
        "derived": d.as_dict(),
        "eta": eta,
        "xi": "schedule" if callable(xi) else float(xi),
        "theta_K": {"re": complex(theta_eff).real, "im": complex(theta_eff).imag, "abs": abs(theta_eff)},
        "time_unit": unit,
        "time_scale": scale,
        "t_end": t_end,
        "dt": dt,
        "frame": frame,
        "n_max": n_max,
        "n0": n0,
        "config": _jsonable(asdict(cfg)),
    }
    return Resolved(cfg, sys, mod, d, xi, eta, H, psi0, n0, t_end, scale, integ, meta)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


@dataclass
class RunResult:
    series: ObservableSeries
    metadata: dict
    resolved: Resolved
    csv_path: Path | None = None
    metadata_path: Path | None = None
    raw_series: ObservableSeries | None = None


def simulate(cfg: ScenarioConfig) -> RunResult:
    """Run a scenario in memory."""
    res = resolve(cfg)
    traj = evolve(res.hamiltonian, res.psi0, (0.0, res.t_end), res.integrator)
    pops = [CSV_POPULATIONS[p] for p in cfg.outputs.populations]
    raw = measure(traj, res.n0, pops)
    series = raw
    meta = dict(res.metadata)
    meta["max_norm_drift"] = float(np.max(traj.norm_drift))
    meta["n_samples"] = int(traj.times.size)
    if cfg.outputs.average:
        window = averaging_window(res.derived)
        series = averaged(raw, window)
        meta["averaging_window"] = window
    return RunResult(series, meta, res, raw_series=raw)


def write_csv(path, series: ObservableSeries, time_scale: float):
    path = Path(path)
    cols = {
        "t_raw": series.times,
        "t_dimensionless": series.times * time_scale,
        "n_mean": series.n_mean,
        "N": series.N,
        "p_e": series.p_e,
        "p_g": series.p_g,
        "sz": series.sz,
        "norm_drift": series.norm_drift,
    }
    for name, key in CSV_POPULATIONS.items():
        if key in series.populations:
            cols[name] = series.populations[key]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(series.times.size):
            w.writerow(["%.16e" % cols[c][i] if c in cols else "" for c in CSV_HEADER])
    return path


def run_scenario(cfg: ScenarioConfig, out_dir=None, name: str = "observables") -> RunResult:
    """Run a scenario and, if ``out_dir`` is given, write ``<name>.csv`` and ``<name>.json``."""
    result = simulate(cfg)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.csv_path = write_csv(out / f"{name}.csv", result.series, result.resolved.time_scale)
        result.metadata_path = out / f"{name}.json"
        result.metadata_path.write_text(json.dumps(result.metadata, indent=2, sort_keys=True) + "\n")
    return result


def objective_value(series: ObservableSeries, objective: str) -> float:
    if objective == "peak_N":
        return float(np.max(series.N))
    if objective == "final_N":
        return float(series.N[-1])
    if objective == "peak_Pe":
        return float(np.max(series.p_e))
    raise ConfigError(f"unknown objective {objective!r}")


def _sweep_row(args):
    base, parameter, value, objective, out_dir, index = args
    row = {"index": index, "value": value, "objective": None, "max_norm_drift": None, "csv": "", "error": ""}
    try:
        cfg = with_value(base, parameter, value)
        result = run_scenario(cfg, out_dir, name=f"run_{index:03d}")
        row["objective"] = objective_value(result.series, objective)
        row["max_norm_drift"] = result.metadata["max_norm_drift"]
        row["csv"] = str(result.csv_path) if result.csv_path else ""
    except NCQEDError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(sweep: SweepConfig, out_dir=None, jobs: int = 1) -> list[dict]:
    """Run every grid value; failures are recorded per row and the sweep continues."""
    tasks = [(sweep.base, sweep.parameter, v, sweep.objective, out_dir, i) for i, v in enumerate(sweep.values)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    if out_dir is not None:
        path = Path(out_dir) / "sweep.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["parameter", "value", sweep.objective, "max_norm_drift", "csv", "error"])
            for r in rows:
                obj = "" if r["objective"] is None else "%.16e" % r["objective"]
                drift = "" if r["max_norm_drift"] is None else "%.3e" % r["max_norm_drift"]
                w.writerow([sweep.parameter, r["value"], obj, drift, r["csv"], r["error"]])
    return rows


def shift_objective(base: ScenarioConfig, parameter: str = "modulation.xi", objective: str = "peak_N"):
    """Picklable callable ``value -> objective`` for shift calibration."""
    return _ShiftObjective(base, parameter, objective)


@dataclass(frozen=True)
class _ShiftObjective:
    base: ScenarioConfig
    parameter: str
    objective: str

    def __call__(self, value):
        cfg = with_value(self.base, self.parameter, value)
        return objective_value(simulate(cfg).series, self.objective)
