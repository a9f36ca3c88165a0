import json
import math
from pathlib import Path

import numpy as np
import pytest

from ncqed.cli import main, parse_grid
from ncqed.errors import ConfigError, GuardViolation
from ncqed.model import derive_params
from ncqed.presets import PRESETS, get_preset
from ncqed.scenario import (
    CSV_HEADER,
    SweepConfig,
    load_sweep,
    parse_config_text,
    resolve,
    run_scenario,
    run_sweep,
    simulate,
    with_value,
)

BASE = """
system.omega = 1.0
system.omega0_atom = 1.4
system.g0 = 0.02
modulation.kind = "ajc"
modulation.order = 1
modulation.epsilon = 0.2
modulation.xi = -2.0e-3
initial.fock = "g,0"
integrator.dt = 0.02
horizon.t_end_dimensionless = 0.5
horizon.unit = "theta_g0_t"
model.n_max = 8
"""


def cfg_from(text=BASE, **over):
    cfg, _ = parse_config_text(text)
    for k, v in over.items():
        cfg = with_value(cfg, k.replace("__", "."), v)
    return cfg


def test_parse_example_config():
    cfg = cfg_from()
    assert cfg.system.omega0_atom == 1.4
    assert cfg.modulation.kind == "ajc" and cfg.modulation.xi == -2e-3
    assert cfg.initial.fock == "g,0"
    assert cfg.integrator.dt == 0.02
    res = resolve(cfg)
    assert np.isclose(res.eta, 2.4 + 2e-3)
    assert np.isclose(res.t_end * abs(res.derived.theta) * 0.02, 0.5)


@pytest.mark.parametrize("bad", [
    "system.omegaa = 1.0",
    "physics.omega = 1.0",
    'modulation.kind = "xyz"',
    'horizon.unit = "seconds"',
    "horizon.t_end = 5.0",
    'model.frame = "rotating"',
    'initial.coherent = "g,1.0"',
    'outputs.populations = ["P_e7"]',
    "system.g0 = = 1",
])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        parse_config_text(BASE + bad + "\n")


def test_shift_rules():
    d = resolve(cfg_from(modulation__xi_rule="fock")).derived
    assert np.isclose(resolve(cfg_from(modulation__xi_rule="fock")).xi, -2 * d.delta0)
    cfg = cfg_from(modulation__xi_rule="fock", modulation__x=2.0, initial__fock="g,3")
    assert np.isclose(resolve(cfg).xi, -2 * d.delta0 * 6)
    cfg = cfg_from(modulation__xi_rule="fock_caption", initial__fock="g,3")
    assert np.isclose(resolve(cfg).xi, -d.delta0 * 4)
    assert np.isclose(resolve(cfg_from(modulation__xi_delta0=-10.0)).xi, -10 * d.delta0)
    with pytest.raises(ConfigError):
        cfg_from(modulation__xi_delta0=1.0, modulation__xi_rule="fock")


def test_dce_frequency_and_time_unit():
    cfg = cfg_from(modulation__kind="dce", modulation__epsilon=0.4, modulation__xi_delta0=1.0,
                   horizon__unit="delta_theta_t")
    res = resolve(cfg)
    assert np.isclose(res.eta, 2 * (1 - 1e-3))
    assert np.isclose(res.time_scale, abs(res.derived.delta0 * res.derived.theta))


def test_metadata_embeds_derived_params_exactly(tmp_path):
    res = run_scenario(cfg_from(), tmp_path)
    meta = json.loads(res.metadata_path.read_text())
    d = derive_params(res.resolved.sys, res.resolved.mod)
    assert meta["derived"] == d.as_dict()
    assert meta["eta"] == res.resolved.eta
    assert meta["xi"] == -2e-3
    assert meta["derived"]["n_c"] == d.n_c


def test_csv_schema_and_byte_identical_rerun(tmp_path):
    a = run_scenario(cfg_from(), tmp_path / "a")
    b = run_scenario(cfg_from(), tmp_path / "b")
    text = a.csv_path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert text == b.csv_path.read_text()
    first = text.splitlines()[1].split(",")
    assert len(first) == len(CSV_HEADER)
    assert all(len(f.split("e")[0].replace("-", "").replace(".", "")) == 17 for f in first)


def test_absent_populations_are_empty(tmp_path):
    res = run_scenario(cfg_from(outputs__populations=["P_e1"]), tmp_path)
    row = res.csv_path.read_text().splitlines()[1].split(",")
    cols = dict(zip(CSV_HEADER, row))
    assert cols["P_g0"] == "" and cols["P_g2"] == ""
    assert cols["P_e1"] != ""


def test_zero_horizon_single_row(tmp_path):
    res = run_scenario(cfg_from(horizon__t_end_dimensionless=0.0), tmp_path)
    rows = res.csv_path.read_text().splitlines()
    assert len(rows) == 2
    vals = dict(zip(CSV_HEADER, rows[1].split(",")))
    assert float(vals["t_raw"]) == 0.0
    assert float(vals["P_g0"]) == 1.0 and float(vals["p_g"]) == 1.0 and float(vals["N"]) == 0.0


def test_averaging_flag_records_window():
    res = simulate(cfg_from(outputs__average=True))
    assert np.isclose(res.metadata["averaging_window"], 2 * math.pi / 0.4)
    assert not np.array_equal(res.series.N, res.raw_series.N)


def test_frames_agree_on_populations():
    lab = simulate(cfg_from(model__n_max=6, integrator__dt=0.005))
    inter = simulate(cfg_from(model__n_max=6, integrator__dt=0.005, model__frame="interaction"))
    assert np.max(np.abs(lab.series.N - inter.series.N)) < 1e-6


def test_guard_violation_propagates():
    cfg = cfg_from(model__n_max=2, initial__fock="g,1", horizon__t_end_dimensionless=3.0)
    with pytest.raises(GuardViolation):
        simulate(cfg)


def test_singleton_sweep_equals_run(tmp_path):
    cfg = cfg_from()
    rows = run_sweep(SweepConfig(cfg, "modulation.xi", (-2e-3,)), tmp_path)
    single = simulate(cfg)
    assert len(rows) == 1
    assert rows[0]["objective"] == float(np.max(single.series.N))
    assert Path(rows[0]["csv"]).exists()
    assert (tmp_path / "sweep.csv").exists()


def test_sweep_records_failures_and_continues(tmp_path):
    cfg = cfg_from(initial__fock="g,1", horizon__t_end_dimensionless=3.0)
    sweep = SweepConfig(cfg, "model.n_max", (2, 8))
    rows = run_sweep(sweep, tmp_path)
    assert [r["value"] for r in rows] == [2, 8]
    assert "GuardViolation" in rows[0]["error"] and rows[0]["objective"] is None
    assert rows[1]["error"] == "" and rows[1]["objective"] > 0
    summary = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(summary) == 3


def test_parallel_sweep_matches_serial():
    sweep = SweepConfig(cfg_from(), "modulation.xi", (-3e-3, -2e-3, -1e-3), "peak_Pe")
    assert run_sweep(sweep, jobs=1) == run_sweep(sweep, jobs=2)


def test_sweep_validation():
    with pytest.raises(ConfigError):
        SweepConfig(cfg_from(), "modulation.xi", ())
    with pytest.raises(ConfigError):
        SweepConfig(cfg_from(), "modulation.xi", (1,), "mean_N")
    with pytest.raises(ConfigError):
        with_value(cfg_from(), "modulation.nonsense", 1)


def test_load_sweep(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(BASE + 'sweep.parameter = "modulation.xi"\nsweep.values = [-1e-3, -2e-3]\n')
    sweep = load_sweep(p)
    assert sweep.values == (-1e-3, -2e-3) and sweep.objective == "peak_N"


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_resolve(name):
    built = get_preset(name)
    cfg = built.base if isinstance(built, SweepConfig) else built
    res = resolve(cfg)
    assert res.t_end > 0
    assert res.psi0.size == 2 * (cfg.model.n_max + 1)


def test_preset_panels_unique():
    panels = [p.panel for p in PRESETS.values()]
    assert len(panels) == len(set(panels))
    with pytest.raises(KeyError):
        get_preset("nope")


def test_parse_grid():
    assert parse_grid("1,2, 3") == [1.0, 2.0, 3.0]
    assert parse_grid("0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        parse_grid("a,b")


def test_cli_run_and_rates(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(BASE)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "observables.csv").exists()
    assert main(["rates", "--config", str(cfg), "--kappa", "1e-6"]) == 0
    report = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert report["max_dissipation"] == 1e-6


def test_cli_guard_error_line(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(BASE.replace("model.n_max = 8", "model.n_max = 2").replace('"g,0"', '"g,1"')
                   .replace("t_end_dimensionless = 0.5", "t_end_dimensionless = 3.0"))
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err.strip()
    assert code == 3
    assert err.startswith("error kind=GuardViolation guard=tail t=")


def test_cli_config_error(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(BASE + "system.bogus = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("error kind=ConfigError")


def test_cli_calibrate(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(BASE)
    assert main(["calibrate", "--config", str(cfg), "--grid=-3e-3,-2e-3", "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "calibration.json").read_text())
    assert out["best"] in (-3e-3, -2e-3) and len(out["scores"]) == 2
