"""Named scenarios, one per published figure panel or panel line.

``PRESETS`` maps a name to a :class:`Preset`; ``Preset.build()`` returns a
``ScenarioConfig`` (single run) or a ``SweepConfig`` (family of runs).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .model import SystemParams
from .scenario import (
    HorizonConfig,
    InitialConfig,
    IntegratorSection,
    ModelConfig,
    ModulationConfig,
    OutputConfig,
    ScenarioConfig,
    SweepConfig,
)


@dataclass(frozen=True)
class Preset:
    panel: str
    description: str
    build: Callable[[], object]


# Shared parameter sets.
_CIRCUIT = SystemParams(omega=1.0, omega0_atom=1.4, g0=0.02)
_BICHROMATIC = dict(omega=1.0, g0=0.05, modulated_parameter="coupling_bichromatic")


def _ajc(n0: int, x: float = 0.0, n_max: int = 15) -> ScenarioConfig:
    return ScenarioConfig(
        system=_CIRCUIT,
        modulation=ModulationConfig(kind="ajc", epsilon=0.2, xi_rule="fock", x=x),
        initial=InitialConfig(fock=f"g,{n0}"),
        horizon=HorizonConfig(t_end_dimensionless=3.0, unit="theta_g0_t"),
        model=ModelConfig(n_max=n_max),
    )


def _resonant(delta_minus_over_g0: float, epsilon: float) -> ScenarioConfig:
    g0 = 0.04
    root2 = 2 ** 0.5
    return ScenarioConfig(
        system=SystemParams(omega=1.0, omega0_atom=1.0 + delta_minus_over_g0 * g0, g0=g0),
        modulation=ModulationConfig(kind="ajc", epsilon=epsilon, xi_rule="resonant_minus"),
        initial=InitialConfig(fock="g,0"),
        # one period pi/chi, with chi close to |theta| g0 / sqrt(2)
        horizon=HorizonConfig(t_end_dimensionless=3.141592653589793 * root2, unit="theta_g0_t"),
        integrator=IntegratorSection(dt=0.02),
        model=ModelConfig(n_max=12),
    )


def _jc(n0: int, order: int = 1, xi_delta0: float | None = None) -> ScenarioConfig:
    if xi_delta0 is None:
        mod = ModulationConfig(kind="jc", order=order, epsilon=0.2, xi_rule="fock")
    else:
        mod = ModulationConfig(kind="jc", order=order, epsilon=0.2, xi_delta0=xi_delta0)
    return ScenarioConfig(
        system=_CIRCUIT,
        modulation=mod,
        initial=InitialConfig(fock=f"g,{n0}"),
        horizon=HorizonConfig(t_end_dimensionless=3.0, unit="theta_g0_t"),
        integrator=IntegratorSection(dt=0.02),
        model=ModelConfig(n_max=max(15, n0 + 10)),
    )


def _dce(initial: InitialConfig, x: float = 1.0, horizon: float = 1.0, n_max: int = 120, dt=None) -> ScenarioConfig:
    return ScenarioConfig(
        system=_CIRCUIT,
        modulation=ModulationConfig(kind="dce", epsilon=0.4, xi_delta0=x),
        initial=initial,
        horizon=HorizonConfig(t_end_dimensionless=horizon, unit="delta_theta_t"),
        integrator=IntegratorSection(dt=dt),
        model=ModelConfig(n_max=n_max),
    )


def _dce_sweep() -> SweepConfig:
    base = _dce(InitialConfig(fock="g,0"), horizon=3.0, n_max=200, dt=0.0125)
    return SweepConfig(base, "modulation.xi_delta0", (0.95, 1.0, 1.05, 1.15, 1.25), "peak_N")


def _bichromatic(frame: str, atom_frequency: float, xi_rule=None, xi_delta0=None, horizon=4.0,
                 n_max=30, dt=0.02) -> ScenarioConfig:
    return ScenarioConfig(
        system=SystemParams(omega0_atom=atom_frequency, **_BICHROMATIC),
        modulation=ModulationConfig(kind="bichromatic", epsilon=5e-3, epsilon_minus=5e-3,
                                    xi_rule=xi_rule, xi_delta0=xi_delta0),
        initial=InitialConfig(fock="g,0"),
        horizon=HorizonConfig(t_end_dimensionless=horizon, unit="epsilon_t"),
        integrator=IntegratorSection(dt=dt),
        model=ModelConfig(frame=frame, n_max=n_max),
        outputs=OutputConfig(average=frame == "lab"),
    )


def _fig1c() -> SweepConfig:
    return SweepConfig(_ajc(5, n_max=20), "modulation.x", (0.0, 1.0, 2.0, 3.0, 4.0), "peak_N")


def _fig3c() -> SweepConfig:
    return SweepConfig(_jc(4, xi_delta0=-10.0), "modulation.order", (1, 2, 3), "peak_Pe")


PRESETS: dict[str, Preset] = {
    "fig1a_n0": Preset("Fig. 1a/b line 1", "AJC resonance from |g,0>", lambda: _ajc(0)),
    "fig1a_n3": Preset("Fig. 1a/b line 2", "AJC resonance from |g,3>", lambda: _ajc(3)),
    "fig1a_n6": Preset("Fig. 1a/b line 3", "AJC resonance from |g,6>", lambda: _ajc(6, n_max=20)),
    "fig1c": Preset("Fig. 1c", "AJC shift sweep x = 0..4 from |g,5>", _fig1c),
    "fig2a": Preset("Fig. 2a", "resonant regime, Delta_- = 0, shift xi_-", lambda: _resonant(0.0, 0.2)),
    "fig2b": Preset("Fig. 2b", "resonant regime, Delta_- = g0/10, shift xi_-", lambda: _resonant(0.1, 0.1)),
    "fig3a_n1": Preset("Fig. 3a/b line 1", "JC transfer from |g,1>", lambda: _jc(1)),
    "fig3a_n3": Preset("Fig. 3a/b line 2", "JC transfer from |g,3>", lambda: _jc(3)),
    "fig3a_n7": Preset("Fig. 3a/b line 3", "JC transfer from |g,7>", lambda: _jc(7)),
    "fig3c": Preset("Fig. 3c", "JC resonances of order K = 1, 2, 3 from |g,4>, xi = -10 delta0", _fig3c),
    "fig4a_n0": Preset("Fig. 4a/b line 1", "DCE growth from |g,0>",
                       lambda: _dce(InitialConfig(fock="g,0"), horizon=1.3)),
    "fig4a_n1": Preset("Fig. 4a/b line 2", "DCE growth from |g,1>", lambda: _dce(InitialConfig(fock="g,1"))),
    "fig4a_coh05": Preset("Fig. 4a/b line 3", "DCE growth from a coherent state, |alpha|^2 = 1/2",
                          lambda: _dce(InitialConfig(fock=None, coherent="g,0.7071067811865476"))),
    "fig4a_coh1": Preset("Fig. 4a/b line 4", "DCE growth from a coherent state, |alpha|^2 = 1",
                         lambda: _dce(InitialConfig(fock=None, coherent="g,1.0"))),
    "fig4c": Preset("Fig. 4c/d", "DCE shift sweep xi = x delta0, x = 0.95..1.25", _dce_sweep),
    "fig5_exact": Preset("Fig. 5 (exact)", "bichromatic coupling, xi = xi_m = -delta0, full model",
                         lambda: _bichromatic("lab", 1.3, xi_delta0=-1.0)),
    "fig5_effective": Preset("Fig. 5 (effective)", "bichromatic coupling, xi = xi_m = -delta0, effective model",
                             lambda: _bichromatic("effective", 1.3, xi_delta0=-1.0)),
    "fig6_exact": Preset("Fig. 6 (exact)", "bichromatic coupling with adiabatic shift schedule, full model",
                         lambda: _bichromatic("lab", 1.4, xi_rule="adiabatic", horizon=5.0, n_max=60, dt=0.01)),
    "fig6_effective": Preset("Fig. 6 (effective)", "bichromatic coupling with adiabatic shift schedule, effective model",
                             lambda: _bichromatic("effective", 1.4, xi_rule="adiabatic", horizon=5.0, n_max=60)),
}


def get_preset(name: str):
    try:
        return PRESETS[name].build()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
