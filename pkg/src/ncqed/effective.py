"""Effective time-independent Hamiltonians and resonance bookkeeping.

The effective models live in rotating frames that are diagonal in
``(n, sigma_z)``, so only observables diagonal in that basis (photon number,
atomic populations) are meaningfully compared with exact runs.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ResonantRegimeError, UnsupportedModelError
from .hilbert import DrivenOperator, Operators
from .model import DerivedParams, ModulationSpec, SystemParams, _as_schedule

KINDS = ("AJC", "JC", "DCE")


@dataclass(frozen=True)
class ResonanceChoice:
    kind: str
    order: int = 1
    xi: float = 0.0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ValueError(f"resonance kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("resonance order K must be an integer >= 1")


@dataclass
class EffectiveModel:
    matrix: DrivenOperator
    frame_note: str
    validity: dict = field(default_factory=dict)


def resonance_frequency(choice: ResonanceChoice, d: DerivedParams) -> float:
    """Modulation frequency ``eta_i / K`` selecting the chosen resonance."""
    if choice.kind == "AJC":
        eta = d.delta_plus - choice.xi
    elif choice.kind == "JC":
        if d.delta_minus == 0:
            raise ResonantRegimeError("no dispersive JC resonance at Delta_- = 0")
        eta = abs(d.delta_minus) - choice.xi
    else:
        eta = d.delta_plus - d.delta_minus - 2 * choice.xi
    if abs(choice.xi) > 0.1 * abs(eta):
        warnings.warn("resonance shift is not small compared with the resonance frequency", stacklevel=2)
    return eta / choice.order


def ajc_shift_for_fock(n0: int, d: DerivedParams, form: str = "doubled") -> float:
    """Resonance shift for the AJC transition out of ``|g, n0>``.

    ``form="doubled"`` gives ``-2 delta0 (1 + n0)``, which equalizes the
    diagonal of the effective model on ``{|g,n0>, |e,n0+1>}``;
    ``form="effective"`` gives ``-delta0 (1 + 2 n0)``.
    """
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if form == "doubled":
        return -2 * d.delta0 * (1 + n0)
    if form == "effective":
        return -d.delta0 * (1 + 2 * n0)
    raise ValueError(f"unknown shift form {form!r}")


def resonant_regime_shifts(d: DerivedParams) -> tuple[float, float]:
    """``(xi_-, xi_+) = Delta_-/2 -/+ sqrt(2) g0`` for photon generation from |g,0>."""
    if abs(d.delta_minus) / d.g0 > 0.5:
        warnings.warn("|Delta_-|/g0 is not small: resonant-regime shifts are unreliable", stacklevel=2)
    root = math.sqrt(2) * d.g0
    return d.delta_minus / 2 - root, d.delta_minus / 2 + root


def theta_order_K(K: int, mod: ModulationSpec, d: DerivedParams) -> complex:
    """Modulation-induced coupling of the K-th order resonance.

    Sum of the non-harmonic contribution ``Lambda_K eps/eta`` and the
    power contribution ``(Lambda_1 eps/eta)^K / K!``; for K = 1 both are the
    same term and ``d.theta`` is returned.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if K == 1:
        return d.theta
    ratio = mod.epsilon / mod.eta
    return d.lam(K) * ratio + (d.lam(1) * ratio) ** K / math.factorial(K)


def _validity(d: DerivedParams, theta) -> dict:
    return {"small_param": d.small_param, "theta": abs(theta), "n_c": d.n_c}


def build_effective(
    choice: ResonanceChoice | None,
    sys: SystemParams,
    mod: ModulationSpec,
    d: DerivedParams,
    n_max: int,
    initial_atom_sign: int = -1,
    squeezing_limit: bool = False,
    include_correction: bool | None = None,
) -> EffectiveModel:
    """Effective Hamiltonian for a dispersive resonance.

    Parameters
    ----------
    choice : ResonanceChoice or None
        Resonance kind, order and shift. Ignored (may be None) in
        ``coupling_bichromatic`` mode, where the shifts and amplitudes come
        from ``mod``.
    initial_atom_sign : {-1, +1}
        Atomic sigma_z value substituted in the DCE squeezing limit
        (-1 for |g>, +1 for |e>).
    squeezing_limit : bool
        DCE only: replace sigma_z by ``initial_atom_sign``.
    include_correction : bool, optional
        DCE only: keep the ``-(2 delta/Delta_-)(g e^{i Delta_- t} a n s+ + h.c.)``
        term. Defaults to on for the full model, off in the squeezing limit.
    """
    if d.delta_minus == 0:
        raise UnsupportedModelError("effective models require the dispersive regime (Delta_- != 0)")
    if d.small_param > 0.2:
        warnings.warn(f"|g0/Delta_-| = {d.small_param:.3g} > 0.2: dispersive expansion is poor", stacklevel=2)
    ops = Operators(n_max)
    delta = d.delta0

    if sys.modulated_parameter == "coupling_bichromatic":
        return _bichromatic(mod, d, ops, delta)
    if choice is None:
        raise UnsupportedModelError("a ResonanceChoice is required for periodic modulation")

    theta = theta_order_K(choice.order, mod, d)
    g = d.g_complex
    xi = choice.xi
    diag = 0.5 * (ops.identity + 2 * ops.n) @ ops.sz

    if choice.kind == "AJC":
        coupling = g * theta * ops.ad_sp
        h = 0.5 * xi * ops.sz + delta * diag + coupling + coupling.conj().T
        note = "frame rotating at xi*sz/2 on top of the interaction picture; AJC coupling g*theta a^dag s+"
        return EffectiveModel(DrivenOperator(h, n_max=n_max), note, _validity(d, theta))

    if choice.kind == "JC":
        if d.delta_minus < 0:
            theta, xi = -np.conj(theta), -xi
        coupling = g * theta * ops.a_sp
        h = 0.5 * xi * ops.sz + delta * diag + coupling + coupling.conj().T
        note = "frame rotating at xi*sz/2 on top of the interaction picture; JC coupling g*theta a s+"
        return EffectiveModel(DrivenOperator(h, n_max=n_max), note, _validity(d, theta))

    a2 = ops.a @ ops.a
    squeeze = theta * a2.conj().T + np.conj(theta) * a2
    if squeezing_limit:
        s = 1 if initial_atom_sign > 0 else -1
        h = (xi + s * delta) * ops.n + s * delta * squeeze
        note = f"DCE squeezing limit with sigma_z -> {s:+d}; field-only generator"
        return EffectiveModel(DrivenOperator(h, n_max=n_max), note, _validity(d, theta))

    h = xi * ops.n + delta * ops.sz @ ops.n + delta * ops.sz @ squeeze
    terms = []
    if include_correction is None or include_correction:
        corr = -(2 * delta / d.delta_minus) * (ops.a @ ops.n @ ops.sp)
        dm = d.delta_minus
        terms = [
            (corr, lambda t: g * np.exp(1j * dm * np.asarray(t))),
            (corr.conj().T, lambda t: np.conj(g) * np.exp(-1j * dm * np.asarray(t))),
        ]
    note = "DCE frame (after the rotating and antirotating small transformations)"
    return EffectiveModel(DrivenOperator(h, terms, n_max=n_max), note, _validity(d, theta))


def _bichromatic(mod: ModulationSpec, d: DerivedParams, ops: Operators, delta: float) -> EffectiveModel:
    """General two-tone model; reduces to H_+ for equal amplitudes and shifts."""
    eps, eps_m = mod.epsilon, mod.epsilon_minus
    xi, xi_m = _as_schedule(mod.xi), _as_schedule(mod.xi_minus)
    coupling = 1j * eps * ops.ad_sp + 1j * eps_m * ops.a_sp
    static = delta * 0.5 * (ops.identity + 2 * ops.n) @ ops.sz + coupling + coupling.conj().T
    terms = [
        (0.5 * ops.sz, lambda t: xi(t) + xi_m(t)),
        (ops.n, lambda t: xi(t) - xi_m(t)),
    ]
    if not callable(mod.xi) and not callable(mod.xi_minus):
        static = static + 0.5 * (mod.xi + mod.xi_minus) * ops.sz + (mod.xi - mod.xi_minus) * ops.n
        terms = []
    note = "bichromatic frame U3; equal shifts and amplitudes give H_+"
    return EffectiveModel(
        DrivenOperator(static, terms, n_max=ops.n_max),
        note,
        {"small_param": d.small_param, "n_c": d.n_c},
    )


def adiabatic_shift(t, d: DerivedParams, epsilon: float):
    """Shift schedule ``-(delta0 - 3 g0^2/Delta_+)(1/2 + epsilon t)``."""
    rate = d.delta0 - 3 * d.g0 ** 2 / d.delta_plus
    return -rate * (0.5 + epsilon * np.asarray(t, dtype=float))


def _score(args):
    run, xi = args
    return run(xi)


def calibrate_shift(run: Callable[[float], float], xi_grid: Sequence[float], jobs: int = 1, return_scores: bool = False):
    """Pick the shift maximizing ``run(xi)`` (peak created photons) over a grid.

    Ties, within 1e-12, go to the smallest ``|xi|``. With ``jobs > 1`` the grid
    points run in separate processes, so ``run`` must be picklable.
    """
    grid = [float(x) for x in xi_grid]
    if not grid:
        raise ValueError("empty shift grid")
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(_score, [(run, x) for x in grid]))
    else:
        scores = [run(x) for x in grid]
    best = max(scores)
    winners = [x for x, s in zip(grid, scores) if s >= best - 1e-12]
    xi_best = min(winners, key=abs)
    if return_scores:
        return xi_best, scores
    return xi_best


def rate_report(d: DerivedParams, kappa: float = 0.0, gamma: float = 0.0, gamma_ph: float = 0.0) -> dict:
    """Photon-creation rates of the first-order DCE and AJC resonances.

    Each rate uses the coupling ``theta`` evaluated at its own resonance
    frequency (``2 omega`` for DCE, ``Delta_+`` for AJC) and is expressed in
    units of ``omega``.
    """
    if min(kappa, gamma, gamma_ph) < 0:
        raise ValueError("dissipation rates must be nonnegative")
    lam1 = d.lam(1)
    theta_dce = lam1 * d.epsilon / (d.delta_plus - d.delta_minus)
    theta_ajc = lam1 * d.epsilon / d.delta_plus
    dce = abs(d.delta0 * theta_dce) / d.omega
    ajc = d.g0 * abs(theta_ajc) / d.omega
    worst = max(kappa, gamma, gamma_ph) / d.omega
    return {
        "dce_rate": dce,
        "ajc_rate": ajc,
        "max_dissipation": worst,
        "dce_exceeds_dissipation": dce > worst,
        "ajc_exceeds_dissipation": ajc > worst,
    }
