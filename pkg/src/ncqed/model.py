"""System parameters and the exact time-dependent Hamiltonians.

All frequencies are angular frequencies in units where the cavity frequency
is typically 1. The atomic frequency, or the coupling, carries a small
external modulation

    f(t) = sum_k [s_k sin(k eta t) + c_k cos(k eta t)]

or, for the ``coupling_bichromatic`` mode, two tones tied to the
sum and difference frequencies ``Delta_+`` and ``Delta_-``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConfigError, ResonantRegimeError
from .hilbert import DrivenOperator, Operators

MODULATED_PARAMETERS = ("atom_frequency", "coupling", "coupling_bichromatic")

DEFAULT_K_MAX = 8

Shift = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class SystemParams:
    omega: float = 1.0
    omega0_atom: float = 1.4
    g0: float = 0.02
    modulated_parameter: str = "atom_frequency"

    def __post_init__(self):
        if self.modulated_parameter not in MODULATED_PARAMETERS:
            raise ConfigError(f"unknown modulated_parameter {self.modulated_parameter!r}")
        for name in ("omega", "omega0_atom", "g0"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.g0 >= self.omega:
            raise ConfigError("g0 must be smaller than omega")


@dataclass(frozen=True)
class ModulationSpec:
    """Modulation amplitude, Fourier content and frequency.

    ``fourier_s[k]`` and ``fourier_c[k]`` are the coefficients of
    ``sin(k eta t)`` and ``cos(k eta t)``; ``fourier_s[0]`` is ignored.
    The bichromatic fields (``epsilon_minus``, ``xi``, ``xi_minus``) are only
    read in ``coupling_bichromatic`` mode, where ``xi``/``xi_minus`` may be
    callables of time (a shift schedule).
    """

    epsilon: float = 0.0
    fourier_s: Sequence[float] = (0.0, 1.0)
    fourier_c: Sequence[float] = ()
    eta: float = 1.0
    epsilon_minus: float = 0.0
    xi: Shift = 0.0
    xi_minus: Shift = 0.0
    k_max: int = DEFAULT_K_MAX

    def __post_init__(self):
        object.__setattr__(self, "fourier_s", tuple(float(x) for x in self.fourier_s))
        object.__setattr__(self, "fourier_c", tuple(float(x) for x in self.fourier_c))
        for name in ("fourier_s", "fourier_c"):
            if len(getattr(self, name)) > self.k_max + 1:
                raise ConfigError(f"{name} has harmonics beyond k_max={self.k_max}")
        if not self.eta > 0:
            raise ConfigError("eta must be positive")
        if self.epsilon / self.eta > 0.2:
            warnings.warn(
                f"epsilon/eta = {self.epsilon / self.eta:.3g} > 0.2: first-order expansions are inaccurate",
                stacklevel=3,
            )

    @classmethod
    def harmonic(cls, epsilon, eta, **kw):
        """``f(t) = sin(eta t)``, the modulation used throughout the figures."""
        return cls(epsilon=epsilon, fourier_s=(0.0, 1.0), fourier_c=(), eta=eta, **kw)

    def s(self, k):
        return self.fourier_s[k] if k < len(self.fourier_s) else 0.0

    def c(self, k):
        return self.fourier_c[k] if k < len(self.fourier_c) else 0.0

    def profile_integral(self, t):
        """Antiderivative of `profile` vanishing at t = 0."""
        t = np.asarray(t, dtype=float)
        out = self.c(0) * t
        for k in range(1, self.n_harmonics + 1):
            kt = k * self.eta * t
            out = out + (self.s(k) * (1.0 - np.cos(kt)) + self.c(k) * np.sin(kt)) / (k * self.eta)
        return out

    @property
    def n_harmonics(self):
        return max(len(self.fourier_s), len(self.fourier_c), 1) - 1

    def profile(self, t):
        """The periodic function f(t), vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.c(0))
        for k in range(1, self.n_harmonics + 1):
            out = out + self.s(k) * np.sin(k * self.eta * t) + self.c(k) * np.cos(k * self.eta * t)
        return out


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from (SystemParams, ModulationSpec).

    ``lambda_k[k]`` holds the Fourier weight for harmonic ``k``; entry 0 is
    unused and zero. Dispersive quantities (``delta0``, ``n_c``,
    ``small_param``) raise `ResonantRegimeError` when ``delta_minus == 0``.
    """

    omega: float
    g0: float
    epsilon: float
    eta: float
    delta_plus: float
    delta_minus: float
    lambda_k: tuple
    g_complex: complex
    theta: complex

    def _need_dispersive(self):
        if self.delta_minus == 0:
            raise ResonantRegimeError("resonant regime, dispersive quantities undefined (Delta_- = 0)")

    @property
    def delta0(self) -> float:
        self._need_dispersive()
        return self.g0 ** 2 / self.delta_minus

    @property
    def n_c(self) -> float:
        self._need_dispersive()
        return (self.delta_minus / self.g0) ** 2

    @property
    def small_param(self) -> float:
        self._need_dispersive()
        return abs(self.g0 / self.delta_minus)

    def lam(self, k: int) -> complex:
        return self.lambda_k[k] if k < len(self.lambda_k) else 0j

    def as_dict(self) -> dict:
        out = {
            "omega": self.omega,
            "g0": self.g0,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "delta_plus": self.delta_plus,
            "delta_minus": self.delta_minus,
            "theta_re": self.theta.real,
            "theta_im": self.theta.imag,
            "theta_abs": abs(self.theta),
            "g_re": self.g_complex.real,
            "g_im": self.g_complex.imag,
        }
        if self.delta_minus != 0:
            out.update(delta0=self.delta0, n_c=self.n_c, small_param=self.small_param)
        return out


def _bare_atom_frequency(sys: SystemParams, mod: ModulationSpec) -> float:
    # the static Fourier offset only shifts the atom in atom_frequency mode
    if sys.modulated_parameter == "atom_frequency":
        return sys.omega0_atom + mod.epsilon * mod.c(0)
    return sys.omega0_atom


def detunings(sys: SystemParams, mod: ModulationSpec) -> tuple[float, float]:
    """``(Delta_+, Delta_-)``; independent of the modulation frequency."""
    w = _bare_atom_frequency(sys, mod)
    return w + sys.omega, w - sys.omega


def derive_params(sys: SystemParams, mod: ModulationSpec) -> DerivedParams:
    if mod.epsilon / sys.omega0_atom > 0.5:
        warnings.warn("epsilon/Omega0 > 0.5: modulation is not small", stacklevel=2)
    d_plus, d_minus = detunings(sys, mod)
    lam = [0j] + [-(mod.c(k) + 1j * mod.s(k)) / (2 * k) for k in range(1, mod.n_harmonics + 1)]
    ratio = mod.epsilon / mod.eta
    phase = ratio * sum(mod.s(k) / k for k in range(1, mod.n_harmonics + 1))
    g = sys.g0 * complex(math.cos(phase), math.sin(phase))
    lam1 = lam[1] if len(lam) > 1 else 0j
    return DerivedParams(
        omega=sys.omega,
        g0=sys.g0,
        epsilon=mod.epsilon,
        eta=mod.eta,
        delta_plus=d_plus,
        delta_minus=d_minus,
        lambda_k=tuple(lam),
        g_complex=g,
        theta=lam1 * ratio,
    )


def xi_phase(t, sys: SystemParams, mod: ModulationSpec, sign: int):
    """Analytic phase integral of ``Omega(tau) +/- omega`` from 0 to ``t``.

    ``sign`` is +1 or -1. Vectorized over ``t``.
    """
    if sys.modulated_parameter != "atom_frequency":
        raise ConfigError("xi_phase requires atom_frequency modulation")
    d_plus, d_minus = detunings(sys, mod)
    base = d_plus if sign > 0 else d_minus
    t = np.asarray(t, dtype=float)
    out = base * t
    if mod.epsilon:
        acc = np.zeros_like(t)
        for k in range(1, mod.n_harmonics + 1):
            kt = k * mod.eta * t
            acc = acc + (mod.s(k) * (1.0 - np.cos(kt)) + mod.c(k) * np.sin(kt)) / k
        out = out + (mod.epsilon / mod.eta) * acc
    return out


def _as_schedule(xi):
    if callable(xi):
        return xi
    return lambda t: np.full(np.shape(t), float(xi))


def coupling_profile(sys: SystemParams, mod: ModulationSpec):
    """g(t) as a vectorized callable (modulated or bare)."""
    if sys.modulated_parameter == "coupling":
        return lambda t: sys.g0 + mod.epsilon * mod.profile(t)
    if sys.modulated_parameter == "coupling_bichromatic":
        d_plus, d_minus = detunings(sys, mod)
        xi, xi_m = _as_schedule(mod.xi), _as_schedule(mod.xi_minus)

        def g_of_t(t):
            t = np.asarray(t, dtype=float)
            return (
                sys.g0
                + 2 * mod.epsilon * np.sin((d_plus - 2 * xi(t)) * t)
                + 2 * mod.epsilon_minus * np.sin((d_minus - 2 * xi_m(t)) * t)
            )

        return g_of_t
    return lambda t: np.full(np.shape(t), sys.g0)


def lab_hamiltonian(sys: SystemParams, mod: ModulationSpec, n_max: int, ops: Operators | None = None) -> DrivenOperator:
    """Rabi Hamiltonian ``omega n + Omega(t)/2 sz + g(t)(a + a^dag)(s+ + s-)``."""
    ops = ops or Operators(n_max)
    static = sys.omega * ops.n + 0.5 * sys.omega0_atom * ops.sz
    if sys.modulated_parameter == "atom_frequency":
        static = static + sys.g0 * ops.x_sx
        terms = []
        if mod.epsilon:
            terms.append((
                0.5 * ops.sz,
                lambda t: mod.epsilon * mod.profile(t),
                lambda t: mod.epsilon * mod.profile_integral(t),
            ))
        return DrivenOperator(static, terms, n_max=n_max)
    g_of_t = coupling_profile(sys, mod)
    return DrivenOperator(static, [(ops.x_sx, g_of_t)], n_max=n_max)


def hamiltonian_lab(t, sys: SystemParams, mod: ModulationSpec, n_max: int) -> np.ndarray:
    return lab_hamiltonian(sys, mod, n_max)(t)


def interaction_hamiltonian(sys: SystemParams, mod: ModulationSpec, n_max: int, ops: Operators | None = None) -> DrivenOperator:
    """Interaction-picture Hamiltonian with respect to the free part.

    Atom-frequency mode uses the analytic phases ``Xi_+/-``; coupling modes
    multiply the bare phases ``(Omega -/+ omega) t`` by g(t).
    """
    ops = ops or Operators(n_max)
    if sys.modulated_parameter == "atom_frequency":
        def jc(t):
            return sys.g0 * np.exp(1j * xi_phase(t, sys, mod, -1))

        def ajc(t):
            return sys.g0 * np.exp(1j * xi_phase(t, sys, mod, +1))
    else:
        g_of_t = coupling_profile(sys, mod)
        d_plus, d_minus = detunings(sys, mod)

        def jc(t):
            return g_of_t(t) * np.exp(1j * d_minus * np.asarray(t))

        def ajc(t):
            return g_of_t(t) * np.exp(1j * d_plus * np.asarray(t))

    terms = [
        (ops.a_sp, jc),
        (ops.a_sp.conj().T, lambda t: np.conj(jc(t))),
        (ops.ad_sp, ajc),
        (ops.ad_sp.conj().T, lambda t: np.conj(ajc(t))),
    ]
    return DrivenOperator(np.zeros((ops.dim, ops.dim), complex), terms, n_max=n_max)


def hamiltonian_interaction(t, sys: SystemParams, mod: ModulationSpec, n_max: int) -> np.ndarray:
    return interaction_hamiltonian(sys, mod, n_max)(t)


def free_phase(t, sys: SystemParams, mod: ModulationSpec, n_max: int) -> np.ndarray:
    """Diagonal of ``int_0^t H_0 dtau`` in the documented basis layout.

    Maps lab-frame amplitudes to interaction-picture ones via
    ``psi_I = exp(+i * free_phase) * psi_lab``.
    """
    n = np.arange(n_max + 1, dtype=float)
    sz = np.concatenate([-np.ones(n_max + 1), np.ones(n_max + 1)])
    nn = np.concatenate([n, n])
    if sys.modulated_parameter == "atom_frequency":
        atom_int = 0.5 * (xi_phase(t, sys, mod, +1) + xi_phase(t, sys, mod, -1))
    else:
        atom_int = sys.omega0_atom * t
    return sys.omega * nn * t + 0.5 * sz * atom_int
