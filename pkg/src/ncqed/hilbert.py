"""States and operators on atom (x) truncated Fock space.

Basis layout is atom-major: ``index = atom * (n_max + 1) + n`` with the
ground state ``g -> 0`` and the excited state ``e -> 1``. Operators are dense
``complex128`` numpy arrays; states are 1-D ``complex128`` arrays.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import InvalidDimensionError, OutOfRangeError, TruncationError

ATOM_INDEX = {"g": 0, "e": 1}

COHERENT_TAIL_LIMIT = 1e-9


def dim(n_max: int) -> int:
    return 2 * (n_max + 1)


def index(atom: str, n: int, n_max: int) -> int:
    """Position of ``|atom, n>`` in a state vector."""
    if atom not in ATOM_INDEX:
        raise ValueError(f"atom must be 'g' or 'e', got {atom!r}")
    if not 0 <= n <= n_max:
        raise OutOfRangeError(f"photon number {n} outside 0..{n_max}")
    return ATOM_INDEX[atom] * (n_max + 1) + n


def _check_nmax(n_max):
    if int(n_max) != n_max or n_max < 1:
        raise InvalidDimensionError(f"n_max must be an integer >= 1, got {n_max}")


def build_field_operator(kind: str, n_max: int) -> np.ndarray:
    """Cavity operator on the Fock factor alone, shape ``(n_max+1, n_max+1)``.

    ``kind`` is one of ``"annihilate"``, ``"create"``, ``"number"``. The
    creation operator annihilates the top level (no wraparound).
    """
    _check_nmax(n_max)
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)
    if kind == "annihilate":
        return a
    if kind == "create":
        return a.T.copy()
    if kind == "number":
        return np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)
    raise ValueError(f"unknown field operator kind {kind!r}")


def build_atom_operator(kind: str) -> np.ndarray:
    """2x2 atomic operator in the (g, e) basis."""
    if kind == "sigma_plus":
        return np.array([[0, 0], [1, 0]], dtype=complex)
    if kind == "sigma_minus":
        return np.array([[0, 1], [0, 0]], dtype=complex)
    if kind == "sigma_z":
        return np.diag([-1.0, 1.0]).astype(complex)
    if kind == "identity":
        return np.eye(2, dtype=complex)
    if kind == "excited_projector":
        return np.diag([0.0, 1.0]).astype(complex)
    raise ValueError(f"unknown atom operator kind {kind!r}")


def tensor(atom_op: np.ndarray, field_op: np.ndarray) -> np.ndarray:
    atom_op = np.asarray(atom_op)
    field_op = np.asarray(field_op)
    if atom_op.shape != (2, 2):
        raise InvalidDimensionError(f"atom operator must be 2x2, got {atom_op.shape}")
    if field_op.ndim != 2 or field_op.shape[0] != field_op.shape[1] or field_op.shape[0] < 2:
        raise InvalidDimensionError(f"field operator must be square, got {field_op.shape}")
    return np.kron(atom_op, field_op).astype(complex)


class Operators:
    """Full-space operators for one truncation, built once and shared."""

    def __init__(self, n_max: int):
        _check_nmax(n_max)
        self.n_max = n_max
        self.dim = dim(n_max)
        eye_f = np.eye(n_max + 1, dtype=complex)
        a = build_field_operator("annihilate", n_max)
        ad = build_field_operator("create", n_max)
        num = build_field_operator("number", n_max)
        sp = build_atom_operator("sigma_plus")
        sm = build_atom_operator("sigma_minus")
        sz = build_atom_operator("sigma_z")
        eye_a = np.eye(2, dtype=complex)
        self.identity = np.eye(self.dim, dtype=complex)
        self.a = tensor(eye_a, a)
        self.ad = tensor(eye_a, ad)
        self.n = tensor(eye_a, num)
        self.sz = tensor(sz, eye_f)
        self.sp = tensor(sp, eye_f)
        self.sm = tensor(sm, eye_f)
        self.pe = tensor(build_atom_operator("excited_projector"), eye_f)
        # products used by the model Hamiltonians
        self.a_sp = tensor(sp, a)
        self.ad_sp = tensor(sp, ad)
        self.x_sx = tensor(sp + sm, a + ad)
        self.parity = tensor(eye_a, np.diag((-1.0) ** np.arange(n_max + 1)).astype(complex))


def fock_state(atom: str, n0: int, n_max: int) -> np.ndarray:
    _check_nmax(n_max)
    if not 0 <= n0 <= n_max:
        raise OutOfRangeError(f"Fock level {n0} outside 0..{n_max}")
    psi = np.zeros(dim(n_max), dtype=complex)
    psi[index(atom, n0, n_max)] = 1.0
    return psi


def coherent_state(atom: str, alpha: complex, n_max: int) -> np.ndarray:
    """Atom in ``atom`` and field in a coherent state truncated at ``n_max``.

    Raises `TruncationError` if the discarded Poisson tail exceeds 1e-9.
    """
    _check_nmax(n_max)
    n = np.arange(n_max + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mod2 = abs(alpha) ** 2
    # weight kept inside the truncation, relative to the infinite sum e^{|a|^2}
    if mod2 == 0:
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[0] = 1.0
    else:
        logw = n * math.log(mod2) - log_fact - mod2
        kept = float(np.exp(logw).sum())
        if 1.0 - kept > COHERENT_TAIL_LIMIT:
            raise TruncationError(
                f"coherent state |alpha|^2={mod2:g} loses {1 - kept:.2e} beyond n_max={n_max}"
            )
        phase = np.exp(1j * np.angle(alpha) * n)
        amps = np.exp(0.5 * logw) * phase
        amps = amps / np.linalg.norm(amps)
    psi = np.zeros(dim(n_max), dtype=complex)
    start = ATOM_INDEX[atom] * (n_max + 1)
    psi[start:start + n_max + 1] = amps
    return psi


def make_state(kind: str, n_max: int, atom: str = "g", n0: int = 0, alpha: complex = 0.0) -> np.ndarray:
    """Build a normalized initial state; ``kind`` is ``"fock"`` or ``"coherent"``."""
    if kind == "fock":
        return fock_state(atom, n0, n_max)
    if kind == "coherent":
        return coherent_state(atom, alpha, n_max)
    raise ValueError(f"unknown state kind {kind!r}")


def is_hermitian(op: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


class DrivenOperator:
    """Time-dependent operator ``static + sum_j f_j(t) * M_j``.

    Each ``f_j`` must accept a numpy array of times and return an array of
    the same shape (real or complex). A term may be given as ``(M, f, F)``
    with ``F`` an antiderivative of ``f``; for diagonal ``M`` with real ``f``
    the solver then propagates it exactly instead of through RK4.
    Calling the object with a scalar time returns the assembled dense
    matrix, so it can be used anywhere a plain ``t -> matrix`` callable is
    expected.
    """

    def __init__(self, static, terms=(), n_max=None):
        self.static = np.asarray(static, dtype=complex)
        self.terms = []
        self.antiderivatives = []
        for term in terms:
            m, f = term[0], term[1]
            self.terms.append((np.asarray(m, dtype=complex), f))
            self.antiderivatives.append(term[2] if len(term) > 2 else None)
        self.n_max = n_max

    @property
    def dim(self):
        return self.static.shape[0]

    def coefficients(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, len(self.terms)), dtype=complex)
        for j, (_, f) in enumerate(self.terms):
            out[:, j] = np.broadcast_to(f(times), times.shape).ravel()
        return out

    def __call__(self, t):
        h = self.static.copy()
        if self.terms:
            coef = self.coefficients(np.array([t]))[0]
            for c, (m, _) in zip(coef, self.terms):
                h += c * m
        return h

    def is_constant(self):
        return not self.terms
