"""Observables extracted from trajectories, plus closed-form predictions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, OutOfRangeError
from .model import DerivedParams

DEFAULT_POPULATIONS = (("g", 0), ("e", 1), ("g", 2))

SERIES_KEYS = ("n_mean", "N", "p_e", "p_g", "sz", "norm_drift")


@dataclass
class ObservableSeries:
    times: np.ndarray
    n_mean: np.ndarray
    N: np.ndarray
    p_e: np.ndarray
    p_g: np.ndarray
    sz: np.ndarray
    norm_drift: np.ndarray
    populations: dict = field(default_factory=dict)

    def get(self, key):
        """Series by name; populations are addressed as ``"P_g0"`` etc."""
        if key.startswith("P_"):
            return self.populations[(key[2], int(key[3:]))]
        return getattr(self, key)

    def keys(self):
        return list(SERIES_KEYS) + [f"P_{a}{n}" for a, n in self.populations]


def measure(traj, n0: int = 0, populations=DEFAULT_POPULATIONS) -> ObservableSeries:
    """Photon number, created photons ``N = <n> - n0``, atomic populations."""
    states = np.asarray(traj.states)
    dim = states.shape[1]
    m = dim // 2
    n_max = m - 1
    probs = np.abs(states) ** 2
    pg_block, pe_block = probs[:, :m], probs[:, m:]
    n = np.arange(m)
    n_mean = (pg_block + pe_block) @ n
    p_g = pg_block.sum(axis=1)
    p_e = pe_block.sum(axis=1)
    pops = {}
    for atom, k in populations:
        if not 0 <= k <= n_max:
            raise OutOfRangeError(f"population P_{atom}{k} beyond n_max={n_max}")
        pops[(atom, k)] = (pe_block if atom == "e" else pg_block)[:, k].copy()
    return ObservableSeries(
        times=np.asarray(traj.times, dtype=float),
        n_mean=n_mean,
        N=n_mean - n0,
        p_e=p_e,
        p_g=p_g,
        sz=p_e - p_g,
        norm_drift=np.asarray(traj.norm_drift, dtype=float),
        populations=pops,
    )


def moving_average(times, values, window: float) -> np.ndarray:
    """Centered moving average of width ``window`` (shrinks at the edges)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window <= 0 or times.size < 2:
        return values.copy()
    csum = np.concatenate([[0.0], np.cumsum(values)])
    # half-open window [t - w/2, t + w/2); the nudge absorbs grid round-off
    tol = 1e-6 * float(np.median(np.diff(times)))
    lo = np.searchsorted(times, times - window / 2 - tol, side="left")
    hi = np.searchsorted(times, times + window / 2 - tol, side="left")
    hi = np.maximum(hi, np.arange(times.size) + 1)
    return (csum[hi] - csum[lo]) / (hi - lo)


def averaged(series: ObservableSeries, window: float) -> ObservableSeries:
    """Copy of ``series`` with fast oscillations averaged out (norm drift kept)."""
    def avg(v):
        return moving_average(series.times, v, window)

    return replace(
        series,
        n_mean=avg(series.n_mean),
        N=avg(series.N),
        p_e=avg(series.p_e),
        p_g=avg(series.p_g),
        sz=avg(series.sz),
        populations={k: avg(v) for k, v in series.populations.items()},
    )


def stride_average(times, values, window: float):
    """Means over consecutive non-overlapping blocks of length ``window``.

    Only complete blocks are kept. Returns ``(block_centers, block_means)``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window <= 0:
        raise ValueError("window must be positive")
    n_blocks = int(np.floor((times[-1] - times[0]) / window + 1e-9))
    k = np.floor((times - times[0]) / window + 1e-9).astype(int)
    keep = k < n_blocks
    counts = np.bincount(k[keep], minlength=n_blocks)
    sums = np.bincount(k[keep], weights=values[keep], minlength=n_blocks)
    centers = times[0] + window * (np.arange(n_blocks) + 0.5)
    ok = counts > 0
    return centers[ok], sums[ok] / counts[ok]


def averaging_window(d: DerivedParams) -> float:
    return 2 * math.pi / abs(d.delta_minus)


def _resonant_angles(d: DerivedParams, branch: str):
    q = {"minus": 0.0, "plus": math.pi / 2}[branch]
    root = 2 * math.sqrt(2) * d.g0
    if root <= abs(d.delta_minus):
        raise DomainError("2 sqrt(2) g0 must exceed |Delta_-| for the resonant-regime solution")
    y = math.atan(math.sqrt((root + d.delta_minus) / (root - d.delta_minus)))
    return y, q


def resonant_ajc_frequency(d: DerivedParams, branch: str = "minus") -> float:
    """Frequency chi of the resonant-regime oscillation (period pi/chi)."""
    y, q = _resonant_angles(d, branch)
    return abs(d.g_complex * d.theta) * math.sin(y + q)


def analytic_resonant_ajc(t, d: DerivedParams, branch: str = "minus"):
    """Probabilities ``(P_g0, P_e1, P_g2)`` in the resonant atom-cavity regime.

    ``branch="minus"`` is the shift ``xi_-`` (q = 0), ``"plus"`` is ``xi_+``
    (q = pi/2).
    """
    y, q = _resonant_angles(d, branch)
    chi = abs(d.g_complex * d.theta) * math.sin(y + q)
    s2 = np.sin(chi * np.asarray(t, dtype=float)) ** 2
    return 1.0 - s2, math.sin(y + q) ** 2 * s2, math.cos(y - q) ** 2 * s2


def dce_squeezing_prediction(t, d: DerivedParams):
    """Squeezed-vacuum photon number ``sinh^2(2 |delta0 theta| t)``."""
    return np.sinh(2 * abs(d.delta0 * d.theta) * np.asarray(t, dtype=float)) ** 2


def compare_series(a: ObservableSeries, b: ObservableSeries, keys) -> dict:
    """Max and mean absolute differences per key over the common time range.

    ``b`` is linearly interpolated onto the samples of ``a`` that fall inside
    the overlap.
    """
    lo = max(a.times[0], b.times[0])
    hi = min(a.times[-1], b.times[-1])
    if hi < lo:
        raise ValueError("series have disjoint time ranges")
    mask = (a.times >= lo) & (a.times <= hi)
    same_grid = a.times.shape == b.times.shape and np.array_equal(a.times, b.times)
    out = {}
    for key in keys:
        va = a.get(key)[mask]
        vb = b.get(key)[mask] if same_grid else np.interp(a.times[mask], b.times, b.get(key))
        diff = np.abs(va - vb)
        out[key] = {"max": float(diff.max()), "mean": float(diff.mean())}
    return out


def growth_exponent(times, values, t_lo: float, t_hi: float) -> float:
    """Least-squares slope of ``log(values)`` against ``log(times)`` on ``[t_lo, t_hi]``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    m = (times >= t_lo) & (times <= t_hi) & (values > 0) & (times > 0)
    if m.sum() < 3:
        raise ValueError("not enough samples for a growth fit")
    slope, _ = np.polyfit(np.log(times[m]), np.log(values[m]), 1)
    return float(slope)
