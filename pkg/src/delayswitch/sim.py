"""Fixed-step method-of-steps integration for ``x' = A0 x(t) + A1 x(t - tau)``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .model import DelaySystem

OVERFLOW = 1e12
# growth_rate of a trajectory that has decayed below representable range
DECAYED_RATE = -1e9
MIN_PEAKS = 8


@dataclass(frozen=True)
class ConstantHistory:
    values: tuple[float, ...]

    def __call__(self, t: float) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def derivative(self, t: float) -> np.ndarray:
        return np.zeros(len(self.values))


@dataclass(frozen=True)
class SampledHistory:
    """Tabulated past on ``[-tau, 0]``, interpolated by a cubic spline."""

    times: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing, at least two")
        object.__setattr__(self, "_spline", CubicSpline(t, np.asarray(self.values, dtype=float)))

    def covers(self, tau: float) -> bool:
        return self.times[0] <= -tau + 1e-12 and self.times[-1] >= -1e-12

    def __call__(self, t: float) -> np.ndarray:
        return self._spline(t)

    def derivative(self, t: float) -> np.ndarray:
        return self._spline(t, 1)


HistoryFunction = ConstantHistory | SampledHistory


def default_history(n: int) -> ConstantHistory:
    return ConstantHistory((1.0,) * n)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    h: float
    tau: float
    history: HistoryFunction
    diverged: bool = False

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    def dense(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolant of the stored solution (history for t < 0)."""
        if t < 0:
            return np.asarray(self.history(t), dtype=float)
        i = min(int(math.floor(t / self.h)), len(self.times) - 2)
        if i < 0:
            return self.states[0].copy()
        s = (t - self.times[i]) / self.h
        if s == 0.0:
            return self.states[i].copy()
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.states[i] + h10 * self.h * self.derivs[i]
                + h01 * self.states[i + 1] + h11 * self.h * self.derivs[i + 1])


def _step_size(tau: float, h: float | None) -> float:
    if tau == 0.0:
        return h if h is not None else 1e-2
    h = tau / 64 if h is None else h
    return tau / math.ceil(tau / h - 1e-9)


def _rk4_map(a0: np.ndarray, a1: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step as a matrix acting on [x, x', x_delayed(mid), x_delayed(end)].

    The system is linear, so the stages are fixed linear combinations of
    those four inputs and the whole step collapses to one product.
    """
    n = a0.shape[0]
    z = np.zeros((n, n))
    eye = np.eye(n)
    k1 = np.hstack([z, eye, z, z])
    k2 = np.hstack([a0, z, a1, z]) + 0.5 * h * a0 @ k1
    k3 = np.hstack([a0, z, a1, z]) + 0.5 * h * a0 @ k2
    k4 = np.hstack([a0, z, z, a1]) + h * a0 @ k3
    return np.hstack([eye, z, z, z]) + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(sys: DelaySystem, tau: float, history: HistoryFunction | None = None,
              horizon: float | None = None, h: float | None = None) -> Trajectory:
    """Classical RK4 on successive delay intervals.

    ``h`` is shrunk so that it divides ``tau``; the delayed state is then
    always a stored grid value or the Hermite midpoint of a stored step.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    a0 = sys.undelayed_part()
    a1 = sys.delayed_part()
    n = a0.shape[0]
    history = history or default_history(n)
    if isinstance(history, SampledHistory) and tau > 0 and not history.covers(tau):
        raise ValueError("sampled history must cover [-tau, 0]")
    horizon = max(40.0, 20.0 * tau) if horizon is None else horizon
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    h = _step_size(tau, h)
    steps = int(math.ceil(horizon / h - 1e-9))
    times = np.arange(steps + 1) * h
    xs = np.empty((steps + 1, n))
    ds = np.empty((steps + 1, n))
    xs[0] = np.asarray(history(0.0), dtype=float)
    if tau == 0.0:
        a0, a1 = a0 + a1, np.zeros_like(a1)
    step = _rk4_map(a0, a1, h)
    m = int(round(tau / h))

    # the stored past, tabulated where the first delay interval needs it
    n_hist = min(m, steps + 1)
    hist_at = np.array([history(times[k] - tau) for k in range(n_hist + 1)], dtype=float).reshape(-1, n)
    hist_mid = np.array([history(times[k] - tau + 0.5 * h) for k in range(n_hist)], dtype=float).reshape(-1, n)

    nothing = np.zeros(n)

    def delayed_at(k: int) -> np.ndarray:
        if tau == 0.0:
            return nothing  # a1 is zero
        j = k - m
        return hist_at[k] if j < 0 else xs[j]

    def delayed_mid(k: int) -> np.ndarray:
        if tau == 0.0:
            return nothing
        j = k - m
        if j < 0:
            return hist_mid[k]
        return 0.5 * (xs[j] + xs[j + 1]) + 0.125 * h * (ds[j] - ds[j + 1])

    ds[0] = a0 @ xs[0] + a1 @ delayed_at(0)
    v = np.empty(4 * n)
    diverged = False
    last = steps
    for k in range(steps):
        xd1 = delayed_at(k + 1)
        v[:n] = xs[k]
        v[n:2 * n] = ds[k]
        v[2 * n:3 * n] = delayed_mid(k)
        v[3 * n:] = xd1
        xs[k + 1] = step @ v
        ds[k + 1] = a0 @ xs[k + 1] + a1 @ xd1
        if not np.all(np.abs(xs[k + 1]) < OVERFLOW):
            diverged = True
            last = k + 1
            break
    return Trajectory(times[: last + 1], xs[: last + 1], ds[: last + 1], h, tau, history, diverged)


def _local_maxima(y: np.ndarray) -> np.ndarray:
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    return np.nonzero(inner)[0] + 1


@dataclass(frozen=True)
class GrowthEstimate:
    rate: float
    peaks: int
    # False when fewer than MIN_PEAKS envelope peaks were available
    confident: bool


def growth_estimate(traj: Trajectory) -> GrowthEstimate:
    """Exponential rate of the state norm over the trailing half.

    Fits log of the local maxima of ``|x(t)|``; trajectories without enough
    oscillation fall back to fitting ``log |x|`` directly.
    """
    norms = np.linalg.norm(traj.states, axis=1)
    half = len(norms) // 2
    t, y = traj.times[half:], norms[half:]
    if len(y) < 3:
        return GrowthEstimate(float("nan"), 0, False)
    if np.max(y) < 1e-300:
        return GrowthEstimate(DECAYED_RATE, 0, True)
    idx = _local_maxima(y)
    if len(idx) >= MIN_PEAKS and np.all(y[idx] > 0):
        slope = np.polyfit(t[idx], np.log(y[idx]), 1)[0]
        return GrowthEstimate(float(slope), len(idx), True)
    keep = y > 1e-300
    slope = np.polyfit(t[keep], np.log(y[keep]), 1)[0]
    return GrowthEstimate(float(slope), len(idx), False)


def growth_rate(traj: Trajectory) -> float:
    return growth_estimate(traj).rate


def dominant_period(traj: Trajectory, component: int = 0) -> float:
    """Mean spacing of parabola-refined maxima of one component over the trailing half."""
    half = len(traj.times) // 2
    y = traj.states[half:, component]
    idx = _local_maxima(y)
    idx = idx[(idx > 0) & (idx < len(y) - 1)]
    if len(idx) < 2:
        return float("nan")
    ym, y0, yp = y[idx - 1], y[idx], y[idx + 1]
    denom = ym - 2 * y0 + yp
    shift = np.where(denom != 0, 0.5 * (ym - yp) / np.where(denom != 0, denom, 1.0), 0.0)
    peaks = traj.times[half:][idx] + shift * traj.h
    return float(np.mean(np.diff(peaks)))


def export_trajectory(traj: Trajectory, path) -> None:
    """CSV with header ``t,r,j`` (or ``t,r,j,p``) at 17 significant digits."""
    path = Path(path)
    names = ["t", "r", "j", "p"][: traj.dimension + 1]
    data = np.column_stack([traj.times, traj.states]) if len(traj.times) else np.empty((0, len(names)))
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(names) + "\n")
            if len(data):
                np.savetxt(fh, data, fmt="%.17g", delimiter=",")
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
