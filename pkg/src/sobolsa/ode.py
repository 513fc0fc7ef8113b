"""Dynamical models: the discrete logistic map and the spruce budworm system."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np
from scipy.integrate import odeint

from .errors import ConfigError, DivergenceError, DomainError

BUDWORM_STATES = ("B", "S", "E")
BUDWORM_INITIAL = (1.0, 0.07, 1.0)


def logistic_map(r, K, N0, steps: int = 20):
    """Iterate ``X <- X + r X (1 - X / K)`` ``steps + 1`` times from ``N0``.

    Arguments broadcast, so a whole sample can be run at once.
    """
    if steps < 0:
        raise DomainError("steps must be >= 0")
    r, K = np.asarray(r, dtype=float), np.asarray(K, dtype=float)
    x = np.asarray(N0, dtype=float) + 0 * r + 0 * K
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps + 1):
            x = x + r * x * (1 - x / K)
    return x if x.ndim else float(x)


@dataclass(frozen=True)
class TimeGrid:
    """Integration grid and the subset of times at which states are kept."""

    times: np.ndarray
    time_output: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        out = np.asarray(self.time_output, dtype=float)
        if times.ndim != 1 or times.size < 1 or out.size < 1:
            raise ConfigError("times and time_output must be non-empty vectors")
        if np.any(np.diff(times) <= 0):
            raise ConfigError("times must be strictly increasing")
        if not np.all(np.isin(out, times)):
            raise ConfigError("every time_output value must lie on the integration grid")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "time_output", out)

    @classmethod
    def regular(cls, start: float, stop: float, step: float, output=None) -> "TimeGrid":
        n = int(round((stop - start) / step))
        times = start + step * np.arange(n + 1)
        return cls(times, times if output is None else np.asarray(output, dtype=float))

    @property
    def output_index(self) -> np.ndarray:
        return np.searchsorted(self.times, self.time_output)


def rk4_integrate(derivative: Callable, state0, grid: TimeGrid, params=None) -> np.ndarray:
    """Classical fixed-step Runge-Kutta on ``grid.times``.

    ``derivative(t, state, params)`` returns the time derivative. The state
    may carry trailing batch dimensions; rows of the result follow
    ``grid.time_output``.
    """
    y = np.array(state0, dtype=float)
    times = grid.times
    keep = set(grid.output_index.tolist())
    rows = []
    if 0 in keep:
        rows.append(y.copy())
    for j in range(1, times.size):
        t, dt = times[j - 1], times[j] - times[j - 1]
        k1 = derivative(t, y, params)
        k2 = derivative(t + dt / 2, y + dt / 2 * k1, params)
        k3 = derivative(t + dt / 2, y + dt / 2 * k2, params)
        k4 = derivative(t + dt, y + dt * k3, params)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"non-finite state at t = {times[j]:g}", time=float(times[j]))
        if j in keep:
            rows.append(y.copy())
    return np.array(rows)


@dataclass(frozen=True)
class BudwormParams:
    r_b: float = 1.56
    K: float = 227.5
    beta: float = 31600.0
    alpha: float = 1.5
    r_s: float = 0.1225
    K_s: float = 24720.0
    K_e: float = 1.1
    r_e: float = 0.96
    P: float = 0.001725
    T_e: float = 0.8

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise DomainError(f"budworm parameter {f.name} must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])


BUDWORM_PARAMS = tuple(f.name for f in fields(BudwormParams))
# uniform ranges per parameter
BUDWORM_RANGES = {
    "r_b": (1.52, 1.6), "K": (100.0, 355.0), "beta": (20000.0, 43200.0), "alpha": (1.0, 2.0),
    "r_s": (0.095, 0.15), "K_s": (24000.0, 25440.0), "K_e": (1.0, 1.2), "r_e": (0.92, 1.0),
    "P": (0.0015, 0.00195), "T_e": (0.7, 0.9),
}


def _budworm_rates(state, p):
    B, S, E = state
    r_b, K, beta, alpha, r_s, K_s, K_e, r_e, P, T_e = p
    ratio = (T_e**2 + E**2) / E**2
    dB = r_b * B * (1 - B / (K * S) * ratio) - beta * B**2 / ((alpha * S) ** 2 + B**2)
    dS = r_s * S * (1 - S * K_e / (E * K_s))
    dE = r_e * E * (1 - E / K_e) - P * (B / S) * E**2 / (T_e**2 + E**2)
    return dB, dS, dE


def budworm_derivative(state, params: BudwormParams | np.ndarray) -> np.ndarray:
    """Time derivative of (B, S, E) for budworm, foliage surface and foliage condition."""
    state = np.asarray(state, dtype=float)
    if np.any(state[1] <= 0) or np.any(state[2] <= 0):
        raise DomainError("budworm derivative needs S > 0 and E > 0")
    p = params.as_array() if isinstance(params, BudwormParams) else np.asarray(params, dtype=float)
    return np.array(_budworm_rates(state, p))


def _budworm_jacobian(state, p):
    B, S, E = state
    r_b, K, beta, alpha, r_s, K_s, K_e, r_e, P, T_e = p
    ratio = (T_e**2 + E**2) / E**2
    den = (alpha * S) ** 2 + B**2
    a2s2 = (alpha * S) ** 2
    dratio_dE = -2 * T_e**2 / E**3
    g = E**2 / (T_e**2 + E**2)
    dg_dE = 2 * E * T_e**2 / (T_e**2 + E**2) ** 2
    return np.array([
        [r_b - 2 * r_b * B * ratio / (K * S) - 2 * beta * B * a2s2 / den**2,
         r_b * B**2 * ratio / (K * S**2) + 2 * beta * B**2 * alpha**2 * S / den**2,
         -r_b * B**2 / (K * S) * dratio_dE],
        [0.0, r_s - 2 * r_s * S * K_e / (E * K_s), r_s * S**2 * K_e / (E**2 * K_s)],
        [-P * g / S, P * B * g / S**2, r_e - 2 * r_e * E / K_e - P * (B / S) * dg_dE],
    ])


def budworm_trajectory(params: BudwormParams | np.ndarray, time_output,
                       state0=BUDWORM_INITIAL, rtol: float = 1e-6, atol: float = 1e-6) -> np.ndarray:
    """States ``(B, S, E)`` at ``time_output``, integrating from t = 0.

    The system is stiff while the foliage is small (rates near 1e5 per
    month), so a stiff adaptive LSODA solver is used. It always reports on
    the same monthly grid (plus any off-grid output times), so a subset of
    times gives exactly the rows of a longer run.
    """
    p = params.as_array() if isinstance(params, BudwormParams) else np.asarray(params, dtype=float)
    wanted = np.asarray(time_output, dtype=float)
    if wanted.size == 0 or np.any(wanted < 0):
        raise ConfigError("time_output must be non-empty and non-negative")
    t = np.union1d(np.arange(0.0, np.ceil(wanted.max()) + 1), wanted)
    sol, info = odeint(lambda y, _t: _budworm_rates(y, p), state0, t,
                       Dfun=lambda y, _t: _budworm_jacobian(y, p), rtol=rtol, atol=atol,
                       mxstep=100000, full_output=True)
    if info["message"] != "Integration successful." or not np.all(np.isfinite(sol)):
        bad = np.flatnonzero(~np.all(np.isfinite(sol), axis=1))
        when = float(t[bad[0]]) if bad.size else None
        raise DivergenceError(f"budworm integration failed: {info['message']}", time=when)
    return sol[np.searchsorted(t, wanted)]


def _trajectory_block(args):
    rows, time_output, state0 = args
    return np.stack([budworm_trajectory(p, time_output, state0) for p in rows])


def budworm_sample(values: np.ndarray, time_output, state0=BUDWORM_INITIAL,
                   workers: int = 1) -> np.ndarray:
    """Trajectories for every parameter row: shape ``(n_rows, n_times, 3)``.

    Rows are independent; ``workers > 1`` spreads contiguous chunks over
    processes and reassembles them in row order.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(BUDWORM_PARAMS):
        raise ConfigError(f"budworm rows need {len(BUDWORM_PARAMS)} parameter columns")
    time_output = np.asarray(time_output, dtype=float)
    if workers <= 1 or values.shape[0] < 2 * workers:
        return _trajectory_block((values, time_output, state0))
    from concurrent.futures import ProcessPoolExecutor

    chunks = np.array_split(values, workers * 4)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_trajectory_block, [(c, time_output, state0) for c in chunks]))
    return np.concatenate(parts)


def trajectory_table(trajectories: np.ndarray, time_output, states=BUDWORM_STATES):
    """Flatten ``(n_rows, n_times, n_states)`` into columns ``row, time, <states>``."""
    import pandas as pd

    n_rows, n_times, n_states = trajectories.shape
    frame = pd.DataFrame({
        "row": np.repeat(np.arange(n_rows), n_times),
        "time": np.tile(np.asarray(time_output, dtype=float), n_rows),
    })
    for j, name in enumerate(states):
        frame[name] = trajectories[:, :, j].reshape(-1)
    return frame
