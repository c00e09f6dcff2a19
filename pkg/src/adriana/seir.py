"""Deterministic SEIR model integrated with explicit Euler steps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StepProducedNaN, ValidationError, ZeroGamma

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeirParams:
    beta: float
    sigma: float
    gamma: float
    population: float
    dt: float = 1.0

    def __post_init__(self):
        if min(self.beta, self.sigma, self.gamma) < 0:
            raise ValidationError("rates must be non-negative")
        if not self.population > 0:
            raise ValidationError("population must be positive")
        if not 0 < self.dt <= 1:
            raise ValidationError("dt must lie in (0, 1]")
        steps = 1.0 / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValidationError("1/dt must be an integer so daily samples land on steps")


@dataclass(frozen=True)
class SeirState:
    s: float
    e: float
    i: float
    r: float
    t: float = 0.0

    @property
    def total(self) -> float:
        return self.s + self.e + self.i + self.r

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.e, self.i, self.r])

    @classmethod
    def seeded(cls, population: float, exposed: float = 0.0, infectious: float = 1.0,
               recovered: float = 0.0) -> "SeirState":
        return cls(population - exposed - infectious - recovered, exposed, infectious, recovered)


@dataclass
class SeirTrajectory:
    """Daily samples; ``deficits`` records any mass removed by negative clamping."""

    t: np.ndarray
    s: np.ndarray
    e: np.ndarray
    i: np.ndarray
    r: np.ndarray
    params: SeirParams
    deficits: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    def state(self, k: int) -> SeirState:
        return SeirState(self.s[k], self.e[k], self.i[k], self.r[k], self.t[k])

    def peak(self) -> tuple[int, float]:
        k = int(np.argmax(self.i))
        return k, float(self.i[k])


def derivatives(state: SeirState, params: SeirParams) -> tuple[float, float, float, float]:
    infection = params.beta * state.s * state.i / params.population
    incubation = params.sigma * state.e
    recovery = params.gamma * state.i
    return -infection, infection - incubation, incubation - recovery, recovery


def _rates(y: np.ndarray, beta, sigma, gamma, population) -> np.ndarray:
    """Right-hand side on stacked states of shape (..., 4); parameters broadcast."""
    s, e, i = y[..., 0], y[..., 1], y[..., 2]
    infection = beta * s * i / population
    incubation = sigma * e
    recovery = gamma * i
    return np.stack([-infection, infection - incubation, incubation - recovery, recovery], axis=-1)


def _step(state: SeirState, params: SeirParams, deficits: list | None = None) -> SeirState:
    ds, de, di, dr = derivatives(state, params)
    h = params.dt
    new = np.array([state.s + h * ds, state.e + h * de, state.i + h * di, state.r + h * dr])
    if not np.all(np.isfinite(new)):
        raise StepProducedNaN(f"non-finite state at t={state.t + h}")
    if np.any(new < 0):
        deficit = float(-new[new < 0].sum())
        logger.warning("clamped negative compartments at t=%g (deficit %g)", state.t + h, deficit)
        if deficits is not None:
            deficits.append((state.t + h, deficit))
        new = np.maximum(new, 0.0)
    return SeirState(*(float(v) for v in new), t=state.t + h)


def euler_step(state: SeirState, params: SeirParams) -> SeirState:
    return _step(state, params)


def simulate(initial: SeirState, params: SeirParams, horizon_days: int) -> SeirTrajectory:
    if horizon_days < 1:
        raise ValidationError("horizon must be at least one day")
    per_day = int(round(1.0 / params.dt))
    out = np.empty((horizon_days + 1, 4))
    out[0] = initial.as_array()
    deficits: list = []
    state = replace(initial, t=0.0)
    for day in range(1, horizon_days + 1):
        for _ in range(per_day):
            state = _step(state, params, deficits)
        # re-anchor time to kill float drift from repeated dt additions
        state = replace(state, t=float(day))
        out[day] = state.as_array()
    return SeirTrajectory(np.arange(horizon_days + 1, dtype=float), *out.T, params=params,
                          deficits=deficits)


def simulate_ensemble(initial, beta, sigma, gamma, population, dt: float, n_steps: int):
    """Advance many independent SEIR systems in lockstep.

    ``initial`` has shape (m, 4); rates and population broadcast over m. Returns the
    post-step states, shape (n_steps + 1, m, 4), and the largest relative
    conservation error |sum - N| / N observed before any clamping.
    """
    y = np.array(initial, dtype=float)
    beta, sigma, gamma, pop = (np.asarray(a, dtype=float) for a in (beta, sigma, gamma, population))
    out = np.empty((n_steps + 1,) + y.shape)
    out[0] = y
    worst = 0.0
    for k in range(1, n_steps + 1):
        y = y + dt * _rates(y, beta, sigma, gamma, pop)
        if not np.all(np.isfinite(y)):
            raise StepProducedNaN(f"non-finite state at step {k}")
        worst = max(worst, float(np.max(np.abs(y.sum(axis=-1) - pop) / pop)))
        np.maximum(y, 0.0, out=y)
        out[k] = y
    return out, worst


def r0(params: SeirParams) -> float:
    if params.gamma == 0:
        raise ZeroGamma("R0 undefined for gamma = 0")
    return params.beta / params.gamma


def incubation_period(params: SeirParams) -> float:
    return math.inf if params.sigma == 0 else 1.0 / params.sigma


def trajectory_csv(traj: SeirTrajectory) -> str:
    lines = ["day,s,e,i,r"]
    cols = [np.asarray(c, dtype=float).tolist() for c in (traj.s, traj.e, traj.i, traj.r)]
    for k in range(len(traj)):
        lines.append(f"{int(traj.t[k])}," + ",".join(repr(c[k]) for c in cols))
    return "\n".join(lines) + "\n"
