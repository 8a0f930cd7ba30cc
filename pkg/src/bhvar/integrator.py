"""Fixed-step explicit integrators with observable monitoring."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """State became non-finite; ``last_good_time`` and the partial trajectory are attached."""

    def __init__(self, msg, last_good_time, trajectory):
        super().__init__(msg)
        self.last_good_time = last_good_time
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    t_end: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.method not in STEPPERS:
            raise ValueError(f"unknown method {self.method!r}; choose from {sorted(STEPPERS)}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")

    def step_sizes(self) -> list[float]:
        n = int(np.floor(self.t_end / self.dt + 1e-9))
        steps = [self.dt] * n
        rest = self.t_end - n * self.dt
        if rest > 1e-12 * max(1.0, self.t_end):
            steps.append(rest)
        return steps


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    monitors: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.snapshots[-1]

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.monitors[name])

    def _record(self, t, y, monitors):
        self.times.append(t)
        self.snapshots.append(y.copy())
        for name, fn in monitors.items():
            self.monitors.setdefault(name, []).append(fn(y))


def rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def midpoint_step(rhs, y, h):
    return y + h * rhs(y + 0.5 * h * rhs(y))


STEPPERS = {"rk4": rk4_step, "midpoint": midpoint_step}


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    initial: np.ndarray,
    config: IntegratorConfig,
    monitors: Mapping[str, Callable] | None = None,
) -> Trajectory:
    """Advance an autonomous ODE ``dy/dt = rhs(y)`` from ``t = 0`` to ``config.t_end``.

    Monitors are evaluated on the initial state, every ``record_every`` steps
    and on the final state. No renormalization is applied.
    """
    monitors = dict(monitors or {})
    step = STEPPERS[config.method]
    y = np.array(initial, dtype=complex)
    if not np.all(np.isfinite(rhs(y))):
        raise ValueError("rhs is not finite on the initial state")
    traj = Trajectory()
    traj._record(0.0, y, monitors)
    steps = config.step_sizes()
    t = 0.0
    for i, h in enumerate(steps, start=1):
        y_new = step(rhs, y, h)
        # times as i*dt rather than accumulated sums keep the grid reproducible
        t_new = i * config.dt if h == config.dt else config.t_end
        if not np.all(np.isfinite(y_new)):
            raise IntegrationError(f"non-finite state after t={t:.6g}", t, traj)
        y, t = y_new, t_new
        if i % config.record_every == 0 or i == len(steps):
            traj._record(t, y, monitors)
    log.debug("integrated %d steps to t=%g", len(steps), t)
    return traj
