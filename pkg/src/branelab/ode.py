"""Fixed-step RK4 and adaptive embedded Runge-Kutta stepping on a uniform output grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import IntegrationError

METHODS = ("rk4_fixed", "rk45_adaptive", "dop853_adaptive")


@dataclass(frozen=True)
class IntegratorConfig:
    """``step`` is the RK4 step and the output sample spacing; ``tol`` drives adaptive methods."""

    method: str = "rk45_adaptive"
    step: float = 0.01
    tol: float = 1e-10
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator {self.method!r}")
        if not (self.step > 0 and self.tol > 0 and self.max_steps > 0):
            raise ValueError("step, tolerance and max_steps must be positive")


def output_grid(t_end: float, dt: float) -> np.ndarray:
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    n = max(1, int(math.ceil(t_end / dt - 1e-9)))
    return np.linspace(0.0, t_end, n + 1)


def _check(y, t):
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite state at t={t:.6g}")


def _rk4(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _hermite(t0, y0, f0, t1, y1, f1):
    h = t1 - t0

    def interp(t):
        s = (t - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    return interp


def integrate_ode(rhs: Callable, y0, t_end: float, cfg: IntegratorConfig,
                  event: Callable | None = None):
    """Integrate ``y' = rhs(t, y)`` and sample on a uniform grid.

    ``event(t, y)`` is a scalar whose first sign change (from its initial
    sign) stops the integration. Returns ``(t, Y, t_event)`` with the samples
    strictly before the event.
    """
    y0 = np.asarray(y0, dtype=float)
    grid = output_grid(t_end, cfg.step)
    out = [y0.copy()]
    t_event = None
    ev0 = None if event is None else np.sign(event(0.0, y0))

    def crossed(t, y):
        return event is not None and np.sign(event(t, y)) != ev0

    if cfg.method == "rk4_fixed":
        y = y0
        f = rhs(0.0, y)
        for i in range(1, grid.size):
            if i > cfg.max_steps:
                raise IntegrationError("max_steps exceeded")
            t0, t1 = grid[i - 1], grid[i]
            y1 = _rk4(rhs, t0, y, t1 - t0)
            _check(y1, t1)
            f1 = rhs(t1, y1)
            if crossed(t1, y1):
                interp = _hermite(t0, y, f, t1, y1, f1)
                t_event = optimize.brentq(lambda t: event(t, interp(t)), t0, t1, xtol=1e-15)
                break
            out.append(y1)
            y, f = y1, f1
        t = grid[: len(out)]
        return t, np.array(out), t_event

    # One solver per output interval: scipy clips the last step onto t_bound,
    # so samples are genuine solver nodes rather than dense interpolants.
    solver_cls = integrate.RK45 if cfg.method == "rk45_adaptive" else integrate.DOP853
    y = y0
    h = None
    steps = 0
    for k in range(1, grid.size):
        t0, t1 = grid[k - 1], grid[k]
        solver = solver_cls(rhs, t0, y, t1, rtol=cfg.tol, atol=cfg.tol,
                            first_step=None if h is None else min(h, t1 - t0))
        while solver.status == "running":
            msg = solver.step()
            steps += 1
            if solver.status == "failed":
                raise IntegrationError(f"step failure: {msg}")
            if steps > cfg.max_steps:
                raise IntegrationError("max_steps exceeded")
            _check(solver.y, solver.t)
            if crossed(solver.t, solver.y):
                dense = solver.dense_output()
                t_event = optimize.brentq(lambda t: event(t, dense(t)), solver.t_old, solver.t, xtol=1e-15)
                break
            if solver.status == "running" or solver.t_old is None or solver.t - solver.t_old >= 0.5 * (t1 - t0):
                h = solver.step_size
        if t_event is not None:
            break
        y = solver.y.copy()
        out.append(y)
    t = grid[: len(out)]
    return t, np.array(out), t_event
