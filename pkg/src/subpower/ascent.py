"""Projected gradient ascent on the sphere.

The subspace functional is maximized with the update
``x <- (x + gamma * P(x^n).x^(n-1)) / ||...||``.  A backtracking option
halves the step whenever the objective would decrease (the admissible
constant-step bound is not restated here), which makes the objective
history nondecreasing unconditionally.  The same scheme applied to the
raw tensor contraction ``<T, x^(x m)>`` serves as the power-method
baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStepError, NoComponentFoundError
from .seeding import as_rng, unit_sphere
from .subspace import TensorSubspace, _check_unit
from .tensors import SymTensor, vec_power

__all__ = [
    "AscentConfig",
    "AscentTrace",
    "spm_step",
    "run_spm_ascent",
    "solve_component",
    "run_pm_ascent",
]

_MIN_STEP = 1e-18
_DEGENERATE = 1e-14


@dataclass(frozen=True)
class AscentConfig:
    """Step size, stopping rules and restart policy.

    ``gamma=None`` resolves to ``1/(2n)`` for the subspace functional and
    ``1/m`` for the power-method baseline.  ``accept_tau`` is the
    objective value a trace must reach to be accepted by
    ``solve_component`` (0 accepts anything).
    """

    gamma: float | None = None
    max_iters: int = 5000
    x_tol: float = 1e-12
    grad_tol: float = 1e-10
    accept_tau: float = 0.5
    max_restarts: int = 50
    backtracking: bool = True

    def __post_init__(self):
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.x_tol <= 0 or self.grad_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 <= self.accept_tau <= 1.0:
            raise ValueError("accept_tau must lie in [0, 1]")
        if self.max_iters < 1 or self.max_restarts < 0:
            raise ValueError("iteration counts must be positive")


@dataclass
class AscentTrace:
    """Outcome of one ascent run."""

    final_x: np.ndarray
    final_objective: float
    iterations: int
    converged: bool
    restarts_used: int = 0
    objective_history: list[float] = field(default_factory=list)


def spm_step(s: TensorSubspace, x, gamma: float) -> np.ndarray:
    """One projected ascent update; returns the next unit iterate."""
    x = _check_unit(x)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    w = s.basis.T @ vec_power(x, s.half_order)
    pull = (s.basis @ w).reshape(s.dim, -1) @ vec_power(x, s.half_order - 1)
    y = x + gamma * pull
    norm = np.linalg.norm(y)
    if norm < _DEGENERATE:
        raise DegenerateStepError("ascent update vanished")
    return y / norm


def run_spm_ascent(s: TensorSubspace, x0, cfg: AscentConfig) -> AscentTrace:
    """Iterate the subspace update from ``x0`` until a stopping rule fires.

    Stops on iterate change below ``x_tol``, Riemannian gradient norm
    below ``grad_tol``, or ``max_iters`` (the last leaves
    ``converged=False``).
    """
    n, d = s.half_order, s.dim
    gamma0 = cfg.gamma if cfg.gamma is not None else 1.0 / (2 * n)

    def evaluate(x):
        w = s.basis.T @ vec_power(x, n)
        return w, float(w @ w)

    x = _check_unit(x0)
    w, f = evaluate(x)
    history = [f]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        pull = (s.basis @ w).reshape(d, -1) @ vec_power(x, n - 1)
        grad = 2 * n * (pull - f * x)
        if np.linalg.norm(grad) <= cfg.grad_tol:
            converged = True
            iterations -= 1
            break
        gamma = gamma0
        while True:
            y = x + gamma * pull
            norm = np.linalg.norm(y)
            if norm < _DEGENERATE:
                raise DegenerateStepError("ascent update vanished")
            x_new = y / norm
            w_new, f_new = evaluate(x_new)
            if not cfg.backtracking or f_new >= f:
                break
            gamma /= 2
            if gamma < _MIN_STEP:
                x_new, w_new, f_new = x, w, f
                break
        dx = np.linalg.norm(x_new - x)
        x, w, f = x_new, w_new, f_new
        history.append(f)
        if dx <= cfg.x_tol:
            converged = True
            break
    return AscentTrace(
        final_x=x,
        final_objective=f,
        iterations=iterations,
        converged=converged,
        objective_history=history,
    )


def solve_component(s: TensorSubspace, cfg: AscentConfig, rng) -> AscentTrace:
    """Ascend from uniform starts until a trace clears ``accept_tau``.

    Redraws the start up to ``max_restarts`` times; a degenerate step
    counts as a failed attempt.  Raises ``NoComponentFoundError`` with
    the best trace attached when every attempt falls short.
    """
    rng = as_rng(rng)
    best: AscentTrace | None = None
    for attempt in range(cfg.max_restarts + 1):
        x0 = unit_sphere(rng, s.dim)
        try:
            trace = run_spm_ascent(s, x0, cfg)
        except DegenerateStepError:
            continue
        trace.restarts_used = attempt
        if trace.final_objective >= cfg.accept_tau:
            return trace
        if best is None or trace.final_objective > best.final_objective:
            best = trace
    raise NoComponentFoundError(
        f"no start reached objective {cfg.accept_tau:g} "
        f"in {cfg.max_restarts + 1} attempts",
        best_trace=best,
    )


def run_pm_ascent(t: SymTensor, x0, cfg: AscentConfig) -> AscentTrace:
    """Power-method baseline: projected ascent on ``f(x) = <T, x^(x m)>``."""
    m, d = t.order, t.dim
    gamma0 = cfg.gamma if cfg.gamma is not None else 1.0 / m
    flat = t.data.reshape(d, -1)

    def evaluate(x):
        v = flat @ vec_power(x, m - 1)
        return v, float(v @ x)

    x = _check_unit(x0)
    v, f = evaluate(x)
    history = [f]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        grad = m * (v - f * x)
        if np.linalg.norm(grad) <= cfg.grad_tol:
            converged = True
            iterations -= 1
            break
        gamma = gamma0
        while True:
            y = x + gamma * m * v
            norm = np.linalg.norm(y)
            if norm < _DEGENERATE:
                raise DegenerateStepError("ascent update vanished")
            x_new = y / norm
            v_new, f_new = evaluate(x_new)
            if not cfg.backtracking or f_new >= f:
                break
            gamma /= 2
            if gamma < _MIN_STEP:
                x_new, v_new, f_new = x, v, f
                break
        dx = np.linalg.norm(x_new - x)
        x, v, f = x_new, v_new, f_new
        history.append(f)
        if dx <= cfg.x_tol:
            converged = True
            break
    return AscentTrace(
        final_x=x,
        final_objective=f,
        iterations=iterations,
        converged=converged,
        objective_history=history,
    )
