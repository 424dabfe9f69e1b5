"""Configuration and reporting shared by the iterative solvers."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = ["SolverConfig", "SolveReport", "DescentTrace", "run_descent"]


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules and safeguards for the fixed-point iterations.

    Attributes
    ----------
    delta : float
        Threshold on the update norm ``||a_{k+1} - a_k||``.
    max_iterations : int
    grad_tol : float
        Gradient norm required in addition to ``delta`` (``None`` disables it).
    damping : bool
        Backtrack steps that increase the objective.
    max_backtracks : int
        Step halvings tried before accepting the step anyway.
    ascent_tol : float
        Objective increase tolerated without backtracking.
    """

    delta: float = 1e-10
    max_iterations: int = 500
    grad_tol: float | None = 1e-8
    damping: bool = True
    max_backtracks: int = 20
    ascent_tol: float = 1e-12

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be an integer >= 1, got {self.max_iterations}")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be >= 0")


@dataclass
class SolveReport:
    """What happened during a solve; ``status`` is one of
    ``"converged"``, ``"max-iter"``, ``"stagnated"`` or ``"infeasible"``."""

    status: str
    iterations: int
    step_norm: float
    gradient_norm: float
    moment_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma2_trajectory: list = field(default_factory=list)
    objective_trajectory: list = field(default_factory=list)
    backtracks: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def max_moment_residual(self) -> float:
        r = np.asarray(self.moment_residual)
        return float(np.abs(r).max()) if r.size else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["moment_residual"] = np.asarray(self.moment_residual).tolist()
        d["sigma2_trajectory"] = [np.asarray(s).tolist() for s in self.sigma2_trajectory]
        d["objective_trajectory"] = [float(v) for v in self.objective_trajectory]
        return d


@dataclass
class DescentTrace:
    """Raw outcome of :func:`run_descent`; solvers wrap it in a :class:`SolveReport`."""

    x: np.ndarray
    status: str
    iterations: int
    step_norm: float
    gradient_norm: float
    sigma2_trajectory: list
    objective_trajectory: list
    backtracks: int


def run_descent(x, raw_step, project, objective, gradient_norm, config: SolverConfig,
                normalize=None, stagnation_window: int | None = None) -> DescentTrace:
    """Projected fixed-point iteration with monotone backtracking.

    Parameters
    ----------
    x : ndarray
        Starting point (already feasible).
    raw_step : callable
        ``x -> (x_raw, sigma2)``.
    project : callable
        Maps a raw iterate back to the feasible set.
    objective : callable
        Scale-free merit function used for backtracking.
    gradient_norm : callable
        Stationarity measure checked once the step is below ``config.delta``.
    normalize : callable, optional
        Canonical representative used for step lengths and line searches
        (the iteration is equivariant under rescaling).
    stagnation_window : int, optional
        Stop with status ``"stagnated"`` when neither the merit function nor
        the step length has improved over this many iterations.
    """
    normalize = normalize or (lambda v: v)
    sig_traj, obj_traj = [], []
    backtracks = 0
    step_norm = np.inf
    grad = np.inf
    f_cur = objective(x)
    obj_traj.append(f_cur)
    best, best_step, since_best = f_cur, np.inf, 0
    tol = lambda f: config.ascent_tol * max(1.0, abs(f))  # noqa: E731
    for k in range(config.max_iterations + 1):
        x_raw, s2 = raw_step(x)
        sig_traj.append(s2)
        x_new = project(x_raw)
        f_new = objective(x_new)
        if config.damping and f_new > f_cur + tol(f_cur):
            x_m = normalize(x)
            d = normalize(x_new) - x_m
            t = 1.0
            for _ in range(config.max_backtracks):
                t *= 0.5
                backtracks += 1
                trial = project(x_m + t * d)
                f_trial = objective(trial)
                if f_trial <= f_cur + tol(f_cur):
                    x_new, f_new = trial, f_trial
                    break
        step_norm = float(np.linalg.norm(normalize(x_new) - normalize(x)))
        x, f_cur = x_new, f_new
        obj_traj.append(f_cur)
        improved = False
        if f_cur < best - tol(best):
            best, improved = f_cur, True
        if step_norm < best_step:
            best_step, improved = step_norm, True
        since_best = 0 if improved else since_best + 1
        if step_norm <= config.delta:
            grad = gradient_norm(x)
            if config.grad_tol is None or grad <= config.grad_tol:
                return DescentTrace(x, "converged", k, step_norm, grad, sig_traj, obj_traj, backtracks)
        if stagnation_window and since_best >= stagnation_window:
            return DescentTrace(x, "stagnated", k + 1, step_norm, gradient_norm(x),
                                sig_traj, obj_traj, backtracks)
    return DescentTrace(x, "max-iter", config.max_iterations, step_norm, gradient_norm(x),
                        sig_traj, obj_traj, backtracks)
