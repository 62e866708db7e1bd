"""Least-squares circle/sphere fitting and multi-start Nelder-Mead."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
from scipy.optimize import minimize

from geom_core import InvalidInputError, PointD

logger = logging.getLogger(__name__)

MAX_GAUSS_NEWTON_STEPS = 50


@dataclass(frozen=True)
class LocusFit:
    fitted_center: PointD
    fitted_radius: float
    rms_residual: float
    max_residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "fitted_center": list(self.fitted_center.coords),
            "fitted_radius": self.fitted_radius,
            "rms_residual": self.rms_residual,
            "max_residual": self.max_residual,
            "iterations": self.iterations,
        }


def _kasa(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic fit: solve |p|^2 = 2 c.p + (r^2 - |c|^2) in the least-squares sense."""
    design = np.column_stack([2.0 * points, np.ones(len(points))])
    rhs = np.sum(points**2, axis=1)
    solution, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = solution[:-1]
    return center, float(np.sqrt(max(solution[-1] + center @ center, 0.0)))


def fit_sphere(points: Sequence[Sequence[float]] | np.ndarray) -> LocusFit:
    """Best circle (2D) or sphere (3D) through a point cloud.

    Kasa initialization refined by Gauss-Newton on the geometric residual
    |p - c| - r.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise InvalidInputError("Fitting needs an (N, 2) or (N, 3) array of points.")
    dim = arr.shape[1]
    if len(arr) < dim + 1:
        raise InvalidInputError(f"Need at least {dim + 1} points to fit a {'circle' if dim == 2 else 'sphere'}.")

    shift = arr.mean(axis=0)
    local = arr - shift
    center, radius = _kasa(local)
    scale = max(float(np.max(np.linalg.norm(local, axis=1))), 1e-300)

    steps = 0
    for steps in range(1, MAX_GAUSS_NEWTON_STEPS + 1):
        offsets = local - center
        dists = np.linalg.norm(offsets, axis=1)
        if np.any(dists == 0.0):
            break
        residuals = dists - radius
        jacobian = np.column_stack([-offsets / dists[:, None], -np.ones(len(local))])
        delta, *_ = np.linalg.lstsq(jacobian, -residuals, rcond=None)
        center = center + delta[:-1]
        radius = radius + delta[-1]
        if np.linalg.norm(delta) <= 1e-15 * scale:
            break

    residuals = np.linalg.norm(local - center, axis=1) - radius
    fit = LocusFit(
        fitted_center=PointD.from_vec(center + shift),
        fitted_radius=float(radius),
        rms_residual=float(np.sqrt(np.mean(residuals**2))),
        max_residual=float(np.max(np.abs(residuals))),
        iterations=steps,
    )
    logger.debug("Fitted radius %.17g after %d Gauss-Newton steps.", fit.fitted_radius, steps)
    return fit


fit_circle = fit_sphere


@dataclass(frozen=True)
class LocalRun:
    start: np.ndarray
    start_value: float
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MultistartResult:
    best: LocalRun
    runs: List[LocalRun]


def minimize_multistart(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[Sequence[float]],
    *,
    scale: float,
    xatol_rel: float = 1e-9,
    fatol: float = 1e-13,
    initial_step_rel: float = 0.05,
    maxiter: int = 20_000,
) -> MultistartResult:
    """Nelder-Mead from every start; the best run wins, ties go to the earliest start.

    Convergence is declared when the simplex shrinks below ``xatol_rel * scale``.
    """
    if not starts:
        raise InvalidInputError("At least one start point is required.")
    runs: List[LocalRun] = []
    for start in starts:
        x0 = np.asarray(start, dtype=float)
        simplex = np.vstack([x0] + [x0 + initial_step_rel * scale * np.eye(len(x0))[i] for i in range(len(x0))])
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": xatol_rel * scale,
                "fatol": fatol,
                "maxiter": maxiter,
                "maxfev": 2 * maxiter,
                "initial_simplex": simplex,
            },
        )
        runs.append(
            LocalRun(
                start=x0,
                start_value=float(objective(x0)),
                x=np.asarray(result.x, dtype=float),
                value=float(result.fun),
                iterations=int(result.nit),
                converged=bool(result.success),
            )
        )
    best = min(runs, key=lambda run: run.value)
    logger.debug("Multi-start minimum %.17g over %d starts.", best.value, len(runs))
    return MultistartResult(best=best, runs=runs)
