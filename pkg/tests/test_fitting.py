import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fitting import fit_circle, fit_sphere, minimize_multistart
from geom_core import InvalidInputError


@st.composite
def circles(draw):
    cx = draw(st.floats(min_value=-5, max_value=5))
    cy = draw(st.floats(min_value=-5, max_value=5))
    r = draw(st.floats(min_value=0.1, max_value=10))
    return np.array([cx, cy]), r


@settings(max_examples=50, deadline=None)
@given(circles(), st.integers(min_value=3, max_value=40))
def test_exact_circle_points_are_recovered(circle, n):
    center, r = circle
    angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False) + 0.3
    pts = center + r * np.column_stack([np.cos(angles), np.sin(angles)])
    fit = fit_circle(pts)
    assert np.allclose(fit.fitted_center.vec, center, atol=1e-9 * max(1.0, r))
    assert math.isclose(fit.fitted_radius, r, rel_tol=1e-9)
    assert fit.max_residual < 1e-9 * max(1.0, r)


def test_sphere_fit_from_noisy_samples():
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(500, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    center = np.array([1.0, -2.0, 0.5])
    pts = center + 3.0 * dirs + rng.normal(scale=1e-4, size=(500, 3))
    fit = fit_sphere(pts)
    assert np.allclose(fit.fitted_center.vec, center, atol=1e-4)
    assert abs(fit.fitted_radius - 3.0) < 1e-4
    assert fit.rms_residual < 2e-4


def test_partial_arc_still_fits():
    angles = np.linspace(0.0, 0.5, 50)
    pts = np.column_stack([2.0 + 4.0 * np.cos(angles), -1.0 + 4.0 * np.sin(angles)])
    fit = fit_circle(pts)
    assert math.isclose(fit.fitted_radius, 4.0, rel_tol=1e-8)


def test_too_few_points_rejected():
    with pytest.raises(InvalidInputError):
        fit_circle([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(InvalidInputError):
        fit_sphere([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(InvalidInputError):
        fit_sphere(np.zeros((5, 4)))


def test_fit_to_dict_is_plain_data():
    fit = fit_circle([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    data = fit.to_dict()
    assert set(data) == {"fitted_center", "fitted_radius", "rms_residual", "max_residual", "iterations"}
    assert isinstance(data["fitted_center"], list)


def test_multistart_finds_global_minimum():
    def objective(x):
        # Two wells; the one at (2, 2) is deeper.
        return float(min(np.sum((x + 2.0) ** 2) + 1.0, np.sum((x - 2.0) ** 2)))

    result = minimize_multistart(objective, [[-2.5, -2.0], [1.5, 2.5]], scale=4.0)
    assert np.allclose(result.best.x, [2.0, 2.0], atol=1e-6)
    assert result.best.value < 1e-10
    assert len(result.runs) == 2


def test_multistart_ties_go_to_first_start():
    result = minimize_multistart(lambda x: float(np.sum(x**2)), [[1.0, 1.0], [1.0, 1.0]], scale=1.0)
    assert result.best is result.runs[0]


def test_multistart_needs_starts():
    with pytest.raises(InvalidInputError):
        minimize_multistart(lambda x: 0.0, [], scale=1.0)
