import math

import numpy as np
import pytest

from ghch.coefficients import CoefficientSet, DegenerateWeightError, WeightField, compute_weight
from ghch.energy_monitor import EnergyTrace, energy, fit_lambda, trace
from ghch.linear_solver import IntegratorConfig
from ghch.picard import PicardConfig, solve_direct
from ghch.spectral_ops import Field, make_grid, sobolev_norm
from ghch.trajectory import Trajectory

TWO_PI = 2 * np.pi


def _weight(grid, value: float) -> WeightField:
    w = Field(grid, np.full(grid.N, value))
    return WeightField(w=w, w_t=Field.zeros(grid), w1=value, w2=value, variant="exact", t=0.0)


def _trace(times, Es) -> EnergyTrace:
    times = np.asarray(times, dtype=float)
    Es = np.asarray(Es, dtype=float)
    return EnergyTrace(times, Es, Es, math.nan, False, 1.0, 1.0)


def test_unit_weight_energy_is_the_sobolev_norm():
    grid = make_grid(32, TWO_PI)
    u = Field.from_function(grid, lambda x: np.sin(x) + 0.1 * np.cos(3 * x))
    assert energy(u, _weight(grid, 1.0), 3.0) == pytest.approx(sobolev_norm(u, 3.0), rel=1e-14)


def test_energy_of_zero():
    grid = make_grid(32, TWO_PI)
    assert energy(Field.zeros(grid), _weight(grid, 1.0), 3.0) == 0


def test_constant_weight_scales_energy():
    grid = make_grid(32, TWO_PI)
    u = Field.from_function(grid, np.cos)
    assert energy(u, _weight(grid, 2.0), 0.0) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-14)


def test_energy_is_homogeneous():
    grid = make_grid(32, TWO_PI)
    c = CoefficientSet.from_strings(a4="0.5*cos(x)", a5="2 + sin(x)", u0="0", c1=1)
    wf = compute_weight(c, 0.0, grid)
    u = Field.from_function(grid, lambda x: np.sin(2 * x) + 0.3)
    assert energy(-3.0 * u, wf, 3.0) == pytest.approx(3 * energy(u, wf, 3.0), rel=1e-13)


def test_fit_constant_trace():
    assert fit_lambda(_trace([0, 0.1, 0.2], [1, 1, 1])) == (0.0, True)


def test_fit_zero_trace():
    assert fit_lambda(_trace([0, 0.1, 0.2], [0, 0, 0])) == (0.0, True)


def test_fit_exponential_growth():
    times = np.linspace(0, 1, 101)
    lam, ok = fit_lambda(_trace(times, np.exp(2 * times)))
    assert ok
    assert lam == pytest.approx(2.0, rel=1e-2)
    assert lam >= 2.0 * (1 - 1e-9)


def test_fit_is_the_smallest_rate_on_the_grid():
    times = np.linspace(0, 1, 11)
    lam, _ = fit_lambda(_trace(times, np.exp(0.5 * times)))
    below = lam / 1.001
    assert np.any(np.exp(0.5 * times) > np.exp(below * times) * (1 + 1e-12))


def test_growth_from_zero_without_forcing_fails():
    lam, ok = fit_lambda(_trace([0, 0.1, 0.2], [0, 1e-3, 2e-3]))
    assert lam == math.inf
    assert not ok


def test_forcing_is_accounted_for():
    times = np.linspace(0, 1, 11)
    # Es = 2 t |f| exactly matches the forcing term at rate zero
    lam, ok = fit_lambda(_trace(times, 2 * times * 0.3), np.full(11, 0.3))
    assert ok
    assert lam == 0.0


def test_forcing_shape_mismatch():
    with pytest.raises(AssertionError):
        fit_lambda(_trace([0, 1], [1, 1]), [1.0, 2.0, 3.0])


def test_trace_of_zero_trajectory():
    grid = make_grid(32, TWO_PI)
    c = CoefficientSet.from_strings(a4="cos(x)", a5="1", u0="0", c1=0.5)
    traj = Trajectory.constant(Field.zeros(grid), 0.0, 1.0, 0.1)
    result = trace(traj, c)
    assert len(result) == 11
    assert np.all(result.Es == 0)
    assert result.lambda_fit == 0
    assert result.bound_ok
    assert result.sandwich_ok()


def test_trace_with_coefficients_defined_only_on_the_run():
    grid = make_grid(32, TWO_PI)
    c = CoefficientSet.from_strings(a5="1 + sqrt(t)*sqrt(1 - t)", u0="0", c1=0.5)
    traj = Trajectory.constant(Field.zeros(grid), 0.0, 1.0, 0.1)
    result = trace(traj, c)
    assert len(result) == 11
    assert result.bound_ok


def test_trace_stride():
    grid = make_grid(32, TWO_PI)
    c = CoefficientSet.from_strings(a5="1", u0="0")
    traj = Trajectory.constant(Field.from_function(grid, np.sin), 0.0, 1.0, 0.1)
    result = trace(traj, c, stride=3)
    np.testing.assert_allclose(result.times, [0.0, 0.3, 0.6, 0.9])


def test_trace_rejects_degenerate_weights():
    grid = make_grid(32, TWO_PI)
    c = CoefficientSet.from_strings(a5="0", u0="0")
    traj = Trajectory.constant(Field.zeros(grid), 0.0, 1.0, 0.5)
    with pytest.raises(DegenerateWeightError, match="t = 0"):
        trace(traj, c)


def test_dispersive_energy_is_conserved():
    grid = make_grid(64, TWO_PI)
    c = CoefficientSet.from_strings(
        a1="1", a3="0.3", a5="1", u0="0.3*cos(x) + 0.2*sin(2*x) + 0.1*cos(3*x + 1)"
    )
    cfg = PicardConfig(T=1.0, integrator=IntegratorConfig("ifrk4", 0.01))
    result = trace(solve_direct(c, grid, cfg), c)
    np.testing.assert_allclose(result.Es, result.Es[0], rtol=1e-8)
    assert result.lambda_fit <= 1e-6
    assert result.bound_ok
    assert result.sandwich_ok()


def test_sandwich_with_varying_weight():
    grid = make_grid(64, TWO_PI)
    c = CoefficientSet.from_strings(
        a1="0.1*cos(x)", a4="0.5*cos(x)", a5="2 + sin(x)", u0="0.1*cos(x) + 0.05*sin(2*x)", c1=0.5
    )
    cfg = PicardConfig(T=0.02, integrator=IntegratorConfig("ifrk4", 5e-5))
    result = trace(solve_direct(c, grid, cfg), c, stride=20)
    assert result.w1 < result.w2
    assert result.sandwich_ok()
    assert result.bound_ok
