import numpy as np
import pytest

from ghch import energy_monitor, picard
from ghch.coefficients import CoefficientSet, ValidationError
from ghch.linear_solver import IntegratorConfig
from ghch.presets import get_preset
from ghch.spectral_ops import make_grid

TWO_PI = 2 * np.pi


def _preset_problem(name: str):
    scenario = get_preset(name).scenario()
    try:
        return scenario.coefficient_set(), scenario.make_grid(), scenario.picard_config()
    finally:
        scenario.close()


def _config(T: float = 0.1, dt: float = 0.01, **kwargs) -> picard.PicardConfig:
    return picard.PicardConfig(T=T, integrator=IntegratorConfig("ifrk4", dt), **kwargs)


def test_zero_data_converges_immediately():
    c = CoefficientSet.from_strings(a5="1", u0="0", a1="u")
    result = picard.run(c, make_grid(32, TWO_PI), _config())
    assert result.converged
    assert result.n_final == 1
    assert result.distances == [0.0]
    assert np.all(result.limit.values == 0)


def test_solution_independent_coefficients_converge_in_two_steps():
    c = CoefficientSet.from_strings(a5="1", a1="1 + 0.1*cos(x)", u0="0.1*cos(x)")
    result = picard.run(c, make_grid(32, TWO_PI), _config())
    assert result.converged
    assert result.n_final == 2
    assert result.distances[0] > 0
    assert result.distances[1] == 0


def test_iteration_cap():
    c, grid, cfg = _preset_problem("sweep_small")
    result = picard.run(c, grid, picard.PicardConfig(tol=1e-30, max_iter=2, T=cfg.T, integrator=cfg.integrator))
    assert not result.converged
    assert result.n_final == 2
    assert len(result.iterates_kept) == 2


def test_validation_is_enforced():
    c, grid, cfg = _preset_problem("kdv")
    with pytest.raises(ValidationError):
        picard.run(c, grid, cfg)
    with pytest.raises(ValidationError):
        picard.solve_direct(c, grid, cfg)


def test_lenient_run_outside_the_hypotheses():
    c, grid, cfg = _preset_problem("kdv")
    result = picard.run(c, grid, cfg, strict=False)
    assert result.blowup_time is None
    assert result.limit.K == 100
    assert result.distances[-1] < result.distances[0]


def test_small_grid_contraction():
    preset = get_preset("sweep_small")
    c, grid, cfg = _preset_problem("sweep_small")
    result = picard.run(c, grid, cfg)
    assert result.converged
    assert result.n_final <= cfg.max_iter
    assert result.contracting
    assert all(r < preset.contraction_ratio for r in result.ratios)
    direct = picard.solve_direct(c, grid, cfg)
    assert picard.sup_distance(result.limit, direct, cfg.s) <= 1e-6


def test_sup_distance():
    c, grid, cfg = _preset_problem("sweep_small")
    traj = picard.solve_direct(c, grid, cfg)
    assert picard.sup_distance(traj, traj, 3.0) == 0
    shifted = type(traj)(grid, traj.t0, traj.dt, traj.values + np.cos(grid.x))
    # |cos x|_{H^s} = sqrt(pi) 2^{s/2}
    assert picard.sup_distance(traj, shifted, 3.0) == pytest.approx(np.sqrt(np.pi) * 2**1.5, rel=1e-12)


def test_residual_shrinks_under_refinement():
    c, grid, cfg = _preset_problem("sweep_small")
    coarse = picard.solve_direct(c, grid, cfg)
    fine_cfg = picard.PicardConfig(
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        T=cfg.T,
        integrator=IntegratorConfig(cfg.integrator.scheme, cfg.integrator.dt / 2),
        s=cfg.s,
    )
    fine = picard.solve_direct(c, grid, fine_cfg)
    assert picard.pde_residual(c, fine) < 0.5 * picard.pde_residual(c, coarse)


@pytest.mark.slow
def test_picard_contraction_and_gronwall_bound():
    preset = get_preset("picard_small")
    c, grid, cfg = _preset_problem("picard_small")
    assert grid.N == 128
    result = picard.run(c, grid, cfg)
    assert result.converged
    assert result.n_final <= 12
    assert all(r < 1 for r in result.ratios)
    assert all(r < preset.contraction_ratio for r in result.ratios)

    direct = picard.solve_direct(c, grid, cfg)
    assert picard.sup_distance(result.limit, direct, 3.0) <= 1e-6

    trace = energy_monitor.trace(result.limit, c, 3.0, stride=10)
    assert np.isfinite(trace.lambda_fit)
    assert trace.bound_ok
    assert trace.lambda_fit <= preset.lambda_ceiling
    assert trace.sandwich_ok()
