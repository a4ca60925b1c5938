"""Picard iteration for the nonlinear evolution.

Iterate 0 is ``u0`` held constant in time; iterate ``n+1`` solves the
linear problem with coefficients frozen along iterate ``n``. All
iterates share one time grid. :func:`solve_direct` integrates the
nonlinear equation directly and serves as the reference the Picard
limit is compared against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.fft

from ghch.coefficients import freeze, validate
from ghch.linear_solver import IntegratorConfig, integrate, solve_linear, spatial_operator
from ghch.spectral_ops import Field, sobolev_norms
from ghch.trajectory import Trajectory

if TYPE_CHECKING:
    from ghch.coefficients import CoefficientSet
    from ghch.spectral_ops import Grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-9
    max_iter: int = 12
    T: float = 1.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    s: float = 3.0

    def __post_init__(self) -> None:
        assert self.tol > 0
        assert self.max_iter >= 1
        assert self.T > 0


@dataclass(frozen=True, eq=False)
class PicardResult:
    iterates_kept: tuple[Trajectory, ...]
    distances: list[float]
    converged: bool
    n_final: int
    blowup_time: float | None = None

    @property
    def limit(self) -> Trajectory:
        return self.iterates_kept[-1]

    @property
    def ratios(self) -> list[float]:
        d = self.distances
        return [d[n + 1] / d[n] if d[n] > 0 else float("nan") for n in range(len(d) - 1)]

    @property
    def contracting(self) -> bool:
        """Every ratio of consecutive distances is below one."""
        return all(r < 1 for r in self.ratios)


def sup_distance(p: Trajectory, q: Trajectory, s: float) -> float:
    """sup over the stored times of |p(t) - q(t)|_{H^s}."""
    assert p.grid == q.grid
    assert p.values.shape == q.values.shape
    return float(np.max(sobolev_norms(p.values - q.values, s, p.grid)))


def _check_hypotheses(c: CoefficientSet, grid: Grid, T: float, strict: bool) -> None:
    report = validate(c, grid, np.linspace(0, T, 5))
    if report.ok:
        return
    if strict:
        report.raise_for_failures()
    log.warning("running outside the well-posedness hypotheses: %s", report)


def run(
    c: CoefficientSet,
    grid: Grid,
    cfg: PicardConfig,
    strict: bool = True,
    progress: bool = False,
) -> PicardResult:
    """Run the Picard iteration up to ``cfg.tol`` or ``cfg.max_iter`` steps.

    Parameters
    ----------
    c : CoefficientSet
        Problem data.
    grid : Grid
        Spatial grid.
    cfg : PicardConfig
        Tolerance, iteration cap, horizon and integrator.
    strict : bool
        Raise :class:`~ghch.coefficients.ValidationError` when ``c`` fails
        validation. Otherwise log a warning and iterate anyway.
    progress : bool
        Show progress bars of the linear solves.

    Returns
    -------
    PicardResult
        ``distances[n]`` is the distance between iterates ``n`` and ``n+1``.
    """
    _check_hypotheses(c, grid, cfg.T, strict)
    u0 = c.initial_field(grid)
    previous = Trajectory.constant(u0, 0.0, cfg.T, cfg.integrator.dt)
    distances: list[float] = []
    log.info("picard: T=%g, tol=%g, max_iter=%d", cfg.T, cfg.tol, cfg.max_iter)

    for n in range(cfg.max_iter):
        current = solve_linear(freeze(c, previous, grid), u0, cfg.T, cfg.integrator, progress)
        if current.blowup_time is not None:
            log.warning("picard: iterate %d blew up at t = %.6g", n + 1, current.blowup_time)
            return PicardResult(
                (previous, current),
                distances,
                converged=False,
                n_final=len(distances),
                blowup_time=current.blowup_time,
            )
        d = sup_distance(previous, current, cfg.s)
        distances.append(d)
        log.info("picard: d_%d = %.6e", n, d)
        previous, current = current, previous
        if d <= cfg.tol:
            return PicardResult((current, previous), distances, True, len(distances))

    log.info("picard: no convergence after %d iterations", cfg.max_iter)
    return PicardResult((current, previous), distances, False, len(distances))


def solve_direct(
    c: CoefficientSet,
    grid: Grid,
    cfg: PicardConfig,
    strict: bool = True,
    progress: bool = False,
) -> Trajectory:
    """Integrate the nonlinear equation, coefficients taken at each stage value."""
    _check_hypotheses(c, grid, cfg.T, strict)
    return integrate(
        c.evaluate,
        c.initial_field(grid),
        cfg.T,
        cfg.integrator,
        c.m,
        coefficient_hash=c.fingerprint(),
        progress=progress,
    )


def pde_residual(
    c: CoefficientSet, traj: Trajectory, s: float | None = None, dealias: bool = True
) -> float:
    """Largest H^{s-5} norm of Lambda_m^2 u_t + sum a_k d^k u - f over the snapshots.

    ``u_t`` is the fourth order central difference, so the first and last
    two snapshots are skipped. Products are formed as in the solver.
    """
    if s is None:
        s = c.s
    assert traj.K >= 4, "need at least five snapshots"
    grid = traj.grid
    u = traj.values
    elliptic = 1 + c.m * grid.xi**2
    weights = (1 + grid.xi**2) ** (s - 5)
    worst = 0.0
    for k in range(2, traj.K - 1):
        u_t = (u[k - 2] - 8 * u[k - 1] + 8 * u[k + 1] - u[k + 2]) / (12 * traj.dt)
        state = Field(grid, u[k])
        t = traj.t0 + k * traj.dt
        residual_hat = elliptic * scipy.fft.fft(u_t) - spatial_operator(
            c.evaluate(t, state), state.spectrum, grid, dealias
        )
        norm = np.sqrt(grid.L / grid.N**2 * np.sum(weights * np.abs(residual_hat) ** 2))
        worst = max(worst, float(norm))
    return worst
