from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from qcodes import Parameter
from tqdm import tqdm
from tqdm.contrib.concurrent import process_map

from ghch import energy_monitor, picard

if TYPE_CHECKING:
    from ghch.coefficients import CoefficientSet, WeightVariant
    from ghch.picard import PicardConfig
    from ghch.scenario import Scenario
    from ghch.spectral_ops import Grid

log = logging.getLogger(__name__)


# relative spread of fitted rates treated as equal
LAMBDA_RTOL = 1e-2


class ScenarioSweep:
    """Values to step one or more scenario parameters through.

    Every value is checked against the validator of every swept
    parameter up front, so a bad sweep fails before any run starts.

    Parameters
    ----------
    parameters : Parameter | Sequence[Parameter]
        Swept parameters. Each point sets every one of them to the same
        value.
    start : float | Sequence[float]
        First value, or the explicit list of values.
    stop : float, optional
        Last value when ``start`` is a number.
    num : int, optional
        Number of values when ``start`` is a number.
    skip_first, skip_last : bool
        Drop the first / last value.
    """

    parameters: Sequence[Parameter]
    values: tuple[float, ...]

    def __init__(
        self,
        parameters: Parameter | Sequence[Parameter],
        start: float | Sequence[float],
        stop: float | None = None,
        num: int | None = None,
        skip_first: bool = False,
        skip_last: bool = False,
    ) -> None:
        if isinstance(parameters, Parameter):
            parameters = [parameters]
        assert parameters, "nothing to sweep"
        self.parameters = list(parameters)

        if isinstance(start, (Sequence, np.ndarray)):
            values = np.asarray(start, dtype=float)
        else:
            assert stop is not None and num is not None, "give stop and num with a scalar start"
            values = np.linspace(start, stop, num)
        if skip_first:
            values = values[1:]
        if skip_last:
            values = values[:-1]
        self.values = tuple(float(value) for value in values)

        for parameter in self.parameters:
            for value in self.values:
                parameter.validate(value)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    converged: bool
    n_final: int
    blowup_time: float | None
    lambda_fit: float
    bound_ok: bool
    distances: tuple[float, ...] = ()

    @property
    def existence_time(self) -> float:
        """Blow-up time, or ``inf`` when the run reached its horizon."""
        return math.inf if self.blowup_time is None else self.blowup_time


@dataclass(frozen=True)
class SweepReport:
    parameter_names: tuple[str, ...]
    points: tuple[SweepPoint, ...] = field(default_factory=tuple)
    lambda_rtol: float = LAMBDA_RTOL

    def _ordered(self) -> list[SweepPoint]:
        return sorted(self.points, key=lambda p: abs(p.value))

    @property
    def blowup_nonincreasing(self) -> bool:
        """Larger amplitudes never survive longer."""
        times = [p.existence_time for p in self._ordered()]
        return all(b <= a for a, b in zip(times, times[1:]))

    @property
    def lambda_nondecreasing(self) -> bool:
        """Fitted rates never drop by more than ``lambda_rtol`` as amplitude grows.

        At small amplitude the rate is dominated by the linear terms, so
        the nonlinear contribution can shift it slightly either way.
        """
        rates = [p.lambda_fit if p.bound_ok else math.inf for p in self._ordered()]
        return all(b >= a * (1 - self.lambda_rtol) for a, b in zip(rates, rates[1:]))


@dataclass(frozen=True)
class _Job:
    value: float
    coefficients: CoefficientSet
    grid: Grid
    config: PicardConfig
    variant: WeightVariant
    stride: int


def _run_point(job: _Job) -> SweepPoint:
    result = picard.run(job.coefficients, job.grid, job.config)
    if result.blowup_time is not None:
        return SweepPoint(
            job.value,
            converged=False,
            n_final=result.n_final,
            blowup_time=result.blowup_time,
            lambda_fit=math.inf,
            bound_ok=False,
            distances=tuple(result.distances),
        )
    energies = energy_monitor.trace(
        result.limit, job.coefficients, job.config.s, job.variant, job.stride
    )
    return SweepPoint(
        job.value,
        converged=result.converged,
        n_final=result.n_final,
        blowup_time=None,
        lambda_fit=energies.lambda_fit,
        bound_ok=energies.bound_ok,
        distances=tuple(result.distances),
    )


def run_sweep(
    scenario: Scenario,
    sweep: ScenarioSweep,
    max_workers: int = 1,
    progress: bool = False,
    lambda_rtol: float = LAMBDA_RTOL,
) -> SweepReport:
    """Picard run and energy trace of ``scenario`` at every sweep value.

    Parameters are set one value at a time to snapshot the problem; the
    original values are restored afterwards. Runs go through
    ``process_map`` when ``max_workers > 1``.
    """
    saved = [parameter.get() for parameter in sweep.parameters]
    jobs = []
    try:
        for value in sweep.values:
            for parameter in sweep.parameters:
                parameter.set(float(value))
            jobs.append(
                _Job(
                    value=float(value),
                    coefficients=scenario.coefficient_set(),
                    grid=scenario.make_grid(),
                    config=scenario.picard_config(),
                    variant=scenario.weight.variant(),
                    stride=scenario.output.snapshot_stride(),
                )
            )
    finally:
        for parameter, value in zip(sweep.parameters, saved):
            parameter.set(value)

    names = tuple(parameter.full_name for parameter in sweep.parameters)
    scenario.log.info("sweeping %s over %d values", ", ".join(names), len(jobs))
    if max_workers > 1:
        points = process_map(
            _run_point, jobs, max_workers=max_workers, disable=not progress, leave=False
        )
    else:
        points = [_run_point(job) for job in tqdm(jobs, desc="sweep", disable=not progress)]

    report = SweepReport(names, tuple(points), lambda_rtol)
    if not report.blowup_nonincreasing:
        log.warning("blow-up time increases with amplitude somewhere in the sweep")
    if not report.lambda_nondecreasing:
        log.warning("fitted rate drops by more than %g with amplitude", lambda_rtol)
    return report
