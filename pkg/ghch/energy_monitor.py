"""Weighted energy E^s(u) = |w Lambda^s u|_{L^2} and the Gronwall check."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np
from tqdm import tqdm

from ghch.coefficients import DegenerateWeightError, compute_weight
from ghch.spectral_ops import Field, l2_norm, lambda_s

if TYPE_CHECKING:
    from collections.abc import Sequence

    from ghch.coefficients import CoefficientSet, WeightField, WeightVariant
    from ghch.trajectory import Trajectory

log = logging.getLogger(__name__)

LAMBDA_MIN = 1e-8
LAMBDA_MAX = 1e6
LAMBDA_RESOLUTION = 1e-3
# exponents are capped below the overflow threshold of exp
MAX_EXPONENT = 700.0


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    times: np.ndarray
    Es: np.ndarray
    Hs: np.ndarray
    lambda_fit: float
    bound_ok: bool
    w1: float
    w2: float
    f_Es: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.times)

    def sandwich_ok(self, rtol: float = 1e-12) -> bool:
        """w1 Hs <= Es <= w2 Hs at every sample, up to roundoff ``rtol``."""
        lower = self.w1 * self.Hs <= self.Es * (1 + rtol)
        upper = self.Es <= self.w2 * self.Hs * (1 + rtol)
        return bool(np.all(lower & upper))


def energy(u: Field, wf: WeightField, s: float) -> float:
    assert u.grid == wf.w.grid
    return l2_norm(Field(u.grid, wf.w.values * lambda_s(u, s).values))


def _duhamel(lam: float, times: np.ndarray, f_Es: np.ndarray) -> np.ndarray:
    """Trapezoidal int_0^{t_k} exp(lam (t_k - t')) E^s(f(t')) dt' for every k."""
    integral = np.zeros(len(times))
    if not np.any(f_Es):
        return integral
    for k in range(1, len(times)):
        growth = math.exp(min(lam * (times[k] - times[k - 1]), MAX_EXPONENT))
        step = times[k] - times[k - 1]
        integral[k] = growth * integral[k - 1] + step / 2 * (growth * f_Es[k - 1] + f_Es[k])
    return integral


def _bound_holds(lam: float, times: np.ndarray, Es: np.ndarray, f_Es: np.ndarray) -> bool:
    growth = np.exp(np.minimum(lam * times, MAX_EXPONENT))
    bound = growth * Es[0] + 2 * _duhamel(lam, times, f_Es)
    return bool(np.all(Es <= bound * (1 + 1e-12) + 1e-300))


def fit_lambda(
    trace: EnergyTrace, f_trace: Sequence[float] | np.ndarray | None = None
) -> tuple[float, bool]:
    """Smallest Gronwall rate consistent with the trace.

    Finds the smallest ``lam >= 0`` on a logarithmic grid of relative
    resolution 1e-3 between 1e-8 and 1e6 such that::

        Es[k] <= exp(lam t_k) Es[0] + 2 int_0^{t_k} exp(lam (t_k - t')) E^s(f(t')) dt'

    for every k, times measured from the first sample.

    Returns
    -------
    lambda_fit : float
        The rate, or ``inf`` when none on the grid works.
    bound_ok : bool
        Whether a finite rate was found.
    """
    assert len(trace.times) > 0
    times = np.asarray(trace.times, dtype=float) - trace.times[0]
    Es = np.asarray(trace.Es, dtype=float)
    if f_trace is None:
        f_Es = np.zeros_like(Es)
    else:
        f_Es = np.asarray(f_trace, dtype=float)
        assert f_Es.shape == Es.shape

    if _bound_holds(0.0, times, Es, f_Es):
        return 0.0, True

    n_grid = math.ceil(math.log(LAMBDA_MAX / LAMBDA_MIN) / math.log1p(LAMBDA_RESOLUTION))

    def lam(j: int) -> float:
        return LAMBDA_MIN * (1 + LAMBDA_RESOLUTION) ** j

    if not _bound_holds(lam(n_grid), times, Es, f_Es):
        return float("inf"), False

    lo, hi = -1, n_grid
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _bound_holds(lam(mid), times, Es, f_Es):
            hi = mid
        else:
            lo = mid
    return lam(hi), True


def trace(
    traj: Trajectory,
    c: CoefficientSet,
    s: float | None = None,
    variant: WeightVariant = "exact",
    stride: int = 1,
    progress: bool = False,
) -> EnergyTrace:
    """E^s and H^s along ``traj`` with the weight recomputed at each sample.

    Every ``stride``-th snapshot is used. The forcing energies E^s(f(t_k))
    feed :func:`fit_lambda`.

    Raises
    ------
    DegenerateWeightError
        The weight degenerates at one of the sample times.
    """
    if s is None:
        s = c.s
    assert stride >= 1
    grid = traj.grid
    indices = range(0, traj.K + 1, stride)
    time_dependent = "t" in (c.a4.variables() | c.a5.variables())

    times, Es, Hs, f_Es = [], [], [], []
    w1, w2 = float("inf"), 0.0
    wf = None
    for k in tqdm(indices, desc="energy", disable=not progress, leave=False):
        t = float(traj.t0 + k * traj.dt)
        if wf is None or time_dependent:
            try:
                wf = compute_weight(c, t, grid, variant, horizon=traj.T, t0=traj.t0)
            except DegenerateWeightError as exc:
                msg = f"weight degenerates at t = {t:.17g}: {exc}"
                raise DegenerateWeightError(msg) from exc
            w1 = min(w1, wf.w1)
            w2 = max(w2, wf.w2)
        v = lambda_s(traj.snapshot(k), s).values
        times.append(t)
        Hs.append(float(np.sqrt(grid.dx * np.sum(v**2))))
        Es.append(float(np.sqrt(grid.dx * np.sum((wf.w.values * v) ** 2))))
        f_Es.append(energy(c.coefficient_field("f", t, grid), wf, s))

    result = EnergyTrace(
        times=np.array(times),
        Es=np.array(Es),
        Hs=np.array(Hs),
        lambda_fit=float("nan"),
        bound_ok=False,
        w1=w1,
        w2=w2,
        f_Es=np.array(f_Es),
    )
    lambda_fit, bound_ok = fit_lambda(result, result.f_Es)
    log.info("energy trace: %d samples, lambda = %.6g, bound_ok = %s", len(times), lambda_fit, bound_ok)
    return replace(result, lambda_fit=lambda_fit, bound_ok=bound_ok)
