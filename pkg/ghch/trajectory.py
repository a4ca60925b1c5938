from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ghch.spectral_ops import Field, Grid

if TYPE_CHECKING:
    from collections.abc import Iterator


class BlowUpError(RuntimeError):
    def __init__(self, time: float) -> None:
        self.time = time
        super().__init__(f"solution left the resolvable regime at t = {time:.17g}")


def time_grid(t0: float, T: float, dt: float) -> tuple[int, float]:
    """Number of steps and the uniform step length covering [t0, T].

    The step never exceeds ``dt``.
    """
    assert T > t0, f"empty time interval [{t0}, {T}]"
    assert dt > 0
    K = math.ceil((T - t0) / dt - 1e-9)
    K = max(K, 1)
    return K, (T - t0) / K


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of a field at ``t0 + k*dt``, ``k = 0..K``.

    After a blow-up, ``values`` holds the finite snapshots only and
    ``blowup_time`` is the time of the first non-finite one.
    """

    grid: Grid
    t0: float
    dt: float
    values: np.ndarray
    integrator: str = ""
    coefficient_hash: str = ""
    blowup_time: float | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, ndmin=2)
        assert values.shape[1] == self.grid.N
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(
        cls, u0: Field, t0: float, T: float, dt: float, integrator: str = "constant"
    ) -> Trajectory:
        K, dt = time_grid(t0, T, dt)
        values = np.broadcast_to(u0.values, (K + 1, u0.grid.N))
        return cls(u0.grid, t0, dt, values, integrator=integrator)

    @property
    def K(self) -> int:
        return self.values.shape[0] - 1

    @property
    def T(self) -> float:
        return self.t0 + self.K * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.K + 1)

    def snapshot(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def __iter__(self) -> Iterator[tuple[float, Field]]:
        for k, t in enumerate(self.times):
            yield float(t), self.snapshot(k)

    def __len__(self) -> int:
        return self.K + 1

    def raise_for_blowup(self) -> None:
        if self.blowup_time is not None:
            raise BlowUpError(self.blowup_time)


def sample(traj: Trajectory, t: float) -> Field:
    """Dense output by 4-point Lagrange interpolation in time.

    The stencil is centred on the step containing ``t`` and shifted
    inwards at the ends; stored nodes are returned exactly.
    """
    tol = 1e-12 * max(1.0, abs(traj.T))
    assert traj.t0 - tol <= t <= traj.T + tol, (
        f"t = {t} outside [{traj.t0}, {traj.T}]"
    )
    tau = (t - traj.t0) / traj.dt
    k = round(tau)
    if abs(tau - k) <= 1e-12 * max(1.0, tau):
        return traj.snapshot(min(max(k, 0), traj.K))

    n_points = min(4, traj.K + 1)
    start = min(max(math.floor(tau) - 1, 0), traj.K + 1 - n_points)
    nodes = np.arange(start, start + n_points, dtype=float)
    weights = np.ones(n_points)
    for i in range(n_points):
        for j in range(n_points):
            if i != j:
                weights[i] *= (tau - nodes[j]) / (nodes[i] - nodes[j])
    return Field(traj.grid, weights @ traj.values[start : start + n_points])
