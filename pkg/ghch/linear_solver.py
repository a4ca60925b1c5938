"""Method-of-lines time integration of the (linearized) evolution.

After applying Lambda_m^{-2} the equation reads::

    u_t = Lambda_m^{-2} [ f - a1 u_x - a2 u_xx - a3 u_xxx - a4 u_xxxx - a5 u_xxxxx ]

Derivatives are spectral and every coefficient-derivative product is
formed on the 3/2 padded grid when dealiasing is on; the five products
are summed there and transformed once.

``ifrk4`` removes the constant-coefficient dispersive part, built from
the spatial means of a1, a3, a5 at the start of each step, and treats it
with the exact exponential (Lawson's integrating-factor RK4).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Literal

import numpy as np
import scipy.fft
from tqdm import tqdm

from ghch.spectral_ops import Field, pad_spectrum, padded_size, truncate_spectrum
from ghch.trajectory import BlowUpError, Trajectory, sample, time_grid

if TYPE_CHECKING:
    from ghch.coefficients import CoefficientFields, FrozenCoefficients
    from ghch.spectral_ops import Grid

    CoefficientProvider = Callable[[float, Field], CoefficientFields]

__all__ = [
    "SCHEMES",
    "BlowUpError",
    "IntegratorConfig",
    "StabilityError",
    "Trajectory",
    "integrate",
    "rhs",
    "sample",
    "solve_linear",
    "spatial_operator",
    "stability_limit",
]

log = logging.getLogger(__name__)

Scheme = Literal["rk4", "ifrk4"]
SCHEMES = ("rk4", "ifrk4")

# RK4 covers the imaginary axis up to 2*sqrt(2)
STABILITY_BOUND = 2.8


class StabilityError(ValueError):
    def __init__(self, dt: float, limit: float, scheme: str) -> None:
        self.dt = dt
        self.limit = limit
        self.scheme = scheme
        super().__init__(
            f"dt = {dt:.3g} exceeds the {scheme} stability limit {limit:.3g}; "
            f"reduce dt or increase m"
        )


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = "ifrk4"
    dt: float = 1e-4
    dealias: bool = True

    def __post_init__(self) -> None:
        assert self.scheme in SCHEMES, f"unknown scheme {self.scheme!r}"
        assert self.dt > 0, f"dt must be positive, got {self.dt}"


def _odd_means(fields: CoefficientFields) -> tuple[float, float, float]:
    return (
        float(np.mean(fields.a1.values)),
        float(np.mean(fields.a3.values)),
        float(np.mean(fields.a5.values)),
    )


def stability_limit(fields: CoefficientFields, grid: Grid, m: float, scheme: Scheme) -> float:
    """Largest stable step for the coefficient fields ``fields``.

    Bounds the spectral radius of the explicit part by
    ``max_n sum_k max|a_k| |xi_n|^k / (1 + m xi_n^2)``. For ``ifrk4`` the
    odd coefficients enter through their deviation from the mean.

    This is a conservative bound. It sums absolute values over all five
    terms, the damping terms a2 and a4 included, instead of taking
    ``max |a1 xi - a3 xi^3 + a5 xi^5| / (1 + m xi^2)`` over the dispersive
    terms alone, so the step it returns is never larger than that one.
    """
    xi = np.abs(grid.xi)
    rate = np.zeros(grid.N)
    for k, a in enumerate(fields.coefficients, start=1):
        values = a.values
        if scheme == "ifrk4" and k % 2 == 1:
            values = values - np.mean(values)
        amplitude = float(np.max(np.abs(values)))
        if amplitude > 0:
            rate += amplitude * xi**k
    rate = float(np.max(rate / (1 + m * grid.xi**2)))
    if rate == 0:
        return float("inf")
    return STABILITY_BOUND / rate


def spatial_operator(
    fields: CoefficientFields,
    u_hat: np.ndarray,
    grid: Grid,
    dealias: bool = True,
    means: tuple[float, float, float] | None = None,
) -> np.ndarray:
    """Spectrum of ``f - sum_k a_k d^k u``.

    When ``means`` is given, those constants are removed from a1, a3, a5
    before forming the products.
    """
    M = padded_size(grid.N) if dealias else grid.N
    accumulated = np.zeros(M)
    for k, a in enumerate(fields.coefficients, start=1):
        values = a.values
        if means is not None and k % 2 == 1:
            values = values - means[k // 2]
        if not np.any(values):
            continue
        du_hat = u_hat * grid.derivative_symbol(k)
        if dealias:
            if np.all(values == values[0]):
                fine_a = values[0]
            else:
                fine_a = scipy.fft.ifft(pad_spectrum(scipy.fft.fft(values), M)).real
            fine_du = scipy.fft.ifft(pad_spectrum(du_hat, M)).real
        else:
            fine_a = values
            fine_du = scipy.fft.ifft(du_hat).real
        accumulated += fine_a * fine_du

    product_hat = scipy.fft.fft(accumulated)
    if dealias:
        product_hat = truncate_spectrum(product_hat, grid.N)
    return fields.f.spectrum - product_hat


def _inverse_elliptic(grid: Grid, m: float) -> np.ndarray:
    return 1 / (1 + m * grid.xi**2)


def rhs(frozen: FrozenCoefficients, u: Field, t: float, dealias: bool = True) -> Field:
    """u_t of the method-of-lines system at ``(t, u)``."""
    assert u.grid == frozen.grid
    fields = frozen(t, u)
    spectrum = spatial_operator(fields, u.spectrum, u.grid, dealias)
    return Field.from_spectrum(u.grid, spectrum * _inverse_elliptic(u.grid, frozen.c.m))


class _Stepper:
    def __init__(
        self, provider: CoefficientProvider, grid: Grid, m: float, cfg: IntegratorConfig
    ) -> None:
        self.provider = provider
        self.grid = grid
        self.cfg = cfg
        self.inverse_elliptic = _inverse_elliptic(grid, m)
        # odd symbols (i xi)^k, Nyquist already zeroed
        self.dispersive = [grid.derivative_symbol(k) * self.inverse_elliptic for k in (1, 3, 5)]

    def explicit(
        self, t: float, u_hat: np.ndarray, means: tuple[float, float, float] | None = None
    ) -> np.ndarray:
        u = Field.from_spectrum(self.grid, u_hat)
        fields = self.provider(t, u)
        spectrum = spatial_operator(fields, u_hat, self.grid, self.cfg.dealias, means)
        return spectrum * self.inverse_elliptic

    def rk4(self, t: float, u_hat: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.explicit(t, u_hat)
        k2 = self.explicit(t + dt / 2, u_hat + dt / 2 * k1)
        k3 = self.explicit(t + dt / 2, u_hat + dt / 2 * k2)
        k4 = self.explicit(t + dt, u_hat + dt * k3)
        return u_hat + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def ifrk4(self, t: float, u_hat: np.ndarray, dt: float) -> np.ndarray:
        u = Field.from_spectrum(self.grid, u_hat)
        means = _odd_means(self.provider(t, u))
        sigma = -sum(mean * symbol for mean, symbol in zip(means, self.dispersive))
        E = np.exp(sigma * dt / 2)
        E2 = E * E

        k1 = self.explicit(t, u_hat, means)
        k2 = self.explicit(t + dt / 2, E * (u_hat + dt / 2 * k1), means)
        k3 = self.explicit(t + dt / 2, E * u_hat + dt / 2 * k2, means)
        k4 = self.explicit(t + dt, E2 * u_hat + dt * E * k3, means)
        return E2 * u_hat + dt / 6 * (E2 * k1 + 2 * E * (k2 + k3) + k4)

    def step(self, t: float, u_hat: np.ndarray, dt: float) -> np.ndarray:
        if self.cfg.scheme == "rk4":
            return self.rk4(t, u_hat, dt)
        return self.ifrk4(t, u_hat, dt)


def integrate(
    provider: CoefficientProvider,
    u0: Field,
    T: float,
    cfg: IntegratorConfig,
    m: float,
    t0: float = 0.0,
    coefficient_hash: str = "",
    progress: bool = False,
) -> Trajectory:
    """Integrate ``u_t = Lambda_m^{-2}[f - sum a_k d^k u]`` from ``u0``.

    Parameters
    ----------
    provider : callable
        ``provider(t, u)`` returns the coefficient fields at the state
        ``(t, u)``.
    u0 : Field
        Initial value at ``t0``.
    T : float
        Final time.
    cfg : IntegratorConfig
        Scheme, step and dealiasing flag. The step actually used is
        ``(T - t0) / K`` with ``K = ceil((T - t0) / cfg.dt)``.
    m : float
        Parameter of Lambda_m.
    t0 : float
        Initial time.
    coefficient_hash : str
        Stored on the returned trajectory.
    progress : bool
        Show a tqdm progress bar over the steps.

    Returns
    -------
    Trajectory
        On blow-up, the finite prefix with ``blowup_time`` set.

    Raises
    ------
    StabilityError
        ``cfg.dt`` exceeds :func:`stability_limit` at the initial state.
    """
    grid = u0.grid
    K, dt = time_grid(t0, T, cfg.dt)
    limit = stability_limit(provider(t0, u0), grid, m, cfg.scheme)
    if cfg.dt > limit:
        raise StabilityError(cfg.dt, limit, cfg.scheme)

    log.debug("integrating %d %s steps of %.6g on N=%d", K, cfg.scheme, dt, grid.N)
    stepper = _Stepper(provider, grid, m, cfg)
    values = np.empty((K + 1, grid.N))
    values[0] = u0.values
    u_hat = np.array(u0.spectrum)
    blowup_time = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in tqdm(range(K), desc=cfg.scheme, disable=not progress, leave=False):
            u_hat = stepper.step(t0 + k * dt, u_hat, dt)
            u = scipy.fft.ifft(u_hat).real
            if not np.all(np.isfinite(u)):
                blowup_time = t0 + (k + 1) * dt
                values = values[: k + 1]
                log.warning("blow-up at t = %.6g after %d steps", blowup_time, k + 1)
                break
            values[k + 1] = u

    return Trajectory(
        grid,
        t0,
        dt,
        values,
        integrator=cfg.scheme,
        coefficient_hash=coefficient_hash,
        blowup_time=blowup_time,
    )


def solve_linear(
    frozen: FrozenCoefficients,
    u0: Field,
    T: float,
    cfg: IntegratorConfig,
    progress: bool = False,
) -> Trajectory:
    """Solve the linear problem with coefficients frozen along ``frozen.v``."""
    assert u0.grid == frozen.grid
    assert T <= frozen.T + 1e-12 * max(1.0, T), (
        f"horizon {T} beyond the frozen trajectory ({frozen.T})"
    )
    return integrate(
        frozen,
        u0,
        T,
        cfg,
        frozen.c.m,
        t0=frozen.t0,
        coefficient_hash=frozen.c.fingerprint(),
        progress=progress,
    )
