"""Periodic pseudospectral operator calculus.

Transform convention: the forward transform is unnormalized and the
inverse carries ``1/N`` (``scipy.fft`` defaults), so that::

    |u|_{L^2}^2 = L/N * sum_j u_j^2 = L/N^2 * sum_n |u_hat_n|^2

Every operator here is a Fourier multiplier, i.e. diagonal in the
spectrum. Odd-order derivatives zero the lone Nyquist mode ``-N/2``;
even multipliers keep it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft

log = logging.getLogger(__name__)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L) with N nodes."""

    N: int
    L: float

    def __post_init__(self) -> None:
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise GridError(f"N must be an integer, got {self.N!r}")
        if self.N < 8 or self.N % 2 != 0:
            raise GridError(f"N must be even and at least 8, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise GridError(f"L must be positive and finite, got {self.L!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.N) * (self.L / self.N)
        x.setflags(write=False)
        return x

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavenumbers in transform order; index N/2 holds the Nyquist mode -N/2."""
        xi = 2 * np.pi / self.L * scipy.fft.fftfreq(self.N, 1 / self.N)
        xi.setflags(write=False)
        return xi

    @property
    def nyquist(self) -> int:
        return self.N // 2

    @property
    def dx(self) -> float:
        return self.L / self.N

    def derivative_symbol(self, k: int) -> np.ndarray:
        return self._derivative_symbols[k - 1]

    @cached_property
    def _derivative_symbols(self) -> tuple[np.ndarray, ...]:
        symbols = []
        for k in range(1, 6):
            symbol = (1j * self.xi) ** k
            if k % 2 == 1:
                symbol[self.nyquist] = 0
            symbol.setflags(write=False)
            symbols.append(symbol)
        return tuple(symbols)


def make_grid(N: int, L: float) -> Grid:
    return Grid(N, L)


@dataclass(frozen=True, eq=False)
class Field:
    """Real function sampled on a grid. Values are read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        assert values.shape == (self.grid.N,), (
            f"expected {self.grid.N} samples, got shape {values.shape}"
        )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum: np.ndarray) -> Field:
        field = cls(grid, scipy.fft.ifft(spectrum).real)
        spectrum = np.array(spectrum, dtype=complex)
        spectrum.setflags(write=False)
        field.__dict__["spectrum"] = spectrum
        return field

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> Field:
        return cls(grid, np.broadcast_to(func(grid.x), (grid.N,)))

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.N))

    @cached_property
    def spectrum(self) -> np.ndarray:
        spectrum = scipy.fft.fft(self.values)
        spectrum.setflags(write=False)
        return spectrum

    def __add__(self, other: Field) -> Field:
        assert other.grid == self.grid
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        assert other.grid == self.grid
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> Field:
        return Field(self.grid, scalar * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)


class Multiplier:
    """Fourier multiplier operator, defined by its symbol on a grid."""

    name = "multiplier"

    def symbol(self, grid: Grid) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, u: Field) -> Field:
        return Field.from_spectrum(u.grid, u.spectrum * self.symbol(u.grid))

    def __matmul__(self, other: Multiplier) -> Multiplier:
        return Composite(self, other)

    def __repr__(self) -> str:
        return self.name


class Composite(Multiplier):
    def __init__(self, *factors: Multiplier) -> None:
        self.factors = factors
        self.name = " ".join(factor.name for factor in factors)

    def symbol(self, grid: Grid) -> np.ndarray:
        symbol = np.ones(grid.N, dtype=complex)
        for factor in self.factors:
            symbol = symbol * factor.symbol(grid)
        return symbol


class Derivative(Multiplier):
    def __init__(self, k: int) -> None:
        assert k in range(1, 6), f"derivative order must be in 1..5, got {k}"
        self.k = k
        self.name = f"d^{k}/dx^{k}"

    def symbol(self, grid: Grid) -> np.ndarray:
        return grid.derivative_symbol(self.k)


class LambdaS(Multiplier):
    """Lambda^s = (1 - d_x^2)^{s/2}."""

    def __init__(self, s: float) -> None:
        self.s = s
        self.name = f"Lambda^{s:g}"

    def symbol(self, grid: Grid) -> np.ndarray:
        return (1 + grid.xi**2) ** (self.s / 2)


class LambdaM(Multiplier):
    """Lambda_m^s = (1 - m d_x^2)^{s/2}."""

    def __init__(self, m: float, s: float) -> None:
        assert m > 0, f"m must be positive, got {m}"
        self.m = m
        self.s = s
        self.name = f"Lambda_{m:g}^{s:g}"

    def symbol(self, grid: Grid) -> np.ndarray:
        return (1 + self.m * grid.xi**2) ** (self.s / 2)


class LambdaM0(Multiplier):
    """Lambda_m^0 with symbol (1 + xi^2)/(1 + m xi^2), or its inverse."""

    def __init__(self, m: float, inverse: bool = False) -> None:
        assert m > 0, f"m must be positive, got {m}"
        self.m = m
        self.inverse = inverse
        self.name = f"(Lambda_{m:g}^0)^-1" if inverse else f"Lambda_{m:g}^0"

    def symbol(self, grid: Grid) -> np.ndarray:
        xi2 = grid.xi**2
        if self.inverse:
            return (1 + self.m * xi2) / (1 + xi2)
        return (1 + xi2) / (1 + self.m * xi2)


def derivative(u: Field, k: int) -> Field:
    return Derivative(k)(u)


def lambda_s(u: Field, s: float) -> Field:
    return LambdaS(s)(u)


def lambda_m(u: Field, m: float, s: float) -> Field:
    return LambdaM(m, s)(u)


def lambda_m0(u: Field, m: float, inverse: bool = False) -> Field:
    return LambdaM0(m, inverse)(u)


def l2_norm(u: Field) -> float:
    return float(np.sqrt(u.grid.dx * np.sum(u.values**2)))


def inner(u: Field, v: Field) -> float:
    assert u.grid == v.grid
    return float(u.grid.dx * np.sum(u.values * v.values))


def sobolev_norm(u: Field, s: float) -> float:
    """|u|_{H^s} = |Lambda^s u|_{L^2}, trapezoidal quadrature."""
    return l2_norm(lambda_s(u, s))


def sobolev_norms(values: np.ndarray, s: float, grid: Grid) -> np.ndarray:
    """H^s norms of each row of ``values``, by Parseval on the discrete spectrum."""
    spectra = scipy.fft.fft(np.atleast_2d(values), axis=-1)
    weights = (1 + grid.xi**2) ** s
    return np.sqrt(grid.L / grid.N**2 * np.sum(weights * np.abs(spectra) ** 2, axis=-1))


def empirical_operator_norm(op: Multiplier, s: float, grid: Grid) -> float:
    """Discrete H^s -> H^s norm of a multiplier.

    A Fourier multiplier commutes with Lambda^s, so the norm is the largest
    symbol magnitude over the grid wavenumbers for every s.
    """
    del s
    return float(np.max(np.abs(op.symbol(grid))))


def antiderivative(q: Field) -> Field:
    """Periodic antiderivative of a mean-zero field, vanishing at x = 0."""
    spectrum = np.zeros(q.grid.N, dtype=complex)
    nonzero = q.grid.xi != 0
    nonzero[q.grid.nyquist] = False
    spectrum[nonzero] = q.spectrum[nonzero] / (1j * q.grid.xi[nonzero])
    values = scipy.fft.ifft(spectrum).real
    return Field(q.grid, values - values[0])


def pad_spectrum(spectrum: np.ndarray, M: int) -> np.ndarray:
    """Zero-pad an N-point spectrum to M points, keeping physical amplitudes.

    The Nyquist coefficient is split evenly between modes +N/2 and -N/2 of
    the padded spectrum so the padded field stays real.
    """
    N = spectrum.shape[-1]
    half = N // 2
    padded = np.zeros((*spectrum.shape[:-1], M), dtype=complex)
    padded[..., :half] = spectrum[..., :half]
    padded[..., M - half + 1 :] = spectrum[..., half + 1 :]
    padded[..., half] = 0.5 * spectrum[..., half]
    padded[..., M - half] = 0.5 * spectrum[..., half]
    return padded * (M / N)


def truncate_spectrum(spectrum: np.ndarray, N: int) -> np.ndarray:
    """Inverse of :func:`pad_spectrum`; modes +-N/2 fold onto the Nyquist mode."""
    M = spectrum.shape[-1]
    half = N // 2
    truncated = np.empty((*spectrum.shape[:-1], N), dtype=complex)
    truncated[..., :half] = spectrum[..., :half]
    truncated[..., half + 1 :] = spectrum[..., M - half + 1 :]
    truncated[..., half] = spectrum[..., half] + spectrum[..., M - half]
    return truncated * (N / M)


def padded_size(N: int) -> int:
    return 3 * N // 2


def dealiased_product(a: Field, b: Field) -> Field:
    """Product of two fields with 3/2 zero padding (the 2/3 rule)."""
    assert a.grid == b.grid
    N = a.grid.N
    M = padded_size(N)
    fine_a = scipy.fft.ifft(pad_spectrum(a.spectrum, M)).real
    fine_b = scipy.fft.ifft(pad_spectrum(b.spectrum, M)).real
    spectrum = truncate_spectrum(scipy.fft.fft(fine_a * fine_b), N)
    return Field.from_spectrum(a.grid, _symmetrize(spectrum))


def _symmetrize(spectrum: np.ndarray) -> np.ndarray:
    """Project onto conjugate-symmetric spectra (real fields)."""
    mirrored = np.conj(np.roll(spectrum[..., ::-1], 1, axis=-1))
    return 0.5 * (spectrum + mirrored)
