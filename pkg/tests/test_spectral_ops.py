import math

import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ghch.spectral_ops import (
    Derivative,
    Field,
    GridError,
    LambdaM,
    LambdaM0,
    LambdaS,
    antiderivative,
    dealiased_product,
    derivative,
    empirical_operator_norm,
    inner,
    l2_norm,
    lambda_m,
    lambda_m0,
    lambda_s,
    make_grid,
    pad_spectrum,
    padded_size,
    sobolev_norm,
    sobolev_norms,
    truncate_spectrum,
)

TWO_PI = 2 * np.pi


def _grid(N: int = 32, L: float = TWO_PI):
    return make_grid(N, L)


def _random_field(grid, seed: int = 0) -> Field:
    return Field(grid, np.random.default_rng(seed).standard_normal(grid.N))


def _max_diff(u: Field, expected: np.ndarray) -> float:
    return float(np.max(np.abs(u.values - expected)))


def test_wavenumbers():
    grid = _grid(8)
    assert sorted(grid.xi) == [-4, -3, -2, -1, 0, 1, 2, 3]
    assert grid.xi[grid.nyquist] == -4


def test_wavenumbers_scale_with_period():
    assert make_grid(16, 1.0).xi[1] == pytest.approx(TWO_PI)


def test_nodes():
    grid = _grid(8)
    assert grid.x[0] == 0
    assert grid.x[-1] == pytest.approx(TWO_PI * 7 / 8)
    assert grid.dx == pytest.approx(TWO_PI / 8)


@pytest.mark.parametrize(("N", "L"), [(7, TWO_PI), (6, TWO_PI), (0, 1.0), (16, 0.0), (16, -1.0), (16, math.inf)])
def test_invalid_grid(N, L):
    with pytest.raises(GridError):
        make_grid(N, L)


def test_grid_arrays_are_read_only():
    grid = _grid(8)
    with pytest.raises(ValueError, match="read-only"):
        grid.x[0] = 1.0
    with pytest.raises(ValueError, match="read-only"):
        grid.xi[0] = 1.0


def test_field_values_are_copied():
    grid = _grid(8)
    raw = np.ones(8)
    u = Field(grid, raw)
    raw[0] = 5.0
    assert u.values[0] == 1.0


def test_field_shape_is_checked():
    with pytest.raises(AssertionError):
        Field(_grid(8), np.zeros(9))


def test_derivative_of_sine():
    grid = _grid()
    u = Field.from_function(grid, np.sin)
    assert _max_diff(derivative(u, 1), np.cos(grid.x)) <= 1e-12


def test_second_derivative():
    grid = _grid()
    u = Field.from_function(grid, lambda x: np.cos(2 * x))
    assert _max_diff(derivative(u, 2), -4 * np.cos(2 * grid.x)) <= 1e-12


def test_fifth_derivative():
    grid = _grid()
    u = Field.from_function(grid, lambda x: np.sin(3 * x))
    assert _max_diff(derivative(u, 5), 243 * np.cos(3 * grid.x)) <= 1e-9


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_derivative_of_constant(k):
    grid = _grid()
    assert np.max(np.abs(derivative(Field(grid, np.full(grid.N, 3.0)), k).values)) <= 1e-12


def test_odd_derivatives_zero_the_nyquist_mode():
    grid = _grid(16)
    u = Field.from_function(grid, lambda x: np.cos(8 * x))
    for k in (1, 3, 5):
        assert np.max(np.abs(derivative(u, k).values)) <= 1e-9
    assert _max_diff(derivative(u, 2), -64 * u.values) <= 1e-10


def test_lambda_s():
    grid = _grid()
    u = Field.from_function(grid, np.cos)
    assert _max_diff(lambda_s(u, 0), u.values) <= 1e-15
    assert _max_diff(lambda_s(u, 2), 2 * np.cos(grid.x)) <= 1e-12


def test_lambda_m():
    grid = _grid()
    u = Field.from_function(grid, lambda x: np.cos(2 * x))
    assert _max_diff(lambda_m(u, 1.0, 3.0), lambda_s(u, 3.0).values) <= 1e-12
    assert _max_diff(lambda_m(u, 0.5, -2), np.cos(2 * grid.x) / 3) <= 1e-12


def test_lambda_m0():
    grid = _grid()
    u = Field.from_function(grid, np.cos)
    assert _max_diff(lambda_m0(u, 4.0), 0.4 * np.cos(grid.x)) <= 1e-12
    assert _max_diff(lambda_m0(u, 1.0), u.values) <= 1e-15


@pytest.mark.parametrize("m", [0.1, 1.0, 10.0])
def test_inverse_pairs(m):
    grid = _grid(64)
    u = _random_field(grid)
    assert l2_norm(lambda_s(lambda_s(u, 2.5), -2.5) - u) <= 1e-12 * l2_norm(u)
    assert l2_norm(lambda_m(lambda_m(u, m, 2), m, -2) - u) <= 1e-12 * l2_norm(u)
    assert l2_norm(lambda_m0(lambda_m0(u, m), m, inverse=True) - u) <= 1e-12 * l2_norm(u)


def test_composition():
    grid = _grid(64)
    u = _random_field(grid)
    composed = (LambdaS(2) @ LambdaM(0.5, -2))(u)
    direct = lambda_m0(u, 0.5)
    assert l2_norm(composed - direct) <= 1e-12 * l2_norm(u)


def test_multipliers_commute():
    grid = _grid(64)
    u = _random_field(grid)
    a = (Derivative(3) @ LambdaM(2.0, -2))(u)
    b = (LambdaM(2.0, -2) @ Derivative(3))(u)
    assert l2_norm(a - b) <= 1e-12 * l2_norm(a)


def test_sobolev_norm_examples():
    grid = _grid()
    assert sobolev_norm(Field.zeros(grid), 3) == 0
    assert sobolev_norm(Field.from_function(grid, np.sin), 0) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert sobolev_norm(Field.from_function(grid, np.sin), 1) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)


def test_sobolev_norms_match_quadrature():
    grid = _grid(64)
    rng = np.random.default_rng(3)
    values = rng.standard_normal((5, grid.N))
    batched = sobolev_norms(values, 2.7, grid)
    one_by_one = [sobolev_norm(Field(grid, row), 2.7) for row in values]
    np.testing.assert_allclose(batched, one_by_one, rtol=1e-12)


def test_inner_product():
    grid = _grid()
    u = Field.from_function(grid, np.sin)
    v = Field.from_function(grid, np.cos)
    assert abs(inner(u, v)) <= 1e-14
    assert inner(u, u) == pytest.approx(math.pi, rel=1e-14)


@pytest.mark.parametrize("m", [0.1, 0.25, 1, 2, 10])
def test_operator_norms(m):
    grid = _grid(256)
    assert empirical_operator_norm(LambdaM0(m), 1.0, grid) <= max(1 / m, 1) * (1 + 1e-12)
    assert empirical_operator_norm(LambdaM0(m, inverse=True), 1.0, grid) <= max(m, 1) * (1 + 1e-12)


def test_operator_norm_approaches_bound():
    coarse = empirical_operator_norm(LambdaM0(0.25), 0.0, _grid(16))
    fine = empirical_operator_norm(LambdaM0(0.25), 0.0, _grid(512))
    assert coarse < fine < 4
    assert fine > 3.99


def test_operator_norm_at_m_one():
    assert empirical_operator_norm(LambdaM0(1.0), 2.0, _grid(64)) == pytest.approx(1.0)


@given(arrays(np.float64, 32, elements=st.floats(-1e3, 1e3)))
@settings(max_examples=50)
def test_parseval(values):
    grid = _grid(32)
    u = Field(grid, values)
    spectral = grid.L / grid.N**2 * np.sum(np.abs(u.spectrum) ** 2)
    assert l2_norm(u) ** 2 == pytest.approx(spectral, rel=1e-12, abs=1e-20)


@pytest.mark.parametrize("op", [Derivative(1), Derivative(3), Derivative(4), LambdaS(2.7), LambdaM(0.3, -2), LambdaM0(5.0)])
def test_multipliers_keep_fields_real(op):
    grid = _grid(64)
    u = _random_field(grid, seed=1)
    image = scipy.fft.ifft(u.spectrum * op.symbol(grid))
    assert np.max(np.abs(image.imag)) <= 1e-12 * np.max(np.abs(image.real))


def test_antiderivative():
    grid = _grid()
    F = antiderivative(Field.from_function(grid, np.cos))
    assert F.values[0] == 0
    assert _max_diff(F, np.sin(grid.x)) <= 1e-13
    assert _max_diff(derivative(F, 1), np.cos(grid.x)) <= 1e-13


def test_padded_size():
    assert padded_size(16) == 24
    assert padded_size(128) == 192


def test_pad_and_truncate():
    grid = _grid(16)
    u = _random_field(grid)
    padded = pad_spectrum(u.spectrum, 24)
    fine = scipy.fft.ifft(padded)
    assert np.max(np.abs(fine.imag)) <= 1e-14
    # the padded field interpolates the coarse one at the shared nodes
    np.testing.assert_allclose(fine.real[::3][: grid.N // 2], u.values[::2][: grid.N // 2], atol=1e-12)
    np.testing.assert_allclose(truncate_spectrum(padded, 16), u.spectrum, atol=1e-12)


def test_dealiased_product_of_resolved_modes():
    grid = _grid(16)
    a = Field.from_function(grid, np.cos)
    b = Field.from_function(grid, lambda x: np.cos(2 * x))
    expected = 0.5 * (np.cos(grid.x) + np.cos(3 * grid.x))
    assert _max_diff(dealiased_product(a, b), expected) <= 1e-14


def test_dealiased_product_drops_unresolved_modes():
    grid = _grid(16)
    a = Field.from_function(grid, lambda x: np.cos(7 * x))
    # cos(7x)^2 = (1 + cos 14x)/2; the naive product aliases 14 onto 2
    assert _max_diff(dealiased_product(a, a), np.full(16, 0.5)) <= 1e-14
    naive = Field(grid, a.values**2)
    assert _max_diff(naive, np.full(16, 0.5)) > 0.1
