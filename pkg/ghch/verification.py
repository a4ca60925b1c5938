"""Numerical checks of the operator bounds of Lambda_m.

For every grid, ``m`` and ``s``:

* the H^s -> H^s norms of Lambda_m^0 and its inverse stay below
  ``max(1/m, 1)`` and ``max(m, 1)``;
* ``|Lambda_m^{-2} f|_{H^{s+2}} <= max(1/m, 1) |f|_{H^s}`` on random
  fields;
* Lambda^s Lambda_m^{-2} = Lambda_m^0 Lambda^{s-2} to roundoff.

Random fields come from a generator seeded with 0, so the suite is
deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from tqdm.contrib.itertools import product

from ghch.spectral_ops import (
    Field,
    LambdaM0,
    empirical_operator_norm,
    l2_norm,
    lambda_m,
    lambda_m0,
    lambda_s,
    make_grid,
    sobolev_norm,
)

log = logging.getLogger(__name__)

ROUNDOFF = 1e-12


@dataclass(frozen=True)
class OperatorBoundRecord:
    N: int
    L: float
    m: float
    s: float
    n_fields: int
    norm_m0: float
    bound_m0: float
    norm_m0_inverse: float
    bound_m0_inverse: float
    est1_violations: int
    commutation_error: float

    @property
    def ok(self) -> bool:
        return (
            self.norm_m0 <= self.bound_m0 * (1 + ROUNDOFF)
            and self.norm_m0_inverse <= self.bound_m0_inverse * (1 + ROUNDOFF)
            and self.est1_violations == 0
            and self.commutation_error <= ROUNDOFF
        )


def check_operator_bounds(
    N: int, m: float, s: float, n_fields: int = 100, L: float = 2 * np.pi
) -> OperatorBoundRecord:
    grid = make_grid(N, L)
    rng = np.random.default_rng(0)
    est1_bound = max(1 / m, 1.0)

    violations = 0
    commutation_error = 0.0
    for _ in range(n_fields):
        f = Field(grid, rng.standard_normal(N))
        lhs = sobolev_norm(lambda_m(f, m, -2), s + 2)
        if lhs > est1_bound * sobolev_norm(f, s) * (1 + ROUNDOFF):
            violations += 1

        left = lambda_s(lambda_m(f, m, -2), s)
        right = lambda_m0(lambda_s(f, s - 2), m)
        commutation_error = max(commutation_error, l2_norm(left - right) / l2_norm(left))

    record = OperatorBoundRecord(
        N=N,
        L=L,
        m=m,
        s=s,
        n_fields=n_fields,
        norm_m0=empirical_operator_norm(LambdaM0(m), s, grid),
        bound_m0=max(1 / m, 1.0),
        norm_m0_inverse=empirical_operator_norm(LambdaM0(m, inverse=True), s, grid),
        bound_m0_inverse=max(m, 1.0),
        est1_violations=violations,
        commutation_error=commutation_error,
    )
    if not record.ok:
        log.warning("operator bound check failed: %s", record)
    return record


def operator_suite(
    Ns: list[int],
    ms: list[float],
    ss: list[float],
    n_fields: int = 100,
    L: float = 2 * np.pi,
    progress: bool = False,
) -> list[OperatorBoundRecord]:
    return [
        check_operator_bounds(N, m, s, n_fields, L)
        for N, m, s in product(Ns, ms, ss, disable=not progress, leave=False)
    ]
