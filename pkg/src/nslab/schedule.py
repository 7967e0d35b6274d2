"""Separation-rate exponent ladder a_0 < a_1 < ... < a_{k0} = sigma.

Given a Hoelder exponent gamma in (0,1), a local integrability exponent
p in (3, inf], and a target sigma in (0, 3/2), the ladder starts at
a_0 = min(gamma/2, 1/2 - 3/(2p)), rises by the fixed increment
step = 1/2 - 3/(2p) per rung, and is capped at sigma.  k0 is the smallest
k with k*step + a_0 >= sigma, so the final rung equals sigma exactly.

The rung values use the closed form min(sigma, a_0 + k*step), which is the
solution of the recursion a_{k+1} = min(sigma, a_k + step) and shares its
arithmetic with the k0 threshold test, keeping every invariant exact in
floating point.  A second published variant replaces a_k + step by
k*step + a_0 on the right-hand side (one rung lower); it is recorded in
`a_statement` for reference and not used for measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ExponentSchedule", "exponent_schedule"]


@dataclass(frozen=True)
class ExponentSchedule:
    gamma: float
    p_exp: float
    sigma: float
    a: tuple[float, ...]
    a_statement: tuple[float, ...]
    k0: int
    step: float

    @property
    def a_minus1(self) -> float:
        """Formal rung below the ladder, -3/(2p); zero for p = inf."""
        return 0.0 if math.isinf(self.p_exp) else -1.5 / self.p_exp

    def __post_init__(self):
        assert len(self.a) == self.k0 + 1
        assert self.a[-1] == self.sigma


def exponent_schedule(gamma: float, p_exp: float, sigma: float) -> ExponentSchedule:
    """Build the ladder for (gamma, p, sigma); validates all three ranges."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if not p_exp > 3.0:
        raise ValueError(f"p must exceed 3 (inf allowed), got {p_exp}")
    if not 0.0 < sigma < 1.5:
        raise ValueError(f"sigma must lie in (0, 3/2), got {sigma}")
    step = 0.5 if math.isinf(p_exp) else 0.5 - 1.5 / p_exp
    a0 = min(gamma / 2.0, step)
    k0 = 0
    while k0 * step + a0 < sigma:
        k0 += 1
    a = tuple(min(sigma, a0 + k * step) for k in range(k0 + 1))
    a_statement = (min(sigma, a0),) + tuple(
        min(sigma, a0 + (k - 1) * step) for k in range(1, k0 + 1)
    )
    return ExponentSchedule(
        gamma=gamma, p_exp=p_exp, sigma=sigma, a=a,
        a_statement=a_statement, k0=k0, step=step,
    )
