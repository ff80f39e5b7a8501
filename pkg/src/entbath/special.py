"""Digamma and harmonic numbers for real or complex argument.

The temperature-dependent dispersion formulas need H(z) at complex z with
~1e-12 accuracy, which the asymptotic series with an argument-shift
recurrence delivers once |z| has been raised above 8.
"""

from __future__ import annotations

import cmath
import math

EULER_GAMMA = 0.5772156649015328606

# Asymptotic series psi(z) ~ ln z - 1/2z - sum B_{2n}/(2n z^{2n}).
_BERNOULLI_TERMS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

_SHIFT_RADIUS = 8.0


def digamma(z: complex) -> complex:
    """psi(z) for complex z, poles at nonpositive integers rejected."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == int(z.real):
        raise ValueError(f"digamma pole at z={z.real}")
    if z.real < 0.0:
        # reflection: psi(1-z) - psi(z) = pi cot(pi z)
        return digamma(1.0 - z) - math.pi / cmath.tan(math.pi * z)
    shift = 0.0 + 0.0j
    while abs(z) < _SHIFT_RADIUS:
        shift -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    series = 0.0 + 0.0j
    power = inv2
    for coeff in _BERNOULLI_TERMS:
        series += coeff * power
        power *= inv2
    return shift + cmath.log(z) - 0.5 / z - series


def harmonic_number(z: complex) -> complex:
    """H(z) = psi(z + 1) + Euler-Mascheroni, valid for complex z."""
    return digamma(z + 1.0) + EULER_GAMMA
