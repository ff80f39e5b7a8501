"""Master-equation second-moment dynamics for the plus mode, free rotation
for the minus mode.

The plus-mode moments obey three coupled linear ODEs whose coefficients
(damping, diffusion, anomalous diffusion) are supplied as schedules; the
minus mode never sees the bath and simply rotates.  RK4 with a fixed step
keeps runs bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .asymptotics import PositionCoefficients, SymmetricCoefficients
from .errors import StepSizeError, UnphysicalStateError
from .gaussian import CovarianceMatrix, Ordering, basis_change, free_rotation, log_negativity

UNCERTAINTY_ATOL = 1e-9

# dt ceiling relative to the fastest rate present (spec: dt <= 0.01/max(omega, gamma))
_STEP_FACTOR = 0.01


@dataclass(frozen=True)
class MomentState:
    """Second moments of the plus and minus modes at a given time.

    ``xp`` denotes the symmetrized cross moment <{x, p}> of a block.

    Construction only requires positive block determinants.  The perturbative
    master equation is not of Lindblad form: its anomalous-diffusion term is
    first order in the damping rate and drives transient dips of the plus
    block a few percent below the uncertainty bound (measured down to
    det ~ 0.20 at gamma = 0.2 from a vacuum start), so full physicality is an
    explicit check via ``validate_physical`` rather than an invariant.
    """

    x2_plus: float
    p2_plus: float
    xp_plus: float
    x2_minus: float
    p2_minus: float
    xp_minus: float
    time: float = 0.0

    def __post_init__(self) -> None:
        for tag, (x2, p2, xp) in (("plus", self.plus_block_moments()),
                                  ("minus", self.minus_block_moments())):
            det = x2 * p2 - (xp / 2.0) ** 2
            if min(x2, p2) <= 0.0 or det <= 0.0:
                raise UnphysicalStateError(
                    f"{tag} block has nonpositive dispersions or determinant "
                    f"({det:.6e}) at t={self.time}"
                )

    def is_physical(self, atol: float = UNCERTAINTY_ATOL) -> bool:
        for x2, p2, xp in (self.plus_block_moments(), self.minus_block_moments()):
            if x2 * p2 - (xp / 2.0) ** 2 < 0.25 - atol:
                return False
        return True

    def validate_physical(self, atol: float = UNCERTAINTY_ATOL) -> None:
        if not self.is_physical(atol):
            raise UnphysicalStateError(
                f"a mode block violates the uncertainty relation at t={self.time}"
            )

    def plus_block_moments(self) -> tuple[float, float, float]:
        return self.x2_plus, self.p2_plus, self.xp_plus

    def minus_block_moments(self) -> tuple[float, float, float]:
        return self.x2_minus, self.p2_minus, self.xp_minus

    def plus_block(self) -> np.ndarray:
        return _block(self.x2_plus, self.p2_plus, self.xp_plus)

    def minus_block(self) -> np.ndarray:
        return _block(self.x2_minus, self.p2_minus, self.xp_minus)


def _block(x2: float, p2: float, xp: float) -> np.ndarray:
    return np.array([[x2, xp / 2.0], [xp / 2.0, p2]])


def vacuum_state(m: float, omega: float) -> MomentState:
    """Ground state of both modes for mass m and frequency omega."""
    return MomentState(
        1.0 / (2.0 * m * omega), m * omega / 2.0, 0.0,
        1.0 / (2.0 * m * omega), m * omega / 2.0, 0.0,
    )


# ---------------------------------------------------------------------------
# Coefficient schedules
# ---------------------------------------------------------------------------

class ConstantSchedule:
    """Time-independent coefficients (the asymptotic-value default)."""

    def __init__(self, coeffs):
        self.coeffs = coeffs

    def __call__(self, t: float):
        return self.coeffs


class TabulatedSchedule:
    """Linear interpolation over a strictly increasing time grid.

    Evaluation outside the grid clamps to the endpoint values.  ``values``
    is a sequence of coefficient tuples matching ``kind`` ("position" gives
    PositionCoefficients, "symmetric" gives SymmetricCoefficients).
    """

    def __init__(self, times: Sequence[float], values, kind: str = "position"):
        self.times = np.asarray(times, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise ValueError("need at least two tabulation times")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("tabulation times must be strictly increasing")
        if kind == "position":
            self._fields = ("gamma", "diffusion", "anomalous")
            self._cls = PositionCoefficients
        elif kind == "symmetric":
            self._fields = ("gamma", "diffusion")
            self._cls = SymmetricCoefficients
        else:
            raise ValueError(f"unknown schedule kind {kind!r}")
        cols = []
        for name in self._fields:
            cols.append(np.array([getattr(v, name) for v in values], dtype=float))
        if any(len(c) != len(self.times) for c in cols):
            raise ValueError("values length must match times length")
        self._cols = cols

    def __call__(self, t: float):
        vals = [float(np.interp(t, self.times, col)) for col in self._cols]
        return self._cls(*vals)


def _as_fn(value) -> Callable[[float], float]:
    if callable(value):
        return value
    return lambda t, v=float(value): v


# ---------------------------------------------------------------------------
# RK4 stepping
# ---------------------------------------------------------------------------

def _rk4(deriv, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = deriv(t, y)
    k2 = deriv(t + dt / 2.0, y + dt / 2.0 * k1)
    k3 = deriv(t + dt / 2.0, y + dt / 2.0 * k2)
    k4 = deriv(t + dt, y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_step(dt: float, *rates: float) -> None:
    fastest = max(abs(r) for r in rates)
    if fastest > 0 and dt > _STEP_FACTOR / fastest * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt={dt:.3e} exceeds {_STEP_FACTOR}/max rate = "
            f"{_STEP_FACTOR / fastest:.3e}"
        )


def step_position_model(
    state: MomentState, coeffs, m: float, omega, dt: float
) -> MomentState:
    """One RK4 step of the position-coupling plus-mode moment ODEs.

        d<x^2>/dt   = <{x,p}>/m
        d<{x,p}>/dt = 2<p^2>/m - 2 m O^2 <x^2> - 2 gamma <{x,p}> - 2 f
        d<p^2>/dt   = -m O^2 <{x,p}> - 4 gamma <p^2> + 2 D

    ``coeffs`` and ``omega`` may be callables of time.  The minus block is
    advanced by exact free rotation over the same interval.
    """
    cfn = coeffs if callable(coeffs) else ConstantSchedule(coeffs)
    ofn = _as_fn(omega)
    t0 = state.time
    _check_step(dt, ofn(t0), cfn(t0).gamma)

    def deriv(t: float, y: np.ndarray) -> np.ndarray:
        x2, p2, xp = y
        c = cfn(t)
        w2 = ofn(t) ** 2
        return np.array([
            xp / m,
            -m * w2 * xp - 4.0 * c.gamma * p2 + 2.0 * c.diffusion,
            2.0 * p2 / m - 2.0 * m * w2 * x2 - 2.0 * c.gamma * xp - 2.0 * c.anomalous,
        ])

    x2, p2, xp = _rk4(deriv, np.array(state.plus_block_moments()), t0, dt)
    return replace(state, x2_plus=x2, p2_plus=p2, xp_plus=xp, time=t0 + dt)


def step_symmetric_model(
    state: MomentState, coeffs, mass, omega, dt: float
) -> MomentState:
    """One RK4 step of the symmetric-coupling plus-mode moment ODEs.

        d<p^2>/dt   = -M O^2 <{x,p}> - 4 g~ <p^2> + 2 D~
        d<x^2>/dt   = <{x,p}>/M - 4 g~ <x^2> + 2 D~/(M^2 O^2)
        d<{x,p}>/dt = 2<p^2>/M - 2 M O^2 <x^2> - 4 g~ <{x,p}>

    ``coeffs``, ``mass`` and ``omega`` may be callables of time.
    """
    cfn = coeffs if callable(coeffs) else ConstantSchedule(coeffs)
    mfn, ofn = _as_fn(mass), _as_fn(omega)
    t0 = state.time
    _check_step(dt, ofn(t0), cfn(t0).gamma)

    def deriv(t: float, y: np.ndarray) -> np.ndarray:
        x2, p2, xp = y
        c = cfn(t)
        mm, w = mfn(t), ofn(t)
        w2 = w * w
        return np.array([
            xp / mm - 4.0 * c.gamma * x2 + 2.0 * c.diffusion / (mm * mm * w2),
            -mm * w2 * xp - 4.0 * c.gamma * p2 + 2.0 * c.diffusion,
            2.0 * p2 / mm - 2.0 * mm * w2 * x2 - 4.0 * c.gamma * xp,
        ])

    x2, p2, xp = _rk4(deriv, np.array(state.plus_block_moments()), t0, dt)
    return replace(state, x2_plus=x2, p2_plus=p2, xp_plus=xp, time=t0 + dt)


def default_step(omega: float, gamma: float) -> float:
    """Fixed RK4 step: min(0.01/omega, 0.01/gamma)."""
    return _STEP_FACTOR / max(abs(omega), abs(gamma))


def integrate(
    state: MomentState,
    coeffs,
    m,
    omega,
    t_final: float,
    dt: float | None = None,
    model: str = "position",
    m_minus: float | None = None,
    omega_minus: float | None = None,
    sample_every: int = 1,
) -> list[MomentState]:
    """March the plus-mode ODEs to t_final; returns sampled states.

    The minus block is rotated analytically to each sample time, so its
    evolution is exact regardless of dt.  ``m`` and ``omega`` follow the
    conventions of the chosen stepper.
    """
    if model == "position":
        stepper = lambda s, d: step_position_model(s, coeffs, m, omega, d)
    elif model == "symmetric":
        stepper = lambda s, d: step_symmetric_model(s, coeffs, m, omega, d)
    else:
        raise ValueError(f"unknown coupling model {model!r}")
    if dt is None:
        cfn = coeffs if callable(coeffs) else ConstantSchedule(coeffs)
        w0 = omega(state.time) if callable(omega) else omega
        dt = default_step(w0, cfn(state.time).gamma)

    mm = m_minus if m_minus is not None else (m(0.0) if callable(m) else m)
    wm = omega_minus if omega_minus is not None else (
        omega(0.0) if callable(omega) else omega
    )
    minus0 = state.minus_block()
    t0 = state.time
    n_steps = max(1, math.ceil((t_final - t0) / dt))
    out = [state]
    s = state
    for k in range(n_steps):
        step_dt = min(dt, t_final - s.time)
        if step_dt <= 0:
            break
        s = stepper(s, step_dt)
        if k % sample_every == sample_every - 1 or s.time >= t_final:
            rot = free_rotation(minus0, mm, wm, s.time - t0)
            s = replace(
                s,
                x2_minus=rot[0, 0],
                p2_minus=rot[1, 1],
                xp_minus=2.0 * rot[0, 1],
            )
            out.append(s)
    return out


# ---------------------------------------------------------------------------
# Minus mode and entanglement readout
# ---------------------------------------------------------------------------

def free_minus_evolution(
    minus_block: np.ndarray, m_minus: float, omega_minus: float, t: float
) -> np.ndarray:
    """Free-oscillator rotation of the decoupled minus-mode block."""
    return free_rotation(minus_block, m_minus, omega_minus, t)


def negativity_from_moments(state: MomentState) -> float:
    """E_N of the two-oscillator state assembled from the two mode blocks.

    Valid in the asymptotic regime where the (+,-) cross block vanishes.
    """
    v = np.zeros((4, 4))
    v[:2, :2] = state.plus_block()
    v[2:, 2:] = state.minus_block()
    normal = CovarianceMatrix(v, Ordering.NORMAL)
    return log_negativity(basis_change(normal, Ordering.PHYSICAL))
