"""Exact evolution of the full system+bath covariance matrix.

The total Hamiltonian is quadratic, H = (1/2) r^T H r over the FULL-ordered
phase-space vector (x1, p1, x2, p2, q1, pi1, ...), so the covariance obeys
the Lyapunov equation dV/dt = K V + V K^T with drift K = J H.  Two
integration paths are provided: a normal-mode propagator S(t) = exp(Kt)
built from one eigendecomposition (exactly symplectic, arbitrary t), and a
fixed-step RK4 march used as an independent cross-check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .bath import DiscreteBath, thermal_bath_covariance
from .errors import (
    RecurrenceWindowError,
    StepSizeError,
    UnstableHamiltonianError,
)
from .gaussian import (
    CovarianceMatrix,
    Ordering,
    OscillatorParams,
    basis_change,
    log_negativity,
    symplectic_form,
)

RECURRENCE_MARGIN = 0.8
RK4_STEP_FACTOR = 0.05
REDUCED_PHYSICALITY_ATOL = 1e-9
_PSD_TOL = 1e-10


class Integrator(enum.Enum):
    RK4 = "rk4"
    NORMAL_MODE = "normal_mode"


@dataclass(frozen=True)
class EvolutionConfig:
    """Sampling plan for one evolution.

    ``dt`` is the RK4 step (also the sample spacing before striding); the
    normal-mode path evaluates S(t) directly at the sample times.
    """

    t_max: float
    dt: float
    sample_stride: int = 1
    integrator: Integrator = Integrator.NORMAL_MODE

    def __post_init__(self) -> None:
        if self.t_max <= 0 or self.dt <= 0:
            raise ValueError("t_max and dt must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    def sample_times(self) -> np.ndarray:
        idx = np.arange(int(round(self.t_max / self.dt)) + 1)
        return self.dt * idx[idx % self.sample_stride == 0]


@dataclass(frozen=True)
class DriftMatrix:
    """Drift K = J H of the Lyapunov equation plus the decoupled minus mode.

    ``m_minus``/``omega_minus`` are the exact parameters of the bath-free
    minus oscillator implied by the (possibly renormalized) model.
    """

    k: np.ndarray
    hamiltonian: np.ndarray
    bath: DiscreteBath
    model: str
    m_minus: float
    omega_minus: float

    def __post_init__(self) -> None:
        for name in ("k", "hamiltonian"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.k.shape[0]


def _bath_block(h: np.ndarray, bath: DiscreteBath) -> None:
    for k in range(bath.n_modes):
        iq, ip = 4 + 2 * k, 5 + 2 * k
        h[iq, iq] = bath.masses[k] * bath.frequencies[k] ** 2
        h[ip, ip] = 1.0 / bath.masses[k]


def _check_stable(h: np.ndarray) -> None:
    lo = float(np.linalg.eigvalsh(h)[0])
    if lo < -_PSD_TOL * max(1.0, float(np.abs(h).max())):
        raise UnstableHamiltonianError(
            f"total Hamiltonian has negative eigenvalue {lo:.3e}"
        )


def build_position_model(
    osc: OscillatorParams, bath: DiscreteBath, renormalize: bool = True
) -> DriftMatrix:
    """Drift matrix for bilinear position coupling (x1 + x2) sum c_k q_k.

    With ``renormalize`` the given frequencies and coupling are interpreted
    as renormalized values: the bare ones are shifted by half the discrete
    counterterm sum, so that completing the square in the bath coordinates
    returns exactly the requested dressed plus mode.
    """
    if osc.c12_tilde != 0.0:
        raise ValueError("momentum coupling requires the symmetric model")
    m = osc.m
    shift = -bath.counterterm_sum(m) / 2.0 if renormalize else 0.0
    w1_sq = osc.omega1**2 + shift
    w2_sq = osc.omega2**2 + shift
    c12 = osc.c12 + shift

    n = bath.n_modes
    dim = 4 + 2 * n
    h = np.zeros((dim, dim))
    h[0, 0] = m * w1_sq
    h[2, 2] = m * w2_sq
    h[1, 1] = h[3, 3] = 1.0 / m
    h[0, 2] = h[2, 0] = m * c12
    _bath_block(h, bath)
    for k in range(n):
        iq = 4 + 2 * k
        h[0, iq] = h[iq, 0] = bath.couplings[k]
        h[2, iq] = h[iq, 2] = bath.couplings[k]
    _check_stable(h)
    k_mat = symplectic_form(dim) @ h

    w_minus_sq = (w1_sq + w2_sq) / 2.0 - c12
    if w_minus_sq <= 0:
        raise UnstableHamiltonianError("minus oscillator frequency^2 <= 0")
    return DriftMatrix(k_mat, h, bath, "position", m, math.sqrt(w_minus_sq))


def build_symmetric_model(
    osc: OscillatorParams, bath: DiscreteBath, renormalize: bool = True
) -> DriftMatrix:
    """Drift matrix for coupling symmetric in position and momentum.

    The interaction is the coordinate form
    (x1 + x2) sum c_k q_k + ((p1 + p2)/(m w)) sum (c_k / m_k w_k) pi_k
    with equal position and momentum coupling strengths.  Requires
    resonance.  With ``renormalize``, the bare frequency solves
    (w_b^2 - S/2)^2 = w_b^2 Omega^2 where S is the discrete counterterm
    sum; this makes both the dressed plus mode and the bath-free minus
    mode reproduce the requested renormalized parameters exactly (and
    yields an unsqueezed equilibrium, r_crit = 0, when c12 = c12_tilde).
    """
    if not osc.resonant:
        raise ValueError("symmetric model requires resonant oscillators")
    m = osc.m
    big_omega_sq = osc.omega1**2
    s = -bath.counterterm_sum(m)
    if renormalize:
        w_bare_sq = 0.5 * (
            s + big_omega_sq + math.sqrt((s + big_omega_sq) ** 2 - s * s)
        )
        m_over_big_m = (w_bare_sq - s / 2.0) / w_bare_sq
        c12 = osc.c12 / m_over_big_m + s / 2.0
        c12_t = osc.c12_tilde * m_over_big_m * w_bare_sq / big_omega_sq + s / 2.0
    else:
        w_bare_sq = big_omega_sq
        c12, c12_t = osc.c12, osc.c12_tilde

    n = bath.n_modes
    dim = 4 + 2 * n
    h = np.zeros((dim, dim))
    h[0, 0] = h[2, 2] = m * w_bare_sq
    h[1, 1] = h[3, 3] = 1.0 / m
    h[0, 2] = h[2, 0] = m * c12
    h[1, 3] = h[3, 1] = c12_t / (m * w_bare_sq)
    _bath_block(h, bath)
    w_bare = math.sqrt(w_bare_sq)
    for k in range(n):
        iq, ip = 4 + 2 * k, 5 + 2 * k
        c = bath.couplings[k]
        h[0, iq] = h[iq, 0] = c
        h[2, iq] = h[iq, 2] = c
        cp = c / (m * w_bare * bath.masses[k] * bath.frequencies[k])
        h[1, ip] = h[ip, 1] = cp
        h[3, ip] = h[ip, 3] = cp
    _check_stable(h)
    k_mat = symplectic_form(dim) @ h

    fp = 1.0 - c12_t / w_bare_sq
    fx = w_bare_sq - c12
    if fp <= 0 or fx <= 0:
        raise UnstableHamiltonianError("minus oscillator unstable")
    m_minus = m / fp
    omega_minus = math.sqrt(fx * fp)
    return DriftMatrix(k_mat, h, bath, "symmetric", m_minus, omega_minus)


def initial_covariance(system_v: CovarianceMatrix, bath: DiscreteBath) -> CovarianceMatrix:
    """Direct sum of a two-mode system state and the thermal bath state."""
    system_v.require(Ordering.PHYSICAL)
    if system_v.dim != 4:
        raise ValueError("system state must be two-mode")
    vb = thermal_bath_covariance(bath)
    dim = 4 + vb.dim
    v = np.zeros((dim, dim))
    v[:4, :4] = system_v.matrix
    v[4:, 4:] = vb.matrix
    return CovarianceMatrix(v, Ordering.FULL)


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalModeForm:
    """Factorization exp(Kt) = real(B diag(exp(-i mu t)) C).

    Derived from H = L L^T (Cholesky) and the Hermitian eigenproblem of
    i L^T J L; each factor application is exactly symplectic.
    """

    mu: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def propagator(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self.mu * t)
        return np.real((self.b * phases) @ self.c)


def normal_mode_form(drift: DriftMatrix) -> NormalModeForm:
    h = drift.hamiltonian
    dim = drift.dim
    try:
        low = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as err:
        raise UnstableHamiltonianError(
            "Hamiltonian not positive definite; no normal-mode form"
        ) from err
    a = low.T @ symplectic_form(dim) @ low
    mu, w = np.linalg.eigh(1j * a)
    b = np.linalg.solve(low.T, w)
    c = w.conj().T @ low.T
    return NormalModeForm(mu, b, c)


def _check_recurrence(drift: DriftMatrix, t_max: float) -> None:
    limit = RECURRENCE_MARGIN * drift.bath.recurrence_time
    if t_max > limit:
        raise RecurrenceWindowError(
            f"t_max={t_max:g} exceeds {RECURRENCE_MARGIN} * recurrence time "
            f"= {limit:g}; increase the bath mode count"
        )


def _check_rk4_step(drift: DriftMatrix, dt: float) -> None:
    fastest = float(drift.bath.frequencies[-1])
    if dt > RK4_STEP_FACTOR / fastest * (1.0 + 1e-12):
        raise StepSizeError(
            f"RK4 dt={dt:g} exceeds {RK4_STEP_FACTOR}/Lambda = "
            f"{RK4_STEP_FACTOR / fastest:g}"
        )


def evolve(
    v0: CovarianceMatrix, drift: DriftMatrix, cfg: EvolutionConfig
) -> tuple[np.ndarray, list[CovarianceMatrix]]:
    """Full-covariance time series at the configured sample times."""
    v0.require(Ordering.FULL)
    if v0.dim != drift.dim:
        raise ValueError("state and drift dimensions differ")
    _check_recurrence(drift, cfg.t_max)
    times = cfg.sample_times()
    if cfg.integrator is Integrator.NORMAL_MODE:
        form = normal_mode_form(drift)
        out = []
        for t in times:
            s = form.propagator(float(t))
            out.append(CovarianceMatrix(_symmetrize(s @ v0.matrix @ s.T), Ordering.FULL))
        return times, out
    _check_rk4_step(drift, cfg.dt)
    k = drift.k
    v = np.array(v0.matrix)
    out = [v0]
    n_steps = int(round(cfg.t_max / cfg.dt))
    for step in range(1, n_steps + 1):
        v = _rk4_step(k, v, cfg.dt)
        if step % cfg.sample_stride == 0:
            out.append(CovarianceMatrix(_symmetrize(v), Ordering.FULL))
    return times, out


def _symmetrize(v: np.ndarray) -> np.ndarray:
    return 0.5 * (v + v.T)


def _rk4_step(k: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    def deriv(m):
        km = k @ m
        return km + km.T

    k1 = deriv(v)
    k2 = deriv(v + dt / 2.0 * k1)
    k3 = deriv(v + dt / 2.0 * k2)
    k4 = deriv(v + dt * k3)
    return v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def reduce_to_system(v_full: CovarianceMatrix) -> CovarianceMatrix:
    """Partial trace over the bath: the leading 4x4 block."""
    v_full.require(Ordering.FULL)
    return CovarianceMatrix(v_full.matrix[:4, :4], Ordering.PHYSICAL)


# ---------------------------------------------------------------------------
# Negativity traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NegativityTrace:
    """Entanglement and Normal-ordered second moments along an evolution."""

    times: np.ndarray
    e_n: np.ndarray
    dx_plus_sq: np.ndarray
    dp_plus_sq: np.ndarray
    dx_minus_sq: np.ndarray
    dp_minus_sq: np.ndarray
    xp_plus: np.ndarray


def negativity_trace(
    system_v: CovarianceMatrix, drift: DriftMatrix, cfg: EvolutionConfig
) -> NegativityTrace:
    """E_N(t) and plus/minus dispersions from the exact evolution.

    The normal-mode path only propagates the four system rows of S(t),
    which keeps large-bath runs cheap; the RK4 path marches the full
    matrix.  Every recorded reduced state is checked for physicality.
    """
    v0_full = initial_covariance(system_v, drift.bath)
    _check_recurrence(drift, cfg.t_max)
    times = cfg.sample_times()

    if cfg.integrator is Integrator.NORMAL_MODE:
        form = normal_mode_form(drift)
        b4 = form.b[:4, :]
        r = form.c @ v0_full.matrix @ form.c.T
        blocks = []
        for t in times:
            f = b4 * np.exp(-1j * form.mu * float(t))
            blocks.append(np.real(f @ r @ f.T))
    else:
        _, series = evolve(v0_full, drift, cfg)
        blocks = [v.matrix[:4, :4] for v in series]

    return _trace_from_blocks(times, blocks)


def _trace_from_blocks(times: np.ndarray, blocks) -> NegativityTrace:
    n = len(blocks)
    e_n = np.empty(n)
    cols = np.empty((n, 5))
    for i, raw in enumerate(blocks):
        sys_v = CovarianceMatrix(_symmetrize(raw), Ordering.PHYSICAL)
        sys_v.validate_physical(REDUCED_PHYSICALITY_ATOL)
        e_n[i] = log_negativity(sys_v)
        nm = basis_change(sys_v, Ordering.NORMAL).matrix
        cols[i] = nm[0, 0], nm[1, 1], nm[2, 2], nm[3, 3], 2.0 * nm[0, 1]
    return NegativityTrace(
        np.asarray(times, dtype=float), e_n,
        cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], cols[:, 4],
    )


# ---------------------------------------------------------------------------
# Invariant helpers (used by tests and the validate subcommand)
# ---------------------------------------------------------------------------

def symplecticity_defect(s: np.ndarray) -> float:
    """max |S J S^T - J| for a candidate symplectic matrix."""
    j = symplectic_form(s.shape[0])
    return float(np.abs(s @ j @ s.T - j).max())


def energy_of(drift: DriftMatrix, v: CovarianceMatrix) -> float:
    """Mean energy tr(H V) of a zero-mean Gaussian state."""
    return float(np.trace(drift.hamiltonian @ v.matrix))
