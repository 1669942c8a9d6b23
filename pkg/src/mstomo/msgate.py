"""Molmer-Sorensen gate: effective unitary, spin-motion dynamics, parity analysis.

The effective propagator at integer multiples of the gate time is

    U(n) = exp(-i (pi/8) n S_y^2),   S_y = sigma_y^(1) + sigma_y^(2),

whose n = 1 expansion is (I - i Y(x)Y) / sqrt(2) up to a global phase and
takes |SS> to (|SS> + i |DD>) / sqrt(2).

Between gate times the dynamics are obtained numerically from the
interaction-picture bichromatic coupling in the Lamb-Dicke regime,

    H(t) = g S_y (a e^{+i eps t} + a^dag e^{-i eps t}),

on the truncated spin (x) Fock space.  The coupling strength is g = eta *
Omega: with the calibration eta Omega = eps / 4 the closed spin-motion loop
at t_g = 2 pi / eps accumulates exactly the pi/8 two-qubit phase, i.e. the
propagator above.  (A coupling of half that strength would close the loop
with only a quarter of the entangling phase and never reach the Bell
state, which pins the convention.)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .qcore import PAULIS_1Q

__all__ = [
    "MSGateParams",
    "PopulationCurve",
    "ParityScan",
    "CutoffError",
    "ConvergenceError",
    "ms_unitary",
    "bell_state",
    "propagate_populations",
    "propagate_spin_state",
    "parity_scan",
    "bell_fidelity",
]

_S_Y = np.kron(PAULIS_1Q[2], np.eye(2)) + np.kron(np.eye(2), PAULIS_1Q[2])
_S_Y2 = _S_Y @ _S_Y
_W, _V = np.linalg.eigh(_S_Y2)  # eigenvalues (0, 0, 4, 4)


class CutoffError(RuntimeError):
    """Raised when the Fock-space truncation is too small for the dynamics."""


class ConvergenceError(RuntimeError):
    """Raised when halving the integrator step still changes the result."""


def ms_unitary(n: int) -> np.ndarray:
    """exp(-i (pi/8) S_y^2)^n via the eigendecomposition of S_y^2."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError("gate count must be a non-negative integer")
    phases = np.exp(-1j * np.pi / 8.0 * n * _W)
    return (_V * phases) @ _V.conj().T


def bell_state() -> np.ndarray:
    """(|SS> + i |DD>) / sqrt(2), the state one gate makes from |SS>."""
    return np.array([1.0, 0.0, 0.0, 1j], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class MSGateParams:
    """Physical gate parameters (angular frequencies in rad/s).

    ``fock_cutoff`` is the highest retained Fock level; the propagation
    checks that the top two levels stay unpopulated and raises otherwise.
    """

    epsilon: float
    eta: float
    omega: float
    mode_freq: float = 2.0 * np.pi * 1.679e6
    n_gates: int = 1
    fock_cutoff: int = 20
    initial_nbar: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon <= 0 or self.eta <= 0 or self.omega <= 0:
            raise ValueError("epsilon, eta and omega must be positive")
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be at least 2")
        if self.initial_nbar < 0:
            raise ValueError("initial_nbar must be non-negative")

    @property
    def gate_time(self) -> float:
        return 2.0 * np.pi / self.epsilon

    @property
    def coupling(self) -> float:
        return self.eta * self.omega

    def calibration_offset(self) -> float:
        """Relative deviation of eta*Omega from eps/4."""
        return self.coupling / (self.epsilon / 4.0) - 1.0

    def require_calibrated(self, tol: float = 1e-9) -> None:
        off = self.calibration_offset()
        if abs(off) > tol:
            raise ValueError(
                f"gate is not calibrated: eta*Omega deviates from eps/4 by {off:.3e}"
            )

    @classmethod
    def calibrated(
        cls, epsilon: float = 2.0 * np.pi * 7.7e3, eta: float = 0.05, **kwargs
    ) -> "MSGateParams":
        """Parameters with Omega set so that eta*Omega = eps/4."""
        return cls(epsilon=epsilon, eta=eta, omega=epsilon / (4.0 * eta), **kwargs)


@dataclass(frozen=True)
class PopulationCurve:
    times: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self) -> None:
        total = self.p0 + self.p1 + self.p2
        if np.max(np.abs(total - 1.0)) > 1e-9:
            raise ValueError("populations must sum to 1")
        for arr in (self.p0, self.p1, self.p2):
            if np.min(arr) < -1e-12 or np.max(arr) > 1.0 + 1e-12:
                raise ValueError("populations must lie in [0, 1]")


@dataclass(frozen=True)
class ParityScan:
    phases: np.ndarray
    parity: np.ndarray
    fitted_contrast: float
    fitted_phase: float
    fitted_offset: float
    residual_rms: float


# ---------------------------------------------------------------------------
# spin-motion propagation


def _thermal_weights(nbar: float, cutoff: int) -> list[tuple[int, float]]:
    if nbar == 0.0:
        return [(0, 1.0)]
    weights = []
    total = 0.0
    for n in range(cutoff + 1):
        w = (1.0 / (1.0 + nbar)) * (nbar / (1.0 + nbar)) ** n
        weights.append((n, w))
        total += w
        if total > 1.0 - 1e-8:
            break
    return [(n, w / total) for n, w in weights]


def _drive_matrix(nf: int):
    lower = np.diag(np.sqrt(np.arange(1, nf)), -1)  # a^dag
    return lower.T.copy(), lower  # a, a^dag


def _spin_states_pure(params, times, step):
    """Spin density matrices at `times` from pure-state RK4 per Fock level."""
    nf = params.fock_cutoff + 1
    a, adag = _drive_matrix(nf)
    g = params.coupling
    eps = params.epsilon

    def rhs(psi, t):
        drive = a * np.exp(1j * eps * t) + adag * np.exp(-1j * eps * t)
        return -1j * g * (_S_Y @ psi @ drive.T)

    spins = [np.zeros((4, 4), dtype=complex) for _ in times]
    for n0, weight in _thermal_weights(params.initial_nbar, params.fock_cutoff):
        psi = np.zeros((4, nf), dtype=complex)
        psi[0, n0] = 1.0  # |SS> (x) |n0>
        t = 0.0
        for k, target in enumerate(times):
            span = target - t
            if span > 0:
                nsteps = max(1, math.ceil(span / step))
                h = span / nsteps
                for _ in range(nsteps):
                    k1 = rhs(psi, t)
                    k2 = rhs(psi + 0.5 * h * k1, t + 0.5 * h)
                    k3 = rhs(psi + 0.5 * h * k2, t + 0.5 * h)
                    k4 = rhs(psi + h * k3, t + h)
                    psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                    t += h
            top = float(np.sum(np.abs(psi[:, -2:]) ** 2))
            if top > 1e-8:
                raise CutoffError(
                    f"top-two Fock populations reached {top:.2e}; raise fock_cutoff"
                )
            spins[k] = spins[k] + weight * (psi @ psi.conj().T)
    return spins


def _spin_states_depol(params, times, step, alpha):
    """Density-matrix RK4 with spin depolarization interleaved per step."""
    nf = params.fock_cutoff + 1
    a, adag = _drive_matrix(nf)
    g = params.coupling
    eps = params.epsilon
    tg = params.gate_time
    dim = 4 * nf

    rho_m = np.zeros((nf, nf), dtype=complex)
    for n0, weight in _thermal_weights(params.initial_nbar, params.fock_cutoff):
        rho_m[n0, n0] = weight
    spin0 = np.zeros((4, 4), dtype=complex)
    spin0[0, 0] = 1.0
    rho = np.kron(spin0, rho_m)

    def commutator(r, t):
        drive = a * np.exp(1j * eps * t) + adag * np.exp(-1j * eps * t)
        h = g * np.kron(_S_Y, drive)
        return -1j * (h @ r - r @ h)

    def depolarize_step(r, dp):
        blocks = r.reshape(4, nf, 4, nf)
        motion = np.einsum("snsm->nm", blocks)
        mixed = np.kron(np.eye(4) / 4.0, motion)
        return (1.0 - dp) * r + dp * mixed

    out = []
    t = 0.0
    for target in times:
        span = target - t
        if span > 0:
            nsteps = max(1, math.ceil(span / step))
            h = span / nsteps
            for _ in range(nsteps):
                k1 = commutator(rho, t)
                k2 = commutator(rho + 0.5 * h * k1, t + 0.5 * h)
                k3 = commutator(rho + 0.5 * h * k2, t + 0.5 * h)
                k4 = commutator(rho + h * k3, t + h)
                rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                rho = depolarize_step(rho, alpha * h / tg)
                t += h
        blocks = rho.reshape(4, nf, 4, nf)
        motion_pop = np.einsum("snsn->n", blocks).real
        if float(motion_pop[-2:].sum()) > 1e-8:
            raise CutoffError("top-two Fock populations exceeded 1e-8")
        out.append(np.einsum("snmn->sm", blocks))
    return out


def _spin_states(params, times, alpha, step):
    if alpha == 0.0:
        return _spin_states_pure(params, times, step)
    return _spin_states_depol(params, times, step, alpha)


def propagate_spin_state(
    params: MSGateParams,
    times,
    alpha: float = 0.0,
    *,
    steps_per_gate: int = 2000,
    check: bool = True,
) -> list[np.ndarray]:
    """Reduced spin density matrices at the requested times.

    Integrates the bichromatic coupling with fixed-step RK4 (step
    t_g / steps_per_gate) from |SS> and ground or thermal motion, tracing
    out the motion at each requested time.  With ``alpha > 0`` a spin
    depolarization of probability ``alpha * dt / t_g`` is interleaved with
    every step.  When ``check`` is set the integration is repeated at half
    the step and a Richardson-style comparison must agree to 1e-7.
    """
    params.require_calibrated(1e-6)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and sorted")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    step = params.gate_time / steps_per_gate
    spins = _spin_states(params, times, alpha, step)
    if check:
        finer = _spin_states(params, times, alpha, step / 2.0)
        dev = max(
            float(np.max(np.abs(c - f))) for c, f in zip(spins, finer)
        )
        if dev > 1e-7:
            raise ConvergenceError(
                f"halving the integrator step changed the result by {dev:.2e}"
            )
        spins = finer
    return [0.5 * (s + s.conj().T) for s in spins]


def populations_from_spin(rho_spin: np.ndarray) -> tuple[float, float, float]:
    """(P0, P1, P2): probabilities of 0/1/2 bright ions of a spin state."""
    diag = np.diag(rho_spin).real
    return float(diag[3]), float(diag[1] + diag[2]), float(diag[0])


def propagate_populations(
    params: MSGateParams,
    times,
    alpha: float = 0.0,
    **kwargs,
) -> PopulationCurve:
    """P0/P1/P2 versus time for the gate dynamics (see propagate_spin_state)."""
    spins = propagate_spin_state(params, times, alpha, **kwargs)
    pops = np.array([populations_from_spin(s) for s in spins])
    return PopulationCurve(
        times=np.asarray(times, dtype=float),
        p0=pops[:, 0],
        p1=pops[:, 1],
        p2=pops[:, 2],
    )


# ---------------------------------------------------------------------------
# parity analysis


_PARITY_OP = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)


def _parity_pulse(phase: float) -> np.ndarray:
    axis = np.cos(phase) * PAULIS_1Q[1] + np.sin(phase) * PAULIS_1Q[2]
    u = np.cos(np.pi / 4.0) * np.eye(2) - 1j * np.sin(np.pi / 4.0) * axis
    return np.kron(u, u)


def parity_scan(rho: np.ndarray, phases) -> ParityScan:
    """Parity P0 + P2 - P1 after a global half-pi pulse of scanned phase.

    Fits A sin(2 phi + phi0) + B by linear least squares; the two-photon
    coherence of an entangled state shows up as the 2 phi oscillation and
    ``fitted_contrast = |A|``.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or len(phases) < 4:
        raise ValueError("need at least 4 phases for the sine fit")
    rho = np.asarray(rho, dtype=complex)
    parity = np.empty(len(phases))
    for k, phi in enumerate(phases):
        u = _parity_pulse(phi)
        rotated = u @ rho @ u.conj().T
        parity[k] = float(np.trace(rotated @ _PARITY_OP).real)
    design = np.column_stack(
        [np.sin(2.0 * phases), np.cos(2.0 * phases), np.ones_like(phases)]
    )
    if np.linalg.matrix_rank(design) < 3:
        raise ValueError("phase grid is degenerate for a 2-phi sine fit")
    coef, *_ = np.linalg.lstsq(design, parity, rcond=None)
    resid = parity - design @ coef
    contrast = float(np.hypot(coef[0], coef[1]))
    return ParityScan(
        phases=phases,
        parity=parity,
        fitted_contrast=contrast,
        fitted_phase=float(np.arctan2(coef[1], coef[0])),
        fitted_offset=float(coef[2]),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def bell_fidelity(p0: float, p2: float, contrast: float) -> float:
    """Bell-state fidelity estimate (p0 + p2)/2 + contrast/2.

    The populations supply the diagonal part of <Phi|rho|Phi> and the parity
    contrast the coherence part.  Inconsistent inputs are clamped to [0, 1]
    with a warning.
    """
    for name, val in (("p0", p0), ("p2", p2)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must be in [0, 1]")
    value = 0.5 * (p0 + p2) + 0.5 * contrast
    if value > 1.0:
        warnings.warn(
            f"inconsistent population/contrast inputs give fidelity {value:.4f};"
            " clamping to 1",
            stacklevel=2,
        )
        value = 1.0
    return value
