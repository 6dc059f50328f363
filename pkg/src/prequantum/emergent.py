"""Emergent quantum behaviour read off converged trajectories.

After ``omega`` settles at ``omega*``, the angle combination
``theta(t) = n . phi(t)`` of a superselection sector ``n`` grows linearly
with slope ``n . omega*``. This equals the phase ``E* t`` picked up by an
energy eigenstate of a suitably chosen Hamiltonian built from the beables.
Three such Hamiltonians are supported:

``"uniform"``
    All components of ``n`` equal ``n'``; ``H = sum_k (sum_m M*[m, k]) A_k``,
    ``E* = sum_m omega*_m`` and time rescaled by ``n'``.
``"dominant"``
    ``n_1`` dominates; ``H = sum_k M*[0, k] A_k``, ``E* = omega*_1``, time
    rescaled by ``n_1``. Exact only up to the neglected components.
``"general"``
    ``H = sum_k (n @ M*)[k] A_k``, ``E* = n . omega*``, no rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .errors import (ConfigurationError, ContractViolation, IncoherentFixedPointWarning,
                     InsufficientDataError, SamplingError)

__all__ = [
    "CASES",
    "EmergentHamiltonian",
    "ModePhase",
    "PhaseComparison",
    "build_hamiltonian",
    "emergent_energy",
    "match_eigenvalue",
    "schrodinger_evolve",
    "mode_phase",
    "compare_emergent_phase",
    "limit_cycle_period",
    "interference_ensemble",
    "beat_frequency",
]

CASES = ("uniform", "dominant", "general")


def _check_case(case_tag, n_vec):
    if case_tag not in CASES:
        raise ContractViolation(f"unknown Hamiltonian case {case_tag!r}; expected one of {CASES}")
    n_vec = np.asarray(n_vec)
    if case_tag == "uniform" and not np.all(n_vec == n_vec[0]):
        raise ContractViolation(f"uniform case needs all components of n_vec equal, got {n_vec.tolist()}")
    if case_tag in ("uniform", "dominant") and n_vec[0] == 0:
        raise ContractViolation(f"{case_tag} case needs a nonzero rescaling factor n_1")


@dataclass(frozen=True, eq=False)
class EmergentHamiltonian:
    case_tag: str
    matrix: np.ndarray
    coefficients: np.ndarray
    n_vec: np.ndarray
    E_star: float | None = None
    t_rescale: int | None = None

    def eigh(self):
        return np.linalg.eigh(self.matrix)

    def rescale(self, dt):
        """Map a physical time increment to the emergent time ``t'``."""
        return dt if self.t_rescale is None else self.t_rescale * dt


def build_hamiltonian(case_tag, n_vec, M_star, cset, report=None):
    """Emergent Hamiltonian ``sum_k c_k A_k`` for one of the three cases.

    With ``report`` given, ``E_star`` is filled in from :func:`emergent_energy`.
    """
    n_vec = np.asarray(n_vec, dtype=int).ravel()
    M = np.asarray(M_star, dtype=float)
    N = cset.num_beables
    if n_vec.shape != (N,) or M.shape != (N, N):
        raise ConfigurationError(f"n_vec and M_star must match N={N}")
    _check_case(case_tag, n_vec)
    if case_tag == "uniform":
        coeffs = M.sum(axis=0)
        rescale = int(n_vec[0])
    elif case_tag == "dominant":
        coeffs = M[0].copy()
        rescale = int(n_vec[0])
    else:
        coeffs = n_vec @ M
        rescale = None
    H = np.tensordot(coeffs, cset.operators, axes=1)
    H = 0.5 * (H + H.conj().T)
    E = None if report is None else emergent_energy(report, case_tag, n_vec)
    return EmergentHamiltonian(case_tag, H, coeffs, n_vec, E, rescale)


def emergent_energy(report, case_tag, n_vec):
    """Energy selected by a fixed point: ``sum omega*``, ``omega*_1`` or ``n . omega*``.

    Warns with :class:`IncoherentFixedPointWarning` when the fixed point mixes
    lattice columns, since the value then need not be an eigenvalue.
    """
    n_vec = np.asarray(n_vec, dtype=int).ravel()
    _check_case(case_tag, n_vec)
    if not report.converged:
        raise ContractViolation(f"fixed point not converged (residual {report.residual:.3e})")
    w = np.asarray(report.omega_star, dtype=float)
    if not report.coherent:
        warnings.warn(
            f"incoherent fixed point (columns {report.j.tolist()}); the {case_tag} energy "
            "is not guaranteed to be an eigenvalue",
            IncoherentFixedPointWarning, stacklevel=2)
    if case_tag == "uniform":
        return float(np.sum(w))
    if case_tag == "dominant":
        return float(w[0])
    return float(n_vec @ w)


def match_eigenvalue(H, E):
    """Nearest eigenvalue of ``H`` to ``E``: ``(index, eigenvalue, eigenvector, gap)``."""
    matrix = H.matrix if isinstance(H, EmergentHamiltonian) else np.asarray(H)
    w, v = np.linalg.eigh(matrix)
    k = int(np.argmin(np.abs(w - E)))
    return k, float(w[k]), v[:, k], float(abs(w[k] - E))


def schrodinger_evolve(H, psi0, t):
    """``exp(-i H t) psi0`` by eigendecomposition; ``t`` may be an array.

    For array ``t`` the result has shape ``(len(t), d)``.
    """
    matrix = H.matrix if isinstance(H, EmergentHamiltonian) else np.asarray(H, dtype=complex)
    psi0 = np.asarray(psi0, dtype=complex)
    if not np.linalg.norm(psi0) > 0:
        raise ConfigurationError("psi0 must be nonzero")
    w, v = np.linalg.eigh(matrix)
    coeffs = v.conj().T @ psi0
    t_arr = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(t_arr, w))
    return (phases * coeffs) @ v.T


@dataclass(frozen=True, eq=False)
class ModePhase:
    n_vec: np.ndarray
    theta: np.ndarray
    times: np.ndarray
    t_converged: float | None
    slope: float | None  # n . omega*, when the trajectory converged


def mode_phase(traj, n_vec):
    """Phase ``theta(t) = n . phi(t)`` of superselection sector ``n_vec``.

    ``phi`` is already continuous, so no branch choice is needed; samples
    whose increment reaches pi are rejected because the sampled phase would
    then be ambiguous modulo 2 pi.
    """
    n_vec = np.asarray(n_vec, dtype=int).ravel()
    if n_vec.shape != (traj.num_beables,):
        raise ConfigurationError(f"n_vec must have length {traj.num_beables}")
    theta = traj.phi @ n_vec
    if theta.size > 1:
        step = np.max(np.abs(np.diff(theta)))
        if step >= np.pi:
            raise SamplingError(
                f"phase increment {step:.3f} rad per sample reaches pi; "
                "use a finer output interval")
    slope = float(n_vec @ traj.omega[-1]) if traj.converged else None
    return ModePhase(n_vec, theta, traj.times, traj.t_converged, slope)


@dataclass(frozen=True, eq=False)
class PhaseComparison:
    case: str
    n_vec: np.ndarray
    E_star: float
    times: np.ndarray
    deviation: np.ndarray
    max_phase_dev: float
    window: tuple
    eigenvalue: float
    eigen_gap: float
    schrodinger_deviation: np.ndarray
    max_schrodinger_dev: float

    def to_json_dict(self):
        return {
            "case": self.case,
            "n_vec": [int(v) for v in self.n_vec],
            "E_star": float(self.E_star),
            "max_phase_dev": float(self.max_phase_dev),
            "window": [float(self.window[0]), float(self.window[1])],
            "eigenvalue": float(self.eigenvalue),
            "eigen_gap": float(self.eigen_gap),
            "max_schrodinger_dev": float(self.max_schrodinger_dev),
        }


def compare_emergent_phase(mode, H, report, window=None):
    """Compare the trajectory phase with the emergent energy phase ``E* t'``.

    The deviation is ``[theta(t) - theta(t_c)] - E* tau`` with ``tau`` the
    rescaled time elapsed since convergence. As an independent reference the
    Hamiltonian eigenstate nearest ``E*`` is evolved with
    :func:`schrodinger_evolve` and its overlap phase is compared with
    ``-(theta - theta_c)`` as well.

    Parameters
    ----------
    window : (float, float), optional
        Time window; defaults to ``(t_converged, last sample)``. The start
        must coincide with a recorded sample.
    """
    if not np.array_equal(mode.n_vec, H.n_vec):
        raise ContractViolation(
            f"mode n_vec {mode.n_vec.tolist()} differs from Hamiltonian n_vec {H.n_vec.tolist()}")
    _check_case(H.case_tag, mode.n_vec)
    if mode.t_converged is None:
        raise ContractViolation("trajectory has not converged")
    E = emergent_energy(report, H.case_tag, mode.n_vec)
    t_a, t_b = (mode.t_converged, mode.times[-1]) if window is None else window
    if t_a < mode.t_converged:
        raise ContractViolation(f"window starts at {t_a} before convergence at {mode.t_converged}")
    mask = (mode.times >= t_a) & (mode.times <= t_b)
    times = mode.times[mask]
    if times.size < 2 or times[0] != t_a:
        raise InsufficientDataError(f"window ({t_a}, {t_b}) must start on a recorded sample")
    dtheta = mode.theta[mask] - mode.theta[mask][0]
    tau = H.rescale(times - t_a)
    deviation = dtheta - E * tau

    _, e_k, v_k, gap = match_eigenvalue(H, E)
    if tau.size > 1 and np.max(np.abs(np.diff(tau))) * abs(e_k) >= np.pi:
        raise SamplingError("Schrodinger phase sampled too coarsely to unwrap")
    psi = schrodinger_evolve(H, v_k, tau)
    overlap = psi @ v_k.conj()
    schr_phase = np.unwrap(np.angle(overlap))
    schr_dev = -dtheta - schr_phase

    return PhaseComparison(
        H.case_tag, mode.n_vec, E, times, deviation, float(np.max(np.abs(deviation))),
        (float(t_a), float(times[-1])), e_k, gap, schr_dev, float(np.max(np.abs(schr_dev))),
    )


def limit_cycle_period(traj, component=0, t_from=None, zero_tol=1e-12):
    """Mean time between successive 2 pi wraps of ``phi[component]`` after convergence.

    Returns ``math.inf`` when ``|omega*| <= zero_tol`` (the angle freezes).
    """
    if t_from is None:
        if not traj.converged:
            raise ContractViolation("trajectory has not converged")
        t_from = traj.t_converged
    w_star = float(traj.omega[-1, component])
    if abs(w_star) <= zero_tol:
        return math.inf
    mask = traj.times >= t_from
    t = traj.times[mask]
    phi = traj.phi[mask, component] * np.sign(w_star)
    k = np.floor(phi / (2 * np.pi))
    jumps = np.diff(k)
    if np.any(jumps > 1) or np.any(jumps < 0):
        raise SamplingError("phase advances more than one turn per sample")
    idx = np.flatnonzero(jumps == 1)
    if idx.size < 2:
        raise InsufficientDataError(f"only {idx.size} wraps after t={t_from:g}")
    level = 2 * np.pi * k[idx + 1]
    frac = (level - phi[idx]) / (phi[idx + 1] - phi[idx])
    crossings = t[idx] + frac * (t[idx + 1] - t[idx])
    return float((crossings[-1] - crossings[0]) / (crossings.size - 1))


def interference_ensemble(p, omegas, n, t_grid):
    """Intensity ``|sum_i p_i exp(-i n omega_i t)|**2`` of a weighted ensemble."""
    p = np.asarray(p, dtype=float).ravel()
    omegas = np.asarray(omegas, dtype=float).ravel()
    if p.shape != omegas.shape:
        raise ConfigurationError("weights and frequencies must have the same length")
    if np.any(p <= 0):
        raise ConfigurationError("weights must be positive")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ConfigurationError(f"weights sum to {p.sum()!r}, expected 1")
    t = np.asarray(t_grid, dtype=float)
    amp = np.exp(-1j * n * np.multiply.outer(t, omegas)) @ p
    return (amp * amp.conj()).real


def beat_frequency(t, intensity):
    """Angular frequency of an oscillating series from its upward mid-level crossings."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(intensity, dtype=float)
    x = x - 0.5 * (x.max() + x.min())
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    if idx.size < 2:
        raise InsufficientDataError("fewer than two upward crossings")
    crossings = t[idx] - x[idx] * (t[idx + 1] - t[idx]) / (x[idx + 1] - x[idx])
    period = (crossings[-1] - crossings[0]) / (crossings.size - 1)
    return float(2 * np.pi / period)
