"""Real general linear transformations of beable sets and checks built on them.

A transform ``S`` acts on the eigen table column by column (each simultaneous
eigenvector's value vector maps to ``S @ A[:, j]``), on frequencies as
``omega -> S omega`` and on coupling matrices as ``M -> S M S^-1``. The
relation ``omega - M A_j`` is covariant under every ``S``; the field ``F``
built from it is invariant only under permutations (and under unitary
changes of Hilbert-space basis, which leave the table alone).
"""

from __future__ import annotations

from dataclasses import dataclass
import json

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .flow import classify_fixed_point, field_value, integrate_beable_flow
from .operators import EigenTable, conjugate_unitary, row_lattice, simultaneous_spectrum

__all__ = [
    "BeableTransform",
    "CheckResult",
    "apply_transform",
    "covariance_residual",
    "invariance_check",
    "equivariance_check",
    "transform_scenario",
]

KINDS = ("general", "permutation", "diagonal-scaling")


def _is_permutation(S):
    return (np.all((S == 0) | (S == 1))
            and np.all(S.sum(axis=0) == 1) and np.all(S.sum(axis=1) == 1))


@dataclass(frozen=True, eq=False)
class BeableTransform:
    S: np.ndarray
    S_inv: np.ndarray
    kind: str = "general"
    perm: np.ndarray | None = None  # perm[n] = source row of output row n

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown transform kind {self.kind!r}")
        S = np.array(self.S, dtype=float, ndmin=2)
        S_inv = np.array(self.S_inv, dtype=float, ndmin=2)
        err = np.max(np.abs(S @ S_inv - np.eye(S.shape[0])))
        if err > 1e-10:
            raise ConfigurationError(f"S_inv is not the inverse of S (residual {err:.3e})")
        if self.kind == "permutation" and not _is_permutation(S):
            raise ConfigurationError("permutation transform must be a 0/1 matrix with one unit per row/column")
        if self.kind == "diagonal-scaling" and np.any(S != np.diag(np.diagonal(S))):
            raise ConfigurationError("diagonal-scaling transform must be diagonal")
        S.setflags(write=False)
        S_inv.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "S_inv", S_inv)

    @classmethod
    def general(cls, S):
        S = np.array(S, dtype=float, ndmin=2)
        if _is_permutation(S):
            return cls.permutation(np.argmax(S, axis=1))
        if np.all(S == np.diag(np.diagonal(S))):
            return cls.scaling(np.diagonal(S))
        return cls(S, np.linalg.inv(S), "general")

    @classmethod
    def permutation(cls, perm):
        """Transform whose output row ``n`` is input row ``perm[n]``."""
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(len(perm))):
            raise ConfigurationError(f"{perm.tolist()} is not a permutation")
        S = np.eye(len(perm))[perm]
        return cls(S, S.T.copy(), "permutation", perm)

    @classmethod
    def scaling(cls, factors):
        factors = np.asarray(factors, dtype=float)
        if np.any(factors == 0):
            raise ConfigurationError("scaling factors must be nonzero")
        return cls(np.diag(factors), np.diag(1.0 / factors), "diagonal-scaling")

    def inverse(self):
        if self.kind == "permutation":
            return BeableTransform.permutation(np.argsort(self.perm))
        return BeableTransform(self.S_inv, self.S, self.kind)

    def __matmul__(self, other):
        """Composition: ``(self @ other)`` applies ``other`` first."""
        if self.kind == "permutation" and other.kind == "permutation":
            return BeableTransform.permutation(other.perm[self.perm])
        kind = "diagonal-scaling" if (self.kind == other.kind == "diagonal-scaling") else "general"
        return BeableTransform(self.S @ other.S, other.S_inv @ self.S_inv, kind)


def apply_transform(T, table, omega, M):
    """Return ``(S A, S omega, S M S^-1)``; the table is not re-sorted."""
    values = table.values if isinstance(table, EigenTable) else np.asarray(table, dtype=float)
    table_t = EigenTable(T.S @ values)
    omega_t = T.S @ np.asarray(omega, dtype=float)
    M_t = T.S @ np.asarray(M, dtype=float) @ T.S_inv
    return table_t, omega_t, M_t


def covariance_residual(T, table, omega, M):
    """``max_j |(omega' - M' A'_j) - S (omega - M A_j)|_inf`` over eigencolumns."""
    A = table.values if isinstance(table, EigenTable) else np.asarray(table, dtype=float)
    omega = np.asarray(omega, dtype=float)
    M = np.asarray(M, dtype=float)
    table_t, omega_t, M_t = apply_transform(T, A, omega, M)
    lhs = omega_t[:, None] - M_t @ table_t.values
    rhs = T.S @ (omega[:, None] - M @ A)
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class CheckResult:
    check: str
    delta: float
    tolerance: float
    passed: bool
    seed: int = 0
    F_before: float | None = None
    F_after: float | None = None

    def to_json_line(self):
        return json.dumps({"check": self.check, "delta": float(self.delta),
                           "tolerance": float(self.tolerance), "pass": bool(self.passed),
                           "seed": int(self.seed)})


def invariance_check(kind, probe, cset, M_star, omega):
    """Evaluate ``F`` before and after a transformation.

    Parameters
    ----------
    kind : {"permutation", "unitary", "general"}
    probe : BeableTransform or ndarray
        The beable transform ``S`` (permutation/general) or the Hilbert-space
        unitary ``V`` (unitary).
    cset : CommutingSet
    M_star : ndarray
    omega : ndarray
        Test point.

    Returns
    -------
    (F_before, F_after, delta)
    """
    omega = np.asarray(omega, dtype=float)
    lattice = row_lattice(M_star, cset.eigen_table)
    F_before = field_value(omega, lattice)
    if kind in ("permutation", "general"):
        if not isinstance(probe, BeableTransform):
            probe = BeableTransform.general(probe)
        if kind == "permutation" and probe.kind != "permutation":
            raise ContractViolation("permutation check needs a permutation transform")
        table_t, omega_t, M_t = apply_transform(probe, cset.eigen_table, omega, M_star)
        F_after = field_value(omega_t, row_lattice(M_t, table_t))
    elif kind == "unitary":
        table_t = simultaneous_spectrum(conjugate_unitary(cset, probe))
        F_after = field_value(omega, row_lattice(M_star, table_t))
    else:
        raise ConfigurationError(f"unknown invariance check {kind!r}")
    return F_before, F_after, abs(F_after - F_before)


def transform_scenario(T, scenario, table):
    """Transformed ``(scenario, table)``: ``omega0``, ``phi0``, ``M*`` and ``A`` all mapped by ``S``."""
    table_t, omega0_t, M_t = apply_transform(T, table, scenario.omega0, scenario.M_star)
    return scenario.replace(M_star=M_t, omega0=omega0_t, phi0=T.S @ scenario.phi0), table_t


def equivariance_check(T, scenario, table, tol=1e-8, return_runs=False):
    """Max deviation ``|omega'(t) - P omega(t)|_inf`` between a run and its permuted twin.

    Also verifies that the fixed-point indices of the transformed run are the
    permuted indices of the original one (``indices_match``).
    """
    if T.kind != "permutation":
        raise ContractViolation("equivariance is only expected for permutations")
    lattice = row_lattice(scenario.M_star, table)
    original = integrate_beable_flow(scenario, lattice)
    scen_t, table_t = transform_scenario(T, scenario, table)
    if np.array_equal(T.perm, np.arange(len(T.perm))):
        transformed = original
        lattice_t = lattice
    else:
        lattice_t = row_lattice(scen_t.M_star, table_t)
        transformed = integrate_beable_flow(scen_t, lattice_t)
    _, ia, ib = np.intersect1d(original.times, transformed.times, return_indices=True)
    deviation = float(np.max(np.abs(transformed.omega[ib] - original.omega[ia] @ T.S.T)))
    rep = classify_fixed_point(original.omega_final, lattice, tol)
    rep_t = classify_fixed_point(transformed.omega_final, lattice_t, tol)
    indices_match = bool(np.array_equal(rep_t.j, rep.j[T.perm]))
    if return_runs:
        return deviation, indices_match, (original, transformed)
    return deviation, indices_match
