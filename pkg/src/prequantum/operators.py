"""Sets of mutually commuting Hermitian operators and their eigenvalue tables.

A :class:`CommutingSet` holds ``N`` Hermitian ``d x d`` matrices sharing one
eigenbasis. Their simultaneous eigenvalues form an :class:`EigenTable` of shape
``(N, d)``: row ``n`` belongs to operator ``n``, column ``j`` to the ``j``-th
simultaneous eigenvector. Tables are kept in canonical order, columns sorted
lexicographically by (row 0, row 1, ...), ties resolved by original position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError

__all__ = [
    "EigenTable",
    "RowLattice",
    "CommutingSet",
    "ValidationReport",
    "canonical_order",
    "generate_commuting_set",
    "validate_commuting_set",
    "simultaneous_spectrum",
    "conjugate_unitary",
    "row_lattice",
    "random_unitary",
    "commuting_set_from_table",
    "commuting_set_from_operators",
    "joint_diagonalize",
]


def _maxabs(x):
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def canonical_order(values):
    """Column permutation that sorts ``values`` (N x d) lexicographically.

    Row 0 is the primary key. ``np.lexsort`` is stable, so identical
    columns keep their original relative order.
    """
    values = np.asarray(values, dtype=float)
    return np.lexsort(values[::-1])


@dataclass(frozen=True, eq=False)
class EigenTable:
    """Simultaneous eigenvalues ``A[n, j]`` (beable ``n``, eigenvector ``j``)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, ndmin=2)
        if values.ndim != 2:
            raise ConfigurationError("eigen table must be a 2-D array (N, d)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def num_beables(self):
        return self.values.shape[0]

    @property
    def dim_hilbert(self):
        return self.values.shape[1]

    def canonical(self):
        """Return a copy with columns in canonical order (idempotent)."""
        return EigenTable(self.values[:, canonical_order(self.values)])

    def column(self, j):
        return self.values[:, j]


@dataclass(frozen=True, eq=False)
class RowLattice:
    """Row lattice ``lam = M @ A``; row ``n`` lists the ``d`` attractor values of ``omega_n``."""

    lam: np.ndarray
    source_M: np.ndarray

    @property
    def num_beables(self):
        return self.lam.shape[0]

    @property
    def dim_hilbert(self):
        return self.lam.shape[1]

    def as_table(self):
        return EigenTable(self.lam)

    def min_gap(self):
        """Smallest positive spacing between distinct values in any row.

        Returns ``inf`` when every row is constant.
        """
        gaps = []
        for row in self.lam:
            diffs = np.diff(np.unique(row))
            if diffs.size:
                gaps.append(diffs.min())
        return float(min(gaps)) if gaps else float("inf")


@dataclass(frozen=True, eq=False)
class CommutingSet:
    """``N`` commuting Hermitian ``d x d`` operators with a shared eigenbasis.

    ``eigenbasis[:, j]`` is the simultaneous eigenvector whose eigenvalues
    are ``eigen_table.values[:, j]``.
    """

    operators: np.ndarray
    eigenbasis: np.ndarray
    eigen_table: EigenTable

    def __post_init__(self):
        ops = np.array(self.operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        basis = np.array(self.eigenbasis, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ConfigurationError("operators must have shape (N, d, d)")
        d = ops.shape[1]
        if basis.shape != (d, d):
            raise ConfigurationError(f"eigenbasis must be {d}x{d}, got {basis.shape}")
        if self.eigen_table.values.shape != ops.shape[:2]:
            raise ConfigurationError(
                f"eigen table shape {self.eigen_table.values.shape} does not match "
                f"(N, d) = {ops.shape[:2]}"
            )
        ops.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "eigenbasis", basis)

    @property
    def num_beables(self):
        return self.operators.shape[0]

    @property
    def dim_hilbert(self):
        return self.operators.shape[1]


@dataclass(frozen=True)
class ValidationReport:
    hermiticity: float
    commutator: float
    diagonalization: float
    unitarity: float
    table: float
    tol: float

    @property
    def passed(self):
        return max(self.hermiticity, self.commutator, self.diagonalization,
                   self.unitarity, self.table) <= self.tol


def random_unitary(d, rng):
    """Haar-distributed ``d x d`` unitary from QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def _hermitize(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def commuting_set_from_table(values, basis):
    """Build ``A_n = U diag(values[n]) U^dagger`` and canonicalise the table."""
    values = np.array(values, dtype=float, ndmin=2)
    basis = np.asarray(basis, dtype=complex)
    order = canonical_order(values)
    values = values[:, order]
    basis = basis[:, order]
    ops = np.einsum("ij,nj,kj->nik", basis, values, basis.conj())
    return CommutingSet(_hermitize(ops), basis, EigenTable(values))


def generate_commuting_set(d, N, eig_range=(0.0, 1.0), seed=0):
    """Seeded random commuting set with eigenvalues uniform in ``eig_range``."""
    lo, hi = (float(v) for v in eig_range)
    if not lo < hi:
        raise ConfigurationError(f"eig_range must satisfy lo < hi, got ({lo}, {hi})")
    if int(d) < 1 or int(N) < 1:
        raise ConfigurationError(f"d and N must be positive, got d={d}, N={N}")
    rng = np.random.default_rng(seed)
    values = rng.uniform(lo, hi, size=(int(N), int(d)))
    basis = random_unitary(int(d), rng)
    return commuting_set_from_table(values, basis)


def validate_commuting_set(cset, tol=1e-9):
    ops = cset.operators
    U = cset.eigenbasis
    herm = max(_maxabs(a - a.conj().T) for a in ops)
    comm = 0.0
    for n in range(len(ops)):
        for m in range(n + 1, len(ops)):
            comm = max(comm, _maxabs(ops[n] @ ops[m] - ops[m] @ ops[n]))
    unit = _maxabs(U.conj().T @ U - np.eye(U.shape[0]))
    diag = 0.0
    table = 0.0
    for n, a in enumerate(ops):
        rot = U.conj().T @ a @ U
        diag = max(diag, _maxabs(rot - np.diag(np.diagonal(rot))))
        table = max(table, _maxabs(np.diagonal(rot).real - cset.eigen_table.values[n]))
    return ValidationReport(herm, comm, diag, unit, table, float(tol))


def _split_cluster(ops, V, tol):
    """Refine a degenerate block ``V`` by diagonalising each operator in turn."""
    if V.shape[1] == 1 or not len(ops):
        return V
    sub = V.conj().T @ ops[0] @ V
    w, x = np.linalg.eigh(_hermitize(sub))
    V = V @ x
    blocks = []
    start = 0
    scale = max(1.0, float(np.max(np.abs(w))))
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol * scale:
            blocks.append(_split_cluster(ops[1:], V[:, start:k], tol))
            start = k
    return np.hstack(blocks)


def joint_diagonalize(operators, seed=0, tol=1e-8):
    """Common eigenbasis ``V`` and per-operator diagonals of commuting Hermitian matrices.

    A random real combination of the operators is diagonalised; clusters of
    (near-)equal eigenvalues of the combination are then split by diagonalising
    each operator on the cluster subspace.

    Raises
    ------
    NumericError
        If ``V`` fails to diagonalise every operator, which happens when the
        operators do not commute.
    """
    ops = np.asarray(operators, dtype=complex)
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(0.5, 1.5, size=len(ops)) * rng.choice([-1.0, 1.0], size=len(ops))
    combo = _hermitize(np.tensordot(coeffs, ops, axes=1))
    w, V = np.linalg.eigh(combo)
    scale = max(1.0, float(np.max(np.abs(w))))
    blocks = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > 1e-8 * scale:
            blocks.append(_split_cluster(list(ops), V[:, start:k], 1e-8))
            start = k
    V = np.hstack(blocks)
    rot = np.einsum("ji,njk,kl->nil", V.conj(), ops, V)
    diag = np.einsum("nii->ni", rot)
    off = rot - np.einsum("ni,ij->nij", diag, np.eye(V.shape[0]))
    op_scale = max(1.0, _maxabs(ops))
    residual = _maxabs(off)
    if residual > tol * op_scale:
        raise NumericError(
            f"operators are not simultaneously diagonalisable "
            f"(off-diagonal residual {residual:.3e})",
            residual=residual,
        )
    return V, diag.real


def simultaneous_spectrum(cset, seed=0, tol=1e-8):
    """Recompute the canonical eigen table of ``cset`` from its operators alone."""
    _, values = joint_diagonalize(cset.operators, seed, tol)
    return EigenTable(values).canonical()


def commuting_set_from_operators(operators, seed=0):
    """Wrap bare operator matrices, recovering basis and canonical table."""
    ops = _hermitize(np.array(operators, dtype=complex, ndmin=3))
    V, values = joint_diagonalize(ops, seed)
    order = canonical_order(values)
    return CommutingSet(ops, V[:, order], EigenTable(values[:, order]))


def conjugate_unitary(cset, V):
    """Map every operator ``A -> V A V^dagger``; the eigenbasis becomes ``V U``."""
    V = np.asarray(V, dtype=complex)
    d = cset.dim_hilbert
    if V.shape != (d, d):
        raise ConfigurationError(f"V must be {d}x{d}, got {V.shape}")
    err = _maxabs(V.conj().T @ V - np.eye(d))
    if err > 1e-10:
        raise ConfigurationError(f"V is not unitary (|V^dagger V - 1|_max = {err:.3e})")
    ops = _hermitize(np.einsum("ij,njk,lk->nil", V, cset.operators, V.conj()))
    return CommutingSet(ops, V @ cset.eigenbasis, cset.eigen_table)


def row_lattice(M, table):
    """Row lattice ``lam[n, j] = sum_m M[n, m] A[m, j]``."""
    M = np.array(M, dtype=float, ndmin=2)
    values = table.values if isinstance(table, EigenTable) else np.asarray(table, dtype=float)
    if M.shape != (values.shape[0], values.shape[0]):
        raise ConfigurationError(
            f"M must be {values.shape[0]}x{values.shape[0]}, got {M.shape}"
        )
    M.setflags(write=False)
    lam = M @ values
    lam.setflags(write=False)
    return RowLattice(lam, M)
