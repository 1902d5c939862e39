"""Sparse symmetric linear algebra: CSR systems and preconditioned CG."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import Breakdown, DimensionMismatch


@dataclass
class SparseSystem:
    """A symmetric CSR matrix together with its load vector."""

    matrix: sp.csr_matrix
    load: np.ndarray

    def __post_init__(self) -> None:
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise DimensionMismatch(f"matrix is {self.matrix.shape}, expected square")
        if self.load.shape != (self.matrix.shape[0],):
            raise DimensionMismatch(
                f"load has shape {self.load.shape} for dimension {self.matrix.shape[0]}")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    # compressed-row views
    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    def with_load(self, load: np.ndarray) -> "SparseSystem":
        return SparseSystem(matrix=self.matrix, load=np.asarray(load, dtype=float))


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool


def spmv(matrix, vector: np.ndarray) -> np.ndarray:
    """y = A x for a CSR matrix or a SparseSystem."""
    A = matrix.matrix if isinstance(matrix, SparseSystem) else matrix
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (A.shape[1],):
        raise DimensionMismatch(
            f"vector of shape {vector.shape} against matrix {A.shape}")
    return A @ vector


def default_max_iter(dimension: int) -> int:
    return int(20 * np.sqrt(dimension)) + 1000


def cg_solve(system: SparseSystem, rel_tol: float = 1e-10,
             max_iter: int | None = None,
             x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
    """Jacobi-preconditioned conjugate gradients.

    Stops when the true residual satisfies ||A x - b||_2 <= rel_tol ||b||_2
    (the recurrence residual is confirmed against the actual one before
    declaring convergence).  Raises Breakdown when a search direction has
    non-positive curvature, which signals a non-SPD matrix.
    """
    A = system.matrix
    b = system.load
    n = system.dimension
    if max_iter is None:
        max_iter = default_max_iter(n)
    diag = A.diagonal()
    if (diag <= 0).any():
        raise Breakdown(f"non-positive diagonal entry at dof {int(np.argmin(diag))}")
    inv_diag = 1.0 / diag

    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(n), SolveReport(iterations=0, relative_residual=0.0, converged=True)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x if x0 is not None else b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    for k in range(1, max_iter + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise Breakdown(f"p^T A p = {pAp:.3e} <= 0 at iteration {k}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        iterations = k
        if np.linalg.norm(r) <= rel_tol * norm_b:
            true_r = b - A @ x
            if np.linalg.norm(true_r) <= rel_tol * norm_b:
                break
            r = true_r  # recurrence drifted; continue on the true residual
        z = inv_diag * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    rel = float(np.linalg.norm(b - A @ x) / norm_b)
    return x, SolveReport(iterations=iterations, relative_residual=rel,
                          converged=rel <= rel_tol)
