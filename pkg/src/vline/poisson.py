"""Five-point finite-difference Dirichlet solver for ``-Laplace(u) = f`` on the grid.

Unknowns are the interior pixels ``2 <= i, j <= N-1`` (1-based), ordered by
``k = (N-2)(i-2) + (j-1)`` so ``j`` runs fastest.  The edge pixels carry the
Dirichlet data ``g``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid2D, ScalarField

__all__ = [
    "ConvergenceError",
    "PoissonSystem",
    "laplacian_matrix",
    "assemble",
    "solve",
    "solve_dirichlet",
    "DIRECT_MAX_N",
]

log = logging.getLogger(__name__)

DIRECT_MAX_N = 200
CG_RTOL = 1e-10
CG_MAXITER = 5000


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def laplacian_matrix(n: int) -> sp.csr_matrix:
    """The ``(n-2)^2`` square matrix ``A = -blocktridiag(I, B, I)``, ``B = tridiag(1, -4, 1)``.

    With that leading minus sign ``A`` has +4 on the diagonal and is SPD.
    """
    m = n - 2
    eye = sp.identity(m, format="csr")
    off = sp.diags([np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="csr")
    B = sp.diags([np.ones(m - 1), -4.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="csr")
    return (-(sp.kron(eye, B) + sp.kron(off, eye))).tocsr()


@dataclass(frozen=True, eq=False)
class PoissonSystem:
    """``A U = F`` with ``F = h^2 * f_tilde`` (interior unknowns, k-ordered)."""

    grid: Grid2D
    A: sp.csr_matrix
    F: np.ndarray
    f_tilde: np.ndarray
    boundary: np.ndarray

    @property
    def N(self) -> int:
        return self.grid.n

    def residual(self, U: np.ndarray) -> float:
        """``||A U - F||_inf / ||F||_inf`` (absolute when ``F = 0``)."""
        r = np.max(np.abs(self.A @ U - self.F)) if U.size else 0.0
        scale = np.max(np.abs(self.F)) if self.F.size else 0.0
        return float(r / scale) if scale > 0 else float(r)

    def dump_triplets(self, path) -> Path:
        """Write ``A`` as 1-based ``row col value`` lines, first line ``rows cols nnz``."""
        coo = self.A.tocoo()
        path = Path(path)
        with open(path, "w") as fh:
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for r, c, v in zip(coo.row + 1, coo.col + 1, coo.data):
                fh.write(f"{r} {c} {float(v)!r}\n")
        return path


def _boundary_array(grid: Grid2D, boundary) -> np.ndarray:
    n = grid.n
    g = np.zeros((n, n))
    if boundary is None:
        return g
    if isinstance(boundary, ScalarField):
        if boundary.grid != grid:
            raise ValueError("boundary data lives on a different grid")
        src = boundary.values
    else:
        src = np.broadcast_to(np.asarray(boundary, dtype=np.float64), (n, n))
    edge = np.ones((n, n), dtype=bool)
    edge[1:-1, 1:-1] = False
    g[edge] = src[edge]
    return g


def assemble(n: int, source: ScalarField, boundary=None) -> PoissonSystem:
    """Build the system for ``-Laplace(u) = source`` with edge-pixel data ``boundary``.

    ``boundary`` may be a ScalarField (only its edge pixels are read), a
    scalar, or None for homogeneous data.
    """
    if n < 4:
        raise ValueError(f"Poisson system needs n >= 4, got {n}")
    grid = source.grid
    if grid.n != n:
        raise ValueError(f"source grid has n={grid.n}, expected {n}")
    h = grid.h
    g = _boundary_array(grid, boundary)
    # boundary neighbours of each interior pixel; interior entries of g are zero
    nb = g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:]
    f_tilde = source.values[1:-1, 1:-1] + nb / h**2
    F = h**2 * f_tilde.ravel()
    return PoissonSystem(grid=grid, A=laplacian_matrix(n), F=F, f_tilde=f_tilde, boundary=g)


def _solve_cg(A, F):
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
    M = ml.aspreconditioner(cycle="V")
    U, info = spla.cg(A, F, rtol=CG_RTOL, atol=0.0, maxiter=CG_MAXITER, M=M)
    return U, info


def solve(system: PoissonSystem) -> ScalarField:
    """Solve ``A U = F``; direct sparse factorization up to ``DIRECT_MAX_N``, PCG above."""
    n = system.N
    if not np.any(system.F):
        U = np.zeros_like(system.F)
    elif n <= DIRECT_MAX_N:
        U = spla.spsolve(system.A.tocsc(), system.F)
    else:
        U, info = _solve_cg(system.A, system.F)
        rel = float(np.linalg.norm(system.A @ U - system.F) / np.linalg.norm(system.F))
        if info != 0 or rel > 10 * CG_RTOL:
            raise ConvergenceError(f"PCG did not converge for N={n}", rel)
        log.debug("PCG converged, relative residual %.2e", rel)
    out = system.boundary.copy()
    out[1:-1, 1:-1] = U.reshape(n - 2, n - 2)
    return ScalarField(system.grid, out)


def solve_dirichlet(source: ScalarField, boundary=None) -> ScalarField:
    """Solve ``-Laplace(u) = source`` with ``u = boundary`` on the edge pixels."""
    return solve(assemble(source.grid.n, source, boundary))
