"""Cell-centred multigroup diffusion operator with Dirichlet boundaries.

Per group ``g``::

    (T_h rho)[i] = (D[i+1/2] (rho[i+1] - rho[i]) - D[i-1/2] (rho[i] - rho[i-1])) / dx**2
                   - sigma[i] rho[i]

Interior face coefficients are arithmetic means of the neighbouring cells.
The Dirichlet condition sits on the slab faces: the ghost value is the
mirror ``rho[-1] = -rho[0]`` (and likewise on the right), so the boundary
face carries the boundary cell's coefficient over a half cell.  With this
closure the sampled sine ``sin(pi x_i / L)`` is an exact discrete
eigenvector of the constant-coefficient Laplacian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .operators import SlabOperator
from .problem import Kind, ProblemModel

EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 10_000


class DiffusionError(RuntimeError):
    pass


def _stencil(d: np.ndarray, dx: float):
    """Face conductances of one coefficient table, shape ``(Nx, G)``.

    Returns ``(interior, left, right)``: ``interior[i]`` couples cells ``i``
    and ``i+1``; ``left``/``right`` are the extra diagonal terms of the
    boundary cells.
    """
    interior = 0.5 * (d[1:] + d[:-1]) / dx**2
    return interior, 2.0 * d[0] / dx**2, 2.0 * d[-1] / dx**2


class _Tridiagonal:
    """Factorised SPD block-tridiagonal system, one block per group."""

    def __init__(self, d: np.ndarray, absorption: np.ndarray, dx: float):
        nx, ng = d.shape
        interior, left, right = _stencil(d, dx)
        diag = absorption.copy()
        diag[:-1] += interior
        diag[1:] += interior
        diag[0] += left
        diag[-1] += right
        off = np.zeros((nx, ng))
        off[:-1] = -interior
        self.nx, self.ng = nx, ng
        self.diag, self.off = diag, off[:-1]
        # group-major flattening: the coupling between consecutive blocks is zero
        dflat = diag.T.ravel()
        eflat = off.T.ravel()[:-1]
        self._d, self._e, info = lapack.dpttrf(dflat, eflat)
        if info != 0:
            raise DiffusionError(f"tridiagonal factorisation failed (info = {info})")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = self.diag * x
        out[:-1] += self.off * x[1:]
        out[1:] += self.off * x[:-1]
        return out

    def solve(self, b: np.ndarray) -> np.ndarray:
        x, info = lapack.dpttrs(self._d, self._e, b.T.reshape(-1, 1))
        if info != 0:
            raise DiffusionError(f"tridiagonal solve failed (info = {info})")
        return x.reshape(self.ng, self.nx).T


@dataclass(frozen=True)
class PrincipalEigenpair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


class DiffusionOperator(SlabOperator):
    """Matrix-free ``T_h`` for diffusion problems and its tridiagonal resolvent."""

    def __init__(self, problem: ProblemModel):
        if problem.kind is not Kind.DIFFUSION:
            raise ValueError("DiffusionOperator needs a diffusion problem")
        super().__init__(problem)
        self.dx = problem.geometry.dx
        self._system = _Tridiagonal(problem.diffusion.coefficient,
                                    np.array(problem.cross_sections.sigma), self.dx)
        self._eigenpair: PrincipalEigenpair | None = None

    def apply_T(self, rho) -> np.ndarray:
        return -self._system.matvec(self._check(rho))

    def resolvent(self, q) -> np.ndarray:
        return self._system.solve(self._check(q))

    resolvent_apply = resolvent

    def principal_eigenpair(self) -> PrincipalEigenpair:
        """Smallest eigenvalue of ``-div(D0 grad .)`` and its positive eigenvector.

        Needs degenerate diffusion data ``D = D0(x) d1(xi)``.  The vector has
        unit discrete L2 norm ``sqrt(sum dx rho**2) = 1``.
        """
        if self._eigenpair is None:
            data = self.problem.diffusion
            if not data.degenerate:
                raise DiffusionError("principal eigenpair needs degenerate diffusion data D0(x) d1(xi)")
            self._eigenpair = principal_eigenpair(data.d0, self.dx)
        return self._eigenpair


def _rayleigh(d0: np.ndarray, rho: np.ndarray, dx: float) -> float:
    # energy form: a sum of non-negative terms, free of cancellation
    face = 0.5 * (d0[1:] + d0[:-1])
    energy = np.sum(face * np.diff(rho) ** 2) + 2 * d0[0] * rho[0] ** 2 + 2 * d0[-1] * rho[-1] ** 2
    return float(energy / (dx**2 * np.sum(rho**2)))


def principal_eigenpair(d0, dx: float, tol: float = EIGEN_TOL,
                        max_iter: int = EIGEN_MAX_ITER) -> PrincipalEigenpair:
    """Inverse power iteration for the Dirichlet operator ``-div(d0 grad .)``.

    Stops once the eigenvalue estimate has settled and
    ``||S rho - lambda rho|| <= tol * max(1, lambda)``.  On fine grids the
    residual of a converged vector is limited by rounding in ``S rho``
    (about ``eps * ||S||``); the tolerance is raised to that floor.
    """
    d0 = np.asarray(d0, dtype=float).reshape(-1, 1)
    system = _Tridiagonal(d0, np.zeros_like(d0), dx)
    rho = np.ones_like(d0)
    floor = np.finfo(float).eps * 4 * float(np.max(d0)) / dx**2
    tol = max(tol, floor)
    lam = _rayleigh(d0[:, 0], rho[:, 0], dx)
    for it in range(1, max_iter + 1):
        rho = system.solve(rho)
        rho /= np.sqrt(dx * np.sum(rho**2))
        new = _rayleigh(d0[:, 0], rho[:, 0], dx)
        residual = float(np.sqrt(dx * np.sum((system.matvec(rho) - new * rho) ** 2)))
        settled = abs(new - lam) <= 4 * np.finfo(float).eps * new
        lam = new
        if residual <= tol * max(1.0, lam) and settled:
            vec = rho[:, 0].copy()
            vec.setflags(write=False)
            return PrincipalEigenpair(lam, vec, residual, it)
    raise DiffusionError(f"principal eigenpair did not converge in {max_iter} iterations")
