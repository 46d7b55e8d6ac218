"""Dense reference implementation used to cross-check the matrix-free solvers.

All operators are assembled as explicit matrices over the flattened
phase-space index ``i * n + j`` (cell-major, node-minor) directly from the
stencil formulas, then ``k_eff`` is recomputed by dense solves and a long
power iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import operator_for
from .problem import Kind, ProblemModel

MAX_DIM = 4096
ORACLE_TOL = 1e-12
ORACLE_MAX_ITER = 100_000


class OracleError(RuntimeError):
    pass


class DimensionError(OracleError, ValueError):
    pass


@dataclass
class DenseSystem:
    """Explicit ``(0 - T)``, ``Ks`` and ``Kf`` with ``shape = (cells, nodes)``."""

    A: np.ndarray
    Ks: np.ndarray
    Kf: np.ndarray
    shape: tuple[int, int]
    ordering: str = "cell-major, node-minor"

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def flatten(self, phi: np.ndarray) -> np.ndarray:
        return np.asarray(phi, dtype=float).reshape(-1)

    def unflatten(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x).reshape(self.shape)

    def check_positivity(self) -> bool:
        """``(0 - T)^-1 >= 0`` entrywise and both kernels ``>= 0``."""
        inv = np.linalg.inv(self.A)
        scale = np.abs(inv).max()
        return bool(inv.min() >= -1e-13 * scale and self.Ks.min() >= 0 and self.Kf.min() >= 0)


def _index(i: int, j: int, n: int) -> int:
    return i * n + j


def _kernel_matrix(kernel: np.ndarray, w: np.ndarray) -> np.ndarray:
    nx, n, _ = kernel.shape
    m = np.zeros((nx * n, nx * n))
    for i in range(nx):
        m[i * n:(i + 1) * n, i * n:(i + 1) * n] = kernel[i] * w[None, :]
    return m


def _transport_matrix(p: ProblemModel) -> np.ndarray:
    nx, n = p.shape
    dx = p.geometry.dx
    v = p.grid.nodes
    sigma = p.cross_sections.sigma
    a = np.zeros((nx * n, nx * n))
    for i in range(nx):
        for j in range(n):
            r = _index(i, j, n)
            a[r, r] = abs(v[j]) / dx + sigma[i, j]
            up = i - 1 if v[j] > 0 else i + 1
            if 0 <= up < nx:
                a[r, _index(up, j, n)] = -abs(v[j]) / dx
    return a


def _diffusion_matrix(p: ProblemModel) -> np.ndarray:
    nx, n = p.shape
    dx = p.geometry.dx
    d = p.diffusion.coefficient
    sigma = p.cross_sections.sigma
    a = np.zeros((nx * n, nx * n))
    for i in range(nx):
        for g in range(n):
            r = _index(i, g, n)
            a[r, r] = sigma[i, g]
            for nb in (i - 1, i + 1):
                if 0 <= nb < nx:
                    c = 0.5 * (d[i, g] + d[nb, g]) / dx**2
                    a[r, r] += c
                    a[r, _index(nb, g, n)] = -c
                else:
                    # Dirichlet face half a cell away
                    a[r, r] += 2.0 * d[i, g] / dx**2
    return a


def assemble_dense(p: ProblemModel, verify_columns: int = 10, seed: int = 0) -> DenseSystem:
    """Assemble the dense system and compare columns with the matrix-free operators."""
    nx, n = p.shape
    dim = nx * n
    if dim > MAX_DIM:
        raise DimensionError(f"flattened dimension {dim} exceeds the dense limit {MAX_DIM}")
    a = _transport_matrix(p) if p.kind is Kind.TRANSPORT else _diffusion_matrix(p)
    w = p.weights
    sys = DenseSystem(a, _kernel_matrix(p.cross_sections.sigma_s, w),
                      _kernel_matrix(p.cross_sections.sigma_f, w), (nx, n))
    if verify_columns:
        _verify(p, sys, verify_columns, seed)
    return sys


def _verify(p: ProblemModel, sys: DenseSystem, count: int, seed: int) -> None:
    op = operator_for(p)
    rng = np.random.default_rng(seed)
    cols = rng.choice(sys.dim, size=min(count, sys.dim), replace=False)
    for c in cols:
        e = np.zeros(sys.dim)
        e[c] = 1.0
        phi = sys.unflatten(e)
        for name, mat, fn in (("0 - T", sys.A, op.apply_A), ("Ks", sys.Ks, op.apply_Ks),
                              ("Kf", sys.Kf, op.apply_Kf)):
            ref = mat[:, c]
            diff = np.max(np.abs(sys.flatten(fn(phi)) - ref))
            if diff > 1e-14 * max(1.0, np.max(np.abs(ref))):
                raise OracleError(f"dense {name} column {c} differs from matrix-free by {diff:.3e}")


@dataclass
class OracleResult:
    k_eff: float
    vector: np.ndarray
    iterations: int
    scattering_radius: float


def dense_scattering_radius(sys: DenseSystem) -> float:
    ls = np.linalg.solve(sys.A, sys.Ks)
    return float(np.max(np.abs(np.linalg.eigvals(ls)))) if ls.any() else 0.0


def oracle_keff(sys: DenseSystem, tol: float = ORACLE_TOL,
                max_iter: int = ORACLE_MAX_ITER) -> OracleResult:
    """Dominant eigenpair of ``(I - (0-T)^-1 Ks)^-1 (0-T)^-1 Kf`` by power iteration.

    A uniform shift ``eps I`` with ``eps = 1e-12 max(M)`` keeps a periodic
    irreducible matrix primitive; it is removed from the returned value.
    Stops when successive unit vectors differ by at most ``tol`` in max norm.
    """
    rs = dense_scattering_radius(sys)
    if rs >= 1.0:
        raise OracleError(f"dense scattering radius {rs:.6g} >= 1")
    ls = np.linalg.solve(sys.A, sys.Ks)
    lf = np.linalg.solve(sys.A, sys.Kf)
    m = np.linalg.solve(np.eye(sys.dim) - ls, lf)
    eps = 1e-12 * float(np.abs(m).max())
    m = m + eps * np.eye(sys.dim)
    x = np.ones(sys.dim) / np.sqrt(sys.dim)
    for it in range(1, max_iter + 1):
        y = m @ x
        y /= np.linalg.norm(y)
        if np.max(np.abs(y - x)) <= tol:
            x = y
            break
        x = y
    else:
        raise OracleError(f"dense power iteration did not converge in {max_iter} iterations")
    lam = float(x @ (m @ x)) - eps
    return OracleResult(lam, sys.unflatten(x), it, rs)


def vector_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two fields after sign normalisation."""
    a, b = np.ravel(a), np.ravel(b)
    c = abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    # arccos loses half the digits near 1; use the sine form
    s = np.linalg.norm(a / np.linalg.norm(a) * np.sign(a @ b) - b / np.linalg.norm(b))
    return float(2 * np.arcsin(min(1.0, s / 2))) if c > 0.5 else float(np.arccos(c))
