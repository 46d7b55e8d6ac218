"""Upwind discrete transport operator on a slab with vacuum boundaries.

For a direction ``v_j > 0`` the streaming term in cell ``i`` is
``v_j (phi[i] - phi[i-1]) / dx`` with ``phi[-1] = 0``; negative directions
use the mirrored stencil with ``phi[Nx] = 0``.  ``(0 - T_h)`` is therefore
lower bidiagonal along each direction's flight path, with diagonal
``|v_j|/dx + sigma`` and sub-diagonal ``-|v_j|/dx``: an M-matrix whose
inverse is one sweep per direction.
"""
from __future__ import annotations

import numpy as np

from .operators import SlabOperator
from .problem import Kind, ProblemModel


def stay_time(x, v, width: float):
    """Time ``inf{s > 0 : x - s v not in (0, width)}`` for a particle at ``x``.

    Works elementwise on arrays.  ``v = 0`` is rejected.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v == 0):
        raise ValueError("stay time is undefined for v = 0")
    if np.any((x < 0) | (x > width)):
        raise ValueError("position outside the slab")
    out = np.where(v > 0, x / np.abs(v), (width - x) / np.abs(v))
    return float(out) if out.ndim == 0 else out


class TransportOperator(SlabOperator):
    """Matrix-free ``T_h``, its sweep inverse and the collision operators.

    ``stay_times[i, j]`` is the discrete stay time: the flight time from the
    upwind boundary to the downstream face of cell ``i`` along ``v_j``.  It is
    the grid function whose upwind derivative is exactly one, i.e. the
    discrete counterpart of ``v . grad tau = 1`` with vacuum inflow, and it
    satisfies ``stay_times <= width / v_min``.
    """

    def __init__(self, problem: ProblemModel):
        if problem.kind is not Kind.TRANSPORT:
            raise ValueError("TransportOperator needs a transport problem")
        super().__init__(problem)
        nx, n = problem.shape
        dx = problem.geometry.dx
        v = problem.grid.nodes
        self._forward = v > 0
        self._rate = np.abs(v) / dx
        sigma = problem.cross_sections.sigma
        self._diag = self._to_sweep(self._rate[None, :] + sigma)
        upwind_cells = np.where(self._forward[None, :],
                                np.arange(1, nx + 1)[:, None],
                                np.arange(nx, 0, -1)[:, None])
        self.stay_times = upwind_cells * dx / np.abs(v)[None, :]
        self.stay_times.setflags(write=False)

    def _to_sweep(self, a: np.ndarray) -> np.ndarray:
        # reverse the cell axis of backward directions so every sweep runs 0 -> Nx-1
        s = np.array(a, dtype=float, copy=True)
        back = ~self._forward
        s[:, back] = a[::-1][:, back]
        return s

    def apply_T(self, phi) -> np.ndarray:
        phi = self._check(phi)
        s = self._to_sweep(phi)
        upstream = np.vstack([np.zeros((1, s.shape[1])), s[:-1]])
        out = -(self._diag * s) + self._rate[None, :] * upstream
        return self._to_sweep(out)

    apply_streaming = apply_T

    def resolvent(self, q) -> np.ndarray:
        q = self._to_sweep(self._check(q))
        phi = np.empty_like(q)
        prev = np.zeros(q.shape[1])
        rate, diag = self._rate, self._diag
        for i in range(q.shape[0]):
            prev = (q[i] + rate * prev) / diag[i]
            phi[i] = prev
        return self._to_sweep(phi)

    resolvent_apply = resolvent
