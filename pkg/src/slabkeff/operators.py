"""Shared pieces of the discrete transport and diffusion operators."""
from __future__ import annotations

import numpy as np

from .problem import Kind, ProblemModel


def apply_kernel(weighted_kernel: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``out[i, j] = sum_k weighted_kernel[i, j, k] * phi[i, k]``."""
    return np.einsum("ijk,ik->ij", weighted_kernel, phi)


class SlabOperator:
    """Base class holding the collision operators of a problem.

    Subclasses provide ``apply_T`` (the discrete ``T``) and ``resolvent``
    (the solve of ``(0 - T) phi = q``).  Grid functions are plain arrays of
    shape ``problem.shape``.
    """

    def __init__(self, problem: ProblemModel):
        self.problem = problem
        xs = problem.cross_sections
        w = problem.weights[None, None, :]
        self._ks = xs.sigma_s * w
        self._kf = xs.sigma_f * w
        self._ks.setflags(write=False)
        self._kf.setflags(write=False)
        self.has_scattering = bool(np.any(xs.sigma_s > 0))
        self.has_fission = bool(np.any(xs.sigma_f > 0))

    @property
    def shape(self) -> tuple[int, int]:
        return self.problem.shape

    def _check(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if phi.shape != self.shape:
            raise ValueError(f"shape mismatch: got {phi.shape}, expected {self.shape}")
        return phi

    def apply_T(self, phi):
        raise NotImplementedError

    def resolvent(self, q):
        raise NotImplementedError

    def apply_A(self, phi) -> np.ndarray:
        """``(0 - T) phi``."""
        return -self.apply_T(phi)

    def apply_Ks(self, phi) -> np.ndarray:
        return apply_kernel(self._ks, self._check(phi))

    def apply_Kf(self, phi) -> np.ndarray:
        return apply_kernel(self._kf, self._check(phi))

    def apply_K(self, phi, gamma: float) -> np.ndarray:
        """``K(gamma) phi = Ks phi + Kf phi / gamma``."""
        phi = self._check(phi)
        return apply_kernel(self._ks + self._kf / gamma, phi)

    def transport_map(self, gamma: float):
        """The positive map ``phi -> (0 - T)^-1 K(gamma) phi``."""
        kernel = self._ks + self._kf / gamma
        return lambda phi: self.resolvent(apply_kernel(kernel, phi))

    def scattering_map(self):
        return lambda phi: self.resolvent(apply_kernel(self._ks, phi))

    def fission_map(self):
        return lambda phi: self.resolvent(apply_kernel(self._kf, phi))

    def norm(self, phi) -> float:
        return self.problem.norm(phi)

    def normalize(self, phi) -> np.ndarray:
        return phi / self.norm(phi)


def operator_for(problem: ProblemModel) -> SlabOperator:
    if problem.kind is Kind.TRANSPORT:
        from .transport import TransportOperator
        return TransportOperator(problem)
    from .diffusion import DiffusionOperator
    return DiffusionOperator(problem)
