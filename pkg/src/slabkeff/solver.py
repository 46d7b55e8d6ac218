"""Criticality eigenvalue solvers.

``k_eff`` is computed two ways:

* root finding on ``R(gamma) = r[(0 - T)^-1 (Ks + Kf / gamma)]``, which is
  continuous and strictly decreasing, for ``R(k_eff) = 1``;
* directly as the spectral radius of ``(I - Ls)^-1 Lf`` with
  ``Ls = (0 - T)^-1 Ks`` and ``Lf = (0 - T)^-1 Kf``.

Spectral radii come from power iteration stopped on the Collatz-Wielandt
gap: for a positive map ``A`` and positive ``phi`` the spectral radius lies
between ``min(A phi / phi)`` and ``max(A phi / phi)``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .operators import SlabOperator, operator_for
from .problem import ProblemModel

log = logging.getLogger(__name__)

POWER_TOL = 1e-13
POWER_MAX_ITER = 20_000
ROOT_TOL = 1e-12
GAMMA_MIN_PROBE = 1e-6
CRITICAL_BAND = 1e-6
BRACKET = (1e-8, 1e8)
BRACKET_FACTOR = 4.0


class SolverError(RuntimeError):
    pass


class ExistenceError(SolverError):
    """The existence conditions for ``k_eff`` do not hold."""

    def __init__(self, message: str, check: "ExistenceCheck | None" = None):
        super().__init__(message)
        self.check = check


class ConvergenceError(SolverError):
    """Power iteration hit its cap; ``lower``/``upper`` bracket the radius."""

    def __init__(self, message: str, lower: float, upper: float, vector=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.vector = vector


class Criticality(str, enum.Enum):
    SUBCRITICAL = "SubCritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "SuperCritical"


def classify(k: float, band: float = CRITICAL_BAND) -> Criticality:
    if abs(k - 1.0) <= band:
        return Criticality.CRITICAL
    return Criticality.SUPERCRITICAL if k > 1 else Criticality.SUBCRITICAL


@dataclass
class SpectralResult:
    radius: float
    vector: np.ndarray
    lower: float
    upper: float
    iterations: int

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def spectral_radius(apply: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                    tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER,
                    norm: Callable[[np.ndarray], float] | None = None,
                    threshold: float = 1e-12) -> SpectralResult:
    """Power iteration for a map that sends non-negative arrays to non-negative arrays.

    Iterates from ``x0`` (usually all ones) until the Collatz-Wielandt gap
    ``max(A phi / phi) - min(A phi / phi)`` over entries above
    ``threshold * max(phi)`` is at most ``tol * max(A phi / phi)``.  The
    returned vector is ``A phi`` normalised by ``norm``.
    """
    norm = norm or (lambda a: float(np.linalg.norm(a.ravel())))
    phi = np.array(x0, dtype=float)
    phi = phi / norm(phi)
    lo = hi = np.nan
    for it in range(1, max_iter + 1):
        y = apply(phi)
        ny = norm(y)
        if ny == 0.0:
            return SpectralResult(0.0, phi, 0.0, 0.0, it)
        mask = phi > threshold * phi.max()
        ratio = y[mask] / phi[mask]
        lo, hi = float(ratio.min()), float(ratio.max())
        phi = y / ny
        if hi - lo <= tol * hi:
            return SpectralResult(0.5 * (lo + hi), phi, lo, hi, it)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(radius in [{lo:.16g}, {hi:.16g}])", lo, hi, phi)


def _ones(op: SlabOperator) -> np.ndarray:
    return np.ones(op.shape)


def operator_radius(op: SlabOperator, gamma: float, x0=None,
                    tol: float = POWER_TOL) -> SpectralResult:
    """Spectral radius and Perron vector of ``(0 - T)^-1 K(gamma)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return spectral_radius(op.transport_map(gamma), _ones(op) if x0 is None else x0,
                           tol=tol, norm=op.norm)


def spectral_radius_map(p: ProblemModel | SlabOperator, gamma: float,
                        tol: float = POWER_TOL) -> float:
    """``R(gamma) = r[(0 - T)^-1 (Ks + Kf / gamma)]``."""
    op = p if isinstance(p, SlabOperator) else operator_for(p)
    return operator_radius(op, gamma, tol=tol).radius


# ---------------------------------------------------------------------------
# existence

@dataclass(frozen=True)
class ExistenceCheck:
    """Both existence conditions.  ``lim_{gamma -> 0} R`` is probed at ``gamma_min``."""

    r_sigma_Ls: float
    r_small_gamma: float
    gamma_min: float
    scattering_ok: bool
    small_gamma_ok: bool

    @property
    def exists(self) -> bool:
        return self.scattering_ok and self.small_gamma_ok

    @property
    def failed_conditions(self) -> list[str]:
        out = []
        if not self.scattering_ok:
            out.append("r_sigma[(0-T)^-1 Ks] < 1")
        if not self.small_gamma_ok:
            out.append("lim_{gamma->0} r_sigma[(0-T)^-1 K(gamma)] > 1")
        return out


def scattering_radius(op: SlabOperator, tol: float = POWER_TOL) -> SpectralResult:
    if not op.has_scattering:
        return SpectralResult(0.0, op.normalize(_ones(op)), 0.0, 0.0, 0)
    return spectral_radius(op.scattering_map(), _ones(op), tol=tol, norm=op.norm)


def check_existence(p: ProblemModel | SlabOperator,
                    gamma_min: float = GAMMA_MIN_PROBE) -> ExistenceCheck:
    op = p if isinstance(p, SlabOperator) else operator_for(p)
    # only the side of 1 matters here, so a looser tolerance is enough
    rs = scattering_radius(op, tol=1e-10).radius
    rg = operator_radius(op, gamma_min, tol=1e-10).radius if op.has_fission else rs
    return ExistenceCheck(rs, rg, gamma_min, rs < 1.0, rg > 1.0)


# ---------------------------------------------------------------------------
# solutions

class Method(str, enum.Enum):
    ROOTFIND = "rootfind"
    DIRECT = "direct"


@dataclass
class CriticalitySolution:
    k_eff: float
    phi: np.ndarray
    residual: float
    spectral_radius_at_root: float
    classification: Criticality
    method: Method
    iterations: dict = field(default_factory=dict)
    cw_gap: float = 0.0

    def summary(self) -> dict:
        return {
            "k_eff": self.k_eff,
            "residual": self.residual,
            "spectral_radius_at_root": self.spectral_radius_at_root,
            "classification": self.classification.value,
            "method": self.method.value,
            "iterations": dict(self.iterations),
            "cw_gap": self.cw_gap,
            "phi_min": float(self.phi.min()),
        }


def _finish(op: SlabOperator, k: float, phi: np.ndarray, method: Method,
            iterations: dict, cw_gap: float) -> CriticalitySolution:
    phi = op.normalize(phi)
    image = op.transport_map(k)(phi)
    residual = op.norm(image - phi)
    rad = operator_radius(op, k, x0=phi).radius
    return CriticalitySolution(k, phi, residual, abs(rad - 1.0), classify(k), method,
                               iterations, cw_gap)


def _require_existence(op: SlabOperator) -> ExistenceCheck:
    check = check_existence(op)
    if not check.exists:
        raise ExistenceError("k_eff does not exist: failed " + ", ".join(check.failed_conditions),
                             check)
    return check


def solve_keff_rootfind(p: ProblemModel | SlabOperator, tol: float = ROOT_TOL) -> CriticalitySolution:
    """Solve ``R(k) = 1`` by bracketing from ``gamma = 1`` and Brent's method."""
    op = p if isinstance(p, SlabOperator) else operator_for(p)
    _require_existence(op)
    state = {"x0": _ones(op), "evals": 0, "power": 0}

    def f(gamma: float) -> float:
        res = operator_radius(op, gamma, x0=state["x0"])
        state["x0"] = res.vector
        state["evals"] += 1
        state["power"] += res.iterations
        return res.radius - 1.0

    lo = hi = 1.0
    f_lo = f_hi = f(1.0)
    if f_lo > 0:
        while f_hi > 0:
            lo, f_lo = hi, f_hi
            hi *= BRACKET_FACTOR
            if hi > BRACKET[1]:
                raise SolverError("root bracket not found below gamma = 1e8")
            f_hi = f(hi)
    else:
        while f_lo < 0:
            hi, f_hi = lo, f_lo
            lo /= BRACKET_FACTOR
            if lo < BRACKET[0]:
                raise SolverError("root bracket not found above gamma = 1e-8")
            f_lo = f(lo)

    if f_lo == 0:
        k = lo
    elif f_hi == 0:
        k = hi
    else:
        k = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = operator_radius(op, k, x0=state["x0"])
    if abs(res.radius - 1.0) > tol:
        raise SolverError(f"|R(k) - 1| = {abs(res.radius - 1.0):.3e} exceeds tol = {tol:.1e}")
    iters = {"radius_evaluations": state["evals"] + 1, "power_iterations": state["power"] + res.iterations}
    return _finish(op, k, res.vector, Method.ROOTFIND, iters, res.gap)


def solve_keff_direct(p: ProblemModel | SlabOperator, tol: float = POWER_TOL,
                      inner_tol: float = 1e-15, inner_max_iter: int = 100_000) -> CriticalitySolution:
    """``k_eff = r[(I - Ls)^-1 Lf]`` with the inner inverse by Neumann iteration."""
    op = p if isinstance(p, SlabOperator) else operator_for(p)
    rs = scattering_radius(op, tol=1e-10).radius
    if rs >= 1.0:
        raise ExistenceError(f"scattering radius {rs:.6g} >= 1: Neumann iteration diverges")
    if not op.has_fission:
        raise ExistenceError("fission kernel is identically zero")
    Ls, Lf = op.scattering_map(), op.fission_map()
    counts = {"inner_iterations": 0}
    guess = {"z": None}

    def apply(phi):
        y = Lf(phi)
        if not op.has_scattering:
            return y
        # fixed point z = y + Ls z, warm-started from the previous solve
        z = y if guess["z"] is None else guess["z"] * (np.sum(y) / np.sum(guess["z"]))
        for _ in range(inner_max_iter):
            new = y + Ls(z)
            counts["inner_iterations"] += 1
            delta = np.max(np.abs(new - z))
            z = new
            if delta <= inner_tol * np.max(np.abs(z)):
                break
        else:
            raise SolverError("Neumann iteration for (I - Ls)^-1 did not converge")
        guess["z"] = z
        return z

    res = spectral_radius(apply, _ones(op), tol=tol, norm=op.norm)
    iters = {"power_iterations": res.iterations, **counts}
    return _finish(op, res.radius, res.vector, Method.DIRECT, iters, res.gap)


def solve_keff(p: ProblemModel | SlabOperator, method: str = "rootfind", **kw) -> CriticalitySolution:
    if Method(method) is Method.ROOTFIND:
        return solve_keff_rootfind(p, **kw)
    return solve_keff_direct(p, **kw)


# ---------------------------------------------------------------------------
# eigenfunction approximation

@dataclass
class EigenfunctionApproximation:
    gammas: list[float]
    errors: list[float]
    converged: bool
    monotone_from_below: bool

    @property
    def iterations(self) -> int:
        return len(self.gammas) - 1

    def summary(self) -> dict:
        return {"gammas": list(self.gammas), "errors": list(self.errors),
                "converged": self.converged, "monotone_from_below": self.monotone_from_below,
                "iterations": self.iterations}


def approximate_eigenfunction(p: ProblemModel | SlabOperator, reference: CriticalitySolution,
                              max_iter: int = 200, tol: float = 1e-8,
                              phi0: np.ndarray | None = None) -> EigenfunctionApproximation:
    """Build ``phi_k`` with ``gamma_k = tau_plus(phi_k)`` increasing to ``k_eff``.

    ``phi_0`` is the resolvent of the all-ones field unless given.  Each step
    maps ``phi_{k+1} = (0 - T)^-1 K(gamma_k) phi_k`` and rescales so that
    ``||(0 - T)^-1 K(gamma_{k+1}) phi_{k+1}|| = 1``.  Stops when both
    ``||phi_k - phi_eff|| <= tol`` and ``|gamma_k - k_eff| <= tol * k_eff``.
    """
    from .variational import tau_plus

    op = p if isinstance(p, SlabOperator) else operator_for(p)
    k_ref, phi_ref = reference.k_eff, op.normalize(reference.phi)
    phi = op.resolvent(_ones(op)) if phi0 is None else np.array(phi0, dtype=float)

    def normalised(phi):
        gamma = tau_plus(op, phi)
        if not np.isfinite(gamma) or gamma <= 0:
            raise SolverError(f"tau_plus degenerate ({gamma}); cannot continue the iteration")
        image = op.transport_map(gamma)(phi)
        return phi / op.norm(image), gamma, image / op.norm(image)

    phi, gamma, image = normalised(phi)
    gammas, errors = [gamma], [op.norm(phi - phi_ref)]
    converged = False
    for _ in range(max_iter + 1):
        if errors[-1] <= tol and abs(gammas[-1] - k_ref) <= tol * k_ref:
            converged = True
            break
        if len(gammas) > max_iter:
            break
        phi, gamma, image = normalised(image)
        gammas.append(gamma)
        errors.append(op.norm(phi - phi_ref))
    slack = 1e-12 * k_ref
    monotone = all(b >= a - slack for a, b in zip(gammas, gammas[1:])) and all(
        g <= k_ref + slack for g in gammas)
    return EigenfunctionApproximation(gammas, errors, converged, monotone)
