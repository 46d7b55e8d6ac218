"""Explicit certified bounds on ``k_eff``.

Transport.  With the discrete stay time ``tau`` (upwind derivative exactly
one, zero at the inflow face) the test function ``phi = tau * psi`` gives
``(0 - T) phi = (1 + sigma tau) psi``, so the per-cell matrices

    A(x_i)[j, k] = w_k Sigma(x_i, v_j, v_k) tau(x_i, v_k) / (1 + sigma(x_i, v_j) tau(x_i, v_j))

turn ratio bounds on ``psi`` into bounds on ``k_eff``:

* ``max_i,j (A psi)_j / psi_j < 1`` with the full kernel gives ``k_eff <= value``;
* ``min_i,j (A psi)_j / psi_j > 1`` with the full kernel gives ``k_eff >= value``;
* ``min_i,j (A_f psi)_j / psi_j`` with the fission kernel always bounds ``k_eff`` below;
* ``Lambda_f / (1 + sigma_max d / v_min)`` bounds ``k_eff`` below, using ``tau <= d / v_min``.

Diffusion.  With the principal Dirichlet pair ``(lambda0, rho0)`` of
``-div(d0 grad .)`` and ``D = d0 d1``, ``phi = rho0 * psi`` gives
``(0 - T) phi = (lambda0 d1 + sigma) phi``, and the per-cell matrices carry
the kernel ``u_k Sigma / (lambda0 d1_g + sigma)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import DiffusionError
from .operators import operator_for
from .problem import Kind, ProblemModel

STRATEGIES = ("ones", "min-perron", "max-perron", "mean-perron")
_ALIASES = {"min-matrix-perron": "min-perron", "max-matrix-perron": "max-perron",
            "mean-matrix-perron": "mean-perron"}
CERTIFICATE_SLACK = 1e-10

UPPER_CONDITION_NOTE = (
    "diffusion upper bound is certified only when the max ratio is < 1 "
    "(the transport condition); a '> 1' reading is not used")
PAO_NOTE = "Pao criterion concludes k_eff >= 1 (not sub-critical)"


class BoundsError(ValueError):
    pass


def _psi(p: ProblemModel, psi) -> np.ndarray:
    n = p.shape[1]
    psi = np.ones(n) if psi is None else np.asarray(psi, dtype=float)
    if psi.shape != (n,):
        raise BoundsError(f"psi must have shape ({n},), got {psi.shape}")
    if not np.all(psi > 0):
        raise BoundsError("psi must be strictly positive")
    return psi


def _kernel(p: ProblemModel, which: str) -> np.ndarray:
    xs = p.cross_sections
    if which == "full":
        return xs.total
    if which == "fission":
        return xs.sigma_f
    raise BoundsError(f"unknown kernel choice {which!r}")


# ---------------------------------------------------------------------------
# transport

def stay_times(p: ProblemModel) -> np.ndarray:
    """Discrete stay times, checked against ``d / v_min``."""
    if p.kind is not Kind.TRANSPORT:
        raise BoundsError("stay times are defined for transport problems")
    tau = operator_for(p).stay_times
    d, v0 = p.geometry.width, p.grid.v_min
    if not np.all(tau <= d / v0 * (1 + 1e-14)):
        raise AssertionError("stay time exceeds d / v_min")
    return tau


def _transport_matrices(p: ProblemModel, which: str) -> np.ndarray:
    """Stack of per-cell matrices ``A(x_i)``, shape ``(Nx, n, n)``."""
    tau = stay_times(p)
    sigma = p.cross_sections.sigma
    num = _kernel(p, which) * (p.weights[None, :] * tau)[:, None, :]
    return num / (1.0 + sigma * tau)[:, :, None]


def k_tau_apply(p: ProblemModel, x_index: int, psi, kernel: str = "full") -> np.ndarray:
    """``[K^tau(x_i) psi]_j`` for one cell; ``kernel`` is ``"full"`` or ``"fission"``."""
    nx = p.shape[0]
    if not (0 <= x_index < nx):
        raise IndexError(f"cell index {x_index} out of range [0, {nx})")
    psi = _psi(p, psi)
    tau = stay_times(p)[x_index]
    sigma = p.cross_sections.sigma[x_index]
    k = _kernel(p, kernel)[x_index]
    return (k @ (p.weights * tau * psi)) / (1.0 + sigma * tau)


# ---------------------------------------------------------------------------
# diffusion

def _require_degenerate(p: ProblemModel):
    if p.kind is not Kind.DIFFUSION:
        raise BoundsError("this bound applies to diffusion problems")
    if not p.diffusion.degenerate:
        raise DiffusionError("explicit diffusion bounds need degenerate data D0(x) d1(xi)")


def principal_value(p: ProblemModel) -> float:
    _require_degenerate(p)
    return operator_for(p).principal_eigenpair().value


def _diffusion_matrices(p: ProblemModel, which: str) -> np.ndarray:
    _require_degenerate(p)
    lam = principal_value(p)
    removal = lam * p.diffusion.d1[None, :] + p.cross_sections.sigma
    return _kernel(p, which) * p.weights[None, None, :] / removal[:, :, None]


def _matrices(p: ProblemModel, which: str) -> np.ndarray:
    return _transport_matrices(p, which) if p.kind is Kind.TRANSPORT else _diffusion_matrices(p, which)


def _ratios(mats: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return (mats @ psi) / psi[None, :]


# ---------------------------------------------------------------------------
# bounds

@dataclass
class Bound:
    """One bound evaluation; ``certificate`` is ``None`` when nothing is certified."""

    name: str
    psi: str
    value: float
    sense: str  # "lower" (k_eff >= certificate) or "upper" (k_eff <= certificate)
    certificate: float | None
    applicable: bool
    note: str = ""

    def holds_for(self, k_eff: float, slack: float = CERTIFICATE_SLACK) -> bool:
        if self.certificate is None:
            return True
        if self.sense == "lower":
            return k_eff >= self.certificate - slack * max(k_eff, self.certificate)
        return k_eff <= self.certificate + slack * max(k_eff, self.certificate)

    def summary(self) -> dict:
        return {"name": self.name, "psi": self.psi, "value": self.value, "sense": self.sense,
                "certificate": self.certificate, "applicable": self.applicable, "note": self.note}


def theta_upper(p: ProblemModel, psi=None, label: str = "custom") -> Bound:
    """Max ratio with the full kernel; certifies ``k_eff <= value`` when ``value < 1``."""
    psi = _psi(p, psi)
    value = float(_ratios(_matrices(p, "full"), psi).max())
    ok = value < 1.0
    note = "" if ok else "max ratio >= 1: no upper bound"
    if p.kind is Kind.DIFFUSION:
        note = (note + "; " if note else "") + UPPER_CONDITION_NOTE
    return Bound("theta_upper", label, value, "upper", value if ok else None, ok, note)


def theta_lower(p: ProblemModel, psi=None, label: str = "custom") -> Bound:
    """Min ratio with the full kernel; certifies ``k_eff >= value`` when ``value > 1``."""
    psi = _psi(p, psi)
    value = float(_ratios(_matrices(p, "full"), psi).min())
    ok = value > 1.0
    return Bound("theta_lower", label, value, "lower", value if ok else None, ok,
                 "" if ok else "min ratio <= 1: no lower bound")


def beta_f_lower(p: ProblemModel, psi=None, label: str = "custom") -> Bound:
    """Min ratio with the fission kernel; always certifies ``k_eff >= value``."""
    if p.kind is not Kind.TRANSPORT:
        raise BoundsError("beta_f applies to transport problems; use diffusion_beta0")
    psi = _psi(p, psi)
    value = float(_ratios(_transport_matrices(p, "fission"), psi).min())
    return Bound("beta_f", label, value, "lower", value, True)


def lambda_f_bound(p: ProblemModel, psi=None, label: str = "custom") -> Bound:
    """``Lambda_f(psi) / (1 + sigma_max d / v_min)`` as a lower bound.

    ``Lambda_f(psi) = min_i,j (1/psi_j) sum_k w_k Sigma_f(x_i, v_j, v_k) tau(x_i, v_k) psi_k``.
    With ``psi = 1`` this is the bounded-velocity form of the bound.
    """
    psi = _psi(p, psi)
    tau = stay_times(p)
    num = np.einsum("ijk,ik->ij", p.cross_sections.sigma_f, p.weights[None, :] * tau * psi)
    lam = float((num / psi[None, :]).min())
    d, v0 = p.geometry.width, p.grid.v_min
    sigma_bar = float(p.cross_sections.sigma.max())
    value = lam / (1.0 + sigma_bar * d / v0)
    name = "vborne" if np.all(psi == 1.0) else "lambda_f"
    return Bound(name, label, value, "lower", value, True, f"Lambda_f = {lam!r}")


def diffusion_beta0(p: ProblemModel, psi=None, label: str = "custom") -> Bound:
    """Min ratio of the fission kernel over ``lambda0 d1 + sigma``: ``k_eff >= value``."""
    psi = _psi(p, psi)
    value = float(_ratios(_diffusion_matrices(p, "fission"), psi).min())
    return Bound("beta0", label, value, "lower", value, True)


def diffusion_theta(p: ProblemModel, psi=None, label: str = "custom") -> tuple[Bound, Bound]:
    _require_degenerate(p)
    return theta_lower(p, psi, label), theta_upper(p, psi, label)


@dataclass(frozen=True)
class PaoResult:
    holds: bool
    bound: float | None
    margin: float
    failing_points: int

    def as_bound(self) -> Bound:
        if not self.holds:
            return Bound("pao", "ones", self.margin, "lower", None, False,
                         f"criterion fails at {self.failing_points} grid points")
        return Bound("pao", "ones", self.bound, "lower", max(1.0, self.bound), True, PAO_NOTE)


def pao_criterion(p: ProblemModel) -> PaoResult:
    """Strict ``lambda0 d1 + sigma < sum_k u_k Sigma(x, xi, xi_k)`` at every grid point.

    When it holds, ``k_eff >= 1`` and more precisely ``k_eff >= min`` of the
    pointwise ratio of the two sides.
    """
    _require_degenerate(p)
    lam = principal_value(p)
    removal = lam * p.diffusion.d1[None, :] + p.cross_sections.sigma
    source = np.einsum("ijk,k->ij", p.cross_sections.total, p.weights)
    fails = removal >= source
    ratio = source / removal
    holds = not bool(np.any(fails))
    return PaoResult(holds, float(ratio.min()) if holds else None,
                     float((source - removal).min()), int(fails.sum()))


# ---------------------------------------------------------------------------
# psi candidates

def perron_vector(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Perron root and a strictly positive Perron vector of a nonnegative matrix."""
    m = np.asarray(m, dtype=float)
    vals, vecs = np.linalg.eig(m)
    i = int(np.argmax(vals.real))
    v = np.abs(vecs[:, i].real)
    if v.max() == 0:
        v = np.ones(m.shape[0])
    # zero entries would make psi inadmissible; lift them slightly
    v = np.maximum(v / v.max(), 1e-12)
    return float(vals[i].real), v


def _target_kernel(p: ProblemModel, target: str) -> str:
    if target in ("theta_upper", "theta_lower", "pao"):
        return "full"
    if target in ("beta_f", "lambda_f", "vborne", "beta0"):
        return "fission"
    raise BoundsError(f"unknown bound {target!r}")


def optimize_psi(p: ProblemModel, target: str, strategy: str = "ones") -> np.ndarray:
    """Candidate ``psi`` for a bound: ones, or the Perron vector of the
    entrywise min / max / mean over cells of the per-cell matrices."""
    strategy = _ALIASES.get(strategy, strategy)
    if strategy not in STRATEGIES:
        raise BoundsError(f"unknown psi strategy {strategy!r}; expected one of {STRATEGIES}")
    kernel = _target_kernel(p, target)
    if strategy == "ones":
        return np.ones(p.shape[1])
    mats = _matrices(p, kernel)
    reduce = {"min-perron": np.min, "max-perron": np.max, "mean-perron": np.mean}[strategy]
    return perron_vector(reduce(mats, axis=0))[1]


# ---------------------------------------------------------------------------
# reports

@dataclass
class BoundsReport:
    kind: Kind
    bounds: list[Bound]
    constants: dict
    notes: list[str] = field(default_factory=list)

    def certificates(self) -> list[Bound]:
        return [b for b in self.bounds if b.certificate is not None]

    def best_lower(self) -> float:
        vals = [b.certificate for b in self.certificates() if b.sense == "lower"]
        return max(vals) if vals else 0.0

    def best_upper(self) -> float:
        vals = [b.certificate for b in self.certificates() if b.sense == "upper"]
        return min(vals) if vals else math.inf

    def contradictions(self, k_eff: float, slack: float = CERTIFICATE_SLACK) -> list[Bound]:
        return [b for b in self.bounds if not b.holds_for(k_eff, slack)]

    def table(self) -> dict:
        """``{bound name: {psi strategy: value}}``."""
        out: dict = {}
        for b in self.bounds:
            out.setdefault(b.name, {})[b.psi] = b.value
        return out

    def summary(self) -> dict:
        return {"kind": self.kind.value, "constants": dict(self.constants),
                "notes": list(self.notes), "bounds": [b.summary() for b in self.bounds],
                "best_lower": self.best_lower(), "best_upper": self.best_upper(),
                "table": self.table()}


def bounds_report(p: ProblemModel, strategies=("ones",)) -> BoundsReport:
    """Every applicable bound for every ``psi`` strategy."""
    strategies = [_ALIASES.get(s, s) for s in strategies]
    if "all" in strategies:
        strategies = list(STRATEGIES)
    bounds: list[Bound] = []
    notes: list[str] = []
    if p.kind is Kind.TRANSPORT:
        tau = stay_times(p)
        constants = {"d": p.geometry.width, "v0": p.grid.v_min,
                     "sigma_bar": float(p.cross_sections.sigma.max()),
                     "tau_max": float(tau.max())}
        evaluators = [("theta_upper", theta_upper), ("theta_lower", theta_lower),
                      ("beta_f", beta_f_lower), ("lambda_f", lambda_f_bound)]
    else:
        _require_degenerate(p)
        constants = {"d": p.geometry.width, "lambda0": principal_value(p),
                     "sigma_bar": float(p.cross_sections.sigma.max()),
                     "d1": p.diffusion.d1.tolist()}
        evaluators = [("theta_upper", theta_upper), ("theta_lower", theta_lower),
                      ("beta0", diffusion_beta0)]
        notes += [UPPER_CONDITION_NOTE, PAO_NOTE]
    for s in strategies:
        for target, fn in evaluators:
            bounds.append(fn(p, optimize_psi(p, target, s), s))
    if p.kind is Kind.DIFFUSION:
        bounds.append(pao_criterion(p).as_bound())
    return BoundsReport(p.kind, bounds, constants, notes)
