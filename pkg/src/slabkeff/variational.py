"""Ratio field, ``tau_plus``/``tau_minus`` and the sandwich check.

For a strictly positive grid function ``phi`` the ratio field is

    rho(phi) = -(T + Ks) phi / (Kf phi)

and the discrete Collatz-Wielandt argument gives
``min rho(phi) <= 1 / k_eff <= max rho(phi)``, with equality at the
eigenfunction.  ``tau_plus = 1 / max rho`` is therefore a lower bound of
``k_eff`` and ``tau_minus = 1 / min rho`` an upper bound.  On a finite grid
the essential sup and inf are plain max and min.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import SlabOperator, operator_for
from .problem import ProblemModel

DENOMINATOR_FLOOR = 1e-300
SANDWICH_SLACK = 1e-10


class VariationalError(ValueError):
    pass


class SandwichViolation(AssertionError):
    def __init__(self, message: str, sample: str):
        super().__init__(message)
        self.sample = sample


def _op(p) -> SlabOperator:
    return p if isinstance(p, SlabOperator) else operator_for(p)


def ratio_field(p: ProblemModel | SlabOperator, phi) -> np.ndarray:
    """Pointwise ``[-(T + Ks) phi] / [Kf phi]``."""
    op = _op(p)
    phi = op._check(phi)
    if not np.all(phi > 0):
        idx = tuple(int(i) for i in np.argwhere(~(phi > 0))[0])
        raise VariationalError(f"test function must be strictly positive; phi{idx} = {phi[idx]!r}")
    den = op.apply_Kf(phi)
    small = den < DENOMINATOR_FLOOR
    if np.any(small):
        idx = tuple(int(i) for i in np.argwhere(small)[0])
        raise VariationalError(
            f"fission source vanishes at grid point (cell {idx[0]}, node {idx[1]}); "
            "the fission kernel is not positive there")
    return (op.apply_A(phi) - op.apply_Ks(phi)) / den


def _tau_from_sup(s: float) -> float:
    if math.isinf(s) and s > 0:
        return 0.0
    return 1.0 / s if s > 0 else math.inf


def tau_plus(p, phi) -> float:
    """``1 / max rho(phi)``; ``+inf`` when the max is <= 0, ``0`` when it is infinite."""
    return _tau_from_sup(float(np.max(ratio_field(p, phi))))


def tau_minus(p, phi) -> float:
    """``1 / min rho(phi)``; ``+inf`` when the min is <= 0 (no upper bound certified)."""
    i = float(np.min(ratio_field(p, phi)))
    return 1.0 / i if i > 0 else math.inf


@dataclass
class VariationalReport:
    test_function: str
    ratio_field: np.ndarray
    ess_sup: float
    ess_inf: float
    tau_plus: float
    tau_minus: float
    flags: list[str] = field(default_factory=list)

    @property
    def lower(self) -> float:
        return self.tau_plus

    @property
    def upper(self) -> float:
        return self.tau_minus

    def summary(self) -> dict:
        return {"test_function": self.test_function, "ess_sup": self.ess_sup,
                "ess_inf": self.ess_inf, "tau_plus": self.tau_plus,
                "tau_minus": self.tau_minus, "lower": self.lower, "upper": self.upper,
                "flags": list(self.flags)}


def evaluate(p, phi, label: str = "phi") -> VariationalReport:
    rho = ratio_field(p, phi)
    s, i = float(rho.max()), float(rho.min())
    flags = []
    if s <= 0:
        flags.append("nonpositive-sup")
    if i <= 0:
        flags.append("nonpositive-inf")
    return VariationalReport(label, rho, s, i, _tau_from_sup(s),
                             1.0 / i if i > 0 else math.inf, flags)


def random_test_function(p, seed: int, index: int) -> np.ndarray:
    """``(0 - T)^-1 q`` with ``q`` uniform in ``[0.1, 1]``, drawn from ``(seed, index)``."""
    op = _op(p)
    rng = np.random.default_rng([seed, index])
    return op.resolvent(rng.uniform(0.1, 1.0, size=op.shape))


@dataclass
class SandwichResult:
    k_eff: float
    reports: list[VariationalReport]
    best_lower: float
    best_upper: float
    violations: list[str]
    collapse_spread: float | None

    def summary(self) -> dict:
        return {"k_eff": self.k_eff, "samples": len(self.reports),
                "best_lower": self.best_lower, "best_upper": self.best_upper,
                "violations": list(self.violations),
                "collapse_spread": self.collapse_spread,
                "reports": [r.summary() for r in self.reports]}


def sandwich_verify(p, k_eff: float, n_samples: int, seed: int = 0,
                    phi_eff: np.ndarray | None = None, test_functions=(),
                    slack: float = SANDWICH_SLACK, strict: bool = True) -> SandwichResult:
    """Check ``tau_plus(phi) <= k_eff <= tau_minus(phi)`` for many test functions.

    ``n_samples`` random functions come from :func:`random_test_function`;
    explicit ``test_functions`` and ``phi_eff`` (if given) are added.  With
    ``strict`` the first violation raises :class:`SandwichViolation` naming
    the sample; otherwise violations are collected.
    """
    op = _op(p)
    candidates = [(f"seed={seed},index={i}", random_test_function(op, seed, i))
                  for i in range(n_samples)]
    candidates += [(f"explicit[{i}]", np.asarray(f, dtype=float))
                   for i, f in enumerate(test_functions)]
    if phi_eff is not None:
        candidates.append(("phi_eff", np.asarray(phi_eff, dtype=float)))

    reports, violations = [], []
    lower, upper = 0.0, math.inf
    for label, phi in candidates:
        rep = evaluate(op, phi, label)
        reports.append(rep)
        ok = rep.tau_plus <= k_eff * (1 + slack) and rep.tau_minus >= k_eff * (1 - slack)
        if not ok:
            msg = (f"sandwich violated for sample {label}: tau_plus = {rep.tau_plus!r}, "
                   f"k_eff = {k_eff!r}, tau_minus = {rep.tau_minus!r}")
            if strict:
                raise SandwichViolation(msg, label)
            violations.append(label)
        lower, upper = max(lower, rep.tau_plus), min(upper, rep.tau_minus)

    spread = None
    if phi_eff is not None:
        last = reports[-1]
        spread = last.ess_sup - last.ess_inf
    return SandwichResult(k_eff, reports, lower, upper, violations, spread)
