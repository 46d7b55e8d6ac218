"""Problem description for 1-D slab criticality problems.

A problem is a slab ``(0, a)`` split into ``Nx`` uniform cells, a discrete
phase-space grid (signed velocity nodes for transport, energy groups for
diffusion) and piecewise-constant cross sections.  Kernels are stored as
dense ``(cell, node, node')`` arrays and act through the grid weights::

    (K phi)[i, j] = sum_k w[k] * kernel[i, j, k] * phi[i, k]

All arrays held by a :class:`ProblemModel` are read-only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np


class ProblemError(ValueError):
    """Raised when a configuration does not describe a valid problem."""


class Kind(str, enum.Enum):
    TRANSPORT = "transport"
    DIFFUSION = "diffusion"


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SlabGeometry:
    width: float
    cells: int

    def __post_init__(self):
        if not np.isfinite(self.width) or self.width <= 0:
            raise ProblemError(f"slab width must be positive, got {self.width!r}")
        if int(self.cells) != self.cells or self.cells < 1:
            raise ProblemError(f"cell count must be a positive integer, got {self.cells!r}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def dx(self) -> float:
        return self.width / self.cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx


@dataclass(frozen=True)
class VelocityGrid:
    """Signed velocity nodes with positive quadrature weights.

    ``shells`` is set for multigroup models: each node then lies on one of a
    finite number of speed shells ``|v| = r_l`` and ``shells[j]`` is the shell
    index of node ``j``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    shells: np.ndarray | None = None

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        weights = _frozen(self.weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ProblemError("velocity nodes and weights must be 1-D arrays of equal length")
        if np.any(nodes == 0) or np.min(np.abs(nodes)) <= 0:
            raise ProblemError(
                "velocity node equal to zero: the speeds must be bounded away from zero"
            )
        if np.any(weights <= 0):
            raise ProblemError("velocity weights must be positive")
        if not np.allclose(np.sort(nodes), np.sort(-nodes), rtol=1e-12, atol=0):
            raise ProblemError("velocity nodes must be symmetric under v -> -v")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.shells is not None:
            object.__setattr__(self, "shells", _frozen(self.shells, dtype=int))

    @classmethod
    def gauss_legendre(cls, v_min: float, v_max: float, nodes_per_sign: int) -> "VelocityGrid":
        if not (v_min > 0):
            raise ProblemError(
                f"v_min = {v_min!r}: velocities must be bounded away from zero (v_min > 0)"
            )
        if not (v_max > v_min):
            raise ProblemError("v_max must exceed v_min")
        if nodes_per_sign < 1:
            raise ProblemError("nodes_per_sign must be at least 1")
        t, w = np.polynomial.legendre.leggauss(int(nodes_per_sign))
        speeds = 0.5 * (v_max - v_min) * t + 0.5 * (v_max + v_min)
        weights = 0.5 * (v_max - v_min) * w
        return cls(np.concatenate([-speeds[::-1], speeds]),
                   np.concatenate([weights[::-1], weights]))

    @classmethod
    def from_speeds(cls, speeds) -> "VelocityGrid":
        """Multigroup grid: directions +-r for every speed r, unit weights."""
        speeds = np.asarray(speeds, dtype=float)
        if speeds.ndim != 1 or speeds.size == 0 or np.any(speeds <= 0):
            raise ProblemError("speeds must be a non-empty list of positive numbers")
        order = np.argsort(speeds)
        speeds = speeds[order]
        nodes = np.concatenate([-speeds[::-1], speeds])
        shells = np.concatenate([np.arange(speeds.size)[::-1], np.arange(speeds.size)])
        return cls(nodes, np.ones_like(nodes), shells)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def v_min(self) -> float:
        return float(np.min(np.abs(self.nodes)))

    @property
    def v_max(self) -> float:
        return float(np.max(np.abs(self.nodes)))


@dataclass(frozen=True)
class EnergyGrid:
    xi_min: float
    xi_max: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if not (0 < self.xi_min < self.xi_max):
            raise ProblemError("energy interval must satisfy 0 < xi_min < xi_max")
        nodes = _frozen(self.nodes)
        weights = _frozen(self.weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ProblemError("energy nodes and weights must be 1-D arrays of equal length")
        if np.any(nodes <= self.xi_min) or np.any(nodes >= self.xi_max):
            raise ProblemError("energy nodes must lie strictly inside the interval")
        if np.any(weights <= 0):
            raise ProblemError("energy weights must be positive")
        if not np.isclose(weights.sum(), self.xi_max - self.xi_min, rtol=1e-12, atol=0):
            raise ProblemError("energy weights must sum to the interval length")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_legendre(cls, xi_min: float, xi_max: float, groups: int) -> "EnergyGrid":
        if groups < 1:
            raise ProblemError("at least one energy group is required")
        t, w = np.polynomial.legendre.leggauss(int(groups))
        return cls(xi_min, xi_max,
                   0.5 * (xi_max - xi_min) * t + 0.5 * (xi_max + xi_min),
                   0.5 * (xi_max - xi_min) * w)

    @property
    def size(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class CrossSectionSet:
    """Collision frequency ``sigma`` and the scattering/fission kernels.

    ``sigma`` has shape ``(Nx, n)``; both kernels have shape ``(Nx, n, n)``
    where the last axis is the incoming node.
    """

    sigma: np.ndarray
    sigma_s: np.ndarray
    sigma_f: np.ndarray
    sigma_lower: float = field(init=False)

    def __post_init__(self):
        sigma = _frozen(self.sigma)
        ks = _frozen(self.sigma_s)
        kf = _frozen(self.sigma_f)
        if sigma.ndim != 2:
            raise ProblemError(f"sigma must have shape (cells, nodes), got {sigma.shape}")
        nx, n = sigma.shape
        for name, k in (("sigma_s", ks), ("sigma_f", kf)):
            if k.shape != (nx, n, n):
                raise ProblemError(f"{name} has shape {k.shape}, expected {(nx, n, n)}")
            if not np.all(np.isfinite(k)):
                raise ProblemError(f"{name} has non-finite entries")
            if np.any(k < 0):
                idx = tuple(int(i) for i in np.argwhere(k < 0)[0])
                raise ProblemError(f"negative kernel entry in {name} at {idx}")
        bad = ~(np.isfinite(sigma) & (sigma > 0))
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ProblemError(f"sigma lower bound violated (sigma must be > 0) at {idx}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigma_s", ks)
        object.__setattr__(self, "sigma_f", kf)
        object.__setattr__(self, "sigma_lower", float(np.min(sigma)))

    @property
    def total(self) -> np.ndarray:
        return self.sigma_s + self.sigma_f


@dataclass(frozen=True)
class DiffusionData:
    """Diffusion coefficient table ``D[i, g]``.

    When ``degenerate`` is true the table factors as ``d0[i] * d1[g]``; the
    explicit bounds and the principal eigenpair need that factorisation.
    """

    coefficient: np.ndarray
    d0: np.ndarray | None = None
    d1: np.ndarray | None = None

    def __post_init__(self):
        c = _frozen(self.coefficient)
        if c.ndim != 2:
            raise ProblemError("diffusion coefficient must be a (cells, groups) table")
        if not np.all(np.isfinite(c)) or np.min(c) <= 0:
            raise ProblemError("diffusion coefficient must be positive (ellipticity)")
        object.__setattr__(self, "coefficient", c)
        if (self.d0 is None) != (self.d1 is None):
            raise ProblemError("d0 and d1 must be given together")
        if self.d0 is not None:
            d0, d1 = _frozen(self.d0), _frozen(self.d1)
            if d0.shape != (c.shape[0],) or d1.shape != (c.shape[1],):
                raise ProblemError("d0/d1 shapes do not match the grid")
            if np.min(d0) <= 0 or np.min(d1) <= 0:
                raise ProblemError("d0 and d1 must be positive")
            if not np.allclose(np.outer(d0, d1), c, rtol=1e-14, atol=0):
                raise ProblemError("coefficient table differs from d0 x d1")
            object.__setattr__(self, "d0", d0)
            object.__setattr__(self, "d1", d1)

    @classmethod
    def separable(cls, d0, d1) -> "DiffusionData":
        d0 = np.asarray(d0, dtype=float)
        d1 = np.asarray(d1, dtype=float)
        return cls(np.outer(d0, d1), d0, d1)

    @property
    def degenerate(self) -> bool:
        return self.d0 is not None

    @property
    def ellipticity(self) -> float:
        return float(np.min(self.coefficient))


@dataclass(frozen=True)
class ProblemModel:
    kind: Kind
    geometry: SlabGeometry
    grid: VelocityGrid | EnergyGrid
    cross_sections: CrossSectionSet
    diffusion: DiffusionData | None = None
    p_norm: float = 2.0

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.TRANSPORT and not isinstance(self.grid, VelocityGrid):
            raise ProblemError("transport problems need a velocity grid")
        if kind is Kind.DIFFUSION and not isinstance(self.grid, EnergyGrid):
            raise ProblemError("diffusion problems need an energy grid")
        if (self.diffusion is not None) != (kind is Kind.DIFFUSION):
            raise ProblemError("diffusion data must be present iff kind is diffusion")
        shape = (self.geometry.cells, self.grid.size)
        if self.cross_sections.sigma.shape != shape:
            raise ProblemError(
                f"cross sections have shape {self.cross_sections.sigma.shape}, grid expects {shape}"
            )
        if self.diffusion is not None and self.diffusion.coefficient.shape != shape:
            raise ProblemError("diffusion table shape does not match the grid")
        if not (1 <= self.p_norm < np.inf):
            raise ProblemError("p_norm must lie in [1, inf)")
        object.__setattr__(self, "p_norm", float(self.p_norm))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.geometry.cells, self.grid.size)

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def norm_exponent(self) -> float:
        # diffusion problems live in a Hilbert setting regardless of p_norm
        return 2.0 if self.kind is Kind.DIFFUSION else self.p_norm

    def norm(self, phi: np.ndarray) -> float:
        p = self.norm_exponent
        cell_weight = self.geometry.dx * self.weights[None, :]
        return float(np.sum(cell_weight * np.abs(phi) ** p) ** (1.0 / p))

    def with_kernels(self, sigma_s=None, sigma_f=None) -> "ProblemModel":
        xs = self.cross_sections
        new = CrossSectionSet(
            xs.sigma,
            xs.sigma_s if sigma_s is None else sigma_s,
            xs.sigma_f if sigma_f is None else sigma_f,
        )
        return replace(self, cross_sections=new)

    def scaled(self, scattering: float = 1.0, fission: float = 1.0) -> "ProblemModel":
        xs = self.cross_sections
        return self.with_kernels(xs.sigma_s * scattering, xs.sigma_f * fission)


# ---------------------------------------------------------------------------
# configuration documents

def _field(value: Any, shape: tuple[int, ...], name: str) -> np.ndarray:
    """Expand a number, table or ``{"separable": [...]}`` form to ``shape``.

    Tables are either the full shape or a per-cell list of length ``Nx``.
    ``{"per_node": table}`` gives an x-independent array over the node axes.
    Separable factors are combined by outer product; each factor is a number
    or a 1-D list (a 2-D node-node matrix is accepted as the last factor of
    a kernel).
    """
    if isinstance(value, Mapping):
        if "separable" in value:
            out = np.ones(())
            for f in value["separable"]:
                f = np.asarray(f, dtype=float)
                # a scalar factor spans its axis by broadcasting
                out = np.multiply.outer(out, f.reshape(1) if f.ndim == 0 else f)
            try:
                return np.broadcast_to(out, shape).astype(float)
            except ValueError:
                raise ProblemError(
                    f"{name}: separable factors give shape {out.shape}, expected {shape}"
                ) from None
        if "per_node" in value:
            t = np.asarray(value["per_node"], dtype=float)
            if t.shape != shape[1:]:
                raise ProblemError(f"{name}: per_node table has shape {t.shape}, expected {shape[1:]}")
            return np.broadcast_to(t, shape).astype(float)
        raise ProblemError(f"{name}: unknown table form {sorted(value)}")
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        return np.full(shape, float(a))
    if a.shape == shape:
        return a.copy()
    if a.shape == (shape[0],):
        return np.broadcast_to(a.reshape((-1,) + (1,) * (len(shape) - 1)), shape).astype(float)
    raise ProblemError(f"{name}: table shape {a.shape} does not match {shape} or ({shape[0]},)")


def build_problem(config: Mapping[str, Any]) -> ProblemModel:
    """Build and validate a :class:`ProblemModel` from a configuration mapping.

    The mapping follows the JSON problem schema: ``kind``, ``geometry``
    (``width``, ``cells``), ``velocity`` (``v_min``, ``v_max``,
    ``nodes_per_sign`` or ``speeds``) or ``energy`` (``xi_min``, ``xi_max``,
    ``groups``), ``sigma``, ``sigma_s``, ``sigma_f``, ``diffusion``
    (``d0``, ``d1`` or a full ``table``) and ``p_norm``.
    """
    try:
        kind = Kind(config["kind"])
    except (KeyError, ValueError):
        raise ProblemError("config 'kind' must be 'transport' or 'diffusion'") from None
    try:
        geo = config["geometry"]
        geometry = SlabGeometry(float(geo["width"]), geo["cells"])
    except (KeyError, TypeError):
        raise ProblemError("config 'geometry' needs 'width' and 'cells'") from None

    if kind is Kind.TRANSPORT:
        vel = config.get("velocity")
        if not isinstance(vel, Mapping):
            raise ProblemError("transport config needs a 'velocity' section")
        if "speeds" in vel:
            grid = VelocityGrid.from_speeds(vel["speeds"])
        else:
            try:
                grid = VelocityGrid.gauss_legendre(
                    float(vel["v_min"]), float(vel["v_max"]), int(vel["nodes_per_sign"])
                )
            except KeyError as e:
                raise ProblemError(f"velocity section is missing {e}") from None
    else:
        en = config.get("energy")
        if not isinstance(en, Mapping):
            raise ProblemError("diffusion config needs an 'energy' section")
        try:
            grid = EnergyGrid.gauss_legendre(float(en["xi_min"]), float(en["xi_max"]), int(en["groups"]))
        except KeyError as e:
            raise ProblemError(f"energy section is missing {e}") from None

    shape = (geometry.cells, grid.size)
    kshape = shape + (grid.size,)
    for key in ("sigma", "sigma_s", "sigma_f"):
        if key not in config:
            raise ProblemError(f"config is missing '{key}'")
    xs = CrossSectionSet(
        _field(config["sigma"], shape, "sigma"),
        _field(config["sigma_s"], kshape, "sigma_s"),
        _field(config["sigma_f"], kshape, "sigma_f"),
    )

    diffusion = None
    if kind is Kind.DIFFUSION:
        dif = config.get("diffusion")
        if not isinstance(dif, Mapping):
            raise ProblemError("diffusion config needs a 'diffusion' section")
        if "table" in dif:
            diffusion = DiffusionData(_field(dif["table"], shape, "diffusion.table"))
        else:
            d0 = _field(dif.get("d0", 1.0), (geometry.cells,), "diffusion.d0")
            d1 = _field(dif.get("d1", 1.0), (grid.size,), "diffusion.d1")
            diffusion = DiffusionData.separable(d0, d1)
    elif "diffusion" in config:
        raise ProblemError("transport config must not carry a 'diffusion' section")

    return ProblemModel(kind, geometry, grid, xs, diffusion, config.get("p_norm", 2.0))


def transport_problem(width, cells, sigma, sigma_s, sigma_f, *, v_min=0.5, v_max=2.0,
                      nodes_per_sign=2, speeds=None, p_norm=2.0) -> ProblemModel:
    velocity = {"speeds": list(speeds)} if speeds is not None else {
        "v_min": v_min, "v_max": v_max, "nodes_per_sign": nodes_per_sign}
    return build_problem({
        "kind": "transport",
        "geometry": {"width": width, "cells": cells},
        "velocity": velocity,
        "sigma": sigma, "sigma_s": sigma_s, "sigma_f": sigma_f,
        "p_norm": p_norm,
    })


def diffusion_problem(width, cells, sigma, sigma_s, sigma_f, *, d0=1.0, d1=1.0,
                      xi_min=1.0, xi_max=2.0, groups=1) -> ProblemModel:
    return build_problem({
        "kind": "diffusion",
        "geometry": {"width": width, "cells": cells},
        "energy": {"xi_min": xi_min, "xi_max": xi_max, "groups": groups},
        "sigma": sigma, "sigma_s": sigma_s, "sigma_f": sigma_f,
        "diffusion": {"d0": d0, "d1": d1},
    })


# ---------------------------------------------------------------------------
# positivity hypotheses

@dataclass(frozen=True)
class IrreducibilityReport:
    """Outcome of the fission-positivity checks.

    ``passed`` means a non-empty node band exists on which the fission kernel
    is strictly positive for every cell and every outgoing node, so fission
    maps strictly positive fields to strictly positive fields.  For transport
    ``two_sided`` additionally records whether the band rows are positive too
    (the full irreducibility pattern), and ``shell_chain`` the multigroup
    chain condition when the grid has speed shells.
    """

    passed: bool
    band: tuple[int, ...]
    witness: tuple[int, int, int] | None
    two_sided: bool | None = None
    shell_chain: bool | None = None
    message: str = ""


def validate_irreducibility(p: ProblemModel) -> IrreducibilityReport:
    kf = p.cross_sections.sigma_f
    positive = kf > 0
    # column k positive for every (cell, outgoing node)
    column_ok = positive.all(axis=(0, 1))
    band = tuple(int(k) for k in np.flatnonzero(column_ok))
    if band:
        witness = None
        msg = f"fission kernel strictly positive on incoming band {list(band)}"
    else:
        witness = tuple(int(i) for i in np.argwhere(~positive)[0])
        msg = f"no incoming node with strictly positive fission column; first zero at {witness}"

    two_sided = shell_chain = None
    if p.kind is Kind.TRANSPORT:
        row_ok = positive.all(axis=(0, 2))
        two_sided = bool(np.any(column_ok & row_ok))
        shells = p.grid.shells
        if shells is not None:
            n_shells = int(shells.max()) + 1
            block = np.zeros((n_shells, n_shells), dtype=bool)
            for a in range(n_shells):
                for b in range(n_shells):
                    block[a, b] = positive[:, shells == a][:, :, shells == b].all()
            # for every pair (a, b) some shell l with blocks (a, l) and (l, b) positive
            shell_chain = bool(np.all((block.astype(int) @ block.astype(int)) > 0))
    return IrreducibilityReport(bool(band), band, witness, two_sided, shell_chain, msg)


# ---------------------------------------------------------------------------
# kernel compression

@dataclass(frozen=True)
class DegenerateKernel:
    """Rank-``r`` factorisation ``kernel[i, j, k] ~ sum_r g[i, j, r] * theta[k, r]``."""

    g: np.ndarray
    theta: np.ndarray
    singular_values: np.ndarray
    error_estimate: float

    @property
    def rank(self) -> int:
        return self.theta.shape[1]

    def reconstruct(self) -> np.ndarray:
        return np.einsum("ijr,kr->ijk", self.g, self.theta)


def degenerate_approx(kernel: np.ndarray, rank: int) -> DegenerateKernel:
    """Best rank-``r`` approximation of a kernel flattened over ``((cell, node), node')``.

    The error estimate is the spectral-norm error of the flattened matrix,
    i.e. the ``(r+1)``-th singular value (zero at full rank).
    """
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 3 or kernel.shape[1] != kernel.shape[2]:
        raise ProblemError("kernel must have shape (cells, nodes, nodes)")
    nx, n, _ = kernel.shape
    full = min(nx * n, n)
    if int(rank) != rank or not (1 <= rank <= full):
        raise ProblemError(f"rank must be an integer in [1, {full}], got {rank!r}")
    u, s, vt = np.linalg.svd(kernel.reshape(nx * n, n), full_matrices=False)
    g = (u[:, :rank] * s[:rank]).reshape(nx, n, rank)
    err = float(s[rank]) if rank < s.size else 0.0
    return DegenerateKernel(g, vt[:rank].T.copy(), s, err)


def compress_problem(p: ProblemModel, rank: int) -> ProblemModel:
    """Replace both kernels by their rank-``r`` compressions.

    Truncation can leave small negative entries; they are clipped to zero,
    which moves each entry by at most the reported error estimate.
    """
    xs = p.cross_sections
    ks = np.maximum(degenerate_approx(xs.sigma_s, rank).reconstruct(), 0.0)
    kf = np.maximum(degenerate_approx(xs.sigma_f, rank).reconstruct(), 0.0)
    return p.with_kernels(ks, kf)
