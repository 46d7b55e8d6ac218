"""Seeded random problems for property tests and the acceptance suite.

Scattering rows are scaled so that ``sum_k w_k Sigma_s(x, v, v_k) <= c sigma(x, v)``
with ``c < 1``, which keeps the scattering radius below one.  Fission is
strictly positive, so the eigenfunction is strictly positive.
"""
from __future__ import annotations

import numpy as np

from .problem import EnergyGrid, ProblemModel, VelocityGrid, build_problem
from .solver import solve_keff_rootfind


def _kernels(rng, nx: int, w: np.ndarray, sigma: np.ndarray, scatter: float, fission: float):
    n = w.size
    ks = rng.uniform(0.2, 1.0, size=(nx, n, n))
    ks *= (rng.uniform(0.3, scatter) * sigma / (ks @ w))[:, :, None]
    kf = rng.uniform(0.2, 1.0, size=(nx, n, n))
    kf *= (fission * sigma / (kf @ w))[:, :, None]
    return ks, kf


def random_transport_config(seed: int, cells: int = 16, nodes_per_sign: int = 4,
                            width: float | None = None, fission: float | None = None,
                            scatter: float = 0.7, speeds=None) -> dict:
    rng = np.random.default_rng([1, seed])
    width = float(rng.uniform(1.0, 4.0)) if width is None else width
    if speeds is not None:
        velocity = {"speeds": list(speeds)}
        n = 2 * len(speeds)
        w = np.ones(n)
    else:
        v_min = float(rng.uniform(0.3, 1.0))
        velocity = {"v_min": v_min, "v_max": v_min + float(rng.uniform(0.5, 2.0)),
                    "nodes_per_sign": nodes_per_sign}
        n = 2 * nodes_per_sign
        w = VelocityGrid.gauss_legendre(velocity["v_min"], velocity["v_max"], nodes_per_sign).weights
    sigma = rng.uniform(0.8, 1.6, size=(cells, n))
    fission = float(rng.uniform(0.3, 1.2)) if fission is None else fission
    ks, kf = _kernels(rng, cells, w, sigma, scatter, fission)
    return {"kind": "transport", "geometry": {"width": width, "cells": cells},
            "velocity": velocity, "sigma": sigma.tolist(), "sigma_s": ks.tolist(),
            "sigma_f": kf.tolist()}


def random_diffusion_config(seed: int, cells: int = 64, groups: int = 2,
                            fission: float | None = None) -> dict:
    rng = np.random.default_rng([2, seed])
    width = float(rng.uniform(2.0, 6.0))
    x = (np.arange(cells) + 0.5) / cells
    d0 = 1.0 + 0.5 * rng.uniform(-1, 1) * np.sin(2 * np.pi * x + rng.uniform(0, np.pi))
    d1 = rng.uniform(0.5, 1.5, size=groups)
    u = EnergyGrid.gauss_legendre(1.0, 2.0, groups).weights
    sigma = rng.uniform(0.5, 1.5, size=(cells, groups))
    fission = float(rng.uniform(0.5, 2.0)) if fission is None else fission
    ks, kf = _kernels(rng, cells, u, sigma, 0.7, fission)
    return {"kind": "diffusion", "geometry": {"width": width, "cells": cells},
            "energy": {"xi_min": 1.0, "xi_max": 2.0, "groups": groups},
            "diffusion": {"d0": d0.tolist(), "d1": d1.tolist()},
            "sigma": sigma.tolist(), "sigma_s": ks.tolist(), "sigma_f": kf.tolist()}


def random_transport(seed: int, **kw) -> ProblemModel:
    return build_problem(random_transport_config(seed, **kw))


def random_diffusion(seed: int, **kw) -> ProblemModel:
    return build_problem(random_diffusion_config(seed, **kw))


def near_critical(p: ProblemModel, seed: int, spread: float = 0.04) -> ProblemModel:
    """Rescale fission so that ``k_eff`` lands within ``spread`` of one."""
    k = solve_keff_rootfind(p).k_eff
    target = 1.0 + np.random.default_rng([3, seed]).uniform(-spread, spread)
    return p.scaled(fission=target / k)


def seeded_corpus(n_transport: int = 10, n_diffusion: int = 10,
                  near_critical_every: int = 3) -> list[tuple[str, ProblemModel]]:
    """Named problems; every ``near_critical_every``-th one is rescaled near ``k = 1``.

    A couple of transport members use speed shells instead of Gauss nodes;
    one is a thin absorbing slab and one is fission-rich, so that both
    full-kernel ratio bounds get exercised.
    """
    out = []
    for s in range(n_transport):
        if s == 7:
            p = random_transport(s, width=3.0, fission=6.0)
        elif s == 8:
            p = random_transport(s, width=0.5, fission=0.1, scatter=0.4)
        elif s % 4 == 3:
            p = random_transport(s, cells=12, speeds=[0.5, 1.0, 2.0])
        else:
            p = random_transport(s)
        out.append((f"transport-{s}", p))
    for s in range(n_diffusion):
        out.append((f"diffusion-{s}", random_diffusion(s, groups=1 + s % 3)))
    for i in range(0, len(out), near_critical_every):
        name, p = out[i]
        out[i] = (name + "-near-critical", near_critical(p, i))
    return out
