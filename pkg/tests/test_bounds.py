import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slabkeff.bounds import (
    BoundsError, bounds_report, beta_f_lower, diffusion_beta0, diffusion_theta, k_tau_apply,
    lambda_f_bound, optimize_psi, pao_criterion, perron_vector, stay_times, theta_lower,
    theta_upper, _matrices,
)
from slabkeff.corpus import random_diffusion, random_transport
from slabkeff.diffusion import DiffusionError
from slabkeff.problem import build_problem, diffusion_problem, transport_problem
from slabkeff.solver import solve_keff_rootfind

from conftest import closed_form, discrete_lambda0


def const_transport(sigma=1.0, ks=0.2, kf=0.5, width=2.0, nx=8):
    return transport_problem(width, nx, sigma, ks, kf, v_min=0.5, v_max=2.0, nodes_per_sign=2)


def k_of(p):
    return solve_keff_rootfind(p).k_eff


class TestKTau:
    def test_constant_closed_sum(self):
        p = const_transport()
        tau = stay_times(p)
        w = p.weights
        for i in (0, 3, 7):
            out = k_tau_apply(p, i, np.ones(4))
            expect = 0.7 * np.sum(w * tau[i]) / (1 + 1.0 * tau[i])
            np.testing.assert_allclose(out, expect, rtol=1e-14)

    def test_linearity(self, rng):
        p = random_transport(2)
        psi = rng.uniform(0.1, 1, p.shape[1])
        np.testing.assert_allclose(k_tau_apply(p, 4, 3.5 * psi), 3.5 * k_tau_apply(p, 4, psi),
                                   rtol=1e-14)

    def test_direct_loop(self, rng):
        p = random_transport(4, nodes_per_sign=2)
        psi = rng.uniform(0.1, 1, 4)
        tau = stay_times(p)
        sig, kern, w = p.cross_sections.sigma, p.cross_sections.total, p.weights
        i = 5
        loop = np.zeros(4)
        for j in range(4):
            acc = 0.0
            for k in reversed(range(4)):
                acc += w[k] * kern[i, j, k] * tau[i, k] * psi[k]
            loop[j] = acc / (1 + sig[i, j] * tau[i, j])
        assert np.max(np.abs(k_tau_apply(p, i, psi) - loop)) <= 1e-14 * loop.max()

    def test_index_range(self):
        with pytest.raises(IndexError):
            k_tau_apply(const_transport(), 8, np.ones(4))

    def test_psi_must_be_positive(self):
        with pytest.raises(BoundsError):
            theta_upper(const_transport(), np.array([1.0, 0.0, 1.0, 1.0]))

    def test_stay_time_bound(self):
        p = random_transport(3)
        assert stay_times(p).max() <= p.geometry.width / p.grid.v_min * (1 + 1e-14)


class TestTheta:
    def test_absorbing_upper(self):
        p = const_transport(sigma=5.0, ks=0.1, kf=0.2, width=0.5)
        b = theta_upper(p)
        assert b.value < 1 and b.applicable
        assert k_of(p) <= b.certificate

    def test_kernel_linearity(self):
        p = const_transport(sigma=5.0, ks=0.1, kf=0.2, width=0.5)
        q = p.scaled(10.0, 10.0)
        assert math.isclose(theta_upper(q).value, 10 * theta_upper(p).value, rel_tol=1e-13)

    def test_upper_inapplicable(self):
        b = theta_upper(const_transport(kf=3.0))
        assert b.value >= 1 and b.certificate is None and not b.applicable

    def test_fission_rich_lower(self):
        p = const_transport(kf=4.0, width=4.0)
        b = theta_lower(p)
        assert b.value > 1 and b.applicable
        assert k_of(p) >= b.certificate

    def test_min_perron_lower(self):
        p = random_transport(7, width=3.0, fission=6.0)
        psi = optimize_psi(p, "theta_lower", "min-perron")
        r = perron_vector(_matrices(p, "full").min(axis=0))[0]
        assert theta_lower(p, psi).value >= r - 1e-12

    def test_zero_kernels(self):
        p = const_transport(ks=0.0, kf=0.0)
        b = theta_lower(p)
        assert b.value == 0 and not b.applicable


class TestBetaF:
    def test_zero_fission(self):
        assert beta_f_lower(const_transport(kf=0.0)).value == 0.0

    def test_constant_data(self):
        p = const_transport()
        tau = stay_times(p)
        closed = 0.5 * (tau * p.weights).sum(axis=1, keepdims=True) / (1 + tau)
        assert math.isclose(beta_f_lower(p).value, closed.min(), rel_tol=1e-14)

    def test_min_perron(self):
        p = random_transport(5)
        psi = optimize_psi(p, "beta_f", "min-matrix-perron")
        r = perron_vector(_matrices(p, "fission").min(axis=0))[0]
        b = beta_f_lower(p, psi)
        assert b.value >= r - 1e-12
        assert k_of(p) >= b.certificate

    def test_transport_only(self, subcritical):
        with pytest.raises(BoundsError):
            beta_f_lower(subcritical)


class TestLambdaF:
    def test_zero_fission(self):
        assert lambda_f_bound(const_transport(kf=0.0)).value == 0.0

    def test_sigma_monotone(self):
        vals = [lambda_f_bound(const_transport(sigma=s)).value for s in (0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_hand_quadrature(self):
        p = const_transport(nx=4)
        dx, v, w = p.geometry.dx, p.grid.nodes, p.weights
        # discrete stay time of cell i along v: upwind cell count times dx / |v|
        lam = math.inf
        for i in range(4):
            s = sum(w[k] * 0.5 * ((i + 1) if v[k] > 0 else (4 - i)) * dx / abs(v[k]) for k in range(4))
            lam = min(lam, s)
        # v0 is the smallest node speed, which is what bounds the discrete stay time
        expect = lam / (1 + 1.0 * 2.0 / p.grid.v_min)
        b = lambda_f_bound(p)
        assert b.name == "vborne"
        assert math.isclose(b.value, expect, rel_tol=1e-14)
        assert b.value <= k_of(p) + 1e-10


class TestDiffusion:
    def test_beta0_closed_form(self, supercritical):
        b = diffusion_beta0(supercritical)
        lam = discrete_lambda0(400)
        assert math.isclose(b.value, 2.5 / (lam + 1.0), rel_tol=1e-12)
        assert abs(b.value - 1.25) <= 1e-3
        assert b.value <= k_of(supercritical)

    def test_beta0_zero_fission(self):
        assert diffusion_beta0(closed_form(50, 0.0)).value == 0.0

    def test_beta0_two_group_perron(self):
        p = random_diffusion(1, groups=2)
        psi = optimize_psi(p, "beta0", "min-perron")
        assert diffusion_beta0(p, psi).value <= k_of(p) + 1e-10

    def test_theta_lower_super(self, supercritical):
        lo, hi = diffusion_theta(supercritical)
        assert abs(lo.value - 1.4) <= 1e-3 and lo.certificate is not None
        assert k_of(supercritical) >= lo.certificate

    def test_theta_upper_sub(self):
        p = closed_form(400, 1.4)
        lo, hi = diffusion_theta(p)
        assert abs(hi.value - 0.85) <= 1e-3 and hi.certificate is not None
        assert k_of(p) <= hi.certificate
        assert "< 1" in hi.note

    def test_theta_homogeneous(self):
        p = random_diffusion(2, groups=3)
        psi = np.array([0.3, 1.0, 2.0])
        for fn in (theta_lower, theta_upper, diffusion_beta0):
            assert math.isclose(fn(p, psi).value, fn(p, 5 * psi).value, rel_tol=1e-12)

    def test_non_degenerate_rejected(self):
        p = build_problem({
            "kind": "diffusion", "geometry": {"width": 1.0, "cells": 2},
            "energy": {"xi_min": 1.0, "xi_max": 2.0, "groups": 2},
            "diffusion": {"table": [[1.0, 2.0], [3.0, 1.0]]},
            "sigma": 1.0, "sigma_s": 0.1, "sigma_f": 0.1})
        for fn in (diffusion_beta0, pao_criterion):
            with pytest.raises(DiffusionError):
                fn(p)


class TestPao:
    def test_holds(self, supercritical):
        res = pao_criterion(supercritical)
        assert res.holds and abs(res.bound - 1.4) <= 1e-3
        b = res.as_bound()
        assert b.certificate >= 1.0
        assert k_of(supercritical) >= b.certificate

    def test_fails(self, subcritical):
        res = pao_criterion(subcritical)
        assert not res.holds and res.bound is None
        assert res.as_bound().certificate is None

    def test_strict_everywhere(self):
        nx = 40
        kf = np.full(nx, 2.5)
        kf[:5] = 1.0
        p = diffusion_problem(math.pi, nx, 1.0, 0.3, kf.tolist())
        res = pao_criterion(p)
        assert not res.holds and res.failing_points == 5


class TestPsiStrategies:
    def test_x_independent_kernels_agree(self):
        p = diffusion_problem(2.0, 10, 1.0, {"per_node": [[0.1, 0.2], [0.3, 0.1]]},
                              {"per_node": [[0.5, 0.7], [0.2, 0.4]]}, groups=2)
        vecs = [optimize_psi(p, "beta0", s) for s in ("min-perron", "max-perron", "mean-perron")]
        for v in vecs[1:]:
            np.testing.assert_allclose(v, vecs[0], rtol=1e-12)

    def test_unknown(self):
        with pytest.raises(BoundsError, match="unknown psi strategy"):
            optimize_psi(const_transport(), "beta_f", "best")
        with pytest.raises(BoundsError, match="unknown bound"):
            optimize_psi(const_transport(), "nothing", "ones")

    def test_tournament(self):
        p = random_transport(6)
        rep = bounds_report(p, ["all"])
        table = rep.table()
        assert set(table["beta_f"]) == {"ones", "min-perron", "max-perron", "mean-perron"}
        assert not rep.contradictions(k_of(p))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.floats(1.0, 20.0))
def test_fission_scaling_monotone(seed, s):
    p = random_transport(seed, cells=6, nodes_per_sign=2)
    q = p.scaled(fission=s)
    psi = np.random.default_rng(seed).uniform(0.2, 1, 4)
    assert beta_f_lower(q, psi).value >= beta_f_lower(p, psi).value
    assert lambda_f_bound(q, psi).value >= lambda_f_bound(p, psi).value
    d = random_diffusion(seed % 50, cells=16, groups=2)
    psi2 = psi[:2]
    assert diffusion_beta0(d.scaled(fission=s), psi2).value >= diffusion_beta0(d, psi2).value


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.floats(0.01, 100.0))
def test_zero_homogeneous(seed, scale):
    p = random_transport(seed, cells=6, nodes_per_sign=2)
    psi = np.random.default_rng(seed).uniform(0.2, 1, 4)
    for fn in (theta_upper, theta_lower, beta_f_lower, lambda_f_bound):
        a, b = fn(p, psi).value, fn(p, scale * psi).value
        assert abs(a - b) <= 1e-12 * abs(a)
