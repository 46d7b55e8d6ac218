import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slabkeff.corpus import random_diffusion, random_transport
from slabkeff.operators import operator_for
from slabkeff.solver import solve_keff_rootfind
from slabkeff.variational import (
    SandwichViolation, VariationalError, evaluate, random_test_function, ratio_field,
    sandwich_verify, tau_minus, tau_plus,
)

from conftest import closed_form, discrete_lambda0


@pytest.fixture(scope="module")
def solved():
    p = closed_form(400, 1.4)
    return p, solve_keff_rootfind(p)


@pytest.fixture(scope="module")
def solved_transport():
    p = random_transport(1)
    return p, solve_keff_rootfind(p)


def angle(a, b):
    a, b = a.ravel() / np.linalg.norm(a), b.ravel() / np.linalg.norm(b)
    return float(2 * np.arcsin(min(1.0, np.linalg.norm(a - b) / 2)))


class TestRatioField:
    def test_eigenfunction_gives_constant(self, solved):
        p, sol = solved
        rho = ratio_field(p, sol.phi)
        assert rho.max() - rho.min() <= 1e-8
        assert abs(rho.mean() - 1 / sol.k_eff) <= 1e-8

    def test_sine_mode(self):
        nx = 400
        p = closed_form(nx)
        phi = np.sin(p.geometry.centers)[:, None]
        rho = ratio_field(p, phi)
        expect = (discrete_lambda0(nx) + 1 - 0.3) / 1.4
        np.testing.assert_allclose(rho[1:-1], expect, rtol=1e-9)
        assert abs(expect - 1.7 / 1.4) <= 1e-4

    def test_resolvent_of_ones_is_finite(self, solved_transport):
        p, _ = solved_transport
        phi = operator_for(p).resolvent(np.ones(p.shape))
        assert np.all(np.isfinite(ratio_field(p, phi)))

    def test_zero_denominator_names_point(self, solved_transport):
        p, _ = solved_transport
        kf = np.array(p.cross_sections.sigma_f)
        kf[3, 2, :] = 0.0
        q = p.with_kernels(sigma_f=kf)
        with pytest.raises(VariationalError, match="cell 3, node 2"):
            ratio_field(q, np.ones(q.shape))

    def test_nonpositive_test_function(self, solved_transport):
        p, _ = solved_transport
        phi = np.ones(p.shape)
        phi[0, 0] = 0.0
        with pytest.raises(VariationalError, match="strictly positive"):
            ratio_field(p, phi)


class TestTau:
    def test_fixed_point(self, solved):
        p, sol = solved
        assert abs(tau_plus(p, sol.phi) - sol.k_eff) <= 1e-8 * sol.k_eff
        assert abs(tau_minus(p, sol.phi) - sol.k_eff) <= 1e-8 * sol.k_eff

    @pytest.mark.parametrize("fixture", ["solved", "solved_transport"])
    def test_bounds_for_random_functions(self, fixture, request):
        p, sol = request.getfixturevalue(fixture)
        for i in range(30):
            phi = random_test_function(p, 7, i)
            assert tau_plus(p, phi) <= sol.k_eff + 1e-10
            assert tau_minus(p, phi) >= sol.k_eff - 1e-10

    def test_scale_invariance(self, solved_transport):
        p, _ = solved_transport
        phi = random_test_function(p, 3, 0)
        for tau in (tau_plus, tau_minus):
            a, b = tau(p, 7 * phi), tau(p, phi)
            assert a == b or abs(a - b) <= 1e-12 * b

    def test_sign_change_gives_infinite_tau_minus(self):
        p = closed_form(50)
        # a ramp that ends very low makes -(T + Ks) phi negative at the right end
        phi = np.ones(p.shape)
        phi[-1] = 1e-6
        rep = evaluate(p, phi)
        assert rep.ess_inf < 0
        assert math.isinf(rep.tau_minus) and "nonpositive-inf" in rep.flags

    def test_nonpositive_sup_gives_infinite_tau_plus(self):
        p = closed_form(50)
        phi = np.ones(p.shape)
        phi[1:-1] = 1e-3
        phi[0] = phi[-1] = 1e-3
        phi[25] = 1.0
        rep = evaluate(p, phi)
        assert rep.tau_plus == 1 / rep.ess_sup or math.isinf(rep.tau_plus)

    def test_tau_ordering(self, solved_transport):
        p, _ = solved_transport
        for i in range(10):
            rep = evaluate(p, random_test_function(p, 1, i))
            assert rep.tau_plus <= rep.tau_minus


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_collatz_wielandt_sandwich(seed):
    p = random_diffusion(seed % 7, cells=24)
    k = solve_keff_rootfind(p).k_eff
    phi = random_test_function(p, seed, 0)
    rho = ratio_field(p, phi)
    assert rho.min() <= (1 / k) * (1 + 1e-10)
    assert (1 / k) <= rho.max() * (1 + 1e-10)


def test_tau_plus_equality_means_proportional(solved_transport):
    p, sol = solved_transport
    for phi in (sol.phi, 3.0 * sol.phi):
        if abs(tau_plus(p, phi) - sol.k_eff) <= 1e-10:
            assert angle(phi, sol.phi) <= 1e-4
    # a perturbed function falls strictly below
    phi = sol.phi * (1 + 0.01 * np.random.default_rng(0).uniform(size=sol.phi.shape))
    assert tau_plus(p, phi) < sol.k_eff - 1e-10
    assert angle(phi, sol.phi) > 1e-4


class TestSandwich:
    def test_hundred_samples(self, solved):
        p, sol = solved
        res = sandwich_verify(p, sol.k_eff, 100, 42)
        assert not res.violations and len(res.reports) == 100
        assert res.best_lower <= sol.k_eff <= res.best_upper

    def test_phi_eff_collapse(self, solved):
        p, sol = solved
        res = sandwich_verify(p, sol.k_eff, 0, 0, phi_eff=sol.phi)
        assert len(res.reports) == 1
        assert abs(res.best_lower - sol.k_eff) <= 1e-8
        assert abs(res.best_upper - sol.k_eff) <= 1e-8
        assert res.collapse_spread <= 1e-6

    def test_empty(self, solved):
        p, sol = solved
        res = sandwich_verify(p, sol.k_eff, 0, 0)
        assert res.reports == [] and res.violations == []

    def test_violation_names_sample(self, solved):
        p, sol = solved
        with pytest.raises(SandwichViolation) as info:
            sandwich_verify(p, sol.k_eff * 1e-4, 3, 11)
        assert info.value.sample == "seed=11,index=0"
        res = sandwich_verify(p, sol.k_eff * 1e-4, 3, 11, strict=False)
        assert len(res.violations) == 3

    def test_explicit_functions(self, solved):
        p, sol = solved
        res = sandwich_verify(p, sol.k_eff, 0, 0, test_functions=[np.ones(p.shape)])
        assert res.reports[0].test_function == "explicit[0]"

    def test_deterministic(self, solved):
        p, sol = solved
        a = random_test_function(p, 42, 5)
        b = random_test_function(p, 42, 5)
        assert np.array_equal(a, b)
