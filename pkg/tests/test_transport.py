import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slabkeff.operators import operator_for
from slabkeff.problem import build_problem, transport_problem
from slabkeff.transport import TransportOperator, stay_time


def heterogeneous(seed=0, nx=12, nodes=3):
    rng = np.random.default_rng(seed)
    n = 2 * nodes
    return build_problem({
        "kind": "transport", "geometry": {"width": 1.7, "cells": nx},
        "velocity": {"v_min": 0.4, "v_max": 2.5, "nodes_per_sign": nodes},
        "sigma": rng.uniform(0.5, 2.0, (nx, n)).tolist(),
        "sigma_s": rng.uniform(0, 0.3, (nx, n, n)).tolist(),
        "sigma_f": rng.uniform(0.1, 0.5, (nx, n, n)).tolist(),
    })


@pytest.fixture(scope="module")
def op():
    return TransportOperator(heterogeneous())


class TestStayTime:
    def test_formula(self):
        assert stay_time(1.0, 2.0, 2.0) == 0.5
        assert stay_time(1.0, -1.0, 2.0) == 1.0
        assert stay_time(0.5, 0.25, 2.0) == 2.0

    def test_translation_identity(self):
        for t in np.linspace(0, 1, 11):
            assert abs(stay_time(0.5 + 0.25 * t, 0.25, 2.0) - (2.0 + t)) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 1.99), st.floats(0.1, 5.0), st.sampled_from([-1, 1]), st.floats(0, 0.99))
    def test_translation_property(self, x, speed, sign, frac):
        v = sign * speed
        # stay inside the slab after moving
        room = (2.0 - x) if v > 0 else x
        t = frac * room / speed
        assert abs(stay_time(x + t * v, v, 2.0) - (stay_time(x, v, 2.0) + t)) <= 1e-12

    def test_zero_velocity(self):
        with pytest.raises(ValueError):
            stay_time(1.0, 0.0, 2.0)

    def test_discrete_stay_time(self, op):
        p = op.problem
        # upwind derivative of the discrete stay time is exactly one, zero inflow
        np.testing.assert_allclose(op.apply_A(op.stay_times) - p.cross_sections.sigma * op.stay_times,
                                   1.0, rtol=0, atol=1e-12)
        assert np.all(op.stay_times <= p.geometry.width / p.grid.v_min * (1 + 1e-15))
        # at cell faces it equals the continuous stay time
        x_face = (np.arange(p.geometry.cells) + 1) * p.geometry.dx
        v = p.grid.nodes
        j = int(np.argmax(v))
        np.testing.assert_allclose(op.stay_times[:, j], stay_time(x_face, v[j], p.geometry.width))


class TestStreaming:
    def test_constant_field(self):
        p = transport_problem(2.0, 5, 1.0, 0.0, 0.0, v_min=0.5, v_max=2.0, nodes_per_sign=2)
        op = operator_for(p)
        t = op.apply_streaming(np.ones(p.shape))
        dx, v = p.geometry.dx, p.grid.nodes
        for j in range(p.shape[1]):
            first = 0 if v[j] > 0 else p.shape[0] - 1
            expect = np.full(p.shape[0], -1.0)
            expect[first] -= abs(v[j]) / dx
            np.testing.assert_allclose(t[:, j], expect, rtol=1e-14)

    def test_zero(self, op):
        assert np.all(op.apply_streaming(np.zeros(op.shape)) == 0)

    def test_shape_mismatch(self, op):
        with pytest.raises(ValueError, match="shape mismatch"):
            op.apply_T(np.ones((3, 3)))
        with pytest.raises(ValueError, match="shape mismatch"):
            op.resolvent(np.ones((3, 3)))

    def test_m_matrix_diagonal(self, op):
        p = op.problem
        assert np.all(op._diag >= p.cross_sections.sigma_lower)


class TestResolvent:
    def test_round_trip(self, op, rng):
        for _ in range(100):
            phi = rng.normal(size=op.shape)
            back = op.resolvent_apply(-op.apply_streaming(phi))
            assert np.max(np.abs(back - phi)) <= 1e-12 * np.max(np.abs(phi))

    def test_ones(self, op):
        np.testing.assert_allclose(op.resolvent(op.apply_A(np.ones(op.shape))), 1.0, rtol=1e-12)

    def test_zero(self, op):
        assert np.all(op.resolvent(np.zeros(op.shape)) == 0)

    def test_positivity(self, op, rng):
        for _ in range(1000):
            q = rng.uniform(0, 1, size=op.shape) * (rng.uniform(size=op.shape) < 0.3)
            assert op.resolvent(q).min() >= -1e-14 * max(q.max(), 1e-300)

    def test_monotone(self, op, rng):
        for _ in range(100):
            q1 = rng.uniform(0, 1, size=op.shape)
            q2 = q1 + rng.uniform(0, 1, size=op.shape)
            assert np.all(op.resolvent(q1) <= op.resolvent(q2) + 1e-14)

    def test_impulse_against_characteristic_integral(self):
        width, nx, sigma = 2.0, 800, 1.0
        p = transport_problem(width, nx, sigma, 0.0, 0.0, v_min=0.5, v_max=2.0, nodes_per_sign=1)
        op = operator_for(p)
        dx = p.geometry.dx
        j = int(np.argmax(p.grid.nodes))
        v = p.grid.nodes[j]
        m = 100
        q = np.zeros(p.shape)
        q[m, j] = 1.0
        phi = op.resolvent(q)
        assert np.all(phi[:m, j] == 0)
        assert np.all(phi[m:, j] > 0)
        # exact solution with q = 1 on the impulse cell
        x = p.geometry.centers
        lo = np.clip(x - (x[m] + dx / 2), 0, None)
        hi = np.clip(x - (x[m] - dx / 2), 0, None)
        exact = (np.exp(-sigma * lo / v) - np.exp(-sigma * hi / v)) / sigma
        down = slice(m + 1, nx)
        rel = np.abs(phi[down, j] - exact[down]) / exact[down]
        h = sigma * dx / v
        # first-order scheme: error grows like h per unit optical depth
        depth = sigma * (x[down] - x[m]) / v
        assert np.all(rel <= h * (1 + depth))


class TestKernels:
    def test_constant_kernel(self):
        p = transport_problem(1.0, 3, 1.0, 0.0, 1.4, v_min=0.5, v_max=2.0, nodes_per_sign=2)
        op = operator_for(p)
        np.testing.assert_allclose(op.apply_Kf(np.ones(p.shape)), 1.4 * p.weights.sum(), rtol=1e-14)

    def test_zero(self, op):
        assert np.all(op.apply_Ks(np.zeros(op.shape)) == 0)
        assert np.all(op.apply_Kf(np.zeros(op.shape)) == 0)

    def test_rank_one_kernel(self, rng):
        p0 = heterogeneous(3)
        nx, n = p0.shape
        beta, theta = rng.uniform(0.1, 1, n), rng.uniform(0.1, 1, n)
        p = p0.with_kernels(sigma_f=np.broadcast_to(np.outer(beta, theta), (nx, n, n)))
        phi = rng.uniform(0.1, 1, p.shape)
        ref = beta[None, :] * (phi * theta * p.weights).sum(axis=1, keepdims=True)
        assert np.max(np.abs(operator_for(p).apply_Kf(phi) - ref)) <= 1e-14 * ref.max()

    def test_fission_positivity_improving(self, op, rng):
        phi = np.zeros(op.shape)
        phi[4, 2] = 1.0
        out = op.apply_Kf(phi)
        assert np.all(out[4] > 0)
        assert np.all(np.delete(out, 4, axis=0) == 0)

    def test_positive_decomposition(self, op):
        p = op.problem
        phi = np.ones(op.shape)
        np.testing.assert_allclose(op.apply_K(phi, 2.0), op.apply_Ks(phi) + op.apply_Kf(phi) / 2.0)


def test_operator_type_guard():
    from slabkeff.problem import diffusion_problem
    with pytest.raises(ValueError):
        TransportOperator(diffusion_problem(1.0, 4, 1.0, 0.1, 0.1))


def test_norm_is_weighted(op):
    phi = np.ones(op.shape)
    p = op.problem
    assert math.isclose(op.norm(phi), math.sqrt(p.geometry.width * p.weights.sum()), rel_tol=1e-14)
