"""WKV attention: oracle closed forms, scan/oracle equivalence, gradients."""

import numpy as np
import pytest

from lares.autodiff import Tensor
from lares.errors import ContractError, DimensionError
from lares.wkv import (
    ScanOrder,
    WkvParams,
    biwkv_2d,
    biwkv_oracle,
    biwkv_scan,
    cross_biwkv,
    flatten_scan,
    unflatten_scan,
)
from fd import assert_grads_close, max_rel_err


def random_params(rng, C, dtype=np.float64, grad=False):
    w = Tensor(rng.uniform(0.3, 1.3, C).astype(dtype), requires_grad=grad)
    u = Tensor(rng.uniform(-0.5, 0.5, C).astype(dtype), requires_grad=grad)
    return WkvParams(w, u)


def scan_np(k, v, params):
    return biwkv_scan(Tensor(k), Tensor(v), params).data


# ---------------------------------------------------------------------------
# oracle closed forms
# ---------------------------------------------------------------------------

class TestOracle:
    def test_single_position_returns_value(self, rng):
        k = rng.uniform(-3, 3, (1, 4))
        v = rng.uniform(-3, 3, (1, 4))
        out = biwkv_oracle(k, v, np.ones(4), rng.uniform(-1, 1, 4))
        assert np.allclose(out, v, rtol=1e-15, atol=0)

    def test_constant_values_are_fixed_point(self, rng):
        k = rng.uniform(-3, 3, (9, 2))
        v = np.full((9, 2), 1.75)
        out = biwkv_oracle(k, v, np.array([0.5, 1.0]), np.array([0.2, -0.2]))
        assert np.allclose(out, 1.75, rtol=1e-14)

    def test_two_position_closed_form(self):
        # adjacent distance has a zero decay exponent, so for k = 0 and
        # u = ln 2 each output is (other + 2 self) / 3: v=[1,4] -> [2, 3]
        k = np.zeros((2, 1))
        v = np.array([[1.0], [4.0]])
        for w in (0.0, 0.7, 5.0):
            out = biwkv_oracle(k, v, np.array([w]), np.array([np.log(2.0)]))
            assert np.allclose(out, [[2.0], [3.0]], rtol=1e-14)

    def test_non_finite_rejected(self):
        k = np.zeros((3, 1))
        k[1] = np.inf
        with pytest.raises(ContractError):
            biwkv_oracle(k, np.ones((3, 1)), np.ones(1), np.zeros(1))

    def test_chunked_evaluation_is_seamless(self, rng):
        # chunk size only changes BLAS summation order, not the math
        k = rng.uniform(-4, 4, (50, 3))
        v = rng.uniform(-4, 4, (50, 3))
        w = rng.uniform(0.3, 1.3, 3)
        u = rng.uniform(-0.5, 0.5, 3)
        assert max_rel_err(biwkv_oracle(k, v, w, u, chunk=7),
                           biwkv_oracle(k, v, w, u, chunk=256)) < 1e-13


# ---------------------------------------------------------------------------
# scan vs oracle
# ---------------------------------------------------------------------------

class TestScan:
    def test_matches_oracle_on_random_instances(self, rng):
        worst = 0.0
        for _ in range(60):
            T = int(rng.integers(1, 65))
            C = int(rng.integers(1, 9))
            k = rng.uniform(-5, 5, (T, C))
            v = rng.uniform(-5, 5, (T, C))
            p = random_params(rng, C)
            worst = max(worst, max_rel_err(
                scan_np(k, v, p), biwkv_oracle(k, v, p.w.data, p.u.data)))
        assert worst < 1e-10

    def test_uniform_weights_give_mean(self):
        # w = 0, u = 0, k = 0: every weight is 1, so each output is the mean
        p = WkvParams(Tensor(np.zeros(1, dtype=np.float64)),
                      Tensor(np.zeros(1, dtype=np.float64)))
        out = scan_np(np.zeros((3, 1)), np.array([[1.0], [2.0], [3.0]]), p)
        assert np.allclose(out, 2.0, rtol=1e-15)

    def test_extreme_k_stays_finite(self, rng):
        k = np.full((16, 2), -25.0)
        k[5, 0] = 25.0
        k[9, 1] = 30.0
        v = rng.uniform(-5, 5, (16, 2))
        out = scan_np(k, v, random_params(rng, 2))
        assert np.isfinite(out).all()

    def test_f32_matches_oracle(self, rng):
        k = rng.uniform(-5, 5, (48, 4)).astype(np.float32)
        v = rng.uniform(-5, 5, (48, 4)).astype(np.float32)
        p = random_params(rng, 4, dtype=np.float32)
        got = scan_np(k, v, p)
        want = biwkv_oracle(k, v, p.w.data, p.u.data)
        assert got.dtype == np.float32
        assert max_rel_err(got, want) < 1e-5

    def test_convexity_outputs_inside_value_range(self, rng):
        # weights are positive and normalized, so outputs are convex combos
        for _ in range(20):
            T = int(rng.integers(2, 40))
            C = int(rng.integers(1, 6))
            k = rng.uniform(-5, 5, (T, C))
            v = rng.uniform(-5, 5, (T, C))
            out = scan_np(k, v, random_params(rng, C))
            slack = 1e-10 * (v.max() - v.min() + 1)
            assert (out <= v.max(axis=0) + slack).all()
            assert (out >= v.min(axis=0) - slack).all()

    def test_batched_matches_per_sequence(self, rng):
        k = rng.uniform(-2, 2, (3, 10, 4))
        v = rng.uniform(-2, 2, (3, 10, 4))
        p = random_params(rng, 4)
        full = scan_np(k, v, p)
        for b in range(3):
            assert np.array_equal(full[b], scan_np(k[b], v[b], p))

    def test_shape_mismatch_rejected(self, rng):
        p = random_params(rng, 4)
        with pytest.raises(DimensionError):
            biwkv_scan(Tensor(np.zeros((5, 4))), Tensor(np.zeros((6, 4))), p)

    def test_non_finite_rejected(self, rng):
        p = random_params(rng, 2)
        k = np.zeros((4, 2))
        k[0, 0] = np.nan
        with pytest.raises(ContractError):
            biwkv_scan(Tensor(k), Tensor(np.zeros((4, 2))), p)

    def test_gradients_match_finite_differences(self, rng):
        k = Tensor(rng.uniform(-2, 2, (2, 9, 3)), requires_grad=True)
        v = Tensor(rng.uniform(-2, 2, (2, 9, 3)), requires_grad=True)
        p = random_params(rng, 3, grad=True)
        coeff = Tensor(rng.uniform(-1, 1, (2, 9, 3)))

        def loss():
            return (biwkv_scan(k, v, p) * coeff).sum()

        assert_grads_close(loss, [k, v, p.w, p.u], rel_tol=1e-4)


# ---------------------------------------------------------------------------
# scan orders
# ---------------------------------------------------------------------------

class TestScanOrders:
    def test_round_trip_bit_exact(self, rng):
        x = Tensor(rng.uniform(-1, 1, (2, 3, 5, 4)))
        for order in ScanOrder:
            y = unflatten_scan(flatten_scan(x, order), 3, 5, order)
            assert y.data.tobytes() == x.data.tobytes()

    def test_single_pixel_identity(self, rng):
        x = Tensor(rng.uniform(-1, 1, (1, 1, 3)))
        assert np.array_equal(flatten_scan(x, "horizontal").data, x.data.reshape(1, 3))

    def test_horizontal_is_row_major(self):
        x = Tensor(np.arange(6, dtype=np.float64).reshape(2, 3, 1))
        flat = flatten_scan(x, ScanOrder.HORIZONTAL).data[:, 0]
        assert np.array_equal(flat, [0, 1, 2, 3, 4, 5])

    def test_vertical_order_equals_transposed_horizontal(self, rng):
        x = rng.uniform(-1, 1, (2, 3, 4))
        xt = np.ascontiguousarray(x.transpose(1, 0, 2))
        a = flatten_scan(Tensor(x), ScanOrder.VERTICAL).data
        b = flatten_scan(Tensor(xt), ScanOrder.HORIZONTAL).data
        assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# cross-direction combination
# ---------------------------------------------------------------------------

class TestCrossBiwkv:
    def test_single_pixel_returns_value(self, rng):
        k = Tensor(rng.uniform(-2, 2, (1, 1, 3)))
        v = Tensor(rng.uniform(-2, 2, (1, 1, 3)))
        out = cross_biwkv(k, v, random_params(rng, 3), random_params(rng, 3))
        assert np.allclose(out.data, v.data, rtol=1e-14)

    def test_constant_values_preserved(self, rng):
        k = Tensor(rng.uniform(-2, 2, (4, 6, 2)))
        v = Tensor(np.full((4, 6, 2), -0.75))
        out = cross_biwkv(k, v, random_params(rng, 2), random_params(rng, 2))
        assert np.allclose(out.data, -0.75, rtol=1e-13)

    def test_swap_equivariance_under_transpose(self, rng):
        ph, pv = random_params(rng, 3), random_params(rng, 3)
        k = rng.uniform(-3, 3, (8, 8, 3))
        v = rng.uniform(-3, 3, (8, 8, 3))
        a = cross_biwkv(Tensor(k), Tensor(v), ph, pv).data
        kt = np.ascontiguousarray(k.transpose(1, 0, 2))
        vt = np.ascontiguousarray(v.transpose(1, 0, 2))
        b = cross_biwkv(Tensor(kt), Tensor(vt), pv, ph).data
        assert max_rel_err(b, a.transpose(1, 0, 2)) < 1e-10

    def test_single_direction_breaks_transpose_equivariance(self, rng):
        # the motivation for the two-direction combine: one scan order
        # treats rows and columns differently
        p = random_params(rng, 2)
        k = rng.uniform(-3, 3, (8, 8, 2))
        v = rng.uniform(-3, 3, (8, 8, 2))
        a = biwkv_2d(Tensor(k), Tensor(v), p, ScanOrder.HORIZONTAL).data
        kt = np.ascontiguousarray(k.transpose(1, 0, 2))
        vt = np.ascontiguousarray(v.transpose(1, 0, 2))
        b = biwkv_2d(Tensor(kt), Tensor(vt), p, ScanOrder.HORIZONTAL).data
        assert np.abs(b.transpose(1, 0, 2) - a).max() > 1e-3

    def test_sum_combine_is_twice_mean(self, rng):
        ph, pv = random_params(rng, 2), random_params(rng, 2)
        k = Tensor(rng.uniform(-1, 1, (3, 4, 2)))
        v = Tensor(rng.uniform(-1, 1, (3, 4, 2)))
        mean = cross_biwkv(k, v, ph, pv, combine="mean").data
        total = cross_biwkv(k, v, ph, pv, combine="sum").data
        assert np.allclose(total, 2 * mean, rtol=1e-14)

    def test_bad_combine_rejected(self, rng):
        p = random_params(rng, 2)
        x = Tensor(np.zeros((2, 2, 2)))
        with pytest.raises(ContractError):
            cross_biwkv(x, x, p, p, combine="max")

    def test_gradients_flow_through_both_directions(self, rng):
        k = Tensor(rng.uniform(-1, 1, (3, 4, 2)), requires_grad=True)
        v = Tensor(rng.uniform(-1, 1, (3, 4, 2)), requires_grad=True)
        ph = random_params(rng, 2, grad=True)
        pv = random_params(rng, 2, grad=True)

        def loss():
            return (cross_biwkv(k, v, ph, pv) ** 2).sum()

        assert_grads_close(loss, [k, v, ph.w, ph.u, pv.w, pv.u], rel_tol=1e-4)


def test_wkv_params_init_ranges():
    p = WkvParams.init(8, dtype=np.float64)
    assert p.w.data[0] == pytest.approx(0.3)
    assert p.w.data[-1] == pytest.approx(1.3)
    assert np.all(np.diff(p.w.data) > 0)
    assert np.isfinite(p.u.data).all()
