"""Transforms: forward curve, characteristic functions, pricing, implied vol."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinevol.errors import ArgumentError, DomainError, ValidationError
from affinevol.kernels import (
    AtomicMeasure, ConstantKernel, PowerLawKernel, RoughDensity, discretize_measure,
)
from affinevol.riccati import ExponentTriple, ModelParams
from affinevol.transforms import (
    LIFT_ATOMS_SPAN, LIFT_ATOMS_X_MAX, bs_call_price, cf_contour_batch,
    cf_general, cf_lift, cf_rough_heston, contour_values_to_price,
    forward_curve, implied_vol, price_european,
)

from oracles import bs_call, heston_cf

DESK = ModelParams.volterra_heston(lam=2.0, theta=0.04, sigma=0.3, rho=-0.7, v0=0.04, s0=1.0)
CONST = ConstantKernel(1.0)
ROUGH = PowerLawKernel(alpha=0.6)


class TestForwardCurve:
    def test_lambda_zero_is_flat(self):
        m = ModelParams(a=0.09, v0=0.04)
        fc = forward_curve(ROUGH, m, 1.0, 100)
        assert np.all(fc.xi0 == 0.04)

    def test_constant_kernel_closed_form(self):
        # xi0(1) = V0 + (theta - V0)(1 - e^{-lam}) for K = 1
        m = ModelParams.volterra_heston(lam=2.0, theta=0.06, sigma=0.3, rho=0.0, v0=0.02)
        fc = forward_curve(CONST, m, 1.0, 2000)
        want = 0.02 + 0.04 * (1.0 - math.exp(-2.0))
        assert fc.xi0[-1] == pytest.approx(want, abs=1e-12)

    def test_theta_equal_v0_is_flat(self):
        fc = forward_curve(ROUGH, DESK, 1.0, 500)
        assert np.max(np.abs(fc.xi0 - 0.04)) < 1e-14

    def test_bounded_between_v0_and_theta(self):
        m = ModelParams.volterra_heston(lam=1.5, theta=0.09, sigma=0.2, rho=0.0, v0=0.03)
        fc = forward_curve(ROUGH, m, 2.0, 800)
        assert np.all(fc.xi0 >= 0.03 - 1e-12)
        assert np.all(fc.xi0 <= 0.09 + 1e-12)
        assert np.all(np.diff(fc.xi0) >= -1e-12)


class TestCfGeneral:
    def test_unit_at_zero_exponent(self):
        tv = cf_general(CONST, DESK, ExponentTriple(), 1.0, 500)
        assert tv.value == 1.0 + 0.0j

    def test_martingale_identity(self):
        m = ModelParams.volterra_heston(lam=2.0, theta=0.04, sigma=0.3, rho=-0.7,
                                        v0=0.04, s0=1.25)
        tv = cf_general(ROUGH, m, ExponentTriple(u=1.0), 1.0, 500)
        assert abs(tv.value - math.exp(m.l0)) < 1e-12

    @pytest.mark.parametrize("u", [0.5 + 3j, 0.5 - 3j, 0.5 + 10j, 0.5 - 10j])
    def test_classical_limit_vs_heston_oracle(self, u):
        tv = cf_general(CONST, DESK, ExponentTriple(u=u), 1.0, 2000)
        want = heston_cf(u, 1.0, 2.0, 0.04, 0.3, -0.7, 0.04, 0.0)
        assert abs(tv.value - want) / abs(want) < 1e-6

    def test_characteristic_bound(self):
        for y in [1.0, 2.0, 5.0, 10.0]:
            tv = cf_general(ROUGH, DESK, ExponentTriple(u=1j * y), 1.0, 500)
            assert abs(tv.value) <= 1.0

    def test_ou_class_rejected(self):
        m = ModelParams(alpha0=0.1, lam=1.0, beta=0.05, v0=0.02)
        with pytest.raises(ValidationError):
            cf_general(CONST, m, ExponentTriple(u=1j), 1.0, 100)

    def test_out_of_domain_warns(self):
        tv = cf_general(CONST, DESK, ExponentTriple(u=1.5), 0.5, 200)
        assert tv.warnings

    def test_batch_matches_scalar(self):
        u = np.array([0.5 + 1j, 0.5 + 4j, 1j])
        batch = cf_contour_batch(ROUGH, DESK, u, 1.0, 400)
        for ui, vi in zip(u, batch):
            sv = cf_general(ROUGH, DESK, ExponentTriple(u=ui), 1.0, 400)
            assert abs(vi - sv.value) < 1e-13


class TestCfRoughHeston:
    def test_unit_at_zero(self):
        tv = cf_rough_heston(0.6, DESK, 0.0, 1.0, 500)
        assert tv.value == 1.0 + 0.0j

    def test_alpha_one_is_classical(self):
        tv = cf_rough_heston(1.0, DESK, 0.5 + 3j, 1.0, 2000)
        want = heston_cf(0.5 + 3j, 1.0, 2.0, 0.04, 0.3, -0.7, 0.04, 0.0)
        assert abs(tv.value - want) / abs(want) < 1e-6

    @pytest.mark.parametrize("u", [2j, 0.5 + 2j, 1j])
    def test_agrees_with_general_assembly(self, u):
        a = cf_rough_heston(0.6, DESK, u, 1.0, 2000).value
        b = cf_general(ROUGH, DESK, ExponentTriple(u=u), 1.0, 2000).value
        assert abs(a - b) < 1e-4


class TestCfLift:
    def test_unit_at_zero(self):
        atoms = AtomicMeasure(((1.0, 0.0),))
        assert cf_lift(atoms, DESK, 0.0, 1.0, 200).value == 1.0 + 0.0j

    def test_single_atom_matches_classical_laplace(self):
        # E[exp(v V_T)] for classical Heston via the general assembly
        v = -1.0
        got = cf_lift(AtomicMeasure(((1.0, 0.0),)), DESK, v, 1.0, 2000).value
        want = cf_general(CONST, DESK, ExponentTriple(v=v), 1.0, 4000).value
        assert abs(got - want) < 1e-5

    def test_rough_atoms_converge_to_general(self):
        want = cf_general(ROUGH, DESK, ExponentTriple(v=-1.0), 1.0, 2000).value
        errs = []
        for na in (10, 50, 200):
            atoms = discretize_measure(RoughDensity(0.6), na, LIFT_ATOMS_X_MAX,
                                       span_ratio=LIFT_ATOMS_SPAN)
            errs.append(abs(cf_lift(atoms, DESK, -1.0, 1.0, 2000).value - want))
        assert errs[0] > errs[1] > errs[2]


class TestPricing:
    def test_deterministic_intrinsic(self):
        m0 = ModelParams.volterra_heston(lam=2.0, theta=0.0, sigma=0.3, rho=-0.7,
                                         v0=0.0, s0=1.0)
        assert price_european(CONST, m0, 0.8, 1.0) == max(1.0 - 0.8, 0.0)
        assert price_european(CONST, m0, 1.2, 1.0) == 0.0
        assert price_european(CONST, m0, 1.2, 1.0, kind="put") == pytest.approx(0.2)

    def test_put_call_parity_exact(self):
        for strike in [0.8, 1.0, 1.2]:
            c = price_european(CONST, DESK, strike, 1.0, n=400)
            p = price_european(CONST, DESK, strike, 1.0, kind="put", n=400)
            assert abs(c - p - (1.0 - strike)) < 1e-10

    def test_classical_vs_inversion_oracle(self):
        # oracle: the same contour inversion applied to the closed-form CF
        price = price_european(CONST, DESK, 1.0, 1.0, n=2000)
        y = np.arange(0.0, 200.0 + 0.125, 0.25)
        cf_vals = np.array([heston_cf(0.5 + 1j * yy, 1.0, 2.0, 0.04, 0.3, -0.7,
                                      0.04, 0.0) for yy in y])
        want = contour_values_to_price(y, cf_vals, 1.0, 1.0, "call")
        assert abs(price - want) < 1e-5

    def test_black_scholes_limit(self):
        # vanishing vol-of-vol: Heston degenerates to BS with vol sqrt(theta)
        m = ModelParams.volterra_heston(lam=2.0, theta=0.04, sigma=1e-8, rho=0.0,
                                        v0=0.04, s0=1.0)
        got = price_european(CONST, m, 1.1, 1.0, n=1000)
        assert got == pytest.approx(bs_call(1.0, 1.1, 1.0, 0.2), abs=2e-5)

    def test_rough_price_sane(self):
        price = price_european(ROUGH, DESK, 1.0, 1.0, n=500)
        assert 0.0 < price < 0.25
        vol = implied_vol(price, 1.0, 1.0, 1.0)
        assert 0.1 < vol < 0.3

    def test_bad_arguments(self):
        with pytest.raises(ArgumentError):
            price_european(CONST, DESK, -1.0, 1.0)
        with pytest.raises(ArgumentError):
            price_european(CONST, DESK, 1.0, 1.0, kind="straddle")

    def test_truncated_contour_diagnosed(self):
        # cutting the contour where the transform has not decayed raises the
        # oscillatory-integral diagnostic instead of returning a wrong price
        from affinevol.errors import NumericalError
        with pytest.raises(NumericalError):
            price_european(CONST, DESK, 1.0, 1.0, n=200, y_max=2.0)


class TestImpliedVol:
    def test_round_trip(self):
        price = bs_call_price(1.0, 1.0, 1.0, 0.2)
        assert abs(implied_vol(price, 1.0, 1.0, 1.0) - 0.2) < 1e-10

    def test_lower_bound_maps_to_zero(self):
        assert implied_vol(0.0, 1.0, 1.2, 1.0) == 0.0
        assert implied_vol(0.2, 1.0, 0.8, 1.0) == 0.0

    def test_out_of_bounds_rejected(self):
        with pytest.raises(DomainError):
            implied_vol(-0.01, 1.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            implied_vol(1.01, 1.0, 1.0, 1.0)

    def test_put_via_parity(self):
        c = bs_call_price(1.0, 1.1, 1.0, 0.25)
        p = c - 1.0 + 1.1
        assert abs(implied_vol(p, 1.0, 1.1, 1.0, kind="put") - 0.25) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(v1=st.floats(0.05, 0.6), v2=st.floats(0.05, 0.6),
           strike=st.floats(0.7, 1.4))
    def test_monotone_in_price(self, v1, v2, strike):
        p1 = bs_call_price(1.0, strike, 1.0, v1)
        p2 = bs_call_price(1.0, strike, 1.0, v2)
        i1 = implied_vol(p1, 1.0, strike, 1.0)
        i2 = implied_vol(p2, 1.0, strike, 1.0)
        assert (p1 < p2) == (i1 < i2) or abs(p1 - p2) < 1e-14

    def test_oracle_round_trip_ladder(self):
        for strike in [0.7, 0.9, 1.0, 1.15, 1.4]:
            for vol in [0.08, 0.2, 0.45]:
                price = bs_call(1.0, strike, 1.0, vol)
                assert abs(implied_vol(price, 1.0, strike, 1.0) - vol) < 1e-9
