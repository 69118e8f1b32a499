"""Riccati-Volterra solvers: oracles, fixed points, cross-formulation agreement."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinevol.errors import ArgumentError, NumericalError, ValidationError
from affinevol.kernels import (
    AtomicMeasure, ConstantKernel, PowerLawKernel, RoughDensity, discretize_measure,
)
from affinevol.riccati import (
    ExponentTriple, ModelParams, Q, R_Psi, R_phi, _etdrk4_coeffs,
    reconstruct_spde_psi, riccati_residual, solve_convolution_riccati,
    solve_fractional_riccati, solve_lift_riccati, solve_riccati_volterra,
)

from affinevol.transforms import LIFT_ATOMS_SPAN, LIFT_ATOMS_X_MAX

from oracles import heston_psi, heston_psi_ode

DESK = ModelParams.volterra_heston(lam=2.0, theta=0.04, sigma=0.3, rho=-0.7, v0=0.04)
ROUGH = PowerLawKernel(alpha=0.6)


class TestModelParams:
    def test_sigma_a_reconciliation(self):
        m = ModelParams(sigma=0.3)
        assert m.a == pytest.approx(0.09)
        m = ModelParams(a=0.09)
        assert m.sigma == pytest.approx(0.3)
        with pytest.raises(ValidationError):
            ModelParams(a=0.04, sigma=0.3)

    def test_class_exclusivity(self):
        with pytest.raises(ValidationError):
            ModelParams(alpha0=0.1, a=0.05)
        ModelParams(alpha0=0.1)  # OU leg
        ModelParams(a=0.05)      # square-root leg

    def test_rho_range(self):
        ModelParams(rho=-1.0)
        ModelParams(rho=1.0)
        with pytest.raises(ValidationError):
            ModelParams(rho=-1.2)

    def test_negative_rejected(self):
        for kw in [dict(beta=-0.1), dict(lam=-1.0), dict(alpha0=-0.1), dict(v0=-0.01)]:
            with pytest.raises(ValidationError):
                ModelParams(**kw)

    def test_theta(self):
        assert DESK.theta == pytest.approx(0.04)
        with pytest.raises(ArgumentError):
            ModelParams(beta=0.1).theta


class TestExponentTriple:
    def test_domain_warnings(self):
        assert ExponentTriple(u=0.5 + 3j).domain_warnings() == ()
        assert ExponentTriple(u=2.0).domain_warnings()
        assert ExponentTriple(v=0.1).domain_warnings()
        assert ExponentTriple(w=1.0).domain_warnings()


class TestAffineFunctions:
    def test_q_zeros(self):
        assert Q(DESK, 0.0, 0.0) == 0.0
        assert Q(DESK, 1.0, 0.0) == 0.0

    def test_q_arithmetic(self):
        # (4-2)/2 + 0.3*(-0.7)*2*1 + 0.045 = 0.625
        assert Q(DESK, 2.0, 1.0) == pytest.approx(0.625)

    def test_reactions(self):
        m = ModelParams(beta=0.08)
        assert R_phi(m, 2.0) == pytest.approx(0.16)
        assert R_phi(m, 0.0) == 0.0
        m2 = ModelParams(lam=2.0, a=0.09)
        assert R_Psi(m2, 1.0) == pytest.approx(-1.955)
        assert R_Psi(m2, 0.0) == 0.0

    def test_r_psi_is_q_at_u_zero(self):
        for y in [0.3, -1.0, 2.0 + 1.0j]:
            assert R_Psi(DESK, y) == pytest.approx(Q(DESK, 0.0, y) - DESK.lam * y)


class TestVolterraSolver:
    @pytest.mark.parametrize("u", [0.0, 1.0])
    def test_zero_fixed_points(self, u):
        sol = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=u), 1.0, 200)
        assert np.all(sol.psi == 0.0)

    def test_classical_heston_oracle(self):
        sol = solve_riccati_volterra(ConstantKernel(1.0), DESK,
                                     ExponentTriple(u=0.5 + 3j), 1.0, 2000)
        want = heston_psi(0.5 + 3j, sol.grid, DESK.lam, DESK.sigma, DESK.rho)
        assert float(np.max(np.abs(sol.psi - want))) < 1e-6

    def test_residual_below_tolerance(self):
        sol = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=2j), 1.0, 500)
        assert riccati_residual(sol) < sol.tol

    def test_out_of_domain_flagged_not_raised(self):
        sol = solve_riccati_volterra(ConstantKernel(1.0), DESK,
                                     ExponentTriple(u=1.5), 0.5, 100)
        assert sol.warnings

    def test_psi_at_zero_is_v_times_grid_weight(self):
        from affinevol.kernels import node_zero_value
        v = -0.75
        sol = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(v=v), 1.0, 128)
        assert sol.psi[0] == v * node_zero_value(ROUGH, sol.dt)
        sol_c = solve_riccati_volterra(ConstantKernel(2.0), DESK,
                                       ExponentTriple(v=v), 1.0, 128)
        assert sol_c.psi[0] == v * 2.0  # K(0) finite: no regularisation

    def test_blowup_is_structured_error(self):
        with pytest.raises(NumericalError):
            solve_riccati_volterra(ConstantKernel(1.0), DESK,
                                   ExponentTriple(u=60.0), 10.0, 400)

    @settings(max_examples=10, deadline=None)
    @given(u=st.floats(0.05, 0.95))
    def test_domain_decay_real_u(self, u):
        # psi stays real with Q(u, psi) <= 0 for u in (0,1), v = w = 0
        sol = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=u), 1.0, 300)
        assert float(np.max(np.abs(sol.psi.imag))) < 1e-14
        assert np.all(sol.q_of_psi.real <= 1e-14)


class TestFractionalSolver:
    def test_zero_exponent(self):
        sol = solve_fractional_riccati(0.6, DESK, 0.0, 1.0, 100)
        assert np.all(sol.psi == 0.0)

    def test_alpha_one_matches_classical(self):
        sol = solve_fractional_riccati(1.0, DESK, 0.5 + 3j, 1.0, 2000)
        want = heston_psi(0.5 + 3j, sol.grid, DESK.lam, DESK.sigma, DESK.rho)
        assert float(np.max(np.abs(sol.psi - want))) < 1e-6

    def test_cross_solver_agreement(self):
        sv = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=2j), 1.0, 2000)
        sf = solve_fractional_riccati(0.6, DESK, 2j, 1.0, 2000)
        assert float(np.max(np.abs(sv.psi - sf.psi))) < 1e-4


class TestConvolutionForm:
    @pytest.mark.parametrize("u", [0.0, 1.0])
    def test_zero_fixed_points(self, u):
        sol = solve_convolution_riccati(ROUGH, DESK, u, 1.0, 200)
        assert np.all(sol.g == 0.0)

    def test_dual_formulation_equivalence(self):
        sv = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=2j), 1.0, 2000)
        sc = solve_convolution_riccati(ROUGH, DESK, 2j, 1.0, 2000)
        assert float(np.max(np.abs(sv.q_of_psi - sc.g))) < 1e-4

    def test_certificate_psi(self):
        sc = solve_convolution_riccati(ROUGH, DESK, 2j, 1.0, 500)
        # g must equal Q(u, psi) for the returned certificate psi
        want = np.array([Q(DESK, 2j, z) for z in sc.psi])
        assert float(np.max(np.abs(want - sc.g))) < 1e-11

    def test_grid_convergence(self):
        # halving dt shrinks the cross-formulation disagreement
        errs = {}
        for n in (500, 1000, 2000):
            sv = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=2j), 1.0, n)
            sc = solve_convolution_riccati(ROUGH, DESK, 2j, 1.0, n)
            errs[n] = float(np.max(np.abs(sv.q_of_psi - sc.g)))
        assert errs[1000] <= errs[500] / 1.5 + 1e-11
        assert errs[2000] <= errs[1000] / 1.5 + 1e-11


class TestLiftSolver:
    def test_zero_initial_data(self):
        atoms = AtomicMeasure(((0.5, 0.1), (0.5, 3.0)))
        sol = solve_lift_riccati(atoms, DESK, 0.0, 1.0, 100)
        assert np.all(sol.Psi == 0.0)
        assert np.all(sol.phi == 0.0)

    def test_initial_conditions(self):
        atoms = AtomicMeasure(((1.0, 2.0),))
        sol = solve_lift_riccati(atoms, DESK, -1.0 + 0.5j, 1.0, 50)
        assert sol.Psi[0, 0] == -1.0 + 0.5j
        assert sol.phi[0] == 0.0

    def test_single_atom_is_classical_heston(self):
        v = -1.0 + 0.5j
        sol = solve_lift_riccati(AtomicMeasure(((1.0, 0.0),)), DESK, v, 1.0, 2000)
        want = heston_psi_ode(0.0, v, 0.0, sol.grid, DESK.lam, DESK.beta,
                              DESK.sigma, DESK.rho)
        assert float(np.max(np.abs(sol.psi_reduced - want))) < 1e-6

    def test_rough_lift_converges_to_volterra(self):
        sv = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=2j), 1.0, 2000)
        errs = []
        for na in (10, 50, 200):
            atoms = discretize_measure(RoughDensity(0.6), na, LIFT_ATOMS_X_MAX,
                                       span_ratio=LIFT_ATOMS_SPAN)
            lf = solve_lift_riccati(atoms, DESK, 0.0, 1.0, 2000, u=2j)
            errs.append(float(np.max(np.abs(lf.psi_reduced - sv.psi))))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 5e-3

    def test_etdrk4_weight_identity(self):
        # the stage weights must sum to phi1(z) = (e^z - 1)/z in both the
        # contour-averaged (|z| < 0.5) and direct-formula branches
        for z in [-1e-12, -0.01, -0.499, -0.501, -3.0, -40.0]:
            E, E2, ph_half, f1, f2, f3 = (float(c[0]) for c in
                                          _etdrk4_coeffs(np.asarray([z])))
            phi1 = (np.expm1(z)) / z
            assert f1 + 4.0 * f2 + f3 == pytest.approx(phi1, abs=1e-12)
            assert ph_half == pytest.approx(np.expm1(0.5 * z) / z, abs=1e-12)


class TestSpdeReconstruction:
    def test_zero_boundary_mass(self):
        sol = solve_riccati_volterra(ConstantKernel(1.0), DESK,
                                     ExponentTriple(v=0.0), 1.0, 100)
        rec = reconstruct_spde_psi(ConstantKernel(1.0), DESK, sol, 0.0)
        assert np.nanmax(np.abs(rec.psi_matrix)) == 0.0
        assert rec.residual == 0.0

    def test_classical_identity(self):
        k = ConstantKernel(1.0)
        sol = solve_riccati_volterra(k, DESK, ExponentTriple(v=-1.0), 1.0, 2000)
        rec = reconstruct_spde_psi(k, DESK, sol, -1.0)
        assert rec.residual < 1e-6

    def test_rough_identity(self):
        sol = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(v=-1.0), 1.0, 2000)
        rec = reconstruct_spde_psi(ROUGH, DESK, sol, -1.0)
        assert rec.residual < 1e-3

    def test_matrix_is_reaction_of_shifted_psi(self):
        k = ConstantKernel(1.0)
        sol = solve_riccati_volterra(k, DESK, ExponentTriple(v=-0.5), 0.5, 64)
        rec = reconstruct_spde_psi(k, DESK, sol, -0.5)
        j, i = 40, 10
        assert rec.psi_matrix[j, i] == pytest.approx(
            complex(R_Psi(DESK, sol.psi[j - i])), rel=1e-12)

    def test_requires_u_w_zero(self):
        sol = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=1j, v=-1.0), 0.5, 64)
        with pytest.raises(ArgumentError):
            reconstruct_spde_psi(ROUGH, DESK, sol, -1.0)


class TestFourFormulations:
    def test_pairwise_agreement_rough(self):
        # Volterra, fractional Adams, resolvent form, and the 200-atom lift
        n = 1000
        sv = solve_riccati_volterra(ROUGH, DESK, ExponentTriple(u=2j), 1.0, n)
        sf = solve_fractional_riccati(0.6, DESK, 2j, 1.0, n)
        sc = solve_convolution_riccati(ROUGH, DESK, 2j, 1.0, n)
        atoms = discretize_measure(RoughDensity(0.6), 200, LIFT_ATOMS_X_MAX,
                                   span_ratio=LIFT_ATOMS_SPAN)
        lf = solve_lift_riccati(atoms, DESK, 0.0, 1.0, n, u=2j)
        assert float(np.max(np.abs(sv.psi - sf.psi))) < 1e-4
        assert float(np.max(np.abs(sv.q_of_psi - sc.g))) < 5e-4
        assert float(np.max(np.abs(sv.psi - lf.psi_reduced))) < 5e-3
        assert float(np.max(np.abs(sc.psi - sf.psi))) < 5e-4
