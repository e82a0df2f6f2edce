import cmath
import json
import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from eddy_ddm.modal_analysis import (
    ImpedanceParams,
    ResonantImpedanceError,
    amplification_arrays,
    modal_coefficients,
    modal_table,
)
from eddy_ddm.spectral_ddm import (
    ConductorModalSolution,
    InsulatorModalSolution,
    InterfaceState,
    SourceSpec,
    conductor_solve,
    ddm_solution,
    electric_field,
    exchange,
    field_eval,
    insulator_solve,
    interface_residuals,
    monolithic_solve,
    potential,
    run,
)

import oracles
from helpers import eigen_consistency_error, rel_dev

GOLDEN = Path(__file__).parent / "golden"


class TestInsulatorSolve:
    def test_homogeneous_source(self, phys, imp):
        n_max = 30
        g_I = InterfaceState.random(n_max, 3).g_I
        sol = insulator_solve(g_I, SourceSpec.zero(n_max), phys, imp)
        tab = modal_table(n_max, phys)
        n = np.arange(1, n_max + 1)
        np.testing.assert_allclose(sol.c, -sol.d * phys.R ** (-2.0 * n), rtol=1e-13)
        np.testing.assert_allclose((tab.A_I + imp.beta_I * tab.B_I) * sol.d, g_I, rtol=1e-13)

    def test_all_zero(self, phys, imp):
        sol = insulator_solve(np.zeros(5), SourceSpec.zero(5), phys, imp)
        assert not np.any(sol.c) and not np.any(sol.d)

    def test_dirichlet_only_against_high_precision(self, phys):
        f = SourceSpec(np.r_[1.0, np.zeros(4)])
        sol = insulator_solve(np.zeros(5), f, phys, ImpedanceParams())
        with mp.workdps(40):
            c, d = mp.lu_solve(mp.matrix([[2, mp.mpf(1) / 2], [1, -1]]), mp.matrix([1, 0]))
        assert abs(sol.c[0] - complex(c)) <= 1e-15
        assert abs(sol.d[0] - complex(d)) <= 1e-15
        assert abs(sol.c[0] * 2 + sol.d[0] / 2 - 1) <= 1e-13
        assert abs(sol.c[0] - sol.d[0]) <= 1e-13

    @pytest.mark.parametrize("n", [1, 2])
    def test_impedance_row_matches_vector_calculus(self, phys, n):
        # row (ii): n (c - d) + beta_I n(n+1) (c + d) = g_I
        tr = oracles.insulator_traces(n)
        beta_I = -0.3 + 0.1j
        f = SourceSpec(np.r_[np.zeros(n - 1), 0.7])
        g_I = np.r_[np.zeros(n - 1), 0.2 - 0.5j]
        sol = insulator_solve(g_I, f, phys, ImpedanceParams(beta_I, 0))
        c, d = sol.c[-1], sol.d[-1]
        lhs = sum(coef * (tr[v]["dn_on_Y"] + beta_I * tr[v]["curlcurl_on_Y"])
                  for coef, v in ((c, "c"), (d, "d")))
        assert abs(lhs - g_I[-1]) <= 1e-13

    def test_outer_condition(self, phys, imp):
        f = SourceSpec.decay(40)
        sol = insulator_solve(InterfaceState.random(40, 1).g_I, f, phys, imp)
        np.testing.assert_allclose(sol.outer_values(), f.f, rtol=1e-12)

    def test_resonance_reports_mode(self, phys):
        with pytest.raises(ResonantImpedanceError) as err:
            insulator_solve(np.ones(4), SourceSpec.zero(4), phys, ImpedanceParams(1.25 / 1.5, 0))
        assert err.value.n == 1


class TestConductorSolve:
    def test_zero(self, phys, imp):
        assert not np.any(conductor_solve(np.zeros(6), phys, imp).a_scaled)

    def test_unit_data(self, phys, imp):
        sol = conductor_solve(np.ones(10), phys, imp)
        for n in range(1, 11):
            mc = modal_coefficients(n, phys)
            assert abs(sol.a[n - 1] * (mc.A_C + imp.beta_C * mc.B_C) - 1) <= 1e-12

    def test_n1_against_vector_calculus(self, phys):
        tr = oracles.conductor_traces(1, phys.kappa)
        sol = conductor_solve(np.ones(1), phys, ImpedanceParams(0, 1e-2))
        expected = 1 / (tr["curlExn_on_V"] + 1e-2 * tr["Curl_curlEn_on_V"])
        assert abs(sol.a[0] / expected - 1) <= 1e-12

    def test_resonance(self, phys):
        mc = modal_coefficients(2, phys)
        with pytest.raises(ResonantImpedanceError) as err:
            conductor_solve(np.ones(3), phys, ImpedanceParams(0, -mc.A_C_scaled / mc.B_C_scaled))
        assert err.value.n == 2


class TestExchange:
    def test_homogeneous_is_antidiagonal(self, phys, imp):
        state = InterfaceState.random(100, 11)
        swept = exchange(state, SourceSpec.zero(100), phys, imp)
        assert eigen_consistency_error(state, swept, phys, imp) <= 1e-12

    def test_zero_state(self, phys, imp):
        swept = exchange(InterfaceState.zeros(8), SourceSpec.zero(8), phys, imp)
        assert not np.any(swept.g_C) and not np.any(swept.g_I)

    def test_affine_offset_from_source(self, phys, imp):
        f = SourceSpec(np.r_[1.0, np.zeros(9)])
        b = exchange(InterfaceState.zeros(10), f, phys, imp)
        ins = insulator_solve(np.zeros(10), f, phys, imp)
        root = math.sqrt(2)
        expected = phys.i_omega_mu * (-root) * ((ins.c[0] + ins.d[0]) + imp.beta_C * (ins.c[0] - ins.d[0]))
        assert abs(b.g_C[0] - expected) <= 1e-14 * abs(expected)
        assert not np.any(b.g_I) and not np.any(b.g_C[1:])

    def test_monolithic_traces_are_fixed_point(self, phys, imp):
        f = SourceSpec.decay(30)
        ins, cond = monolithic_solve(f, phys)
        tab = modal_table(30, phys)
        n = tab.n
        g_I = n * (ins.c - ins.d) + imp.beta_I * n * (n + 1) * (ins.c + ins.d)
        g_C = (tab.A_C_scaled + imp.beta_C * tab.B_C_scaled) * cond.a_scaled
        star = InterfaceState(g_C, g_I)
        swept = exchange(star, f, phys, imp)
        assert np.max(rel_dev(swept.g_C, g_C)) <= 1e-11
        assert np.max(rel_dev(swept.g_I, g_I)) <= 1e-11

    def test_length_mismatch(self, phys, imp):
        with pytest.raises(ValueError):
            exchange(InterfaceState.ones(3), SourceSpec.zero(4), phys, imp)


class TestRun:
    def test_observed_factors(self, phys, imp):
        n_max = 60
        _, log = run(SourceSpec.zero(n_max), phys, imp, tol=1e-300, max_iter=6,
                     init=InterfaceState.random(n_max, 5))
        _, _, t, _ = amplification_arrays(modal_table(n_max, phys), phys, imp)
        assert np.max(np.abs(log.per_mode_factor - np.abs(t))) <= 1e-8
        assert all(r > 0 for r in log.residual)

    def test_observed_factors_with_source(self, phys, imp):
        _, log = run(SourceSpec.decay(20), phys, imp, tol=1e-300, max_iter=8)
        _, _, t, _ = amplification_arrays(modal_table(20, phys), phys, imp)
        assert np.max(np.abs(log.per_mode_factor - np.abs(t))) <= 1e-6

    def test_zero_start_zero_source(self, phys, imp):
        state, log = run(SourceSpec.zero(10), phys, imp, init=InterfaceState.zeros(10))
        assert log.converged and log.iterations == 1 and log.residual == [0.0]
        assert np.all(np.isnan(log.per_mode_factor))

    def test_huge_tolerance_single_sweep(self, phys, imp):
        _, log = run(SourceSpec.decay(10), phys, imp, tol=1e30)
        assert log.converged and log.iterations == 1

    def test_geometric_decay(self, phys, imp):
        _, log = run(SourceSpec.zero(40), phys, imp, tol=1e-12, max_iter=2000)
        assert log.converged
        r = np.array(log.residual)
        _, _, t, _ = amplification_arrays(modal_table(40, phys), phys, imp)
        # slowest mode sets the late-time double-step rate
        late = r[-1] / r[-3]
        assert late == pytest.approx(np.abs(t).max(), rel=1e-3)

    def test_iteration_count_goldens(self, phys):
        golden = json.loads((GOLDEN / "iteration_counts.json").read_text())
        counts = {}
        for key, expected in golden.items():
            bI, bC = (float(v) for v in key.split(","))
            _, log = run(SourceSpec.decay(50), phys, ImpedanceParams(bI, bC), tol=1e-6, max_iter=3000)
            assert log.converged and log.iterations == expected
            counts[key] = log.iterations
        _, base = run(SourceSpec.decay(50), phys, ImpedanceParams(), tol=1e-6, max_iter=3000)
        assert not base.converged
        assert counts["-1e-2,1e-1"] < counts["-1e-2,1e-2"] < base.iterations

    def test_divergent_mode_flagged(self, phys):
        imp = ImpedanceParams(0, -0.05)  # Re beta_C < 0: inadmissible
        _, _, t, _ = amplification_arrays(modal_table(30, phys), phys, imp)
        assert np.abs(t).max() > 1
        _, log = run(SourceSpec.zero(30), phys, imp, tol=1e-10, max_iter=200)
        assert not log.converged
        assert log.residual[-1] > log.residual[0]
        assert log.dominant_mode == int(np.argmax(np.abs(t))) + 1

    def test_linearity(self, phys, imp):
        f = SourceSpec.zero(25)
        a, b = InterfaceState.random(25, 1), InterfaceState.random(25, 2)
        combo = InterfaceState(2 * a.g_C - 3j * b.g_C, 2 * a.g_I - 3j * b.g_I)
        kw = dict(tol=1e-300, max_iter=7)
        ga, _ = run(f, phys, imp, init=a, **kw)
        gb, _ = run(f, phys, imp, init=b, **kw)
        gc, _ = run(f, phys, imp, init=combo, **kw)
        expected_C = 2 * ga.g_C - 3j * gb.g_C
        # per-mode scales vanish near zeros of t_c, so compare against the largest summand
        scale = np.max(np.abs(2 * ga.g_C) + np.abs(3 * gb.g_C))
        assert np.max(np.abs(gc.g_C - expected_C)) / scale <= 1e-12

    def test_bad_arguments(self, phys, imp):
        with pytest.raises(ValueError):
            run(SourceSpec.zero(3), phys, imp, tol=0)
        with pytest.raises(ValueError):
            run(SourceSpec.zero(3), phys, imp, max_iter=0)


class TestMonolithic:
    def test_zero_source(self, phys):
        ins, cond = monolithic_solve(SourceSpec.zero(12), phys)
        assert not np.any(ins.c) and not np.any(ins.d) and not np.any(cond.a_scaled)

    def test_residuals(self, phys):
        f = SourceSpec(np.r_[1.0, np.zeros(19)])
        ins, cond = monolithic_solve(f, phys)
        r1, r2 = interface_residuals(ins, cond, phys)
        assert r1.max() <= 1e-12 and r2.max() <= 1e-12
        assert abs(ins.outer_values()[0] - 1) <= 1e-13

    def test_original_conditions_via_vector_calculus(self, phys):
        # independent of the modal bookkeeping: check (4) with sympy-derived traces
        f = SourceSpec(np.r_[0.0, 1.0])
        ins, cond = monolithic_solve(f, phys)
        n = 2
        tr_c, tr_i = oracles.conductor_traces(n, phys.kappa), oracles.insulator_traces(n)
        a, c, d = cond.a[-1], ins.c[-1], ins.d[-1]
        curl_e_x_n = a * tr_c["curlExn_on_V"]
        curl_p = c * tr_i["c"]["Curl_p_on_V"] + d * tr_i["d"]["Curl_p_on_V"]
        assert abs(curl_e_x_n - phys.i_omega_mu * curl_p) <= 1e-12 * abs(curl_e_x_n)
        dn = c * tr_i["c"]["dn_on_Y"] + d * tr_i["d"]["dn_on_Y"]
        assert abs(dn - a * tr_c["curlG_E_on_Y"] / phys.i_omega_mu) <= 1e-12 * abs(dn)

    def test_ddm_limit(self, phys, imp):
        f = SourceSpec.decay(50)
        state, log = run(f, phys, imp, tol=1e-15, max_iter=5000)
        d_ins, d_cond = ddm_solution(state, f, phys, imp)
        ins, cond = monolithic_solve(f, phys)
        for approx, exact in ((d_ins.c, ins.c), (d_ins.d, ins.d), (d_cond.a_scaled, cond.a_scaled)):
            assert np.max(rel_dev(approx, exact)) <= 1e-10


class TestFieldEval:
    def test_zero_coefficients(self, phys):
        ins = InsulatorModalSolution(np.zeros(5), np.zeros(5), phys.R)
        cond = ConductorModalSolution(np.zeros(5), np.ones(5))
        assert potential(ins, [0, 0, 1.5]) == 0
        assert not np.any(electric_field(cond, [0.1, 0.2, 0.3], phys))

    def test_dirichlet_trace(self, phys):
        f = SourceSpec.decay(20)
        ins, _ = monolithic_solve(f, phys)
        x = phys.R * np.array([0.6, 0.0, 0.8])
        n = np.arange(1, 21)
        from scipy.special import eval_legendre
        expected = np.sum(f.f * np.sqrt((2 * n + 1) / (4 * math.pi)) * eval_legendre(n, 0.8))
        assert abs(potential(ins, x) - expected) <= 1e-12 * abs(expected)

    def test_m1_field_against_curl(self, phys):
        # E = M_1^0 = curl(x j_1(kappa r) Y_1^0) with normalised Y_1^0
        j1_k = modal_table(1, phys).j_n[0]
        cond = ConductorModalSolution(np.array([j1_k]), np.array([j1_k]))  # a = 1
        point = np.array([0.2, -0.3, 0.4])
        x, y, z = sp.symbols("x y z", real=True)
        r = sp.sqrt(x ** 2 + y ** 2 + z ** 2)
        k = complex(phys.kappa)
        kk = sp.Float(k.real, 30) + sp.I * sp.Float(k.imag, 30)
        psi = sp.expand_func(sp.jn(1, kk * r)) * sp.sqrt(sp.Rational(3, 4) / sp.pi) * z / r
        X = sp.Matrix([x, y, z]) * psi
        curl = [sp.diff(X[2], y) - sp.diff(X[1], z), sp.diff(X[0], z) - sp.diff(X[2], x),
                sp.diff(X[1], x) - sp.diff(X[0], y)]
        at = dict(zip((x, y, z), (sp.Float(v, 30) for v in point)))
        expected = np.array([complex(sp.N(c.subs(at), 25)) for c in curl])
        got = field_eval(cond, point, phys)
        assert np.max(np.abs(got - expected)) <= 1e-12 * np.max(np.abs(expected))
        assert abs(np.dot(got, point)) <= 1e-14  # no radial component

    def test_domain_checks(self, phys):
        ins, cond = monolithic_solve(SourceSpec.decay(3), phys)
        with pytest.raises(ValueError):
            potential(ins, [0, 0, 0.5])
        with pytest.raises(ValueError):
            potential(ins, [0, 0, 2.5])
        with pytest.raises(ValueError):
            electric_field(cond, [0, 0, 1.5], phys)
        with pytest.raises(ValueError):
            field_eval(cond, [0, 0, 0.5])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40))
def test_sweep_matches_modal_factors_for_random_states(seed, n_max):
    from eddy_ddm.modal_analysis import PhysicalParams
    phys = PhysicalParams()
    imp = ImpedanceParams(-1e-2, 1e-1)
    state = InterfaceState.random(n_max, seed)
    swept = exchange(state, SourceSpec.zero(n_max), phys, imp)
    assert eigen_consistency_error(state, swept, phys, imp) <= 1e-12
