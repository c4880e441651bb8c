import math

import numpy as np
import pytest

from conftest import GAMMA, HBAR, MASS, k_of, random_draws
from toa_sim.errors import NonPhysicalAbsorption
from toa_sim.model import cesium_config
from toa_sim.scattering import (
    absorption,
    absorption_value,
    channel_wavenumbers,
    evaluate_state,
    internal_eigensystem,
    matching_residual,
    semiclassical_T2,
    semiclassical_state,
    sharp_edge_rows,
    solve_sharp_edge,
)


class TestInternalEigensystem:
    def test_hermitian_limit(self):
        omega = 1e8
        eig = internal_eigensystem(0.0, omega)
        assert eig.lambda_plus == pytest.approx(-omega / 2)
        assert eig.lambda_minus == pytest.approx(omega / 2)
        assert eig.eigvec_plus == (1.0, pytest.approx(-1.0))
        assert eig.eigvec_minus == (1.0, pytest.approx(1.0))

    def test_weak_coupling_limit(self):
        eig = internal_eigensystem(GAMMA, 1e-3 * GAMMA)
        assert abs(eig.lambda_plus) < 1e-6 * GAMMA
        assert eig.lambda_minus == pytest.approx(-0.5j * GAMMA, rel=1e-5)

    def test_degenerate_flag(self):
        eig = internal_eigensystem(GAMMA, GAMMA / 2)
        assert eig.degenerate
        assert eig.lambda_plus == pytest.approx(-0.25j * GAMMA)
        assert eig.lambda_minus == pytest.approx(-0.25j * GAMMA)
        assert not internal_eigensystem(GAMMA, GAMMA / 2 * (1 + 1e-6)).degenerate

    def test_trace_determinant_invariants(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            gamma = float(rng.uniform(0, 1e9))
            omega = float(rng.uniform(1e5, 1e9))
            eig = internal_eigensystem(gamma, omega)
            assert eig.lambda_plus + eig.lambda_minus == pytest.approx(-0.5j * gamma, abs=1e-3)
            assert eig.lambda_plus * eig.lambda_minus == pytest.approx(
                -(omega**2) / 4.0, rel=1e-12
            )

    def test_branch_continuity_across_degeneracy(self):
        omega = 1e8
        lams = []
        for gamma in (2 * omega * (1 - 1e-7), 2 * omega, 2 * omega * (1 + 1e-7)):
            eig = internal_eigensystem(gamma, omega)
            lams.append(eig.lambda_plus)
        assert abs(lams[0] - lams[1]) < 1e-3 * omega
        assert abs(lams[2] - lams[1]) < 1e-3 * omega

    def test_eigensystem_residual(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            gamma = float(rng.uniform(0, 5e8))
            omega = float(rng.uniform(1e6, 5e8))
            eig = internal_eigensystem(gamma, omega)
            mat = np.array([[0.0, omega / 2.0], [omega / 2.0, -0.5j * gamma]])
            scale = np.linalg.norm(mat)
            for lam, vec in (
                (eig.lambda_plus, eig.eigvec_plus),
                (eig.lambda_minus, eig.eigvec_minus),
            ):
                v = np.array(vec)
                residual = np.linalg.norm(mat @ v - lam * v) / (scale * np.linalg.norm(v))
                assert residual < 1e-12


class TestChannelWavenumbers:
    def test_hermitian_q_equals_k(self):
        energy = 0.5 * MASS * 100.0**2
        wn = channel_wavenumbers(energy, 0.0, 1e8, MASS)
        assert wn.q == wn.k
        # k+-^2 = k^2 +- m omega / hbar at gamma = 0
        assert wn.k_plus**2 == pytest.approx(wn.k**2 + MASS * 1e8 / HBAR, rel=1e-12)
        assert wn.k_minus**2 == pytest.approx(wn.k**2 - MASS * 1e8 / HBAR, rel=1e-12)

    def test_decaying_channel_expansion(self):
        # first-order expansion of the complex root vs direct evaluation
        v = 166.2
        energy = 0.5 * MASS * v * v
        wn = channel_wavenumbers(energy, GAMMA, 5 * GAMMA, MASS)
        first_order = GAMMA * MASS / (2.0 * HBAR * wn.k)
        assert first_order == pytest.approx(1.0018e5, rel=1e-3)
        assert wn.q.imag == pytest.approx(first_order, rel=1e-3)
        assert wn.q.imag > 0.0

    def test_upper_half_plane(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            energy = 0.5 * MASS * float(rng.uniform(0.1, 500)) ** 2
            gamma = float(rng.uniform(0, 1e9))
            omega = float(rng.uniform(1e6, 1e9))
            wn = channel_wavenumbers(energy, gamma, omega, MASS)
            assert wn.q.imag >= 0.0
            assert wn.k_plus.imag >= 0.0
            assert wn.k_minus.imag >= 0.0


class TestSolveSharpEdge:
    def test_uncoupled_is_free(self):
        cfg = cesium_config(omega=0.0)
        sol = solve_sharp_edge(k_of(100.0), cfg)
        assert sol.T1 == 1.0
        assert sol.R1 == sol.R2 == sol.T2 == 0.0
        assert absorption(sol) == 0.0

    def test_hermitian_flux_conservation(self):
        rng = np.random.default_rng(11)
        for v, omega, length in random_draws(rng, 100):
            cfg = cesium_config(omega=omega, beam_width=length, gamma=0.0)
            row = sharp_edge_rows(np.array([k_of(v)]), cfg)[0]
            total = sum(abs(row[i]) ** 2 for i in range(4))
            assert abs(total - 1.0) < 1e-10

    def test_matching_residuals_over_draws(self):
        rng = np.random.default_rng(12)
        for v, omega, length in random_draws(rng, 200):
            cfg = cesium_config(omega=omega, beam_width=length)
            sol = solve_sharp_edge(k_of(v), cfg)
            assert matching_residual(sol) < 1e-9

    def test_degenerate_coupling_solves(self):
        cfg = cesium_config(omega=GAMMA / 2)
        sol = solve_sharp_edge(k_of(100.0), cfg)
        assert sol.degenerate_pair is not None
        assert matching_residual(sol) < 1e-6
        assert 0.0 <= absorption(sol) <= 1.0
        # two-sided limit agrees with a nearby non-degenerate coupling
        near = solve_sharp_edge(k_of(100.0), cesium_config(omega=GAMMA / 2 * (1 + 1e-4)))
        assert abs(sol.T1 - near.T1) < 1e-3

    def test_ridge_absorption(self, cs_strong):
        v0 = cs_strong.beam_width * cs_strong.omega / math.pi
        sol = solve_sharp_edge(k_of(v0), cs_strong)
        assert absorption(sol) > 0.99

    def test_plateau_absorption(self, cs_strong):
        sol = solve_sharp_edge(k_of(10.0), cs_strong)
        assert absorption(sol) > 0.999

    def test_valley_minimum_below_ridge(self, cs_strong):
        # a full internal oscillation leaves the atom in the ground state
        v0 = cs_strong.beam_width * cs_strong.omega / math.pi
        valley = absorption(solve_sharp_edge(k_of(v0 / 2.0), cs_strong))
        ridge = absorption(solve_sharp_edge(k_of(v0), cs_strong))
        assert valley < ridge
        # beyond the first ridge the absorption decreases with velocity
        a_past = [
            absorption(solve_sharp_edge(k_of(v), cs_strong)) for v in (300.0, 400.0, 500.0)
        ]
        assert a_past[0] > a_past[1] > a_past[2]

    def test_semi_infinite_limit(self):
        # for beams much wider than the penetration depth, R1 stops moving
        omega = 2 * GAMMA
        v = 5.0
        r1 = []
        for length in (2e-5, 4e-5):
            cfg = cesium_config(omega=omega, beam_width=length)
            sol = solve_sharp_edge(k_of(v), cfg)
            r1.append(sol.R1)
            assert abs(sol.T1) < 1e-8
            assert abs(sol.T2 * np.exp(1j * sol.wavenumbers.q * length)) < 1e-8
        assert abs(r1[1] - r1[0]) < 1e-6

    def test_strong_field_reflection_region(self):
        # reflection grows toward 1 as the energy drops below the coupling
        # scale; the open lower dressed branch keeps it below 1 at moderate
        # energy ratios
        omega = 1000 * GAMMA
        cfg = cesium_config(omega=omega)
        r1 = []
        for ratio in (10.0, 100.0, 1000.0):
            energy = HBAR * omega / (2.0 * ratio)
            v = math.sqrt(2 * energy / MASS)
            r1.append(abs(solve_sharp_edge(k_of(v), cfg).R1))
        assert r1[0] < r1[1] < r1[2]
        assert r1[1] > 0.9
        assert r1[2] > 0.96


class TestEvaluateState:
    def test_continuity_at_edges(self, cs_strong):
        sol = solve_sharp_edge(k_of(150.0), cs_strong)
        L = cs_strong.beam_width
        for edge in (0.0, L):
            inside = evaluate_state(sol, np.array([edge]))
            assert np.all(np.isfinite(inside))
        assert matching_residual(sol) < 1e-10

    def test_left_asymptotic_decay_of_excited(self, cs_strong):
        sol = solve_sharp_edge(k_of(50.0), cs_strong)
        decay_scale = 1.0 / sol.wavenumbers.q.imag
        vals = evaluate_state(sol, np.array([-5 * decay_scale, -60 * decay_scale]))
        assert abs(vals[1, 1]) < 1e-20 * max(abs(vals[1, 0]), 1e-30) + 1e-25

    def test_uncoupled_excited_zero(self):
        cfg = cesium_config(omega=0.0)
        sol = solve_sharp_edge(k_of(100.0), cfg)
        vals = evaluate_state(sol, np.array([-1e-6, 2e-6, 7e-6]))
        assert np.all(vals[1] == 0.0)
        # ground channel is the free plane wave everywhere
        x = np.array([-1e-6, 2e-6, 7e-6])
        expected = np.exp(1j * sol.k * x) / math.sqrt(2 * math.pi)
        assert np.abs(vals[0] - expected).max() < 1e-14

    def test_normalization_factor(self, cs_strong):
        # far to the left the incident plane wave has amplitude 1/sqrt(2 pi)
        cfg = cesium_config(omega=0.0)
        sol = solve_sharp_edge(k_of(100.0), cfg)
        val = evaluate_state(sol, np.array([-2e-6]))
        assert abs(val[0, 0]) == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-12)


class TestAbsorption:
    def test_band_check(self):
        with pytest.raises(NonPhysicalAbsorption):
            absorption_value(0.0 + 0j, 1.5 + 0j)
        with pytest.raises(NonPhysicalAbsorption):
            absorption_value(1.2 + 0j, 1.2 + 0j)
        assert absorption_value(0.0j, (1.0 + 5e-10) + 0j) == 0.0


class TestSemiclassical:
    def test_entry_state(self, cs_strong):
        val = semiclassical_state(k_of(265.0), cs_strong, np.array([0.0]))
        assert val[0, 0] == pytest.approx(1.0 / math.sqrt(2 * math.pi))
        assert val[1, 0] == 0.0

    def test_half_oscillation_hermitian(self):
        omega = 1e8
        cfg = cesium_config(omega=omega, gamma=0.0, beam_width=20e-6)
        v = 265.0
        x = math.pi * v / omega
        val = semiclassical_state(k_of(v), cfg, np.array([x]))
        assert abs(val[0, 0]) < 1e-12
        assert abs(val[1, 0]) == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-12)

    def test_matches_exact_solver_inside(self, cs_strong):
        k = k_of(264.99)
        sol = solve_sharp_edge(k, cs_strong)
        x = np.array([cs_strong.beam_width / 2.0])
        exact = evaluate_state(sol, x)
        semi = semiclassical_state(k, cs_strong, x)
        for comp in range(2):
            rel = abs(exact[comp, 0] - semi[comp, 0]) / abs(exact[comp, 0])
            assert rel < 0.01

    def test_T2_ridge_phases(self, cs_strong):
        L = cs_strong.beam_width
        omega = cs_strong.omega
        cfg0 = cesium_config(omega=omega, gamma=0.0)
        for n, sign in ((0, -1j), (1, +1j)):
            v = L * omega / ((2 * n + 1) * math.pi)
            t2 = semiclassical_T2(k_of(v), cfg0)
            k = k_of(v)
            phase = t2 * np.exp(-1j * (k - k) * L)  # q = k at gamma = 0
            assert phase / abs(phase) == pytest.approx(sign, abs=1e-9)

    def test_T2_ridge_magnitude(self, cs_strong):
        # frozen from two independent routes; the decaying-channel basis
        # wave exp(iqL) shrinks by exp(-gamma L/(2 v0)), so the coefficient
        # magnitude is exp(+gamma L/(4 v0)) (Omega/Omega') sin(...) ~ 1.1759
        v0 = cs_strong.beam_width * cs_strong.omega / math.pi
        t2_semi = semiclassical_T2(k_of(v0), cs_strong)
        assert abs(t2_semi) == pytest.approx(1.1759, rel=1e-3)
        sol = solve_sharp_edge(k_of(v0), cs_strong)
        assert abs(sol.T2) == pytest.approx(abs(t2_semi), rel=1e-4)
        # physical excited amplitude at the exit edge
        q = sol.wavenumbers.q
        exit_amp = abs(t2_semi * np.exp(1j * q * cs_strong.beam_width))
        assert exit_amp == pytest.approx(0.8589, rel=1e-3)

    def test_T2_exact_agreement_deep_semiclassical(self):
        # 2E/(hbar omega) > 100 and gamma L / v < 0.2
        omega = 10 * GAMMA
        cfg = cesium_config(omega=omega)
        for v in (530.0, 600.0, 800.0):
            if GAMMA * cfg.beam_width / v >= 0.2:
                continue
            k = k_of(v)
            assert 2 * (0.5 * MASS * v * v) / (HBAR * omega) > 100
            exact = solve_sharp_edge(k, cfg).T2
            semi = semiclassical_T2(k, cfg)
            assert abs(abs(exact) - abs(semi)) / abs(exact) < 0.02
