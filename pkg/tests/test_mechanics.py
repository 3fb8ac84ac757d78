import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from activemech.mechanics import (
    CalciumProgram,
    LoadProgram,
    MechanicsParams,
    MechHistory,
    TabulatedProgram,
    calcium_at,
    elastic_energy,
    load_at,
    mech_residual,
    mech_solve,
    potential_derivative,
    potential_second_derivative,
)
from activemech.solvers import SolverError

TWITCH = CalciumProgram()


class TestParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            MechanicsParams(mass=-1)
        with pytest.raises(ValueError):
            MechanicsParams(k_p=0)
        with pytest.raises(ValueError):
            MechanicsParams(potential="cubic")
        assert MechanicsParams().quasistatic
        assert not MechanicsParams(sigma=1.0).quasistatic


class TestPotentials:
    @pytest.mark.parametrize("potential", ["quadratic", "log"])
    @given(lam=st.floats(-0.9, 1.0))
    def test_derivatives_match_fd(self, potential, lam):
        p = MechanicsParams(k_p=1e6, potential=potential)
        d = 1e-5
        fd1 = (elastic_energy(lam + d, p) - elastic_energy(lam - d, p)) / (2 * d)
        fd2 = (potential_derivative(lam + d, p) - potential_derivative(lam - d, p)) / (2 * d)
        scale = 1e6 / (1 + lam) ** 3
        assert fd1 == pytest.approx(potential_derivative(lam, p), abs=1e-4 * scale)
        assert fd2 == pytest.approx(potential_second_derivative(lam, p), abs=1e-4 * scale)

    @pytest.mark.parametrize("potential", ["quadratic", "log"])
    def test_reference_state(self, potential):
        p = MechanicsParams(k_p=2e6, potential=potential)
        assert potential_derivative(0.0, p) == 0.0
        assert potential_second_derivative(0.0, p) == pytest.approx(2e6)


class TestCalcium:
    def test_constant(self):
        assert calcium_at(5.0, CalciumProgram.constant(0.6)) == 0.6

    def test_transient_shape(self):
        # peak value equals c_max at the analytic peak time
        assert calcium_at(TWITCH.t_peak, TWITCH) == pytest.approx(1.6, rel=1e-12)
        assert calcium_at(0.0, TWITCH) == 0.1
        assert calcium_at(0.1, TWITCH) == 0.1
        assert calcium_at(2.0, TWITCH) == pytest.approx(0.1, abs=1e-12)

    def test_transient_value(self):
        # [DERIVED] direct evaluation of the biexponential with beta from its definition
        rho = 0.4
        beta = rho ** (-1 / (rho - 1)) - rho ** (-1 / (1 - 1 / rho))
        s = 0.05
        expect = 0.1 + 1.5 / beta * (math.exp(-s / 0.02) - math.exp(-s / 0.05))
        assert calcium_at(0.15, TWITCH) == pytest.approx(expect, rel=1e-14)

    @given(st.floats(0, 2))
    def test_bounds(self, t):
        assert 0.1 - 1e-12 <= calcium_at(t, TWITCH) <= 1.6 + 1e-12

    def test_invalid(self):
        with pytest.raises(ValueError):
            CalciumProgram(tau1=0.05, tau2=0.05)
        with pytest.raises(ValueError):
            CalciumProgram(c0=2.0, c_max=1.0)
        with pytest.raises(ValueError):
            CalciumProgram(kind="pulse")

    def test_tabulated(self, tmp_path):
        f = tmp_path / "ca.csv"
        f.write_text("t,value\n0,0.1\n1,1.1\n")
        prog = CalciumProgram(kind="tabulated", table=TabulatedProgram.from_csv(f))
        assert calcium_at(0.5, prog) == pytest.approx(0.6)
        assert calcium_at(3.0, prog) == 1.1


class TestLoad:
    ramp = LoadProgram(kind="linear-ramp", p_bar=100e3, start=0.1, duration=0.5, target=0.0)

    def test_ramp(self):
        assert load_at(0.0, self.ramp) == 100e3
        assert load_at(0.35, self.ramp) == pytest.approx(50e3)
        assert load_at(0.6, self.ramp) == 0.0
        assert load_at(0.9, self.ramp) == 0.0

    def test_held(self):
        assert self.ramp.held() == LoadProgram(kind="constant", p_bar=100e3)

    def test_invalid(self):
        with pytest.raises(ValueError):
            LoadProgram(kind="linear-ramp", duration=0.0)
        with pytest.raises(ValueError):
            TabulatedProgram((0.0, 0.0), (1.0, 2.0))


class TestMechSolve:
    def test_quasistatic_linear_solution(self):
        p = MechanicsParams(k_p=1e6)
        hist = MechHistory.at_rest(0.0)
        lam = mech_solve(hist, 1e-3, lambda x: 60e3, 10e3, p)
        assert lam == pytest.approx(-50e3 / 1e6, rel=1e-12)

    @given(st.floats(0, 1), st.floats(0, 50), st.floats(-1e5, 1e5), st.floats(1e-5, 1e-2))
    def test_residual_vanishes(self, m, sigma, ta, dt):
        p = MechanicsParams(mass=m, sigma=sigma, k_p=1e6, potential="log")
        hist = MechHistory(0.01, 0.0)
        lam = mech_solve(hist, dt, lambda x: ta, 0.0, p)
        assert abs(mech_residual(lam, hist, dt, ta, 0.0, p)) <= 1e-8 * 1e6

    def test_history(self):
        h = MechHistory.at_rest(0.1).push(0.2)
        assert h == (0.2, 0.1)
        assert h.velocity(0.1) == pytest.approx(1.0)

    def test_failure_is_reported(self):
        p = MechanicsParams(potential="log")
        with pytest.raises(SolverError):
            mech_solve(MechHistory.at_rest(0.0), 1e-3, lambda x: 1e12, 0.0, p)
