import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from activemech.core import MinimalModel, stiffness_fd
from activemech.models import MODEL_IDS, REGISTRY, build_model
from activemech.models.l17 import CA_TRPN_FLOOR, L17Model, L17Params, gamma_su, gamma_wu, length_factor
from activemech.models.nhs06 import NHS06Model, NHS06Params, velocity_function, velocity_function_prime
from activemech.models.rdq20 import (
    N_PI,
    RDQ20Model,
    RDQ20Params,
    default_rate_tables,
    flux_rates,
    mean_field_transfer,
    permissivity,
    pi_rhs,
    single_overlap_ratio,
)
from activemech.solvers import SolverError, newton

lam_st = st.floats(-0.15, 0.15)
ca_st = st.floats(0.05, 2.0)


def unit_simplex(draw, n):
    w = np.array(draw(st.lists(st.floats(1e-3, 1.0), min_size=n, max_size=n)))
    return w / w.sum()


@st.composite
def nhs06_states(draw):
    c = draw(st.floats(0.0, 70.0))
    z = draw(st.floats(0.0, 1.0))
    q = draw(st.lists(st.floats(-0.05, 0.05), min_size=3, max_size=3))
    return np.array([c, z, *q])


@st.composite
def l17_states(draw):
    bwsu = unit_simplex(draw, 4)
    c = draw(st.floats(0.01, 1.0))
    zw, zs = draw(st.floats(-0.05, 0.05)), draw(st.floats(-0.05, 0.05))
    return np.array([c, bwsu[0], bwsu[1], bwsu[2], zw, zs])


@st.composite
def rdq20_states(draw):
    pi = unit_simplex(draw, N_PI)
    m0 = draw(st.lists(st.floats(0.0, 0.3), min_size=2, max_size=2))
    m1 = draw(st.lists(st.floats(-0.01, 0.01), min_size=2, max_size=2))
    return np.concatenate((pi, m0, m1))


def assert_stiffness_matches(model, r, ca, lam, lam_dot, floor):
    ka = model.stiffness(r, lam)
    fd = stiffness_fd(model, r, ca, lam, lam_dot)
    assert abs(fd - ka) <= 1e-5 * abs(ka) + floor, (ka, fd)


class TestRegistry:
    def test_ids(self):
        assert MODEL_IDS == ("MDM", "NHS06", "L17", "RDQ20-MF")

    @pytest.mark.parametrize("model_id", MODEL_IDS)
    def test_build_with_shipped_params(self, model_id):
        m = build_model(model_id)
        assert m.name == model_id
        assert m.params == REGISTRY[model_id][1]()
        assert len(m.initial_state()) == m.n_state

    def test_unknown(self):
        with pytest.raises(KeyError):
            build_model("H57")

    def test_stepper_choice(self):
        assert build_model("L17", stepper="semimplicit").stepper == "semimplicit"
        with pytest.raises(ValueError):
            build_model("NHS06", stepper="semimplicit")
        with pytest.raises(ValueError):
            L17Model(stepper="explicit")


class TestInactiveStates:
    @pytest.mark.parametrize("model_id", MODEL_IDS)
    @pytest.mark.parametrize("lam", [-0.1, 0.0, 0.1])
    def test_zero_tension_without_crossbridges(self, model_id, lam):
        m = build_model(model_id)
        r = m.initial_state()
        assert m.tension(r, lam) == 0.0
        assert m.stiffness(r, lam) == 0.0


class TestNHS06:
    model = NHS06Model()

    def test_velocity_function_continuous_at_zero(self):
        a = self.model.params.a_curv
        assert velocity_function(0.0, a) == 1.0
        assert velocity_function(1e-12, a) == pytest.approx(1.0, abs=1e-11)
        assert velocity_function(-1e-12, a) == pytest.approx(1.0, abs=1e-11)

    @given(st.floats(-5, 5).filter(lambda q: abs(q) > 1e-3))
    def test_kprime_matches_fd_on_both_branches(self, q):
        a = self.model.params.a_curv
        fd = [(velocity_function(q + d, a) - velocity_function(q - d, a)) / (2 * d) for d in (1e-3, 5e-4)]
        exact = velocity_function_prime(q, a)
        # central-difference error shrinks by 4 when delta halves
        e1, e2 = abs(fd[0] - exact), abs(fd[1] - exact)
        assert e1 <= 1e-5 and e2 <= e1 / 3.0 + 1e-12

    def test_kprime_continuous_at_zero(self):
        a = self.model.params.a_curv
        assert velocity_function_prime(1e-12, a) == pytest.approx(velocity_function_prime(-1e-12, a))

    def test_k1_k2_linearise_relaxation(self):
        p = self.model.params
        f = lambda z: p.alpha_r2 * z**p.n_rel / (z**p.n_rel + p.k_z**p.n_rel)
        zp = p.z_p
        assert p.k1 == pytest.approx((f(zp + 1e-6) - f(zp - 1e-6)) / 2e-6, rel=1e-7)
        assert p.k2 == pytest.approx(f(zp) - p.k1 * zp, rel=1e-9)

    @given(nhs06_states(), ca_st, lam_st, st.floats(-2, 2))
    def test_stiffness_oracle(self, r, ca, lam, v):
        assert_stiffness_matches(self.model, r, ca, lam, v, floor=1e-3)

    def test_fixed_point_preserved(self):
        m, r = self.model, self.model.initial_state()
        for _ in range(4000):
            r = m.step(r, 0.1, 0.0, 0.0, 1e-2)
        r2 = m.step(r, 0.1, 0.0, 0.0, 1e-2)
        np.testing.assert_allclose(r2, r, rtol=1e-9, atol=1e-12)

    def test_step_solves_residual(self):
        m = self.model
        r = np.array([10.0, 0.2, 0.01, -0.01, 0.0])
        r1 = m.step(r, 1.0, 0.05, -0.5, 1e-3)
        assert np.max(np.abs(m.step_residual(r1, r, 1.0, 0.05, -0.5, 1e-3))) < 1e-9

    def test_imex_consistency(self):
        r = np.array([10.0, 0.2, 0.01, -0.01, 0.0])
        np.testing.assert_array_equal(self.model.rhs_split(r, r, 1.0, 0.0, 0.3), self.model.rhs(r, 1.0, 0.0, 0.3))


class TestL17:
    @pytest.mark.parametrize("stepper", ["implicit", "semimplicit"])
    def test_imex_consistency(self, stepper):
        m = L17Model(stepper=stepper)
        r = np.array([0.3, 0.4, 0.1, 0.2, 0.01, -0.02])
        np.testing.assert_array_equal(m.rhs_split(r, r, 0.8, 0.05, 0.4), m.rhs(r, 0.8, 0.05, 0.4))

    def test_derived_constants(self):
        p = L17Params()
        rs, rw = p.r_s, p.r_w
        # steady-state fractions r_s, r_w are reproduced by the derived rates
        assert p.k_ws * rw * (1 - rs) == pytest.approx(p.k_su * rs + p.k_ws * rw * (1 - rs) - p.k_su * rs)
        assert p.k_su == pytest.approx(p.k_ws * rw * (1 / rs - 1))
        assert p.a_w == p.a_s
        explicit = dataclasses.replace(p, k_su=1.0)
        assert explicit.k_su == 1.0

    @given(l17_states(), ca_st, lam_st, st.floats(-2, 2))
    def test_stiffness_oracle(self, r, ca, lam, v):
        assert_stiffness_matches(L17Model(), r, ca, lam, v, floor=1e-3)

    def test_unbound_fraction_is_derived(self):
        m = L17Model()
        assert "u" not in m.state_names
        r = m.initial_state()
        for _ in range(200):
            r = m.step(r, 1.0, 0.0, 0.0, 1e-3)
            b, w, s = r[1:4]
            assert 1.0 - b - w - s >= -1e-12

    @pytest.mark.parametrize("stepper", ["implicit", "semimplicit"])
    def test_fixed_point_preserved(self, stepper):
        m = L17Model(stepper=stepper)
        r = m.initial_state()
        for _ in range(3000):
            r = m.step(r, 0.5, 0.0, 0.0, 1e-2)
        np.testing.assert_allclose(m.step(r, 0.5, 0.0, 0.0, 1e-2), r, rtol=1e-8, atol=1e-12)

    def test_ca_trpn_floor(self):
        m = L17Model()
        with pytest.raises(FloatingPointError):
            m._site_rhs(0.5, 0.0, 0.0, CA_TRPN_FLOOR, 0.0, 0.0)

    def test_helpers(self):
        assert gamma_wu(-0.2, 10.0) == pytest.approx(2.0)
        assert gamma_su(-0.5, 8.0) == 0.0
        assert gamma_su(0.5, 8.0) == pytest.approx(4.0)
        assert gamma_su(-1.5, 8.0) == pytest.approx(4.0)
        assert length_factor(0.0, 2.3) == pytest.approx(1.0)
        assert length_factor(-0.2, 2.3) == pytest.approx(1.0 + 2.3 * (0.8 + 0.8 - 1.87))
        assert length_factor(-0.9, 2.3) == 0.0
        assert length_factor(0.5, 2.3) == length_factor(0.2, 2.3)

    def test_ca50_saturates(self):
        m = L17Model()
        assert m.ca50(0.3) == m.ca50(0.2)


class TestRDQ20:
    model = RDQ20Model()

    def test_overlap_continuous_and_bounded(self):
        p = self.model.params
        for x in (p.la, p.lm, 2 * p.la - p.lb, 2 * p.la + p.lb, 2 * p.la + p.lm):
            lo, hi = single_overlap_ratio(x - 1e-12, p), single_overlap_ratio(x + 1e-12, p)
            assert lo == pytest.approx(hi, abs=1e-9)
        for sl in np.linspace(1.0, 4.5, 200):
            assert 0.0 <= single_overlap_ratio(sl, p) <= 1.0
        assert single_overlap_ratio(2.2, p) == 0.5 * (2.2 + p.lm - 2 * p.la) / (0.5 * (p.lm - p.lb))

    @given(rdq20_states(), ca_st, lam_st)
    def test_stiffness_oracle(self, r, ca, lam):
        assert_stiffness_matches(self.model, r, ca, lam, 0.0, floor=1e-3)

    @given(rdq20_states(), lam_st, lam_st)
    def test_tension_stiffness_ratio_independent_of_lambda(self, r, lam1, lam2):
        m = self.model
        if m.stiffness(r, lam1) == 0 or m.stiffness(r, lam2) == 0:
            return
        q1 = m.tension(r, lam1) / m.stiffness(r, lam1)
        q2 = m.tension(r, lam2) / m.stiffness(r, lam2)
        assert q1 == pytest.approx(q2, rel=1e-12)

    @given(rdq20_states(), ca_st, lam_st)
    def test_probability_flux_conserves_mass(self, r, ca, lam):
        k_t, k_c = default_rate_tables(ca, lam, self.model.params)
        assert abs(pi_rhs(r[:N_PI], k_t, k_c).sum()) < 1e-10

    @given(rdq20_states(), ca_st, lam_st, st.floats(1e-4, 5e-3))
    def test_explicit_update_keeps_simplex(self, r, ca, lam, dt):
        pi = self.model.advance_pi(r[:N_PI], ca, lam, dt)
        assert abs(pi.sum() - 1.0) <= 1e-12
        assert np.all(pi >= 0)

    def test_empty_population_has_zero_rates(self):
        pi = np.zeros(N_PI)
        pi[0] = 1.0
        k_t, _ = default_rate_tables(0.3, 0.0, self.model.params)
        k_left, k_right = flux_rates(pi, k_t)
        assert k_left[1].tolist() == [0.0, 0.0]
        perm, k_np, k_pn = mean_field_transfer(pi, k_t)
        assert perm == 0.0 and k_pn == 0.0 and k_np > 0

    def test_permissivity(self):
        pi = np.full(N_PI, 1 / N_PI)
        assert permissivity(pi) == pytest.approx(0.5)

    def test_imex_consistency(self):
        r = self.model.initial_state()
        r[N_PI:] = [0.01, 0.02, 1e-4, -1e-4]
        np.testing.assert_array_equal(self.model.rhs_split(r, r, 0.5, 0.0, 0.1), self.model.rhs(r, 0.5, 0.0, 0.1))

    def test_step_solves_residual(self):
        m = RDQ20Model()
        r = m.initial_state()
        for _ in range(50):
            r = m.step(r, 1.0, 0.0, 0.0, 1e-3)
        r1 = m.step(r, 1.0, 0.02, -0.3, 1e-3)
        assert np.max(np.abs(m.step_residual(r1, r, 1.0, 0.02, -0.3, 1e-3))) < 1e-13

    def test_activation_raises_tension(self):
        m = RDQ20Model()
        r = m.initial_state()
        for _ in range(500):
            r = m.step(r, 1.0, 0.0, 0.0, 1e-3)
        assert m.tension(r, 0.0) > 10e3

    def test_rejects_nonpositive_kd(self):
        p = dataclasses.replace(RDQ20Params(), kd0=0.0)
        with pytest.raises(FloatingPointError):
            default_rate_tables(0.3, 0.0, p)


class TestNewton:
    def test_reports_iterations_and_residual(self):
        with pytest.raises(SolverError) as err:
            newton(lambda x: np.array([x[0] ** 2 + 1.0]), np.array([0.5]), max_iter=5)
        assert err.value.iterations >= 1
        assert "iterations=" in str(err.value) and "residual=" in str(err.value)

    def test_solves_small_system(self):
        x, info = newton(lambda x: np.array([x[0] ** 2 - 2.0, x[1] - x[0]]), np.array([1.0, 0.0]))
        assert x[0] == pytest.approx(np.sqrt(2.0), rel=1e-12)
        assert info.iterations < 10

    def test_minimal_model_is_registered(self):
        assert isinstance(build_model("MDM"), MinimalModel)
