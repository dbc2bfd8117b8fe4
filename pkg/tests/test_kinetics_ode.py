import math

import numpy as np
import pytest

from rdolab.core import DomainError, Kinetics, Params
from rdolab.kinetics_ode import (
    BlowupInStep,
    KineticState,
    StepTooLarge,
    UnsupportedKinetics,
    dispersion_relation,
    exact_u_step,
    exact_u_step_field,
    kinetic_integrate,
    kinetic_jacobian,
    kinetic_sum_bound,
    steady_states,
)

STD = Params(d=0.0, D=1.0, p=2.0, a=1.0, b=1.0, kappa=3.0)
IDENT = Kinetics("identity")


class TestExactUStep:
    def test_pure_decay_when_f_zero(self):
        out = exact_u_step(1.0, 0.0, p=2.0, a=1.0, tau=1.0)
        assert out == pytest.approx(math.exp(-1.0), rel=1e-14)

    @pytest.mark.parametrize("tau", [0.1, 1.0, 7.0])
    def test_fixed_point(self, tau):
        # u = 1 is stationary for u' = -u + u^2
        assert exact_u_step(1.0, 1.0, p=2.0, a=1.0, tau=tau) == pytest.approx(
            1.0, rel=1e-13
        )

    def test_blowup_carries_exact_interior_time(self):
        with pytest.raises(BlowupInStep) as info:
            exact_u_step(2.0, 1.0, p=2.0, a=1.0, tau=1.0)
        assert info.value.t_star == pytest.approx(math.log(2.0), rel=1e-12)

    def test_zero_is_invariant(self):
        assert exact_u_step(0.0, 5.0, p=3.0, a=0.5, tau=2.0) == 0.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            exact_u_step(-1.0, 1.0, 2.0, 1.0, 0.1)
        with pytest.raises(DomainError):
            exact_u_step(1.0, -1.0, 2.0, 1.0, 0.1)
        with pytest.raises(DomainError):
            exact_u_step(1.0, 1.0, 2.0, 1.0, 0.0)

    def test_a_zero_limit_matches_small_a(self):
        # pure-reaction branch used when the decay is handled spectrally
        ref = exact_u_step(0.8, 0.6, p=2.5, a=1e-9, tau=0.3)
        out = exact_u_step(0.8, 0.6, p=2.5, a=0.0, tau=0.3)
        assert out == pytest.approx(ref, rel=1e-6)

    def test_a_zero_blowup_time(self):
        # u' = u^2: singularity at 1/u0
        with pytest.raises(BlowupInStep) as info:
            exact_u_step(2.0, 1.0, p=2.0, a=0.0, tau=1.0)
        assert info.value.t_star == pytest.approx(0.5, rel=1e-14)

    def test_semigroup_property(self):
        rng = np.random.default_rng(12)
        checked = 0
        while checked < 60:
            u = rng.uniform(0.05, 1.5)
            f_val = rng.uniform(0.0, 0.6)
            p = rng.uniform(1.2, 3.0)
            a = rng.uniform(0.3, 2.0)
            t1, t2 = rng.uniform(0.05, 0.4, 2)
            m = -math.expm1((1 - p) * a * (t1 + t2)) / a
            if u ** (p - 1) * f_val * m > 0.9:
                continue
            direct = exact_u_step(u, f_val, p, a, t1 + t2)
            stepped = exact_u_step(exact_u_step(u, f_val, p, a, t1), f_val, p, a, t2)
            assert stepped == pytest.approx(direct, rel=1e-12)
            checked += 1

    def test_monotone_in_u_and_f(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            p = rng.uniform(1.2, 3.0)
            a = rng.uniform(0.3, 2.0)
            tau = rng.uniform(0.05, 0.3)
            u1, u2 = sorted(rng.uniform(0.05, 1.0, 2))
            f1, f2 = sorted(rng.uniform(0.0, 0.5, 2))
            assert exact_u_step(u1, f1, p, a, tau) <= exact_u_step(u2, f1, p, a, tau) + 1e-15
            assert exact_u_step(u1, f1, p, a, tau) <= exact_u_step(u1, f2, p, a, tau) + 1e-15

    def test_field_version_matches_scalar_and_reports_cell(self):
        u = np.array([0.0, 0.3, 0.9, 0.5])
        f_vals = np.array([1.0, 0.2, 0.4, 0.1])
        out = exact_u_step_field(u, f_vals, p=2.0, a=1.0, tau=0.2)
        for i in range(4):
            assert out[i] == pytest.approx(
                exact_u_step(u[i], f_vals[i], 2.0, 1.0, 0.2), rel=1e-14
            )
        with pytest.raises(BlowupInStep) as info:
            exact_u_step_field(
                np.array([0.5, 4.0, 3.0]), np.array([0.1, 1.0, 1.0]), 2.0, 1.0, 2.0
            )
        assert info.value.cell == 1  # largest u*f blows first
        assert info.value.t_star == pytest.approx(-math.log1p(-1.0 / 4.0), rel=1e-12)


class TestKineticIntegrate:
    def test_origin_invariant_when_kappa_zero(self):
        params = Params(0.0, 1.0, 2.0, 1.0, 1.0, 0.0)
        traj = kinetic_integrate(KineticState(0.0, 0.0, 0.0), params, IDENT, 1.0, 1e-2)
        assert all(s.u_bar == 0.0 and s.v_bar == 0.0 for s in traj)

    def test_u_zero_invariant_v_relaxes_monotonically(self):
        traj = kinetic_integrate(KineticState(0.0, 0.2, 0.0), STD, IDENT, 8.0, 1e-3)
        v = np.array([s.v_bar for s in traj])
        assert all(s.u_bar == 0.0 for s in traj)
        assert np.all(np.diff(v) >= -1e-14)
        assert v[-1] == pytest.approx(STD.kappa / STD.b, abs=1e-3)

    def test_u_zero_matches_linear_closed_form(self):
        v0, b, kappa = 0.5, 1.0, 3.0
        traj = kinetic_integrate(KineticState(0.0, v0, 0.0), STD, IDENT, 2.0, 1e-3)
        end = traj[-1]
        exact = math.exp(-b * end.t) * v0 + (kappa / b) * (1 - math.exp(-b * end.t))
        assert end.v_bar == pytest.approx(exact, rel=1e-10)

    def test_sum_bound_respected(self):
        s0 = KineticState(1.0, 1.0, 0.0)
        traj = kinetic_integrate(s0, STD, IDENT, 10.0, 1e-3)
        bound = kinetic_sum_bound(s0, STD)
        assert bound == 3.0
        sums = np.array([s.u_bar + s.v_bar for s in traj])
        assert np.max(sums) <= bound + 1e-8 * max(1.0, bound)

    def test_lands_exactly_on_t_end(self):
        traj = kinetic_integrate(KineticState(0.1, 0.1, 0.0), STD, IDENT, 0.25, 1e-2)
        assert traj[-1].t == pytest.approx(0.25, abs=1e-12)

    def test_step_too_large_raises(self):
        params = Params(0.0, 1.0, 2.0, 0.1, 1.0, 0.0)
        with pytest.raises(StepTooLarge):
            kinetic_integrate(KineticState(2.0, 2.0, 0.0), params, IDENT, 3.0, 3.0)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            kinetic_integrate(KineticState(0.0, 0.0, 0.0), STD, IDENT, 1.0, 0.0)
        with pytest.raises(DomainError):
            kinetic_integrate(KineticState(0.0, 0.0, 1.0), STD, IDENT, 0.5, 1e-2)


class TestSumBound:
    def test_examples(self):
        assert kinetic_sum_bound(
            KineticState(0.0, 0.0, 0.0), Params(0.0, 1.0, 2.0, 1.0, 1.0, 0.0)
        ) == 0.0
        assert kinetic_sum_bound(KineticState(1.0, 1.0, 0.0), STD) == 3.0
        assert kinetic_sum_bound(
            KineticState(5.0, 5.0, 0.0), Params(0.0, 1.0, 2.0, 2.0, 1.0, 1.0)
        ) == 10.0


class TestSteadyStates:
    def test_three_states_for_kappa_three(self):
        states = steady_states(STD, IDENT)
        kinds = [s.kind for s in states]
        assert kinds == ["trivial", "nontrivial_minus", "nontrivial_plus"]
        triv = states[0]
        assert (triv.u_bar, triv.v_bar) == (0.0, 3.0)
        root5 = math.sqrt(5.0)
        assert states[1].v_bar == pytest.approx((3 - root5) / 2, rel=1e-14)
        assert states[2].v_bar == pytest.approx((3 + root5) / 2, rel=1e-14)
        assert states[1].u_bar == pytest.approx((3 + root5) / 2, rel=1e-12)
        assert states[2].u_bar == pytest.approx((3 - root5) / 2, rel=1e-12)
        for s in states:
            assert s.residual(STD, IDENT) < 1e-12

    def test_subcritical_kappa_only_trivial(self):
        params = Params(0.0, 1.0, 2.0, 1.0, 1.0, 1.0)
        states = steady_states(params, IDENT)
        assert [s.kind for s in states] == ["trivial"]

    def test_degenerate_discriminant_single_root(self):
        params = Params(0.0, 1.0, 2.0, 1.0, 1.0, 2.0)
        states = steady_states(params, IDENT)
        assert len(states) == 2
        merged = states[1]
        assert (merged.u_bar, merged.v_bar) == pytest.approx((1.0, 1.0), rel=1e-14)
        assert merged.residual(params, IDENT) < 1e-12

    def test_power_q1_counts_as_identity(self):
        states = steady_states(STD, Kinetics("power", q=1.0))
        assert len(states) == 3

    def test_unsupported_kinetics(self):
        with pytest.raises(UnsupportedKinetics):
            steady_states(STD, Kinetics("saturating"))
        with pytest.raises(UnsupportedKinetics):
            steady_states(Params(0.0, 1.0, 3.0, 1.0, 1.0, 3.0), IDENT)


class TestDispersion:
    def test_trivial_state_is_linearly_stable(self):
        params = Params(d=0.5, D=1.0, p=2.0, a=1.0, b=1.0, kappa=3.0)
        triv = steady_states(params, IDENT)[0]
        for k, lam in dispersion_relation(triv, params, IDENT, [0.0, 1.0, 10.0, 1e3]):
            expected = max(-params.a - params.d * k**2, -params.b - params.D * k**2)
            assert lam == pytest.approx(expected, rel=1e-12, abs=1e-12)
            assert lam < 0

    def test_autocatalysis_entry_equals_a(self):
        for ss in steady_states(STD, IDENT)[1:]:
            J = kinetic_jacobian(ss.u_bar, ss.v_bar, STD, IDENT)
            assert J[0, 0] == pytest.approx(STD.a, rel=1e-12)

    def test_large_k_limit_approaches_a(self):
        for ss in steady_states(STD, IDENT)[1:]:
            (_, lam), = dispersion_relation(ss, STD, IDENT, [1e3])
            assert abs(lam - STD.a) < 1e-4

    def test_zero_wavenumber_matches_jacobian_eigenvalues(self):
        ss = steady_states(STD, IDENT)[1]
        (_, lam), = dispersion_relation(ss, STD, IDENT, [0.0])
        J = kinetic_jacobian(ss.u_bar, ss.v_bar, STD, IDENT)
        expected = np.max(np.linalg.eigvals(J).real)
        assert lam == pytest.approx(expected, rel=1e-12)

    def test_tail_perturbation_bound_and_monotone_approach(self):
        for ss in steady_states(STD, IDENT)[1:]:
            J = kinetic_jacobian(ss.u_bar, ss.v_bar, STD, IDENT)
            ks = [20.0, 50.0, 100.0, 300.0, 1000.0]
            lams = [lam for _, lam in dispersion_relation(ss, STD, IDENT, ks)]
            for k, lam in zip(ks, lams):
                assert abs(lam - STD.a) < 2 * abs(J[0, 1] * J[1, 0]) / (STD.D * k**2)
            assert np.all(np.diff(lams) > 0)  # eventually increasing toward a
