import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import sici

from pendamp.dynamics import Params
from pendamp import limits
from pendamp.limits import (
    QuadratureError,
    RegimeExit,
    StandstillCapture,
    amplitude_from_energy,
    constant_D,
    cost_functional,
    euler_convergence,
    free_oscillation_period,
    full_turn_time,
    half_swing_time,
    iterate_low_map,
    limit_ode_solve,
    period_integral,
    poincare_high,
    poincare_low,
    swing_progress,
    switching_integrand,
    tau,
    tau_minus,
    tau_plus,
)

D_PAPER = 0.925968526


class TestConstantD:
    def test_reference_value(self):
        q = constant_D(1e-10)
        assert abs(q.value - D_PAPER) <= 1e-8
        assert q.error_estimate <= 1e-10
        assert q.evaluations > 0

    def test_against_sine_integral(self):
        # Independent route: half the sine integral at pi.
        assert constant_D(1e-10).value == pytest.approx(0.5 * float(sici(math.pi)[0]), abs=1e-12)

    def test_integrand_endpoints(self):
        assert switching_integrand(0.0) == 0.5
        assert switching_integrand(math.pi) == pytest.approx(0.0, abs=1e-16)

    def test_tolerance_floor(self):
        with pytest.raises(ValueError):
            constant_D(1e-13)


class TestPendulumTimes:
    def test_half_swing_matches_theta_quadrature(self):
        # Raw endpoint-singular integral via the sin(phi/2) substitution.
        for x in (0.5, 1.5, 2.9):
            m = math.sin(0.5 * x) ** 2
            val = quad(lambda th: math.sqrt(2.0) / math.sqrt(1.0 - m * math.sin(th) ** 2),
                       0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13)[0]
            assert half_swing_time(x) == pytest.approx(val, abs=1e-10)

    def test_free_period_matches_elliptic(self):
        for e in (0.1, 1.0, 1.9):
            a = amplitude_from_energy(e)
            per = free_oscillation_period(e).value
            assert per == pytest.approx(4.0 * half_swing_time(a) / math.sqrt(2.0), abs=1e-9)

    def test_small_oscillation_period(self):
        assert free_oscillation_period(1e-8).value == pytest.approx(2.0 * math.pi, rel=1e-8)


class TestTauMinus:
    def test_linear_oscillator_limit(self):
        e = 1e-4
        ratio = tau_minus(e, 1e-12).value / (math.pi * math.sqrt(e / 2.0))
        assert abs(ratio - 1.0) <= 1e-2

    def test_strictly_increasing(self):
        vals = [tau_minus(e).value for e in (0.5, 1.0, 1.5, 1.9, 2.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_separatrix_value_by_extrapolation(self):
        # Richardson-style oracle: fit a + b*d*log(1/d) + c*d on d = 10^-k.
        ks = (4, 5, 6)
        a_mat = np.array([[1.0, 10.0 ** -k * math.log(10.0 ** k), 10.0 ** -k] for k in ks])
        rhs = np.array([tau_minus(2.0 - 10.0 ** -k, 1e-10).value for k in ks])
        coef, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
        assert tau_minus(2.0, 1e-10).value == pytest.approx(coef[0], abs=1e-4)

    def test_domain(self):
        with pytest.raises(ValueError):
            tau_minus(0.0)
        with pytest.raises(ValueError):
            tau_minus(2.0 + 1e-12)


class TestTauPlus:
    def test_zero_at_separatrix(self):
        q = tau_plus(2.0)
        assert q.value == 0.0

    def test_strictly_increasing(self):
        vals = [tau_plus(e).value for e in (2.5, 3.0, 4.0, 8.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_large_energy_turn_time(self):
        e = 200.0
        assert full_turn_time(e) == pytest.approx(2.0 * math.pi / math.sqrt(2.0 * e), rel=0.02)

    def test_domain(self):
        with pytest.raises(ValueError):
            tau_plus(1.9)


class TestTau:
    def test_branch_selection(self):
        assert tau(1.0).value == tau_minus(1.0).value
        assert tau(3.0).value == pytest.approx(
            tau_plus(3.0).value + tau_minus(2.0).value, abs=1e-12)

    def test_continuity_at_separatrix(self):
        t2 = tau(2.0).value
        assert tau(2.0 + 1e-8).value == pytest.approx(t2, abs=1e-6)
        assert tau(2.0 - 1e-8).value == pytest.approx(t2, abs=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            tau(0.0)


class TestPeriodIntegral:
    def test_log_growth_band(self):
        ratios = [period_integral(h, 1e-9).value / math.log(1.0 / h)
                  for h in (1e-2, 1e-4, 1e-6, 1e-8)]
        assert all(r <= 6.0 for r in ratios)
        # the bounded part shrinks relative to the log: ratios decrease
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))

    def test_h_one_bounds(self):
        v = period_integral(1.0, 1e-10).value
        assert 2.0 * math.pi / math.sqrt(3.0) <= v <= 2.0 * math.pi

    def test_symmetry_about_pi(self):
        h = 1e-2

        def f(s):
            return abs(math.cos(s) + 1.0 + h) ** -0.5

        left = quad(f, 0.0, math.pi, points=[math.pi * 0.999], limit=200)[0]
        right = quad(f, math.pi, 2.0 * math.pi, points=[math.pi * 1.001], limit=200)[0]
        assert left == pytest.approx(right, abs=1e-10)

    def test_negative_h_has_integrable_zeros(self):
        v = period_integral(-0.5, 1e-9).value
        assert math.isfinite(v) and v > 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            period_integral(0.0)
        with pytest.raises(ValueError):
            period_integral(1.5)


class TestPoincareMaps:
    def test_high_map_closed_form(self):
        p = Params(0.1)
        assert poincare_high(3.0, p) == pytest.approx(math.sqrt(9.0 - 0.4 * math.pi), abs=1e-12)
        assert poincare_high(-3.0, p) == pytest.approx(-math.sqrt(9.0 - 0.4 * math.pi), abs=1e-12)

    def test_high_map_regime_exit(self):
        with pytest.raises(RegimeExit):
            poincare_high(1.0, Params(0.1))

    def test_low_map_fixed_point_limit(self):
        x = 2.0
        assert poincare_low(x, Params(1e-7)) == pytest.approx(x, abs=1e-5)

    def test_low_map_linearized_step(self):
        x, eps = 2.0, 1e-3
        xp = poincare_low(x, Params(eps))
        assert 0.0 < xp < x
        lin = 2.0 * eps * x / math.sin(x)
        assert (x - xp) == pytest.approx(lin, rel=0.05)

    def test_low_map_residual(self):
        x, eps = 2.4, 0.05
        xp = poincare_low(x, Params(eps))
        assert abs(math.cos(xp) - math.cos(x) - eps * (x + xp)) <= 1e-11

    def test_iterate_count_vs_quadrature(self):
        eps, x0 = 1e-3, 3.0
        xs = iterate_low_map(x0, Params(eps))
        count = len(xs) - 1
        target = swing_progress(x0) / eps
        assert count == pytest.approx(target, rel=0.05)

    def test_capture_signal(self):
        with pytest.raises(StandstillCapture):
            poincare_low(0.0015, Params(1e-3))

    def test_domain(self):
        with pytest.raises(ValueError):
            poincare_low(math.pi, Params(0.1))


class TestLimitOde:
    def test_low_zone_full_descent_time_is_D(self):
        path = limit_ode_solve("low", math.pi, [(-1.0, None)])
        assert abs(path.total_time - constant_D(1e-11).value) <= 1e-10
        assert path.values[-1] == 0.0

    def test_high_zone_closed_form(self):
        path = limit_ode_solve("high", 2.0, [(-1.0, None)])
        assert path.total_time == pytest.approx(1.0 / math.pi, abs=1e-12)

    def test_zero_control_is_constant(self):
        path = limit_ode_solve("low", 1.0, [(0.0, 2.0)])
        assert all(v == 1.0 for v in path.values)

    def test_control_bound(self):
        with pytest.raises(ValueError):
            limit_ode_solve("low", 1.0, [(1.5, 1.0)])

    def test_domain(self):
        with pytest.raises(ValueError):
            limit_ode_solve("low", 4.0, [(-1.0, None)])
        with pytest.raises(ValueError):
            limit_ode_solve("high", -1.0, [(-1.0, None)])

    def test_integral_identity_along_path(self):
        # cos X(s) - cos X(t) = 2 * integral_s^t X U dsigma on a mixed profile.
        path = limit_ode_solve("low", 2.8, [(-1.0, 0.3), (0.0, 0.2), (-0.5, 0.4)])
        for s, t in ((0.0, 0.25), (0.1, 0.62), (0.35, 0.9)):
            lhs = math.cos(path.value_at(s)) - math.cos(path.value_at(t))
            rhs = 2.0 * quad(lambda sg: path.value_at(sg) * path.control_at(sg),
                             s, t, epsabs=1e-11, epsrel=1e-11, limit=200)[0]
            assert lhs == pytest.approx(rhs, abs=1e-8)


class TestCostFunctionals:
    def test_zero_length_path(self):
        path = limit_ode_solve("low", 1.0, [(0.0, 0.0)])
        assert cost_functional(path).value == 0.0

    def test_low_normalization_against_tau_minus(self):
        # dt = (sin X / 2X) dX under U = -1 gives J- = tau_minus(E)/sqrt(2).
        for e in (0.8, 1.5, 1.999):
            x0 = amplitude_from_energy(e)
            path = limit_ode_solve("low", x0, [(-1.0, None)])
            j = cost_functional(path, 1e-10).value
            assert j * math.sqrt(2.0) == pytest.approx(tau_minus(e, 1e-10).value, rel=1e-8)

    def test_high_normalization_against_tau_plus(self):
        for e in (3.0, 5.0):
            y0 = math.sqrt(2.0 * (e - 2.0))
            path = limit_ode_solve("high", y0, [(-1.0, None)])
            j = cost_functional(path, 1e-10).value
            assert j == pytest.approx(math.sqrt(2.0) * tau_plus(e, 1e-10).value, rel=1e-8)

    def test_monotone_in_path_length(self):
        short = limit_ode_solve("low", 2.0, [(-1.0, 0.2)])
        longer = limit_ode_solve("low", 2.0, [(-1.0, 0.4)])
        assert cost_functional(longer).value > cost_functional(short).value


class TestEulerConvergence:
    def test_first_order_ratios(self):
        rows = euler_convergence(3.0, [0.02, 0.01, 0.005, 0.0025])
        for row in rows[1:]:
            assert row.ratio_vs_previous is not None
            assert row.ratio_vs_previous <= 0.75
        sups = [r.sup_error for r in rows]
        assert all(a > b for a, b in zip(sups, sups[1:]))
        assert sups[-1] < 0.02

    def test_small_amplitude_errors_vanish(self):
        rows = euler_convergence(0.05, [0.005, 0.0025])
        assert all(r.sup_error < 1e-6 for r in rows)

    def test_domain(self):
        with pytest.raises(ValueError):
            euler_convergence(3.5, [0.01])


class TestRiemannSumBound:
    def test_log_riemann_bound_on_high_iterates(self):
        # Reduced energies h_n from the exact high-zone map, step 2 pi eps.
        eps = 0.01
        p = Params(eps)
        y = 3.0
        hs = [0.5 * y * y]  # h = E - 2 and E = y^2/2 + 2 on the section x = pi
        while True:
            try:
                y = poincare_high(y, p)
            except RegimeExit:
                break
            hs.append(0.5 * y * y)
        total = 0.0
        for a, b in zip(hs, hs[1:]):
            if a <= 1.0:
                step = (a - b) * math.log(1.0 / a)
                exact = quad(lambda x: math.log(1.0 / x), b, a)[0]
                assert step <= exact + 1e-12
                total += step
        assert total <= 1.0 + 2.0 * math.pi * eps * math.log(1.0 / min(hs))


class TestPoincareIterates:
    def test_low_zone_orbit_with_times(self):
        from pendamp.limits import poincare_iterates
        eps = 0.1
        it = poincare_iterates("low", 2.8, Params(eps))
        assert it.zone == "low"
        assert len(it.times) == len(it.values) - 1
        # energies strictly decrease, reduced energies h = 2 - E increase
        assert all(a > b for a, b in zip(it.energies, it.energies[1:]))
        assert all(a < b for a, b in zip(it.reduced, it.reduced[1:]))
        assert it.values == tuple(iterate_low_map(2.8, Params(eps)))

    def test_low_step_times_match_simulation(self):
        # Independent route: the closed-loop integrator's rest-to-rest times.
        from pendamp.limits import poincare_iterates
        from pendamp.quasiopt import simulate_damping
        from pendamp.dynamics import PhaseState
        eps = 0.1
        it = poincare_iterates("low", 2.8, Params(eps))
        res = simulate_damping(PhaseState(-2.8, 0.0), Params(eps), keep_samples=False)
        sim_times = [b - a for (a, _), (b, _) in zip(res.rest_amplitudes,
                                                     res.rest_amplitudes[1:])]
        for quad_t, sim_t in zip(it.times, sim_times):
            assert quad_t == pytest.approx(sim_t, abs=1e-6)

    def test_high_zone_orbit_with_times(self):
        from pendamp.limits import poincare_iterates
        from pendamp.quasiopt import simulate_damping
        from pendamp.dynamics import PhaseState
        eps = 0.05
        it = poincare_iterates("high", 3.0, Params(eps))
        assert len(it.values) >= 3
        assert all(a > b for a, b in zip(it.values, it.values[1:]))
        assert all(a > b for a, b in zip(it.reduced, it.reduced[1:]))
        # turn times against the simulated section-crossing instants
        res = simulate_damping(PhaseState(math.pi, 3.0), Params(eps), keep_samples=False)
        crossings = [t for t, _ in res.section_speeds]
        sim_times = [crossings[0]] + [b - a for a, b in zip(crossings, crossings[1:])]
        for quad_t, sim_t in zip(it.times, sim_times):
            assert quad_t == pytest.approx(sim_t, abs=1e-6)

    def test_domain(self):
        from pendamp.limits import poincare_iterates
        with pytest.raises(ValueError):
            poincare_iterates("sideways", 1.0, Params(0.1))
        with pytest.raises(ValueError):
            poincare_iterates("high", -1.0, Params(0.1))


def test_tau_strictly_increasing_across_branches():
    vals = [tau(e).value for e in (0.5, 1.0, 1.999, 2.0, 2.3, 3.0, 5.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_full_speed_profile_minimizes_cost():
    # U = -1 beats slower admissible profiles for the same descent (the
    # integrand is positive and pointwise identical along the same path).
    x0 = 2.5
    fast = cost_functional(limit_ode_solve("low", x0, [(-1.0, None)])).value
    slow = cost_functional(limit_ode_solve("low", x0, [(-0.5, None)])).value
    mixed = cost_functional(limit_ode_solve("low", x0, [(0.0, 0.5), (-1.0, None)])).value
    assert fast < slow
    assert fast < mixed
