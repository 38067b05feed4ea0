"""Quadratures and limit systems for the small-control asymptotics.

Contents:

* the switching-count constant  D = integral_0^pi sin(x)/(2x) dx,
* scaled damping-time limits tau_minus / tau_plus / tau,
* the logarithmic bound integral for the near-separatrix period,
* exact one-step Poincare maps of the dry-friction flow (high and low zone),
* the averaged control systems  (sin X / 2X) X' = U  and  Y Y' = 2 pi U,
  solved by closed-form separation on constant-control pieces,
* per-oscillation cost functionals along averaged paths,
* convergence tables for the broken-line iterates of the low-zone map.

Inner pendulum-time integrals are evaluated after the classical substitution
sin(phi/2) = sin(x/2) sin(theta), which removes the inverse-square-root
endpoint singularity exactly; the resulting complete elliptic integral is
evaluated with scipy.special.ellipk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ellipk, sici

from .dynamics import Params

TWO_PI = 2.0 * math.pi
D_REFERENCE = 0.925968526  # published value of the switching-count constant


class QuadratureError(Exception):
    """Requested quadrature tolerance could not be certified."""


class StandstillCapture(Exception):
    """Low-zone Poincare step has no root: the iterate dies in the zone."""


class RegimeExit(Exception):
    """High-zone Poincare step is undefined: energy left the rotation regime."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def _quad(f, a, b, tol, points=None, limit=200) -> QuadratureResult:
    # Request an order tighter than certified: QUADPACK's estimate for
    # endpoint-singular integrands hovers just above the requested accuracy.
    req = max(tol / 100.0, 1e-13)
    val, err, info = quad(f, a, b, epsabs=req, epsrel=req, limit=limit,
                          points=points, full_output=True)[:3]
    if err > max(tol, 10.0 * abs(val) * 1e-15):
        raise QuadratureError(f"error estimate {err:.3e} above tolerance {tol:.3e}")
    return QuadratureResult(val, err, info["neval"])


def switching_integrand(x: float) -> float:
    """sin(x)/(2x), extended by its limit 1/2 at x = 0."""
    if x == 0.0:
        return 0.5
    return math.sin(x) / (2.0 * x)


def constant_D(tol: float = 1e-10) -> QuadratureResult:
    """The switching-count constant integral_0^pi sin(x)/(2x) dx by adaptive
    quadrature (equals half the sine integral at pi)."""
    if tol < 1e-12:
        raise ValueError("tolerance below 1e-12 is not certifiable here")
    return _quad(switching_integrand, 0.0, math.pi, tol)


def swing_progress(x: float) -> float:
    """G(x) = integral_0^x sin(s)/(2s) ds = Si(x)/2.

    The natural time variable of the low-zone averaged system: under control
    U = -1 the amplitude X(t) satisfies G(X(t)) = G(X(0)) - t.
    """
    if x < 0.0:
        raise ValueError(f"amplitude {x} must be nonnegative")
    return 0.5 * float(sici(x)[0])


def _invert_progress(g: float) -> float:
    """Inverse of swing_progress on [0, pi]."""
    if g <= 0.0:
        return 0.0
    g_max = swing_progress(math.pi)
    if g >= g_max:
        return math.pi
    return brentq(lambda x: swing_progress(x) - g, 0.0, math.pi, xtol=1e-14, rtol=8.9e-16)


def amplitude_from_energy(E: float) -> float:
    """Oscillation amplitude Phi in [0, pi] with 1 - cos(Phi) = E, for E in [0, 2]."""
    if not 0.0 <= E <= 2.0:
        raise ValueError(f"energy {E} outside the oscillation range [0, 2]")
    return math.acos(1.0 - E)


def half_swing_time(x: float) -> float:
    """integral_0^x dphi / sqrt(cos(phi) - cos(x)) = sqrt(2) K(sin^2(x/2)).

    sqrt(2) times the free-pendulum quarter period at rest amplitude x.
    """
    if not 0.0 <= x < math.pi:
        raise ValueError(f"amplitude {x} outside [0, pi)")
    return math.sqrt(2.0) * float(ellipk(math.sin(0.5 * x) ** 2))


def free_oscillation_period(E: float, tol: float = 1e-11) -> QuadratureResult:
    """Free pendulum period at energy E < 2 by direct quadrature.

    Uses the desingularized form 4 * integral_0^{pi/2}
    (1 - sin^2(a/2) sin^2(theta))^(-1/2) dtheta, independent of both the ODE
    integrator and the ellipk-based routes, so it can serve as an oracle.
    """
    if not 0.0 < E < 2.0:
        raise ValueError(f"energy {E} outside (0, 2)")
    m = math.sin(0.5 * amplitude_from_energy(E)) ** 2

    def f(theta):
        return 4.0 / math.sqrt(1.0 - m * math.sin(theta) ** 2)

    return _quad(f, 0.0, 0.5 * math.pi, tol)


def tau_minus(E: float, tol: float = 1e-9) -> QuadratureResult:
    """Scaled low-zone damping-time limit.

    tau_minus(E) = (1/sqrt 2) integral_0^Phi (sin x / x)
                   [integral_0^x (cos phi - cos x)^(-1/2) dphi] dx
                 = integral_0^Phi (sin x / x) K(sin^2(x/2)) dx,
    with 1 - cos(Phi) = E.  At E = 2 the inner integral diverges
    logarithmically at x = pi while sin(x)/x vanishes linearly, so the
    integrand extends continuously by 0 and the integral stays proper.
    """
    if not 0.0 < E <= 2.0:
        raise ValueError(f"energy {E} outside (0, 2]")
    phi = amplitude_from_energy(E)

    def f(x):
        if x <= 0.0:
            return 0.5 * math.pi
        if x >= math.pi:
            return 0.0
        return (math.sin(x) / x) * float(ellipk(math.sin(0.5 * x) ** 2))

    return _quad(f, 0.0, phi, tol, limit=400)


def full_turn_time(E: float) -> float:
    """Time of one full rotation at energy E > 2:
    (1/sqrt 2) integral_0^{2pi} (E - 1 - cos phi)^(-1/2) dphi
    = 2 sqrt(2) K(2/E) / sqrt(E)."""
    if E <= 2.0:
        raise ValueError(f"energy {E} not in the rotation regime (> 2)")
    return 2.0 * math.sqrt(2.0) * float(ellipk(2.0 / E)) / math.sqrt(E)


def tau_plus(E: float, tol: float = 1e-9) -> QuadratureResult:
    """Scaled high-zone damping-time limit.

    tau_plus(E) = 1/(2 sqrt(2) pi) * integral_2^E de *
                  integral_0^{2pi} (e - 1 - cos phi)^(-1/2) dphi.
    The inner integral equals 4 K(2/e)/sqrt(e), log-divergent as e -> 2+ and
    integrable in the outer variable.
    """
    if E < 2.0:
        raise ValueError(f"energy {E} below the separatrix")
    if E == 2.0:
        return QuadratureResult(0.0, 0.0, 0)

    def f(e):
        return full_turn_time(e) / (2.0 * math.pi)

    return _quad(f, 2.0, E, tol, limit=400)


def tau(E: float, tol: float = 1e-9) -> QuadratureResult:
    """Piecewise damping-time limit: tau_minus below the separatrix,
    tau_plus(E) + tau_minus(2) above it; continuous at E = 2."""
    if E <= 0.0:
        raise ValueError(f"energy must be positive, got {E}")
    if E <= 2.0:
        return tau_minus(E, tol)
    lo = tau_minus(2.0, tol)
    hi = tau_plus(E, tol)
    return QuadratureResult(lo.value + hi.value, lo.error_estimate + hi.error_estimate,
                            lo.evaluations + hi.evaluations)


def period_integral(h: float, tol: float = 1e-9) -> QuadratureResult:
    """integral_0^{2pi} |cos s + 1 + h|^(-1/2) ds, the near-separatrix period
    bound; grows like O(log 1/|h|) as h -> 0.

    For h < 0 the integrand has two integrable inverse-square-root
    singularities at the genuine zeros of cos s + 1 + h; for h > 0 only the
    near-singular point s = pi needs a panel break.
    """
    if h == 0.0:
        raise ValueError("h = 0 diverges")
    if abs(h) > 1.0:
        raise ValueError(f"|h| = {abs(h)} outside (0, 1]")

    def f(s):
        v = abs(math.cos(s) + 1.0 + h)
        if v == 0.0:
            return 0.0
        return v ** -0.5

    if h > 0.0:
        pts = [math.pi]
    else:
        s0 = math.acos(-1.0 - h)
        pts = [s0, math.pi, TWO_PI - s0]
    return _quad(f, 0.0, TWO_PI, tol, points=pts, limit=400)


def poincare_high(y: float, p: Params) -> float:
    """Exact crossing-speed map of the dry-friction flow on the section
    x = pi (mod 2pi):  y'^2/2 = y^2/2 - 2 pi eps, sign preserved."""
    if y * y <= 4.0 * math.pi * p.epsilon:
        raise RegimeExit(f"speed {y} cannot complete another turn at eps={p.epsilon}")
    return math.copysign(math.sqrt(y * y - 4.0 * math.pi * p.epsilon), y)


def poincare_low(x: float, p: Params) -> float:
    """Exact amplitude map of the dry-friction flow on the section y = 0.

    Solves cos(x') - cos(x) = eps (x + x') for the next rest amplitude
    x' in (0, x).  Raises StandstillCapture when no root exists: the swing
    cannot clear the bottom any more.
    """
    if not 0.0 < x < math.pi:
        raise ValueError(f"amplitude {x} outside (0, pi)")
    eps = p.epsilon

    def g(xp):
        return math.cos(xp) - math.cos(x) - eps * (x + xp)

    if g(0.0) <= 0.0:
        raise StandstillCapture(f"amplitude {x} captured at eps={eps}")
    # g is strictly decreasing on (0, x): the bracketed root is unique.
    return brentq(g, 0.0, x, xtol=1e-12, rtol=8.9e-16)


@dataclass(frozen=True)
class PoincareIterates:
    """Orbit of a dry-friction section map with exact per-step times.

    ``values`` holds rest amplitudes x_n (low zone, section y = 0) or section
    speeds y_n (high zone, section x = pi mod 2pi); ``reduced`` holds 2 - E_n
    in the low zone and E_n - 2 in the high zone.  ``times`` has one entry per
    map step, computed by quadrature of the tilted-potential motion.
    """

    zone: str
    values: tuple[float, ...]
    energies: tuple[float, ...]
    reduced: tuple[float, ...]
    times: tuple[float, ...]


def _low_step_time(x: float, x_next: float, eps: float, tol: float) -> float:
    """Duration of one half-swing from rest at -x to rest at x_next under
    u = -sign(y): integral of ds/|y| with
    y^2 = 2 (cos s - cos x - eps (s + x))."""

    def f(s):
        v = 2.0 * (math.cos(s) - math.cos(x) - eps * (s + x))
        if v <= 0.0:
            return 0.0
        return v ** -0.5

    return _quad(f, -x, x_next, tol, limit=400).value


def _high_step_time(y: float, eps: float, tol: float) -> float:
    """Duration of one full turn from the section x = pi at speed y > 0 under
    u = -1: integral of ds/|y(s)| with
    y(s)^2 = y^2 + 2 (1 + cos s) + 2 eps (pi - s)."""

    def f(s):
        v = y * y + 2.0 * (1.0 + math.cos(s)) + 2.0 * eps * (math.pi - s)
        return v ** -0.5

    return _quad(f, math.pi, 3.0 * math.pi, tol, limit=400).value


def poincare_iterates(zone: str, start: float, p: Params,
                      max_steps: int = 100_000, tol: float = 1e-10) -> PoincareIterates:
    """Iterate a dry-friction Poincare map until it leaves its regime.

    Low zone: amplitudes from ``start`` down to standstill capture.
    High zone: positive section speeds down to the last full turn.
    """
    eps = p.epsilon
    values = [float(start)]
    times: list[float] = []
    if zone == "low":
        x = float(start)
        for _ in range(max_steps):
            try:
                x_next = poincare_low(x, p)
            except StandstillCapture:
                break
            times.append(_low_step_time(x, x_next, eps, tol))
            values.append(x_next)
            x = x_next
        energies = tuple(1.0 - math.cos(v) for v in values)
        reduced = tuple(2.0 - e for e in energies)
    elif zone == "high":
        if start <= 0.0:
            raise ValueError("high-zone iteration needs a positive section speed")
        y = float(start)
        for _ in range(max_steps):
            try:
                y_next = poincare_high(y, p)
            except RegimeExit:
                break
            times.append(_high_step_time(y, eps, tol))
            values.append(y_next)
            y = y_next
        energies = tuple(0.5 * v * v + 2.0 for v in values)
        reduced = tuple(e - 2.0 for e in energies)
    else:
        raise ValueError(f"unknown zone {zone!r}")
    return PoincareIterates(zone, tuple(values), energies, reduced, tuple(times))


@dataclass(frozen=True)
class PathPiece:
    t_start: float
    t_end: float
    u: float
    v_start: float
    v_end: float


@dataclass(frozen=True)
class LimitPath:
    """Averaged-system solution on a piecewise-constant control profile.

    ``values`` holds X(t) (low zone, amplitude) or Y(t) (high zone, section
    speed) on the sample grid; ``pieces`` carry the exact closed-form solution
    so :meth:`value_at` is not an interpolation.
    """

    zone: str
    times: tuple[float, ...]
    values: tuple[float, ...]
    controls: tuple[float, ...]
    pieces: tuple[PathPiece, ...]
    total_time: float

    def value_at(self, t: float) -> float:
        if t <= 0.0:
            return self.values[0]
        if t >= self.total_time:
            return self.values[-1]
        for pc in self.pieces:
            if pc.t_start <= t <= pc.t_end:
                if pc.u == 0.0:
                    return pc.v_start
                dt = t - pc.t_start
                if self.zone == "low":
                    g = swing_progress(pc.v_start) + pc.u * dt
                    return _invert_progress(g)
                sq = pc.v_start ** 2 + 4.0 * math.pi * pc.u * dt
                return math.sqrt(max(sq, 0.0))
        return self.values[-1]

    def control_at(self, t: float) -> float:
        for pc in self.pieces:
            if pc.t_start <= t <= pc.t_end:
                return pc.u
        return self.pieces[-1].u


def limit_ode_solve(zone: str, init: float, profile, step: float = 1e-2) -> LimitPath:
    """Solve the averaged system exactly on constant-control pieces.

    ``profile`` is an iterable of (control, duration) pairs; a duration of
    None means "run until the state reaches 0" and needs a negative control.
    Low zone: (sin X / 2X) dX/dt = U with X in (0, pi].
    High zone: Y dY/dt = 2 pi U with Y > 0.
    """
    if zone not in ("low", "high"):
        raise ValueError(f"unknown zone {zone!r}")
    if zone == "low" and not 0.0 < init <= math.pi:
        raise ValueError(f"low-zone amplitude {init} outside (0, pi]")
    if zone == "high" and init <= 0.0:
        raise ValueError(f"high-zone speed {init} must be positive")

    times = [0.0]
    values = [float(init)]
    controls: list[float] = []
    pieces: list[PathPiece] = []
    t = 0.0
    v = float(init)
    for u, dur in profile:
        u = float(u)
        if abs(u) > 1.0:
            raise ValueError(f"control magnitude {abs(u)} exceeds 1")
        if dur is None:
            if u >= 0.0:
                raise ValueError("an open-ended piece needs a negative control")
            dur = (swing_progress(v) / -u) if zone == "low" else (v * v / (4.0 * math.pi * -u))
        if dur < 0.0:
            raise ValueError("piece duration must be nonnegative")
        if zone == "low":
            g0 = swing_progress(v)
            g_end = g0 + u * dur
            if g_end < -1e-12 or g_end > swing_progress(math.pi) + 1e-12:
                raise ValueError("control drives the amplitude out of (0, pi]")
        else:
            if v * v + 4.0 * math.pi * u * dur < -1e-12:
                raise ValueError("control drives the speed below 0")
        n_sub = max(1, int(math.ceil(dur / step)))
        for i in range(1, n_sub + 1):
            dt = dur * i / n_sub
            if u == 0.0:
                val = v
            elif zone == "low":
                val = _invert_progress(g0 + u * dt)
            else:
                val = math.sqrt(max(v * v + 4.0 * math.pi * u * dt, 0.0))
            times.append(t + dt)
            values.append(val)
            controls.append(u)
        pieces.append(PathPiece(t, t + dur, u, v, values[-1]))
        t += dur
        v = values[-1]
        if v <= 0.0:
            break
    return LimitPath(zone, tuple(times), tuple(values), tuple(controls), tuple(pieces), t)


def per_oscillation_time(zone: str, v: float) -> float:
    """Per-oscillation time integrand of the cost functionals.

    Low zone:  integral_0^X (cos phi - cos X)^(-1/2) dphi.
    High zone: integral_0^{2pi} (1 + Y^2/2 - cos phi)^(-1/2) dphi.
    """
    if zone == "low":
        if v <= 0.0:
            return 0.0
        return half_swing_time(min(v, math.pi * (1.0 - 1e-15)))
    return math.sqrt(2.0) * full_turn_time(2.0 + 0.5 * v * v)


def cost_functional(path: LimitPath, tol: float = 1e-9) -> QuadratureResult:
    """Composite quadrature of the per-oscillation time along an averaged path.

    On constant nonzero control the time integral transforms exactly to the
    state variable (dt = dG/U low, dt = Y dY / 2 pi U high); zero-control
    pieces contribute duration times the frozen integrand.
    """
    total = 0.0
    err = 0.0
    neval = 0
    for pc in path.pieces:
        if pc.t_end == pc.t_start:
            continue
        if pc.u == 0.0:
            total += (pc.t_end - pc.t_start) * per_oscillation_time(path.zone, pc.v_start)
            continue
        lo, hi = sorted((pc.v_start, pc.v_end))
        if path.zone == "low":
            def f(x):
                return per_oscillation_time("low", x) * switching_integrand(x)
        else:
            def f(yv):
                return per_oscillation_time("high", yv) * yv / (2.0 * math.pi)
        q = _quad(f, lo, hi, tol, limit=400)
        total += q.value / abs(pc.u)
        err += q.error_estimate
        neval += q.evaluations
    return QuadratureResult(total, err, neval)


@dataclass(frozen=True)
class EulerErrorRow:
    epsilon: float
    n_iterates: int
    sup_error: float
    ratio_vs_previous: float | None


def iterate_low_map(x0: float, p: Params, max_iter: int = 1_000_000) -> list[float]:
    """Amplitude orbit of the low-zone Poincare map down to standstill capture."""
    xs = [x0]
    x = x0
    for _ in range(max_iter):
        try:
            x = poincare_low(x, p)
        except StandstillCapture:
            break
        xs.append(x)
    return xs


def euler_convergence(x0: float, eps_list) -> list[EulerErrorRow]:
    """Sup-norm error of the broken-line iterates against the averaged flow.

    For each eps the map orbit X_n (one iterate per time eps) is compared with
    the closed-form solution X(t) of (sin X / 2X) X' = -1 at t = n eps over
    the common lifetime of both; rows carry the error ratio against the
    previous eps in the list.
    """
    if not 0.0 < x0 < math.pi:
        raise ValueError(f"amplitude {x0} outside (0, pi)")
    rows: list[EulerErrorRow] = []
    g0 = swing_progress(x0)
    prev = None
    for eps in eps_list:
        xs = iterate_low_map(x0, Params(eps))
        sup = 0.0
        for n_it, xn in enumerate(xs):
            t = n_it * eps
            if t > g0:
                break
            sup = max(sup, abs(xn - _invert_progress(g0 - t)))
        ratio = None if prev in (None, 0.0) else sup / prev
        rows.append(EulerErrorRow(eps, len(xs), sup, ratio))
        prev = sup
    return rows
