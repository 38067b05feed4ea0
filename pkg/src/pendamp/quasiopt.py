"""Dry-friction quasioptimal feedback and closed-loop damping simulation.

The control u = -sign(y) outside the standstill zone realizes steepest local
energy descent (dE/dt = -eps |y|).  The closed loop is simulated as a mode
machine built from smooth constant-control arcs:

* high energy: coast to the section x = pi (mod 2pi), then dry friction
  through the rotation regime (energy drops 2 pi eps per turn, exactly);
* upper standstill zone: coast until x crosses 0 (mod 2pi), then dry
  friction to the next rest point; a stalled coast is resolved by one
  budgeted push arc away from the saddle;
* low energy: dry friction split into constant-control arcs between rest
  points (the switching count lives here);
* lower standstill zone: terminal capture once the energy is of order eps^2
  (a local stabilizer would finish in bounded time, which vanishes after
  eps-scaling; the capture adds zero time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dynamics import Params, PhaseState, ZoneTag, energy_xy, reduce_angle, standstill_zone
from .integrator import (
    ANY,
    STOP_TERMINAL,
    EventSpec,
    StepControl,
    TrajectorySegment,
    integrate,
)

MODE_DRY = "dry-friction"
MODE_COAST = "coast"
MODE_UPPER = "upper-zone maneuver"
MODE_CAPTURE = "terminal capture"


class DampingNonConvergence(Exception):
    """The mode machine did not capture within its time budget."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class CapturePolicy:
    """Capture threshold and budgets of the damping simulation."""

    k_cap: float = 4.0           # capture at energy <= k_cap * eps^2 inside the lower zone
    budget_factor: float = 64.0  # total simulated time budget = factor / eps
    coast_base: float = 16.0     # per-arc coast budget = coast_base + coast_log*log(1/eps)
    coast_log: float = 4.0
    zone_factor: float = 2.0
    ctl: StepControl = field(default_factory=lambda: StepControl(interp_tol=None))

    def coast_budget(self, eps: float) -> float:
        return self.coast_base + self.coast_log * math.log(1.0 / eps)


@dataclass(frozen=True)
class PhaseLogEntry:
    mode: str
    control: float
    t_start: float
    t_end: float
    start: tuple[float, float]
    end: tuple[float, float]


@dataclass
class DampingResult:
    """Closed-loop outcome of the dry-friction strategy."""

    epsilon: float
    initial_state: PhaseState
    damping_time: float
    switch_count: int
    terminal_state: PhaseState
    phase_log: list[PhaseLogEntry]
    trajectory: TrajectorySegment | None
    section_speeds: list[tuple[float, float]]   # (t, y) at x = pi (mod 2pi) crossings
    rest_amplitudes: list[tuple[float, float]]  # (t, |x| reduced) at dry-arc rest points

    def control_at(self, t: float) -> float:
        """Control applied at time t, from the phase log (0 on coast arcs)."""
        for entry in self.phase_log:
            if entry.t_start <= t <= entry.t_end:
                return entry.control
        return 0.0

    @property
    def lower_time_bound(self) -> float:
        """Universal damping-time bound sqrt(2 E(p0)) / eps."""
        e0 = energy_xy(self.initial_state.x, self.initial_state.y)
        return math.sqrt(2.0 * e0) / self.epsilon


def dry_friction_control(s: PhaseState, p: Params) -> int:
    """Steepest-descent control -sign(y); undefined at rest and in the zone."""
    if standstill_zone(s, p) is not ZoneTag.NONE:
        raise ValueError(f"dry friction undefined inside the standstill zone at {s}")
    if s.y == 0.0:
        raise ValueError("dry friction is not sampled at y = 0; treat it as an event")
    return -1 if s.y > 0.0 else 1


def _rest_control(x: float, eps: float) -> int:
    """Control for the arc leaving a rest point (x, 0): oppose the upcoming
    velocity, whose sign is that of the free acceleration -sin(x)."""
    return 1 if math.sin(x) > 0.0 else -1


def simulate_damping(
    p0: PhaseState,
    p: Params,
    policy: CapturePolicy | None = None,
    keep_samples: bool = True,
) -> DampingResult:
    """Run the dry-friction mode machine from ``p0`` until capture."""
    if policy is None:
        policy = CapturePolicy()
    eps = p.epsilon
    if eps > 0.5:
        raise ValueError(f"quasioptimal regime needs eps <= 0.5, got {eps}")
    thr = policy.zone_factor * eps
    cap_energy = policy.k_cap * eps * eps
    budget = policy.budget_factor / eps
    ctl = policy.ctl

    def rhs_free(t, s):
        return (s[1], -math.sin(s[0]))

    def rhs_u(u):
        def f(t, s):
            return (s[1], -math.sin(s[0]) + eps * u)
        return f

    ev_rest = EventSpec(lambda t, s: s[1], ANY, True, "rest")
    ev_section = EventSpec(lambda t, s: math.sin(0.5 * (s[0] - math.pi)), ANY, False, "section")
    ev_section_stop = EventSpec(lambda t, s: math.sin(0.5 * (s[0] - math.pi)), ANY, True, "section")
    ev_bottom_stop = EventSpec(lambda t, s: math.sin(0.5 * s[0]), ANY, True, "bottom")
    ev_leave_saddle = EventSpec(lambda t, s: math.sin(s[0]) ** 2 - thr * thr, ANY, True, "off-saddle")

    t = 0.0
    state = (float(p0.x), float(p0.y))
    log: list[PhaseLogEntry] = []
    all_t: list[float] = []
    all_s: list[tuple[float, ...]] = []
    sections: list[tuple[float, float]] = []
    rests: list[tuple[float, float]] = []
    switch_count = 0
    prev_arc_dry = False

    def zone_of(st) -> ZoneTag:
        return standstill_zone(PhaseState(st[0], st[1]), p, policy.zone_factor)

    def record(seg: TrajectorySegment, mode: str, control: float, cut: int | None = None):
        nonlocal t, state
        hi = len(seg.times) if cut is None else cut + 1
        if keep_samples:
            start = 1 if all_t else 0
            all_t.extend(seg.times[start:hi])
            all_s.extend(seg.states[start:hi])
        log.append(PhaseLogEntry(mode, control, seg.times[0], seg.times[hi - 1],
                                 (seg.states[0][0], seg.states[0][1]),
                                 (seg.states[hi - 1][0], seg.states[hi - 1][1])))
        t = seg.times[hi - 1]
        state = seg.states[hi - 1]

    def capture_cut(seg: TrajectorySegment) -> int | None:
        """First sample index inside the lower zone with energy below capture."""
        for i, st in enumerate(seg.states):
            x, yv = st[0], st[1]
            if abs(yv) < thr and abs(math.sin(x)) < thr and math.cos(x) > 0.0:
                if energy_xy(x, yv) <= cap_energy:
                    return i
        return None

    captured = False
    guard = 0
    max_arcs = int(8.0 * budget / math.pi) + 64
    while t < budget:
        guard += 1
        if guard > max_arcs:
            break
        x, yv = state
        en = energy_xy(x, yv)
        tag = zone_of(state)

        if tag is ZoneTag.LOWER and en <= cap_energy:
            captured = True
            break

        if tag is ZoneTag.UPPER and abs(yv) < 1e-9:
            # Rest near the saddle: wait for the fall through the bottom.
            seg = integrate(rhs_free, state, t, t + policy.coast_budget(eps),
                            [ev_bottom_stop], ctl)
            if seg.stop_reason == STOP_TERMINAL:
                record(seg, MODE_UPPER, 0.0)
                prev_arc_dry = False
                # dry friction from the bottom crossing down to the next rest
                u = -1 if state[1] > 0.0 else 1
                seg2 = integrate(rhs_u(u), state, t, t + budget, [ev_rest], ctl)
                cut = capture_cut(seg2)
                record(seg2, MODE_DRY, u, cut)
                if cut is not None:
                    captured = True
                    break
                prev_arc_dry = True
                continue
            # Stalled coast: one budgeted push arc accelerating away from the
            # saddle (increasing |sin x|, i.e. downhill).
            record(seg, MODE_UPPER, 0.0)
            push = -1 if math.sin(x) > 0.0 else 1
            seg2 = integrate(rhs_u(push), state, t, t + policy.coast_budget(eps),
                             [ev_leave_saddle], ctl)
            record(seg2, MODE_UPPER, float(push))
            prev_arc_dry = False
            continue

        if en > 2.0 and abs(yv) > thr:
            # High energy: coast to the section unless already on it.
            if abs(math.sin(0.5 * (x - math.pi))) > 1e-9:
                seg = integrate(rhs_free, state, t, t + policy.coast_budget(eps),
                                [ev_section_stop], ctl)
                mode = MODE_COAST if seg.stop_reason == STOP_TERMINAL else MODE_UPPER
                record(seg, mode, 0.0)
                prev_arc_dry = False
                if seg.stop_reason != STOP_TERMINAL:
                    continue  # stalled rotation: re-enter mode selection
            u = -1 if state[1] > 0.0 else 1
            seg = integrate(rhs_u(u), state, t, t + budget, [ev_rest, ev_section], ctl)
            for ev in seg.events:
                if ev.label == "section":
                    sections.append((ev.t, ev.state[1]))
            cut = capture_cut(seg)
            record(seg, MODE_DRY, u, cut)
            if cut is not None:
                captured = True
                break
            prev_arc_dry = True
            continue

        # Low energy outside the zones.
        if abs(yv) < 1e-9:
            if abs(math.sin(x)) <= eps:
                # Gravity cannot be overcome here; only reachable inside the
                # zone, which the branches above intercept.
                break
            if prev_arc_dry:
                switch_count += 1
            rests.append((t, abs(reduce_angle(x))))
            u = _rest_control(x, eps)
        else:
            u = -1 if yv > 0.0 else 1
        seg = integrate(rhs_u(u), state, t, t + budget, [ev_rest], ctl)
        cut = capture_cut(seg)
        record(seg, MODE_DRY, u, cut)
        if cut is not None:
            captured = True
            break
        prev_arc_dry = True

    terminal = PhaseState(state[0], state[1])
    trajectory = None
    if keep_samples:
        trajectory = TrajectorySegment(all_t, all_s, [], MODE_CAPTURE if captured else "budget")
    if captured:
        log.append(PhaseLogEntry(MODE_CAPTURE, 0.0, t, t,
                                 (state[0], state[1]), (state[0], state[1])))
    result = DampingResult(
        epsilon=eps,
        initial_state=p0,
        damping_time=t,
        switch_count=switch_count,
        terminal_state=terminal,
        phase_log=log,
        trajectory=trajectory,
        section_speeds=sections,
        rest_amplitudes=rests,
    )
    if not captured:
        raise DampingNonConvergence(
            f"no capture within budget {budget:.1f} at eps={eps}", result)
    return result


@dataclass(frozen=True)
class ScalingRow:
    epsilon: float
    damping_time: float
    switch_count: int
    eps_T: float
    eps_N: float


@dataclass
class ScalingTable:
    initial_state: PhaseState
    rows: list[ScalingRow]
    extrapolated_eps_T: float
    extrapolated_eps_N: float

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "T", "N", "epsT", "epsN"])
            for r in self.rows:
                w.writerow([repr(r.epsilon), repr(r.damping_time), r.switch_count,
                            repr(r.eps_T), repr(r.eps_N)])


def _linear_intercept(xs, ys) -> float:
    """Least-squares intercept of y against x (Richardson-style limit at x=0)."""
    n = len(xs)
    if n == 1:
        return ys[0]
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return my - slope * mx


def sweep_scaling(p0: PhaseState, eps_list, policy: CapturePolicy | None = None) -> ScalingTable:
    """Damping time and switching count across a decreasing list of eps.

    Rows carry (eps, T, N, eps*T, eps*N); the scaled columns are extrapolated
    to eps = 0 by a least-squares linear fit in eps.
    """
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    rows = []
    for eps in eps_list:
        res = simulate_damping(p0, Params(eps), policy, keep_samples=False)
        rows.append(ScalingRow(eps, res.damping_time, res.switch_count,
                               eps * res.damping_time, eps * res.switch_count))
    ext_T = _linear_intercept([r.epsilon for r in rows], [r.eps_T for r in rows])
    ext_N = _linear_intercept([r.epsilon for r in rows], [r.eps_N for r in rows])
    return ScalingTable(p0, rows, ext_T, ext_N)
