"""Backward maximum-principle extremals and switching-count asymptotics.

Every time-optimal trajectory into the origin appears, up to the necessary
conditions, in a two-parameter backward family: the canonical system

    x' = y,  y' = -sin x + eps * sign(psi),  phi' = (cos x) psi,  psi' = -phi

traced backward from (x, y) = (0, 0) with terminal covector
(phi, psi) = (phi_T, s/eps), s = +-1, pinned by the zero-Hamiltonian identity
y phi + (-sin x + eps u) psi - 1 = 0.  The module traces that family, counts
control switchings (transversal zeros of psi), scans phi_T for the maximal
count, and locates the control amplitudes where the maximal count increments
(the bifurcation values eps_n, asymptotically D/n).

Internally the covector is traced in the rescaled variables (eps*phi, eps*psi)
so terminal values stay order 1 for small eps; the zero structure and the
control sign are scale invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dynamics import Params, in_zone_xy
from .integrator import (
    ANY,
    RISING,
    STOP_STEP_FAILURE,
    STOP_TERMINAL,
    STOP_TIME_LIMIT,
    EventSpec,
    StepControl,
    TrajectorySegment,
    integrate,
)

STOP_ENERGY_EXIT = "energy+velocity exit"
STOP_TIME_BUDGET = "time budget"
STOP_STANDSTILL = "standstill entry"
STOP_OPTIMALITY = "optimality budget"

SPACING_TOLERANCE = 1e-6  # slack on the pi lower bound for switch spacing


@dataclass(frozen=True)
class ExtremalState:
    """Phase point plus adjoint covector of the canonical system."""

    x: float
    y: float
    phi: float
    psi: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.phi, self.psi)


def canonical_field(e: ExtremalState, p: Params) -> tuple[float, float, float, float]:
    """Canonical right-hand side with the maximizing control u = sign(psi).

    Rejects psi = 0, where the control is ambiguous; arc-tracing code fixes
    the control sign per arc instead of sampling this function at switchings.
    """
    if e.psi == 0.0:
        raise ValueError("psi = 0: control sign ambiguous, split the arc here")
    u = 1.0 if e.psi > 0.0 else -1.0
    return (e.y, -math.sin(e.x) + p.epsilon * u, math.cos(e.x) * e.psi, -e.phi)


def terminal_costate(phi_T: float, s: int, p: Params) -> ExtremalState:
    """Terminal state of the backward family at the origin.

    The zero-Hamiltonian identity at (0,0) forces eps*|psi| = 1, leaving the
    free parameters (phi_T, s): psi_T = s/eps.
    """
    if s not in (-1, 1):
        raise ValueError(f"s must be +-1, got {s}")
    return ExtremalState(0.0, 0.0, phi_T, s / p.epsilon)


def hamiltonian_residual(e: ExtremalState, p: Params) -> float:
    """y phi + (-sin x) psi + eps |psi| - 1; identically 0 along extremals."""
    return e.y * e.phi - math.sin(e.x) * e.psi + p.epsilon * abs(e.psi) - 1.0


@dataclass(frozen=True)
class StopPolicy:
    """Truncation policy for backward traces.

    A trace stops at the first of: speed exit |y| > speed_exit (which forces
    energy > energy_exit, and after which at most one further switching can
    ever occur, accounted by a +1 allowance), the time budget, entry into the
    standstill zone after first leaving it, the optimality budget, or a step
    failure.

    The optimality budget is the screen that separates candidates for optimal
    trajectories from the rest of the extremal family: no admissible control
    pumps energy faster than |dE/dt| = eps |y|, so a backward run that has
    been alive longer than the attainable damping time from its current state
    (tau(E)/eps plus an additive slack) is already past any optimal portion
    and is cut.  Without this screen the family maximum is set by non-optimal
    wandering extremals that pump energy up and down indefinitely, and the
    switching-count asymptotics degenerate to the raw time budget.

    The slack is calibrated against the established maximizer's measured
    excess over tau(E)/eps, which stays below 0.2 time units across the
    asymptotic range; 0.7 admits it with a 3x margin while rejecting newborn
    switching branches that slower, still-dominated extremals would add.
    """

    energy_exit: float = 2.5
    speed_exit: float | None = None  # None -> sqrt(2 * energy_exit)
    time_budget_factor: float = 8.0  # budget = factor / eps
    standstill_factor: float = 2.0
    optimality_budget: bool = True
    slack_base: float = 0.7
    slack_log: float = 0.0  # slack = slack_base + slack_log * log(1/eps)
    ctl: StepControl = field(default_factory=lambda: StepControl(interp_tol=None))

    def speed_threshold(self) -> float:
        return self.speed_exit if self.speed_exit is not None else math.sqrt(2.0 * self.energy_exit)

    def slack(self, eps: float) -> float:
        return self.slack_base + self.slack_log * math.log(1.0 / eps)


_TAU_TABLE: tuple | None = None


def _tau_bound(E: float) -> float:
    """Piecewise-linear table of the damping-time limit tau(E), cached once.

    Log-dense knots near the separatrix resolve the -h log h behaviour of
    tau_minus there; above the table range the bound is clamped (the speed
    exit fires long before that matters).
    """
    global _TAU_TABLE
    if _TAU_TABLE is None:
        from . import limits

        knots = [0.0]
        k = 40
        for i in range(1, k + 1):  # oscillation branch, dense toward E = 2
            knots.append(2.0 * (i / k) ** 1.5)
        for i in range(1, 25):  # rotation branch
            knots.append(2.0 + (i / 24.0) ** 1.5 * 4.0)
        vals = [0.0]
        tm2 = limits.tau_minus(2.0, 1e-9).value
        for e in knots[1:]:
            if e < 2.0:
                vals.append(limits.tau_minus(e, 1e-9).value)
            elif e == 2.0:
                vals.append(tm2)
            else:
                vals.append(tm2 + limits.tau_plus(e, 1e-9).value)
        _TAU_TABLE = (knots, vals)
    knots, vals = _TAU_TABLE
    if E <= 0.0:
        return 0.0
    if E >= knots[-1]:
        return vals[-1]
    lo, hi = 0, len(knots) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if knots[mid] <= E:
            lo = mid
        else:
            hi = mid
    w = (E - knots[lo]) / (knots[hi] - knots[lo])
    return vals[lo] + w * (vals[hi] - vals[lo])


@dataclass
class ExtremalRun:
    """One backward-traced extremal with its switching structure."""

    phi_T: float
    sign: int
    epsilon: float
    switch_times: tuple[float, ...]
    switch_states: tuple[tuple[float, float, float, float], ...]  # unscaled covector
    switch_in_zone: tuple[bool, ...]
    y_zero_times: tuple[float, ...]
    arc_zone_touched: tuple[bool, ...]
    stop_reason: str
    duration: float
    max_hamiltonian_residual: float
    trajectory: TrajectorySegment | None = None

    @property
    def switch_count(self) -> int:
        return len(self.switch_times)

    @property
    def allowed_count(self) -> int:
        """Switch count plus the high-energy tail allowance.

        After the last zero of y the velocity keeps its sign, and adjacent
        psi-zeros need opposite velocity signs, so the untraced tail beyond a
        speed exit can hold at most ONE further switching in total.  The +1 is
        granted only when that single slot is still free, i.e. when no
        switching was already recorded after the last y-zero of the trace.
        """
        if self.stop_reason != STOP_ENERGY_EXIT:
            return self.switch_count
        if self.switch_times:
            t_last_sw = max(abs(t) for t in self.switch_times)
            t_last_y0 = max((abs(t) for t in self.y_zero_times), default=-1.0)
            if t_last_sw > t_last_y0:
                return self.switch_count  # tail slot already used
        return self.switch_count + 1


def trace_extremal(
    phi_T: float,
    s: int,
    p: Params,
    stop: StopPolicy | None = None,
    keep_samples: bool = True,
) -> ExtremalRun:
    """Trace one backward extremal, splitting arcs at psi zeros."""
    if s not in (-1, 1):
        raise ValueError(f"s must be +-1, got {s}")
    if stop is None:
        stop = StopPolicy()
    eps = p.epsilon
    y_stop2 = stop.speed_threshold() ** 2
    t_budget = stop.time_budget_factor / eps
    # Above factor*eps = 1 the two zone components merge and the standstill
    # stop is meaningless; traces there exit on speed long before it matters.
    thr = stop.standstill_factor * eps
    zone_on = thr < 1.0
    ctl = stop.ctl

    def rhs_plus(t, st):
        x = st[0]
        return (st[1], eps - math.sin(x), math.cos(x) * st[3], -st[2])

    def rhs_minus(t, st):
        x = st[0]
        return (st[1], -eps - math.sin(x), math.cos(x) * st[3], -st[2])

    events = (
        EventSpec(lambda t, st: st[3], ANY, True, "switch"),
        EventSpec(lambda t, st: st[1] * st[1] - y_stop2, RISING, True, "exit"),
        EventSpec(lambda t, st: st[1], ANY, False, "y0"),
    )

    u = s
    t = 0.0
    state = (0.0, 0.0, eps * phi_T, float(s))
    armed = False
    switch_times: list[float] = []
    switch_states: list[tuple[float, float, float, float]] = []
    switch_in_zone: list[bool] = []
    y_zero_times: list[float] = []
    arc_zone: list[bool] = []
    all_t: list[float] = []
    all_s: list[tuple[float, float, float, float]] = []
    max_res = 0.0
    stop_reason = STOP_TIME_BUDGET
    end_t = 0.0
    max_arcs = int(t_budget / math.pi) + 8

    use_opt = stop.optimality_budget
    slack = stop.slack(eps)
    for _ in range(max_arcs):
        seg = integrate(rhs_plus if u > 0 else rhs_minus, state, t, -t_budget, events, ctl)

        cut = None
        cut_reason = None
        touched = False
        for i, st in enumerate(seg.states):
            x, yv = st[0], st[1]
            sx = math.sin(x)
            if zone_on and abs(yv) < thr and abs(sx) < thr:
                touched = True
                if armed:
                    cut = i
                    cut_reason = STOP_STANDSTILL
                    break
            else:
                armed = True
            if use_opt:
                en = 0.5 * yv * yv + 1.0 - math.cos(x)
                if -seg.times[i] > _tau_bound(en) / eps + slack:
                    cut = i
                    cut_reason = STOP_OPTIMALITY
                    break
            r = yv * st[2] - sx * st[3] + eps * abs(st[3]) - eps
            if abs(r) > max_res:
                max_res = abs(r)

        t_cut = seg.times[cut] if cut is not None else None
        for ev in seg.events:
            if ev.label == "y0" and (t_cut is None or ev.t > t_cut):
                y_zero_times.append(ev.t)

        if keep_samples:
            hi = (cut + 1) if cut is not None else len(seg.times)
            start = 1 if all_t else 0  # arc junction duplicates the last sample
            all_t.extend(seg.times[start:hi])
            all_s.extend(seg.states[start:hi])

        arc_zone.append(touched)

        if cut is not None:
            stop_reason = cut_reason
            end_t = seg.times[cut]
            break
        if seg.stop_reason == STOP_TERMINAL:
            last = seg.events[-1]
            if last.label == "switch":
                st = last.state
                switch_times.append(last.t)
                switch_states.append((st[0], st[1], st[2] / eps, st[3] / eps))
                switch_in_zone.append(zone_on and in_zone_xy(st[0], st[1], thr))
                u = -u
                state = st
                t = last.t
                end_t = last.t
                continue
            stop_reason = STOP_ENERGY_EXIT
            end_t = seg.t_end
            break
        if seg.stop_reason == STOP_TIME_LIMIT:
            stop_reason = STOP_TIME_BUDGET
            end_t = seg.t_end
            break
        stop_reason = STOP_STEP_FAILURE
        end_t = seg.t_end
        break
    else:
        stop_reason = STOP_TIME_BUDGET

    trajectory = None
    if keep_samples:
        unscaled = [(st[0], st[1], st[2] / eps, st[3] / eps) for st in all_s]
        trajectory = TrajectorySegment(all_t, unscaled, [], stop_reason)

    return ExtremalRun(
        phi_T=phi_T,
        sign=s,
        epsilon=eps,
        switch_times=tuple(switch_times),
        switch_states=tuple(switch_states),
        switch_in_zone=tuple(switch_in_zone),
        y_zero_times=tuple(y_zero_times),
        arc_zone_touched=tuple(arc_zone),
        stop_reason=stop_reason,
        duration=abs(end_t),
        max_hamiltonian_residual=max_res / eps,
        trajectory=trajectory,
    )


@dataclass(frozen=True)
class PairCheck:
    """One adjacent-switching pair: spacing, sign opposition, interleaving."""

    t_first: float   # switching closer to the terminal point (larger backward time)
    t_second: float
    gap: float
    y_first: float
    y_second: float
    zone_free: bool
    sign_opposite: bool
    y_zeros_between: int

    @property
    def ok(self) -> bool:
        if not self.zone_free:
            return True  # interleaving statement excludes zone-touching arcs
        return self.sign_opposite and self.y_zeros_between == 1


@dataclass(frozen=True)
class SturmReport:
    gaps: tuple[float, ...]
    min_gap: float | None
    pairs: tuple[PairCheck, ...]
    spacing_ok: bool
    interleaving_ok: bool

    @property
    def passed(self) -> bool:
        return self.spacing_ok and self.interleaving_ok


def verify_sturm_properties(run: ExtremalRun, spacing_tol: float = SPACING_TOLERANCE) -> SturmReport:
    """Check switch spacing >= pi and the y/psi zero interleaving along a run.

    Pairs whose arc touches the standstill zone are excluded from the
    interleaving and sign-opposition checks (reported but not failing).
    """
    ts = run.switch_times
    gaps = tuple(ts[k] - ts[k + 1] for k in range(len(ts) - 1))
    pairs = []
    for k in range(len(ts) - 1):
        t_hi, t_lo = ts[k], ts[k + 1]
        y_hi = run.switch_states[k][1]
        y_lo = run.switch_states[k + 1][1]
        zone_free = not run.arc_zone_touched[k + 1] if k + 1 < len(run.arc_zone_touched) else False
        n_between = sum(1 for tz in run.y_zero_times if t_lo < tz < t_hi)
        pairs.append(
            PairCheck(
                t_first=t_hi,
                t_second=t_lo,
                gap=t_hi - t_lo,
                y_first=y_hi,
                y_second=y_lo,
                zone_free=zone_free,
                sign_opposite=y_hi * y_lo < 0.0,
                y_zeros_between=n_between,
            )
        )
    min_gap = min(gaps) if gaps else None
    spacing_ok = min_gap is None or min_gap >= math.pi - spacing_tol
    interleaving_ok = all(pc.ok for pc in pairs)
    return SturmReport(gaps, min_gap, tuple(pairs), spacing_ok, interleaving_ok)


@dataclass(frozen=True)
class RunDiagnostics:
    """Per-run summary kept by sweeps (full trajectories are discarded)."""

    phi_T: float
    sign: int
    switch_count: int
    allowed_count: int
    stop_reason: str
    duration: float
    min_gap: float | None
    zone_switches: int
    spacing_ok: bool
    interleaving_ok: bool
    lemma_bound_ok: bool
    max_h_residual: float

    def as_dict(self) -> dict:
        return {
            "phi_T": self.phi_T,
            "sign": self.sign,
            "switch_count": self.switch_count,
            "allowed_count": self.allowed_count,
            "stop_reason": self.stop_reason,
            "duration": self.duration,
            "min_gap": self.min_gap,
            "zone_switches": self.zone_switches,
            "spacing_ok": self.spacing_ok,
            "interleaving_ok": self.interleaving_ok,
            "lemma_bound_ok": self.lemma_bound_ok,
            "max_h_residual": self.max_h_residual,
        }


def run_diagnostics(run: ExtremalRun, spacing_tol: float = SPACING_TOLERANCE) -> RunDiagnostics:
    rep = verify_sturm_properties(run, spacing_tol)
    return RunDiagnostics(
        phi_T=run.phi_T,
        sign=run.sign,
        switch_count=run.switch_count,
        allowed_count=run.allowed_count,
        stop_reason=run.stop_reason,
        duration=run.duration,
        min_gap=rep.min_gap,
        zone_switches=sum(run.switch_in_zone),
        spacing_ok=rep.spacing_ok,
        interleaving_ok=rep.interleaving_ok,
        lemma_bound_ok=run.switch_count <= run.duration / math.pi + 1.0 + 1e-12,
        max_h_residual=run.max_hamiltonian_residual,
    )


@dataclass(frozen=True)
class SweepPolicy:
    """phi_T scan policy for the switching-count supremum.

    The terminal covector slope is scanned in the rescaled variable
    g = eps * phi_T over [-phi_max_scaled, phi_max_scaled] (so the raw range
    is +-phi_max_scaled/eps), on a uniform grid per control sign, refined by
    bisection around every change of (allowed_count, stop_reason) until the
    scaled spacing drops below refine_tol.
    """

    phi_max_scaled: float = 4.0
    grid_points: int = 512
    refine_tol: float = 1e-3
    max_extra_runs: int = 4096
    signs: tuple[int, ...] = (1, -1)
    stop: StopPolicy = field(default_factory=StopPolicy)


@dataclass
class SweepResult:
    epsilon: float
    max_allowed: int
    max_raw: int
    argmax_phi_T: float
    argmax_sign: int
    runs: list[RunDiagnostics]
    boundary_hit: bool
    unresolved_transitions: bool
    n_runs: int

    @property
    def eps_times_n(self) -> float:
        return self.epsilon * self.max_allowed


def _diag_at(g_scaled: float, s: int, p: Params, stop: StopPolicy) -> RunDiagnostics:
    run = trace_extremal(g_scaled / p.epsilon, s, p, stop, keep_samples=False)
    return run_diagnostics(run)


def _sweep_chunk(args):
    eps, stop, jobs = args
    p = Params(eps)
    return [(g, s, _diag_at(g, s, p, stop)) for g, s in jobs]


def max_switchings(
    p: Params,
    policy: SweepPolicy | None = None,
    stop_at: int | None = None,
    threads: int = 1,
) -> SweepResult:
    """Scan the backward family for the maximal switching count.

    ``stop_at`` turns the sweep into an early-exit witness search: the scan
    returns as soon as some run reaches that allowed count (the boolean
    "max >= stop_at" is unchanged; only the amount of work differs).
    """
    if policy is None:
        policy = SweepPolicy()
    eps = p.epsilon
    stop = policy.stop
    n_grid = policy.grid_points
    gmax = policy.phi_max_scaled
    table: dict[tuple[float, int], RunDiagnostics] = {}

    base = [(-gmax + 2.0 * gmax * i / (n_grid - 1)) for i in range(n_grid)]
    jobs = [(g, s) for s in policy.signs for g in base]

    def found(diag) -> bool:
        return stop_at is not None and diag.allowed_count >= stop_at

    hit_early = False
    if threads != 1 and stop_at is None:
        import concurrent.futures as cf
        import os

        workers = threads if threads > 0 else (os.cpu_count() or 1)
        chunks = [jobs[i::workers] for i in range(workers)]
        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(_sweep_chunk, [(eps, stop, ch) for ch in chunks]):
                for g, s, diag in part:
                    table[(g, s)] = diag
    else:
        for g, s in jobs:
            diag = _diag_at(g, s, p, stop)
            table[(g, s)] = diag
            if found(diag):
                hit_early = True
                break

    # Bisection refinement around every change of (count, fate) between
    # neighbouring evaluated points, per sign family.
    unresolved = False
    extra = 0
    if not hit_early:
        def key(d):
            return (d.allowed_count, d.stop_reason)

        frontier: list[tuple[float, float, int]] = []
        for s in policy.signs:
            gs = sorted(g for (g, sg) in table if sg == s)
            for a, b in zip(gs, gs[1:]):
                if key(table[(a, s)]) != key(table[(b, s)]):
                    frontier.append((a, b, s))
        while frontier:
            frontier.sort()
            a, b, s = frontier.pop(0)
            if b - a <= policy.refine_tol:
                continue
            if extra >= policy.max_extra_runs:
                unresolved = True
                break
            m = 0.5 * (a + b)
            diag = _diag_at(m, s, p, stop)
            table[(m, s)] = diag
            extra += 1
            if found(diag):
                hit_early = True
                break
            if key(diag) != key(table[(a, s)]):
                frontier.append((a, m, s))
            if key(diag) != key(table[(b, s)]):
                frontier.append((m, b, s))

    diags = [table[k] for k in sorted(table.keys(), key=lambda k: (k[1], k[0]))]
    max_allowed = max(d.allowed_count for d in diags)
    max_raw = max(d.switch_count for d in diags)
    best = min(
        ((g, s) for (g, s), d in table.items() if d.allowed_count == max_allowed),
        key=lambda k: (k[0], k[1]),
    )
    boundary = abs(abs(best[0]) - gmax) < 1e-12
    return SweepResult(
        epsilon=eps,
        max_allowed=max_allowed,
        max_raw=max_raw,
        argmax_phi_T=best[0] / eps,
        argmax_sign=best[1],
        runs=diags,
        boundary_hit=boundary,
        unresolved_transitions=unresolved,
        n_runs=len(diags),
    )


@dataclass(frozen=True)
class BifurcationRow:
    n: int
    epsilon_n: float
    product: float
    bracket_width: float


@dataclass
class BifurcationTable:
    rows: list[BifurcationRow]

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "epsilon_n", "n_times_epsilon_n", "bracket_width"])
            for r in self.rows:
                w.writerow([r.n, repr(r.epsilon_n), repr(r.product), repr(r.bracket_width)])


class BracketError(Exception):
    """The integer count is not monotone across the supplied bracket."""


def find_bifurcation(
    n: int,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-3,
    policy: SweepPolicy | None = None,
    threads: int = 1,
) -> BifurcationRow:
    """Locate the n-th bifurcation value of the control amplitude.

    The n-th bifurcation is the n-th increment of the maximal switching count
    as eps decreases; at large amplitude the maximum is a single switching, so
    the n-th increment is where max_switchings first reaches the level n + 1.
    Bisection of the integer-valued map eps -> max_switchings(eps) on a
    bracket (eps_lo, eps_hi) with count >= n+1 at eps_lo and < n+1 at eps_hi.
    Without a bracket, a geometric scan downward from eps ~ 1.2 finds one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if policy is None:
        policy = SweepPolicy()
    target = n + 1

    def reaches(eps: float) -> bool:
        res = max_switchings(Params(eps), policy, stop_at=target, threads=threads)
        return res.max_allowed >= target

    if bracket is None:
        hi = 1.2
        while reaches(hi):
            hi *= 1.5
            if hi > 64.0:
                raise BracketError(f"count >= {target} persists up to eps = {hi}")
        lo = hi
        while True:
            lo /= 1.3
            if reaches(lo):
                break
            hi = lo
            if lo < 1e-4:
                raise BracketError(f"count never reaches {target} down to eps = {lo}")
    else:
        lo, hi = bracket
        if not lo < hi:
            raise BracketError(f"need eps_lo < eps_hi, got {bracket}")
        if not reaches(lo):
            raise BracketError(f"count below {target} at eps_lo = {lo}")
        if reaches(hi):
            raise BracketError(f"count already >= {target} at eps_hi = {hi}")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            lo = mid
        else:
            hi = mid
    eps_n = 0.5 * (lo + hi)
    return BifurcationRow(n=n, epsilon_n=eps_n, product=n * eps_n, bracket_width=hi - lo)


def bifurcation_table(
    n_max: int,
    tol: float = 1e-3,
    policy: SweepPolicy | None = None,
    threads: int = 1,
) -> BifurcationTable:
    """Bifurcation values eps_1 > ... > eps_nmax by a shared descending scan.

    The thresholds are nested (reaching count n implies reaching n-1), so each
    located eps_{n-1} caps the bracket search for eps_n.
    """
    if policy is None:
        policy = SweepPolicy()
    rows: list[BifurcationRow] = []

    def reaches(eps: float, n: int) -> bool:
        res = max_switchings(Params(eps), policy, stop_at=n + 1, threads=threads)
        return res.max_allowed >= n + 1

    hi = 1.2
    while reaches(hi, 1):
        hi *= 1.5
        if hi > 64.0:
            raise BracketError("count >= 2 persists at arbitrarily large eps")
    for n in range(1, n_max + 1):
        if rows:
            hi = rows[-1].epsilon_n + tol
        lo = hi
        while True:
            lo /= 1.25
            if lo < 1e-4:
                raise BracketError(f"count never reaches {target} down to eps = {lo}")
            if reaches(lo, n):
                break
            hi = lo
        rows.append(find_bifurcation(n, (lo, hi), tol, policy, threads))
    return BifurcationTable(rows)
