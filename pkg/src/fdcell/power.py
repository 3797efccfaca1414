"""Weighted sum-rate power allocation for a two-link schedule.

Every FD schedule activates two transmitters whose links interfere through
a cross gain (or through residual self-interference).  The allocation
maximizes  w1*ln(1+SINR1) + w2*ln(1+SINR2)  over the box
[0, p1_max] x [0, p2_max].  The objective is signomial, so the solver runs
successive monomial condensation: at each outer iteration the total-power
posynomial of each link (signal + interference + noise) is replaced by its
arithmetic-geometric-mean monomial lower bound at the current point, which
turns the subproblem into a geometric program.  In log-power coordinates
that subproblem is smooth and convex and is solved by projected gradient
descent with backtracking.  The surrogate touches the true objective at
the expansion point, so the true objective never decreases across outer
iterations.

Two merit functions are available.  The default ("product") maximizes the
weighted sum rate directly.  The alternative ("sum-ratio") minimizes the
sum of the per-link ratio terms
((interference+noise)/(signal+interference+noise))^w_l, a soft worst-link
criterion: a starved link keeps its term near 1 no matter how fast the
other link runs, so the minimizer favors allocations where every weighted
link clears a decent SINR — including deep power cuts on a strong link
whose interference would otherwise drown the weak one.  Both forms run the
same condensation loop; they differ in the condensed subproblem and in the
merit used to pick the final candidate.

Zero power is kept reachable through a relative power floor plus an exact
snap-to-zero pass at the end.  Because scaling both powers up together
raises both SINRs, an optimum of either merit always lies where at least
one transmitter runs at its maximum; the final candidate pool therefore
also includes a one-dimensional refinement along each full-power edge of
the box, which guards against condensation stalling at the wrong corner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .radio import Mode, ModeKind, PowerVector, spectral_efficiency

# Relative floor that stands in for "off" inside log coordinates.
POWER_FLOOR_FRAC = 1e-8


@dataclass(frozen=True)
class PowerProblem:
    """Two coupled links: SINR1 = p1*g1/(p2*c1 + n1), SINR2 = p2*g2/(p1*c2 + n2)."""

    w1: float
    w2: float
    g1: float
    g2: float
    c1: float
    c2: float
    n1: float
    n2: float
    p1_max: float
    p2_max: float
    mode: Mode | None = None  # label only; the math is mode-agnostic

    def __post_init__(self):
        if self.w1 < 0.0 or self.w2 < 0.0 or self.w1 + self.w2 <= 0.0:
            raise ValueError("weights must be non-negative with a positive sum")
        if self.n1 <= 0.0 or self.n2 <= 0.0:
            raise ValueError("noise powers must be positive")
        if self.p1_max <= 0.0 or self.p2_max <= 0.0:
            raise ValueError("power budgets must be positive")
        if self.c1 < 0.0 or self.c2 < 0.0:
            raise ValueError("cross gains must be non-negative")
        if (self.w1 > 0.0 and self.g1 <= 0.0) or (self.w2 > 0.0 and self.g2 <= 0.0):
            raise ValueError("a weighted link needs a positive serving gain")

    def sinrs(self, p1: float, p2: float) -> tuple[float, float]:
        return (
            p1 * self.g1 / (p2 * self.c1 + self.n1),
            p2 * self.g2 / (p1 * self.c2 + self.n2),
        )

    def objective(self, p1: float, p2: float) -> float:
        """Weighted sum rate in nats at the given power pair."""
        s1, s2 = self.sinrs(p1, p2)
        return self.w1 * math.log1p(s1) + self.w2 * math.log1p(s2)

    @staticmethod
    def for_mode(mode: Mode, channel, w1: float, w2: float) -> "PowerProblem":
        """Instantiate the two-link problem for one FD schedule.

        Link order matches `mode.links()`: the first weight belongs to the
        first link.  p1 always drives link 1's transmitter.
        """
        k = mode.kind
        if k is ModeKind.FDD:
            d = mode.dl_ue
            return PowerProblem(
                w1, w2,
                g1=channel.g_ms(), g2=channel.g_sd(d),
                c1=channel.sic_small, c2=channel.g_md(d),
                n1=channel.noise_small_w, n2=channel.noise_ue_w,
                p1_max=channel.p_macro_max_w, p2_max=channel.p_small_max_w,
                mode=mode,
            )
        if k is ModeKind.FDU:
            u = mode.ul_ue
            return PowerProblem(
                w1, w2,
                g1=channel.g_us(u), g2=channel.g_sm(),
                c1=channel.sic_small, c2=channel.g_um(u),
                n1=channel.noise_small_w, n2=channel.noise_macro_w,
                p1_max=channel.p_ue_max_w, p2_max=channel.p_small_max_w,
                mode=mode,
            )
        if k is ModeKind.FDB:
            return PowerProblem(
                w1, w2,
                g1=channel.g_ms(), g2=channel.g_sm(),
                c1=channel.sic_small, c2=channel.sic_macro,
                n1=channel.noise_small_w, n2=channel.noise_macro_w,
                p1_max=channel.p_macro_max_w, p2_max=channel.p_small_max_w,
                mode=mode,
            )
        if k is ModeKind.FDA:
            u, d = mode.ul_ue, mode.dl_ue
            return PowerProblem(
                w1, w2,
                g1=channel.g_sd(d), g2=channel.g_us(u),
                c1=channel.g_ud(u, d), c2=channel.sic_small,
                n1=channel.noise_ue_w, n2=channel.noise_small_w,
                p1_max=channel.p_small_max_w, p2_max=channel.p_ue_max_w,
                mode=mode,
            )
        raise ValueError(f"power allocation applies to FD modes, not {k.value}")

    def power_vector(self, p1: float, p2: float) -> PowerVector:
        """Pack a solution into the transmitter slots of this problem's mode."""
        if self.mode is None:
            raise ValueError("problem carries no mode label")
        k = self.mode.kind
        if k in (ModeKind.FDD, ModeKind.FDB):
            return PowerVector(p_macro=p1, p_small=p2)
        if k is ModeKind.FDU:
            return PowerVector(p_ue=p1, p_small=p2)
        return PowerVector(p_small=p1, p_ue=p2)  # FDA

    def power_pair(self, pv: PowerVector) -> tuple[float, float]:
        """Inverse of `power_vector`: this problem's (p1, p2) from a vector."""
        if self.mode is None:
            raise ValueError("problem carries no mode label")
        k = self.mode.kind
        if k in (ModeKind.FDD, ModeKind.FDB):
            return pv.p_macro, pv.p_small
        if k is ModeKind.FDU:
            return pv.p_ue, pv.p_small
        return pv.p_small, pv.p_ue  # FDA


@dataclass
class SolveOptions:
    epsilon: float = 1e-4          # outer stop: max log-power move per iteration
    max_iters: int = 50            # outer condensation iterations
    inner_tol: float = 1e-8        # projected-gradient stationarity tolerance
    inner_max_iters: int = 400
    init: tuple[float, float] | None = None  # default: half the budget each
    objective: str = "product"     # "product" | "sum-ratio"


@dataclass
class PowerSolution:
    p1: float
    p2: float
    objective: float               # true weighted sum rate (nats) at (p1, p2)
    iterations: int
    converged: bool
    trace: list[tuple[float, float, float]] = field(default_factory=list)


def condensation_alphas(g: float, c: float, n: float, p_own: float, p_other: float):
    """AGM weights of the three monomials of T = g*p_own + c*p_other + n."""
    t = g * p_own + c * p_other + n
    return (g * p_own / t, c * p_other / t, n / t)


def condensed_total_log(
    g: float, c: float, n: float, alphas, p_own: float, p_other: float
) -> float:
    """log of the AGM monomial lower bound on T = g*p_own + c*p_other + n.

    With alphas taken at some expansion point, the bound holds for every
    positive (p_own, p_other) and is tight at the expansion point.
    """
    a_s, a_i, a_n = alphas
    val = 0.0
    if a_s > 0.0:
        val += a_s * (math.log(g * p_own) - math.log(a_s))
    if a_i > 0.0:
        val += a_i * (math.log(c * p_other) - math.log(a_i))
    if a_n > 0.0:
        val += a_n * (math.log(n) - math.log(a_n))
    return val


def _inner_minimize(f, x1, x2, lo1, hi1, lo2, hi2, tol, max_iters):
    """Box-constrained minimization of a smooth convex f via L-BFGS-B."""

    def fun(x):
        val, g1, g2 = f(float(x[0]), float(x[1]))
        return val, np.array([g1, g2])

    res = scipy.optimize.minimize(
        fun,
        np.array([x1, x2]),
        jac=True,
        method="L-BFGS-B",
        bounds=[(lo1, hi1), (lo2, hi2)],
        options={"maxiter": max_iters, "ftol": 1e-14, "gtol": tol},
    )
    # A result no better than the start is discarded (descent guarantee).
    v0, _, _ = f(x1, x2)
    if res.fun > v0:
        return x1, x2
    return float(res.x[0]), float(res.x[1])


def sum_ratio_log(problem: PowerProblem, p1: float, p2: float) -> float:
    """log of the ratio-term sum Σ (1 + SINR_l)^(-w_l); smaller is better.

    Each term is the fraction of a link's received power that is not useful
    signal, raised to the link weight, so it falls from 1 toward 0 as that
    link's SINR grows.  A link at zero rate contributes a full 1 regardless
    of the other link, which is what makes this merit reject allocations
    that starve either weighted link; with large weights it approaches a
    weighted max-min of the link rates.  Computed in the log domain because
    the terms themselves underflow at queue-scale weights.
    """
    s1, s2 = problem.sinrs(p1, p2)
    l1 = -problem.w1 * math.log1p(s1)
    l2 = -problem.w2 * math.log1p(s2)
    m = max(l1, l2)
    return m + math.log(math.exp(l1 - m) + math.exp(l2 - m))


def sum_ratio_value(problem: PowerProblem, p1: float, p2: float) -> float:
    """The ratio-term sum itself; see `sum_ratio_log` (which rankings use)."""
    return math.exp(sum_ratio_log(problem, p1, p2))


def _edge_merit(problem: PowerProblem, use_sum: bool):
    if use_sum:
        return lambda p1, p2: -sum_ratio_log(problem, p1, p2)
    return problem.objective


def _refine_edges(
    problem: PowerProblem, use_sum: bool, n_scan: int = 33
) -> list[tuple[float, float]]:
    """Best points along the two full-power edges of the power box.

    For any fixed power ratio, scaling both transmitters up raises both
    SINRs, so an optimum of either merit puts at least one transmitter at
    its maximum.  Each edge is scanned on a log grid (plus exact zero) and
    the best bracket polished with a bounded scalar minimization.
    """
    merit = _edge_merit(problem, use_sum)
    points: list[tuple[float, float]] = []
    for p1_fixed in (True, False):
        if p1_fixed:
            hi = problem.p2_max

            def f(q):
                return -merit(problem.p1_max, q)

        else:
            hi = problem.p1_max

            def f(q):
                return -merit(q, problem.p2_max)

        grid = np.concatenate(([0.0], np.geomspace(hi * POWER_FLOOR_FRAC, hi, n_scan)))
        vals = [f(q) for q in grid]
        j = int(np.argmin(vals))
        best_q = float(grid[j])
        lo_b = float(grid[max(j - 1, 1)])
        hi_b = float(grid[min(j + 1, len(grid) - 1)])
        if lo_b < hi_b:
            res = scipy.optimize.minimize_scalar(
                f, bounds=(lo_b, hi_b), method="bounded", options={"xatol": hi * 1e-12}
            )
            if res.fun <= vals[j]:
                best_q = float(res.x)
        for q in {best_q, float(grid[j])}:
            points.append((problem.p1_max, q) if p1_fixed else (q, problem.p2_max))
    return points


def _pick_best(
    problem: PowerProblem, candidates, use_sum: bool = False
) -> tuple[float, float, float]:
    """Best candidate by the active merit; ties prefer more zeros, then the
    lexicographically smaller power pair.  Returns (p1, p2, weighted sum
    rate) — the reported objective is the true rate either way."""
    best = None
    for p1, p2 in candidates:
        merit = (
            -sum_ratio_log(problem, p1, p2)
            if use_sum
            else problem.objective(p1, p2)
        )
        zeros = (p1 == 0.0) + (p2 == 0.0)
        key = (merit, zeros, -p1, -p2)
        if best is None or key > best[0]:
            best = (key, p1, p2)
    return best[1], best[2], problem.objective(best[1], best[2])


def solve_sp(problem: PowerProblem, opts: SolveOptions | None = None) -> PowerSolution:
    """Signomial-programming solve of the weighted sum-rate problem.

    Returns the best candidate by the active merit (weighted sum rate for
    "product", smallest ratio sum for "sum-ratio"); the trace records one
    (p1, p2, weighted sum rate) entry per outer iteration, starting at the
    initialization.  The full-power corner and the two single-link corners
    are always in the final candidate pool, so under the default merit the
    result never falls below the fixed-max-power operating point, and under
    "sum-ratio" its ratio sum never exceeds that point's.
    """
    opts = opts or SolveOptions()
    if opts.objective not in ("product", "sum-ratio"):
        raise ValueError(f"unknown objective form {opts.objective!r}")
    w1, w2 = problem.w1, problem.w2

    # One idle link: the active link wants full power and zero interference.
    if w1 == 0.0 or w2 == 0.0:
        p1, p2 = (problem.p1_max, 0.0) if w2 == 0.0 else (0.0, problem.p2_max)
        obj = problem.objective(p1, p2)
        return PowerSolution(p1, p2, obj, 0, True, [(p1, p2, obj)])

    g1, g2 = problem.g1, problem.g2
    c1, c2 = problem.c1, problem.c2
    n1, n2 = problem.n1, problem.n2
    lo_p1 = problem.p1_max * POWER_FLOOR_FRAC
    lo_p2 = problem.p2_max * POWER_FLOOR_FRAC
    lo1, hi1 = math.log(lo_p1), math.log(problem.p1_max)
    lo2, hi2 = math.log(lo_p2), math.log(problem.p2_max)

    # Normalized weights condition the surrogate without moving its argmax
    # (the product form is scale invariant in the weights).
    ws = w1 + w2
    a1, a2 = w1 / ws, w2 / ws

    p1, p2 = opts.init if opts.init is not None else (problem.p1_max / 2.0, problem.p2_max / 2.0)
    p1 = min(max(p1, lo_p1), problem.p1_max)
    p2 = min(max(p2, lo_p2), problem.p2_max)
    x1, x2 = math.log(p1), math.log(p2)

    trace = [(p1, p2, problem.objective(p1, p2))]
    iterations = 0
    converged = False
    use_sum = opts.objective == "sum-ratio"

    for _ in range(opts.max_iters):
        iterations += 1
        al1 = condensation_alphas(g1, c1, n1, p1, p2)
        al2 = condensation_alphas(g2, c2, n2, p2, p1)
        a1s, a1i, _ = al1
        a2s, a2i, _ = al2

        if not use_sum:

            def f(y1, y2, a1s=a1s, a1i=a1i, a2s=a2s, a2i=a2i):
                e1, e2 = math.exp(y1), math.exp(y2)
                d1 = c1 * e2 + n1
                d2 = c2 * e1 + n2
                val = a1 * (math.log(d1) - a1s * y1 - a1i * y2) + a2 * (
                    math.log(d2) - a2s * y2 - a2i * y1
                )
                gr1 = -a1 * a1s + a2 * (c2 * e1 / d2 - a2i)
                gr2 = -a2 * a2s + a1 * (c1 * e2 / d1 - a1i)
                return val, gr1, gr2

        else:
            # Constant parts of the condensed log totals matter here: the
            # two ratio terms are summed, not multiplied.
            k1 = condensed_total_log(g1, c1, n1, al1, p1, p2) - a1s * x1 - a1i * x2
            k2 = condensed_total_log(g2, c2, n2, al2, p2, p1) - a2s * x2 - a2i * x1

            def f(y1, y2, a1s=a1s, a1i=a1i, a2s=a2s, a2i=a2i, k1=k1, k2=k2):
                e1, e2 = math.exp(y1), math.exp(y2)
                d1 = c1 * e2 + n1
                d2 = c2 * e1 + n2
                l1 = w1 * (math.log(d1) - (k1 + a1s * y1 + a1i * y2))
                l2 = w2 * (math.log(d2) - (k2 + a2s * y2 + a2i * y1))
                m = max(l1, l2)
                z1, z2 = math.exp(l1 - m), math.exp(l2 - m)
                zs = z1 + z2
                s1, s2 = z1 / zs, z2 / zs
                # 1/ws rescale: same minimizer, step sizes stay near unit
                # scale even when the weights are queue-sized.
                val = (m + math.log(zs)) / ws
                gr1 = (-s1 * w1 * a1s + s2 * w2 * (c2 * e1 / d2 - a2i)) / ws
                gr2 = (s1 * w1 * (c1 * e2 / d1 - a1i) - s2 * w2 * a2s) / ws
                return val, gr1, gr2

        y1, y2 = _inner_minimize(
            f, x1, x2, lo1, hi1, lo2, hi2, opts.inner_tol, opts.inner_max_iters
        )
        moved = max(abs(y1 - x1), abs(y2 - x2))
        x1, x2 = y1, y2
        p1, p2 = math.exp(x1), math.exp(x2)
        trace.append((p1, p2, problem.objective(p1, p2)))
        if moved < opts.epsilon:
            converged = True
            break

    # Candidate pool: every iterate, the box corners that matter, and
    # snap-to-zero variants of the best iterate (the floor is not true off).
    if use_sum:
        bp1, bp2 = min(
            ((p, q) for p, q, _ in trace),
            key=lambda t: sum_ratio_log(problem, t[0], t[1]),
        )
    else:
        bp1, bp2, _ = max(trace, key=lambda t: t[2])
    candidates = [(p, q) for p, q, _ in trace]
    candidates += [
        (problem.p1_max, problem.p2_max),
        (problem.p1_max, 0.0),
        (0.0, problem.p2_max),
        (bp1, 0.0),
        (0.0, bp2),
        (bp1, bp2),
    ]
    candidates += _refine_edges(problem, use_sum)
    p1f, p2f, obj = _pick_best(problem, candidates, use_sum)
    return PowerSolution(p1f, p2f, obj, iterations, converged, trace)


def oracle_grid(problem: PowerProblem, grid_size: int = 200) -> PowerSolution:
    """Exhaustive reference: evaluate the true objective on a log-spaced
    power grid augmented with the exact 0 and p_max endpoints, and return
    the best cell (lexicographically smallest pair among exact ties)."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")

    def axis(p_max: float) -> np.ndarray:
        pts = np.geomspace(p_max * POWER_FLOOR_FRAC, p_max, grid_size)
        return np.concatenate(([0.0], pts))

    p1v = axis(problem.p1_max)
    p2v = axis(problem.p2_max)
    P1 = p1v[:, None]
    P2 = p2v[None, :]
    obj = problem.w1 * np.log1p(P1 * problem.g1 / (P2 * problem.c1 + problem.n1)) + (
        problem.w2 * np.log1p(P2 * problem.g2 / (P1 * problem.c2 + problem.n2))
    )
    idx = int(np.argmax(obj))  # row-major: first max is lexicographically smallest
    i, j = divmod(idx, obj.shape[1])
    p1, p2 = float(p1v[i]), float(p2v[j])
    val = float(obj[i, j])
    return PowerSolution(p1, p2, val, 0, True, [(p1, p2, val)])


def optimal_rates(
    problem: PowerProblem, solution: PowerSolution, cap: float = 7.0
) -> tuple[float, float]:
    """Capped per-link spectral efficiencies (b/s/Hz) at the solved powers.

    This is what the scheduler multiplies by bandwidth and slot length, and
    it matches the radio model's rate for the same mode and powers.
    """
    s1, s2 = problem.sinrs(solution.p1, solution.p2)
    return (spectral_efficiency(s1, cap), spectral_efficiency(s2, cap))


def cap_reach_power(problem: PowerProblem, link: int, cap: float = 7.0) -> float | None:
    """Smallest own power holding `link` exactly at the cap threshold while
    the other transmitter runs at full power; None if even full power falls
    short of the cap there.

    Backing one link's power all the way down to this point is the deepest
    interference cut that costs the backed-off link nothing after capping —
    the one-capped optimum is always (this power, other at max).
    """
    gamma_cap = 2.0 ** cap - 1.0
    if link == 1:
        g, c, n, p_own, p_other = (
            problem.g1, problem.c1, problem.n1, problem.p1_max, problem.p2_max,
        )
    elif link == 2:
        g, c, n, p_own, p_other = (
            problem.g2, problem.c2, problem.n2, problem.p2_max, problem.p1_max,
        )
    else:
        raise ValueError("link must be 1 or 2")
    if g <= 0.0:
        return None
    # Nudged up so the round-tripped SINR lands at or above the threshold
    # despite float rounding.
    pin = gamma_cap * (c * p_other + n) / g * (1.0 + 1e-12)
    return pin if pin <= p_own else None


def capped_candidates(
    problem: PowerProblem, cap: float = 7.0, pins: bool = True
) -> list[tuple[float, float]]:
    """Closed-form candidate powers for the capped weighted-rate problem:
    the box corners, plus (when `pins` is set) the cap-pinned backoffs of
    each link."""
    cands = [
        (problem.p1_max, problem.p2_max),
        (problem.p1_max, 0.0),
        (0.0, problem.p2_max),
    ]
    if pins:
        pin1 = cap_reach_power(problem, 1, cap)
        if pin1 is not None:
            cands.append((pin1, problem.p2_max))
        pin2 = cap_reach_power(problem, 2, cap)
        if pin2 is not None:
            cands.append((problem.p1_max, pin2))
    return cands


def capped_selection(
    problem: PowerProblem,
    point: PowerSolution | tuple[float, float] | None = None,
    cap: float = 7.0,
    pins: bool = True,
) -> tuple[float, float, float, float]:
    """Best power pair under *capped* weighted rates, as (p1, p2, se1, se2).

    The solver maximizes an uncapped merit, but delivered rates are capped:
    an interior point that trades one link's headroom above the cap for the
    other link's gain can realize less capped throughput than a corner, and
    conversely a link with headroom can back off to the cap threshold for
    free, silencing its interference.  This pass ranks the given point (a
    solution or a bare power pair, if any) against the closed-form
    candidates — corners and, when `pins` is set, cap-pinned backoffs —
    under the capped weighted rate; ties prefer more zero powers, so a link
    that contributes nothing is switched off exactly.  If the winner has
    both links at the cap, no power pair anywhere can beat it.
    """
    candidates = capped_candidates(problem, cap, pins)
    if point is not None:
        if isinstance(point, PowerSolution):
            candidates.append((point.p1, point.p2))
        else:
            candidates.append((point[0], point[1]))
    best = None
    for p1, p2 in candidates:
        s1, s2 = problem.sinrs(p1, p2)
        se1 = spectral_efficiency(s1, cap)
        se2 = spectral_efficiency(s2, cap)
        key = (problem.w1 * se1 + problem.w2 * se2, (p1 == 0.0) + (p2 == 0.0), -p1, -p2)
        if best is None or key > best[0]:
            best = (key, p1, p2, se1, se2)
    return best[1], best[2], best[3], best[4]
