"""Finite-dimensional convex analysis of the limiting log-moment
generating function ``L(t) = P(f + sum_k t_k f_k) - P(f)``."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import ConvergenceError
from .pressure import directional_derivatives, pressure_spectral
from .sft import Potential, Sft, combine, expectation

GRAD_TOL = 1e-10
ESCAPE_RADIUS = 1e3
MAX_ASCENT_STEPS = 10**5
# steps without a gain above rounding before the ascent is declared stalled
STALL_STEPS = 100
KINK_GAP = 1e-9
DOMAIN_TOL = 1e-9
STRICT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LogMgf:
    sft: Sft
    base: Potential
    directions: tuple
    base_pressure: float

    @property
    def dim(self) -> int:
        return len(self.directions)

    def tilted(self, t) -> Potential:
        return combine(self.base, self.directions, t)

    def __call__(self, t) -> float:
        return eval_L(self, t)


def log_mgf(sft: Sft, base: Potential, directions: Sequence[Potential]) -> LogMgf:
    p0 = pressure_spectral(sft, base, equilibria=False).pressure
    return LogMgf(sft, base, tuple(directions), p0)


@dataclass(frozen=True)
class KinkWitness:
    """Vertices ``(mu(f_1), ..., mu(f_n))`` over the extreme equilibrium
    states at a point where L is not differentiable."""

    t: np.ndarray
    vertices: np.ndarray

    def to_dict(self):
        return {"t": self.t.tolist(), "vertices": self.vertices.tolist()}


def eval_L(lm: LogMgf, t) -> float:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not t.any():
        return 0.0
    return pressure_spectral(lm.sft, lm.tilted(t), equilibria=False).pressure - lm.base_pressure


def grad_L(lm: LogMgf, t):
    """Gradient of L at ``t``, or a KinkWitness when the tilted potential
    has several equilibrium states with different mean vectors."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    report = pressure_spectral(lm.sft, lm.tilted(t))
    verts = np.array([[expectation(mu, g) for g in lm.directions] for mu in report.equilibrium_states])
    verts = verts.reshape(len(report.equilibrium_states), lm.dim)
    if len(verts) == 1 or np.ptp(verts, axis=0).max(initial=0.0) <= KINK_GAP:
        return verts[0]
    return KinkWitness(t, verts)


def mean_set_gap(lm: LogMgf, x) -> float:
    """Sup-norm distance from ``x`` to the closed set of mean vectors of
    invariant measures, by a linear program over edge flows of the block
    graph. Zero exactly when the conjugate of L is finite at ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = max([2] + [g.depth for g in lm.directions])
    sft = lm.sft
    _, src, dst = sft.block_graph(k - 1)
    e, nstates, n = len(src), sft.word_count(k - 1), lm.dim
    flow = np.zeros((nstates, e))
    flow[src, np.arange(e)] += 1.0
    flow[dst, np.arange(e)] -= 1.0
    moments = np.array([g.lift(k).values for g in lm.directions]).reshape(n, e)
    # variables (q, s): minimize s with |moments q - x| <= s componentwise
    a_eq = np.vstack([np.hstack([flow, np.zeros((nstates, 1))]), np.append(np.ones(e), 0.0)])
    b_eq = np.append(np.zeros(nstates), 1.0)
    a_ub = np.vstack([np.hstack([moments, -np.ones((n, 1))]), np.hstack([-moments, -np.ones((n, 1))])])
    b_ub = np.concatenate([x, -x])
    cost = np.append(np.zeros(e), 1.0)
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * (e + 1), method="highs")
    if res.status != 0:
        raise ConvergenceError(f"mean-set program failed: {res.message}")
    return float(res.fun)


def _min_norm_in_hull(x, verts):
    """Point of conv(verts) closest to x."""
    k = len(verts)
    if k == 1:
        return verts[0]
    # minimize |V^T w - x| over the simplex; the affine row enforces sum(w) = 1
    big = 1e6
    a = np.vstack([verts.T, big * np.ones(k)])
    b = np.concatenate([x, [big]])
    w, _ = nnls(a, b)
    w /= w.sum()
    return verts.T @ w


@dataclass
class ConjugateResult:
    """Outcome of a Legendre transform evaluation.

    ``value`` is ``inf`` for points outside the closed achievable-mean
    set. ``boundary`` is set for those and for points where the ascent
    escaped past the escape radius; the value there is the best one seen,
    a lower bound for the supremum approached along the escape.
    """

    value: float
    maximizer: np.ndarray | None
    converged: bool
    iterations: int
    boundary: bool = False
    grad_norm: float = math.nan
    mode: str = "quasi-newton"

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def to_dict(self):
        return {
            "value": "inf" if self.infinite else self.value,
            "maximizer": None if self.maximizer is None else self.maximizer.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "boundary": self.boundary,
            "grad_norm": self.grad_norm,
            "mode": self.mode,
        }


class _Ascent:
    """State for maximizing ``<t, x> - L(t)``."""

    def __init__(self, lm, x):
        self.lm = lm
        self.x = x

    def value(self, t):
        return float(t @ self.x) - eval_L(self.lm, t)

    def ascent(self, t):
        """Steepest ascent direction (minimum-norm supergradient) at t and
        the kink flag."""
        g = grad_L(self.lm, t)
        if isinstance(g, KinkWitness):
            return self.x - _min_norm_in_hull(self.x, g.vertices), True
        return self.x - g, False


def legendre(
    lm: LogMgf,
    x,
    tol: float = GRAD_TOL,
    escape_radius: float = ESCAPE_RADIUS,
    max_steps: int = MAX_ASCENT_STEPS,
) -> ConjugateResult:
    """``L*(x) = sup_t <t, x> - L(t)`` by quasi-Newton ascent from ``t = 0``.

    Points outside the closed achievable-mean set (see ``mean_set_gap``)
    get ``inf`` without an ascent.
    BFGS updates with Armijo backtracking are used while L is smooth along
    the path; at kinks, or when the line search stalls, the ascent switches
    to normalized supergradient steps whose length halves whenever the
    direction reverses. The ascent stops with the best value seen once the
    objective has been flat to rounding for ``STALL_STEPS`` steps.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = lm.dim
    if n == 0:
        return ConjugateResult(0.0, np.zeros(0), True, 0, grad_norm=0.0)
    if x.shape != (n,):
        raise ValueError(f"x must have {n} coordinates")
    if mean_set_gap(lm, x) > DOMAIN_TOL * max(1.0, float(np.max(np.abs(x)))):
        return ConjugateResult(math.inf, None, True, 0, boundary=True, mode="domain")
    prob = _Ascent(lm, x)
    t = np.zeros(n)
    val = prob.value(t)
    d, kink = prob.ascent(t)
    h = np.eye(n)
    mode = "quasi-newton"
    step = 1.0
    prev_d = None
    # supergradient steps are not monotone; keep the best point visited
    best_val, best_t = val, t
    since_gain = 0
    for it in range(1, max_steps + 1):
        gn = float(np.linalg.norm(d))
        since_gain = 0 if val > best_val + 1e-13 * max(1.0, abs(best_val)) else since_gain + 1
        if val > best_val:
            best_val, best_t = val, t
        if since_gain > STALL_STEPS:
            # the objective is flat to rounding, as near a face of the mean set
            return ConjugateResult(best_val, best_t, False, it, grad_norm=gn, mode="stalled")
        if gn <= tol:
            return ConjugateResult(val, t, True, it - 1, grad_norm=gn, mode=mode)
        if np.linalg.norm(t) > escape_radius:
            return ConjugateResult(best_val, best_t, True, it - 1, boundary=True, grad_norm=gn, mode=mode)
        if kink:
            mode = "supergradient"
        if mode == "quasi-newton":
            p = h @ d
            slope = float(d @ p)
            if slope <= 0:
                h = np.eye(n)
                p = d
                slope = float(d @ d)
            alpha = 1.0
            accepted = False
            # objective differences below rounding are not informative
            noise = 1e-14 * max(1.0, abs(val))
            while alpha > 1e-16:
                t_new = t + alpha * p
                v_new = prob.value(t_new)
                if v_new >= val + 1e-4 * alpha * slope - noise:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                mode = "supergradient"
                step = max(float(np.linalg.norm(p)) * 1e-3, 1e-6)
                continue
            d_new, kink = prob.ascent(t_new)
            s = t_new - t
            y = d - d_new  # gradient change of L
            sy = float(s @ y)
            if sy > 1e-300 and not kink:
                rho = 1.0 / sy
                eye = np.eye(n)
                h = (eye - rho * np.outer(s, y)) @ h @ (eye - rho * np.outer(y, s)) + rho * np.outer(s, s)
            t, val, d = t_new, v_new, d_new
            continue
        # normalized supergradient steps with halving on reversal
        u = d / gn
        if prev_d is not None and float(u @ prev_d) < 0:
            step *= 0.5
        prev_d = u
        if step < 1e-15:
            return ConjugateResult(best_val, best_t, False, it, grad_norm=gn, mode=mode)
        t = t + step * u
        val = prob.value(t)
        d, kink = prob.ascent(t)
    raise ConvergenceError(
        f"Legendre ascent did not converge in {max_steps} steps",
        last_iterate=t,
        diagnostics={"grad_norm": float(np.linalg.norm(d)), "value": val},
    )


def _maximizer_set(sft, f, g, t):
    report = pressure_spectral(sft, f + t * g)
    return frozenset(report.maximizers), report


def _gap(sft, f, g, t, report):
    left, right = directional_derivatives(sft, f + t * g, g, report)
    return right - left


def kink_scan(sft: Sft, f: Potential, g: Potential, t_range, grid: int, tol: float = KINK_GAP) -> list[float]:
    """Locations in ``t_range`` where ``t -> P(f + t g)`` has a kink.

    A kink is flagged at a grid point with a positive derivative gap, or
    between two grid points whose maximizing components differ; each flag
    is refined by bisection on the derivative gap.
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    ts = np.linspace(float(t_range[0]), float(t_range[1]), grid)
    sets = []
    flagged = []
    for t in ts:
        s, report = _maximizer_set(sft, f, g, t)
        sets.append(s)
        flagged.append(len(s) > 1 and _gap(sft, f, g, t, report) > tol)
    kinks = [float(t) for t, fl in zip(ts, flagged) if fl]
    for i in range(grid - 1):
        if flagged[i] or flagged[i + 1] or sets[i] == sets[i + 1]:
            continue
        kinks.append(_bisect_kink(sft, f, g, ts[i], ts[i + 1], sets[i], tol))
    kinks.sort()
    out = []
    for k in kinks:
        if not out or k - out[-1] > 1e-8:
            out.append(k)
    return out


def _bisect_kink(sft, f, g, lo, hi, set_lo, tol):
    while hi - lo > tol * 0.1:
        mid = 0.5 * (lo + hi)
        s, report = _maximizer_set(sft, f, g, mid)
        if len(s) > 1 and _gap(sft, f, g, mid, report) > tol:
            return float(mid)
        if s == set_lo:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


@dataclass
class ConvexityCertificate:
    verdict: str
    min_margin: float
    witnesses: list
    grid: list
    tolerances: dict
    primal_verdict: str
    dual_verdict: str
    skipped: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "primal_verdict": self.primal_verdict,
            "dual_verdict": self.dual_verdict,
            "min_margin": self.min_margin,
            "witnesses": self.witnesses,
            "grid": self.grid,
            "tolerances": self.tolerances,
            "skipped": self.skipped,
        }


def default_dual_grid(dim: int, radius: float = 4.0, points: int = 9):
    axis = np.linspace(-radius, radius, points)
    return [np.array(p) for p in itertools.product(axis, repeat=dim)]


def ess_strict_convexity_check(
    I: Callable,
    domain_samples,
    lm: LogMgf | None = None,
    dual_grid=None,
    strict_tol: float = STRICT_TOL,
) -> ConvexityCertificate:
    """Certify essential strict convexity of a rate function two ways.

    Primal: every sampled pair must satisfy the strict midpoint inequality
    with margin above ``strict_tol``. Dual: the conjugate ``L`` must be
    differentiable across ``dual_grid`` (no kink witness, and no change of
    the maximizing component between grid points). The verdicts must agree.
    """
    if lm is None:
        lm = getattr(I, "log_mgf", None)
    tolerances = {"strict_tol": strict_tol, "kink_gap": KINK_GAP}
    pairs = [(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))) for a, b in domain_samples]
    dim = lm.dim if lm is not None else (len(pairs[0][0]) if pairs else 0)
    if dim == 0:
        return ConvexityCertificate("PASS", math.inf, [], [], tolerances, "PASS", "PASS")

    margins = []
    witnesses = []
    skipped = []
    for a, b in pairs:
        if np.array_equal(a, b):
            continue
        ia, ib, im = I(a), I(b), I(0.5 * (a + b))
        if not all(math.isfinite(v) for v in (ia, ib, im)):
            warnings.warn(f"sample pair {a.tolist()}, {b.tolist()} leaves the domain; skipped", stacklevel=2)
            skipped.append([a.tolist(), b.tolist()])
            continue
        margin = 0.5 * (ia + ib) - im
        margins.append(margin)
        if margin <= strict_tol:
            witnesses.append({"kind": "midpoint", "x": a.tolist(), "y": b.tolist(), "margin": margin})
    min_margin = min(margins) if margins else math.inf
    primal = "PASS" if not witnesses else "FAIL"

    grid_out = []
    dual = "SKIPPED"
    if lm is not None:
        grid = default_dual_grid(dim) if dual_grid is None else [np.atleast_1d(np.asarray(p, float)) for p in dual_grid]
        grid_out = [p.tolist() for p in grid]
        seen = {}
        dual_witnesses = []
        for p in grid:
            report = pressure_spectral(lm.sft, lm.tilted(p), equilibria=False)
            key = frozenset(report.maximizers)
            seen.setdefault(key, p)
            if not report.unique:
                g = grad_L(lm, p)
                if isinstance(g, KinkWitness):
                    dual_witnesses.append({"kind": "kink", **g.to_dict()})
        if len(seen) > 1:
            dual_witnesses.append(
                {"kind": "component-switch", "points": [v.tolist() for v in seen.values()], "maximizers": [sorted(k) for k in seen]}
            )
        dual = "PASS" if not dual_witnesses else "FAIL"
        witnesses.extend(dual_witnesses)

    if dual == "SKIPPED" or dual == primal:
        verdict = primal
    else:
        verdict = "DIAGNOSTIC_FAILURE"
    return ConvexityCertificate(verdict, min_margin, witnesses, grid_out, tolerances, primal, dual, skipped)
