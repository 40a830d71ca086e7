"""Level-1 and level-2 rate functions.

The level-1 rate function is available by two independent routes: the
Legendre transform of the log-moment generating function (``rate_dual``)
and a direct minimization of the entropy deficit over Markov measures
with prescribed means (``rate_primal``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .convex import LogMgf, legendre, log_mgf
from .pressure import pressure_spectral
from .sft import MarkovMeasure, Potential, Sft, entropy, expectation

DUALITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6
PENALTIES = tuple(10.0**k for k in range(2, 9))


def level2_rate(f: Potential, mu: MarkovMeasure, pressure: float | None = None) -> float:
    """``P(f) - h(mu) - mu(f)``; zero exactly on equilibrium states of f."""
    if pressure is None:
        pressure = pressure_spectral(f.sft, f, equilibria=False).pressure
    return pressure - entropy(mu) - expectation(mu, f)


@dataclass(frozen=True, eq=False)
class Level2Rate:
    base: Potential
    base_pressure: float

    @classmethod
    def of(cls, f: Potential) -> "Level2Rate":
        return cls(f, pressure_spectral(f.sft, f, equilibria=False).pressure)

    def __call__(self, mu: MarkovMeasure) -> float:
        return level2_rate(self.base, mu, self.base_pressure)


@dataclass
class PrimalResult:
    value: float
    measure: MarkovMeasure | None
    residual: float
    stages: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


class RateFunctionHandle:
    """Level-1 rate function ``I_{f,(f_1..f_n)}`` with both evaluation routes."""

    def __init__(self, sft: Sft, base: Potential, directions: Sequence[Potential]):
        self.sft = sft
        self.base = base
        self.directions = tuple(directions)
        self.log_mgf: LogMgf = log_mgf(sft, base, self.directions)
        self._dual_cache: dict = {}

    @property
    def dim(self) -> int:
        return len(self.directions)

    def conjugate(self, x):
        key = tuple(np.atleast_1d(np.asarray(x, dtype=float)).tolist())
        if key not in self._dual_cache:
            self._dual_cache[key] = legendre(self.log_mgf, np.array(key))
        return self._dual_cache[key]

    def dual(self, x) -> float:
        return self.conjugate(x).value

    def primal(self, x) -> float:
        return rate_primal(self, x).value

    def __call__(self, x) -> float:
        return self.dual(x)

    def mean(self) -> np.ndarray:
        """Mean vector of the (first) equilibrium state of the base."""
        report = pressure_spectral(self.sft, self.base)
        mu = report.equilibrium_states[0]
        return np.array([expectation(mu, g) for g in self.directions])


def rate_dual(h: RateFunctionHandle, x) -> float:
    return h.dual(x)


class _PrimalProblem:
    """Convex program over the joint law ``q`` of admissible K-words:
    minimize ``P(f) - h(q) - <q, f>`` subject to shift invariance, total
    mass one and the mean constraints."""

    def __init__(self, h: RateFunctionHandle, x):
        sft = h.sft
        k = max([h.base.depth, 2] + [g.depth for g in h.directions])
        self.sft = sft
        self.memory = k - 1
        _, src, dst = sft.block_graph(self.memory)
        self.src = src
        self.nstates = sft.word_count(self.memory)
        e = len(src)
        flow = np.zeros((self.nstates, e))
        flow[src, np.arange(e)] += 1.0
        flow[dst, np.arange(e)] -= 1.0
        moments = np.array([g.lift(k).values for g in h.directions]).reshape(len(h.directions), e)
        self.a = np.vstack([flow, np.ones((1, e)), moments])
        self.b = np.concatenate([np.zeros(self.nstates), [1.0], np.atleast_1d(np.asarray(x, dtype=float))])
        self.f = h.base.lift(k).values
        self.p0 = h.log_mgf.base_pressure
        self.nedges = e

    def deficit(self, q):
        out = np.bincount(self.src, weights=q, minlength=self.nstates)
        qs = np.maximum(q, 1e-300)
        os_ = np.maximum(out[self.src], 1e-300)
        ent = -float(np.sum(np.where(q > 0, q * np.log(qs / os_), 0.0)))
        return self.p0 - ent - float(q @ self.f), np.log(qs / os_) - self.f

    def penalized(self, q, rho):
        val, grad = self.deficit(q)
        r = self.a @ q - self.b
        return val + 0.5 * rho * float(r @ r), grad + rho * (self.a.T @ r)

    def residual(self, q):
        return float(np.max(np.abs(self.a @ q - self.b)))


def rate_primal(h: RateFunctionHandle, x, penalties=PENALTIES, feasibility_tol=FEASIBILITY_TOL) -> PrimalResult:
    """Minimize the entropy deficit over Markov measures with mean vector x.

    Penalty continuation: each stage minimizes the deficit plus
    ``rho/2 |A q - b|^2`` over nonnegative ``q`` with a bound-constrained
    quasi-Newton method, warm-started from the previous stage. A final
    residual above ``feasibility_tol`` means no invariant measure has
    mean ``x`` and the rate is infinite; otherwise the last iterate is
    projected onto the constraints before the deficit is evaluated.
    """
    prob = _PrimalProblem(h, x)
    q = np.full(prob.nedges, 1.0 / prob.nedges)
    stages = []
    for rho in penalties:
        res = minimize(
            prob.penalized,
            q,
            args=(rho,),
            jac=True,
            method="L-BFGS-B",
            bounds=[(0.0, None)] * prob.nedges,
            options={"maxiter": 20000, "maxcor": 30, "ftol": 1e-16, "gtol": 1e-13},
        )
        q = res.x
        stages.append({"penalty": rho, "residual": prob.residual(q), "iterations": int(res.nit)})
    if prob.residual(q) > feasibility_tol:
        return PrimalResult(math.inf, None, prob.residual(q), stages)
    # least-norm correction onto the constraint set removes the O(1/rho)
    # penalty bias from the reported value
    q = np.clip(q - np.linalg.lstsq(prob.a, prob.a @ q - prob.b, rcond=None)[0], 0.0, None)
    residual = prob.residual(q)
    value, _ = prob.deficit(q)
    mu = MarkovMeasure.from_edge_flow(h.sft, prob.memory, q)
    return PrimalResult(value, mu, residual, stages)


@dataclass
class DualityAudit:
    rows: list
    max_gap: float
    convexity_margin: float
    verdict: str
    tolerance: float = DUALITY_TOL

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def csv_rows(self):
        return [[*r["x"], r["dual"], r["primal"], r["gap"]] for r in self.rows]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "max_gap": self.max_gap,
            "convexity_margin": self.convexity_margin,
            "tolerance": self.tolerance,
            "points": len(self.rows),
        }


def _midpoint_triples(points):
    """Index triples (i, j, m) with points[m] the midpoint of points[i], points[j]."""
    lookup = {tuple(np.round(p, 12)): idx for idx, p in enumerate(points)}
    out = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            mid = tuple(np.round(0.5 * (points[i] + points[j]), 12))
            if mid in lookup:
                out.append((i, j, lookup[mid]))
    return out


def duality_audit(h: RateFunctionHandle, grid, tol: float = DUALITY_TOL, map_fn=map) -> DualityAudit:
    """Compare the dual and primal routes on a grid of interior points.

    ``map_fn`` may be a parallel map (e.g. ``executor.map``); results are
    collected in grid order.
    """
    points = [np.atleast_1d(np.asarray(x, dtype=float)) for x in grid]

    def one(x):
        return h.dual(x), rate_primal(h, x).value

    results = list(map_fn(one, points))
    rows = []
    gaps = []
    for x, (d, p) in zip(points, results):
        gap = abs(d - p) if math.isfinite(d) and math.isfinite(p) else (0.0 if d == p else math.inf)
        gaps.append(gap)
        rows.append({"x": x.tolist(), "dual": d, "primal": p, "gap": gap})
    margins = []
    for i, j, m in _midpoint_triples(points):
        vi, vj, vm = results[i][0], results[j][0], results[m][0]
        if math.isfinite(vi) and math.isfinite(vj):
            margins.append(0.5 * (vi + vj) - vm)
    margin = min(margins) if margins else math.inf
    max_gap = max(gaps) if gaps else 0.0
    ok = max_gap <= tol and margin >= -1e-9
    return DualityAudit(rows, max_gap, margin, "PASS" if ok else "FAIL", tol)
