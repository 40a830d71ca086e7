"""Exact finite-n large deviation computations for the weighted word laws.

At length n every admissible word w carries probability proportional to
``exp(S_n f(w))`` and is sent to its vector of Birkhoff averages
``((1/n) S_n f_1(w), ..., (1/n) S_n f_d(w))``. Everything here is exact
enumeration or a deterministic dynamic program; nothing is sampled.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import InputError
from .pressure import pressure_spectral
from .rate import RateFunctionHandle
from .sft import WORD_CAP, Potential, Sft, birkhoff_sums
from .transfer import _wrap_tables, log_path_sum

BALL_SLACK = 1e-12


def finite_n_mgf(sft: Sft, f: Potential, g: Potential, n: int) -> float:
    """``(1/n) [log 1^T M_{f+g}^n 1 - log 1^T M_f^n 1]`` with transfer matrices."""
    if n < 1:
        raise InputError("n must be >= 1")
    return (log_path_sum(f + g, n) - log_path_sum(f, n)) / n


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    """Law on words of length n with weights ``exp(S_n f(w)) / Z_n``."""

    sft: Sft
    base: Potential
    n: int
    cap: int = WORD_CAP

    @cached_property
    def words(self) -> np.ndarray:
        return self.sft.words(self.n, cap=self.cap)

    @cached_property
    def log_weights(self) -> np.ndarray:
        s = birkhoff_sums(self.base, self.words)
        return s - logsumexp(s)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def averages(self, g: Potential) -> np.ndarray:
        """``(1/n) S_n g`` for every word, i.e. ``g`` integrated against the
        empirical measure of the word's periodic orbit."""
        return birkhoff_sums(g, self.words) / self.n

    def tilt(self, g: Potential) -> np.ndarray:
        """Log weights after reweighting by ``exp(S_n g)`` and renormalizing."""
        s = self.log_weights + birkhoff_sums(g, self.words)
        return s - logsumexp(s)


@dataclass(frozen=True, eq=False)
class PushforwardLaw:
    """Law of the Birkhoff-average vector of ``directions`` under ``law``."""

    law: EmpiricalLaw
    directions: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "directions", tuple(self.directions))

    @property
    def dim(self) -> int:
        return len(self.directions)

    @cached_property
    def points(self) -> np.ndarray:
        if not self.directions:
            return np.zeros((len(self.law.words), 0))
        return np.column_stack([self.law.averages(g) for g in self.directions])

    @property
    def weights(self) -> np.ndarray:
        return self.law.weights


def pushforward(sft: Sft, base: Potential, directions: Sequence[Potential], n: int, cap: int = WORD_CAP) -> PushforwardLaw:
    return PushforwardLaw(EmpiricalLaw(sft, base, n, cap), tuple(directions))


def ball_log_probability(pl: PushforwardLaw, x, delta: float, method: str = "auto") -> float:
    """``(1/n) log P(|average - x|_inf <= delta)``; ``-inf`` for an empty ball.

    ``method`` is ``"enumerate"``, ``"dp"`` or ``"auto"`` (enumeration
    while the word count is within the law's cap).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    law = pl.law
    if method == "auto":
        method = "enumerate" if law.sft.word_count(law.n) <= law.cap else "dp"
    if method == "enumerate":
        inside = np.all(np.abs(pl.points - x) <= delta + BALL_SLACK, axis=1)
        if not inside.any():
            return -math.inf
        return float(logsumexp(law.log_weights[inside])) / law.n
    if method == "dp":
        return ball_log_probability_dp(pl, x, delta).value
    raise InputError(f"unknown method {method!r}")


@dataclass(frozen=True)
class DpBallResult:
    value: float
    quantization_step: tuple
    error_bound: float


def _lattice_unit(values, max_denominator: int = 10**6) -> float | None:
    """Largest ``1/L`` with every value an integer multiple of it, when the
    values are rationals with denominators up to ``max_denominator``."""
    lcm = 1
    for v in np.unique(values):
        fr = Fraction(float(v)).limit_denominator(max_denominator)
        if abs(float(fr) - v) > 1e-12 * max(1.0, abs(v)):
            return None
        lcm = math.lcm(lcm, fr.denominator)
        if lcm > max_denominator:
            return None
    return 1.0 / lcm


def _quantization(values, delta: float, n: int):
    """Step for one direction: ``delta / (8 n)`` or finer, chosen to divide
    the lattice unit of the values when they have one (then exact)."""
    target = delta / (8 * n)
    unit = _lattice_unit(values)
    if unit is None:
        return target, target / 2
    return unit / math.ceil(unit / target), 0.0


def ball_log_probability_dp(pl: PushforwardLaw, x, delta: float) -> DpBallResult:
    """Ball probability by a dynamic program over (first K-1 symbols, last
    K-word, quantized partial sums).

    Window values of each direction are counted in multiples of a step no
    larger than ``delta / (8 n)``. When the values share a rational lattice
    the step divides it and the program is exact; otherwise values are
    rounded and the Birkhoff averages are off by at most half a step, which
    is reported as ``error_bound``.
    """
    law = pl.law
    sft, n = law.sft, law.n
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = max([law.base.depth] + [g.depth for g in pl.directions])
    if n < k:
        raise InputError(f"n={n} is shorter than the potential depth {k}")
    fv = law.base.lift(k).values
    lifted = [g.lift(k).values for g in pl.directions]
    quant = [_quantization(v, delta, n) for v in lifted]
    steps = np.array([q[0] for q in quant])
    qv = np.array([np.rint(v / st) for v, st in zip(lifted, steps)], dtype=np.int64).reshape(pl.dim, -1).T
    states = sft.words(k)
    look = sft.word_lookup(k)
    ext = sft.words(k + 1)
    src = look[sft.codes(ext[:, :-1])]
    dst = look[sft.codes(ext[:, 1:])]
    order = np.argsort(src, kind="stable")
    src, dst = src[order], dst[order]
    starts = np.searchsorted(src, np.arange(len(states) + 1))
    prefixes = sft.words(k - 1) if k > 1 else np.zeros((1, 0), dtype=np.int64)
    wraps = _wrap_tables(sft, k, prefixes, states) if k > 1 else None

    log_in, log_all = [], []
    for pi, p in enumerate(prefixes):
        first = np.flatnonzero(np.all(states[:, : k - 1] == p, axis=1)) if k > 1 else np.arange(len(states))
        keys = np.column_stack([first, qv[first]])
        logw = fv[first].copy()
        for _ in range(n - k):
            # expand every (state, sums) entry along the outgoing moves
            st = keys[:, 0]
            counts = starts[st + 1] - starts[st]
            rep = np.repeat(np.arange(len(keys)), counts)
            offs = np.arange(len(rep)) - np.repeat(np.cumsum(counts) - counts, counts)
            nxt = dst[starts[st][rep] + offs]
            new_keys = np.column_stack([nxt, keys[rep, 1:] + qv[nxt]])
            new_logw = logw[rep] + fv[nxt]
            keys, inv = np.unique(new_keys, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            m = new_logw.max()
            logw = np.log(np.bincount(inv, weights=np.exp(new_logw - m), minlength=len(keys))) + m
        sums = keys[:, 1:].copy()
        if k > 1:
            wrap_idx = wraps[pi][keys[:, 0]]
            logw = logw + fv[wrap_idx].sum(axis=1)
            sums = sums + qv[wrap_idx].sum(axis=1)
        avg = sums * steps / n
        inside = np.all(np.abs(avg - x) <= delta + BALL_SLACK, axis=1)
        log_all.append(logsumexp(logw))
        log_in.append(logsumexp(logw[inside]) if inside.any() else -math.inf)
    total = logsumexp(log_all)
    hit = logsumexp(log_in) if np.isfinite(log_in).any() else -math.inf
    value = float(hit - total) / n if math.isfinite(hit) else -math.inf
    return DpBallResult(value, tuple(steps.tolist()), max((q[1] for q in quant), default=0.0))


def ball_infimum(h: RateFunctionHandle, x, delta: float) -> float:
    """``inf`` of the rate function over the closed sup-norm ball B(x, delta)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = x - delta, x + delta
    mean = h.mean()
    if np.all((mean >= lo) & (mean <= hi)):
        return 0.0
    if h.dim == 1:
        # convex in one variable: the infimum sits at the endpoint nearest the mean
        return h.dual(np.clip(mean, lo, hi))
    start = np.clip(mean, lo, hi)

    def fun(y):
        c = h.conjugate(y)
        if c.infinite:
            return 1e300, np.zeros_like(y)
        return c.value, c.maximizer

    res = minimize(fun, start, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)))
    return float(res.fun) if res.fun < 1e300 else math.inf


@dataclass
class GartnerReport:
    verdict: str
    hypothesis: bool
    tolerance: float
    lipschitz: float
    rows: list
    fits: list

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def csv_rows(self):
        return [[r["n"], *r["x"], r["empirical"], r["predicted"], r["gap"]] for r in self.rows]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "hypothesis_unique_equilibrium": self.hypothesis,
            "tolerance": self.tolerance,
            "lipschitz": self.lipschitz,
            "fits": self.fits,
        }


def _fit_rate(ns, values):
    """Intercept of the least-squares line value = a + b / n over the last
    three finite points."""
    pts = [(n, v) for n, v in zip(ns, values) if math.isfinite(v)][-3:]
    if not pts:
        return math.inf
    if len(pts) == 1:
        return pts[0][1]
    inv = np.array([1.0 / n for n, _ in pts])
    vals = np.array([v for _, v in pts])
    a = np.column_stack([np.ones_like(inv), inv])
    coef, *_ = np.linalg.lstsq(a, vals, rcond=None)
    return float(coef[0])


def gartner_audit(
    sft: Sft,
    f: Potential,
    g: Potential,
    directions: Sequence[Potential],
    n_schedule: Sequence[int],
    x_grid,
    delta: float,
    method: str = "auto",
) -> GartnerReport:
    """Compare exact ball decay rates with the Legendre rate function.

    For each x the decay rate ``-(1/n) log P(B(x, delta))`` is fitted
    against 1/n and compared with the infimum of ``L*`` over the ball.
    The tolerance is ``lip * delta + 10 log(n_max) / n_max`` with ``lip``
    the largest gradient norm of the rate function over the grid.
    """
    base = f + g
    hypothesis = pressure_spectral(sft, base, equilibria=False).unique
    h = RateFunctionHandle(sft, base, directions)
    ns = sorted(int(n) for n in n_schedule)
    xs = [np.atleast_1d(np.asarray(x, dtype=float)) for x in x_grid]
    laws = {n: pushforward(sft, base, directions, n) for n in ns}

    lip = 0.0
    for x in xs:
        c = h.conjugate(x)
        if c.maximizer is not None and math.isfinite(c.value):
            lip = max(lip, float(np.linalg.norm(c.maximizer)))
    n_max = ns[-1]
    tol = lip * delta + 10.0 * math.log(n_max) / n_max

    rows, fits = [], []
    worst = 0.0
    for x in xs:
        predicted = ball_infimum(h, x, delta)
        empirical = []
        for n in ns:
            lp = ball_log_probability(laws[n], x, delta, method=method)
            e = -lp
            empirical.append(e)
            gap = e - predicted if math.isfinite(e) and math.isfinite(predicted) else math.inf
            rows.append({"n": n, "x": x.tolist(), "empirical": e, "predicted": predicted, "gap": gap})
        fitted = _fit_rate(ns, empirical)
        if math.isinf(fitted) and math.isinf(predicted):
            disc = 0.0
        elif math.isinf(fitted) or math.isinf(predicted):
            disc = math.inf
        else:
            disc = abs(fitted - predicted)
        worst = max(worst, disc)
        fits.append({"x": x.tolist(), "fitted_rate": fitted, "predicted": predicted, "discrepancy": disc, "pass": disc <= tol})
    ok = hypothesis and worst <= tol
    return GartnerReport("PASS" if ok else "FAIL", hypothesis, tol, lip, rows, fits)
