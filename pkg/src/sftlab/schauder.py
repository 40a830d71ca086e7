"""A Haar-type cylinder coordinate system on locally constant functions.

The basis starts with the constant function 1. Then, for every admissible
word w (by length, then lexicographically, starting with the empty word)
and every follower j of w other than the first, it has the element

    e_{w,j} = 1_[wj] - 1_[w] / |F(w)|

where F(w) is the set of symbols that may follow w. Truncated at depth K
the elements form a basis of the depth-K locally constant functions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InputError
from .sft import Potential, Sft

RESIDUAL_TOL = 1e-9
TRIALS = 200


class CylinderBasis:
    """Cylinder basis truncated at depth ``k``.

    ``matrix[u, i]`` is the value of element ``i`` on the ``k``-word ``u``;
    ``labels[i]`` is ``None`` for the constant and ``(w, j)`` otherwise.
    """

    def __init__(self, sft: Sft, k: int):
        if k < 1:
            raise InputError("truncation depth must be >= 1")
        self.sft = sft
        self.depth = k
        words = sft.words(k)
        cols = [np.ones(len(words))]
        labels: list = [None]
        for j in range(k):
            prefixes = sft.words(j) if j else np.zeros((1, 0), dtype=np.int64)
            for w in prefixes:
                in_w = np.all(words[:, :j] == w, axis=1)
                followers = sorted({int(s) for s in words[in_w, j]})
                for s in followers[1:]:
                    in_ws = in_w & (words[:, j] == s)
                    cols.append(in_ws - in_w / len(followers))
                    labels.append((tuple(int(a) for a in w), s))
        self.matrix = np.column_stack(cols)
        self.labels = labels
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise InputError("shift has words without continuation; cylinder basis is not square")

    def __len__(self) -> int:
        return self.matrix.shape[1]

    def label(self, i: int) -> str:
        lab = self.labels[i]
        if lab is None:
            return "1"
        w, s = lab
        return f"[{self.sft.format_word(w)}|{self.sft.format_word((s,))}]"

    def element(self, i: int) -> Potential:
        return Potential(self.sft, self.depth, self.matrix[:, i])

    @cached_property
    def dual(self) -> np.ndarray:
        """Rows are the coordinate functionals on depth-k value vectors."""
        return np.linalg.inv(self.matrix)

    @cached_property
    def functional_norms(self) -> np.ndarray:
        """``s_n = sup_{|f| <= 1} |lambda_n(f)|``, the l1 norm of each functional."""
        return np.abs(self.dual).sum(axis=1)

    def functional_norms_bruteforce(self) -> np.ndarray:
        """Same norms by maximizing over all +-1 value vectors."""
        n = len(self)
        if n > 20:
            raise InputError(f"brute force over 2^{n} sign vectors is too large")
        best = np.zeros(n)
        for signs in itertools.product((-1.0, 1.0), repeat=n):
            best = np.maximum(best, np.abs(self.dual @ np.array(signs)))
        return best

    def coordinates(self, f: Potential) -> np.ndarray:
        if not self.sft.same_as(f.sft):
            raise InputError("potential lives on a different shift")
        if f.depth > self.depth:
            raise InputError(f"potential depth {f.depth} exceeds the truncation depth {self.depth}")
        return np.linalg.solve(self.matrix, f.lift(self.depth).values)

    def reconstruct(self, coefficients) -> Potential:
        return Potential(self.sft, self.depth, self.matrix @ np.asarray(coefficients, dtype=float))


def expand(basis: CylinderBasis, f: Potential) -> np.ndarray:
    """Coefficients of ``f`` in the basis."""
    return basis.coordinates(f)


def perturbation_condition(basis: CylinderBasis, h_norms) -> tuple[float, bool]:
    """``sum_n s_n |h_n|`` and whether it is below one, the condition under
    which the perturbed sequence ``(f_n + h_n)`` stays a basis."""
    h = np.asarray(h_norms, dtype=float)
    if h.shape != (len(basis),):
        raise InputError(f"need {len(basis)} perturbation norms, got {h.shape}")
    if not np.isfinite(h).all() or (h < 0).any():
        raise InputError("perturbation norms must be finite and nonnegative")
    total = float(basis.functional_norms @ h)
    return total, total < 1.0


@dataclass
class SpanVerdict:
    """Outcome of the span-inclusion check.

    ``inclusion_holds`` is decided by the trials; ``inclusion_exact`` by
    the rank criterion ``rank [H | F] == rank H``. ``consistent`` records
    whether the two implications between independence and inclusion hold.
    """

    independent: bool
    f_independent: bool
    inclusion_holds: bool
    inclusion_exact: bool
    trials: int
    max_residual: float
    violations: int
    witness: list | None = field(default=None)

    @property
    def consistent(self) -> bool:
        forward = (not self.independent) or self.inclusion_holds
        backward = (not self.f_independent) or (not self.inclusion_holds) or self.independent
        return forward and backward and self.inclusion_holds == self.inclusion_exact

    def to_dict(self):
        return {
            "independent": self.independent,
            "inclusion_holds": self.inclusion_holds,
            "trials": self.trials,
            "max_residual": self.max_residual,
            "inclusion_exact": self.inclusion_exact,
            "f_independent": self.f_independent,
            "violations": self.violations,
            "consistent": self.consistent,
            "witness": self.witness,
        }


def _rank(rows) -> int:
    a = np.atleast_2d(np.asarray(rows, dtype=float))
    if a.size == 0:
        return 0
    return int(np.linalg.matrix_rank(a, tol=RESIDUAL_TOL))


def lemma14_span_check(
    w_basis: Sequence[Potential],
    wt_basis: Sequence[Potential],
    f_seq: Sequence[Potential],
    h_seq: Sequence[Potential],
    trials: int = TRIALS,
    rng=None,
) -> SpanVerdict:
    """Check that every nonzero combination of ``f_n + h_n`` lies in
    ``W + (W~ minus 0)``, where ``f_n`` lie in W and ``h_n`` in W~.

    Half of the trials draw coefficients uniformly from [-1, 1]; the other
    half are projected onto the combinations that annihilate the ``h_n``
    (rescaled into [-1, 1]), where a violation has to live if there is one.
    Membership in ``W + W~`` is decided by a least-squares residual.
    """
    if len(f_seq) != len(h_seq):
        raise InputError("f_seq and h_seq must have the same length")
    everything = [*w_basis, *wt_basis, *f_seq, *h_seq]
    if not everything:
        return SpanVerdict(True, True, True, True, 0, 0.0, 0)
    sft = everything[0].sft
    basis = CylinderBasis(sft, max(p.depth for p in everything))
    coords = lambda seq: np.array([basis.coordinates(p) for p in seq]).reshape(len(seq), len(basis))
    wm, wtm, fm, hm = coords(w_basis), coords(wt_basis), coords(f_seq), coords(h_seq)
    rw, rwt = _rank(wm), _rank(wtm)
    if _rank(np.vstack([wm, wtm])) != rw + rwt:
        raise InputError("W and W~ must span linearly independent subspaces")
    for name, seq, sub in (("f_seq", fm, wm), ("h_seq", hm, wtm)):
        if len(seq) and _rank(np.vstack([sub, seq])) != _rank(sub):
            raise InputError(f"{name} is not contained in its subspace")

    n = len(h_seq)
    independent = _rank(hm) == n
    f_independent = _rank(fm) == n
    exact = _rank(np.hstack([hm, fm])) == _rank(hm) if n else True
    if n == 0:
        return SpanVerdict(True, True, True, exact, 0, 0.0, 0)

    rng = np.random.default_rng(rng)
    stacked = np.vstack([wm, wtm]).T
    split = len(wm)
    _, sv, vt = np.linalg.svd(hm.T)
    null = vt[int(np.sum(sv > RESIDUAL_TOL)) :]
    violations, max_res, witness = 0, 0.0, None
    for trial in range(trials):
        c = rng.uniform(-1.0, 1.0, size=n)
        if trial % 2 and len(null):
            c = null.T @ (null @ c)
            c /= np.max(np.abs(c))
        v = c @ (fm + hm)
        if np.linalg.norm(v) <= RESIDUAL_TOL:
            continue
        a, *_ = np.linalg.lstsq(stacked, v, rcond=None)
        res = float(np.max(np.abs(stacked @ a - v)))
        max_res = max(max_res, res)
        tilde = wtm.T @ a[split:] if len(wtm) else np.zeros_like(v)
        if res > RESIDUAL_TOL or np.linalg.norm(tilde) <= RESIDUAL_TOL:
            violations += 1
            if witness is None:
                witness = c.tolist()
    return SpanVerdict(independent, f_independent, violations == 0, exact, trials, max_res, violations, witness)
