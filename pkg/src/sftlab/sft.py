"""Subshifts of finite type, their word language, locally constant
potentials and Markov measures.

Words are stored as rows of small-integer arrays; the admissible words of
a given length are always listed in lexicographic order, and every
per-word table in the package (potential values, cylinder probabilities,
Markov states) is aligned with that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, ResourceLimitError
from .perron import perron, stationary_vector, strong_components

WORD_CAP = 10**7
STOCHASTIC_TOL = 1e-12


class Sft:
    """One-sided subshift of finite type given by a 0/1 transition matrix.

    Parameters
    ----------
    transitions : array_like
        ``m x m`` matrix with entries in {0, 1}; ``transitions[a][b] == 1``
        allows symbol ``b`` to follow ``a``.
    symbols : sequence of str, optional
        Display labels, one per symbol. Defaults to ``"0"``, ``"1"``, ...
    """

    def __init__(self, transitions, symbols: Sequence[str] | None = None):
        a = np.asarray(transitions)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InputError("transitions must be a non-empty square matrix")
        if not np.isin(a, (0, 1)).all():
            raise InputError("transitions must contain only 0 and 1")
        a = a.astype(np.int64)
        if (a.sum(axis=1) == 0).any():
            raise InputError(f"symbols {np.flatnonzero(a.sum(axis=1) == 0).tolist()} have no successor")
        if (a.sum(axis=0) == 0).any():
            raise InputError(f"symbols {np.flatnonzero(a.sum(axis=0) == 0).tolist()} have no predecessor")
        a.setflags(write=False)
        self.transitions = a
        self.alphabet_size = a.shape[0]
        if symbols is None:
            symbols = [str(i) for i in range(self.alphabet_size)]
        symbols = [str(s) for s in symbols]
        if len(symbols) != self.alphabet_size or len(set(symbols)) != len(symbols):
            raise InputError("symbols must be distinct and match the alphabet size")
        self.symbols = tuple(symbols)
        labels, nontrivial = strong_components(a)
        labels.setflags(write=False)
        self.component_index = labels
        self._nontrivial = nontrivial
        self._words: dict[int, np.ndarray] = {}
        self._lookup: dict[int, np.ndarray] = {}
        self._blocks: dict[int, tuple] = {}

    def __repr__(self):
        return f"Sft(alphabet_size={self.alphabet_size}, transitions={self.transitions.tolist()})"

    # construction helpers

    @classmethod
    def full_shift(cls, m: int) -> "Sft":
        return cls(np.ones((m, m), dtype=int))

    @classmethod
    def golden_mean(cls) -> "Sft":
        """2-shift with the word ``11`` forbidden."""
        return cls([[1, 1], [1, 0]])

    @classmethod
    def disjoint_union(cls, *parts: "Sft") -> "Sft":
        """Block-diagonal union; symbols of later parts are offset."""
        m = sum(p.alphabet_size for p in parts)
        a = np.zeros((m, m), dtype=int)
        off = 0
        for p in parts:
            k = p.alphabet_size
            a[off:off + k, off:off + k] = p.transitions
            off += k
        return cls(a)

    # structure

    @property
    def components(self) -> list[int]:
        """Labels of the nontrivial strongly connected components."""
        return [int(c) for c in np.flatnonzero(self._nontrivial)]

    def component_symbols(self, component: int) -> list[int]:
        return [int(s) for s in np.flatnonzero(self.component_index == component)]

    @property
    def is_irreducible(self) -> bool:
        return len(self._nontrivial) == 1 and bool(self._nontrivial[0])

    def same_as(self, other: "Sft") -> bool:
        return self is other or (
            self.alphabet_size == other.alphabet_size
            and np.array_equal(self.transitions, other.transitions)
        )

    # word language

    def word_count(self, n: int) -> int:
        """Number of admissible words of length ``n``, in exact integers."""
        if n < 0:
            raise InputError("word length must be nonnegative")
        if n == 0:
            return 1
        a = [[int(x) for x in row] for row in self.transitions]
        v = [1] * self.alphabet_size
        for _ in range(n - 1):
            v = [sum(a[i][j] * v[j] for j in range(self.alphabet_size)) for i in range(self.alphabet_size)]
        return sum(v)

    def words(self, n: int, cap: int = WORD_CAP) -> np.ndarray:
        """Admissible words of length ``n`` as an ``(N, n)`` array, lexicographic."""
        if n in self._words:
            return self._words[n]
        count = self.word_count(n)
        if count > cap:
            raise ResourceLimitError("word enumeration cap", count, cap)
        if n == 0:
            out = np.zeros((1, 0), dtype=np.int64)
        else:
            out = np.arange(self.alphabet_size, dtype=np.int64)[:, None]
            for _ in range(n - 1):
                last = out[:, -1]
                succ = self.transitions[last]
                rows, nxt = np.nonzero(succ)
                out = np.concatenate([out[rows], nxt[:, None]], axis=1)
        out.setflags(write=False)
        if count <= 200_000:
            self._words[n] = out
        return out

    def codes(self, words: np.ndarray) -> np.ndarray:
        """Base-m integer code of each row of ``words``."""
        w = np.asarray(words, dtype=np.int64)
        k = w.shape[-1]
        weights = self.alphabet_size ** np.arange(k - 1, -1, -1, dtype=np.int64)
        return w @ weights

    def word_lookup(self, k: int) -> np.ndarray:
        """Array mapping a k-word code to its index among admissible k-words, or -1."""
        if k not in self._lookup:
            table = np.full(self.alphabet_size**k, -1, dtype=np.int64)
            table[self.codes(self.words(k))] = np.arange(self.word_count(k))
            table.setflags(write=False)
            self._lookup[k] = table
        return self._lookup[k]

    def word_index(self, word) -> int:
        """Index of an admissible word among words of its length; -1 if inadmissible."""
        w = self.parse_word(word)
        if len(w) == 0:
            return 0
        return int(self.word_lookup(len(w))[int(self.codes(np.array(w)))])

    def parse_word(self, word) -> tuple[int, ...]:
        """Accept a string of symbol labels or a sequence of ints."""
        if isinstance(word, str):
            if all(len(s) == 1 for s in self.symbols):
                try:
                    return tuple(self.symbols.index(ch) for ch in word)
                except ValueError:
                    raise InputError(f"word {word!r} uses symbols outside the alphabet") from None
            raise InputError("string words need single-character symbol labels")
        w = tuple(int(s) for s in word)
        if any(s < 0 or s >= self.alphabet_size for s in w):
            raise InputError(f"word {w} uses symbols outside the alphabet")
        return w

    def format_word(self, word) -> str:
        sep = "" if all(len(s) == 1 for s in self.symbols) else " "
        return sep.join(self.symbols[int(s)] for s in word)

    def is_admissible(self, word) -> bool:
        w = self.parse_word(word)
        return all(self.transitions[a, b] for a, b in zip(w, w[1:]))

    def block_graph(self, d: int):
        """Higher-block graph on admissible d-words (d >= 1).

        Returns ``(adjacency, src, dst)`` where ``src[e]``, ``dst[e]`` are the
        state indices of the (d+1)-word ``e``.
        """
        if d not in self._blocks:
            ext = self.words(d + 1)
            look = self.word_lookup(d)
            src = look[self.codes(ext[:, :-1])]
            dst = look[self.codes(ext[:, 1:])]
            s = self.word_count(d)
            adj = np.zeros((s, s), dtype=np.int64)
            adj[src, dst] = 1
            for a in (adj, src, dst):
                a.setflags(write=False)
            self._blocks[d] = (adj, src, dst)
        return self._blocks[d]


def enumerate_words(sft: Sft, n: int, cap: int = WORD_CAP) -> np.ndarray:
    """All admissible words of length ``n`` (rows of the returned array)."""
    if n < 1:
        raise InputError("n must be >= 1")
    return sft.words(n, cap=cap)


@dataclass(frozen=True, eq=False)
class Potential:
    """Locally constant function of the first ``depth`` coordinates.

    ``values[i]`` is the value on the i-th admissible ``depth``-word.
    """

    sft: Sft
    depth: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.depth < 1:
            raise InputError("potential depth must be >= 1")
        v = np.array(self.values, dtype=float)
        if v.shape != (self.sft.word_count(self.depth),):
            raise InputError(
                f"depth-{self.depth} potential needs {self.sft.word_count(self.depth)} values, got {v.shape}"
            )
        if not np.isfinite(v).all():
            raise InputError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, sft, c=0.0):
        return cls(sft, 1, np.full(sft.alphabet_size, float(c)))

    @classmethod
    def indicator(cls, sft, symbols):
        """Indicator of the cylinders of the given first symbols."""
        syms = [sft.parse_word(s)[0] if isinstance(s, str) else int(s) for s in symbols]
        v = np.zeros(sft.alphabet_size)
        v[syms] = 1.0
        return cls(sft, 1, v)

    @classmethod
    def cylinder(cls, sft, word):
        """Indicator of the cylinder of one admissible word."""
        w = sft.parse_word(word)
        idx = sft.word_index(w)
        if idx < 0:
            raise InputError(f"word {w} is not admissible")
        v = np.zeros(sft.word_count(len(w)))
        v[idx] = 1.0
        return cls(sft, len(w), v)

    @classmethod
    def from_table(cls, sft, depth, table: Mapping, default=None):
        """Build from a word -> value mapping; missing words take ``default``
        (an error when ``default`` is None)."""
        words = sft.words(depth)
        v = np.full(len(words), np.nan if default is None else float(default))
        for key, val in table.items():
            w = sft.parse_word(key)
            if len(w) != depth:
                raise InputError(f"word {key!r} has length {len(w)}, expected {depth}")
            idx = sft.word_index(w)
            if idx < 0:
                raise InputError(f"word {key!r} is not admissible")
            v[idx] = float(val)
        if np.isnan(v).any():
            missing = [sft.format_word(words[i]) for i in np.flatnonzero(np.isnan(v))[:5]]
            raise InputError(f"potential table is missing admissible words, e.g. {missing}")
        return cls(sft, depth, v)

    @classmethod
    def from_function(cls, sft, depth, fn):
        words = sft.words(depth)
        return cls(sft, depth, np.array([fn(tuple(int(s) for s in w)) for w in words], dtype=float))

    @classmethod
    def random(cls, sft, depth, rng, low=-2.0, high=2.0):
        return cls(sft, depth, rng.uniform(low, high, size=sft.word_count(depth)))

    def __call__(self, word) -> float:
        idx = self.sft.word_index(word)
        if idx < 0:
            raise InputError(f"word {word!r} is not admissible")
        return float(self.values[idx])

    def table(self) -> dict[str, float]:
        return {self.sft.format_word(w): float(v) for w, v in zip(self.sft.words(self.depth), self.values)}

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lift(self, depth: int) -> "Potential":
        """Same function expressed on ``depth``-words (``depth >= self.depth``)."""
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise InputError("cannot lower the depth of a potential")
        w = self.sft.words(depth)
        idx = self.sft.word_lookup(self.depth)[self.sft.codes(w[:, : self.depth])]
        return Potential(self.sft, depth, self.values[idx])

    def _coerce(self, other):
        if isinstance(other, Potential):
            if not self.sft.same_as(other.sft):
                raise InputError("potentials live on different shifts")
            k = max(self.depth, other.depth)
            return self.lift(k), other.lift(k)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self, Potential(self.sft, self.depth, np.full(len(self.values), float(other)))
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return Potential(self.sft, a.depth, a.values + b.values)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating, np.integer)):
            return NotImplemented
        return Potential(self.sft, self.depth, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self


def combine(base: Potential, directions: Sequence[Potential], t) -> Potential:
    """``base + sum_k t[k] * directions[k]`` at the common maximal depth."""
    out = base
    for c, g in zip(np.atleast_1d(np.asarray(t, dtype=float)), directions):
        if c != 0.0:
            out = out + float(c) * g
    return out


def continuation_table(sft: Sft, length: int) -> np.ndarray:
    """Row ``s`` is the canonical continuation of symbol ``s``: the
    ``length`` symbols obtained by repeatedly appending the smallest
    allowed follower."""
    nxt = np.argmax(sft.transitions > 0, axis=1)
    out = np.empty((sft.alphabet_size, length), dtype=np.int64)
    cur = np.arange(sft.alphabet_size)
    for j in range(length):
        cur = nxt[cur]
        out[:, j] = cur
    return out


def extend_words(sft: Sft, words: np.ndarray, length: int) -> np.ndarray:
    """Append ``length`` symbols to every word: the periodic continuation
    when the last symbol may be followed by the first, the canonical
    continuation otherwise. The result is always admissible."""
    n = words.shape[1]
    periodic = words[:, np.arange(n, n + length) % n]
    canonical = continuation_table(sft, length)[words[:, -1]]
    closes = sft.transitions[words[:, -1], words[:, 0]] > 0
    return np.concatenate([words, np.where(closes[:, None], periodic, canonical)], axis=1)


def _window_indices(sft: Sft, words: np.ndarray, k: int) -> np.ndarray:
    """Index of the k-word read at each of the n positions of the
    extended word (see :func:`extend_words`). Returns an ``(N, n)`` array."""
    n = words.shape[1]
    ext = extend_words(sft, words, k - 1)
    cols = np.arange(n)[:, None] + np.arange(k)[None, :]
    return sft.word_lookup(k)[sft.codes(ext[:, cols])]


def birkhoff_sums(f: Potential, words: np.ndarray) -> np.ndarray:
    """Vectorized :func:`birkhoff_sum` over the rows of ``words``."""
    words = np.asarray(words, dtype=np.int64)
    if words.shape[1] < f.depth:
        raise InputError(f"words of length {words.shape[1]} are shorter than the potential depth {f.depth}")
    return f.values[_window_indices(f.sft, words, f.depth)].sum(axis=1)


def birkhoff_sum(f: Potential, w) -> float:
    """Sum of ``f`` over the first n shifts of the extended word.

    A word whose last symbol may be followed by its first is read as the
    periodic point it generates; otherwise it continues with the canonical
    continuation of its last symbol. Either way every window is an
    admissible prefix of one infinite sequence, so sums are additive in f
    regardless of depth.
    """
    word = np.array([f.sft.parse_word(w)], dtype=np.int64)
    if not f.sft.is_admissible(word[0]):
        raise InputError(f"word {w!r} is not admissible")
    return float(birkhoff_sums(f, word)[0])


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Shift-invariant Markov measure of memory ``depth``.

    States are the admissible ``depth``-words in lexicographic order;
    ``transition[u, v]`` is the probability of moving from word ``u`` to
    word ``v`` (which must overlap ``u`` in ``depth - 1`` symbols).
    """

    sft: Sft
    depth: int
    transition: np.ndarray = field(repr=False)
    stationary: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.transition, dtype=float)
        pi = np.array(self.stationary, dtype=float)
        s = self.sft.word_count(self.depth)
        if p.shape != (s, s) or pi.shape != (s,):
            raise InputError(f"memory-{self.depth} measure needs a {s}x{s} transition and {s} stationary weights")
        if (p < 0).any() or (pi < 0).any():
            raise InputError("transition and stationary entries must be nonnegative")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise InputError("transition rows must sum to 1")
        if abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
            raise InputError("stationary weights must sum to 1")
        if np.max(np.abs(pi @ p - pi)) > STOCHASTIC_TOL:
            raise InputError("stationary vector is not invariant under the transition matrix")
        adj, _, _ = self.sft.block_graph(self.depth)
        if ((p > 0) & (adj == 0)).any():
            raise InputError("transition charges moves that the shift forbids")
        p.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "stationary", pi)

    @classmethod
    def from_transition(cls, sft, transition, depth=1):
        """Measure with the unique stationary vector of an irreducible chain."""
        p = np.asarray(transition, dtype=float)
        labels, nontrivial = strong_components(p > 0)
        closed = _closed_classes(p, labels)
        if len(closed) != 1:
            raise InputError("transition has several closed classes; pass the stationary vector explicitly")
        pi = stationary_vector(p, np.flatnonzero(labels == closed[0]))
        return cls(sft, depth, p, pi)

    @classmethod
    def from_edge_flow(cls, sft, depth, flow):
        """Measure whose (depth+1)-block marginal is ``flow`` (aligned with
        the admissible (depth+1)-words). Rows of unvisited states are filled
        with the uniform distribution over allowed successors."""
        adj, src, dst = sft.block_graph(depth)
        q = np.clip(np.asarray(flow, dtype=float), 0.0, None)
        q = q / q.sum()
        s = adj.shape[0]
        joint = np.zeros((s, s))
        joint[src, dst] = q
        pi = joint.sum(axis=1)
        p = np.empty_like(joint)
        live = pi > 0
        p[live] = joint[live] / pi[live, None]
        p[~live] = adj[~live] / adj[~live].sum(axis=1, keepdims=True)
        p /= p.sum(axis=1, keepdims=True)
        # stationary from the chain itself so that pi P = pi holds to rounding
        pi = _stationary_on_support(p, pi > 0, pi)
        return cls(sft, depth, p, pi)

    @property
    def states(self) -> np.ndarray:
        return self.sft.words(self.depth)

    def edge_flow(self) -> np.ndarray:
        """(depth+1)-block probabilities aligned with admissible (depth+1)-words."""
        _, src, dst = self.sft.block_graph(self.depth)
        return self.stationary[src] * self.transition[src, dst]

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.stationary > 0)

    def to_dict(self):
        return {
            "depth": self.depth,
            "states": [self.sft.format_word(w) for w in self.states],
            "transition": self.transition.tolist(),
            "stationary": self.stationary.tolist(),
        }


def _closed_classes(p, labels):
    """Component labels with no probability leaking out."""
    out = []
    for c in np.unique(labels):
        members = labels == c
        rows = p[members]
        if np.all(rows[:, ~members] == 0):
            out.append(int(c))
    return out


def _stationary_on_support(p, live, guess):
    """Solve for the invariant vector class by class, keeping the class
    masses of ``guess``."""
    labels, _ = strong_components(p > 0)
    pi = np.zeros(len(guess))
    for c in _closed_classes(p, labels):
        members = np.flatnonzero(labels == c)
        mass = guess[members].sum()
        if mass > 0:
            pi += mass * stationary_vector(p, members)
    return pi / pi.sum()


def bernoulli(sft: Sft, probs) -> MarkovMeasure:
    """Product measure with the given symbol probabilities (memory 1)."""
    q = np.asarray(probs, dtype=float)
    if q.shape != (sft.alphabet_size,) or (q < 0).any() or abs(q.sum() - 1) > 1e-12:
        raise InputError("probs must be a probability vector over the alphabet")
    supp = q > 0
    if not sft.transitions[np.ix_(supp, supp)].all():
        raise InputError("Bernoulli measure charges forbidden transitions")
    p = np.tile(q, (sft.alphabet_size, 1))
    # rows of uncharged symbols are irrelevant but must respect the shift
    for a in np.flatnonzero(~supp):
        allowed = sft.transitions[a].astype(float)
        p[a] = allowed / allowed.sum()
    return MarkovMeasure(sft, 1, p, q)


def point_mass(sft: Sft, symbol: int) -> MarkovMeasure:
    """Dirac measure on the fixed point ``symbol symbol symbol ...``."""
    if not sft.transitions[symbol, symbol]:
        raise InputError(f"{symbol}{symbol} is forbidden, so there is no such fixed point")
    p = sft.transitions.astype(float)
    p /= p.sum(axis=1, keepdims=True)
    p[symbol] = 0.0
    p[symbol, symbol] = 1.0
    pi = np.zeros(sft.alphabet_size)
    pi[symbol] = 1.0
    return MarkovMeasure(sft, 1, p, pi)


def lift(mu: MarkovMeasure, depth: int) -> MarkovMeasure:
    """Higher-block recoding of ``mu`` as a chain on ``depth``-words."""
    if depth == mu.depth:
        return mu
    if depth < mu.depth:
        raise InputError("cannot lower the memory of a Markov measure")
    sft = mu.sft
    d = mu.depth
    states = sft.words(depth)
    look_d = sft.word_lookup(d)
    pi = cylinder_probabilities(mu, depth)
    adj, src, dst = sft.block_graph(depth)
    ext = sft.words(depth + 1)
    tail_from = look_d[sft.codes(ext[:, depth - d:depth])]
    tail_to = look_d[sft.codes(ext[:, depth + 1 - d:])]
    p = np.zeros((len(states), len(states)))
    p[src, dst] = mu.transition[tail_from, tail_to]
    dead = p.sum(axis=1) == 0
    p[dead] = adj[dead] / adj[dead].sum(axis=1, keepdims=True)
    p /= p.sum(axis=1, keepdims=True)
    return MarkovMeasure(sft, depth, p, pi)


def cylinder_probabilities(mu: MarkovMeasure, n: int) -> np.ndarray:
    """mu([w]) for every admissible n-word w, in lexicographic order."""
    sft = mu.sft
    d = mu.depth
    words = sft.words(n)
    if n <= d:
        # marginalize the stationary law of d-words onto their first n symbols
        look = sft.word_lookup(n)
        idx = look[sft.codes(mu.states[:, :n])]
        return np.bincount(idx, weights=mu.stationary, minlength=len(words))
    look = sft.word_lookup(d)
    first = look[sft.codes(words[:, :d])]
    prob = mu.stationary[first].copy()
    for i in range(1, n - d + 1):
        nxt = look[sft.codes(words[:, i:i + d])]
        prob *= mu.transition[first, nxt]
        first = nxt
    return prob


def entropy(mu: MarkovMeasure) -> float:
    """Kolmogorov-Sinai entropy ``-sum_u pi_u sum_v P_uv log P_uv``."""
    p = mu.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-(mu.stationary @ plogp.sum(axis=1)))


def expectation(mu: MarkovMeasure, f: Potential) -> float:
    """Integral of a locally constant potential against ``mu``."""
    if not mu.sft.same_as(f.sft):
        raise InputError("measure and potential live on different shifts")
    if f.depth > mu.depth + 1:
        mu = lift(mu, f.depth - 1)
    if f.depth <= mu.depth:
        return float(cylinder_probabilities(mu, mu.depth) @ f.lift(mu.depth).values)
    return float(mu.edge_flow() @ f.lift(mu.depth + 1).values)


def is_ergodic(mu: MarkovMeasure) -> bool:
    """True when the chain restricted to its support is irreducible."""
    supp = mu.support()
    sub = mu.transition[np.ix_(supp, supp)] > 0
    labels, _ = strong_components(sub)
    return len(np.unique(labels)) == 1


def component_masses(mu: MarkovMeasure) -> dict[int, float]:
    """Mass that ``mu`` puts on each nontrivial component of the shift."""
    first = mu.states[:, 0]
    comp = mu.sft.component_index[first]
    out: dict[int, float] = {}
    for c in mu.sft.components:
        out[c] = float(mu.stationary[comp == c].sum())
    return out


def mixture(measures: Sequence[MarkovMeasure], weights) -> MarkovMeasure:
    """Convex combination of Markov measures with disjoint supports.

    With disjoint supports the combination is again a Markov measure of the
    same memory, with the block-diagonal chain.
    """
    w = np.asarray(weights, dtype=float)
    if len(measures) != len(w) or (w < 0).any() or abs(w.sum() - 1) > 1e-12:
        raise InputError("weights must be a probability vector matching the measures")
    d = max(m.depth for m in measures)
    ms = [lift(m, d) for m in measures]
    sft = ms[0].sft
    supports = [set(m.support().tolist()) for m in ms]
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            if supports[i] & supports[j]:
                raise InputError("mixture components must have disjoint supports")
    flow = sum(wi * m.edge_flow() for wi, m in zip(w, ms))
    s = sft.word_count(d)
    p = np.zeros((s, s))
    pi = np.zeros(s)
    owner = np.full(s, -1)
    for i, m in enumerate(ms):
        owner[list(supports[i])] = i
    for u in range(s):
        src = ms[owner[u]] if owner[u] >= 0 else ms[0]
        p[u] = src.transition[u]
    for wi, m in zip(w, ms):
        pi += wi * m.stationary
    return MarkovMeasure(sft, d, p, pi)


def parry_measure(sft: Sft, depth: int = 1, component: int | None = None) -> MarkovMeasure:
    """Measure of maximal entropy on an irreducible shift (or on one
    nontrivial component), as a chain of the given memory."""
    if component is None:
        if not sft.is_irreducible:
            raise InputError("the shift is reducible; name a component")
        component = sft.components[0]
    adj, _, _ = sft.block_graph(depth)
    first = sft.words(depth)[:, 0]
    states = np.flatnonzero(sft.component_index[first] == component)
    # keep only words whose symbols all lie in the component
    words = sft.words(depth)[states]
    states = states[np.all(sft.component_index[words] == component, axis=1)]
    sub = adj[np.ix_(states, states)].astype(float)
    pd = perron(sub)
    s = adj.shape[0]
    p = adj / adj.sum(axis=1, keepdims=True)
    p = p.astype(float)
    block = sub * pd.right[None, :] / (pd.root * pd.right[:, None])
    block /= block.sum(axis=1, keepdims=True)
    p[np.ix_(states, states)] = block
    p[states[:, None], np.setdiff1d(np.arange(s), states)[None, :]] = 0.0
    pi = np.zeros(s)
    pi[states] = stationary_vector(block)
    return MarkovMeasure(sft, depth, p, pi)


@dataclass(frozen=True)
class FailureCertificate:
    """No ergodic measure lies within ``bound`` (total variation) of ``masses``."""

    masses: dict
    bound: float
    reason: str

    def to_dict(self):
        return {"masses": {str(k): v for k, v in self.masses.items()}, "bound": self.bound, "reason": self.reason}


def ergodic_approximation(sft: Sft, mu: MarkovMeasure, eps: float):
    """Ergodic Markov measure close to ``mu`` in cylinder probabilities and
    entropy, or a certificate that none exists.

    The joint (depth+1)-block law of ``mu`` is mixed with weight ``eps``
    with that of the measure of maximal entropy on the component carrying
    ``mu``; renormalizing the rows gives a fully supported, hence ergodic,
    chain on that component. When ``mu`` charges several components every
    ergodic measure is at total-variation distance at least one minus the
    largest component mass.
    """
    if not 0.0 < eps < 1.0:
        raise InputError("eps must lie strictly between 0 and 1")
    if not sft.same_as(mu.sft):
        raise InputError("measure lives on a different shift")
    masses = component_masses(mu)
    charged = [c for c, m in masses.items() if m > 0]
    if len(charged) > 1:
        bound = 1.0 - max(masses.values())
        return FailureCertificate(masses, bound, "measure charges several components")
    parry = parry_measure(sft, mu.depth, component=charged[0])
    flow = (1.0 - eps) * mu.edge_flow() + eps * parry.edge_flow()
    return MarkovMeasure.from_edge_flow(sft, mu.depth, flow)


def cylinder_distance(mu: MarkovMeasure, nu: MarkovMeasure, n: int) -> float:
    """Largest difference of n-cylinder probabilities."""
    return float(np.max(np.abs(cylinder_probabilities(mu, n) - cylinder_probabilities(nu, n))))

