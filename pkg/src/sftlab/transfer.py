"""Transfer matrices and exact weighted word sums.

All sums here use the same window convention as
:func:`sftlab.sft.birkhoff_sum`, so an enumeration over words and the
dynamic programs below compute identical quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InputError, ResourceLimitError
from .sft import Potential, Sft, continuation_table

STATE_CAP = 4096
MIN_EXPONENT = -700.0


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """``entries[u, v] = exp(f(u + v[-1]))`` on admissible (depth-1)-words.

    ``shift`` has been subtracted from every exponent; the true log Perron
    value is ``log(root) + shift``.
    """

    sft: Sft
    depth: int
    entries: np.ndarray = field(repr=False)
    shift: float

    @property
    def states(self) -> np.ndarray:
        return self.sft.words(self.depth - 1)

    @property
    def adjacency(self) -> np.ndarray:
        return self.sft.block_graph(self.depth - 1)[0]


def transfer_matrix(f: Potential, state_cap: int = STATE_CAP) -> TransferMatrix:
    k = max(f.depth, 2)
    sft = f.sft
    s = sft.word_count(k - 1)
    if s > state_cap:
        raise ResourceLimitError("transfer matrix state cap", s, state_cap)
    g = f.lift(k)
    _, src, dst = sft.block_graph(k - 1)
    shift = float(np.max(g.values))
    m = np.zeros((s, s))
    # floor keeps every allowed move strictly positive, so the graph
    # structure survives extreme tilts
    m[src, dst] = np.exp(np.maximum(g.values - shift, MIN_EXPONENT))
    m.setflags(write=False)
    return TransferMatrix(sft, k, m, shift)


def log_path_sum(f: Potential, n: int) -> float:
    """``log(1^T M^n 1)`` for the transfer matrix of ``f``, renormalizing
    at every step."""
    tm = transfer_matrix(f)
    v = np.ones(tm.entries.shape[0])
    acc = 0.0
    for _ in range(n):
        v = tm.entries @ v
        s = v.sum()
        v /= s
        acc += np.log(s)
    return acc + n * tm.shift


def _wrap_tables(sft: Sft, k: int, prefixes: np.ndarray, states: np.ndarray):
    """Index of each wrap-around window for every (first k-1 symbols,
    final k-word) pair, following :func:`sftlab.sft.extend_words`.

    Returns an array of shape ``(P, S, k-1)``.
    """
    look = sft.word_lookup(k)
    canonical = continuation_table(sft, k - 1)[states[:, -1]]
    out = np.empty((len(prefixes), len(states), k - 1), dtype=np.int64)
    for pi, p in enumerate(prefixes):
        closes = sft.transitions[states[:, -1], p[0]] > 0
        tail = np.where(closes[:, None], np.broadcast_to(p, (len(states), k - 1)), canonical)
        ext = np.concatenate([states, tail], axis=1)
        for j in range(1, k):
            out[pi, :, j - 1] = look[sft.codes(ext[:, j : j + k])]
    return out


def log_periodic_sum(f: Potential, n: int) -> float:
    """``log sum_w exp(S_n f(w))`` over admissible n-words, computed by a
    dynamic program over (first k-1 symbols, last k symbols).

    Exactly equal (up to rounding) to summing ``exp(birkhoff_sums(f, words))``.
    """
    sft = f.sft
    k = f.depth
    if n < k:
        raise InputError(f"n={n} is shorter than the potential depth {k}")
    states = sft.words(k)
    look = sft.word_lookup(k)
    if k == 1:
        prefixes = np.zeros((1, 0), dtype=np.int64)
    else:
        prefixes = sft.words(k - 1)
    ext = sft.words(k + 1)
    src = look[sft.codes(ext[:, :-1])]
    dst = look[sft.codes(ext[:, 1:])]
    wraps = _wrap_tables(sft, k, prefixes, states) if k > 1 else None
    total = []
    for pi, p in enumerate(prefixes):
        start = np.all(states[:, : k - 1] == p, axis=1) if k > 1 else np.ones(len(states), dtype=bool)
        logv = np.where(start, f.values, -np.inf)
        for _ in range(n - k):
            m = logv.max()
            if not np.isfinite(m):
                break
            w = np.exp(logv - m)
            nxt = np.zeros(len(states))
            np.add.at(nxt, dst, w[src])
            with np.errstate(divide="ignore"):
                logv = np.log(nxt) + m + f.values
        if k > 1:
            logv = logv + f.values[wraps[pi]].sum(axis=1)
        total.append(logsumexp(logv))
    return float(logsumexp(total))
