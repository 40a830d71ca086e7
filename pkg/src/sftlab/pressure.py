"""Topological pressure, equilibrium states and directional derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InputError
from .perron import perron, stationary_vector, strong_components
from .sft import WORD_CAP, MarkovMeasure, Potential, Sft, birkhoff_sums, entropy, expectation
from .transfer import STATE_CAP, log_periodic_sum, transfer_matrix

TIE_TOL = 1e-10
# above this many words "auto" prefers the transfer program to listing words
AUTO_ENUMERATE = 2**16
GATEAUX_TOL = 1e-10


def pressure_direct(sft: Sft, f: Potential, n: int, cap: int = WORD_CAP, method: str = "auto") -> float:
    """``(1/n) log sum_w exp(S_n f(w))`` over admissible n-words.

    ``method="enumerate"`` lists the words and raises ResourceLimitError
    above ``cap``; ``method="transfer"`` runs the equivalent dynamic
    program; ``"auto"`` enumerates only small word sets (``AUTO_ENUMERATE``)
    and runs the transfer program otherwise.
    """
    if n < f.depth:
        raise InputError(f"n={n} must be at least the potential depth {f.depth}")
    _check_same(sft, f)
    if method == "auto":
        method = "enumerate" if sft.word_count(n) <= min(cap, AUTO_ENUMERATE) else "transfer"
    if method == "enumerate":
        words = sft.words(n, cap=cap)
        return float(logsumexp(birkhoff_sums(f, words))) / n
    if method == "transfer":
        return log_periodic_sum(f, n) / n
    raise InputError(f"unknown method {method!r}")


def _check_same(sft, f):
    if not sft.same_as(f.sft):
        raise InputError("potential lives on a different shift")


@dataclass(frozen=True, eq=False)
class PressureReport:
    """Spectral pressure with its per-component decomposition.

    ``per_component`` pairs each nontrivial component label of the shift
    with the log Perron value of the transfer matrix restricted to it.
    ``equilibrium_states`` holds one extreme equilibrium state per
    maximizing component, in the order of ``maximizers``.
    """

    pressure: float
    per_component: list
    maximizers: list
    equilibrium_states: list = field(repr=False)
    tie_tol: float = TIE_TOL

    @property
    def unique(self) -> bool:
        return len(self.maximizers) == 1

    @property
    def equilibrium_state(self) -> MarkovMeasure:
        if not self.unique:
            raise InputError("equilibrium state is not unique")
        return self.equilibrium_states[0]

    def to_dict(self):
        return {
            "pressure": self.pressure,
            "per_component": [[c, v] for c, v in self.per_component],
            "maximizers": list(self.maximizers),
            "unique": self.unique,
            "equilibrium_states": [mu.to_dict() for mu in self.equilibrium_states],
        }


def _component_states(sft: Sft, states: np.ndarray, labels, nontrivial):
    """Map each nontrivial state-graph component to its shift component."""
    out = {}
    for c in np.flatnonzero(nontrivial):
        members = np.flatnonzero(labels == c)
        symbol_comp = int(sft.component_index[states[members[0], 0]])
        out[symbol_comp] = members
    return out


def pressure_spectral(
    sft: Sft,
    f: Potential,
    tie_tol: float = TIE_TOL,
    state_cap: int = STATE_CAP,
    equilibria: bool = True,
) -> PressureReport:
    """Pressure as the largest log Perron value over the components of the
    transfer matrix, with the equilibrium state built from left and right
    Perron vectors of each maximizing component.

    ``equilibria=False`` skips building the equilibrium states (the report
    then lists maximizers but no measures).
    """
    _check_same(sft, f)
    tm = transfer_matrix(f, state_cap=state_cap)
    m = tm.entries
    labels, nontrivial = strong_components(tm.adjacency)
    comps = _component_states(sft, tm.states, labels, nontrivial)
    per = []
    data = {}
    for c in sorted(comps):
        members = comps[c]
        sub = m[np.ix_(members, members)]
        pd = perron(sub)
        data[c] = (members, sub, pd)
        per.append((c, float(np.log(pd.root) + tm.shift)))
    top = max(v for _, v in per)
    maximizers = [c for c, v in per if v >= top - tie_tol]
    states = [_equilibrium(sft, tm, *data[c]) for c in maximizers] if equilibria else []
    return PressureReport(top, per, maximizers, states, tie_tol)


def _equilibrium(sft, tm, members, sub, pd) -> MarkovMeasure:
    s = tm.entries.shape[0]
    block = sub * pd.right[None, :] / (pd.root * pd.right[:, None])
    block /= block.sum(axis=1, keepdims=True)
    adj = tm.adjacency.astype(float)
    p = adj / adj.sum(axis=1, keepdims=True)
    p[members] = 0.0
    p[np.ix_(members, members)] = block
    pi = np.zeros(s)
    pi[members] = stationary_vector(block)
    return MarkovMeasure(sft, tm.depth - 1, p, pi)


def directional_derivatives(sft: Sft, f: Potential, g: Potential, report: PressureReport | None = None):
    """One-sided derivatives of ``t -> P(f + t g)`` at ``t = 0``.

    The right derivative is the largest, and the left derivative the
    smallest, value of ``mu(g)`` over the extreme equilibrium states of f.
    """
    if report is None:
        report = pressure_spectral(sft, f)
    vals = [expectation(mu, g) for mu in report.equilibrium_states]
    return min(vals), max(vals)


@dataclass(frozen=True)
class GateauxCertificate:
    verdict: bool
    unique: bool
    probes: list

    def __bool__(self):
        return self.verdict

    @property
    def witness(self):
        """First probe index with a nonzero derivative gap, if any."""
        for i, p in enumerate(self.probes):
            if p["gap"] > GATEAUX_TOL:
                return i
        return None

    def to_dict(self):
        return {"verdict": self.verdict, "unique": self.unique, "probes": self.probes, "witness": self.witness}


def gateaux_check(sft: Sft, f: Potential, probes, tol: float = GATEAUX_TOL) -> GateauxCertificate:
    """Gateaux differentiability of the pressure at ``f``, tested on probe
    directions and on the uniqueness of the equilibrium state."""
    report = pressure_spectral(sft, f)
    rows = []
    for g in probes:
        left, right = directional_derivatives(sft, f, g, report)
        rows.append({"left": left, "right": right, "gap": right - left})
    ok = report.unique and all(r["gap"] <= tol for r in rows)
    return GateauxCertificate(ok, report.unique, rows)


def variational_value(mu: MarkovMeasure, f: Potential) -> float:
    """``h(mu) + mu(f)``."""
    return entropy(mu) + expectation(mu, f)
