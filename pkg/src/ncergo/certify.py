"""Witness-projection certification of almost-uniform convergence.

A certificate realizes a convergence statement at a finite horizon: a
single projection of small trace deficiency under which the uniform-norm
tails of a finite trace of elements are small, one-sided ("au" mode,
bounds on (limit - x_n) e) or two-sided ("bau" mode, bounds on
e (limit - x_n) e).  The witness search budgets the trace deficiency
geometrically across terms and then greedily re-invests unused budget
into the worst tail bound.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .algebra import (Element, TracedAlgebra, projection_from_ranges,
                      trace_deficiency)
from .config import DEFAULT, Tolerances
from .errors import InvalidInputError, NoLimitError, PostconditionError
from .singular import enlarge_projection, measure_metric, spectral_projection_below


@dataclass(frozen=True)
class FiniteTrace:
    """A finite prefix of a net of elements, sharing one algebra."""

    elements: tuple

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise InvalidInputError("trace must be non-empty")
        algebra = elements[0].algebra
        for x in elements[1:]:
            x._same_algebra(elements[0])
        object.__setattr__(self, "elements", elements)

    @property
    def algebra(self) -> TracedAlgebra:
        return self.elements[0].algebra

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class WitnessCertificate:
    """A projection witness with its achieved tail bounds.

    `verdict` is a finite-horizon judgment: "certified" claims nothing
    about the trace beyond `horizon` indices.
    """

    mode: str  # "au" | "bau"
    epsilon: float
    projection: Element
    trace_deficiency: float
    tail_bounds: tuple  # tuple of (index, bound)
    verdict: str  # "certified" | "refuted-at-horizon"
    horizon: int
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("au", "bau"):
            raise InvalidInputError("mode must be 'au' or 'bau'")
        if self.trace_deficiency > self.epsilon + 1e-12:
            raise InvalidInputError("trace deficiency exceeds the budget")
        if any(b < 0 for _, b in self.tail_bounds):
            raise InvalidInputError("tail bounds must be non-negative")
        object.__setattr__(self, "tail_bounds",
                           tuple((int(i), float(b)) for i, b in self.tail_bounds))

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def to_json(self) -> str:
        return json.dumps({
            "mode": self.mode,
            "epsilon": self.epsilon,
            "trace_deficiency": self.trace_deficiency,
            "tail_bounds": [[i, b] for i, b in self.tail_bounds],
            "verdict": self.verdict,
            "horizon": self.horizon,
            "notes": self.notes,
        }, sort_keys=True, indent=2)

    def tail_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,bound\n")
        for i, b in self.tail_bounds:
            buf.write(f"{i},{b!r}\n")
        return buf.getvalue()


def _compressed_bound(d: Element, e: Element, mode: str) -> float:
    if mode == "au":
        return (d @ e).sup_norm()
    return (e @ d @ e).sup_norm()


def _distinct_levels(d: Element) -> List[float]:
    """Candidate spectral cut levels, descending; always ends at 0."""
    svals = np.concatenate([np.asarray(s) for s in d.singular_values()])
    levels = sorted({round(float(s), 14) for s in svals if s > 0}, reverse=True)
    levels.append(0.0)
    return levels


def _tail_weight(d: Element, level: float, tol: Tolerances) -> float:
    """Weighted count of singular values strictly above the cut."""
    cut = level + tol.rank_rel * max(d.sup_norm(), 1.0)
    total = 0.0
    for s, (_, w) in zip(d.singular_values(), d.algebra.blocks):
        total += w * int(np.count_nonzero(np.asarray(s) > cut))
    return total


class _MeetBuilder:
    """Incrementally maintained meet of one projection per difference term.

    The meet is the projection onto the common range, computed per block
    as the kernel of the sum of the complements; swapping one term's
    projection only updates that sum.
    """

    def __init__(self, algebra, projections, tol: Tolerances):
        self.algebra = algebra
        self.tol = tol
        self.current = list(projections)
        self._sums = [sum((np.eye(d, dtype=complex) - p.data[i]
                           for p in self.current),
                          np.zeros((d, d), dtype=complex))
                      for i, d in enumerate(algebra.dims)]

    def _meet_from_sums(self, sums):
        bases = []
        for s in sums:
            w, v = np.linalg.eigh((s + s.conj().T) / 2)
            bases.append(v[:, w < 1e-7 * max(1.0, len(self.current))])
        return projection_from_ranges(self.algebra, bases, self.tol)

    def meet(self) -> Element:
        return self._meet_from_sums(self._sums)

    def with_swap(self, index: int, projection: Element) -> Element:
        # complements differ by (old - new) of the projections themselves
        sums = [s + (old_b - new_b)
                for s, old_b, new_b in zip(self._sums,
                                           self.current[index].data,
                                           projection.data)]
        return self._meet_from_sums(sums)

    def commit(self, index: int, projection: Element):
        self._sums = [s + (old_b - new_b)
                      for s, old_b, new_b in zip(self._sums,
                                                 self.current[index].data,
                                                 projection.data)]
        self.current[index] = projection


def _search_witness(differences: Sequence[Element], epsilon: float, mode: str,
                    tol: Tolerances, max_iter: int = 600):
    """Greedy witness search over spectral cut levels.

    Starts from the geometric per-term budgets epsilon * 2^-(n+1) (the sum
    never exceeds epsilon), then repeatedly tightens the cut of the term
    with the worst bound as long as the meet keeps its deficiency within
    epsilon.  Returns (projection, deficiency, bounds).
    """
    algebra = differences[0].algebra
    levels = [_distinct_levels(d) for d in differences]
    cursor = []
    for n, d in enumerate(differences):
        budget = epsilon * 2.0 ** (-(n + 1))
        k = 0
        for j, lv in enumerate(levels[n]):
            if _tail_weight(d, lv, tol) <= budget:
                k = j
            else:
                break
        cursor.append(k)

    proj_cache: dict = {}

    def term_projection(n: int, k: int) -> Element:
        if (n, k) not in proj_cache:
            proj_cache[n, k] = spectral_projection_below(
                differences[n], levels[n][k], tol)
        return proj_cache[n, k]

    builder = _MeetBuilder(algebra,
                           [term_projection(n, k) for n, k in enumerate(cursor)],
                           tol)
    e = builder.meet()
    if trace_deficiency(e) > epsilon + 1e-12:
        raise PostconditionError("initial witness exceeds the trace budget")
    bounds = [_compressed_bound(d, e, mode) for d in differences]
    stuck = [k + 1 >= len(lvs) for k, lvs in zip(cursor, levels)]
    for _ in range(max_iter):
        order = sorted(range(len(differences)), key=lambda n: -bounds[n])
        target = next((n for n in order if not stuck[n] and bounds[n] > 0), None)
        if target is None:
            break
        candidate = term_projection(target, cursor[target] + 1)
        e_trial = builder.with_swap(target, candidate)
        if trace_deficiency(e_trial) <= epsilon + 1e-12:
            builder.commit(target, candidate)
            cursor[target] += 1
            e = e_trial
            bounds = [_compressed_bound(d, e, mode) for d in differences]
            if cursor[target] + 1 >= len(levels[target]):
                stuck[target] = True
        else:
            stuck[target] = True
    return e, trace_deficiency(e), bounds


def _verdict(bounds: Sequence[float], tail_tol: float) -> str:
    if not bounds:
        return "certified"
    ok = bounds[-1] <= tail_tol and bounds[-1] <= bounds[0] + 1e-12
    return "certified" if ok else "refuted-at-horizon"


def witness_convergence(trace: FiniteTrace, limit: Element, epsilon: float,
                        mode: str = "au", tail_tol: Optional[float] = None,
                        tol: Tolerances = DEFAULT) -> WitnessCertificate:
    """Search for a single projection witnessing convergence to `limit`.

    Degenerate budgets (epsilon >= tau(1)) are honored with the zero
    projection and flagged in the notes.
    """
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be > 0")
    if mode not in ("au", "bau"):
        raise InvalidInputError("mode must be 'au' or 'bau'")
    tail_tol = tol.tail_tol if tail_tol is None else tail_tol
    limit._same_algebra(trace.elements[0])
    notes = {"horizon_semantics":
             "finite-trace judgment; no claim beyond the horizon"}
    if epsilon >= trace.algebra.total_trace:
        e = trace.algebra.zero()
        bounds = [0.0] * len(trace)
        notes["degenerate"] = "epsilon covers the whole trace; witness is 0"
        return WitnessCertificate(mode, epsilon, e, trace_deficiency(e),
                                  tuple(enumerate(bounds)), "certified",
                                  len(trace), notes)
    differences = [limit - x for x in trace.elements]
    e, deficiency, bounds = _search_witness(differences, epsilon, mode, tol)
    if mode == "au":
        # one-sided control implies two-sided control under the same witness
        for d, b in zip(differences, bounds):
            two_sided = _compressed_bound(d, e, "bau")
            if two_sided > b + 1e-9:
                raise PostconditionError(
                    "two-sided bound exceeds one-sided bound")
    return WitnessCertificate(mode, epsilon, e, deficiency,
                              tuple(enumerate(bounds)),
                              _verdict(bounds, tail_tol), len(trace), notes)


def certify_cauchy(trace: FiniteTrace, epsilon: float, mode: str = "bau",
                   tail_tol: Optional[float] = None,
                   tol: Tolerances = DEFAULT) -> WitnessCertificate:
    """Certify the Cauchy property of a finite trace under one witness.

    The witness is built from consecutive differences; the reported tail
    bounds are the sups over all pairs in each suffix window, which are
    non-increasing by construction.
    """
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be > 0")
    tail_tol = tol.tail_tol if tail_tol is None else tail_tol
    n = len(trace)
    notes = {"windows": "suffix windows trace[j:]",
             "horizon_semantics":
             "finite-trace judgment; no claim beyond the horizon"}
    if n == 1:
        e = trace.algebra.identity()
        return WitnessCertificate(mode, epsilon, e, 0.0, ((0, 0.0),),
                                  "certified", 1, notes)
    if epsilon >= trace.algebra.total_trace:
        e = trace.algebra.zero()
        notes["degenerate"] = "epsilon covers the whole trace; witness is 0"
        tail = tuple((j, 0.0) for j in range(n - 1))
        return WitnessCertificate(mode, epsilon, e, trace_deficiency(e), tail,
                                  "certified", n, notes)
    consecutive = [trace.elements[i + 1] - trace.elements[i]
                   for i in range(n - 1)]
    e, deficiency, _ = _search_witness(consecutive, epsilon, mode, tol)
    pair = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            pair[a, b] = _compressed_bound(
                trace.elements[b] - trace.elements[a], e, mode)
    sups = []
    for j in range(n - 1):
        sups.append(float(pair[j:, j:].max()))
    return WitnessCertificate(mode, epsilon, e, deficiency,
                              tuple(enumerate(sups)),
                              _verdict(sups, tail_tol), n, notes)


def bilateral_to_onesided(trace: FiniteTrace, certificate: WitnessCertificate,
                          limit: Optional[Element] = None,
                          tail_tol: Optional[float] = None,
                          tol: Tolerances = DEFAULT) -> WitnessCertificate:
    """Upgrade a bilateral certificate to a one-sided one.

    Each difference is pushed through the projection enlargement, which
    doubles the trace budget at worst and never worsens the bound.  The
    enlarged projection varies per index (convergence-in-measure style);
    the certificate records the worst deficiency and the last projection.
    """
    if certificate.mode != "bau":
        raise InvalidInputError("input certificate must be bilateral")
    tail_tol = tol.tail_tol if tail_tol is None else tail_tol
    e = certificate.projection
    if limit is not None:
        differences = [limit - x for x in trace.elements]
    else:
        differences = [trace.elements[i + 1] - trace.elements[i]
                       for i in range(len(trace) - 1)]
    def_e = trace_deficiency(e)
    bounds, worst = [], 0.0
    f = e
    for d in differences:
        bilateral = _compressed_bound(d, e, "bau")
        f = enlarge_projection(d, e, tol)
        def_f = trace_deficiency(f)
        if def_f > 2.0 * def_e + 1e-9:
            raise PostconditionError("enlargement exceeded twice the deficiency")
        one_sided = _compressed_bound(d, f, "au")
        if one_sided > bilateral + 1e-9:
            raise PostconditionError("one-sided bound exceeds bilateral bound")
        worst = max(worst, def_f)
        bounds.append(one_sided)
    notes = dict(certificate.notes)
    notes["upgrade"] = ("per-index enlarged witnesses; deficiency is the "
                        "worst case, projection is the last one")
    return WitnessCertificate("au", 2.0 * certificate.epsilon, f, worst,
                              tuple(enumerate(bounds)),
                              _verdict(bounds, tail_tol),
                              certificate.horizon, notes)


def extract_limit(trace: FiniteTrace, modulus_tol: Optional[float] = None,
                  tol: Tolerances = DEFAULT) -> Tuple[Element, List[float]]:
    """Candidate limit of a trace Cauchy in the measure metric.

    Returns the final element together with the suffix Cauchy moduli
    (max pairwise measure-metric distance over each suffix window).
    Raises :class:`NoLimitError` when the tail modulus stays above the
    tolerance; downstream certification validates the candidate.
    """
    modulus_tol = tol.cauchy_tol if modulus_tol is None else modulus_tol
    n = len(trace)
    if n == 1:
        return trace.elements[0], [0.0]
    pair = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            pair[a, b] = measure_metric(trace.elements[a], trace.elements[b])
    moduli = [float(pair[j:, j:].max()) for j in range(n - 1)]
    tail_start = max(0, n - max(2, n // 4) - 1)
    if moduli[min(tail_start, n - 2)] > modulus_tol:
        raise NoLimitError(
            f"tail modulus {moduli[min(tail_start, n - 2)]:.3e} exceeds "
            f"{modulus_tol:.3e}")
    return trace.elements[-1], moduli


def remark32_model(n_blocks: int):
    """The classical counterexample truncated to a finite model.

    Builds one-dimensional blocks with weights 2^-k carrying the values
    2^k, so the n-th partial element has trace norm exactly n while the
    full element has trace norm `n_blocks`: the norms blow up while the
    prefix converges almost uniformly to the final element.

    Returns (algebra, trace of partial elements, limit).
    """
    if n_blocks < 1:
        raise InvalidInputError("need at least one block")
    algebra = TracedAlgebra(tuple((1, 2.0 ** (-k))
                                  for k in range(1, n_blocks + 1)))
    elements = []
    for n in range(1, n_blocks + 1):
        data = [np.array([[2.0 ** k if k <= n else 0.0]], dtype=complex)
                for k in range(1, n_blocks + 1)]
        elements.append(Element(algebra, data, selfadjoint=True, positive=True))
    trace = FiniteTrace(tuple(elements))
    return algebra, trace, elements[-1]
