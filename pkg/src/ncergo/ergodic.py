"""Multiparameter Cesàro averages, sector nets, and weighted semigroup flows.

The box average of a commuting family of positive contractions over a
multi-index n is the normalized sum of all mixed powers with exponents
below n (a zero coordinate contributes only the zeroth power and a
normalizer factor of 1).  Averages along a monotone index net reuse
prefix sums; conjugation families additionally admit a closed-form limit
(the joint eigenvalue-equality pinching) used as an independent oracle.
"""

from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .algebra import Element, TracedAlgebra
from .config import DEFAULT, Tolerances
from .errors import InvalidInputError, NumericFailureError
from .rng import stream
from .superops import DSCertificate, Pinching, SuperOperator, UnitaryConjugation, verify_ds


# -- index nets ---------------------------------------------------------------

@dataclass(frozen=True)
class SectorNet:
    """A monotone cofinal sequence of multi-indices standing in for a net.

    When `sector_constant` is set, the coordinate ratios are validated
    against it at construction.
    """

    dimension: int
    indices: tuple  # tuple of d-tuples of nonnegative ints
    sector_constant: Optional[float] = None

    def __post_init__(self):
        idx = tuple(tuple(int(k) for k in n) for n in self.indices)
        if not idx:
            raise InvalidInputError("net needs at least one index")
        for n in idx:
            if len(n) != self.dimension:
                raise InvalidInputError("index arity mismatch")
            if any(k < 0 for k in n):
                raise InvalidInputError("indices must be nonnegative")
        for prev, cur in zip(idx, idx[1:]):
            if any(c < p for p, c in zip(prev, cur)):
                raise InvalidInputError("coordinates must be nondecreasing")
        object.__setattr__(self, "indices", idx)
        if self.sector_constant is not None:
            if not sector_check(self, self.sector_constant):
                raise InvalidInputError(
                    f"net leaves the sector with constant {self.sector_constant}")

    def __len__(self):
        return len(self.indices)


def sector_check(net: SectorNet, c0: float) -> bool:
    """True iff every coordinate ratio along the net stays below c0."""
    if c0 <= 0:
        raise InvalidInputError("sector constant must be > 0")
    for n in net.indices:
        for ni in n:
            for nj in n:
                if nj != 0 and ni / nj > c0:
                    return False
    return True


# -- family validation --------------------------------------------------------

def validate_family(ops: Sequence[SuperOperator],
                    certificates: Optional[Sequence[DSCertificate]] = None,
                    trials: int = 10, seed: int = 0,
                    tol: Tolerances = DEFAULT) -> List[DSCertificate]:
    """Check a family is made of commuting positive contractions.

    Contraction and positivity come from certificates; commutativity is a
    seeded sampled check (structural proof is out of scope).
    """
    if not ops:
        raise InvalidInputError("empty operator family")
    algebra = ops[0].algebra
    certs = list(certificates) if certificates is not None else [
        verify_ds(op, seed=seed, tol=tol) for op in ops]
    for op, cert in zip(ops, certs):
        if not cert.is_ds(tol.ds_slack) or not cert.positivity:
            raise InvalidInputError("family member is not a positive contraction")
    rng = stream(seed, "ergodic/commutativity")
    for _ in range(trials):
        y = algebra.random_element(rng)
        for i, a in enumerate(ops):
            for b in ops[i + 1:]:
                gap = (a.apply(b.apply(y)) - b.apply(a.apply(y))).sup_norm()
                if gap > tol.commute_tol * max(1.0, y.sup_norm()):
                    raise InvalidInputError(
                        f"family does not commute (sampled gap {gap:.3e})")
    return certs


def _one_dim_average(op: SuperOperator, x: Element, m: int) -> Element:
    acc = x
    z = x
    for _ in range(1, m):
        z = op.apply(z)
        acc = acc + z
    return acc.scaled(1.0 / m)


def box_average(ops: Sequence[SuperOperator], x: Element, n: Sequence[int],
                certificates: Optional[Sequence[DSCertificate]] = None,
                check: bool = True, seed: int = 0,
                tol: Tolerances = DEFAULT) -> Element:
    """Normalized mixed-power sum over the box below n.

    Commutativity lets the d-dimensional sum factor into sequential
    one-dimensional Cesàro averages, at cost O(sum n_i) applications
    instead of O(prod n_i).  Zero coordinates contribute the identity
    average (only the zeroth power, normalizer 1).
    """
    if len(ops) != len(n):
        raise InvalidInputError("one exponent bound per operator required")
    if any(k < 0 for k in n):
        raise InvalidInputError("exponent bounds must be nonnegative")
    if check:
        validate_family(ops, certificates, seed=seed, tol=tol)
    for op, ni in zip(ops, n):
        x = _one_dim_average(op, x, max(int(ni), 1))
    return x


@dataclass
class AverageTrace:
    """Per-index outputs of an averaging run along a net."""

    net: SectorNet
    outputs: List[Element]
    sup_norms: List[float]
    one_norms: List[float]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.outputs) != len(self.net):
            raise InvalidInputError("one output per net index required")

    def to_csv(self, reference: Optional[Element] = None, p: float = 1.0,
               deficiencies: Optional[Sequence[float]] = None) -> str:
        from .singular import lp_norm
        buf = io.StringIO()
        d = self.net.dimension
        cols = ",".join(f"n_{i + 1}" for i in range(d))
        buf.write(f"alpha,{cols},err_inf,err_p,tau_deficiency\n")
        for i, (n, out) in enumerate(zip(self.net.indices, self.outputs)):
            if reference is not None:
                diff = out - reference
                err_inf, err_p = diff.sup_norm(), lp_norm(diff, p)
            else:
                err_inf = err_p = float("nan")
            deficiency = deficiencies[i] if deficiencies is not None else 0.0
            ns = ",".join(str(k) for k in n)
            buf.write(f"{i},{ns},{err_inf!r},{err_p!r},{deficiency!r}\n")
        return buf.getvalue()


_MATRIX_ROUTE_MAX_DIM = 256


def net_average_trace(ops: Sequence[SuperOperator], x: Element, net: SectorNet,
                      certificates: Optional[Sequence[DSCertificate]] = None,
                      check: bool = True, seed: int = 0,
                      tol: Tolerances = DEFAULT,
                      prefix_reuse: Optional[bool] = None) -> AverageTrace:
    """Averages at every net index, reusing prefix sums between indices.

    For small vectorized dimension the mixed-power prefix sums are carried
    as dense matrices (one product per increment and per dimension); the
    last dimension only needs a vector prefix.  Larger algebras fall back
    to independent factorized averages per index.  Both modes agree to
    within stated tolerances.
    """
    if len(ops) != net.dimension:
        raise InvalidInputError("one operator per net dimension required")
    certs = validate_family(ops, certificates, seed=seed, tol=tol) if check \
        else (list(certificates) if certificates else [])
    algebra = x.algebra
    use_matrix = prefix_reuse if prefix_reuse is not None \
        else algebra.vec_dim <= _MATRIX_ROUTE_MAX_DIM

    outputs: List[Element] = []
    if not use_matrix:
        for n in net.indices:
            outputs.append(box_average(ops, x, n, check=False))
    else:
        dim = algebra.vec_dim
        d = net.dimension
        mats = [op.to_matrix() for op in ops[:-1]]
        last = ops[-1].to_matrix()
        # matrix prefixes for leading dims, vector prefix for the last
        counts = [0] * (d - 1)
        pows = [np.eye(dim, dtype=complex) for _ in range(d - 1)]
        prefixes = [np.zeros((dim, dim), dtype=complex) for _ in range(d - 1)]
        v_count, v_pow = 0, x.vec()
        v_prefix = np.zeros(dim, dtype=complex)
        for n in net.indices:
            m = [max(int(k), 1) for k in n]
            for i in range(d - 1):
                while counts[i] < m[i]:
                    prefixes[i] = prefixes[i] + pows[i]
                    pows[i] = mats[i] @ pows[i]
                    counts[i] += 1
            while v_count < m[-1]:
                v_prefix = v_prefix + v_pow
                v_pow = last @ v_pow
                v_count += 1
            v = v_prefix / m[-1]
            for i in range(d - 2, -1, -1):
                v = (prefixes[i] @ v) / m[i]
            sa = x.selfadjoint if all(op.structurally_selfadjoint()
                                      for op in ops) else None
            outputs.append(Element.from_vec(algebra, v, selfadjoint=sa))

    from .singular import lp_norm
    sup_norms = [y.sup_norm() for y in outputs]
    one_norms = [lp_norm(y, 1, tol) for y in outputs]
    meta = {
        "mode": "matrix-prefix" if use_matrix else "factorized-per-index",
        "net_model": "monotone cofinal index sequence (finite stand-in for a net)",
        "seed": seed,
    }
    return AverageTrace(net, outputs, sup_norms, one_norms, meta)


def cesaro_limit_oracle(ops: Sequence[SuperOperator], x: Element,
                        phase_tol: float = 1e-8) -> Element:
    """Independent limit for commuting unitary-conjugation families.

    Each conjugator contributes the pinching by its eigenvalue-equality
    partition; the joint limit is the successive application of these
    pinchings (order-independent for a commuting family).
    """
    for op in ops:
        if not isinstance(op, UnitaryConjugation):
            raise InvalidInputError("oracle supports unitary conjugations only")
    out = x
    for op in ops:
        data = []
        for ub, xb in zip(op.u.data, out.data):
            t, q = scipy.linalg.schur(ub, output="complex")
            phases = np.diag(t)
            # cluster equal eigenvalues of the (normal) conjugator
            order = np.argsort(np.angle(phases), kind="stable")
            clusters: List[List[int]] = []
            for j in order:
                if clusters and abs(phases[j] - phases[clusters[-1][-1]]) <= phase_tol:
                    clusters[-1].append(j)
                else:
                    clusters.append([j])
            if len(clusters) > 1 and \
                    abs(phases[clusters[0][0]] - phases[clusters[-1][-1]]) <= phase_tol:
                clusters[0].extend(clusters.pop())
            y = np.zeros_like(xb)
            for cluster in clusters:
                p = q[:, cluster] @ q[:, cluster].conj().T
                y = y + p @ xb @ p
            data.append(y)
        out = Element(x.algebra, data, selfadjoint=x.selfadjoint)
    return out


# -- Besicovitch weights and semigroup flows ----------------------------------

@dataclass(frozen=True)
class TrigPolynomial:
    """Finite sum of unimodular exponentials sum_j w_j e^{i theta_j s}."""

    terms: tuple  # tuple of (complex coefficient, real frequency)

    def __post_init__(self):
        terms = tuple((complex(w), float(th)) for w, th in self.terms)
        object.__setattr__(self, "terms", terms)

    def __call__(self, s: float) -> complex:
        return sum(w * cmath.exp(1j * th * s) for w, th in self.terms)

    def sup_bound(self) -> float:
        return sum(abs(w) for w, _ in self.terms)


@dataclass(frozen=True)
class BesicovitchFunction:
    """A bounded weight function with a trigonometric approximant.

    The callable value is polynomial(s) + residual(s); the residual's sup
    bound is declared by the caller and the declared total sup norm must
    cover the polynomial plus residual.
    """

    polynomial: TrigPolynomial
    residual: Optional[Callable[[float], complex]] = None
    residual_sup: float = 0.0
    sup_norm: Optional[float] = None

    def __post_init__(self):
        declared = self.sup_norm
        if declared is None:
            declared = self.polynomial.sup_bound() + self.residual_sup
            object.__setattr__(self, "sup_norm", declared)
        if not np.isfinite(declared):
            raise InvalidInputError("sup norm must be finite")

    def __call__(self, s: float) -> complex:
        v = self.polynomial(s)
        if self.residual is not None:
            v = v + self.residual(s)
        return v


class Semigroup:
    """Base for the two built-in strongly continuous positive flows."""

    algebra: TracedAlgebra

    def apply(self, s: float, x: Element) -> Element:
        raise NotImplementedError

    def _check_law(self, trials: int = 5, seed: int = 0,
                   tol: Tolerances = DEFAULT):
        rng = stream(seed, "ergodic/semigroup-law")
        for _ in range(trials):
            x = self.algebra.random_element(rng)
            s, t = rng.uniform(0.0, 2.0, size=2)
            gap = (self.apply(s, self.apply(t, x))
                   - self.apply(s + t, x)).sup_norm()
            if gap > tol.semigroup_tol * max(1.0, x.sup_norm()):
                raise NumericFailureError(f"semigroup law violated: gap {gap:.3e}")


class UnitaryFlow(Semigroup):
    """T_s(x) = e^{i s H} x e^{-i s H} for a selfadjoint generator H."""

    def __init__(self, generator: Element, tol: Tolerances = DEFAULT):
        if generator.selfadjoint is not True:
            generator = generator.as_selfadjoint(tol)
        self.algebra = generator.algebra
        self.generator = generator
        self._eig = [np.linalg.eigh((b + b.conj().T) / 2) for b in generator.data]
        self._check_law(tol=tol)

    def apply(self, s: float, x: Element) -> Element:
        data = []
        for (w, v), xb in zip(self._eig, x.data):
            u = (v * np.exp(1j * s * w)) @ v.conj().T
            data.append(u @ xb @ u.conj().T)
        return Element(x.algebra, data, selfadjoint=x.selfadjoint)


class InterpolationFlow(Semigroup):
    """T_s(x) = e^{-s} x + (1 - e^{-s}) E(x) for an idempotent expectation E."""

    def __init__(self, expectation: SuperOperator, tol: Tolerances = DEFAULT):
        self.algebra = expectation.algebra
        rng = stream(0, "ergodic/idempotency")
        y = self.algebra.random_element(rng)
        gap = (expectation.apply(expectation.apply(y))
               - expectation.apply(y)).sup_norm()
        if gap > 1e-9 * max(1.0, y.sup_norm()):
            raise InvalidInputError("expectation must be idempotent")
        if not expectation.structurally_positive():
            raise InvalidInputError("expectation must be structurally positive")
        self.expectation = expectation
        self._check_law(tol=tol)

    def apply(self, s: float, x: Element) -> Element:
        decay = math.exp(-s)
        return x.scaled(decay) + self.expectation.apply(x).scaled(1.0 - decay)


def besicovitch_average(beta: BesicovitchFunction, flow: Semigroup, x: Element,
                        t: float, quad_tol: float = 1e-8,
                        max_depth: int = 16) -> Element:
    """The weighted time average (1/t) * integral of beta(s) T_s(x) over [0, t].

    Composite Simpson with interval doubling until two successive
    refinements agree within quad_tol in the sup norm; flow evaluations
    use exact matrix exponentials of the generator.
    """
    if t <= 0:
        raise InvalidInputError("t must be > 0")

    def integrand_vec(s: float) -> np.ndarray:
        return complex(beta(s)) * flow.apply(s, x).vec()

    # resolve the fastest oscillation before trusting refinement agreement
    freq = max((abs(th) for _, th in beta.polynomial.terms), default=0.0)
    if isinstance(flow, UnitaryFlow):
        freq += 2.0 * flow.generator.sup_norm()
    elif isinstance(flow, InterpolationFlow):
        freq += 1.0

    def simpson(m: int) -> np.ndarray:
        nodes = np.linspace(0.0, t, 2 * m + 1)
        values = np.array([integrand_vec(s) for s in nodes])
        h = t / (2 * m)
        return (h / 3.0) * (values[0] + values[-1]
                            + 4.0 * values[1:-1:2].sum(axis=0)
                            + 2.0 * values[2:-1:2].sum(axis=0))

    m = max(4, int(math.ceil(t * (freq + 1.0) / math.pi)))
    prev = simpson(m)
    gap = math.inf
    for _ in range(max_depth):
        m *= 2
        cur = simpson(m)
        gap = Element.from_vec(x.algebra, (cur - prev) / t).sup_norm()
        if gap < quad_tol:
            return Element.from_vec(x.algebra, cur / t)
        prev = cur
    raise NumericFailureError(
        f"quadrature did not reach tol {quad_tol} within depth {max_depth} "
        f"(last gap {gap:.3e}, {2 * m + 1} nodes)")


def check_besicovitch(beta: BesicovitchFunction, epsilon: float, t_max: float,
                      grid_points: int = 12, nodes: int = 2048):
    """Estimate the long-run mean gap between beta and its polynomial part.

    Returns ``(verdict, estimates)`` where estimates are pairs
    (t, mean of |beta - p| over [0, t]) at a geometric grid of horizons;
    the verdict holds when the final estimate falls below epsilon.  This
    is a finite-horizon estimate, not a proof.
    """
    if t_max <= 0:
        raise InvalidInputError("t_max must be > 0")
    ts = np.geomspace(max(t_max / 2 ** (grid_points - 1), 1e-3), t_max,
                      grid_points)
    estimates = []
    for t in ts:
        if beta.residual is None:
            estimates.append((float(t), 0.0))
            continue
        xs = np.linspace(0.0, t, 2 * nodes + 1)
        vals = np.array([abs(beta.residual(s)) for s in xs])
        h = t / (2 * nodes)
        integral = (h / 3.0) * (vals[0] + vals[-1]
                                + 4.0 * vals[1:-1:2].sum()
                                + 2.0 * vals[2:-1:2].sum())
        estimates.append((float(t), float(integral / t)))
    return estimates[-1][1] < epsilon, estimates
