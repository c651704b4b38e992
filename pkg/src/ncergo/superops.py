"""Structured linear maps on a traced algebra and their contraction audits.

Maps are represented as node trees (unitary conjugation, pinching,
block-diagonal conditional expectation, convex combination, composition,
power, explicit matrix) so that positivity and the trace/sup contraction
bounds are exactly analyzable wherever the structure allows it, and only
sampled where it does not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .algebra import Element, TracedAlgebra
from .config import DEFAULT, Tolerances
from .errors import InvalidInputError
from .rng import stream
from .singular import submajorizes, fava_decompose


class SuperOperator:
    """Base class: a linear map on the algebra, applied blockwise."""

    def __init__(self, algebra: TracedAlgebra):
        self.algebra = algebra
        self._matrix_cache: Optional[np.ndarray] = None

    def apply(self, x: Element) -> Element:
        raise NotImplementedError

    def adjoint(self) -> "SuperOperator":
        """Adjoint with respect to the weighted trace pairing."""
        raise NotImplementedError

    def structurally_positive(self) -> bool:
        """True when positivity holds by construction."""
        raise NotImplementedError

    def structurally_selfadjoint(self) -> bool:
        """True when x = x* implies A(x) = A(x)* by construction."""
        raise NotImplementedError

    def structural_bounds(self) -> Optional[Tuple[float, float]]:
        """(c_1, c_inf) upper bounds implied by the node structure, if any."""
        raise NotImplementedError

    def __call__(self, x: Element) -> Element:
        return self.apply(x)

    def to_matrix(self) -> np.ndarray:
        """Dense action on vectorized elements (cached)."""
        if self._matrix_cache is None:
            d = self.algebra.vec_dim
            cols = []
            for j in range(d):
                v = np.zeros(d, dtype=complex)
                v[j] = 1.0
                cols.append(self.apply(Element.from_vec(self.algebra, v)).vec())
            self._matrix_cache = np.column_stack(cols)
        return self._matrix_cache


class UnitaryConjugation(SuperOperator):
    """x -> u x u* for a unitary u."""

    def __init__(self, u: Element, tol: Tolerances = DEFAULT):
        super().__init__(u.algebra)
        gap = max(np.abs(b @ b.conj().T - np.eye(d)).max()
                  for b, d in zip(u.data, u.algebra.dims))
        if gap > 1e-8:
            raise InvalidInputError("conjugator is not unitary")
        self.u = u

    def apply(self, x: Element) -> Element:
        return Element(x.algebra,
                       [ub @ b @ ub.conj().T for ub, b in zip(self.u.data, x.data)],
                       selfadjoint=x.selfadjoint)

    def adjoint(self) -> "UnitaryConjugation":
        return UnitaryConjugation(self.u.adjoint())

    def structurally_positive(self) -> bool:
        return True

    def structurally_selfadjoint(self) -> bool:
        return True

    def structural_bounds(self):
        return (1.0, 1.0)


class Pinching(SuperOperator):
    """x -> sum_i p_i x p_i for an orthogonal partition of unity."""

    def __init__(self, projections: Sequence[Element], tol: Tolerances = DEFAULT):
        if not projections:
            raise InvalidInputError("pinching needs at least one projection")
        super().__init__(projections[0].algebra)
        total = projections[0]
        for p in projections[1:]:
            total = total + p
        if not all(np.allclose(b, np.eye(d), atol=1e-9)
                   for b, d in zip(total.data, self.algebra.dims)):
            raise InvalidInputError("pinching projections must sum to 1")
        for i, p in enumerate(projections):
            for q in projections[i + 1:]:
                if (p @ q).sup_norm() > 1e-9:
                    raise InvalidInputError("pinching projections must be orthogonal")
        self.projections = tuple(projections)

    def apply(self, x: Element) -> Element:
        data = [np.zeros_like(b) for b in x.data]
        for p in self.projections:
            for k, (pb, xb) in enumerate(zip(p.data, x.data)):
                data[k] = data[k] + pb @ xb @ pb
        return Element(x.algebra, data, selfadjoint=x.selfadjoint)

    def adjoint(self) -> "Pinching":
        return self

    def structurally_positive(self) -> bool:
        return True

    def structurally_selfadjoint(self) -> bool:
        return True

    def structural_bounds(self):
        return (1.0, 1.0)


class BlockExpectation(SuperOperator):
    """Conditional expectation onto a block-diagonal subalgebra.

    `partition` gives, per algebra block, a list of index groups; entries
    coupling different groups are zeroed.  Equivalent to the pinching by
    the group indicator projections.
    """

    def __init__(self, algebra: TracedAlgebra, partition: Sequence[Sequence[Sequence[int]]]):
        super().__init__(algebra)
        if len(partition) != len(algebra.blocks):
            raise InvalidInputError("partition must cover every block")
        self.partition = tuple(tuple(tuple(int(i) for i in g) for g in groups)
                               for groups in partition)
        self._masks = []
        for groups, d in zip(self.partition, algebra.dims):
            seen = sorted(i for g in groups for i in g)
            if seen != list(range(d)):
                raise InvalidInputError("groups must partition the block indices")
            mask = np.zeros((d, d))
            for g in groups:
                idx = np.array(g)
                mask[np.ix_(idx, idx)] = 1.0
            self._masks.append(mask)

    def apply(self, x: Element) -> Element:
        return Element(x.algebra, [m * b for m, b in zip(self._masks, x.data)],
                       selfadjoint=x.selfadjoint)

    def adjoint(self) -> "BlockExpectation":
        return self

    def structurally_positive(self) -> bool:
        return True

    def structurally_selfadjoint(self) -> bool:
        return True

    def structural_bounds(self):
        return (1.0, 1.0)


class ConvexCombination(SuperOperator):
    """Sub-convex combination sum w_i A_i with w_i >= 0, sum <= 1."""

    def __init__(self, terms: Sequence[Tuple[float, SuperOperator]]):
        if not terms:
            raise InvalidInputError("combination needs at least one term")
        super().__init__(terms[0][1].algebra)
        weights = [float(w) for w, _ in terms]
        if any(w < 0 for w in weights):
            raise InvalidInputError("combination weights must be nonnegative")
        if sum(weights) > 1.0 + 1e-12:
            raise InvalidInputError("combination weights must sum to at most 1")
        self.terms = tuple((w, op) for w, op in zip(weights, (op for _, op in terms)))

    def apply(self, x: Element) -> Element:
        out = x.algebra.zero()
        for w, op in self.terms:
            out = out + op.apply(x).scaled(w)
        return out

    def adjoint(self) -> "ConvexCombination":
        return ConvexCombination([(w, op.adjoint()) for w, op in self.terms])

    def structurally_positive(self) -> bool:
        return all(op.structurally_positive() for _, op in self.terms)

    def structurally_selfadjoint(self) -> bool:
        return all(op.structurally_selfadjoint() for _, op in self.terms)

    def structural_bounds(self):
        acc1 = accinf = 0.0
        for w, op in self.terms:
            b = op.structural_bounds()
            if b is None:
                return None
            acc1 += w * b[0]
            accinf += w * b[1]
        return (acc1, accinf)


class Composition(SuperOperator):
    """Left-to-right composition: the first factor is applied last."""

    def __init__(self, factors: Sequence[SuperOperator]):
        if not factors:
            raise InvalidInputError("composition needs at least one factor")
        super().__init__(factors[0].algebra)
        self.factors = tuple(factors)

    def apply(self, x: Element) -> Element:
        for op in reversed(self.factors):
            x = op.apply(x)
        return x

    def adjoint(self) -> "Composition":
        return Composition([op.adjoint() for op in reversed(self.factors)])

    def structurally_positive(self) -> bool:
        return all(op.structurally_positive() for op in self.factors)

    def structurally_selfadjoint(self) -> bool:
        return all(op.structurally_selfadjoint() for op in self.factors)

    def structural_bounds(self):
        acc1 = accinf = 1.0
        for op in self.factors:
            b = op.structural_bounds()
            if b is None:
                return None
            acc1 *= b[0]
            accinf *= b[1]
        return (acc1, accinf)


class Power(SuperOperator):
    """Repeated application of a base map.

    The dense matrix powers are memoized per exponent, so repeated use in
    prefix sums costs one matrix product per new exponent.
    """

    def __init__(self, base: SuperOperator, exponent: int):
        if exponent < 0:
            raise InvalidInputError("exponent must be >= 0")
        super().__init__(base.algebra)
        self.base = base
        self.exponent = int(exponent)
        if not hasattr(base, "_power_cache"):
            base._power_cache = {}

    def apply(self, x: Element) -> Element:
        if self.exponent <= 4 or self.algebra.vec_dim > 4096:
            for _ in range(self.exponent):
                x = self.base.apply(x)
            return x
        cache = self.base._power_cache
        if self.exponent not in cache:
            m = self.base.to_matrix()
            acc = np.linalg.matrix_power(m, self.exponent)
            cache[self.exponent] = acc
        sa = x.selfadjoint if self.base.structurally_selfadjoint() else None
        return Element.from_vec(self.algebra, cache[self.exponent] @ x.vec(),
                                selfadjoint=sa)

    def adjoint(self) -> "Power":
        return Power(self.base.adjoint(), self.exponent)

    def structurally_positive(self) -> bool:
        return self.base.structurally_positive()

    def structurally_selfadjoint(self) -> bool:
        return self.base.structurally_selfadjoint()

    def structural_bounds(self):
        b = self.base.structural_bounds()
        if b is None:
            return None
        return (b[0] ** self.exponent, b[1] ** self.exponent)


class ExplicitMatrix(SuperOperator):
    """A map given by its dense action on vectorized elements.

    The matrix must be block diagonal with respect to the per-block
    segments of the vectorization, so outputs stay in the algebra.
    """

    def __init__(self, algebra: TracedAlgebra, matrix: np.ndarray):
        super().__init__(algebra)
        d = algebra.vec_dim
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (d, d):
            raise InvalidInputError(f"matrix must be {d} x {d}")
        # verify no coupling between distinct algebra blocks
        offsets = np.cumsum([0] + [dd * dd for dd in algebra.dims])
        coupling = matrix.copy()
        for a, b in zip(offsets[:-1], offsets[1:]):
            coupling[a:b, a:b] = 0.0
        if np.abs(coupling).max(initial=0.0) > 1e-12:
            raise InvalidInputError("matrix couples distinct algebra blocks")
        self.matrix = matrix
        self._matrix_cache = matrix

    def apply(self, x: Element) -> Element:
        return Element.from_vec(self.algebra, self.matrix @ x.vec())

    def adjoint(self) -> "ExplicitMatrix":
        w = _pairing_weights(self.algebra)
        adj = (self.matrix.conj().T * w[None, :]) / w[:, None]
        return ExplicitMatrix(self.algebra, adj)

    def structurally_positive(self) -> bool:
        return False

    def structurally_selfadjoint(self) -> bool:
        return False

    def structural_bounds(self):
        return None


def _pairing_weights(algebra: TracedAlgebra) -> np.ndarray:
    """Per-entry weights of the trace pairing <a, b> = vec(a)^H W vec(b)."""
    return np.concatenate([np.full(d * d, w) for d, w in algebra.blocks])


# -- certification ------------------------------------------------------------

@dataclass(frozen=True)
class DSCertificate:
    """Audited contraction data for a map: the computational content of
    declaring it a trace- and sup-norm contraction."""

    one_norm_bound: float
    sup_norm_bound: float
    positivity: bool
    selfadjointness: bool
    method: str  # "exact-positive" or "sampled"

    def is_ds(self, slack: float = 1e-9) -> bool:
        return (self.one_norm_bound <= 1.0 + slack
                and self.sup_norm_bound <= 1.0 + slack)

    def to_json(self) -> str:
        return json.dumps({
            "one_norm_bound": self.one_norm_bound,
            "sup_norm_bound": self.sup_norm_bound,
            "positivity": self.positivity,
            "selfadjointness": self.selfadjointness,
            "method": self.method,
            "is_ds": self.is_ds(),
        }, sort_keys=True, indent=2)


def check_positivity(op: SuperOperator, trials: int = 50, seed: int = 0,
                     tol: Tolerances = DEFAULT) -> bool:
    """Positivity check: exact for structural trees, sampled otherwise.

    The sampled route draws random x and tests the spectrum of A(x* x)
    against -tol relative to its norm.
    """
    if op.structurally_positive():
        return True
    rng = stream(seed, "superops/positivity")
    for _ in range(trials):
        x = op.algebra.random_element(rng)
        y = op.apply(x.adjoint() @ x)
        ysa = Element(y.algebra, [(b + b.conj().T) / 2 for b in y.data],
                      selfadjoint=True)
        if (ysa - y).sup_norm() > 1e-9 * max(1.0, y.sup_norm()):
            return False
        lo = min(np.linalg.eigvalsh(b).min() for b in ysa.data)
        if lo < -1e-9 * max(1.0, ysa.sup_norm()):
            return False
    return True


def check_selfadjointness(op: SuperOperator, trials: int = 20, seed: int = 0) -> bool:
    if op.structurally_selfadjoint():
        return True
    rng = stream(seed, "superops/selfadjointness")
    for _ in range(trials):
        x = op.algebra.random_element(rng, selfadjoint=True)
        y = op.apply(x)
        if (y - y.adjoint()).sup_norm() > 1e-9 * max(1.0, y.sup_norm()):
            return False
    return True


def verify_ds(op: SuperOperator, trials: int = 50, seed: int = 0,
              tol: Tolerances = DEFAULT) -> DSCertificate:
    """Certify the trace- and sup-norm bounds of a map.

    Structurally positive maps get exact bounds via unitality / trace
    duality: c_inf = ||A(1)||_inf and c_1 = ||adj(A)(1)||_inf.  Maps with
    sampled positivity use the same formulas but are marked "sampled";
    non-positive maps fall back to sampled ratio lower bounds combined
    with structural upper bounds where available.
    """
    from .singular import lp_norm

    positive = check_positivity(op, trials=trials, seed=seed, tol=tol)
    selfadj = check_selfadjointness(op, trials=max(trials // 2, 5), seed=seed)
    one = op.algebra.identity()
    if positive:
        c_inf = op.apply(one).sup_norm()
        c_1 = op.adjoint().apply(one).sup_norm()
        method = "exact-positive" if op.structurally_positive() else "sampled"
        return DSCertificate(c_1, c_inf, positive, selfadj, method)

    bounds = op.structural_bounds()
    rng = stream(seed, "superops/norm-ratios")
    c_1 = c_inf = 0.0
    for _ in range(trials):
        x = op.algebra.random_element(rng)
        y = op.apply(x)
        c_inf = max(c_inf, y.sup_norm() / max(x.sup_norm(), 1e-300))
        c_1 = max(c_1, lp_norm(y, 1, tol) / max(lp_norm(x, 1, tol), 1e-300))
    if bounds is not None:
        # structural bounds are valid upper bounds; sampled ratios only
        # witness that they are not wildly loose
        c_1, c_inf = bounds
    return DSCertificate(c_1, c_inf, positive, selfadj, "sampled")


def audit_submajorization(op: SuperOperator, x: Element, slack: float = 1e-9,
                          certificate: Optional[DSCertificate] = None,
                          tol: Tolerances = DEFAULT) -> bool:
    """Check that the image of a certified contraction sits below x in the
    running-integral order.  For a genuine contraction a False return is a
    failure of the numerics, not a valid outcome."""
    cert = certificate or verify_ds(op, tol=tol)
    if not cert.is_ds(tol.ds_slack):
        raise InvalidInputError("map is not certified as a contraction")
    return submajorizes(x, op.apply(x), slack)


def preserves_fava(op: SuperOperator, x: Element, delta: float,
                   certificate: Optional[DSCertificate] = None,
                   tol: Tolerances = DEFAULT):
    """Exhibit A(x) = A(y) + A(z) with ||A(z)||_inf <= delta.

    Splits x at level delta / c for the certified sup-norm bound c, then
    pushes both parts through the map.
    """
    cert = certificate or verify_ds(op, tol=tol)
    if not cert.selfadjointness:
        raise InvalidInputError("map must be selfadjoint")
    if x.selfadjoint is not True:
        x = x.as_selfadjoint(tol)
    c = max(cert.sup_norm_bound, 1e-300)
    y, z = fava_decompose(x, delta / c, tol)
    return op.apply(y), op.apply(z)
