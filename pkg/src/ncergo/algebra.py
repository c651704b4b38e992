"""Traced matrix algebras and their elements.

A :class:`TracedAlgebra` is a finite direct sum of square complex matrix
blocks, each carrying a positive trace weight; the trace of an element is
the weighted sum of the matrix traces of its blocks.  Elements are
immutable block-diagonal matrix tuples with optional verified structure
flags (selfadjoint / positive / projection).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import InvalidInputError


@dataclass(frozen=True)
class TracedAlgebra:
    """A weighted direct sum of matrix blocks: the pair (M, tau)."""

    blocks: tuple  # tuple of (dim, weight)

    def __post_init__(self):
        blocks = tuple((int(d), float(w)) for d, w in self.blocks)
        if not blocks:
            raise InvalidInputError("algebra needs at least one block")
        for d, w in blocks:
            if d < 1:
                raise InvalidInputError("block dims must be >= 1")
            if not (w > 0) or not np.isfinite(w):
                raise InvalidInputError("block weights must be positive and finite")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dims(self) -> tuple:
        return tuple(d for d, _ in self.blocks)

    @property
    def weights(self) -> tuple:
        return tuple(w for _, w in self.blocks)

    @property
    def total_trace(self) -> float:
        """tau(1), always finite at desk scale."""
        return float(sum(d * w for d, w in self.blocks))

    @property
    def vec_dim(self) -> int:
        return sum(d * d for d in self.dims)

    def identity(self) -> "Element":
        data = [np.eye(d, dtype=complex) for d in self.dims]
        return Element(self, data, selfadjoint=True, positive=True, projection=True)

    def zero(self) -> "Element":
        data = [np.zeros((d, d), dtype=complex) for d in self.dims]
        return Element(self, data, selfadjoint=True, positive=True, projection=True)

    def element(self, data, **flags) -> "Element":
        return Element(self, data, **flags)

    def random_element(self, rng: np.random.Generator, scale: float = 1.0,
                       selfadjoint: bool = False) -> "Element":
        data = []
        for d in self.dims:
            m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            m *= scale / np.sqrt(2.0)
            if selfadjoint:
                m = (m + m.conj().T) / 2.0
            data.append(m)
        return Element(self, data, selfadjoint=selfadjoint or None)


class Element:
    """A block-diagonal matrix tuple affiliated with a traced algebra."""

    __slots__ = ("algebra", "data", "selfadjoint", "positive", "projection")

    def __init__(self, algebra: TracedAlgebra, data: Sequence[np.ndarray],
                 selfadjoint: Optional[bool] = None,
                 positive: Optional[bool] = None,
                 projection: Optional[bool] = None,
                 tol: Tolerances = DEFAULT):
        data = tuple(np.array(b, dtype=complex) for b in data)
        if len(data) != len(algebra.blocks):
            raise InvalidInputError("block count mismatch")
        for b, d in zip(data, algebra.dims):
            if b.shape != (d, d):
                raise InvalidInputError(f"block shape {b.shape} != ({d}, {d})")
            if not (np.all(np.isfinite(b.real)) and np.all(np.isfinite(b.imag))):
                raise InvalidInputError("non-finite matrix entries")
            b.setflags(write=False)
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "selfadjoint", selfadjoint)
        object.__setattr__(self, "positive", positive)
        object.__setattr__(self, "projection", projection)
        self._verify_flags(tol)

    def __setattr__(self, name, value):  # immutable after construction
        raise AttributeError("Element is immutable")

    def _verify_flags(self, tol: Tolerances):
        scale = max(self.sup_norm(), 1.0)
        if self.selfadjoint or self.positive or self.projection:
            gap = max(np.abs(b - b.conj().T).max(initial=0.0) for b in self.data)
            if gap > tol.flag_tol * scale:
                raise InvalidInputError("selfadjoint flag fails verification")
        if self.positive or self.projection:
            lo = min(np.linalg.eigvalsh((b + b.conj().T) / 2).min(initial=0.0)
                     for b in self.data)
            if lo < -tol.flag_tol * scale:
                raise InvalidInputError("positive flag fails verification")
        if self.projection:
            gap = max(np.abs(b @ b - b).max(initial=0.0) for b in self.data)
            if gap > tol.flag_tol:
                raise InvalidInputError("projection flag fails verification")

    # -- arithmetic ---------------------------------------------------------

    def _same_algebra(self, other: "Element"):
        if self.algebra is not other.algebra and self.algebra != other.algebra:
            raise InvalidInputError("elements belong to different algebras")

    def __add__(self, other: "Element") -> "Element":
        self._same_algebra(other)
        sa = True if (self.selfadjoint and other.selfadjoint) else None
        return Element(self.algebra, [a + b for a, b in zip(self.data, other.data)],
                       selfadjoint=sa)

    def __sub__(self, other: "Element") -> "Element":
        self._same_algebra(other)
        sa = True if (self.selfadjoint and other.selfadjoint) else None
        return Element(self.algebra, [a - b for a, b in zip(self.data, other.data)],
                       selfadjoint=sa)

    def __neg__(self) -> "Element":
        return Element(self.algebra, [-a for a in self.data],
                       selfadjoint=self.selfadjoint)

    def scaled(self, c: complex) -> "Element":
        sa = True if (self.selfadjoint and np.isreal(c)) else None
        return Element(self.algebra, [c * a for a in self.data], selfadjoint=sa)

    def __matmul__(self, other: "Element") -> "Element":
        self._same_algebra(other)
        return Element(self.algebra, [a @ b for a, b in zip(self.data, other.data)])

    def adjoint(self) -> "Element":
        return Element(self.algebra, [a.conj().T for a in self.data],
                       selfadjoint=self.selfadjoint, positive=self.positive,
                       projection=self.projection)

    # -- scalars ------------------------------------------------------------

    def tau(self) -> complex:
        """The weighted trace.  Real for selfadjoint elements."""
        t = sum(w * np.trace(b) for b, w in zip(self.data, self.algebra.weights))
        return float(t.real) if self.selfadjoint else complex(t)

    def sup_norm(self) -> float:
        out = 0.0
        for b in self.data:
            if b.shape[0] == 1:
                out = max(out, abs(b[0, 0]))
            else:
                out = max(out, float(np.linalg.norm(b, 2)))
        return float(out)

    def singular_values(self) -> list:
        """Per-block singular values, descending within each block."""
        return [np.linalg.svd(b, compute_uv=False) for b in self.data]

    def norm_diff(self, other: "Element") -> float:
        return (self - other).sup_norm()

    def is_zero(self, atol: float = 0.0) -> bool:
        return all(np.abs(b).max(initial=0.0) <= atol for b in self.data)

    def as_selfadjoint(self, tol: Tolerances = DEFAULT) -> "Element":
        """Re-tag with a verified selfadjoint flag."""
        return Element(self.algebra, self.data, selfadjoint=True, tol=tol)

    def vec(self) -> np.ndarray:
        """Row-major concatenation of the blocks."""
        return np.concatenate([b.reshape(-1) for b in self.data])

    @classmethod
    def from_vec(cls, algebra: TracedAlgebra, v: np.ndarray, **flags) -> "Element":
        data, k = [], 0
        for d in algebra.dims:
            data.append(v[k:k + d * d].reshape(d, d))
            k += d * d
        return cls(algebra, data, **flags)

    def __repr__(self):
        return f"Element(dims={self.algebra.dims}, sup_norm={self.sup_norm():.4g})"


# -- projection machinery ----------------------------------------------------

def projection_from_ranges(algebra: TracedAlgebra, bases: Sequence[np.ndarray],
                           tol: Tolerances = DEFAULT) -> Element:
    """Projection onto the given per-block column spans, as an exact idempotent.

    Each basis is orthonormalized; eigenvalue rounding to {0, 1} keeps the
    idempotent defect at machine scale regardless of the input conditioning.
    """
    data = []
    for basis, d in zip(bases, algebra.dims):
        if basis.size == 0:
            data.append(np.zeros((d, d), dtype=complex))
            continue
        q, r = np.linalg.qr(basis)
        keep = np.abs(np.diag(r)) > tol.rank_rel * max(1.0, np.abs(r).max())
        q = q[:, keep]
        data.append(q @ q.conj().T)
    return Element(algebra, data, selfadjoint=True, positive=True, projection=True,
                   tol=tol)


def range_bases(e: Element, tol: Tolerances = DEFAULT) -> list:
    """Orthonormal bases of the per-block ranges of a projection."""
    out = []
    for b in e.data:
        w, v = np.linalg.eigh((b + b.conj().T) / 2)
        out.append(v[:, w > 0.5])
    return out


def projection_meet(e: Element, f: Element, tol: Tolerances = DEFAULT) -> Element:
    """Meet e ^ f via intersection of ranges.

    Common directions are the singular vectors of the basis overlap with
    singular value 1 (within tolerance).
    """
    e._same_algebra(f)
    bases = []
    for be, bf in zip(range_bases(e, tol), range_bases(f, tol)):
        if be.shape[1] == 0 or bf.shape[1] == 0:
            bases.append(np.zeros((be.shape[0], 0), dtype=complex))
            continue
        u, s, _ = np.linalg.svd(be.conj().T @ bf, full_matrices=False)
        common = be @ u[:, s > 1.0 - 1e-10]
        bases.append(common)
    return projection_from_ranges(e.algebra, bases, tol)


def projection_complement(e: Element) -> Element:
    return Element(e.algebra, [np.eye(d, dtype=complex) - b
                               for b, d in zip(e.data, e.algebra.dims)],
                   selfadjoint=True, positive=True, projection=True)


def trace_deficiency(e: Element) -> float:
    """tau(e_perp) of a projection."""
    return float(sum(w * (d - np.trace(b).real)
                     for b, (d, w) in zip(e.data, e.algebra.blocks)))
