"""Right-continuous non-increasing step functions with compact support.

The home of the singular-value function: value ``values[i]`` is taken on
``[edges[i], edges[i+1])`` with ``edges[0] == 0``, and the function is 0
from ``edges[-1]`` on.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class StepFunction:
    edges: np.ndarray  # shape (m+1,), strictly increasing, edges[0] == 0
    values: np.ndarray  # shape (m,), non-increasing, >= 0

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if edges.ndim != 1 or values.ndim != 1 or edges.size != values.size + 1:
            raise InvalidInputError("edges must have one more entry than values")
        if edges.size and (edges[0] != 0.0 or np.any(np.diff(edges) <= 0)):
            raise InvalidInputError("edges must start at 0 and strictly increase")
        if np.any(values < 0) or np.any(np.diff(values) > 0):
            raise InvalidInputError("values must be non-negative and non-increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)
        edges.setflags(write=False)
        values.setflags(write=False)

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(np.array([0.0]), np.array([]))

    @classmethod
    def from_levels(cls, levels, widths) -> "StepFunction":
        """Build from per-level (value, width) pairs already sorted descending.

        Zero-valued levels are dropped; equal adjacent values are merged.
        """
        out_vals, out_widths = [], []
        for value, width in zip(levels, widths):
            if value <= 0.0 or width <= 0.0:
                continue
            if out_vals and value == out_vals[-1]:
                out_widths[-1] += width
            else:
                out_vals.append(float(value))
                out_widths.append(float(width))
        edges = np.concatenate([[0.0], np.cumsum(out_widths)])
        return cls(edges, np.array(out_vals))

    @property
    def support_end(self) -> float:
        return float(self.edges[-1])

    def __call__(self, t: float) -> float:
        if t < 0:
            raise InvalidInputError("t must be >= 0")
        if self.values.size == 0 or t >= self.edges[-1]:
            return 0.0
        # right-continuous: t == edges[i] picks the value on [edges[i], edges[i+1])
        i = int(np.searchsorted(self.edges, t, side="right")) - 1
        return float(self.values[i])

    def integral(self, s: float) -> float:
        """Exact value of the running integral over [0, s]."""
        if s < 0:
            raise InvalidInputError("s must be >= 0")
        if self.values.size == 0:
            return 0.0
        upper = np.minimum(self.edges[1:], s)
        lengths = np.clip(upper - self.edges[:-1], 0.0, None)
        return float(np.dot(lengths, self.values))

    def total_integral(self) -> float:
        return self.integral(self.support_end)

    def scaled(self, c: float) -> "StepFunction":
        if c < 0:
            raise InvalidInputError("scale must be >= 0")
        if c == 0 or self.values.size == 0:
            return StepFunction.zero()
        return StepFunction(self.edges, self.values * c)

    def to_csv(self) -> str:
        """CSV listing of the breakpoints, header ``t,value``.

        Each row gives the value taken from that t on; the final row marks
        the end of support with value 0.
        """
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.edges[:-1], self.values):
            buf.write(f"{float(t)!r},{float(v)!r}\n")
        buf.write(f"{self.support_end!r},0.0\n")
        return buf.getvalue()


def integral_dominates(big: StepFunction, small: StepFunction, slack: float) -> bool:
    """True iff the running integral of `small` never exceeds that of `big`.

    Both running integrals are concave piecewise-linear and constant past
    the last breakpoint, so checking the union of breakpoints plus a point
    past both supports is exact.
    """
    points = np.unique(np.concatenate([big.edges, small.edges]))
    end = max(big.support_end, small.support_end) + 1.0
    points = np.append(points, end)
    return all(small.integral(s) <= big.integral(s) + slack for s in points)
