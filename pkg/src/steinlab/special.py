"""Gamma function, probabilists' Hermite polynomials and multi-index arithmetic.

The multivariate Hermite polynomial indexed by a multi-index i = (i_1, ..., i_d)
factorizes over coordinates into univariate probabilists' polynomials He_n
(weight exp(-|x|^2/2)), which is the normalization used everywhere in this
package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_ORDER_CAP = 8


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector indexing partial derivatives and Hermite polynomials."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.exponents) < 1:
            raise ValueError("multi-index must have dimension >= 1")
        if any((not isinstance(e, (int, np.integer))) or e < 0 for e in self.exponents):
            raise ValueError(f"multi-index entries must be non-negative integers, got {self.exponents}")
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))

    @property
    def dim(self) -> int:
        return len(self.exponents)

    @property
    def order(self) -> int:
        return sum(self.exponents)

    def expanded(self) -> tuple[int, ...]:
        """Axis indices with multiplicity, e.g. (2, 1, 0) -> (0, 0, 1)."""
        out: list[int] = []
        for axis, e in enumerate(self.exponents):
            out.extend([axis] * e)
        return tuple(out)

    @staticmethod
    def coerce(idx, dim: int | None = None) -> "MultiIndex":
        mi = idx if isinstance(idx, MultiIndex) else MultiIndex(tuple(idx))
        if dim is not None and mi.dim != dim:
            raise ValueError(f"multi-index dimension {mi.dim} does not match point dimension {dim}")
        return mi


def gamma(x: float) -> float:
    """Gamma function on the positive half-line."""
    if not x > 0:
        raise ValueError(f"gamma requires x > 0, got {x}")
    return math.gamma(x)


def gamma_ratio(num: float, den: float) -> float:
    """Gamma(num)/Gamma(den) for positive arguments, stable for large values."""
    if not (num > 0 and den > 0):
        raise ValueError(f"gamma_ratio requires positive arguments, got {num}, {den}")
    return math.exp(math.lgamma(num) - math.lgamma(den))


def hermite_univariate(n: int, x):
    """Probabilists' Hermite polynomial He_n evaluated by the three-term recurrence.

    He_0 = 1, He_1 = x, He_{n+1}(x) = x He_n(x) - n He_{n-1}(x).
    Accepts scalars or arrays.
    """
    if n < 0:
        raise ValueError("Hermite order must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.shape else float(prev)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.shape else float(cur)


def hermite(idx, z):
    """Multivariate Hermite polynomial H_idx(z), a product over coordinates.

    ``z`` may be a single point of shape (d,) or a batch of shape (n, d).
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    pts = z[None, :] if single else z
    mi = MultiIndex.coerce(idx, dim=pts.shape[1])
    out = np.ones(pts.shape[0])
    for axis, e in enumerate(mi.exponents):
        if e > 0:
            out = out * hermite_univariate(e, pts[:, axis])
    return float(out[0]) if single else out
