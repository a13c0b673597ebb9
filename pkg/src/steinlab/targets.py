"""Registry of target functions h with declared Holder data and known solutions.

Each entry carries the analytic Holder exponent alpha, the semi-norm [h]_alpha
(stored analytically, never estimated: downstream bounds scale linearly in it,
and estimation error would contaminate the bound checks), the Gaussian mean
E h(Z) where known in closed form, and, for a few families, the closed-form
solution of the Stein equation together with its derivatives.

All registered functions have polynomial growth; a user-supplied function
plugged into the same interfaces must satisfy the same growth condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .gaussian import RngStream, gaussian_norm_moment
from .special import MultiIndex


@dataclass(frozen=True)
class ClosedFormSolution:
    """Analytic solution f of Delta f - x.grad f = h - E h(Z), with derivatives."""

    f: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """A target function h: R^d -> R with its declared regularity data.

    ``holder_seminorm`` is None for smooth functions that are not globally
    Holder (the quadratic family); those are excluded from Holder probes but
    remain valid targets for the solver.
    """

    name: str
    dim: int
    alpha: float
    holder_seminorm: Optional[float]
    eval: Callable[[np.ndarray], np.ndarray]
    gaussian_mean: Optional[float] = None
    closed_form: Optional[ClosedFormSolution] = None
    gradient_sup: Optional[float] = None
    params: dict = field(default_factory=dict)
    _partial: Optional[Callable[[MultiIndex], Optional[Callable]]] = None
    # Optional exact rule for E[z^j w^k ... h(c + s Z)]; see raic. Signature:
    # conditional_inner(centers (B, d), s, monomial_columns) -> (B, C)
    conditional_inner: Optional[Callable] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.holder_seminorm is not None and self.holder_seminorm < 0:
            raise ValueError("holder_seminorm must be non-negative")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.eval(np.asarray(x, dtype=float))

    def partial_derivative(self, idx) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        """Analytic partial derivative of h for smooth families, else None."""
        if self._partial is None:
            return None
        return self._partial(MultiIndex.coerce(idx, dim=self.dim))


def _as_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def constant(d: int, c: float = 1.0) -> TestFunction:
    zero_sol = ClosedFormSolution(
        f=lambda x: np.zeros(_as_batch(x).shape[0]),
        gradient=lambda x: np.zeros_like(_as_batch(x)),
        hessian=lambda x: np.zeros((_as_batch(x).shape[0], d, d)),
    )
    return TestFunction(
        name="constant",
        dim=d,
        alpha=1.0,
        holder_seminorm=0.0,
        eval=lambda x: np.full(_as_batch(x).shape[0], float(c)),
        gaussian_mean=float(c),
        closed_form=zero_sol,
        gradient_sup=0.0,
        params={"c": float(c)},
        _partial=lambda idx: (lambda x: np.zeros(_as_batch(x).shape[0])),
    )


def linear(d: int, a=None) -> TestFunction:
    a = np.ones(d) if a is None else np.asarray(a, dtype=float)
    if a.shape != (d,):
        raise ValueError(f"coefficient vector must have shape ({d},)")
    norm_a = float(np.linalg.norm(a))

    def partial(idx: MultiIndex):
        if idx.order == 1:
            axis = idx.expanded()[0]
            return lambda x: np.full(_as_batch(x).shape[0], a[axis])
        return lambda x: np.zeros(_as_batch(x).shape[0])

    sol = ClosedFormSolution(
        f=lambda x: -_as_batch(x) @ a,
        gradient=lambda x: np.broadcast_to(-a, _as_batch(x).shape).copy(),
        hessian=lambda x: np.zeros((_as_batch(x).shape[0], d, d)),
    )
    return TestFunction(
        name="linear",
        dim=d,
        alpha=1.0,
        holder_seminorm=norm_a,
        eval=lambda x: _as_batch(x) @ a,
        gaussian_mean=0.0,
        closed_form=sol,
        gradient_sup=norm_a,
        params={"a": tuple(a)},
        _partial=partial,
    )


def quadratic(d: int) -> TestFunction:
    def partial(idx: MultiIndex):
        ex = idx.expanded()
        if idx.order == 1:
            return lambda x, _ax=ex[0]: 2.0 * _as_batch(x)[:, _ax]
        if idx.order == 2:
            val = 2.0 if ex[0] == ex[1] else 0.0
            return lambda x: np.full(_as_batch(x).shape[0], val)
        return lambda x: np.zeros(_as_batch(x).shape[0])

    sol = ClosedFormSolution(
        f=lambda x: -(np.sum(_as_batch(x) ** 2, axis=1) - d) / 2.0,
        gradient=lambda x: -_as_batch(x),
        hessian=lambda x: np.broadcast_to(-np.eye(d), (_as_batch(x).shape[0], d, d)).copy(),
    )
    return TestFunction(
        name="quadratic",
        dim=d,
        alpha=1.0,
        holder_seminorm=None,
        eval=lambda x: np.sum(_as_batch(x) ** 2, axis=1),
        gaussian_mean=float(d),
        closed_form=sol,
        gradient_sup=None,
        params={},
        _partial=partial,
    )


def cosine(d: int, a=None) -> TestFunction:
    a = np.full(d, 1.0) if a is None else np.asarray(a, dtype=float)
    if a.shape != (d,):
        raise ValueError(f"frequency vector must have shape ({d},)")
    norm_a = float(np.linalg.norm(a))

    def partial(idx: MultiIndex):
        coeff = float(np.prod(a ** np.array(idx.exponents)))
        phase = idx.order * math.pi / 2.0
        return lambda x: coeff * np.cos(_as_batch(x) @ a + phase)

    return TestFunction(
        name="cosine",
        dim=d,
        alpha=1.0,
        holder_seminorm=norm_a,
        eval=lambda x: np.cos(_as_batch(x) @ a),
        gaussian_mean=math.exp(-0.5 * norm_a**2),
        gradient_sup=norm_a,
        params={"a": tuple(a)},
        _partial=partial,
    )


# E max(0, min(Z1, Z2)) = 1/sqrt(2 pi) - 1/(2 sqrt(pi)); min(Z1, Z2) has
# density 2 phi(z)(1 - Phi(z)), and both integrals are elementary.
_RAIC_MEAN = 1.0 / math.sqrt(2.0 * math.pi) - 1.0 / (2.0 * math.sqrt(math.pi))

_SQRT2PI = math.sqrt(2.0 * math.pi)
_Z_MAX = 10.0  # Gaussian tail truncation; z^4 phi(z) mass beyond is < 1e-18


def _phi(x):
    return np.exp(-0.5 * x * x) / _SQRT2PI


def _gauss_tail_moments(x):
    """T_k(x) = integral_x^inf w^k phi(w) dw for k = 0..3."""
    p = _phi(x)
    t0 = ndtr(-x)
    return t0, p, t0 + x * p, (x * x + 2.0) * p


def _raic_z_rule(n_panels: int = 18, n_nodes: int = 12):
    xg, wg = leggauss(n_nodes)
    offsets, weights = [], []
    for k in range(n_panels):
        lo, hi = k / n_panels, (k + 1) / n_panels
        offsets.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * xg)
        weights.append(0.5 * (hi - lo) * wg)
    return np.concatenate(offsets), np.concatenate(weights)


_RAIC_XI, _RAIC_XW = _raic_z_rule()


def _raic_conditional_inner(centers: np.ndarray, s: float, monomial_columns) -> np.ndarray:
    """Exact-in-Z2 evaluation of E[z1^j z2^k max(0, min(c1 + s Z1, c2 + s Z2))].

    Conditioning on Z1 = z, the target is piecewise linear in Z2 with
    breakpoints at w0 = -c2/s and w1 = (c1 + s z - c2)/s, so the inner
    expectation reduces to Gaussian partial moments; the remaining z-integral
    is smooth on (z*, inf) with z* = -c1/s (where the clip sets in) and is done
    by a fixed composite Gauss-Legendre rule. Needed monomial orders: j <= 2
    against z, k <= 2 against w.
    """
    c1 = centers[:, 0]
    c2 = centers[:, 1]
    lo = np.maximum(-c1 / s, -_Z_MAX)
    span = np.maximum(_Z_MAX - lo, 0.0)
    z = lo[:, None] + span[:, None] * _RAIC_XI[None, :]  # (B, nz)
    zw = span[:, None] * _RAIC_XW[None, :] * _phi(z)
    a = c1[:, None] + s * z
    w0 = (-c2 / s)[:, None]
    w1 = (a - c2[:, None]) / s
    t0_0, t1_0, t2_0, t3_0 = _gauss_tail_moments(np.broadcast_to(w0, z.shape))
    t0_1, t1_1, t2_1, t3_1 = _gauss_tail_moments(w1)
    c2col = c2[:, None]
    # E_w[w^k h(a, c2 + s w)] for a > 0, k = 0, 1, 2
    wmom = (
        c2col * (t0_0 - t0_1) + s * (t1_0 - t1_1) + a * t0_1,
        c2col * (t1_0 - t1_1) + s * (t2_0 - t2_1) + a * t1_1,
        c2col * (t2_0 - t2_1) + s * (t3_0 - t3_1) + a * t2_1,
    )
    zpow = (np.ones_like(z), z, z * z)
    out = np.empty((centers.shape[0], len(monomial_columns)))
    for ci, monomials in enumerate(monomial_columns):
        acc = np.zeros_like(z)
        for coeff, (j, k) in monomials:
            acc += coeff * zpow[j] * wmom[k]
        out[:, ci] = np.sum(zw * acc, axis=1)
    return out


def raic(d: int = 2) -> TestFunction:
    """max(0, min(x, y)): Lipschitz, with a genuinely log-Holder Stein Hessian."""
    if d != 2:
        raise ValueError("the raic target is only defined in dimension 2")
    return TestFunction(
        name="raic",
        dim=2,
        alpha=1.0,
        holder_seminorm=1.0,
        eval=lambda x: np.maximum(0.0, np.min(_as_batch(x), axis=1)),
        gaussian_mean=_RAIC_MEAN,
        gradient_sup=1.0,
        params={},
        conditional_inner=_raic_conditional_inner,
    )


def radial_holder(d: int, alpha: float = 0.5) -> TestFunction:
    """|x|^alpha: the canonical alpha-Holder target with [h]_alpha = 1."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return TestFunction(
        name="radial_holder",
        dim=d,
        alpha=float(alpha),
        holder_seminorm=1.0,
        eval=lambda x: np.linalg.norm(_as_batch(x), axis=1) ** alpha,
        gaussian_mean=gaussian_norm_moment(alpha, d),
        gradient_sup=1.0 if alpha == 1.0 else None,
        params={"alpha": float(alpha)},
    )


_REGISTRY = {
    "constant": constant,
    "linear": linear,
    "quadratic": quadratic,
    "cosine": cosine,
    "raic": raic,
    "radial_holder": radial_holder,
}


def builtin(name: str, d: int, **params) -> TestFunction:
    """Look up a registered target function by name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(d, **params)


def registry_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def check_holder(h: TestFunction, pair_count: int, radius: float, stream: RngStream) -> float:
    """Max observed |h(x)-h(y)| / |x-y|^alpha over sampled pairs.

    Distances are log-uniform in [1e-3, radius] around base points drawn from
    N(0, 2 I_d), covering both the small-gap and order-one regimes.
    """
    if pair_count < 1:
        raise ValueError("pair_count must be >= 1")
    if h.holder_seminorm is None:
        raise ValueError(f"{h.name} has no finite declared Holder semi-norm")
    rng = stream.generator()
    base = rng.standard_normal((pair_count, h.dim)) * math.sqrt(2.0)
    dirs = rng.standard_normal((pair_count, h.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dists = np.exp(rng.uniform(math.log(1e-3), math.log(radius), size=pair_count))
    other = base + dirs * dists[:, None]
    ratios = np.abs(h.eval(base) - h.eval(other)) / dists**h.alpha
    return float(np.max(ratios))
