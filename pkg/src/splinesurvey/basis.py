"""B-spline and truncated-power bases on [0,1] with derivative penalty matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

KNOT_RULES = ("equidistant", "sample_quantile", "population_quantile")


@dataclass(frozen=True)
class SplineSpec:
    """Configuration of a spline system: order, knots, penalty."""

    order: int
    interior_knots: int
    knot_rule: str = "sample_quantile"
    lam: float = 0.0
    penalty_order: int = 1

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("spline order must be >= 1")
        if self.interior_knots < 0:
            raise ValueError("interior knot count must be >= 0")
        if self.knot_rule not in KNOT_RULES:
            raise ValueError(f"unknown knot rule {self.knot_rule!r}")
        if self.lam < 0:
            raise ValueError("penalty weight must be >= 0")
        if self.lam > 0 and not (1 <= self.penalty_order <= self.order - 1):
            raise ValueError("penalty order must be below spline order")

    @property
    def dimension(self) -> int:
        """Number of basis functions q = K + m."""
        return self.interior_knots + self.order


@dataclass(frozen=True)
class KnotVector:
    """Interior knots strictly inside (0,1); boundaries at 0 and 1."""

    interior: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.interior, dtype=float)
        if arr.size and (np.any(arr <= 0.0) or np.any(arr >= 1.0)):
            raise ValueError("interior knots must lie strictly inside (0,1)")
        if arr.size > 1 and np.any(np.diff(arr) <= 0):
            raise ValueError("interior knots must be strictly increasing")

    @property
    def num_interior(self) -> int:
        return len(self.interior)

    def breakpoints(self) -> np.ndarray:
        """Distinct knots including the boundaries: 0, interior..., 1."""
        return np.concatenate(([0.0], np.asarray(self.interior, dtype=float), [1.0]))

    def extended(self, order: int) -> np.ndarray:
        """Knot vector with boundary knots repeated to multiplicity `order`."""
        return np.concatenate(
            (np.zeros(order), np.asarray(self.interior, dtype=float), np.ones(order))
        )


@dataclass(frozen=True)
class CovariateScale:
    """Affine min-max map fitted on the population covariate."""

    low: float
    high: float

    def apply(self, values: Iterable[float]) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        return (v - self.low) / (self.high - self.low)


def normalize_covariate(z_values) -> tuple[np.ndarray, CovariateScale]:
    """Map covariate values affinely onto [0,1]; returns values and the map."""
    z = np.asarray(z_values, dtype=float)
    if z.size == 0:
        raise ValueError("empty covariate")
    if not np.all(np.isfinite(z)):
        raise ValueError("covariate values must be finite")
    lo, hi = float(z.min()), float(z.max())
    if lo == hi:
        raise ValueError("degenerate covariate")
    scale = CovariateScale(lo, hi)
    return scale.apply(z), scale


def build_knots(spec: SplineSpec, reference=None) -> KnotVector:
    """Place interior knots per the spec's rule.

    `reference` holds values in [0,1] used by the quantile rules: sampled
    covariates for `sample_quantile`, population covariates for
    `population_quantile`. Quantiles are type-1 (inverted CDF, no
    interpolation) at levels i/(K+1). Duplicate or boundary-touching knots
    are collapsed with a warning, reducing the effective knot count.
    """
    K = spec.interior_knots
    if K == 0:
        return KnotVector(())
    if spec.knot_rule == "equidistant":
        return KnotVector(tuple((np.arange(1, K + 1) / (K + 1)).tolist()))
    ref = np.asarray(reference, dtype=float)
    if ref.size == 0:
        raise ValueError("quantile knot rule needs a nonempty reference")
    distinct = np.unique(ref)
    if distinct.size < K + 1:
        raise ValueError("insufficient support for K knots")
    levels = np.arange(1, K + 1) / (K + 1)
    knots = np.quantile(ref, levels, method="inverted_cdf")
    knots = np.unique(knots)
    keep = knots[(knots > 0.0) & (knots < 1.0)]
    if keep.size < K:
        logger.warning(
            "collapsed %d duplicate/boundary quantile knots; K reduced to %d",
            K - keep.size,
            keep.size,
        )
    return KnotVector(tuple(keep.tolist()))


def basis_matrix(knots: KnotVector, m: int, z_values) -> np.ndarray:
    """Evaluate the q = K + m spline basis functions of order m at each z.

    Rows are nonnegative, sum to one, and have at most m nonzero entries.
    Uses the stable order-recursion starting from interval indicators, with
    the final interval closed on the right so z = 1 is handled.
    """
    z = np.atleast_1d(np.asarray(z_values, dtype=float))
    if z.size and (z.min() < 0.0 or z.max() > 1.0):
        raise ValueError("covariate out of range")
    t = knots.extended(m)
    n_intervals = len(t) - 1
    B = np.zeros((z.size, n_intervals))
    nonempty = [j for j in range(n_intervals) if t[j] < t[j + 1]]
    for j in nonempty:
        B[:, j] = (z >= t[j]) & (z < t[j + 1])
    B[z == 1.0, nonempty[-1]] = 1.0
    for order in range(2, m + 1):
        nb = len(t) - order
        Bn = np.zeros((z.size, nb))
        for j in range(nb):
            left = t[j + order - 1] - t[j]
            right = t[j + order] - t[j + 1]
            acc = np.zeros(z.size)
            if left > 0:
                acc += (z - t[j]) / left * B[:, j]
            if right > 0:
                acc += (t[j + order] - z) / right * B[:, j + 1]
            Bn[:, j] = acc
        B = Bn
    return B


def basis_row(knots: KnotVector, m: int, z: float) -> np.ndarray:
    """Single basis evaluation; see `basis_matrix`."""
    return basis_matrix(knots, m, [z])[0]


def difference_operator(p: int, q: int) -> np.ndarray:
    """p-th order forward difference operator as a (q-p) x q matrix."""
    return np.diff(np.eye(q), n=p, axis=0)


def penalty_matrix(spec: SplineSpec, knots: KnotVector) -> np.ndarray:
    """Roughness penalty for the p-th derivative of the spline.

    Built as scale * D_p' R D_p with R the Gram matrix of the order (m-p)
    basis on the same interior knots, integrated exactly by per-interval
    Gauss-Legendre quadrature. The scale K^(2p) assumes equidistant knots;
    it is kept as-is for quantile knots (documented approximation) and
    replaced by 1 when K = 0.
    """
    m, p, K = spec.order, spec.penalty_order, knots.num_interior
    if not 1 <= p <= m - 1:
        raise ValueError("penalty order must be below spline order")
    q = K + m
    order_low = m - p
    gram = _gram_matrix(knots, order_low)
    diff = difference_operator(p, q)
    scale = float(K) ** (2 * p) if K > 0 else 1.0
    D = scale * diff.T @ gram @ diff
    return 0.5 * (D + D.T)


def _gram_matrix(knots: KnotVector, order: int) -> np.ndarray:
    """Gram matrix of the order-`order` basis, exact piecewise quadrature."""
    q = knots.num_interior + order
    nodes_per_interval = max(order, 1)
    xg, wg = np.polynomial.legendre.leggauss(nodes_per_interval)
    bp = knots.breakpoints()
    R = np.zeros((q, q))
    for a, b in zip(bp[:-1], bp[1:]):
        half = 0.5 * (b - a)
        pts = a + half * (xg + 1.0)
        vals = basis_matrix(knots, order, pts)
        R += (vals * (wg * half)[:, None]).T @ vals
    return R


def truncated_power_matrix(knots: KnotVector, m: int, z_values) -> np.ndarray:
    """Truncated-power basis 1, z, ..., z^(m-1), (z - knot)_+^(m-1).

    Spans the same spline space as the B-spline basis; degree-0 truncations
    are right-closed step indicators, matching the interval convention of
    `basis_matrix`.
    """
    z = np.atleast_1d(np.asarray(z_values, dtype=float))
    if z.size and (z.min() < 0.0 or z.max() > 1.0):
        raise ValueError("covariate out of range")
    deg = m - 1
    cols = [z**r for r in range(m)]
    for xi in knots.interior:
        if deg == 0:
            cols.append((z >= xi).astype(float))
        else:
            cols.append(np.where(z > xi, (z - xi) ** deg, 0.0))
    return np.column_stack(cols)


def truncated_power_row(knots: KnotVector, m: int, z: float) -> np.ndarray:
    """Single truncated-power evaluation; see `truncated_power_matrix`."""
    return truncated_power_matrix(knots, m, [z])[0]
