"""Closed-form convergence bounds for aggregated (block-level) distributions.

Two norms appear and are easy to confuse, so every curve is tagged:

``l1_sum``
    sum over blocks of |pi_t(A_i) - pi(A_i)|; the general bound for
    epsilon-lumpable chains is stated in this norm.
``tv``
    total variation, half of ``l1_sum``; used by the exactly lumpable bound
    and by the two-block bound on a single set A.
"""
from dataclasses import dataclass

import numpy as np

from . import markov_core as mc

NORMS = ("l1_sum", "tv")
PRODUCT_CHECK_SLACK = 1e-12
# closed-form geometric sums cancel badly this close to a unit ratio
_SUMMATION_MARGIN = 1e-9


class BoundValidityError(ValueError):
    def __init__(self, message, contraction):
        super().__init__(message)
        self.contraction = contraction


class DomainError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BoundParams:
    """rho bounds the ergodic coefficient of L; epsilon the block spread; m the block count."""

    rho: float
    epsilon: float
    m: int

    def __post_init__(self):
        if self.rho < 0 or self.epsilon < 0 or self.m < 1:
            raise DomainError(
                f"need rho >= 0, epsilon >= 0, m >= 1 (got {self.rho}, {self.epsilon}, {self.m})"
            )

    @property
    def contraction(self):
        return self.rho + self.epsilon * self.m / 2

    @property
    def valid(self):
        return self.contraction < 1

    def require_valid(self):
        if not self.valid:
            raise BoundValidityError(
                f"rho + epsilon*m/2 = {self.contraction!r} is not below 1", self.contraction
            )

    @property
    def limit(self):
        """Value approached as t grows without bound (l1_sum norm)."""
        self.require_valid()
        return self.epsilon * self.m / (1 - self.contraction)


@dataclass(frozen=True)
class BoundCurve:
    """Bound values for t = 0..T under a norm tag."""

    values: np.ndarray
    norm: str

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def __getitem__(self, t):
        return float(self.values[t])

    def __len__(self):
        return len(self.values)

    @property
    def rows(self):
        return [(t, float(v)) for t, v in enumerate(self.values)]

    def as_tv(self):
        if self.norm == "tv":
            return self
        return BoundCurve(self.values / 2, "tv")

    def as_l1_sum(self):
        if self.norm == "l1_sum":
            return self
        return BoundCurve(self.values * 2, "l1_sum")


def _geometric_sum(r, t):
    """sum_{k=0}^{t-1} r**k."""
    if 1 - r <= _SUMMATION_MARGIN:
        return float(np.sum(r ** np.arange(t)))
    return (1 - r**t) / (1 - r)


def _quasi_value(r0, em, t):
    return 2 * r0**t + em * _geometric_sum(r0, t)


def quasi_lumpable_bound(params, t):
    """Bound on sum_i |pi_t(A_i) - pi(A_i)| after t >= 1 steps.

    ``2 r^t + eps*m*(1 - r^t)/(1 - r)`` with ``r = rho + eps*m/2``.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    params.require_valid()
    return _quasi_value(params.contraction, params.epsilon * params.m, t)


def quasi_lumpable_curve(params, horizon):
    """Curve for t = 0..horizon; the t = 0 entry is the trivial value 2."""
    params.require_valid()
    r0, em = params.contraction, params.epsilon * params.m
    return BoundCurve([_quasi_value(r0, em, t) for t in range(horizon + 1)], "l1_sum")


def lumped_bound(rho, t):
    """Total-variation bound rho**t for an exactly lumpable chain."""
    if not 0 <= rho <= 1:
        raise DomainError(f"rho must lie in [0, 1], got {rho!r}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(rho**t)


def lumped_curve(rho, horizon):
    return BoundCurve([lumped_bound(rho, t) for t in range(horizon + 1)], "tv")


def check_two_block_conditions(p0, q0, epsilon):
    if epsilon < 0 or p0 < 0 or q0 < 0:
        raise DomainError("p0, q0 and epsilon must be nonnegative")
    if not p0 + epsilon < 1:
        raise DomainError(f"condition violated: p0 + epsilon < 1 ({p0} + {epsilon})")
    if not q0 + epsilon < 1:
        raise DomainError(f"condition violated: q0 + epsilon < 1 ({q0} + {epsilon})")
    if not 0 < p0 + q0 < 1:
        raise DomainError(f"condition violated: 0 < p0 + q0 < 1 ({p0} + {q0})")


def two_block_bound(p0, q0, epsilon, t):
    """Bound on |pi_t(A) - pi(A)| for a two-block chain.

    p0 and q0 are the smallest probabilities of leaving A and of entering A;
    epsilon is how far above them the per-state probabilities may go.
    """
    check_two_block_conditions(p0, q0, epsilon)
    if t < 0:
        raise ValueError("t must be nonnegative")
    r = 1 - p0 - q0
    return r**t + epsilon * _geometric_sum(r, t)


def two_block_curve(p0, q0, epsilon, horizon):
    return BoundCurve([two_block_bound(p0, q0, epsilon, t) for t in range(horizon + 1)], "tv")


def asymptotic_bound(p0, q0, epsilon):
    """Limit of the two-block bound: epsilon / (p0 + q0)."""
    if not p0 + q0 > 0:
        raise DomainError("p0 + q0 must be positive")
    return epsilon / (p0 + q0)


@dataclass(frozen=True)
class ProductCheck:
    lhs: float
    rhs: float
    holds: bool


def _product(x, mats):
    for M in mats:
        x = x @ M
    return x


def perturbed_product_check(x, y, Bs, Cs, rho0):
    """Evaluate both sides of the perturbed-product contraction inequality.

    ``|x B_1..B_k - y C_1..C_k| <= rho0^k |x - y| + (sum_{j<k} rho0^j) E``
    where E is the largest row-norm distance between paired factors.
    Preconditions (stochasticity, equal sizes, coefficients at most rho0)
    are verified here rather than trusted.
    """
    if len(Bs) != len(Cs) or not Bs:
        raise PreconditionError("need two equally long, nonempty matrix lists")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if y.shape != (n,):
        raise PreconditionError("x and y must have equal length")
    for v, name in ((x, "x"), (y, "y")):
        if not mc.is_stochastic_vector(v):
            raise PreconditionError(f"{name} is not a stochastic vector")
    for label, mats in (("B", Bs), ("C", Cs)):
        for i, M in enumerate(mats):
            M = np.asarray(M, dtype=np.float64)
            if M.shape != (n, n) or not mc.validate_stochastic(M).ok:
                raise PreconditionError(f"{label}[{i}] is not an {n}x{n} stochastic matrix")
            r = mc.ergodic_coefficient(M)
            if r > rho0 + PRODUCT_CHECK_SLACK:
                raise PreconditionError(
                    f"ergodic coefficient of {label}[{i}] is {r!r}, above rho0 = {rho0!r}"
                )
    k = len(Bs)
    lhs = float(np.abs(_product(x, Bs) - _product(y, Cs)).sum())
    E = max(mc.induced_row_norm(np.asarray(B) - np.asarray(C)) for B, C in zip(Bs, Cs))
    rhs = rho0**k * float(np.abs(x - y).sum()) + _geometric_sum(rho0, k) * E
    return ProductCheck(lhs, rhs, lhs <= rhs + PRODUCT_CHECK_SLACK)
