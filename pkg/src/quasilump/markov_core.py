"""Dense stochastic linear algebra for finite Markov chains.

Vectors are 1-d float arrays, matrices 2-d float arrays. Distributions act
on the left (row vectors), so one step of a chain is ``v @ P``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels

STOCHASTIC_TOL = 1e-9
SOLVER_TOL = 1e-12
DIRECT_SOLVE_MAX_N = 2048


class ShapeError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DegeneracyError(RuntimeError):
    pass


@dataclass
class Violation:
    row: int
    defect: str

    def __str__(self):
        return f"row {self.row}: {self.defect}"


@dataclass
class ValidationResult:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    return M


def _vector(v, n=None, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ShapeError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


def validate_stochastic(M, tol=STOCHASTIC_TOL):
    """Check that M is square, nonnegative and row-stochastic.

    Returns a :class:`ValidationResult` whose ``violations`` name each
    offending row; it is truthy when the matrix passes.
    """
    M = _square(M)
    result = ValidationResult()
    if not np.all(np.isfinite(M)):
        for i in np.flatnonzero(~np.isfinite(M).all(axis=1)):
            result.violations.append(Violation(int(i), "non-finite entry"))
        return result
    for i, row in enumerate(M):
        lo = row.min() if row.size else 0.0
        if lo < -tol:
            j = int(row.argmin())
            result.violations.append(Violation(i, f"negative entry {lo!r} in column {j}"))
        s = row.sum()
        if abs(s - 1.0) > tol:
            result.violations.append(Violation(i, f"sums to {s!r}"))
    return result


def as_stochastic_matrix(P, tol=STOCHASTIC_TOL):
    """Return P as a float array, raising ValueError if it is not stochastic."""
    P = _square(P, "transition matrix")
    check = validate_stochastic(P, tol)
    if not check.ok:
        detail = "; ".join(str(v) for v in check.violations[:5])
        raise ValueError(f"not a stochastic matrix: {detail}")
    return P


def is_stochastic_vector(v, tol=STOCHASTIC_TOL):
    v = np.asarray(v, dtype=np.float64)
    return v.ndim == 1 and bool(np.all(v >= -tol)) and abs(v.sum() - 1.0) <= tol


def set_transition_mass(P, x, A):
    """Probability of moving from state x into the set A in one step."""
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    if not 0 <= x < n:
        raise IndexError(f"state {x} out of range for {n} states")
    idx = np.fromiter(A, dtype=np.int64) if not isinstance(A, np.ndarray) else A.astype(np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"set contains states outside 0..{n - 1}")
    return float(P[x, idx].sum())


def step_distribution(v, P):
    P = _square(P, "transition matrix")
    v = _vector(v, P.shape[0], "distribution")
    return v @ P


def stationary_distribution(P, method="auto", tol=SOLVER_TOL, max_iter=100_000):
    """Stationary distribution of an irreducible aperiodic chain.

    ``method="direct"`` replaces one balance equation by the normalization
    constraint and solves the linear system; ``"power"`` iterates ``v @ P``
    from the uniform vector. ``"auto"`` picks direct for n <= 2048.

    Raises
    ------
    DegeneracyError
        The direct system is singular (reducible chain).
    ConvergenceError
        Power iteration did not reach ``tol`` within ``max_iter`` steps.
    """
    P = _square(P, "transition matrix")
    n = P.shape[0]
    if method == "auto":
        method = "direct" if n <= DIRECT_SOLVE_MAX_N else "power"
    if method == "direct":
        pi = _stationary_direct(P)
    elif method == "power":
        pi = _stationary_power(P, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = float(np.abs(pi @ P - pi).sum())
    if residual > tol:
        # one polishing sweep usually absorbs the rounding of the direct solve
        polished = pi @ P
        polished /= polished.sum()
        r2 = float(np.abs(polished @ P - polished).sum())
        if r2 < residual:
            pi, residual = polished, r2
    if residual > tol:
        raise ConvergenceError(
            f"stationary residual {residual:.3e} exceeds tolerance {tol:.1e}", residual
        )
    return pi


def _stationary_direct(P):
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        cond = np.linalg.cond(A)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e12:
        raise DegeneracyError(
            f"balance system is singular (condition number {cond:.3e}); "
            "the chain is likely reducible"
        )
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _stationary_power(P, tol, max_iter):
    n = P.shape[0]
    v = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        w = v @ P
        w /= w.sum()
        residual = float(np.abs(w - v).sum())
        v = w
        if residual <= tol:
            return v
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps "
        f"(residual {residual:.3e})",
        residual,
    )


def total_variation(p, q):
    p = _vector(p, name="p")
    q = _vector(q, p.shape[0], "q")
    return 0.5 * float(np.abs(p - q).sum())


def ergodic_coefficient(M):
    """Half the largest L1 distance between two rows of M.

    Defined for any square matrix; lies in [0, 1] for stochastic ones,
    where a rounding overshoot past 1 is clipped.
    """
    M = _square(M)
    value = kernels.ergodic_coefficient(M)
    if value > 1.0 and np.all(M >= 0) and validate_stochastic(M).ok:
        return 1.0
    return value


def k_step_matrix(P, k):
    """P raised to the k-th power by repeated squaring; k=0 gives identity."""
    P = _square(P, "transition matrix")
    if k < 0:
        raise ValueError("k must be nonnegative")
    result = np.eye(P.shape[0])
    base = P.copy()
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def induced_row_norm(M):
    """Operator norm for row vectors under L1: max absolute row sum."""
    M = _square(M)
    if M.size == 0:
        return 0.0
    return float(np.abs(M).sum(axis=1).max())


@dataclass
class SlemEstimate:
    value: float
    converged: bool
    iterations: int

    def __float__(self):
        return self.value


def _subspace_slem(D, b, tol, max_iter):
    n = D.shape[0]
    rng = np.random.default_rng(0x5EED)
    X, _ = np.linalg.qr(rng.standard_normal((n, b)))
    estimate = np.inf
    for it in range(1, max_iter + 1):
        Y = D @ X
        if np.abs(Y).max() < 1e-300:
            return SlemEstimate(0.0, True, it)
        X, _ = np.linalg.qr(Y)
        new = float(np.abs(np.linalg.eigvals(X.T @ D @ X)).max())
        if abs(new - estimate) <= tol * max(1.0, new):
            return SlemEstimate(new, True, it)
        estimate = new
    return SlemEstimate(estimate, False, max_iter)


def slem_estimate(P, tol=1e-10, max_iter=10_000, pi=None, block=4):
    """Second largest eigenvalue modulus via deflated subspace iteration.

    The Perron component is removed with the rank-one projector ``1 pi^T``.
    A small orthonormal block is iterated under ``P - 1 pi^T`` and the
    Ritz values of the projected matrix are read off each step, so complex
    dominant pairs are resolved. Near-ties in modulus between several pairs
    can stall a small block; the block is then doubled and the run repeated.
    """
    P = _square(P, "transition matrix")
    n = P.shape[0]
    if pi is None:
        pi = stationary_distribution(P)
    D = P - np.outer(np.ones(n), pi)
    b = max(1, min(block, n - 1))
    spent = 0
    while True:
        res = _subspace_slem(D, b, tol, max_iter)
        spent += res.iterations
        if res.converged or b >= n - 1:
            return SlemEstimate(res.value, res.converged, spent)
        b = min(2 * b, n - 1)
