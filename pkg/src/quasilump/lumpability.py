"""Partitions, lower/upper aggregated matrices and quasi-lumpability.

For a chain P and a partition of its states into blocks A_1..A_m, the
central quantity is the n x m matrix of block masses ``p(x, A_j)``. Every
operation here is a min, max or weighted average over its rows.
"""
from dataclasses import dataclass

import numpy as np

from . import markov_core as mc

EXACT_TOL = 1e-9
MASS_FLOOR = 1e-300

KINDS = ("lower", "upper", "lumped", "time_dependent")


class PartitionError(ValueError):
    pass


class LumpabilityError(ValueError):
    """Raised when a chain is not exactly lumpable at the requested tolerance.

    ``witness`` is ``(i, j, x, y)``: states x and y of block i whose masses
    into block j differ by more than the tolerance.
    """

    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


class ConditioningError(ValueError):
    def __init__(self, message, block, step=None):
        super().__init__(message)
        self.block = block
        self.step = step


@dataclass(frozen=True)
class StatePartition:
    """Ordered blocks of zero-based state indices covering 0..n-1."""

    blocks: tuple
    n: int

    def __init__(self, blocks, n=None):
        blocks = tuple(tuple(int(x) for x in b) for b in blocks)
        if n is None:
            n = sum(len(b) for b in blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "n", int(n))
        self._check()

    def _check(self):
        if not self.blocks:
            raise PartitionError("partition has no blocks")
        seen = np.zeros(self.n, dtype=bool)
        for i, b in enumerate(self.blocks):
            if not b:
                raise PartitionError(f"block {i} is empty")
            for x in b:
                if not 0 <= x < self.n:
                    raise PartitionError(f"block {i} contains state {x} outside 0..{self.n - 1}")
                if seen[x]:
                    raise PartitionError(f"state {x} appears in more than one block")
                seen[x] = True
        if not seen.all():
            missing = np.flatnonzero(~seen)[:5].tolist()
            raise PartitionError(f"states {missing} are not covered by any block")

    @classmethod
    def singletons(cls, n):
        return cls([[x] for x in range(n)], n)

    @classmethod
    def trivial(cls, n):
        return cls([list(range(n))], n)

    @classmethod
    def from_labels(cls, labels):
        """Build from a per-state block label sequence; labels must be 0..m-1."""
        labels = np.asarray(labels, dtype=np.int64)
        m = int(labels.max()) + 1 if labels.size else 0
        return cls([np.flatnonzero(labels == i).tolist() for i in range(m)], labels.size)

    @property
    def m(self):
        return len(self.blocks)

    def __len__(self):
        return self.m

    def labels(self):
        """Block index of every state, as an int64 array of length n."""
        out = np.empty(self.n, dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[list(b)] = i
        return out

    def indicator(self):
        """n x m 0/1 matrix with a one where state x lies in block j."""
        Z = np.zeros((self.n, self.m))
        Z[np.arange(self.n), self.labels()] = 1.0
        return Z

    def to_lists(self):
        return [list(b) for b in self.blocks]


@dataclass(frozen=True)
class AggregatedMatrix:
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        E = np.array(self.entries, dtype=np.float64)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise mc.ShapeError(f"aggregated matrix must be square, got {E.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        tol = mc.STOCHASTIC_TOL
        if E.size and (E.min() < -tol or E.max() > 1 + tol):
            raise ValueError("aggregated matrix entries must lie in [0, 1]")
        sums = E.sum(axis=1)
        if self.kind == "lower" and np.any(sums > 1 + tol):
            raise ValueError("lower matrix has a row summing above 1")
        if self.kind == "upper" and np.any(sums < 1 - tol):
            raise ValueError("upper matrix has a row summing below 1")
        if self.kind in ("lumped", "time_dependent") and np.any(np.abs(sums - 1) > tol):
            raise ValueError(f"{self.kind} matrix must be row-stochastic")
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    @property
    def m(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class LumpabilityReport:
    epsilon: float
    L: AggregatedMatrix
    U: AggregatedMatrix
    rho_L: float
    rho_U: float
    exact: bool
    spread: np.ndarray

    @property
    def m(self):
        return self.L.m

    @property
    def contraction(self):
        """rho(L) + epsilon * m / 2; the bound on aggregated chains needs it < 1."""
        return self.rho_L + self.epsilon * self.m / 2


def _check_partition(P, Q):
    if Q.n != P.shape[0]:
        raise PartitionError(f"partition covers {Q.n} states but the chain has {P.shape[0]}")


def block_masses(P, Q):
    """n x m matrix whose (x, j) entry is p(x, A_j)."""
    P = np.asarray(P, dtype=np.float64)
    _check_partition(P, Q)
    return P @ Q.indicator()


def block_transition_range(P, Q, i, j):
    """(min, max) over x in block i of the mass p(x, A_j)."""
    P = np.asarray(P, dtype=np.float64)
    _check_partition(P, Q)
    if not (0 <= i < Q.m and 0 <= j < Q.m):
        raise IndexError(f"block index out of range for {Q.m} blocks")
    rows = P[np.ix_(Q.blocks[i], Q.blocks[j])].sum(axis=1)
    return float(rows.min()), float(rows.max())


def _lower_upper_arrays(P, Q):
    B = block_masses(P, Q)
    L = np.empty((Q.m, Q.m))
    U = np.empty((Q.m, Q.m))
    for i, b in enumerate(Q.blocks):
        rows = B[list(b)]
        L[i] = rows.min(axis=0)
        U[i] = rows.max(axis=0)
    return L, U


def lower_upper_matrices(P, Q):
    """Blockwise minimum and maximum of p(x, A_j) over each source block."""
    L, U = _lower_upper_arrays(P, Q)
    return AggregatedMatrix(L, "lower"), AggregatedMatrix(U, "upper")


def spread_matrix(P, Q):
    L, U = _lower_upper_arrays(P, Q)
    return U - L


def tight_epsilon(P, Q):
    """Smallest epsilon for which P is epsilon-lumpable w.r.t. Q."""
    return float(spread_matrix(P, Q).max())


def is_exactly_lumpable(P, Q, tol=EXACT_TOL):
    return tight_epsilon(P, Q) <= tol


def lumped_matrix(P, Q, tol=EXACT_TOL):
    """Transition matrix of the lumped chain on the blocks of Q.

    Entry (i, j) is read off the first state of block i; every other state
    of the block is checked against it.

    Raises
    ------
    LumpabilityError
        Some state deviates by more than ``tol``; carries an ``(i, j, x, y)``
        witness.
    """
    B = block_masses(P, Q)
    out = np.empty((Q.m, Q.m))
    for i, b in enumerate(Q.blocks):
        rows = B[list(b)]
        ref = rows[0]
        dev = np.abs(rows - ref)
        if dev.size and dev.max() > tol:
            k, j = np.unravel_index(int(dev.argmax()), dev.shape)
            witness = (i, int(j), b[0], b[k])
            raise LumpabilityError(
                f"states {b[0]} and {b[k]} of block {i} move into block {j} with "
                f"probabilities {ref[j]!r} and {rows[k, j]!r}",
                witness,
            )
        out[i] = ref
    return AggregatedMatrix(out, "lumped")


def aggregate_distribution(v, Q):
    """Mass of v on each block of Q."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (Q.n,):
        raise mc.ShapeError(f"distribution of length {v.shape} does not match {Q.n} states")
    return np.bincount(Q.labels(), weights=v, minlength=Q.m)


def aggregated_transition_matrix(P, Q, v):
    """Block-to-block transition probabilities given the current distribution v.

    Row i is the average of the rows ``p(x, .)`` over x in block i, weighted
    by v conditioned on block i.

    Raises
    ------
    ConditioningError
        A block carries no mass under v.
    """
    v = np.asarray(v, dtype=np.float64)
    B = block_masses(P, Q)
    masses = aggregate_distribution(v, Q)
    out = np.empty((Q.m, Q.m))
    for i, b in enumerate(Q.blocks):
        if masses[i] <= MASS_FLOOR:
            raise ConditioningError(f"block {i} has zero mass; conditioning undefined", i)
        w = v[list(b)]
        out[i] = (w @ B[list(b)]) / masses[i]
    # rows are convex combinations; renormalize rounding drift only
    out /= out.sum(axis=1, keepdims=True)
    return AggregatedMatrix(np.clip(out, 0.0, 1.0), "time_dependent")


def analyze(P, Q, tol=EXACT_TOL):
    """Bundle epsilon, L, U and their ergodic coefficients into a report."""
    L, U = lower_upper_matrices(P, Q)
    spread = U.entries - L.entries
    eps = float(spread.max())
    return LumpabilityReport(
        epsilon=eps,
        L=L,
        U=U,
        rho_L=mc.ergodic_coefficient(L.entries),
        rho_U=mc.ergodic_coefficient(U.entries),
        exact=eps <= tol,
        spread=spread,
    )
