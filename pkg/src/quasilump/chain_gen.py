"""Seeded construction of test chains.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``. Within-set
allocations use the flat simplex draw: independent standard exponential
weights normalized to sum to one. Outputs are reproducible for a fixed seed
and numpy version; no cross-language bit compatibility is implied.
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from . import lumpability as lump
from . import markov_core as mc
from .bounds import check_two_block_conditions

SPREAD_SLACK = 1e-12


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _simplex(rng, k):
    w = rng.standard_exponential(k)
    if not np.all(w > 0):
        raise RuntimeError("flat simplex draw produced a non-positive weight")
    return w / w.sum()


def random_stochastic_matrix(n, rng):
    """Dense n x n chain with every row drawn from the flat simplex."""
    return np.vstack([_simplex(rng, n) for _ in range(n)])


@dataclass(frozen=True)
class TwoBlockSpec:
    """Parameters of a two-block chain.

    ``a_size`` picks a random subset of that size as block A; ``a_states``
    gives the subset explicitly and overrides ``a_size``.
    """

    n: int
    a_size: int
    p0: float
    q0: float
    epsilon: float
    seed: int
    a_states: tuple = None

    def __post_init__(self):
        check_two_block_conditions(self.p0, self.q0, self.epsilon)
        if self.a_states is not None:
            states = tuple(sorted(int(x) for x in self.a_states))
            object.__setattr__(self, "a_states", states)
            object.__setattr__(self, "a_size", len(states))
            if len(set(states)) != len(states) or (states and not 0 <= states[0] <= states[-1] < self.n):
                raise mc.ShapeError("a_states must be distinct states in 0..n-1")
        if not 1 <= self.a_size <= self.n - 1:
            raise ValueError(f"block A must have between 1 and n-1 states, got {self.a_size}")

    def to_dict(self):
        d = asdict(self)
        d["kind"] = "two-block"
        if self.a_states is not None:
            d["a_states"] = list(self.a_states)
        return d


@dataclass
class GeneratedChain:
    P: np.ndarray
    Q: lump.StatePartition
    realized_spread: float
    seed: int
    metadata: dict = field(default_factory=dict)


def generate_two_block_chain(spec):
    """Random chain where every state of A leaves A with probability in
    [p0, p0+eps] and every other state enters A with probability in
    [q0, q0+eps]. Block 0 of the returned partition is A.
    """
    rng = make_rng(spec.seed)
    n = spec.n
    if spec.a_states is not None:
        a = np.array(spec.a_states, dtype=np.int64)
    else:
        a = np.sort(rng.choice(n, size=spec.a_size, replace=False))
    in_a = np.zeros(n, dtype=bool)
    in_a[a] = True
    abar = np.flatnonzero(~in_a)

    P = np.zeros((n, n))
    for x in range(n):
        if in_a[x]:
            lo, own, other = spec.p0, a, abar
        else:
            lo, own, other = spec.q0, abar, a
        cross = rng.uniform(lo, lo + spec.epsilon) if spec.epsilon > 0 else lo
        P[x, other] = cross * _simplex(rng, other.size)
        P[x, own] = (1 - cross) * _simplex(rng, own.size)

    Q = lump.StatePartition([a.tolist(), abar.tolist()], n)
    spread = lump.tight_epsilon(P, Q)
    if spread > spec.epsilon + SPREAD_SLACK:
        raise AssertionError(f"generated spread {spread} exceeds epsilon {spec.epsilon}")
    return GeneratedChain(P, Q, spread, spec.seed, spec.to_dict())


def generate_exactly_lumpable(n, Q, target, seed):
    """Chain on n states whose lumped chain w.r.t. Q is exactly ``target``.

    Each state x in block i sends ``target[i, j]`` into block j, split over
    the states of block j by a flat simplex draw.
    """
    T = np.asarray(target.entries if isinstance(target, lump.AggregatedMatrix) else target,
                   dtype=np.float64)
    if Q.n != n:
        raise lump.PartitionError(f"partition covers {Q.n} states, expected {n}")
    if T.shape != (Q.m, Q.m) or not mc.validate_stochastic(T).ok:
        raise ValueError("target must be a row-stochastic m x m matrix")
    rng = make_rng(seed)
    labels = Q.labels()
    P = np.zeros((n, n))
    for x in range(n):
        i = labels[x]
        for j, b in enumerate(Q.blocks):
            P[x, list(b)] = T[i, j] * _simplex(rng, len(b))
    return P


def random_partition(n, m, rng):
    """Random partition of n states into m nonempty blocks."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    labels = np.concatenate([np.arange(m), rng.integers(0, m, size=n - m)])
    rng.shuffle(labels)
    return lump.StatePartition.from_labels(labels)


def perturb_lumpable(P, Q, epsilon, seed):
    """Turn an exactly lumpable chain into an epsilon-lumpable one.

    Each state's block-mass vector is mixed with a random stochastic vector
    using a weight drawn from [0, epsilon]; the within-block split is scaled
    proportionally (uniformly when the original block mass is zero). Mixing
    keeps rows stochastic, and two states of one block can then differ by at
    most epsilon in any block mass.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon {epsilon!r} is infeasible: must lie in [0, 1]")
    P = np.asarray(P, dtype=np.float64)
    if not lump.is_exactly_lumpable(P, Q):
        raise lump.LumpabilityError(
            "perturb_lumpable needs an exactly lumpable chain", None
        )
    if epsilon == 0:
        return P.copy()
    rng = make_rng(seed)
    B = lump.block_masses(P, Q)
    out = np.empty_like(P)
    for x in range(P.shape[0]):
        s = rng.uniform(0.0, epsilon)
        target = (1 - s) * B[x] + s * _simplex(rng, Q.m)
        for j, b in enumerate(Q.blocks):
            b = list(b)
            if B[x, j] > 0:
                out[x, b] = P[x, b] * (target[j] / B[x, j])
            else:
                out[x, b] = target[j] / len(b)
        if out[x].min() < 0:
            raise ValueError(f"perturbation is infeasible at row {x}")
    return out
