"""Forward simulation of chains and deviation-vs-bound traces.

Two modes share one trace format. ``exact`` propagates the full state
distribution; ``monte_carlo`` steps independent walkers and records how many
sit in each block at every step.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import lumpability as lump
from . import markov_core as mc
from .bounds import BoundCurve

# walkers are split into fixed-size shards so the result does not depend on
# how many threads execute them
SHARD_SIZE = 1 << 14


@dataclass
class SimulationConfig:
    chain: np.ndarray
    partition: lump.StatePartition
    target_block: int = 0
    pi0: np.ndarray = None
    horizon: int = 100
    mode: str = "exact"
    walkers: int = 10_000
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.chain = mc.as_stochastic_matrix(self.chain)
        n = self.chain.shape[0]
        if self.partition.n != n:
            raise lump.PartitionError("partition does not match the chain size")
        if not 0 <= self.target_block < self.partition.m:
            raise IndexError(f"target block {self.target_block} out of range")
        if self.pi0 is None:
            self.pi0 = point_mass(n, 0)
        self.pi0 = np.asarray(self.pi0, dtype=np.float64)
        if self.pi0.shape != (n,) or not mc.is_stochastic_vector(self.pi0):
            raise ValueError("pi0 must be a stochastic vector over the chain's states")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.mode not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.walkers < 1:
            raise ValueError("walkers must be positive")


def point_mass(n, x):
    v = np.zeros(n)
    v[x] = 1.0
    return v


@dataclass
class TraceRow:
    """One step of a trace.

    ``deviation`` is |pi_t(A) - pi(A)| for the target block. ``distance`` is
    the block-level distance in the bound's norm (L1 sum or TV) and is the
    quantity compared against ``bound``; it is not written to CSV.
    """

    t: int
    mass: np.ndarray
    deviation: float
    bound: float = float("nan")
    norm: str = ""
    distance: float = float("nan")

    @property
    def dominated(self):
        return np.isnan(self.bound) or self.distance <= self.bound


def _rows(masses, pi_blocks, target, bound):
    rows = []
    for t, mass in enumerate(masses):
        diff = np.abs(mass - pi_blocks)
        row = TraceRow(t, mass, float(diff[target]))
        if bound is not None and t < len(bound):
            row.bound = bound[t]
            row.norm = bound.norm
            l1 = float(diff.sum())
            row.distance = l1 if bound.norm == "l1_sum" else 0.5 * l1
        rows.append(row)
    return rows


def exact_distributions(P, pi0, horizon):
    """pi_0 .. pi_T by iterated vector-matrix products."""
    out = np.empty((horizon + 1, P.shape[0]))
    out[0] = pi0
    for t in range(horizon):
        out[t + 1] = out[t] @ P
    return out


def exact_trace(cfg, bound=None, pi=None):
    """Exact block masses and target deviation for t = 0..horizon.

    ``pi`` may be passed to reuse a stationary solve; otherwise it is
    computed. ``bound`` is an optional :class:`BoundCurve`.
    """
    if pi is None:
        pi = mc.stationary_distribution(cfg.chain)
    dists = exact_distributions(cfg.chain, cfg.pi0, cfg.horizon)
    Z = cfg.partition.indicator()
    masses = dists @ Z
    return _rows(masses, pi @ Z, cfg.target_block, bound)


def _run_shard(cum, block_of, m, pi0_cum, horizon, size, seed_seq):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    states = np.searchsorted(pi0_cum, rng.random(size), side="right").astype(np.int64)
    counts = np.zeros((horizon + 1, m), dtype=np.int64)
    counts[0] = np.bincount(block_of[states], minlength=m)
    for t in range(1, horizon + 1):
        kernels.advance_walkers(states, cum, rng.random(size), block_of, counts[t])
    return counts


def mc_counts(cfg):
    """Walker counts per block, shape (horizon + 1, m).

    Shard k holds walkers [k*SHARD_SIZE, (k+1)*SHARD_SIZE) and draws from the
    stream ``SeedSequence(seed).spawn``-child k, so results are identical for
    any ``jobs`` value.
    """
    P, Q = cfg.chain, cfg.partition
    cum = kernels.cumulative_rows(P)
    pi0_cum = kernels.cumulative_rows(cfg.pi0[None, :])[0]
    block_of = Q.labels()
    n_shards = -(-cfg.walkers // SHARD_SIZE)
    sizes = [SHARD_SIZE] * (n_shards - 1) + [cfg.walkers - SHARD_SIZE * (n_shards - 1)]
    seqs = np.random.SeedSequence(cfg.seed).spawn(n_shards)
    args = [(cum, block_of, Q.m, pi0_cum, cfg.horizon, s, q) for s, q in zip(sizes, seqs)]
    if cfg.jobs > 1 and n_shards > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            parts = list(pool.map(lambda a: _run_shard(*a), args))
    else:
        parts = [_run_shard(*a) for a in args]
    return np.sum(parts, axis=0)


def mc_trace(cfg, bound=None, pi=None):
    """Walker frequencies per block and target deviation for t = 0..horizon.

    The frequency in A at step t estimates pi_t(A) without bias; its standard
    error is at most 0.5 / sqrt(walkers).
    """
    if pi is None:
        pi = mc.stationary_distribution(cfg.chain)
    freq = mc_counts(cfg) / cfg.walkers
    return _rows(freq, pi @ cfg.partition.indicator(), cfg.target_block, bound)


def standard_error_bound(walkers):
    return 0.5 / np.sqrt(walkers)


def aggregated_matrix_trace(cfg):
    """Aggregated transition matrices along the exact propagation.

    Element k-1 of the result (k = 1..T) maps block masses at step k-1 to
    step k, so ``masses[t] == masses[0] @ M_1 @ ... @ M_t``.

    Raises
    ------
    ConditioningError
        Some block has no mass at a step where a matrix is needed; the
        error's ``step`` names it.
    """
    dist = cfg.pi0.copy()
    mats = []
    for t in range(cfg.horizon):
        try:
            mats.append(lump.aggregated_transition_matrix(cfg.chain, cfg.partition, dist))
        except lump.ConditioningError as exc:
            raise lump.ConditioningError(
                f"block {exc.block} has zero mass at step {t}", exc.block, t
            ) from exc
        dist = dist @ cfg.chain
    return mats


def time_to_bound(trace, threshold):
    """First step from which the deviation stays at or below threshold.

    Returns None when the last row still exceeds it.
    """
    if not trace:
        raise ValueError("empty trace")
    first = None
    for row in trace:
        if row.deviation <= threshold:
            if first is None:
                first = row.t
        else:
            first = None
    return first


def bound_violations(trace, slack=0.0):
    """Rows whose norm-matched distance exceeds the bound by more than slack."""
    return [r for r in trace if not np.isnan(r.bound) and r.distance > r.bound + slack]
