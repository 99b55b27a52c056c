"""Empirical estimators over sample sets.

Everything the greedy learners consume lives here: empirical
probabilities, the empirical influence ratio, conditioning index sets
(which samples realize each observed configuration on a node subset), and
the average conditional covariance in two algebraically identical forms.

All counting is exact integer arithmetic (float64 sums of +-1 entries
stay integral far below 2**53); each estimator divides once at the end.
That makes the direct and decomposed covariance routes agree to float
rounding rather than to statistical noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import SampleSet

# Conditioning patterns are packed into int64 keys, one bit per node.
_MAX_CONDITIONING = 62


@dataclass(frozen=True)
class InfluenceValue:
    """Empirical influence as a counted ratio.

    numer_count is the number of samples with x on S union {u} all +1,
    denom_count the number with x on S all +1. The value is
    2 * numer / denom - 1, undefined (None) when denom_count is zero.
    """

    numer_count: int
    denom_count: int

    @property
    def defined(self) -> bool:
        return self.denom_count > 0

    @property
    def value(self) -> float | None:
        if not self.defined:
            return None
        return 2.0 * self.numer_count / self.denom_count - 1.0

    def value_or(self, default: float) -> float:
        v = self.value
        return default if v is None else v


class ConfigIndex:
    """Index of the distinct configurations a sample set shows on S.

    Cell l holds the sample indices whose restriction to S equals the
    l-th distinct configuration; cells are ordered by first occurrence
    and partition range(M). ``ones_indices`` is the cell of the all-ones
    configuration (empty array if never observed).
    """

    __slots__ = ("S", "patterns", "groups", "cell_of", "n_samples")

    def __init__(self, S, patterns, groups, cell_of, n_samples):
        self.S = S
        self.patterns = patterns
        self.groups = groups
        self.cell_of = cell_of
        self.n_samples = n_samples

    @property
    def num_cells(self) -> int:
        return len(self.groups)

    @property
    def cell_sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups], dtype=np.int64)

    def configs(self) -> list:
        """Distinct configurations as +-1 tuples in cell order."""
        s = len(self.S)
        out = []
        for pat in self.patterns:
            out.append(tuple(1 if (pat >> (s - 1 - k)) & 1 else -1 for k in range(s)))
        return out

    @property
    def ones_indices(self) -> np.ndarray:
        target = (1 << len(self.S)) - 1
        for l, pat in enumerate(self.patterns):
            if pat == target:
                return self.groups[l]
        return np.empty(0, dtype=np.int64)


def build_index(samples: SampleSet, S) -> ConfigIndex:
    """Group sample indices by their configuration on S (first-occurrence
    cell order; ascending-node MSB-first bit patterns as keys)."""
    S = tuple(sorted(int(i) for i in S))
    if len(set(S)) != len(S):
        raise ValueError("duplicate nodes in S")
    if S and not (0 <= S[0] and S[-1] < samples.n):
        raise ValueError("node index out of range")
    if len(S) > _MAX_CONDITIONING:
        raise ValueError(f"conditioning sets larger than {_MAX_CONDITIONING} unsupported")
    M = samples.M
    if not S:
        cell_of = np.zeros(M, dtype=np.int64)
        return ConfigIndex(S, [0], [np.arange(M, dtype=np.int64)], cell_of, M)
    s = len(S)
    bits = (samples.dense[:, list(S)] > 0).astype(np.int64)
    weights = (1 << np.arange(s - 1, -1, -1, dtype=np.int64))
    keys = bits @ weights
    uniq, first_idx, inverse = np.unique(keys, return_index=True, return_inverse=True)
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq), dtype=np.int64)
    cell_of = rank[inverse]
    sort_idx = np.argsort(cell_of, kind="stable")
    counts = np.bincount(cell_of, minlength=len(uniq))
    groups = np.split(sort_idx, np.cumsum(counts)[:-1])
    patterns = [int(uniq[o]) for o in order]
    return ConfigIndex(S, patterns, groups, cell_of, M)


def empirical_probability(samples: SampleSet, assignment) -> float:
    """Fraction of samples matching a partial +-1 assignment exactly.

    ``assignment`` maps node index to +-1 and must be nonempty; the sample
    set must be nonempty.
    """
    if not assignment:
        raise ValueError("assignment must cover at least one node")
    if samples.M == 0:
        raise ValueError("need at least one sample")
    mask = np.ones(samples.M, dtype=bool)
    for node, value in assignment.items():
        if value not in (-1, 1):
            raise ValueError("assignment values must be +-1")
        mask &= samples.column(int(node)) == value
    return float(mask.sum()) / samples.M


def empirical_influence(
    samples: SampleSet,
    u: int,
    S,
    idx_s: ConfigIndex | None = None,
    idx_su: ConfigIndex | None = None,
) -> InfluenceValue:
    """Influence of pinning S to +1 on X_u, as the ratio of all-ones counts
    on S union {u} and on S. Undefined when no sample has x_S = 1^s."""
    S = tuple(sorted(int(i) for i in S))
    if u in S:
        raise ValueError("u must not belong to S")
    if idx_s is None:
        idx_s = build_index(samples, S)
    if idx_su is None:
        idx_su = build_index(samples, S + (u,))
    if idx_s.S != S or idx_su.S != tuple(sorted(S + (u,))):
        raise ValueError("index conditioning sets do not match S and S union {u}")
    return InfluenceValue(
        numer_count=int(len(idx_su.ones_indices)),
        denom_count=int(len(idx_s.ones_indices)),
    )


def a_coefficient(samples: SampleSet, j: int, f_l) -> int:
    """Signed sum of x_j over the listed sample indices."""
    f_l = np.asarray(f_l, dtype=np.int64)
    if f_l.size == 0:
        return 0
    return int(samples.column(j)[f_l].astype(np.int64).sum())


def avg_cond_cov_direct(samples: SampleSet, u: int, v: int, idx: ConfigIndex) -> float:
    """Average conditional covariance, cell by cell: each observed
    configuration of S contributes its within-cell covariance weighted by
    the cell's empirical probability."""
    _check_cov_args(u, v, idx)
    M = samples.M
    xu = samples.column(u).astype(np.float64)
    xv = samples.column(v).astype(np.float64)
    total = 0.0
    for g in idx.groups:
        c = len(g)
        mean_z = float((xu[g] * xv[g]).sum()) / c
        mean_u = float(xu[g].sum()) / c
        mean_v = float(xv[g].sum()) / c
        total += (c / M) * (mean_z - mean_u * mean_v)
    return total


def avg_cond_cov_decomposed(samples: SampleSet, u: int, v: int, idx: ConfigIndex) -> float:
    """Average conditional covariance via the sum decomposition

        (1/M) * ( sum_i x_u^i x_v^i  -  sum_l a_u,l a_v,l / |F_l| ),

    where a_j,l is the signed sum of x_j over cell l. Agrees with the
    direct route as an exact rational identity (float routes match to
    about 1e-15)."""
    _check_cov_args(u, v, idx)
    M = samples.M
    z_total = int(samples.column(u).astype(np.int64) @ samples.column(v).astype(np.int64))
    corr = 0.0
    for g in idx.groups:
        corr += a_coefficient(samples, u, g) * a_coefficient(samples, v, g) / len(g)
    return (z_total - corr) / M


def _check_cov_args(u: int, v: int, idx: ConfigIndex) -> None:
    if u == v:
        raise ValueError("u and v must differ")
    if u in idx.S or v in idx.S:
        raise ValueError("u and v must lie outside the conditioning set")
    if idx.n_samples == 0:
        raise ValueError("need at least one sample")
