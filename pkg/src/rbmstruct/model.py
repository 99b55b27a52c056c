"""RBM models, exact enumeration oracles, and random model generators.

An RBM over visible spins x in {-1,+1}^n and hidden spins y in {-1,+1}^m
has joint probability

    P(x, y) = exp(x.T J y + f.T x + g.T y) / Z.

Summing out the hidden layer gives the visible marginal in closed form,

    P(x) propto exp(f.T x) * prod_j 2 cosh(g_j + (J.T x)_j),

which ExactOracle evaluates by enumerating all 2^n visible configurations
(log-space with max-shift, so large couplings do not overflow). Everything
exact in this package (marginals, influence, average conditional
covariance, the two-hop graph) comes from this module and serves as the
reference the sample-based learners are tested against.

Node indices are 0-based throughout. Configuration index c encodes node i
in bit (n-1-i), bit 1 meaning +1, so configurations enumerate in
lexicographic order with node 0 most significant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# Enumeration guard: exact quantities are only computed for n + m <= 24
# total spins so the oracle always runs in seconds.
ENUM_GUARD = 24

KIND_FERROMAGNETIC = "ferromagnetic"
KIND_LOCALLY_CONSISTENT = "locally-consistent"
KIND_GENERAL = "general"
_KINDS = (KIND_FERROMAGNETIC, KIND_LOCALLY_CONSISTENT, KIND_GENERAL)


@dataclass(frozen=True)
class NonDegeneracyParams:
    """Weight bounds: nonzero couplings at least alpha in magnitude, and
    every node's total incident coupling strength plus field at most beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= self.beta):
            raise ValueError("require 0 < alpha <= beta")


class RbmModel:
    """An RBM (J, f, g) with a declared model class.

    J is the n x m interaction matrix, f the visible fields, g the hidden
    fields. ``kind`` declares the class the model is supposed to belong to
    and is validated at construction:

    - "ferromagnetic": J, f, g all non-negative;
    - "locally-consistent": each column of J entirely >= 0 or entirely <= 0,
      fields arbitrary;
    - "general": no sign constraint.

    Instances are immutable: the arrays are copied and marked read-only.
    """

    __slots__ = ("J", "f", "g", "kind")

    def __init__(self, J, f, g, kind: str = KIND_GENERAL):
        J = np.array(J, dtype=np.float64)
        f = np.array(f, dtype=np.float64)
        g = np.array(g, dtype=np.float64)
        if J.ndim != 2:
            raise ValueError("J must be a 2-d array")
        n, m = J.shape
        if n < 1:
            raise ValueError("need at least one visible node")
        if f.shape != (n,) or g.shape != (m,):
            raise ValueError("field shapes must match J: f is (n,), g is (m,)")
        if not (np.isfinite(J).all() and np.isfinite(f).all() and np.isfinite(g).all()):
            raise ValueError("weights and fields must be finite")
        if kind not in _KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        if kind == KIND_FERROMAGNETIC and not (
            (J >= 0).all() and (f >= 0).all() and (g >= 0).all()
        ):
            raise ValueError("ferromagnetic kind requires non-negative J, f, g")
        if kind == KIND_LOCALLY_CONSISTENT and not _columns_single_signed(J):
            raise ValueError("locally-consistent kind requires single-signed J columns")
        for a in (J, f, g):
            a.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("RbmModel is immutable")

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def m(self) -> int:
        return self.J.shape[1]

    @property
    def is_ferromagnetic(self) -> bool:
        return bool((self.J >= 0).all() and (self.f >= 0).all() and (self.g >= 0).all())

    @property
    def is_locally_consistent(self) -> bool:
        return _columns_single_signed(self.J)

    def __eq__(self, other):
        if not isinstance(other, RbmModel):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.J.shape == other.J.shape
            and np.array_equal(self.J, other.J)
            and np.array_equal(self.f, other.f)
            and np.array_equal(self.g, other.g)
        )

    def __repr__(self):
        return f"RbmModel(n={self.n}, m={self.m}, kind={self.kind!r})"


def _columns_single_signed(J: np.ndarray) -> bool:
    return bool(np.all((J >= 0).all(axis=0) | (J <= 0).all(axis=0)))


@dataclass(frozen=True)
class NonDegeneracyReport:
    ok: bool
    violations: tuple[str, ...]


def validate_nondegenerate(model: RbmModel, params: NonDegeneracyParams) -> NonDegeneracyReport:
    """Check the (alpha, beta) bounds; reports violations, never raises.

    Conditions: every nonzero |J_ij| >= alpha; for every visible i,
    sum_j |J_ij| + |f_i| <= beta; for every hidden j,
    sum_i |J_ij| + |g_j| <= beta.
    """
    violations = []
    absJ = np.abs(model.J)
    small = (absJ > 0) & (absJ < params.alpha)
    for i, j in zip(*np.nonzero(small)):
        violations.append(
            f"|J[{i},{j}]| = {absJ[i, j]:g} is nonzero but below alpha = {params.alpha:g}"
        )
    row_strength = absJ.sum(axis=1) + np.abs(model.f)
    for i in np.nonzero(row_strength > params.beta)[0]:
        violations.append(
            f"visible node {i}: strength {row_strength[i]:g} exceeds beta = {params.beta:g}"
        )
    col_strength = absJ.sum(axis=0) + np.abs(model.g)
    for j in np.nonzero(col_strength > params.beta)[0]:
        violations.append(
            f"hidden node {j}: strength {col_strength[j]:g} exceeds beta = {params.beta:g}"
        )
    return NonDegeneracyReport(ok=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class TwoHopGraph:
    """Undirected graph on visible nodes; {i, j} is an edge when i and j
    share at least one hidden node with nonzero couplings to both."""

    n: int
    edges: frozenset  # of (i, j) tuples with i < j

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad edge ({i}, {j}) for n = {self.n}")

    def neighbors(self, u: int) -> set:
        return {j for e in self.edges for j in e if u in e and j != u}

    def degree(self, u: int) -> int:
        return len(self.neighbors(u))

    @property
    def max_degree(self) -> int:
        if not self.edges:
            return 0
        return max(self.degree(u) for u in range(self.n))


def two_hop_graph(model: RbmModel) -> TwoHopGraph:
    """Graph-theoretic two-hop neighborhood graph of the visible layer."""
    support = model.J != 0
    shared = support @ support.T  # counts of common hidden nodes
    edges = set()
    for i, k in zip(*np.nonzero(shared)):
        if i < k:
            edges.add((int(i), int(k)))
    return TwoHopGraph(n=model.n, edges=frozenset(edges))


def index_to_pm1(indices, n: int) -> np.ndarray:
    """Decode configuration indices to +-1 rows (node i is bit n-1-i)."""
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (indices[..., None] >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)

def pm1_to_index(x) -> int:
    """Inverse of index_to_pm1 for a single configuration."""
    x = np.asarray(x)
    n = x.shape[0]
    idx = 0
    for i in range(n):
        if x[i] == 1:
            idx |= 1 << (n - 1 - i)
        elif x[i] != -1:
            raise ValueError("configuration entries must be +-1")
    return idx


class ExactOracle:
    """Exact visible-layer quantities by full enumeration.

    Builds the normalized log-probability table over all 2^n visible
    configurations once; marginal/influence/covariance queries are then
    vectorized table lookups. Use this directly when issuing many queries
    against one model; the module-level convenience functions construct a
    fresh oracle per call.
    """

    def __init__(self, model: RbmModel):
        if model.n + model.m > ENUM_GUARD:
            raise ValueError(
                f"exact enumeration limited to n + m <= {ENUM_GUARD} spins "
                f"(got {model.n + model.m})"
            )
        self.model = model
        self.n = model.n
        self._size = 1 << model.n
        self._logp = self._log_marginals()
        self._p = np.exp(self._logp)
        self._columns: dict[int, np.ndarray] = {}

    def _log_marginals(self) -> np.ndarray:
        n, m = self.model.n, self.model.m
        J, f, g = self.model.J, self.model.f, self.model.g
        logw = np.empty(self._size, dtype=np.float64)
        chunk = 1 << 14
        shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
        for start in range(0, self._size, chunk):
            idx = np.arange(start, min(start + chunk, self._size), dtype=np.int64)
            x = ((idx[:, None] >> shifts) & 1) * 2.0 - 1.0
            t = x @ J + g  # hidden pre-activations, shape (chunk, m)
            # log 2cosh(t) = logaddexp(t, -t), stable for large |t|
            logw[start : start + len(idx)] = x @ f + np.logaddexp(t, -t).sum(axis=1)
        mx = logw.max()
        log_z = mx + math.log(np.exp(logw - mx).sum())
        return logw - log_z

    @property
    def log_probabilities(self) -> np.ndarray:
        return self._logp

    @property
    def probabilities(self) -> np.ndarray:
        return self._p

    def _column(self, i: int) -> np.ndarray:
        col = self._columns.get(i)
        if col is None:
            idx = np.arange(self._size, dtype=np.int64)
            col = (((idx >> (self.n - 1 - i)) & 1) * 2 - 1).astype(np.float64)
            self._columns[i] = col
        return col

    def _ones_mask(self, S) -> np.ndarray:
        mask = np.ones(self._size, dtype=bool)
        for i in S:
            mask &= self._column(i) > 0
        return mask

    def marginal(self, x) -> float:
        """P(X = x) for a full +-1 configuration."""
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise ValueError("configuration length must equal n")
        return float(self._p[pm1_to_index(x)])

    def influence(self, u: int, S) -> float:
        """E[X_u | X_S = 1^s]: expected magnetization of u with S pinned to +1."""
        S = _node_set(S, self.n)
        if u in S or not 0 <= u < self.n:
            raise ValueError("u must be a visible node outside S")
        mask = self._ones_mask(S)
        den = float(self._p[mask].sum())
        if den <= 0.0:
            raise ValueError("conditioning event has probability zero")
        num = float((self._p[mask] * self._column(u)[mask]).sum())
        return num / den

    def avg_cond_cov(self, u: int, v: int, S) -> float:
        """E_{x_S}[ Cov(X_u, X_v | X_S = x_S) ], averaged over the law of X_S."""
        S = _node_set(S, self.n)
        if u == v:
            raise ValueError("u and v must differ")
        if u in S or v in S:
            raise ValueError("u and v must lie outside S")
        key = np.zeros(self._size, dtype=np.int64)
        for pos, i in enumerate(S):
            key |= ((np.arange(self._size, dtype=np.int64) >> (self.n - 1 - i)) & 1) << (
                len(S) - 1 - pos
            )
        _, key = np.unique(key, return_inverse=True)
        p = self._p
        xu = self._column(u)
        xv = self._column(v)
        w = np.bincount(key, weights=p)
        au = np.bincount(key, weights=p * xu)
        av = np.bincount(key, weights=p * xv)
        zuv = np.bincount(key, weights=p * xu * xv)
        nz = w > 0
        return float(np.sum(zuv[nz] - au[nz] * av[nz] / w[nz]))


def _node_set(S, n: int) -> tuple:
    S = tuple(sorted(int(i) for i in S))
    if len(set(S)) != len(S):
        raise ValueError("duplicate nodes in S")
    if S and not (0 <= S[0] and S[-1] < n):
        raise ValueError("node index out of range")
    return S


def visible_marginal(model: RbmModel, x) -> float:
    """P(X = x) under the exact visible marginal (n + m <= 24)."""
    return ExactOracle(model).marginal(x)


def exact_influence(model: RbmModel, u: int, S) -> float:
    """Exact discrete influence E[X_u | X_S = 1^s] by enumeration."""
    return ExactOracle(model).influence(u, S)


def exact_avg_cond_cov(model: RbmModel, u: int, v: int, S) -> float:
    """Exact average conditional covariance of (X_u, X_v) given X_S."""
    return ExactOracle(model).avg_cond_cov(u, v, S)


def generate_model(
    kind: str,
    n: int,
    m: int,
    d2_target: int,
    params: NonDegeneracyParams,
    seed,
) -> RbmModel:
    """Random (alpha, beta)-non-degenerate model with two-hop degree d2_target.

    The support is built hidden node by hidden node: the first hidden node
    links a clique of d2_target + 1 visible nodes (so the target degree is
    achieved), later ones attach random groups that never push any node's
    two-hop degree past the target. Coupling magnitudes are drawn from
    [alpha, min(2 alpha, cap)] where cap keeps every row and column within
    0.9 beta; fields use the remaining 0.1 beta. Magnitudes are continuous,
    so fine-tuned cancellations (a distributional two-hop set strictly
    inside the graph-theoretic one) occur with probability zero.

    Deterministic given ``seed``. Raises ValueError on infeasible requests.
    """
    if kind not in (KIND_FERROMAGNETIC, KIND_LOCALLY_CONSISTENT):
        raise ValueError("kind must be 'ferromagnetic' or 'locally-consistent'")
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    if not 0 <= d2_target <= n - 1:
        raise ValueError("d2_target must be in [0, n-1]")
    if d2_target > 0 and m == 0:
        raise ValueError("d2_target > 0 requires at least one hidden node")
    # 0.9 beta goes to couplings, 0.1 beta to fields; a node can then carry
    # at most floor(0.9 beta / alpha) incident couplings of magnitude >= alpha
    max_units = int(math.floor(0.9 * params.beta / params.alpha))
    if max_units < 1:
        raise ValueError("infeasible weight bounds: alpha exceeds 0.9 beta")
    if d2_target > 0 and d2_target + 1 > max_units:
        raise ValueError(
            f"infeasible: a degree-{d2_target} clique needs {d2_target + 1} couplings "
            f"per hidden node but beta/alpha allows only {max_units}"
        )

    rng = np.random.default_rng(seed)
    support = np.zeros((n, m), dtype=bool)
    nbrs = [set() for _ in range(n)]
    row_units = np.zeros(n, dtype=int)

    def fits(group) -> bool:
        gset = set(int(i) for i in group)
        return all(len(nbrs[i] | (gset - {i})) <= d2_target for i in gset)

    def attach(group, j):
        gset = set(int(i) for i in group)
        support[list(gset), j] = True
        for i in gset:
            nbrs[i] |= gset - {i}
            row_units[i] += 1

    for j in range(m):
        avail = np.flatnonzero(row_units < max_units)
        if avail.size == 0:
            continue  # leave this hidden node disconnected
        if d2_target == 0:
            attach(rng.choice(avail, size=1, replace=False), j)
            continue
        if j == 0:
            attach(rng.choice(n, size=d2_target + 1, replace=False), j)
            continue
        group = None
        cmax = min(d2_target + 1, max_units, avail.size)
        for _ in range(50):
            size = int(rng.integers(1, cmax + 1))
            cand = rng.choice(avail, size=size, replace=False)
            if fits(cand):
                group = cand
                break
        if group is None:
            group = rng.choice(avail, size=1, replace=False)
        attach(group, j)

    row_counts = support.sum(axis=1)
    col_counts = support.sum(axis=0)
    max_count = int(max(row_counts.max(initial=0), col_counts.max(initial=0), 1))
    cap = 0.9 * params.beta / max_count  # >= alpha since max_count <= max_units
    hi = min(2.0 * params.alpha, cap)

    J = np.zeros((n, m))
    nnz = int(support.sum())
    J[support] = rng.uniform(params.alpha, hi, size=nnz)
    field_hi = 0.1 * params.beta
    if kind == KIND_FERROMAGNETIC:
        f = rng.uniform(0.0, field_hi, size=n)
        g = rng.uniform(0.0, field_hi, size=m)
    else:
        col_signs = rng.choice([-1.0, 1.0], size=m)
        J *= col_signs
        f = rng.uniform(-field_hi, field_hi, size=n)
        g = rng.uniform(-field_hi, field_hi, size=m)

    model = RbmModel(J, f, g, kind=kind)
    report = validate_nondegenerate(model, params)
    if not report.ok:
        raise RuntimeError(f"generator produced a degenerate model: {report.violations}")
    return model


def save_model(model: RbmModel, path) -> None:
    """Write a model as JSON: {n, m, J (row-major), f, g, kind}.

    Floats serialize via repr (17 significant digits), so load(save(m))
    reproduces the model bit for bit.
    """
    payload = {
        "n": model.n,
        "m": model.m,
        "J": [float(x) for x in model.J.ravel(order="C")],
        "f": [float(x) for x in model.f],
        "g": [float(x) for x in model.g],
        "kind": model.kind,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path) -> RbmModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        n, m = int(payload["n"]), int(payload["m"])
        J = np.array(payload["J"], dtype=np.float64).reshape(n, m)
        f = np.array(payload["f"], dtype=np.float64)
        g = np.array(payload["g"], dtype=np.float64)
        kind = payload["kind"]
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"malformed model file {path}: {exc}") from exc
    return RbmModel(J, f, g, kind=kind)
