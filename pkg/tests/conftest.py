"""Shared test fixtures and independent brute-force oracles.

The oracle functions here are deliberately plain Python (itertools over
configurations, no numpy vectorization) so expected values in the tests
come from a code path that shares nothing with the package internals.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from rbmstruct.model import RbmModel


def brute_joint_weight(model: RbmModel, x, y) -> float:
    e = 0.0
    for i in range(model.n):
        for j in range(model.m):
            e += x[i] * model.J[i, j] * y[j]
    for i in range(model.n):
        e += model.f[i] * x[i]
    for j in range(model.m):
        e += model.g[j] * y[j]
    return math.exp(e)


def brute_visible_weights(model: RbmModel) -> dict:
    """Unnormalized visible weights by direct summation over the hidden layer."""
    weights = {}
    for x in itertools.product((-1, 1), repeat=model.n):
        total = 0.0
        for y in itertools.product((-1, 1), repeat=model.m):
            total += brute_joint_weight(model, x, y)
        weights[x] = total
    return weights


def brute_visible_marginal(model: RbmModel, x) -> float:
    weights = brute_visible_weights(model)
    z = sum(weights.values())
    return weights[tuple(int(v) for v in x)] / z


def brute_influence(model: RbmModel, u: int, S) -> float:
    weights = brute_visible_weights(model)
    S = tuple(S)
    num = den = 0.0
    for x, w in weights.items():
        if all(x[i] == 1 for i in S):
            den += w
            num += w * x[u]
    return num / den


def brute_avg_cond_cov(model: RbmModel, u: int, v: int, S) -> float:
    weights = brute_visible_weights(model)
    z = sum(weights.values())
    S = tuple(S)
    cells: dict[tuple, list] = {}
    for x, w in weights.items():
        cells.setdefault(tuple(x[i] for i in S), []).append((x, w))
    total = 0.0
    for members in cells.values():
        wsum = sum(w for _x, w in members)
        euv = sum(w * x[u] * x[v] for x, w in members) / wsum
        eu = sum(w * x[u] for x, w in members) / wsum
        ev = sum(w * x[v] for x, w in members) / wsum
        total += (wsum / z) * (euv - eu * ev)
    return total


def brute_conditional_mean(rows, u: int, S) -> float | None:
    """Empirical E[x_u | x_S = 1] by direct row scanning."""
    matched = [r for r in rows if all(r[i] == 1 for i in S)]
    if not matched:
        return None
    return sum(r[u] for r in matched) / len(matched)


def random_small_model(rng, kind="general", n_range=(2, 5), m_range=(0, 3)) -> RbmModel:
    n = int(rng.integers(*n_range))
    m = int(rng.integers(*m_range))
    J = rng.uniform(-1.0, 1.0, size=(n, m))
    f = rng.uniform(-0.5, 0.5, size=n)
    g = rng.uniform(-0.5, 0.5, size=m)
    if kind == "ferromagnetic":
        J, f, g = np.abs(J), np.abs(f), np.abs(g)
    elif kind == "locally-consistent":
        J = np.abs(J) * rng.choice([-1.0, 1.0], size=m)
    return RbmModel(J, f, g, kind=kind if kind != "general" else "general")


# Demo model: 4 visible, 4 hidden, each hidden node linking a consecutive
# pair around a ring, so the two-hop graph is the 4-cycle with edge (0, 1).
def demo_ring_model() -> RbmModel:
    J = np.zeros((4, 4))
    for j, (a, b) in enumerate([(0, 1), (1, 2), (2, 3), (3, 0)]):
        J[a, j] = 0.8
        J[b, j] = 0.8
    f = np.full(4, 0.1)
    g = np.full(4, 0.1)
    return RbmModel(J, f, g, kind="ferromagnetic")
