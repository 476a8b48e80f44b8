"""Partial orders on R^d and the iteration-induced ordering rule."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import ATOL, DimensionError, as_point

ORDER_KINDS = ("componentwise", "coordinate", "table")


@dataclass(frozen=True, eq=False)
class OrderRelation:
    """A partial order on R^d.

    ``componentwise``: x <= y on every coordinate.
    ``coordinate``: lexicographic order that compares ``axis`` first, then
    the remaining coordinates in index order (a total order).
    ``table``: reflexive-transitive closure of the listed ``pairs``.

    Points within ``tol`` of each other count as equal. ``strict`` drops
    the reflexive part, giving the associated strict order.
    """

    kind: str = "componentwise"
    axis: int = 0
    pairs: tuple = ()
    strict: bool = False
    tol: float = ATOL
    _nodes: np.ndarray | None = field(default=None, repr=False)
    _reach: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ORDER_KINDS:
            raise ValueError(f"unknown order kind {self.kind!r}; expected one of {ORDER_KINDS}")
        if self.kind == "coordinate" and self.axis < 0:
            raise ValueError(f"order axis must be >= 0, got {self.axis}")
        if self.kind == "table":
            self._build_table()

    def _build_table(self):
        nodes: list[np.ndarray] = []

        def node(p):
            p = as_point(p)
            for i, q in enumerate(nodes):
                if q.size == p.size and np.all(np.abs(q - p) <= self.tol):
                    return i
            nodes.append(p)
            return len(nodes) - 1

        edges = [(node(a), node(b)) for a, b in self.pairs]
        reach = np.eye(len(nodes), dtype=bool)
        for a, b in edges:
            reach[a, b] = True
        # Warshall closure
        for k in range(len(nodes)):
            reach |= reach[:, k:k + 1] & reach[k:k + 1, :]
        for a in range(len(nodes)):
            for b in range(a + 1, len(nodes)):
                if reach[a, b] and reach[b, a]:
                    raise ValueError(f"order table has a cycle through {nodes[a]} and {nodes[b]}")
        object.__setattr__(self, "_nodes", np.array(nodes) if nodes else None)
        object.__setattr__(self, "_reach", reach)

    def _node_index(self, p: np.ndarray) -> int | None:
        if self._nodes is None:
            return None
        for i, q in enumerate(self._nodes):
            if q.size == p.size and np.all(np.abs(q - p) <= self.tol):
                return i
        return None

    def leq(self, x, y) -> bool:
        return leq(self, x, y)


def _equal(x: np.ndarray, y: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.abs(x - y) <= tol))


def leq(order: OrderRelation, x, y) -> bool:
    """True iff x precedes y (or equals it, unless the order is strict)."""
    x, y = as_point(x), as_point(y)
    if x.size != y.size:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    if _equal(x, y, order.tol):
        return not order.strict
    if order.kind == "componentwise":
        return bool(np.all(x <= y + order.tol))
    if order.kind == "coordinate":
        if order.axis >= x.size:
            raise DimensionError(f"order axis {order.axis} out of range for dimension {x.size}")
        keys = [order.axis] + [k for k in range(x.size) if k != order.axis]
        for k in keys:
            if abs(x[k] - y[k]) > order.tol:
                return bool(x[k] < y[k])
        return not order.strict
    i, j = order._node_index(x), order._node_index(y)
    if i is None or j is None:
        return False
    return bool(order._reach[i, j])


def leq_matrix(order: OrderRelation, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Boolean (n, m) matrix of leq(X[i], Y[j])."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if order.kind == "componentwise":
        diff = X[:, None, :] - Y[None, :, :]
        le = np.all(diff <= order.tol, axis=2)
        if order.strict:
            le &= ~np.all(np.abs(diff) <= order.tol, axis=2)
        return le
    return np.array([[leq(order, x, y) for y in Y] for x in X], dtype=bool).reshape(len(X), len(Y))


@dataclass(frozen=True)
class OrderThresholds:
    """Global ordering threshold ``d0`` and per-subset thresholds ``d0i``."""

    d0: float
    d0i: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "d0i", tuple(float(v) for v in self.d0i))
        if not self.d0 > 0:
            raise ValueError(f"d0 must be > 0, got {self.d0}")
        bad = [v for v in self.d0i if not v > 0]
        if bad:
            raise ValueError(f"every d0i must be > 0, got {list(self.d0i)}")


def induced_by_iteration(thresholds: OrderThresholds, x, y, y_in_Tx: bool, dist: float) -> bool:
    """Whether the ordering rule forces x <= y for an iteration step x -> y.

    Fires only for y in Tx strictly closer than d0.
    """
    return bool(y_in_Tx) and dist < thresholds.d0


class ChainCheck(NamedTuple):
    ordered: bool
    first_violation: int | None = None


def verify_chain(order: OrderRelation, seq) -> ChainCheck:
    """Check seq[t] <= seq[t + 1] for every consecutive pair."""
    pts = [as_point(p) for p in seq]
    if not pts:
        raise ValueError("verify_chain needs a nonempty sequence")
    for t in range(len(pts) - 1):
        if not leq(order, pts[t], pts[t + 1]):
            return ChainCheck(False, t)
    return ChainCheck(True, None)
