"""Point and set distances for compact regions of R^d.

Regions are intervals, axis-aligned boxes, closed balls and finite point
clouds. Every quantity has an exact closed form except the directed
deviation from a box or ball into a ball/box/cloud it cannot be reduced
for; those are evaluated on a projected grid whose covering radius is
reported as the error bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels

ATOL = 1e-9
KINDS = ("interval", "box", "ball", "cloud")

# grid points per region used by the sampled sup path
COVER_BUDGET = 4096


class DimensionError(ValueError):
    pass


def as_point(x) -> np.ndarray:
    """Coerce to a finite float64 vector of length >= 1."""
    p = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"a point must be a nonempty 1-d vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p.tolist()}")
    return p


@dataclass(frozen=True, eq=False)
class Region:
    """A nonempty compact subset of R^d.

    Build through the classmethods; ``lower``/``upper`` are set for
    interval and box, ``center``/``radius`` for ball, ``points`` for cloud.
    """

    kind: str
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float = 0.0
    points: np.ndarray | None = None

    @classmethod
    def interval(cls, lower: float, upper: float) -> Region:
        lo, hi = as_point([lower]), as_point([upper])
        if lo[0] > hi[0]:
            raise ValueError(f"interval needs lower <= upper, got [{lo[0]}, {hi[0]}]")
        return cls("interval", lower=lo, upper=hi)

    @classmethod
    def box(cls, lower, upper) -> Region:
        lo, hi = as_point(lower), as_point(upper)
        if lo.shape != hi.shape:
            raise DimensionError(f"box bounds differ in dimension: {lo.size} vs {hi.size}")
        if np.any(lo > hi):
            raise ValueError(f"box needs lower <= upper on every axis, got {lo} > {hi}")
        return cls("box", lower=lo, upper=hi)

    @classmethod
    def ball(cls, center, radius: float) -> Region:
        radius = float(radius)
        if not math.isfinite(radius) or radius < 0:
            raise ValueError(f"ball radius must be finite and >= 0, got {radius}")
        return cls("ball", center=as_point(center), radius=radius)

    @classmethod
    def cloud(cls, points) -> Region:
        P = np.asarray(points, dtype=np.float64)
        if P.ndim == 1:
            P = P[:, None]
        if P.ndim != 2 or P.shape[0] == 0 or P.shape[1] == 0:
            raise ValueError(f"cloud needs a nonempty (n, d) array, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ValueError("cloud has non-finite coordinates")
        return cls("cloud", points=np.ascontiguousarray(P))

    @classmethod
    def singleton(cls, x) -> Region:
        return cls.cloud(as_point(x)[None, :])

    @property
    def dim(self) -> int:
        if self.kind == "ball":
            return self.center.size
        if self.kind == "cloud":
            return self.points.shape[1]
        return self.lower.size

    @property
    def is_boxlike(self) -> bool:
        return self.kind in ("interval", "box")

    @property
    def is_convex(self) -> bool:
        return self.kind != "cloud" or self.points.shape[0] == 1

    def contains(self, x, tol: float = ATOL) -> bool:
        return point_to_set_distance(x, self) <= tol

    def __repr__(self) -> str:
        if self.is_boxlike:
            return f"Region.{self.kind}({self.lower.tolist()}, {self.upper.tolist()})"
        if self.kind == "ball":
            return f"Region.ball({self.center.tolist()}, {self.radius})"
        return f"Region.cloud({self.points.tolist()})"


class SetMetrics(NamedTuple):
    distance: float
    hausdorff: float
    sup_deviation: float
    hausdorff_error: float = 0.0


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


def metric(x, y) -> float:
    x, y = as_point(x), as_point(y)
    _check_dims(x.size, y.size)
    # hypot rescales, so tiny nonzero differences do not underflow to 0
    return math.hypot(*(x - y))


# -- vectorised helpers over rows of X -----------------------------------

def _dist_to(X: np.ndarray, A: Region) -> np.ndarray:
    """d(x, A) for every row x of X."""
    if A.is_boxlike:
        return np.linalg.norm(X - np.clip(X, A.lower, A.upper), axis=1)
    if A.kind == "ball":
        return np.maximum(0.0, np.linalg.norm(X - A.center, axis=1) - A.radius)
    return kernels.row_min(X, A.points)


def _far_to(X: np.ndarray, A: Region) -> np.ndarray:
    """sup over a in A of |x - a| for every row x of X."""
    if A.is_boxlike:
        return np.linalg.norm(np.maximum(np.abs(X - A.lower), np.abs(X - A.upper)), axis=1)
    if A.kind == "ball":
        return np.linalg.norm(X - A.center, axis=1) + A.radius
    return kernels.pairwise(X, A.points).max(axis=1)


def _cover(A: Region, budget: int = COVER_BUDGET) -> tuple[np.ndarray, float]:
    """Grid points of a box or ball and a covering radius for them.

    Ball grids are built on the bounding box and projected radially onto
    the ball; projection is 1-Lipschitz so the box covering radius holds.
    """
    if A.kind == "ball":
        lo, hi = A.center - A.radius, A.center + A.radius
    else:
        lo, hi = A.lower, A.upper
    d = lo.size
    m = max(2, int(math.floor(budget ** (1.0 / d) + 1e-9)))
    axes = [np.linspace(lo[k], hi[k], m) for k in range(d)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    if A.kind == "ball":
        v = G - A.center
        n = np.linalg.norm(v, axis=1)
        scale = np.ones_like(n)
        out = n > A.radius
        scale[out] = A.radius / n[out]
        G = A.center + v * scale[:, None]
    return G, 0.5 * float(np.linalg.norm((hi - lo) / (m - 1)))


# -- public operations ---------------------------------------------------

def point_to_set_distance(x, A: Region) -> float:
    x = as_point(x)
    _check_dims(x.size, A.dim)
    return float(_dist_to(x[None, :], A)[0])


def nearest_point(x, A: Region) -> np.ndarray:
    """Metric projection of x onto A; clouds break ties by lowest index."""
    x = as_point(x)
    _check_dims(x.size, A.dim)
    if A.is_boxlike:
        return np.clip(x, A.lower, A.upper)
    if A.kind == "ball":
        v = x - A.center
        n = float(np.linalg.norm(v))
        if n <= A.radius:
            return x.copy()
        return A.center + v * (A.radius / n)
    diff = A.points - x
    return A.points[int(np.argmin(np.einsum("ij,ij->i", diff, diff)))].copy()


def set_distance(A: Region, B: Region) -> float:
    """inf over A x B of the Euclidean distance."""
    _check_dims(A.dim, B.dim)
    if A.kind == "cloud" and B.kind == "cloud":
        return kernels.pair_extrema(A.points, B.points)[0]
    if A.kind == "cloud":
        return float(_dist_to(A.points, B).min())
    if B.kind == "cloud":
        return float(_dist_to(B.points, A).min())
    if A.is_boxlike and B.is_boxlike:
        # overlapping boxes near the float range overflow to -inf, which still clips to 0
        with np.errstate(over="ignore"):
            gap = np.maximum(0.0, np.maximum(B.lower - A.upper, A.lower - B.upper))
        return float(np.linalg.norm(gap))
    if A.kind == "ball" and B.kind == "ball":
        return max(0.0, float(np.linalg.norm(A.center - B.center)) - A.radius - B.radius)
    ball, box = (A, B) if A.kind == "ball" else (B, A)
    return max(0.0, float(_dist_to(ball.center[None, :], box)[0]) - ball.radius)


def directed_deviation(A: Region, B: Region) -> tuple[float, float]:
    """sup over a in A of d(a, B), with an absolute error bound.

    The bound is zero on the closed-form paths. On the sampled path the
    returned value is a lower bound and value + error an upper bound.
    """
    _check_dims(A.dim, B.dim)
    if A.kind == "cloud":
        return float(_dist_to(A.points, B).max()), 0.0
    if A.kind == "ball" and A.radius == 0.0:
        return float(_dist_to(A.center[None, :], B)[0]), 0.0
    if A.is_boxlike and B.is_boxlike:
        g_lo = np.maximum(0.0, np.maximum(B.lower - A.lower, A.lower - B.upper))
        g_hi = np.maximum(0.0, np.maximum(B.lower - A.upper, A.upper - B.upper))
        return float(np.linalg.norm(np.maximum(g_lo, g_hi))), 0.0
    if A.is_boxlike and B.kind == "ball":
        far = float(_far_to(B.center[None, :], A)[0])
        return max(0.0, far - B.radius), 0.0
    if A.kind == "ball" and B.kind == "ball":
        gap = float(np.linalg.norm(A.center - B.center)) + A.radius - B.radius
        return max(0.0, gap), 0.0
    G, err = _cover(A)
    return float(_dist_to(G, B).max()), err


def hausdorff_with_error(A: Region, B: Region) -> tuple[float, float]:
    ab, e_ab = directed_deviation(A, B)
    ba, e_ba = directed_deviation(B, A)
    return max(ab, ba), max(e_ab, e_ba)


def hausdorff(A: Region, B: Region) -> float:
    return hausdorff_with_error(A, B)[0]


def sup_deviation(A: Region, B: Region) -> float:
    """sup over A x B of the Euclidean distance (exact for all kinds)."""
    _check_dims(A.dim, B.dim)
    if A.kind == "cloud" and B.kind == "cloud":
        return kernels.pair_extrema(A.points, B.points)[1]
    if A.kind == "cloud":
        return float(_far_to(A.points, B).max())
    if B.kind == "cloud":
        return float(_far_to(B.points, A).max())
    if A.is_boxlike and B.is_boxlike:
        spread = np.maximum(np.abs(B.upper - A.lower), np.abs(A.upper - B.lower))
        return float(np.linalg.norm(spread))
    if A.kind == "ball" and B.kind == "ball":
        return float(np.linalg.norm(A.center - B.center)) + A.radius + B.radius
    ball, box = (A, B) if A.kind == "ball" else (B, A)
    return float(_far_to(ball.center[None, :], box)[0]) + ball.radius


def diameter(A: Region) -> float:
    return sup_deviation(A, A)


def set_metrics(A: Region, B: Region) -> SetMetrics:
    h, err = hausdorff_with_error(A, B)
    return SetMetrics(set_distance(A, B), h, sup_deviation(A, B), err)


def sample(A: Region, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic (n, d) array of members of A.

    interval: uniform grid including both endpoints; box: one jittered
    point per selected cell of a stratified grid; ball: rejection from the
    bounding box; cloud: the points themselves, capped at the cloud size.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if A.kind == "interval":
        return np.linspace(A.lower[0], A.upper[0], n)[:, None]
    if A.kind == "cloud":
        size = A.points.shape[0]
        if n >= size:
            return A.points.copy()
        idx = np.floor(np.linspace(0, size - 1, n) + 0.5).astype(int)
        return A.points[idx].copy()
    if A.kind == "box":
        d = A.dim
        m = int(math.ceil(n ** (1.0 / d) - 1e-9))
        while m ** d < n:
            m += 1
        cells = np.floor(np.linspace(0, m ** d - 1, n) + 0.5).astype(int)
        idx = np.stack(np.unravel_index(cells, (m,) * d), axis=1)
        h = (A.upper - A.lower) / m
        return A.lower + (idx + rng.uniform(0.0, 1.0, size=(n, d))) * h
    lo = A.center - A.radius
    out = np.empty((0, A.dim))
    while out.shape[0] < n:
        cand = lo + rng.uniform(0.0, 1.0, size=(2 * n, A.dim)) * (2 * A.radius)
        keep = np.linalg.norm(cand - A.center, axis=1) <= A.radius
        out = np.vstack([out, cand[keep]])
    return out[:n]
