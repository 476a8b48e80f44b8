"""Multivalued p-cyclic maps and sample-based checks of their hypotheses.

Subset indices are 1-based and cyclic: the successor of subset p is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .geometry import (
    ATOL,
    DimensionError,
    Region,
    as_point,
    diameter,
    directed_deviation,
    hausdorff,
    metric,
    nearest_point,
    point_to_set_distance,
    sample,
    set_distance,
)
from .order import OrderRelation, OrderThresholds, leq, leq_matrix

MAP_KINDS = ("affine-target", "ball-valued", "table")


class OutsideUnionError(ValueError):
    pass


class NonFiniteImageError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AffinePiece:
    """y(x) = offset + matrix @ (x - anchor), optionally thickened to a ball."""

    offset: np.ndarray
    matrix: np.ndarray
    anchor: np.ndarray
    radius: float = 0.0

    @classmethod
    def make(cls, offset, matrix, anchor, radius: float = 0.0) -> AffinePiece:
        c, a = as_point(offset), as_point(anchor)
        if c.size != a.size:
            raise DimensionError(f"offset and anchor differ in dimension: {c.size} vs {a.size}")
        M = np.asarray(matrix, dtype=np.float64)
        if M.ndim == 0:
            M = float(M) * np.eye(c.size)
        if M.shape != (c.size, c.size) or not np.all(np.isfinite(M)):
            raise ValueError(f"matrix must be a finite scalar or {c.size}x{c.size}, got shape {M.shape}")
        if not math.isfinite(radius) or radius < 0:
            raise ValueError(f"image radius must be >= 0, got {radius}")
        return cls(c, M, a, float(radius))

    def center(self, x: np.ndarray) -> np.ndarray:
        # overflow is reported by the caller's finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            return self.offset + self.matrix @ (x - self.anchor)


@dataclass(frozen=True, eq=False)
class TableEntry:
    subset: int
    point: np.ndarray
    image: np.ndarray


@dataclass(frozen=True, eq=False)
class MultiMap:
    kind: str
    pieces: tuple[AffinePiece, ...] = ()
    entries: tuple[TableEntry, ...] = ()
    tol: float = ATOL

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}; expected one of {MAP_KINDS}")

    @classmethod
    def affine(cls, pieces) -> MultiMap:
        return cls("affine-target", pieces=tuple(pieces))

    @classmethod
    def ball_valued(cls, pieces) -> MultiMap:
        return cls("ball-valued", pieces=tuple(pieces))

    @classmethod
    def table(cls, entries) -> MultiMap:
        """``entries``: iterable of (subset, domain point, image points)."""
        built = []
        for subset, point, image in entries:
            img = np.asarray(image, dtype=np.float64)
            if img.ndim == 1:
                img = img[None, :]
            if img.shape[0] == 0:
                raise ValueError(f"table image of {point} is empty")
            built.append(TableEntry(int(subset), as_point(point), img))
        return cls("table", entries=tuple(built))

    def image(self, i: int, x: np.ndarray) -> Region:
        """Tx for x in subset i."""
        if self.kind == "table":
            for e in self.entries:
                if e.subset == i and e.point.size == x.size and np.all(np.abs(e.point - x) <= self.tol):
                    return Region.cloud(e.image)
            raise KeyError(f"point {x.tolist()} of subset {i} is not in the table domain")
        piece = self.pieces[i - 1]
        c = piece.center(x)
        if not np.all(np.isfinite(c)):
            raise NonFiniteImageError(f"image of {x.tolist()} in subset {i} is not finite")
        if self.kind == "ball-valued" and piece.radius > 0:
            return Region.ball(c, piece.radius)
        return Region.singleton(c)


@dataclass(frozen=True, eq=False)
class CyclicSystem:
    """p subsets, the cyclic map between them, and constants k_i.

    ``D[i - 1]`` is the distance from subset i to its successor.
    """

    subsets: tuple[Region, ...]
    mapping: MultiMap
    constants: tuple[float, ...]
    tol: float = ATOL
    D: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        subsets = tuple(self.subsets)
        object.__setattr__(self, "subsets", subsets)
        object.__setattr__(self, "constants", tuple(float(k) for k in self.constants))
        p = len(subsets)
        if p < 1:
            raise ValueError("a cyclic system needs at least one subset")
        dims = {A.dim for A in subsets}
        if len(dims) != 1:
            raise DimensionError(f"subsets differ in dimension: {sorted(dims)}")
        if len(self.constants) != p:
            raise ValueError(f"expected {p} constants, got {len(self.constants)}")
        if any(not math.isfinite(k) or k < 0 for k in self.constants):
            raise ValueError(f"constants must be finite and >= 0, got {list(self.constants)}")
        if math.prod(self.constants) >= 1:
            raise ValueError(f"product of constants >= 1: {math.prod(self.constants)!r}")
        if self.mapping.kind != "table":
            if len(self.mapping.pieces) != p:
                raise ValueError(f"map has {len(self.mapping.pieces)} pieces for {p} subsets")
            for piece in self.mapping.pieces:
                if piece.offset.size != self.dim:
                    raise DimensionError(f"map piece dimension {piece.offset.size} != {self.dim}")
        D = tuple(set_distance(subsets[i], subsets[(i + 1) % p]) for i in range(p))
        object.__setattr__(self, "D", D)

    @property
    def p(self) -> int:
        return len(self.subsets)

    @property
    def dim(self) -> int:
        return self.subsets[0].dim

    @property
    def D_max(self) -> float:
        return max(self.D)

    @property
    def k(self) -> float:
        return math.prod(self.constants)

    def next_index(self, i: int) -> int:
        return i % self.p + 1

    def subset(self, i: int) -> Region:
        return self.subsets[i - 1]


def subset_index(sys: CyclicSystem, x) -> int:
    """Smallest i with x in subset i (within the system tolerance)."""
    x = as_point(x)
    for i, A in enumerate(sys.subsets, start=1):
        if point_to_set_distance(x, A) <= sys.tol:
            return i
    raise OutsideUnionError(f"point {x.tolist()} is outside cyclic union")


def apply(sys: CyclicSystem, x, index: int | None = None) -> tuple[Region, int]:
    """The image Tx and the index of the subset it lands in.

    ``index`` pins the subset x is taken from, which matters when subsets
    overlap; by default it is ``subset_index(sys, x)``.
    """
    x = as_point(x)
    if index is None:
        index = subset_index(sys, x)
    elif point_to_set_distance(x, sys.subset(index)) > sys.tol:
        raise OutsideUnionError(f"point {x.tolist()} is not in subset {index}")
    return sys.mapping.image(index, x), sys.next_index(index)


Selector = Callable[[np.ndarray, Region, int], np.ndarray]


def _nearest_selector(x: np.ndarray, image: Region, step: int) -> np.ndarray:
    return nearest_point(x, image)


def composite_apply(sys: CyclicSystem, x, times: int, selector: Selector | None = None,
                    index: int | None = None) -> np.ndarray:
    """Apply the map ``times`` times, picking one image point per step.

    ``selector(x, image, step)`` picks the successor; nearest by default.
    """
    if times < 0:
        raise ValueError(f"times must be >= 0, got {times}")
    select = selector or _nearest_selector
    x = as_point(x)
    i = subset_index(sys, x) if index is None else index
    for step in range(times):
        image, i = apply(sys, x, i)
        x = select(x, image, step)
    return x


# -- verdicts ------------------------------------------------------------

PASS, FAIL, VACUOUS = "PASS", "FAIL", "VACUOUS"


@dataclass
class Verdict:
    name: str
    status: str
    margin: float | None = None
    witness: dict | None = None
    detail: str = ""
    checked: int = 0

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "margin": self.margin,
            "witness": self.witness,
            "detail": self.detail,
            "checked": self.checked,
        }


def _ball_like(R: Region):
    if R.kind == "ball":
        return R.center, R.radius
    if R.kind == "cloud" and R.points.shape[0] == 1:
        return R.points[0], 0.0
    return None


def _image_hausdorff(IX: list[Region], IY: list[Region], mask: np.ndarray) -> np.ndarray:
    """Hausdorff distances between image pairs, filled where ``mask`` holds."""
    bx = [_ball_like(R) for R in IX]
    by = [_ball_like(R) for R in IY]
    if all(b is not None for b in bx) and all(b is not None for b in by):
        cx = np.array([b[0] for b in bx])
        cy = np.array([b[0] for b in by])
        rx = np.array([b[1] for b in bx])
        ry = np.array([b[1] for b in by])
        return kernels.pairwise(cx, cy) + np.abs(rx[:, None] - ry[None, :])
    H = np.full(mask.shape, np.nan)
    for a, b in zip(*np.nonzero(mask)):
        H[a, b] = hausdorff(IX[a], IY[b])
    return H


def check_containment(sys: CyclicSystem, samples_per_subset: int = 500, seed: int = 0) -> Verdict:
    """Every sampled image of subset i lies in subset i + 1."""
    worst, witness, checked = 0.0, None, 0
    for i in range(1, sys.p + 1):
        nxt = sys.subset(sys.next_index(i))
        for x in sample(sys.subset(i), samples_per_subset, seed):
            img = sys.mapping.image(i, x)
            if img.kind == "ball" and nxt.is_boxlike:
                excess = max(0.0, float(np.max(nxt.lower - (img.center - img.radius))),
                             float(np.max(img.center + img.radius - nxt.upper)))
            else:
                excess = directed_deviation(img, nxt)[0]
            checked += 1
            if excess > worst:
                worst, witness = excess, {"subset": i, "x": x.tolist(), "excess": excess}
    status = PASS if worst <= sys.tol else FAIL
    return Verdict("containment", status, margin=0.0 - worst + 0.0, witness=witness, checked=checked,
                   detail="images of sampled points stay in the successor subset"
                   if status == PASS else "an image leaves the successor subset")


def check_contraction(sys: CyclicSystem, order: OrderRelation, samples_per_subset: int = 100,
                      seed: int = 0) -> Verdict:
    """Scan H(Tx, Ty) <= k_i d(x, y) + (1 - k_i) D_i over ordered sample pairs.

    Pairs are x from subset i, y from subset i + 1 with x <= y. The margin
    is the smallest slack found; the witness is the pair attaining it.
    """
    best = math.inf
    witness = None
    per_subset = []
    for i in range(1, sys.p + 1):
        j = sys.next_index(i)
        X = sample(sys.subset(i), samples_per_subset, seed)
        Y = sample(sys.subset(j), samples_per_subset, seed)
        mask = leq_matrix(order, X, Y)
        per_subset.append(int(mask.sum()))
        if not mask.any():
            continue
        IX = [sys.mapping.image(i, x) for x in X]
        IY = [sys.mapping.image(j, y) for y in Y]
        H = _image_hausdorff(IX, IY, mask)
        k, D = sys.constants[i - 1], sys.D[i - 1]
        slack = np.where(mask, k * kernels.pairwise(X, Y) + (1 - k) * D - H, np.inf)
        a, b = np.unravel_index(int(np.argmin(slack)), slack.shape)
        if slack[a, b] < best:
            best = float(slack[a, b])
            witness = {"subset": i, "x": X[a].tolist(), "y": Y[b].tolist(), "slack": best}
    checked = sum(per_subset)
    if checked == 0:
        return Verdict("contraction", VACUOUS, detail="no ordered sample pairs; the bound was never tested",
                       checked=0)
    status = PASS if best >= -sys.tol else FAIL
    detail = f"ordered pairs per subset: {per_subset}"
    return Verdict("contraction", status, margin=best, witness=witness, detail=detail, checked=checked)


def check_seed_pair(sys: CyclicSystem, thresholds: OrderThresholds, samples: int = 200, seed: int = 0,
                    orbit_steps: int = 200) -> Verdict:
    """Look for x in A_i and y in Tx with d(x, y) < d0i where d0i > D_i.

    Candidates are sampled points of each subset with their nearest image
    point, then a nearest-selection orbit from the first sample. Returns
    the closest candidate pair of the lowest subset that has one.
    """
    if len(thresholds.d0i) != sys.p:
        raise ValueError(f"expected {sys.p} d0i values, got {len(thresholds.d0i)}")
    usable = [i for i in range(1, sys.p + 1) if thresholds.d0i[i - 1] > sys.D[i - 1]]
    if not usable:
        return Verdict("seed_pair", FAIL, detail="every d0i <= D_i, so no pair can be closer than d0i")
    cands: dict[int, list] = {i: [] for i in usable}
    for i in usable:
        for x in sample(sys.subset(i), samples, seed):
            y = nearest_point(x, sys.mapping.image(i, x))
            cands[i].append((metric(x, y), x, y))
    x = sample(sys.subset(1), 1, seed)[0]
    idx = 1
    for _ in range(orbit_steps):
        y = nearest_point(x, sys.mapping.image(idx, x))
        if idx in cands:
            cands[idx].append((metric(x, y), x, y))
        x, idx = y, sys.next_index(idx)
    checked = sum(len(c) for c in cands.values())
    for i in usable:
        hits = [c for c in cands[i] if c[0] < thresholds.d0i[i - 1]]
        if hits:
            dist, x, y = min(hits, key=lambda c: c[0])
            return Verdict("seed_pair", PASS, margin=thresholds.d0i[i - 1] - dist, checked=checked,
                           witness={"subset": i, "x": x.tolist(), "y": y.tolist(), "distance": dist})
    return Verdict("seed_pair", FAIL, checked=checked, detail="no sampled pair closer than its d0i")


def _threshold_terms(sys: CyclicSystem, thresholds: OrderThresholds) -> float:
    return max(k * (d0j - Dj) + Dj for k, d0j, Dj in zip(sys.constants, thresholds.d0i, sys.D))


def check_threshold(sys: CyclicSystem, thresholds: OrderThresholds) -> Verdict:
    """d0 >= max(max_j d0j, max_j k_j (d0j - D_j) + D_j)."""
    if len(thresholds.d0i) != sys.p:
        raise ValueError(f"expected {sys.p} d0i values, got {len(thresholds.d0i)}")
    required = max(max(thresholds.d0i), _threshold_terms(sys, thresholds))
    ok = thresholds.d0 >= required
    return Verdict("threshold", PASS if ok else FAIL, margin=thresholds.d0 - required,
                   detail=f"d0 = {thresholds.d0!r}, required >= {required!r}")


def check_strong_threshold(sys: CyclicSystem, thresholds: OrderThresholds) -> Verdict:
    """d0 > max(max_j D_j + diam A_j, max_j k_j (d0j - D_j) + D_j), strictly."""
    if len(thresholds.d0i) != sys.p:
        raise ValueError(f"expected {sys.p} d0i values, got {len(thresholds.d0i)}")
    spread = max(Dj + diameter(A) for Dj, A in zip(sys.D, sys.subsets))
    required = max(spread, _threshold_terms(sys, thresholds))
    ok = thresholds.d0 > required
    return Verdict("strong_threshold", PASS if ok else FAIL, margin=thresholds.d0 - required,
                   detail=f"d0 = {thresholds.d0!r}, required > {required!r}")


def check_limit_comparability(sys: CyclicSystem, order: OrderRelation, traj) -> Verdict:
    """For iterates x_n <= xbar (x_n != xbar): H(T xbar, T x_n) > k_i d(xbar, x_n).

    ``xbar`` is the limit of the subsequence x_n belongs to. The trajectory
    must have converged.
    """
    if not traj.converged:
        raise ValueError("limit comparability needs a converged trajectory")
    checked = 0
    worst, witness = math.inf, None
    for x, i in zip(traj.points, traj.indices):
        i = int(i)
        xbar = traj.last(i)
        if np.all(np.abs(x - xbar) <= order.tol) or not leq(order, x, xbar):
            continue
        checked += 1
        gap = hausdorff(sys.mapping.image(i, xbar), sys.mapping.image(i, x)) \
            - sys.constants[i - 1] * metric(xbar, x)
        if gap < worst:
            worst = gap
            witness = {"subset": i, "x": x.tolist(), "limit": xbar.tolist(), "gap": gap}
    if checked == 0:
        return Verdict("limit_comparability", PASS, checked=0,
                       detail="no iterate precedes its limit; holds vacuously")
    status = PASS if worst > 0 else FAIL
    return Verdict("limit_comparability", status, margin=worst, witness=witness, checked=checked)


check_assumption3 = check_seed_pair
check_assumption4 = check_threshold
check_assumption5 = check_strong_threshold
check_assumption7 = check_limit_comparability
