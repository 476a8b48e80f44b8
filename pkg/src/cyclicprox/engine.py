"""Order-respecting iteration x_{n+1} in T x_n and its convergence diagnostics."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import ATOL, Region, as_point, metric, nearest_point, point_to_set_distance, sample
from .order import ChainCheck, OrderRelation, OrderThresholds, induced_by_iteration, leq, verify_chain
from .system import CyclicSystem, NonFiniteImageError, OutsideUnionError, apply, composite_apply, subset_index

STRATEGIES = ("nearest", "order-greedy", "seeded-random")


class IterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SelectionStrategy:
    """How one successor is picked from a multivalued image.

    ``samples`` image points are drawn for the order-greedy and
    seeded-random kinds.
    """

    kind: str = "nearest"
    seed: int = 0
    samples: int = 64

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")
        if self.samples < 1:
            raise ValueError(f"strategy samples must be >= 1, got {self.samples}")


def _select(order: OrderRelation, strategy: SelectionStrategy, x: np.ndarray, image: Region,
            seed: int) -> tuple[np.ndarray, bool]:
    """(successor, fell_back) for one step."""
    if strategy.kind == "nearest":
        return nearest_point(x, image), False
    sub_seed = int(np.random.SeedSequence([strategy.seed, seed]).generate_state(1)[0])
    cands = sample(image, strategy.samples, sub_seed)
    if strategy.kind == "seeded-random":
        pick = np.random.default_rng(sub_seed).integers(cands.shape[0])
        return cands[pick].copy(), False
    near = nearest_point(x, image)
    cands = np.vstack([near[None, :], cands])
    ok = [c for c in cands if leq(order, x, c)]
    if not ok:
        return near, True
    dists = [float(np.linalg.norm(c - x)) for c in ok]
    return ok[int(np.argmin(dists))].copy(), False


def select_successor(sys: CyclicSystem, order: OrderRelation, strategy: SelectionStrategy, x,
                     seed: int = 0, index: int | None = None) -> np.ndarray:
    """One point of Tx chosen by ``strategy``."""
    x = as_point(x)
    image, _ = apply(sys, x, index)
    return _select(order, strategy, x, image, seed)[0]


def make_selector(order: OrderRelation, strategy: SelectionStrategy, seed: int = 0):
    """Selector callable for ``composite_apply``."""
    def selector(x, image, step):
        return _select(order, strategy, x, image, int(np.random.SeedSequence([seed, step])
                                                       .generate_state(1)[0]))[0]
    return selector


@dataclass
class Trajectory:
    points: np.ndarray
    indices: np.ndarray
    steps: np.ndarray
    certified: np.ndarray
    fallback: np.ndarray
    converged: bool
    p: int
    tol: float

    @property
    def start_index(self) -> int:
        return int(self.indices[0])

    def __len__(self) -> int:
        return self.points.shape[0]

    def subsequence(self, j: int) -> np.ndarray:
        """The iterates lying in subset j, in order."""
        return self.points[self.indices == j]

    def cauchy_increments(self, j: int) -> np.ndarray:
        sub = self.subsequence(j)
        return np.linalg.norm(np.diff(sub, axis=0), axis=1)

    def last(self, j: int) -> np.ndarray:
        return self.subsequence(j)[-1]

    def subset_converged(self, j: int) -> bool:
        inc = self.cauchy_increments(j)
        return inc.size > 0 and inc[-1] <= self.tol


def run_trajectory(sys: CyclicSystem, order: OrderRelation, thresholds: OrderThresholds,
                   strategy: SelectionStrategy, x0, max_steps: int = 10_000, tol: float = ATOL,
                   seed: int = 0, start_index: int | None = None) -> Trajectory:
    """Iterate from x0 until one full cycle of Cauchy increments is <= tol.

    The increment for an iterate is its distance to the iterate p steps
    earlier (same subset). Stops early once the last p increments are all
    within ``tol``; otherwise runs ``max_steps`` steps and reports
    ``converged=False``.
    """
    p = sys.p
    if max_steps < p:
        raise ValueError(f"max_steps must be >= p = {p}, got {max_steps}")
    x = as_point(x0)
    i = subset_index(sys, x) if start_index is None else start_index
    if point_to_set_distance(x, sys.subset(i)) > sys.tol:
        raise OutsideUnionError(f"start point {x.tolist()} is not in subset {i}")
    pts, idx = [x], [i]
    steps, cert, fb = [], [], []
    converged = False
    for n in range(max_steps):
        try:
            image, j = apply(sys, x, i)
        except NonFiniteImageError as exc:
            raise IterationError(f"non-finite iterate at step {n}: {exc}") from None
        y, fell_back = _select(order, strategy, x, image,
                               int(np.random.SeedSequence([seed, n]).generate_state(1)[0]))
        if not np.all(np.isfinite(y)):
            raise IterationError(f"non-finite iterate at step {n} from {x.tolist()}")
        if point_to_set_distance(y, sys.subset(j)) > sys.tol:
            raise OutsideUnionError(f"step {n}: successor {y.tolist()} left subset {j}")
        d = float(np.linalg.norm(y - x))
        steps.append(d)
        cert.append(induced_by_iteration(thresholds, x, y, True, d))
        fb.append(fell_back)
        pts.append(y)
        idx.append(j)
        x, i = y, j
        N = len(pts) - 1
        if N >= 2 * p - 1 and all(
            np.linalg.norm(pts[m] - pts[m - p]) <= tol for m in range(N - p + 1, N + 1)
        ):
            converged = True
            break
    return Trajectory(
        points=np.array(pts),
        indices=np.array(idx, dtype=int),
        steps=np.array(steps),
        certified=np.array(cert, dtype=bool),
        fallback=np.array(fb, dtype=bool),
        converged=converged,
        p=p,
        tol=tol,
    )


@dataclass
class BandRecord:
    """Per-step check of D_i - tol <= d_n <= D + tol.

    The upper bound is enforced only from ``entry_step`` on, the first
    step that satisfies it.
    """

    lower_ok: np.ndarray
    in_band: np.ndarray
    entry_step: int | None
    violations: list
    status: str

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "entry_step": self.entry_step,
            "steps_in_band": int(self.in_band.sum()),
            "violations": self.violations,
        }


def quasi_proximity_check(traj: Trajectory, sys: CyclicSystem, tol: float = ATOL) -> BandRecord:
    D = np.asarray(sys.D)
    lo = D[traj.indices[:-1] - 1] - tol
    hi = sys.D_max + tol
    d = traj.steps
    lower_ok = d >= lo
    inside = np.nonzero(d <= hi)[0]
    entry = int(inside[0]) if inside.size else None
    violations = [[int(n), "below lower bound"] for n in np.nonzero(~lower_ok)[0]]
    if entry is not None:
        violations += [[int(n), "above upper bound after entry"]
                       for n in np.nonzero(d[entry:] > hi)[0] + entry]
        violations.sort()
    in_band = lower_ok & (d <= hi)
    if violations:
        status = "fail"
    elif sys.D_max <= tol:
        status = "asymptotic"
    elif entry is None:
        status = "not-entered"
    else:
        status = "pass"
    return BandRecord(lower_ok, in_band, entry, violations, status)


@dataclass
class ProximityReport:
    status: str
    subset_status: list[str]
    limits: list | None
    adjacent_distances: list | None = None
    residuals: list | None = None
    proximity_gaps: list | None = None
    composite_residuals: list | None = None
    band: BandRecord | None = None
    chains: list[ChainCheck] = field(default_factory=list)
    uniform_distance: bool = False
    step_distance_limit: float | None = None
    fixed_point: list | None = None
    fixed_point_residual: float | None = None
    limit_spread: float | None = None
    verdicts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "subset_status": self.subset_status,
            "limits": self.limits,
            "adjacent_distances": self.adjacent_distances,
            "residuals": self.residuals,
            "proximity_gaps": self.proximity_gaps,
            "composite_residuals": self.composite_residuals,
            "band": self.band.to_dict() if self.band else None,
            "chains": [{"ordered": c.ordered, "first_violation": c.first_violation} for c in self.chains],
            "uniform_distance": self.uniform_distance,
            "step_distance_limit": self.step_distance_limit,
            "fixed_point": self.fixed_point,
            "fixed_point_residual": self.fixed_point_residual,
            "limit_spread": self.limit_spread,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def composite_residual(sys: CyclicSystem, order: OrderRelation, strategy: SelectionStrategy,
                       xbar: np.ndarray, j: int) -> float:
    """Distance from xbar to the last image of a p-step chain restarted at xbar."""
    z = composite_apply(sys, xbar, sys.p - 1, make_selector(order, strategy), index=j)
    last = j
    for _ in range(sys.p - 1):
        last = sys.next_index(last)
    image, _ = apply(sys, z, last)
    return point_to_set_distance(xbar, image)


def convergence_report(traj: Trajectory, sys: CyclicSystem, order: OrderRelation,
                       thresholds: OrderThresholds, tol: float = ATOL,
                       strategy: SelectionStrategy | None = None) -> ProximityReport:
    """Limits, pairing residuals and fixed-point residuals of a finished run.

    ``residuals[j]`` is |d(xbar_j, xbar_{j+1}) - D_j|; ``proximity_gaps[j]``
    is d(xbar_j, T xbar_j) - D_j, the best proximity defect of xbar_j.
    An unconverged trajectory yields status "incomplete" and no limits.
    """
    strategy = strategy or SelectionStrategy()
    p = sys.p
    subset_status = ["converged" if traj.subset_converged(j) else "incomplete" for j in range(1, p + 1)]
    band = quasi_proximity_check(traj, sys, tol)
    chains = [verify_chain(order, traj.subsequence(j)) for j in range(1, p + 1)]
    uniform = max(sys.D) - min(sys.D) <= tol
    if not traj.converged:
        return ProximityReport("incomplete", subset_status, None, band=band, chains=chains,
                               uniform_distance=uniform)
    limits = [traj.last(j) for j in range(1, p + 1)]
    adjacent = [metric(limits[j], limits[(j + 1) % p]) for j in range(p)]
    residuals = [abs(adjacent[j] - sys.D[j]) for j in range(p)]
    gaps = [point_to_set_distance(limits[j], apply(sys, limits[j], j + 1)[0]) - sys.D[j]
            for j in range(p)]
    composite = [composite_residual(sys, order, strategy, limits[j], j + 1) for j in range(p)]
    report = ProximityReport(
        "converged", subset_status, [x.tolist() for x in limits],
        adjacent_distances=adjacent, residuals=residuals, proximity_gaps=gaps,
        composite_residuals=composite, band=band, chains=chains, uniform_distance=uniform,
        step_distance_limit=float(traj.steps[-1]) if uniform else None,
    )
    if sys.D_max <= tol:
        xbar = limits[traj.start_index - 1]
        report.fixed_point = xbar.tolist()
        report.fixed_point_residual = point_to_set_distance(xbar, apply(sys, xbar, traj.start_index)[0])
        report.limit_spread = max(metric(a, b) for a, b in itertools.combinations(limits, 2)) if p > 1 else 0.0
    return report


@dataclass
class ProbeResult:
    max_pairwise: list[float]
    unique: bool
    reliable: bool
    trajectories: list[Trajectory]


def _seed_pairs(sys: CyclicSystem, seeds):
    out = []
    for s in seeds:
        if isinstance(s, tuple) and len(s) == 2 and np.ndim(s[0]) == 1:
            x = as_point(s[0])
            out.append((x, subset_index(sys, x) if s[1] is None else int(s[1])))
        else:
            x = as_point(s)
            out.append((x, subset_index(sys, x)))
    return out


def run_many(sys: CyclicSystem, order: OrderRelation, thresholds: OrderThresholds,
             strategy: SelectionStrategy, seeds, max_steps: int = 10_000, tol: float = ATOL,
             seed: int = 0, parallel: bool = False, errors: tuple = ()) -> list:
    """One trajectory per seed, in seed order.

    Seeds are points or (point, start_index) pairs; a None start index
    means the lowest subset containing the point. With ``parallel`` the
    trajectories run on a thread pool; results do not depend on it.
    Exceptions of the types in ``errors`` are returned in place of the
    failed trajectory instead of propagating.
    """
    pairs = _seed_pairs(sys, seeds)

    def one(k):
        x0, i0 = pairs[k]
        try:
            return run_trajectory(sys, order, thresholds, strategy, x0, max_steps, tol, seed + k, i0)
        except errors as exc:
            return exc

    if parallel and len(pairs) > 1:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(one, range(len(pairs))))
    return [one(k) for k in range(len(pairs))]


def uniqueness_probe(sys: CyclicSystem, order: OrderRelation, thresholds: OrderThresholds,
                     strategy: SelectionStrategy, seeds, tol: float = ATOL,
                     unique_tol: float | None = None, max_steps: int = 10_000, seed: int = 0,
                     parallel: bool = False) -> ProbeResult:
    """Largest pairwise distance between per-subset limits across seeds.

    Uniqueness is claimed when every subset's spread is within
    ``unique_tol`` (10 * tol by default) and all runs converged.
    """
    unique_tol = 10 * tol if unique_tol is None else unique_tol
    trajs = run_many(sys, order, thresholds, strategy, seeds, max_steps, tol, seed, parallel)
    return probe_limits(trajs, sys.p, unique_tol)


def probe_limits(trajs: list[Trajectory], p: int, unique_tol: float) -> ProbeResult:
    """Per-subset spread of the limits of already-run trajectories."""
    reliable = all(t.converged for t in trajs)
    spread = []
    for j in range(1, p + 1):
        lims = [t.last(j) for t in trajs if t.converged]
        spread.append(max((metric(a, b) for a, b in itertools.combinations(lims, 2)), default=0.0))
    unique = reliable and all(s <= unique_tol for s in spread)
    return ProbeResult(spread, unique, reliable, trajs)
