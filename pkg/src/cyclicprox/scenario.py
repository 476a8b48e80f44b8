"""Scenario documents: parsing, canonical form, orchestration and output.

A scenario is a JSON object. Unknown fields are rejected. Required:
``name``, ``dimension``, ``subsets``, ``map``, ``constants``,
``thresholds``. Optional: ``order``, ``strategy``, ``seeds``, ``tol``,
``max_steps``, ``rng_seed``, ``check_samples``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import (
    IterationError,
    ProximityReport,
    SelectionStrategy,
    Trajectory,
    convergence_report,
    probe_limits,
    quasi_proximity_check,
    run_many,
)
from .geometry import ATOL, Region, sample
from .order import OrderRelation, OrderThresholds
from .system import (
    FAIL,
    PASS,
    AffinePiece,
    CyclicSystem,
    MultiMap,
    OutsideUnionError,
    Verdict,
    check_containment,
    check_contraction,
    check_limit_comparability,
    check_seed_pair,
    check_strong_threshold,
    check_threshold,
    subset_index,
)

REQUIRED = ("name", "dimension", "subsets", "map", "constants", "thresholds")
OPTIONAL = {
    "order": None,
    "strategy": None,
    "seeds": None,
    "tol": ATOL,
    "max_steps": 10_000,
    "rng_seed": 0,
    "check_samples": 100,
}
BP_READING = "z in subset i is a best proximity point iff d(z, Tz) = D_i"


class ScenarioError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}", message)
        self.line, self.column = line, column


@dataclass
class Scenario:
    name: str
    system: CyclicSystem
    order: OrderRelation
    thresholds: OrderThresholds
    strategy: SelectionStrategy = field(default_factory=SelectionStrategy)
    seeds: list = field(default_factory=list)
    seeds_per_subset: int | None = None
    tol: float = ATOL
    max_steps: int = 10_000
    rng_seed: int = 0
    check_samples: int = 100

    @property
    def dimension(self) -> int:
        return self.system.dim

    def start_points(self) -> list[tuple[np.ndarray, int | None]]:
        """Explicit seeds, or ``seeds_per_subset`` sampled points of each subset."""
        if self.seeds_per_subset is None:
            return [(np.asarray(s, dtype=float), None) for s in self.seeds]
        out = []
        for i, A in enumerate(self.system.subsets, start=1):
            out += [(x, i) for x in sample(A, self.seeds_per_subset, self.rng_seed)]
        return out


# -- parsing -------------------------------------------------------------

def _obj(v, path: str, allowed: set, required: tuple = ()) -> dict:
    if not isinstance(v, dict):
        raise ScenarioError(path, f"expected an object, got {type(v).__name__}")
    extra = sorted(set(v) - allowed)
    if extra:
        raise ScenarioError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")
    for r in required:
        if r not in v:
            raise ScenarioError(f"{path}.{r}" if path else r, "missing required field")
    return v


def _num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _int(v, path: str, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ScenarioError(path, f"must be >= {lo}, got {v}")
    return v


def _vec(v, path: str, dim: int) -> list[float]:
    if not isinstance(v, list):
        raise ScenarioError(path, f"expected a list of {dim} numbers")
    if len(v) != dim:
        raise ScenarioError(path, f"dimension mismatch: expected {dim} coordinates, got {len(v)}")
    return [_num(c, f"{path}[{k}]") for k, c in enumerate(v)]


def _region(v, path: str, dim: int) -> Region:
    kind = v.get("kind") if isinstance(v, dict) else None
    try:
        if kind == "interval":
            _obj(v, path, {"kind", "lower", "upper"}, ("lower", "upper"))
            if dim != 1:
                raise ScenarioError(path, f"interval subsets need dimension 1, scenario has {dim}")
            return Region.interval(_num(v["lower"], f"{path}.lower"), _num(v["upper"], f"{path}.upper"))
        if kind == "box":
            _obj(v, path, {"kind", "lower", "upper"}, ("lower", "upper"))
            return Region.box(_vec(v["lower"], f"{path}.lower", dim), _vec(v["upper"], f"{path}.upper", dim))
        if kind == "ball":
            _obj(v, path, {"kind", "center", "radius"}, ("center", "radius"))
            return Region.ball(_vec(v["center"], f"{path}.center", dim), _num(v["radius"], f"{path}.radius"))
        if kind == "cloud":
            _obj(v, path, {"kind", "points"}, ("points",))
            pts = v["points"]
            if not isinstance(pts, list) or not pts:
                raise ScenarioError(f"{path}.points", "expected a nonempty list of points")
            return Region.cloud([_vec(p, f"{path}.points[{k}]", dim) for k, p in enumerate(pts)])
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None
    raise ScenarioError(f"{path}.kind", f"unknown region kind {kind!r}")


def _matrix(v, path: str, dim: int):
    if isinstance(v, list):
        if len(v) != dim:
            raise ScenarioError(path, f"expected {dim} rows, got {len(v)}")
        return [_vec(row, f"{path}[{r}]", dim) for r, row in enumerate(v)]
    return _num(v, path)


def _map(v, path: str, dim: int, p: int) -> MultiMap:
    kind = v.get("kind") if isinstance(v, dict) else None
    if kind in ("affine-target", "ball-valued"):
        _obj(v, path, {"kind", "pieces"}, ("pieces",))
        pieces = v["pieces"]
        if not isinstance(pieces, list) or len(pieces) != p:
            raise ScenarioError(f"{path}.pieces", f"expected {p} pieces, one per subset")
        keys = {"offset", "matrix", "anchor"} | ({"radius"} if kind == "ball-valued" else set())
        built = []
        for k, pc in enumerate(pieces):
            pp = f"{path}.pieces[{k}]"
            _obj(pc, pp, keys, ("offset", "matrix", "anchor"))
            radius = _num(pc.get("radius", 0.0), f"{pp}.radius")
            if radius < 0:
                raise ScenarioError(f"{pp}.radius", f"must be >= 0, got {radius}")
            built.append(AffinePiece.make(_vec(pc["offset"], f"{pp}.offset", dim),
                                          _matrix(pc["matrix"], f"{pp}.matrix", dim),
                                          _vec(pc["anchor"], f"{pp}.anchor", dim), radius))
        return MultiMap(kind, pieces=tuple(built))
    if kind == "table":
        _obj(v, path, {"kind", "entries"}, ("entries",))
        entries = v["entries"]
        if not isinstance(entries, list) or not entries:
            raise ScenarioError(f"{path}.entries", "expected a nonempty list")
        rows = []
        for k, e in enumerate(entries):
            ep = f"{path}.entries[{k}]"
            _obj(e, ep, {"subset", "point", "image"}, ("subset", "point", "image"))
            s = _int(e["subset"], f"{ep}.subset", 1)
            if s > p:
                raise ScenarioError(f"{ep}.subset", f"subset index {s} exceeds p = {p}")
            img = e["image"]
            if not isinstance(img, list) or not img:
                raise ScenarioError(f"{ep}.image", "expected a nonempty list of points")
            rows.append((s, _vec(e["point"], f"{ep}.point", dim),
                         [_vec(q, f"{ep}.image[{m}]", dim) for m, q in enumerate(img)]))
        return MultiMap.table(rows)
    raise ScenarioError(f"{path}.kind", f"unknown map kind {kind!r}")


def _order(v, dim: int) -> OrderRelation:
    if v is None:
        return OrderRelation()
    _obj(v, "order", {"kind", "axis", "pairs", "strict"}, ("kind",))
    kind = v["kind"]
    strict = v.get("strict", False)
    if not isinstance(strict, bool):
        raise ScenarioError("order.strict", f"expected a boolean, got {strict!r}")
    if kind == "componentwise":
        return OrderRelation("componentwise", strict=strict)
    if kind == "coordinate":
        axis = _int(v.get("axis", 0), "order.axis", 0)
        if axis >= dim:
            raise ScenarioError("order.axis", f"axis {axis} out of range for dimension {dim}")
        return OrderRelation("coordinate", axis=axis, strict=strict)
    if kind == "table":
        pairs = v.get("pairs", [])
        if not isinstance(pairs, list):
            raise ScenarioError("order.pairs", "expected a list of [x, y] pairs")
        built = []
        for k, pr in enumerate(pairs):
            if not isinstance(pr, list) or len(pr) != 2:
                raise ScenarioError(f"order.pairs[{k}]", "expected [x, y]")
            built.append((tuple(_vec(pr[0], f"order.pairs[{k}][0]", dim)),
                          tuple(_vec(pr[1], f"order.pairs[{k}][1]", dim))))
        try:
            return OrderRelation("table", pairs=tuple(built), strict=strict)
        except ValueError as exc:
            raise ScenarioError("order.pairs", str(exc)) from None
    raise ScenarioError("order.kind", f"unknown order kind {kind!r}")


def _strategy(v) -> SelectionStrategy:
    if v is None:
        return SelectionStrategy()
    _obj(v, "strategy", {"kind", "seed", "samples"}, ("kind",))
    try:
        return SelectionStrategy(v["kind"], _int(v.get("seed", 0), "strategy.seed"),
                                 _int(v.get("samples", 64), "strategy.samples", 1))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError("strategy.kind", str(exc)) from None


def scenario_from_dict(doc) -> Scenario:
    _obj(doc, "", set(REQUIRED) | set(OPTIONAL), REQUIRED)
    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", "expected a nonempty string")
    dim = _int(doc["dimension"], "dimension", 1)
    subsets = doc["subsets"]
    if not isinstance(subsets, list) or not subsets:
        raise ScenarioError("subsets", "expected a nonempty list of regions")
    regions = [_region(r, f"subsets[{k}]", dim) for k, r in enumerate(subsets)]
    p = len(regions)
    consts = doc["constants"]
    if not isinstance(consts, list) or len(consts) != p:
        raise ScenarioError("constants", f"expected {p} constants, one per subset")
    ks = [_num(c, f"constants[{k}]") for k, c in enumerate(consts)]
    if any(c < 0 for c in ks):
        raise ScenarioError("constants", "constants must be >= 0")
    if math.prod(ks) >= 1:
        raise ScenarioError("constants", f"product of constants >= 1 ({math.prod(ks)!r})")
    mapping = _map(doc["map"], "map", dim, p)
    th = _obj(doc["thresholds"], "thresholds", {"d0", "d0i"}, ("d0", "d0i"))
    d0 = _num(th["d0"], "thresholds.d0")
    if not isinstance(th["d0i"], list) or len(th["d0i"]) != p:
        raise ScenarioError("thresholds.d0i", f"expected {p} values, one per subset")
    d0i = [_num(c, f"thresholds.d0i[{k}]") for k, c in enumerate(th["d0i"])]
    try:
        thresholds = OrderThresholds(d0, tuple(d0i))
    except ValueError as exc:
        raise ScenarioError("thresholds", str(exc)) from None
    opt = {k: doc.get(k, v) for k, v in OPTIONAL.items()}
    tol = _num(opt["tol"], "tol")
    if tol <= 0:
        raise ScenarioError("tol", f"must be > 0, got {tol}")
    max_steps = _int(opt["max_steps"], "max_steps", p)
    try:
        system = CyclicSystem(tuple(regions), mapping, tuple(ks), tol=tol)
    except ValueError as exc:
        raise ScenarioError("map", str(exc)) from None
    seeds_doc = opt["seeds"]
    seeds, per_subset = [], None
    if isinstance(seeds_doc, dict):
        _obj(seeds_doc, "seeds", {"per_subset"}, ("per_subset",))
        per_subset = _int(seeds_doc["per_subset"], "seeds.per_subset", 1)
    elif seeds_doc is not None:
        if not isinstance(seeds_doc, list):
            raise ScenarioError("seeds", "expected a list of points or {\"per_subset\": n}")
        seeds = [_vec(s, f"seeds[{k}]", dim) for k, s in enumerate(seeds_doc)]
        for k, x in enumerate(seeds):
            try:
                subset_index(system, x)
            except OutsideUnionError:
                raise ScenarioError(f"seeds[{k}]", f"{x} is outside cyclic union") from None
    return Scenario(
        name=name,
        system=system,
        order=_order(opt["order"], dim),
        thresholds=thresholds,
        strategy=_strategy(opt["strategy"]),
        seeds=seeds,
        seeds_per_subset=per_subset,
        tol=tol,
        max_steps=max_steps,
        rng_seed=_int(opt["rng_seed"], "rng_seed"),
        check_samples=_int(opt["check_samples"], "check_samples", 1),
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.lineno, exc.colno, exc.msg) from None
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


# -- canonical serialisation ---------------------------------------------

def fmt(x: float) -> str:
    """17 significant digits, so every double round-trips exactly."""
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and short lists kept inline."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return fmt(v) if math.isfinite(v) else json.dumps(str(v))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.number)) or v is None for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                          for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _region_dict(A: Region) -> dict:
    if A.kind == "interval":
        return {"kind": "interval", "lower": A.lower[0], "upper": A.upper[0]}
    if A.kind == "box":
        return {"kind": "box", "lower": A.lower, "upper": A.upper}
    if A.kind == "ball":
        return {"kind": "ball", "center": A.center, "radius": A.radius}
    return {"kind": "cloud", "points": A.points}


def scenario_to_dict(s: Scenario) -> dict:
    m = s.system.mapping
    if m.kind == "table":
        mdoc = {"kind": "table", "entries": [{"subset": e.subset, "point": e.point, "image": e.image}
                                             for e in m.entries]}
    else:
        pieces = []
        for pc in m.pieces:
            d = {"offset": pc.offset, "matrix": pc.matrix, "anchor": pc.anchor}
            if m.kind == "ball-valued":
                d["radius"] = pc.radius
            pieces.append(d)
        mdoc = {"kind": m.kind, "pieces": pieces}
    o = s.order
    odoc: dict = {"kind": o.kind, "strict": o.strict}
    if o.kind == "coordinate":
        odoc["axis"] = o.axis
    if o.kind == "table":
        odoc["pairs"] = [[list(a), list(b)] for a, b in o.pairs]
    return {
        "name": s.name,
        "dimension": s.dimension,
        "subsets": [_region_dict(A) for A in s.system.subsets],
        "map": mdoc,
        "constants": list(s.system.constants),
        "order": odoc,
        "thresholds": {"d0": s.thresholds.d0, "d0i": list(s.thresholds.d0i)},
        "strategy": {"kind": s.strategy.kind, "seed": s.strategy.seed, "samples": s.strategy.samples},
        "seeds": {"per_subset": s.seeds_per_subset} if s.seeds_per_subset is not None
        else [list(map(float, x)) for x in s.seeds],
        "tol": s.tol,
        "max_steps": s.max_steps,
        "rng_seed": s.rng_seed,
        "check_samples": s.check_samples,
    }


def to_canonical(s: Scenario) -> str:
    return dumps(scenario_to_dict(s)) + "\n"


def with_overrides(s: Scenario, tol=None, max_steps=None, seed=None) -> Scenario:
    """Copy of s with CLI overrides applied (the system tolerance follows tol)."""
    out = s
    if tol is not None:
        if tol <= 0:
            raise ScenarioError("tol", f"must be > 0, got {tol}")
        out = replace(out, tol=tol, system=replace(out.system, tol=tol))
    if max_steps is not None:
        if max_steps < out.system.p:
            raise ScenarioError("max_steps", f"must be >= p = {out.system.p}, got {max_steps}")
        out = replace(out, max_steps=max_steps)
    if seed is not None:
        out = replace(out, rng_seed=seed)
    return out


# -- orchestration -------------------------------------------------------

@dataclass
class RunArtifacts:
    scenario: Scenario
    verdicts: list[Verdict]
    hypotheses: dict
    starts: list
    trajectories: list
    reports: list
    uniqueness: dict | None
    report_text: str = ""
    traces: dict = field(default_factory=dict)

    @property
    def report_data(self) -> dict:
        return json.loads(self.report_text.split(MACHINE_MARKER, 1)[1])


MACHINE_MARKER = "--- machine-readable ---\n"
TRACE_ERRORS = (OutsideUnionError, IterationError, KeyError)


def static_checks(s: Scenario) -> list[Verdict]:
    """Checks that need no trajectory, in report order."""
    sys = s.system
    return [
        check_containment(sys, samples_per_subset=max(s.check_samples, 1), seed=s.rng_seed),
        check_contraction(sys, s.order, samples_per_subset=s.check_samples, seed=s.rng_seed),
        check_seed_pair(sys, s.thresholds, seed=s.rng_seed),
        check_threshold(sys, s.thresholds),
        check_strong_threshold(sys, s.thresholds),
    ]


def hypotheses_summary(verdicts: list[Verdict], intersecting: bool = False) -> dict:
    """Which hypothesis groups hold.

    The threshold route needs the seed pair and the threshold bound; the
    strong threshold alone is the alternative route. Limit comparability
    is a hypothesis of the fixed-point case only (``intersecting``); for
    disjoint subsets it is reported as a note. Equality-case affine maps
    meet its strict inequality with zero gap, so counting it there would
    reject the canonical scenario.
    """
    by = {v.name: v for v in verdicts}
    routed = (by["seed_pair"].passed and by["threshold"].passed) or by["strong_threshold"].passed
    unmet = [n for n in ("containment", "contraction") if by[n].status == FAIL]
    if by["contraction"].status != PASS and "contraction" not in unmet:
        unmet.append("contraction (vacuous)")
    if not routed:
        unmet.append("ordering thresholds (neither seed_pair+threshold nor strong_threshold)")
    notes = []
    if "limit_comparability" in by and by["limit_comparability"].status == FAIL:
        (unmet if intersecting else notes).append("limit_comparability")
    route = "seed_pair+threshold" if by["seed_pair"].passed and by["threshold"].passed \
        else "strong_threshold" if by["strong_threshold"].passed else None
    return {"all_met": not unmet, "unmet": unmet, "ordering_route": route, "notes": notes}


def check_exit_code(verdicts: list[Verdict]) -> int:
    summary = hypotheses_summary(verdicts)
    return 0 if summary["all_met"] else 1


def run_scenario(s: Scenario, parallel: bool = False) -> RunArtifacts:
    """Run every check and trajectory of a scenario; deterministic in its inputs."""
    sys = s.system
    verdicts = static_checks(s)
    starts = s.start_points()
    trajs = run_many(sys, s.order, s.thresholds, s.strategy, starts, s.max_steps, s.tol,
                     s.rng_seed, parallel, errors=TRACE_ERRORS)
    reports: list[ProximityReport | None] = []
    comparability = []
    for t in trajs:
        if isinstance(t, Exception):
            reports.append(None)
            continue
        rep = convergence_report(t, sys, s.order, s.thresholds, s.tol, s.strategy)
        reports.append(rep)
        if t.converged:
            comparability.append(check_limit_comparability(sys, s.order, t))
    if comparability:
        failed = [v for v in comparability if v.status == FAIL]
        worst = failed[0] if failed else comparability[0]
        verdicts.append(Verdict("limit_comparability", FAIL if failed else PASS,
                                margin=worst.margin, witness=worst.witness,
                                detail=worst.detail, checked=sum(v.checked for v in comparability)))
    good = [t for t in trajs if not isinstance(t, Exception)]
    uniqueness = None
    if good:
        probe = probe_limits(good, sys.p, 10 * s.tol)
        uniqueness = {"max_pairwise": probe.max_pairwise, "unique": probe.unique,
                      "reliable": probe.reliable and len(good) == len(trajs)}
    for rep in reports:
        if rep is not None:
            rep.verdicts = verdicts
    art = RunArtifacts(s, verdicts, hypotheses_summary(verdicts, sys.D_max <= s.tol), starts, trajs, reports, uniqueness)
    art.report_text = render_report(art)
    art.traces = {f"trace_{k:02d}.csv": render_trace(t, sys)
                  for k, t in enumerate(trajs) if not isinstance(t, Exception)}
    return art


# -- rendering -----------------------------------------------------------

def _pt(x) -> str:
    return "(" + ", ".join(fmt(c) for c in x) + ")"


def _witness_value(w) -> str:
    if isinstance(w, list):
        return _pt(w)
    if isinstance(w, float):
        return fmt(w)
    return str(w)


def _fmt_opt(v) -> str:
    return "-" if v is None else fmt(v)


def render_trace(traj: Trajectory, sys: CyclicSystem) -> str:
    band = quasi_proximity_check(traj, sys, traj.tol)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = traj.points.shape[1]
    w.writerow(["step", "subset"] + [f"x{k + 1}" for k in range(d)] + ["d_n", "order_certified", "in_band"])
    for n in range(len(traj) - 1):
        w.writerow([n, int(traj.indices[n])] + [fmt(c) for c in traj.points[n]]
                   + [fmt(traj.steps[n]), int(traj.certified[n]), int(band.in_band[n])])
    return buf.getvalue()


def render_report(art: RunArtifacts) -> str:
    s = art.scenario
    sys = s.system
    lines = [
        f"scenario: {s.name}",
        f"subsets: p = {sys.p}, dimension = {sys.dim}",
        "set distances D_i: " + ", ".join(fmt(v) for v in sys.D) + f" (D = {fmt(sys.D_max)})",
        "constants k_i: " + ", ".join(fmt(v) for v in sys.constants) + f" (product {fmt(sys.k)})",
        f"best proximity reading: {BP_READING}",
        "",
        "[checks]",
    ]
    for v in art.verdicts:
        note = " (alternative route)" if v.name == "strong_threshold" else ""
        lines.append(f"  {v.name:<20} {v.status:<8} margin {_fmt_opt(v.margin)}{note}")
        if v.detail:
            lines.append(f"      {v.detail}")
        if v.witness:
            lines.append("      witness: " + ", ".join(
                f"{k}={_witness_value(w)}" for k, w in v.witness.items()))
    h = art.hypotheses
    lines += ["", "[hypotheses]",
              f"  ordering route: {h['ordering_route'] or 'none'}",
              "  all met" if h["all_met"] else "  unmet: " + "; ".join(h["unmet"])]
    if h.get("notes"):
        lines.append("  note (not a hypothesis for disjoint subsets): " + "; ".join(h["notes"]))
    trajectories = []
    for k, ((x0, _), t, rep) in enumerate(zip(art.starts, art.trajectories, art.reports)):
        lines += ["", f"[trajectory {k}] start {_pt(x0)}"]
        if isinstance(t, Exception):
            lines.append(f"  aborted: {t}")
            trajectories.append({"start": x0, "aborted": str(t)})
            continue
        lines.append(f"  start subset {t.start_index}, {len(t) - 1} steps, status {rep.status}")
        lines.append(f"  band: {rep.band.status}, entry step {rep.band.entry_step}")
        for j in range(sys.p):
            chain = rep.chains[j]
            chain_s = "ordered" if chain.ordered else f"not ordered at {chain.first_violation}"
            lines.append(f"  subset {j + 1}: {rep.subset_status[j]}, chain {chain_s}")
            if rep.limits is not None:
                lines.append(f"      limit {_pt(rep.limits[j])}, pairing residual {fmt(rep.residuals[j])}, "
                             f"proximity gap {fmt(rep.proximity_gaps[j])}, "
                             f"composite residual {fmt(rep.composite_residuals[j])}")
        if rep.step_distance_limit is not None:
            lines.append(f"  final step distance {fmt(rep.step_distance_limit)} (uniform D = {fmt(sys.D[0])})")
        if rep.fixed_point is not None:
            lines.append(f"  fixed point {_pt(rep.fixed_point)}, residual {fmt(rep.fixed_point_residual)}, "
                         f"limit spread {fmt(rep.limit_spread)}")
        d = rep.to_dict()
        d.pop("verdicts")
        d.update({"start": x0, "start_subset": t.start_index, "steps": len(t) - 1,
                  "fallback_steps": int(t.fallback.sum()), "certified_steps": int(t.certified.sum())})
        trajectories.append(d)
    if art.uniqueness is not None:
        u = art.uniqueness
        lines += ["", "[uniqueness]",
                  "  max pairwise limit distance per subset: " + ", ".join(fmt(v) for v in u["max_pairwise"]),
                  f"  unique: {u['unique']}, reliable: {u['reliable']}"]
    machine = {
        "scenario": s.name,
        "p": sys.p,
        "dimension": sys.dim,
        "D": list(sys.D),
        "constants": list(sys.constants),
        "best_proximity_reading": BP_READING,
        "verdicts": [v.to_dict() for v in art.verdicts],
        "hypotheses": art.hypotheses,
        "trajectories": trajectories,
        "uniqueness": art.uniqueness,
    }
    return "\n".join(lines) + "\n\n" + MACHINE_MARKER + dumps(machine) + "\n"


def emit(art: RunArtifacts, out_dir) -> list[Path]:
    """Write report.txt and one trace CSV per trajectory into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.txt"]
    written[0].write_text(art.report_text)
    for name, text in art.traces.items():
        path = out / name
        path.write_text(text)
        written.append(path)
    return written
