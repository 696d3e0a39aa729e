"""Planar probabilistic piecewise constant derivative systems.

A model is a set of locations, each with a cone invariant, a constant flow,
one guard facet and a probability distribution over successor locations
taken when the flow reaches the guard. Locations may also carry a ``stall``
probability: the mode fails to move for one step, which shows up as a
weight-1 self-loop in the quotient chain and keeps it aperiodic.
"""

from __future__ import annotations

import math
import random
import bisect
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from . import wdtmc as W
from .exactnum import INF, ONE, Scale, Vec2Q, format_rat, inf_norm, rat, scale_product
from .geom2d import (
    Diverge,
    FlowVec,
    GeometryError,
    Ray,
    ReflexSector,
    Sector,
    Stuck,
    continuous_step,
    flow_exit,
)

FACET_TAGS = ("lo", "hi")


class PpcdError(Exception):
    pass


class BadDistribution(PpcdError):
    pass


class GuardNotAFacet(PpcdError):
    pass


class TargetMissingFacet(PpcdError):
    pass


class UnknownLocation(PpcdError):
    pass


class StuckTrajectory(PpcdError):
    pass


class HitNonGuardFacet(PpcdError):
    pass


class EmptySwitchAtGuard(PpcdError):
    pass


class StartNotOnFacet(PpcdError):
    pass


class ModelValidationError(PpcdError):
    def __init__(self, errors: list[PpcdError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


@dataclass(frozen=True, eq=True)
class Location:
    id: str
    invariant: Sector
    flow: FlowVec
    guard: str
    switch: dict = field(hash=False)
    stall: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "switch", {str(k): rat(v) for k, v in self.switch.items()})
        object.__setattr__(self, "stall", rat(self.stall))

    @property
    def guard_ray(self) -> Ray:
        return self.invariant.facet(self.guard)


@dataclass(frozen=True)
class Ppcd:
    locations: tuple
    initial: tuple  # (location id, facet tag)

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "initial", tuple(self.initial))

    @cached_property
    def _by_id(self) -> dict:
        return {loc.id: loc for loc in self.locations}

    def location(self, lid: str) -> Location:
        try:
            return self._by_id[lid]
        except KeyError:
            raise UnknownLocation(f"unknown location {lid!r}") from None

    @property
    def order(self) -> dict:
        return {loc.id: i for i, loc in enumerate(self.locations)}


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_ppcd(model: Ppcd) -> ValidationReport:
    rep = ValidationReport()
    ids = [loc.id for loc in model.locations]
    if len(set(ids)) != len(ids):
        rep.errors.append(PpcdError("location ids are not unique"))
    by_id = {loc.id: loc for loc in model.locations}
    lid, tag = model.initial if len(model.initial) == 2 else (None, None)
    if lid not in by_id:
        rep.errors.append(UnknownLocation(f"initial location {lid!r} does not exist"))
    elif tag not in FACET_TAGS:
        rep.errors.append(GuardNotAFacet(f"initial facet tag {tag!r} is not 'lo' or 'hi'"))
    guards_in = set()
    for loc in model.locations:
        if loc.guard not in FACET_TAGS:
            rep.errors.append(GuardNotAFacet(f"{loc.id}: guard {loc.guard!r} is not 'lo' or 'hi'"))
            continue
        if not 0 <= loc.stall < 1:
            rep.errors.append(BadDistribution(f"{loc.id}: stall probability {loc.stall} not in [0, 1)"))
        if loc.switch:
            if any(p <= 0 for p in loc.switch.values()):
                rep.errors.append(BadDistribution(f"{loc.id}: switch probabilities must be positive"))
            total = sum(loc.switch.values())
            if total != 1:
                rep.errors.append(BadDistribution(f"{loc.id}: switch probabilities sum to {format_rat(total)}"))
        g = loc.guard_ray
        for tgt in loc.switch:
            t = by_id.get(tgt)
            if t is None:
                rep.errors.append(UnknownLocation(f"{loc.id}: switch target {tgt!r} does not exist"))
            elif t.invariant.tag_of(g) is None:
                rep.errors.append(
                    TargetMissingFacet(f"{loc.id}: guard {g} is not a facet of target {tgt!r}")
                )
            else:
                guards_in.add((tgt, t.invariant.tag_of(g)))
    for loc in model.locations:
        if loc.guard not in FACET_TAGS:
            continue
        entry = "hi" if loc.guard == "lo" else "lo"
        if (loc.id, entry) not in guards_in and (loc.id, entry) != tuple(model.initial):
            rep.warnings.append(f"{loc.id}: non-guard facet {entry} is not any predecessor's guard")
    return rep


def ensure_valid(model: Ppcd) -> Ppcd:
    rep = validate_ppcd(model)
    if not rep.ok:
        raise ModelValidationError(rep.errors)
    return model


# -- quotient ------------------------------------------------------------------


def state_name(lid: str, tag: str) -> str:
    return f"{lid}@{tag}"


def parse_state_name(name: str) -> tuple[str, str]:
    lid, tag = name.rsplit("@", 1)
    return lid, tag


def _step(model: Ppcd, lid: str, tag: str, probe) -> list[tuple[tuple, Fraction, Scale]]:
    loc = model.location(lid)
    out = continuous_step(loc.invariant, loc.invariant.facet(tag), loc.flow, probe)
    me = (lid, tag)
    if isinstance(out, Diverge):
        return [(me, Fraction(1), INF)]
    if isinstance(out, Stuck):
        raise StuckTrajectory(f"location {lid!r} entered at {tag}: {out.reason}")
    exit_tag = loc.invariant.tag_of(out.exit)
    if exit_tag != loc.guard:
        raise HitNonGuardFacet(f"location {lid!r} entered at {tag} reaches non-guard facet {exit_tag}")
    if not loc.switch:
        raise EmptySwitchAtGuard(f"location {lid!r} has no switch distribution at its guard")
    edges = []
    if loc.stall:
        edges.append((me, loc.stall, ONE))
    move = 1 - loc.stall
    g = loc.guard_ray
    for tgt, p in loc.switch.items():
        t = model.location(tgt)
        edges.append(((tgt, t.invariant.tag_of(g)), move * p, Scale(out.scale)))
    return edges


def build_quotient(model: Ppcd, probe: Fraction | int = 1) -> W.Wdtmc:
    """Finite chain over the (location, entry facet) pairs reachable from the initial one.

    State names are ``"<location>@<facet tag>"``. Each edge combines one
    continuous step, started from ``probe`` times the entry facet's
    direction, with one discrete switch.
    """
    ensure_valid(model)
    start = tuple(model.initial)
    seen = {start: None}
    rows = {}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        rows[key] = _step(model, *key, probe)
        for dst, _, _ in rows[key]:
            if dst not in seen:
                seen[dst] = None
                queue.append(dst)
    order = model.order
    keys = sorted(rows, key=lambda k: (order[k[0]], FACET_TAGS.index(k[1])))
    index = {k: i for i, k in enumerate(keys)}
    edges = tuple(
        W.Edge(index[k], index[dst], p, w) for k in keys for dst, p, w in rows[k]
    )
    chain = W.Wdtmc(tuple(state_name(*k) for k in keys), edges, index[start])
    W.ensure_valid(chain)
    return chain


# -- concrete semantics ----------------------------------------------------------


@dataclass
class ConcretePath:
    steps: list  # (location id, point)
    facets: list  # entry facet tag of each step
    step_scales: list
    halted: str | None = None

    def scale_product(self) -> Scale:
        return scale_product(self.step_scales)


def _facet_of(loc: Location, p: Vec2Q) -> str | None:
    for tag in FACET_TAGS:
        if loc.invariant.facet(tag).contains(p):
            return tag
    return None


def _choice_table(loc: Location):
    options = ([(None, loc.stall)] if loc.stall else []) + [
        (t, (1 - loc.stall) * p) for t, p in loc.switch.items()
    ]
    lcm = 1
    for _, p in options:
        lcm = lcm * p.denominator // math.gcd(lcm, p.denominator)
    cum, acc = [], 0
    for _, p in options:
        acc += (p * lcm).numerator
        cum.append(acc)
    return lcm, cum, [t for t, _ in options]


def simulate_concrete(model: Ppcd, start_point: Vec2Q, steps: int, seed: int) -> ConcretePath:
    """Run the point-level semantics for up to ``steps`` transitions.

    Each transition first draws the discrete outcome (stall or switch
    target) and, unless stalled, flows the actual current point to the
    guard with :func:`~ppcdstab.geom2d.flow_exit`. Scales are exact sup-norm
    ratios of consecutive points.
    """
    ensure_valid(model)
    lid, tag = model.initial
    loc = model.location(lid)
    if start_point.is_zero() or not loc.invariant.facet(tag).contains(start_point):
        raise StartNotOnFacet(f"{start_point} is not a nonzero point of {lid}'s {tag} facet")
    rng = random.Random(seed)
    tables = {}
    path = ConcretePath([(lid, start_point)], [tag], [])
    point = start_point
    for _ in range(steps):
        if loc.id not in tables:
            tables[loc.id] = _choice_table(loc)
        lcm, cum, targets = tables[loc.id]
        if not targets:
            path.halted = "empty_switch"
            break
        choice = targets[bisect.bisect_right(cum, rng.randrange(lcm))]
        if choice is None:
            path.steps.append((loc.id, point))
            path.facets.append(path.facets[-1])
            path.step_scales.append(ONE)
            continue
        out = flow_exit(loc.invariant, point, loc.flow)
        if isinstance(out, Diverge):
            path.halted = "diverged"
            break
        if isinstance(out, Stuck):
            path.halted = "stuck"
            break
        _, landing, ray = out
        if ray != loc.guard_ray:
            path.halted = "non_guard"
            break
        nxt = model.location(choice)
        new_tag = _facet_of(nxt, landing)
        path.step_scales.append(Scale(inf_norm(landing) / inf_norm(point)))
        path.steps.append((nxt.id, landing))
        path.facets.append(new_tag)
        loc, point = nxt, landing
    return path


@dataclass
class TrialResult:
    seed: int
    steps: int
    concrete_product: Scale
    quotient_product: Scale
    stepwise_match: bool
    halted: str | None

    @property
    def passed(self) -> bool:
        return self.stepwise_match and self.concrete_product == self.quotient_product


@dataclass
class ConservationReport:
    trials: list

    @property
    def passed(self) -> int:
        return sum(t.passed for t in self.trials)

    @property
    def all_passed(self) -> bool:
        return self.passed == len(self.trials)


def replay_on_quotient(chain: W.Wdtmc, path: ConcretePath) -> tuple:
    """Quotient state indices visited by a concrete path."""
    return tuple(chain.index(state_name(lid, tag)) for (lid, _), tag in zip(path.steps, path.facets))


def weight_conservation_check(
    model: Ppcd, steps: int, trials: int, seed: int, start_point: Vec2Q | None = None, chain: W.Wdtmc | None = None
) -> ConservationReport:
    """Simulate concrete runs and compare their exact weights with the quotient's.

    Trial ``i`` uses seed ``seed + i``; the default start point is the
    initial facet's direction.
    """
    chain = build_quotient(model) if chain is None else chain
    lid, tag = model.initial
    if start_point is None:
        start_point = model.location(lid).invariant.facet(tag).dir
    results = []
    for i in range(trials):
        cp = simulate_concrete(model, start_point, steps, seed + i)
        qpath = replay_on_quotient(chain, cp)
        stepwise = all(
            chain.edge_map[(u, v)].weight == s for u, v, s in zip(qpath, qpath[1:], cp.step_scales)
        )
        results.append(
            TrialResult(seed + i, len(cp.step_scales), cp.scale_product(), W.path_weight(chain, qpath), stepwise, cp.halted)
        )
    return ConservationReport(results)


# -- analysis ----------------------------------------------------------------------


@dataclass
class Analysis:
    quotient: W.Wdtmc
    absolute: W.Verdict
    almost_sure: W.Verdict
    timings: dict

    def to_json(self) -> dict:
        q = self.quotient
        ew = self.almost_sure.witness
        return {
            "absolute": W.verdict_to_json(q, self.absolute),
            "almost_sure": W.verdict_to_json(q, self.almost_sure),
            "effective_weight_log": ew.float_log if isinstance(ew, W.EffectiveWeight) else None,
            "quotient_size": {"states": q.n, "edges": len(q.edges)},
            "timings": self.timings,
        }


def analyze_chain(chain: W.Wdtmc, build_seconds: float = 0.0) -> Analysis:
    t0 = time.process_time()
    absolute = W.check_absolute(chain)
    t1 = time.process_time()
    almost = W.check_almost_sure(chain)
    t2 = time.process_time()
    timings = {"build": build_seconds, "absolute": t1 - t0, "almost_sure": t2 - t1}
    return Analysis(chain, absolute, almost, timings)


def analyze(model: Ppcd) -> Analysis:
    """Build the quotient once and decide absolute and almost-sure stability on it."""
    t0 = time.process_time()
    chain = build_quotient(model)
    return analyze_chain(chain, time.process_time() - t0)


# -- JSON ----------------------------------------------------------------------------


def parse_flow(obj) -> FlowVec:
    if isinstance(obj, dict):
        a, b = rat(obj["a"]), rat(obj["b"])
        orient = obj.get("orient", "ccw")
        if orient == "ccw":
            v = Vec2Q(-b, a)
        elif orient == "cw":
            v = Vec2Q(b, -a)
        else:
            raise PpcdError(f"orientation must be 'ccw' or 'cw', got {orient!r}")
    else:
        x, y = obj
        v = Vec2Q(rat(x), rat(y))
    if v.is_zero():
        raise PpcdError("flow vector must be nonzero")
    return v


def model_from_json(obj: dict) -> Ppcd:
    try:
        locs = []
        for d in obj["locations"]:
            sec = Sector(Ray(*d["sector"]["lo"]), Ray(*d["sector"]["hi"]))
            locs.append(
                Location(
                    str(d["id"]),
                    sec,
                    parse_flow(d["flow"]),
                    d["guard"],
                    dict(d.get("switch", {})),
                    rat(d.get("stall", 0)),
                )
            )
        init = obj["initial"]
        return Ppcd(tuple(locs), (str(init["location"]), init["facet"]))
    except ReflexSector:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError, GeometryError) as exc:
        raise PpcdError(f"malformed PPCD JSON: {exc}") from exc


def model_to_json(model: Ppcd) -> dict:
    out = []
    for loc in model.locations:
        d = {
            "id": loc.id,
            "sector": {"lo": loc.invariant.lo.to_json(), "hi": loc.invariant.hi.to_json()},
            "flow": loc.flow.to_json(),
            "guard": loc.guard,
            "switch": {k: format_rat(v) for k, v in loc.switch.items()},
        }
        if loc.stall:
            d["stall"] = format_rat(loc.stall)
        out.append(d)
    return {"locations": out, "initial": {"location": model.initial[0], "facet": model.initial[1]}}
