"""Seeded model generators: the eight-region experiment families, the
faulty-actuator robot, and random chains for oracle testing."""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

from . import wdtmc as W
from .exactnum import ONE, Scale, Vec2Q, format_rat, rat
from .geom2d import Hit, Ray, Sector, continuous_step
from .ppcd import Location, Ppcd, PpcdError, ensure_valid

GENERATOR_VERSION = "ppcdstab.bench/1"

# primitive directions at multiples of 45 degrees, counterclockwise from +x
OCTANT_RAYS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
QUADRANT_RAYS = ((1, 0), (0, 1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: int
    locs_per_region: int = 12
    coefficient_range: tuple = (1, 5)
    seed: int = 0
    stall: Fraction = Fraction(1, 10)

    def __post_init__(self):
        if self.experiment not in (1, 2, 3):
            raise ValueError("experiment must be 1, 2 or 3")
        if self.locs_per_region < 1:
            raise ValueError("locs_per_region must be at least 1")
        lo, hi = self.coefficient_range
        if lo > hi or lo < 1:
            raise ValueError("coefficient range must be non-empty and positive")

    def manifest(self) -> dict:
        d = asdict(self)
        d["coefficient_range"] = list(self.coefficient_range)
        d["stall"] = format_rat(rat(self.stall))
        return {
            "generator": GENERATOR_VERSION,
            "config": d,
            "switch_targets": "all locations of the counterclockwise-adjacent region",
            "switch_probabilities": "integer weights 1..9 normalized, scaled by 1 - stall",
        }


def _region_coefficients(region: int, c: int) -> tuple[int, int]:
    """(a, b) of the line a*x' + b*y' = 0 for a drawn magnitude c."""
    if region in (1, 2):
        return 1, c
    if region in (3, 4):
        return -c, 1
    if region in (5, 6):
        return -1, -c
    return c, -1


def loc_id(region: int, j: int) -> str:
    return f"r{region}_l{j}"


def gen_experiment(cfg: ExperimentConfig) -> Ppcd:
    """Eight 45-degree regions with ``locs_per_region`` modes each.

    Every mode of region r has its guard on the larger-angle ray and switches
    to the modes of region r+1. Flow directions are counterclockwise along
    a*x' + b*y' = 0, i.e. (-b, a). Experiments 2 and 3 differ from 1 only in
    the first mode of region 1: (a, b) = (50, 1) and (1, -5) respectively.
    """
    rng = random.Random(cfg.seed)
    lo, hi = cfg.coefficient_range
    k = cfg.locs_per_region
    coeffs = {}
    for r in range(1, 9):
        for j in range(1, k + 1):
            coeffs[r, j] = _region_coefficients(r, rng.randint(lo, hi))
    if cfg.experiment == 2:
        coeffs[1, 1] = (50, 1)
    elif cfg.experiment == 3:
        coeffs[1, 1] = (1, -5)
    stall = rat(cfg.stall)
    locations = []
    for r in range(1, 9):
        sec = Sector(Ray(*OCTANT_RAYS[r - 1]), Ray(*OCTANT_RAYS[r % 8]))
        nxt = r % 8 + 1
        for j in range(1, k + 1):
            weights = [rng.randint(1, 9) for _ in range(k)]
            total = sum(weights)
            switch = {loc_id(nxt, i + 1): Fraction(w, total) for i, w in enumerate(weights)}
            a, b = coeffs[r, j]
            locations.append(Location(loc_id(r, j), sec, Vec2Q(-b, a), "hi", switch, stall))
    return ensure_valid(Ppcd(tuple(locations), (loc_id(1, 1), "lo")))


@dataclass(frozen=True)
class CaseStudyConfig:
    """Robot with a faulty heading actuator in the four quadrants.

    ``headings[i]`` lists the k_i flow vectors available in quadrant i+1 and
    ``probs[i]`` the probability of picking each on entering that quadrant.
    """

    headings: tuple
    probs: tuple
    stall: Fraction = Fraction(1, 10)

    def __post_init__(self):
        if len(self.headings) != 4 or len(self.probs) != 4:
            raise ValueError("need headings and probabilities for four quadrants")
        for hs, ps in zip(self.headings, self.probs):
            if len(hs) != len(ps) or not hs:
                raise ValueError("each quadrant needs one probability per heading")
            if sum(rat(p) for p in ps) != 1:
                raise ValueError("quadrant probabilities must sum to 1")


def rotate90(v: Vec2Q) -> Vec2Q:
    return Vec2Q(-v.y, v.x)


def symmetric_case_study(legs: Sequence[Sequence], probs: Sequence[Sequence] | None = None, stall=Fraction(1, 10)) -> CaseStudyConfig:
    """Case study where the j-th heading of quadrant i scales distance by ``legs[i][j]``.

    In quadrant 1 the heading (-1, h) carries (1, 0) to (0, h); the other
    quadrants use the same heading rotated by multiples of 90 degrees.
    """
    headings = []
    for i, hs in enumerate(legs):
        row = []
        for h in hs:
            v = Vec2Q(-1, rat(h))
            for _ in range(i):
                v = rotate90(v)
            row.append(v)
        headings.append(tuple(row))
    if probs is None:
        probs = [tuple(Fraction(1, len(hs)) for _ in hs) for hs in legs]
    return CaseStudyConfig(tuple(headings), tuple(tuple(rat(p) for p in ps) for ps in probs), rat(stall))


def gen_case_study(cfg: CaseStudyConfig) -> Ppcd:
    def name(i, j):
        return f"q{i + 1}_{j + 1}"

    locations = []
    for i in range(4):
        sec = Sector(Ray(*QUADRANT_RAYS[i]), Ray(*QUADRANT_RAYS[(i + 1) % 4]))
        nxt = (i + 1) % 4
        switch = {name(nxt, j): rat(p) for j, p in enumerate(cfg.probs[nxt])}
        for j, h in enumerate(cfg.headings[i]):
            out = continuous_step(sec, sec.lo, h)
            if not (isinstance(out, Hit) and out.exit == sec.hi):
                raise PpcdError(
                    f"heading {h.to_json()} in quadrant {i + 1} does not carry the lower axis to the next one"
                )
            locations.append(Location(name(i, j), sec, h, "hi", switch, rat(cfg.stall)))
    return ensure_valid(Ppcd(tuple(locations), (name(0, 0), "lo")))


def gen_random_wdtmc(states: int, density, seed: int) -> W.Wdtmc:
    """Irreducible, aperiodic random chain with finite weights.

    A Hamiltonian cycle guarantees irreducibility and a self-loop on every
    state aperiodicity; each other ordered pair becomes a chord with
    probability ``density``. Transition probabilities are normalized
    integer weights in 1..9. Self-loops have scale 1 and other edges a
    ratio a/b with a in 1..3 and b in 1..4.
    """
    density = rat(density)
    if states < 1 or not 0 < density <= 1:
        raise ValueError("need states >= 1 and 0 < density <= 1")
    rng = random.Random(seed)
    pairs = {(i, i) for i in range(states)} | {(i, (i + 1) % states) for i in range(states)}
    for i in range(states):
        for j in range(states):
            if (i, j) not in pairs and rng.randrange(density.denominator) < density.numerator:
                pairs.add((i, j))
    edges = []
    for i in range(states):
        outs = sorted(j for (a, j) in pairs if a == i)
        weights = [rng.randint(1, 9) for _ in outs]
        total = sum(weights)
        for j, w in zip(outs, weights):
            scale = ONE if i == j else Scale(Fraction(rng.randint(1, 3), rng.randint(1, 4)))
            edges.append(W.Edge(i, j, Fraction(w, total), scale))
    return W.Wdtmc(tuple(f"s{i}" for i in range(states)), tuple(edges), 0)
