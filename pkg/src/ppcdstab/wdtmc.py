"""Weighted discrete-time Markov chains and their convergence analyses.

Edge weights are kept multiplicatively as :class:`~ppcdstab.exactnum.Scale`
values, so "weight <= 0" in log terms becomes "product <= 1" here and every
decision is made in exact arithmetic. Float logarithms only appear in
reports and Monte-Carlo statistics.
"""

from __future__ import annotations

import bisect
import enum
import math
import random
import threading
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from mpmath import iv

from .exactnum import (
    INF,
    ONE,
    RatMatrix,
    Scale,
    format_rat,
    log_rat,
    rat,
    scale_product,
    solve_linear,
)

RNG_ALGORITHM = "python-random-mt19937; successor = targets[bisect(cumulative numerators, randrange(lcm of denominators))]"


class WdtmcError(Exception):
    pass


class RowSumNotOne(WdtmcError):
    def __init__(self, state: str, total: Fraction):
        super().__init__(f"outgoing probabilities of {state!r} sum to {format_rat(total)}, not 1")
        self.state = state
        self.total = total


class NonPositiveProb(WdtmcError):
    def __init__(self, src: str, dst: str, prob: Fraction):
        super().__init__(f"edge {src!r}->{dst!r} has probability {format_rat(prob)}")
        self.edge = (src, dst)


class DuplicateEdge(WdtmcError):
    def __init__(self, src: str, dst: str):
        super().__init__(f"duplicate edge {src!r}->{dst!r}")
        self.pair = (src, dst)


class UnknownState(WdtmcError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotAPath(WdtmcError):
    pass


class NotIrreducible(WdtmcError):
    pass


class NotAperiodic(WdtmcError):
    pass


class InfiniteEdgePresent(WdtmcError):
    pass


class InfiniteEdgeOnPath(WdtmcError):
    pass


class ChainValidationError(WdtmcError):
    def __init__(self, issues: list[WdtmcError]):
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues


class Edge(NamedTuple):
    src: int
    dst: int
    prob: Fraction
    weight: Scale


@dataclass(frozen=True)
class Wdtmc:
    states: tuple
    edges: tuple
    initial: int = 0

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "edges", tuple(Edge(*e) for e in self.edges))

    @classmethod
    def build(cls, states: Sequence[str], edges: Iterable, initial: str | int = 0) -> "Wdtmc":
        """Build from state names; edges are (src, dst, prob, weight) with names.

        ``prob`` may be any rational-like value and ``weight`` a Scale or a
        rational-like ratio.
        """
        idx = {s: i for i, s in enumerate(states)}
        out = []
        for src, dst, prob, weight in edges:
            if not isinstance(weight, Scale):
                weight = Scale.finite(weight)
            try:
                out.append(Edge(idx[src], idx[dst], rat(prob), weight))
            except KeyError as exc:
                raise UnknownState(f"unknown state {exc.args[0]!r}") from None
        init = initial if isinstance(initial, int) else idx[initial]
        return cls(tuple(states), tuple(out), init)

    @property
    def n(self) -> int:
        return len(self.states)

    @cached_property
    def out_edges(self) -> tuple:
        out = [[] for _ in self.states]
        for e in sorted(self.edges, key=lambda e: (e.src, e.dst)):
            out[e.src].append(e)
        return tuple(tuple(o) for o in out)

    @cached_property
    def edge_map(self) -> dict:
        return {(e.src, e.dst): e for e in self.edges}

    def index(self, state) -> int:
        if isinstance(state, int) and not isinstance(state, bool):
            if 0 <= state < self.n:
                return state
            raise UnknownState(f"state index {state} out of range")
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownState(f"unknown state {state!r}") from None

    def with_weights(self, fn) -> "Wdtmc":
        return Wdtmc(self.states, tuple(e._replace(weight=fn(e.weight)) for e in self.edges), self.initial)


# -- validation ------------------------------------------------------------


def validate(chain: Wdtmc) -> list[WdtmcError]:
    """Return every invariant violation; an empty list means the chain is valid."""
    issues: list[WdtmcError] = []
    if not 0 <= chain.initial < chain.n:
        issues.append(UnknownState(f"initial index {chain.initial} out of range"))
    seen = set()
    totals = [Fraction(0)] * chain.n
    for e in chain.edges:
        if not (0 <= e.src < chain.n and 0 <= e.dst < chain.n):
            issues.append(UnknownState(f"edge {e.src}->{e.dst} references a missing state"))
            continue
        name = chain.states
        if not 0 < e.prob <= 1:
            issues.append(NonPositiveProb(name[e.src], name[e.dst], e.prob))
        if (e.src, e.dst) in seen:
            issues.append(DuplicateEdge(name[e.src], name[e.dst]))
        seen.add((e.src, e.dst))
        totals[e.src] += e.prob
    for i, t in enumerate(totals):
        if t != 1:
            issues.append(RowSumNotOne(chain.states[i], t))
    return issues


def ensure_valid(chain: Wdtmc) -> Wdtmc:
    issues = validate(chain)
    if issues:
        raise ChainValidationError(issues)
    return chain


# -- graph structure -------------------------------------------------------


def reachable(chain: Wdtmc, start=None) -> frozenset:
    """Indices of all states reachable from ``start`` (default: initial)."""
    s = chain.initial if start is None else chain.index(start)
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for e in chain.out_edges[u]:
            if e.dst not in seen:
                seen.add(e.dst)
                queue.append(e.dst)
    return frozenset(seen)


def restrict(chain: Wdtmc, keep: Iterable[int]) -> tuple[Wdtmc, list[int]]:
    """Sub-chain on ``keep`` (which must be closed under successors).

    Returns the sub-chain and the map from new to old indices.
    """
    old = sorted(keep)
    new_of = {o: i for i, o in enumerate(old)}
    edges = tuple(
        Edge(new_of[e.src], new_of[e.dst], e.prob, e.weight) for e in chain.edges if e.src in new_of
    )
    if any(e.dst not in new_of for e in chain.edges if e.src in new_of):
        raise ValueError("state set is not closed under successors")
    init = new_of.get(chain.initial, 0)
    return Wdtmc(tuple(chain.states[o] for o in old), edges, init), old


def strongly_connected_components(chain: Wdtmc) -> list[list[int]]:
    """Kosaraju, iterative; components come out in a deterministic order."""
    n = chain.n
    order, seen = [], [False] * n
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [(root, iter(chain.out_edges[root]))]
        while stack:
            u, it = stack[-1]
            for e in it:
                if not seen[e.dst]:
                    seen[e.dst] = True
                    stack.append((e.dst, iter(chain.out_edges[e.dst])))
                    break
            else:
                stack.pop()
                order.append(u)
    rev = [[] for _ in range(n)]
    for e in chain.edges:
        rev[e.dst].append(e.src)
    comp = [-1] * n
    comps = []
    for root in reversed(order):
        if comp[root] != -1:
            continue
        members = [root]
        comp[root] = len(comps)
        i = 0
        while i < len(members):
            for v in rev[members[i]]:
                if comp[v] == -1:
                    comp[v] = len(comps)
                    members.append(v)
            i += 1
        comps.append(sorted(members))
    return comps


def is_irreducible(chain: Wdtmc) -> bool:
    if chain.n == 0:
        return False
    return len(strongly_connected_components(chain)) == 1


def _component_period(chain: Wdtmc, members: list[int]) -> int:
    inside = set(members)
    level = {members[0]: 0}
    queue = deque([members[0]])
    g = 0
    while queue:
        u = queue.popleft()
        for e in chain.out_edges[u]:
            if e.dst not in inside:
                continue
            if e.dst not in level:
                level[e.dst] = level[u] + 1
                queue.append(e.dst)
            else:
                g = math.gcd(g, abs(level[u] + 1 - level[e.dst]))
    return g


def is_aperiodic(chain: Wdtmc) -> bool:
    """True iff every non-trivial strongly connected component has period 1.

    A single state without a self-loop has no cycles and is skipped.
    """
    for members in strongly_connected_components(chain):
        if len(members) == 1 and (members[0], members[0]) not in chain.edge_map:
            continue
        if _component_period(chain, members) != 1:
            return False
    return True


# -- paths -----------------------------------------------------------------


def _check_path(chain: Wdtmc, path: Sequence[int]) -> list[Edge]:
    if len(path) == 0:
        raise NotAPath("empty path")
    for s in path:
        if not (isinstance(s, int) and 0 <= s < chain.n):
            raise NotAPath(f"unknown state {s!r} in path")
    edges = []
    emap = chain.edge_map
    for u, v in zip(path, path[1:]):
        e = emap.get((u, v))
        if e is None:
            raise NotAPath(f"no edge {chain.states[u]!r}->{chain.states[v]!r}")
        edges.append(e)
    return edges


def path_weight(chain: Wdtmc, path: Sequence[int]) -> Scale:
    return scale_product(e.weight for e in _check_path(chain, path))


def path_probability(chain: Wdtmc, rho: Sequence[Fraction], path: Sequence[int]) -> Fraction:
    p = Fraction(rho[path[0]]) if path else Fraction(0)
    for e in _check_path(chain, path):
        p *= e.prob
    return p


@dataclass(frozen=True)
class Decomposition:
    spine: tuple
    cycles: tuple


def decompose_path(chain: Wdtmc, path: Sequence[int]) -> Decomposition:
    """Split a finite path into a simple spine plus simple cycles.

    Walks the path keeping the current simple prefix on a stack; whenever a
    state repeats, the loop closed since its previous occurrence is cut out.
    """
    _check_path(chain, path)
    stack = [path[0]]
    pos = {path[0]: 0}
    cycles = []
    for s in path[1:]:
        i = pos.get(s)
        if i is None:
            pos[s] = len(stack)
            stack.append(s)
            continue
        cycles.append(tuple(stack[i:]) + (s,))
        for t in stack[i + 1 :]:
            del pos[t]
        del stack[i + 1 :]
    return Decomposition(tuple(stack), tuple(cycles))


# -- matrices and stationary distribution ------------------------------------


def transition_matrix(chain: Wdtmc) -> RatMatrix:
    n = chain.n
    entries = [Fraction(0)] * (n * n)
    for e in chain.edges:
        entries[e.src * n + e.dst] = e.prob
    return RatMatrix(n, n, tuple(entries))


def n_step_matrix(chain: Wdtmc, n: int) -> RatMatrix:
    if n < 0:
        raise ValueError("n must be non-negative")
    result = RatMatrix.identity(chain.n)
    base = transition_matrix(chain)
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


@dataclass(frozen=True)
class Distribution:
    mass: tuple

    def __post_init__(self):
        m = tuple(rat(v) for v in self.mass)
        if any(v < 0 for v in m) or sum(m) != 1:
            raise ValueError("not a probability distribution")
        object.__setattr__(self, "mass", m)

    def __getitem__(self, i):
        return self.mass[i]

    def __len__(self):
        return len(self.mass)

    def __iter__(self):
        return iter(self.mass)


def stationary_distribution(chain: Wdtmc) -> Distribution:
    """Unique stationary distribution of a finite irreducible chain, exactly."""
    if not is_irreducible(chain):
        raise NotIrreducible(f"chain with {chain.n} states is not irreducible")
    n = chain.n
    # balance equations (P^T - I) rho = 0 with the last one swapped for sum(rho) = 1
    rows = [[Fraction(0)] * n for _ in range(n)]
    for e in chain.edges:
        rows[e.dst][e.src] += e.prob
    for i in range(n):
        rows[i][i] -= 1
    rows[-1] = [Fraction(1)] * n
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    rho = solve_linear(RatMatrix.from_rows(rows), rhs)
    inflow = [Fraction(0)] * n
    for e in chain.edges:
        inflow[e.dst] += rho[e.src] * e.prob
    if inflow != rho or sum(rho) != 1 or any(v <= 0 for v in rho):
        raise ArithmeticError("stationary distribution failed its exact check")
    return Distribution(tuple(rho))


# -- verdicts --------------------------------------------------------------


class Decision(str, enum.Enum):
    CONVERGENT = "Convergent"
    NOT_CONVERGENT = "NotConvergent"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class InfiniteEdge:
    src: int
    dst: int


@dataclass(frozen=True)
class PositiveCycle:
    cycle: tuple
    product: Scale = field(compare=False, default=INF)


@dataclass(frozen=True)
class EffectiveWeight:
    """Sign of the stationary-average edge log-weight.

    ``cmp`` compares the product of ratio**mass over edges with 1 and is
    None only if the sign could not be resolved within the precision cap.
    """

    cmp: int | None
    float_log: float
    method: str = "integer-power"

    @property
    def sign(self) -> str | None:
        return {-1: "neg", 0: "zero", 1: "pos", None: None}[self.cmp]


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    witness: object = None

    @property
    def convergent(self) -> bool:
        return self.decision is Decision.CONVERGENT


def _reachable_edges(chain: Wdtmc, reach: frozenset) -> list[Edge]:
    return [e for s in sorted(reach) for e in chain.out_edges[s]]


def _find_infinite_edge(chain: Wdtmc, reach: frozenset) -> InfiniteEdge | None:
    for e in _reachable_edges(chain, reach):
        if e.weight.is_infinite:
            return InfiniteEdge(e.src, e.dst)
    return None


def _max_products(chain: Wdtmc, reach: frozenset):
    """Maximizing Bellman-Ford over products from the initial state.

    Returns ``(best, cycle)``: best[v] is the largest path product reaching
    v found by the relaxation, and ``cycle`` is a state cycle with product
    above 1 when one is reachable, else None. Infinite edges must be absent.
    """
    edges = [(e.src, e.dst, e.weight.ratio) for e in _reachable_edges(chain, reach)]
    best: dict[int, Fraction] = {chain.initial: Fraction(1)}
    pred: dict[int, int] = {}
    rounds = len(reach)
    last = None
    for _ in range(rounds):
        last = None
        for u, v, w in edges:
            bu = best.get(u)
            if bu is None:
                continue
            cand = bu * w
            bv = best.get(v)
            if bv is None or cand > bv:
                best[v] = cand
                pred[v] = u
                if last is None:
                    last = v
        if last is None:
            return best, None
    # still improving after |reach| rounds: the predecessor graph has a cycle
    x = last
    for _ in range(rounds):
        x = pred[x]
    cyc = [x]
    y = pred[x]
    while y != x:
        cyc.append(y)
        y = pred[y]
    cyc.reverse()
    k = cyc.index(min(cyc))
    cyc = cyc[k:] + cyc[:k]
    return best, tuple(cyc) + (cyc[0],)


def check_absolute(chain: Wdtmc) -> Verdict:
    """Decide absolute convergence; NotConvergent verdicts carry a witness."""
    reach = reachable(chain)
    inf_edge = _find_infinite_edge(chain, reach)
    if inf_edge is not None:
        return Verdict(Decision.NOT_CONVERGENT, inf_edge)
    _, cycle = _max_products(chain, reach)
    if cycle is None:
        return Verdict(Decision.CONVERGENT)
    product = path_weight(chain, cycle)
    if product.cmp_one() <= 0:
        raise AssertionError(f"extracted cycle {cycle} has product {product}, not above 1")
    return Verdict(Decision.NOT_CONVERGENT, PositiveCycle(cycle, product))


def path_product_bound(chain: Wdtmc) -> Fraction:
    """Largest product of any finite path from the initial state.

    Only defined for absolutely convergent chains, where every cycle has
    product at most 1 so the maximum is attained on a simple path.
    """
    reach = reachable(chain)
    if _find_infinite_edge(chain, reach) is not None:
        raise InfiniteEdgePresent("infinite edge reachable")
    best, cycle = _max_products(chain, reach)
    if cycle is not None:
        raise ValueError("positive cycle reachable; path products are unbounded")
    return max(best.values())


# -- effective weight --------------------------------------------------------


def edge_masses(chain: Wdtmc, rho: Sequence[Fraction]) -> list[tuple[Edge, Fraction]]:
    return [(e, rho[e.src] * e.prob) for e in chain.edges if rho[e.src] * e.prob]


def coprime_base(numbers: Iterable[int]) -> list[int]:
    """Pairwise coprime integers > 1 generating every input multiplicatively."""
    base: list[int] = []
    for n in numbers:
        work = [n]
        while work:
            x = work.pop()
            if x == 1:
                continue
            for i, b in enumerate(base):
                g = math.gcd(x, b)
                if g > 1:
                    base.pop(i)
                    work.extend((g, b // g, x // g))
                    break
            else:
                base.append(x)
    return sorted(base)


def _valuation(n: int, b: int) -> int:
    k = 0
    while n % b == 0:
        n //= b
        k += 1
    return k


_iv_lock = threading.Lock()


def _interval_sign(coeffs: dict[int, Fraction], max_prec: int) -> int | None:
    """Sign of sum(c * log b) for pairwise coprime bases b, known nonzero."""
    prec = 64
    while prec <= max_prec:
        with _iv_lock:
            saved = iv.prec
            iv.prec = prec
            try:
                total = iv.mpf(0)
                for b, c in coeffs.items():
                    total += iv.mpf(c.numerator) / iv.mpf(c.denominator) * iv.log(iv.mpf(b))
            finally:
                iv.prec = saved
        if total.a > 0:
            return 1
        if total.b < 0:
            return -1
        prec *= 2
    return None


def effective_weight(
    chain: Wdtmc,
    rho: Sequence[Fraction],
    bit_budget: int = 1_000_000,
    max_prec: int = 1 << 16,
) -> EffectiveWeight:
    """Compare prod(ratio_e ** mass_e) with 1, where mass_e = rho(src) * prob.

    The sign of the stationary-average log weight is decided exactly. With a
    common denominator L of the masses, the integer powers ratio_e**(L*mass_e)
    are multiplied out directly when that fits in ``bit_budget`` bits.
    Otherwise the ratios are factored over a pairwise coprime base: the log
    sum is zero iff every base exponent vanishes, and a nonzero sum has its
    sign settled by outward-rounded interval arithmetic.
    """
    masses = edge_masses(chain, rho)
    for e, _ in masses:
        if e.weight.is_infinite:
            raise InfiniteEdgePresent(
                f"edge {chain.states[e.src]!r}->{chain.states[e.dst]!r} has infinite weight"
            )
    float_log = math.fsum(float(p) * log_rat(e.weight.ratio) for e, p in masses)
    active = [(e.weight.ratio, p) for e, p in masses if e.weight.ratio != 1]
    if not active:
        return EffectiveWeight(0, 0.0)

    lcm = 1
    for _, p in active:
        lcm = lcm * p.denominator // math.gcd(lcm, p.denominator)
    bits = sum(
        (p * lcm).numerator * (r.numerator.bit_length() + r.denominator.bit_length()) for r, p in active
    )
    if bits <= bit_budget:
        num = den = 1
        for r, p in active:
            k = (p * lcm).numerator
            num *= r.numerator**k
            den *= r.denominator**k
        return EffectiveWeight((num > den) - (num < den), float_log, "integer-power")

    base = coprime_base([r.numerator for r, _ in active] + [r.denominator for r, _ in active])
    coeffs: dict[int, Fraction] = {}
    for r, p in active:
        for b in base:
            v = _valuation(r.numerator, b) - _valuation(r.denominator, b)
            if v:
                coeffs[b] = coeffs.get(b, Fraction(0)) + p * v
    coeffs = {b: c for b, c in coeffs.items() if c}
    if not coeffs:
        return EffectiveWeight(0, float_log, "coprime-base")
    return EffectiveWeight(_interval_sign(coeffs, max_prec), float_log, "coprime-base")


def _require_ergodic(chain: Wdtmc) -> None:
    if not is_irreducible(chain):
        raise NotIrreducible("reachable chain is not irreducible")
    if not is_aperiodic(chain):
        raise NotAperiodic("reachable chain is periodic")


def check_almost_sure(chain: Wdtmc) -> Verdict:
    """Decide almost-sure convergence on the part reachable from the initial state.

    Raises NotIrreducible / NotAperiodic when the reachable chain lacks the
    hypotheses the characterization needs.
    """
    reach = reachable(chain)
    inf_edge = _find_infinite_edge(chain, reach)
    if inf_edge is not None:
        return Verdict(Decision.NOT_CONVERGENT, inf_edge)
    sub, _ = restrict(chain, reach)
    _require_ergodic(sub)
    ew = effective_weight(sub, stationary_distribution(sub))
    if ew.cmp is None:
        return Verdict(Decision.INDETERMINATE, ew)
    decision = Decision.CONVERGENT if ew.cmp <= 0 else Decision.NOT_CONVERGENT
    return Verdict(decision, ew)


# -- sampling and Monte-Carlo ------------------------------------------------


def _sampling_tables(chain: Wdtmc):
    tables = []
    for out in chain.out_edges:
        if not out:
            tables.append(None)
            continue
        lcm = 1
        for e in out:
            lcm = lcm * e.prob.denominator // math.gcd(lcm, e.prob.denominator)
        cum, acc = [], 0
        for e in out:
            acc += (e.prob * lcm).numerator
            cum.append(acc)
        tables.append((lcm, cum, [e.dst for e in out]))
    return tables


def sample_path(chain: Wdtmc, steps: int, seed: int) -> tuple:
    """Seeded random walk of ``steps`` edges from the initial state.

    Successors are drawn exactly: an integer uniform on the common
    denominator of the state's outgoing probabilities selects an edge by
    cumulative numerator (see ``RNG_ALGORITHM``).
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = random.Random(seed)
    tables = _sampling_tables(chain)
    s = chain.initial
    path = [s]
    for _ in range(steps):
        t = tables[s]
        if t is None:
            raise NotAPath(f"state {chain.states[s]!r} has no successors")
        lcm, cum, dst = t
        s = dst[bisect.bisect_right(cum, rng.randrange(lcm))]
        path.append(s)
    return tuple(path)


@dataclass(frozen=True)
class MonteCarloStats:
    steps: int
    partial_average: float
    target: float
    std_error: float = math.nan


def _batch_std_error(values: Sequence[float]) -> float:
    n = len(values)
    nb = max(2, int(math.isqrt(n)))
    size = n // nb
    if size < 1:
        return math.nan
    means = [math.fsum(values[i * size : (i + 1) * size]) / size for i in range(nb)]
    mu = math.fsum(means) / nb
    var = math.fsum((m - mu) ** 2 for m in means) / (nb - 1)
    return math.sqrt(var / nb)


def average_step_weight(chain: Wdtmc, path: Sequence[int], rho: Sequence[Fraction] | None = None) -> MonteCarloStats:
    """Average log step weight along ``path`` against the effective weight.

    ``std_error`` is a batch-means estimate, which accounts for the
    correlation between successive steps of the chain.
    """
    edges = _check_path(chain, path)
    if not edges:
        raise ValueError("path has no edges")
    logs = {}
    values = []
    for e in edges:
        if e.weight.is_infinite:
            raise InfiniteEdgeOnPath(f"edge {chain.states[e.src]!r}->{chain.states[e.dst]!r} is infinite")
        key = (e.src, e.dst)
        if key not in logs:
            logs[key] = log_rat(e.weight.ratio)
        values.append(logs[key])
    if rho is None:
        rho = stationary_distribution(chain)
    target = effective_weight(chain, rho).float_log
    return MonteCarloStats(len(values), math.fsum(values) / len(values), target, _batch_std_error(values))


def convergence_rate_probe(chain: Wdtmc, n_max: int) -> list[tuple[int, float]]:
    """max |P^n(x, y) - rho*(y)| for n = 1..n_max, computed exactly."""
    _require_ergodic(chain)
    rho = stationary_distribution(chain)
    P = transition_matrix(chain)
    Pn = P
    out = []
    n = chain.n
    for k in range(1, n_max + 1):
        if k > 1:
            Pn = Pn @ P
        dev = max(abs(Pn[i, j] - rho[j]) for i in range(n) for j in range(n))
        out.append((k, float(dev)))
    return out


def lazy(chain: Wdtmc) -> Wdtmc:
    """Lazy version (I + P) / 2; self-loops keep their weight or get weight 1."""
    half = Fraction(1, 2)
    edges = []
    loops = set()
    for e in chain.edges:
        if e.src == e.dst:
            edges.append(e._replace(prob=half + half * e.prob))
            loops.add(e.src)
        else:
            edges.append(e._replace(prob=half * e.prob))
    for s in range(chain.n):
        if s not in loops:
            edges.append(Edge(s, s, half, ONE))
    return Wdtmc(chain.states, tuple(edges), chain.initial)


# -- JSON --------------------------------------------------------------------


def chain_to_json(chain: Wdtmc) -> dict:
    names = chain.states
    return {
        "states": list(names),
        "initial": names[chain.initial],
        "edges": [
            {
                "src": names[e.src],
                "dst": names[e.dst],
                "prob": format_rat(e.prob),
                "weight": e.weight.to_json(),
            }
            for e in sorted(chain.edges, key=lambda e: (e.src, e.dst))
        ],
    }


def chain_from_json(obj: dict) -> Wdtmc:
    try:
        states = [str(s) for s in obj["states"]]
        if len(set(states)) != len(states):
            raise WdtmcError("duplicate state names")
        edges = [
            (d["src"], d["dst"], rat(d["prob"]), Scale.from_json(d["weight"])) for d in obj["edges"]
        ]
        return Wdtmc.build(states, edges, obj["initial"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, UnknownState):
            raise
        raise WdtmcError(f"malformed chain JSON: {exc}") from exc


def witness_to_json(chain: Wdtmc, w) -> dict | None:
    names = chain.states
    if w is None:
        return None
    if isinstance(w, InfiniteEdge):
        return {"kind": "InfiniteEdge", "src": names[w.src], "dst": names[w.dst]}
    if isinstance(w, PositiveCycle):
        return {
            "kind": "PositiveCycle",
            "cycle": [names[s] for s in w.cycle],
            "product": w.product.to_json(),
        }
    if isinstance(w, EffectiveWeight):
        return {
            "kind": "EffectiveWeight",
            "sign": w.sign,
            "exact_product_cmp": {-1: "less", 0: "equal", 1: "greater", None: None}[w.cmp],
            "float_log_value": w.float_log,
            "method": w.method,
        }
    raise TypeError(f"unknown witness {w!r}")


def verdict_to_json(chain: Wdtmc, v: Verdict) -> dict:
    return {"decision": v.decision.value, "witness": witness_to_json(chain, v.witness)}
