"""Independent reference implementations used only by the tests.

Nothing here imports the analysis code under test beyond plain data types:
cycles come from networkx, linear algebra from sympy, and logs from mpmath
at high precision.
"""

from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

import mpmath
import networkx as nx
import sympy

from ppcdstab.exactnum import INF, ONE, Scale
from ppcdstab.wdtmc import Edge, Wdtmc


def digraph(chain: Wdtmc) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(chain.n))
    for e in chain.edges:
        g.add_edge(e.src, e.dst, w=e.weight)
    return g


def reach_closure(chain: Wdtmc) -> list[set]:
    """Floyd-Warshall boolean closure; row i is the set reachable from i."""
    n = chain.n
    r = [[i == j for j in range(n)] for i in range(n)]
    for e in chain.edges:
        r[e.src][e.dst] = True
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                for j in range(n):
                    if r[k][j]:
                        r[i][j] = True
    return [{j for j in range(n) if r[i][j]} for i in range(n)]


def absolute_oracle(chain: Wdtmc) -> bool:
    """True iff no reachable infinite edge and every reachable simple cycle has product <= 1."""
    reach = reach_closure(chain)[chain.initial]
    g = digraph(chain).subgraph(reach)
    if any(d["w"].is_infinite for _, _, d in g.edges(data=True)):
        return False
    for cyc in nx.simple_cycles(g):
        prod = Fraction(1)
        for u, v in zip(cyc, cyc[1:] + cyc[:1]):
            prod *= g.edges[u, v]["w"].ratio
        if prod > 1:
            return False
    return True


def stationary_oracle(chain: Wdtmc) -> list[Fraction]:
    n = chain.n
    P = sympy.zeros(n, n)
    for e in chain.edges:
        P[e.src, e.dst] = sympy.Rational(e.prob.numerator, e.prob.denominator)
    ns = (P.T - sympy.eye(n)).nullspace()
    assert len(ns) == 1, "oracle expects a one-dimensional kernel"
    v = ns[0] / sum(ns[0])
    return [Fraction(int(x.p), int(x.q)) for x in v]


def effective_log_oracle(chain: Wdtmc, rho, dps: int = 80) -> mpmath.mpf:
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for e in chain.edges:
            m = rho[e.src] * e.prob
            r = e.weight.ratio
            total += mpmath.mpf(m.numerator) / m.denominator * (mpmath.log(r.numerator) - mpmath.log(r.denominator))
        return +total


def period_oracle(chain: Wdtmc) -> bool:
    """Aperiodic iff every non-trivial SCC is aperiodic per networkx."""
    g = digraph(chain)
    for comp in nx.strongly_connected_components(g):
        sub = g.subgraph(comp)
        if sub.number_of_edges() == 0:
            continue
        if not nx.is_aperiodic(sub):
            return False
    return True


def edge_multiset(path) -> Counter:
    return Counter(zip(path, path[1:]))


def wild_chain(seed: int, max_states: int = 8) -> Wdtmc:
    """Arbitrary valid chain: any reachability pattern, occasional infinite edges."""
    rng = random.Random(seed)
    n = rng.randint(1, max_states)
    edges = []
    for i in range(n):
        k = rng.randint(1, min(n, 3))
        dsts = rng.sample(range(n), k)
        ws = [rng.randint(1, 5) for _ in dsts]
        for d, w in zip(dsts, ws):
            roll = rng.random()
            if roll < 0.05:
                scale = INF
            elif roll < 0.25:
                scale = ONE
            else:
                scale = Scale(Fraction(rng.randint(1, 6), rng.randint(1, 6)))
            edges.append(Edge(i, d, Fraction(w, sum(ws)), scale))
    return Wdtmc(tuple(f"s{i}" for i in range(n)), tuple(edges), rng.randrange(n))
