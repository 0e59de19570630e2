"""Capacitated assignment of origin populations to open sites.

Solved as a min-cost flow ``source -> origin -> site -> sink`` by successive
shortest paths (Bellman-Ford on the residual graph, real-valued costs), then
cleaned to a vertex of the transportation polytope by cancelling cycles in the
support so at most ``|R| + |open| - 1`` arcs carry flow.
"""
from __future__ import annotations

import numpy as np

from ..errors import InfeasibleError

REDUCED_COST_TOL = 1e-12


class _Graph:
    def __init__(self, n):
        self.n = n
        self.head, self.cap, self.cost, self.adj = [], [], [], [[] for _ in range(n)]

    def add(self, u, v, cap, cost):
        # arc e and its reverse e ^ 1
        for a, b, c, w in ((u, v, cap, cost), (v, u, 0.0, -cost)):
            self.adj[a].append(len(self.head))
            self.head.append(b)
            self.cap.append(c)
            self.cost.append(w)
        return len(self.head) - 2

    def shortest_path(self, s, scale):
        n = self.n
        dist = [float("inf")] * n
        pred = [-1] * n
        dist[s] = 0.0
        tol = REDUCED_COST_TOL * scale
        for _ in range(n):
            changed = False
            for u in range(n):
                du = dist[u]
                if du == float("inf"):
                    continue
                for e in self.adj[u]:
                    if self.cap[e] > 0:
                        v = self.head[e]
                        nd = du + self.cost[e]
                        if nd < dist[v] - tol:
                            dist[v] = nd
                            pred[v] = e
                            changed = True
            if not changed:
                break
        return dist, pred


def _min_cost_flow(pops, caps, cost, allowed):
    n_r, n_s = cost.shape
    src, sink = 0, 1 + n_r + n_s
    g = _Graph(n_r + n_s + 2)
    arcs = {}
    for i in range(n_r):
        g.add(src, 1 + i, float(pops[i]), 0.0)
    for i in range(n_r):
        for j in range(n_s):
            if allowed[i, j]:
                arcs[(i, j)] = g.add(1 + i, 1 + n_r + j, float(pops[i]), float(cost[i, j]))
    for j in range(n_s):
        g.add(1 + n_r + j, sink, float(caps[j]), 0.0)

    finite = cost[allowed]
    scale = max(1.0, float(np.abs(finite).max()) if finite.size else 1.0)
    need = float(np.sum(pops))
    sent = 0.0
    while need - sent > 1e-9 * max(1.0, need):
        dist, pred = g.shortest_path(src, scale)
        if pred[sink] == -1:
            raise InfeasibleError("capacities cannot absorb every origin's population")
        path, v = [], sink
        while v != src:
            e = pred[v]
            path.append(e)
            v = g.head[e ^ 1]
        push = min(min(g.cap[e] for e in path), need - sent)
        for e in path:
            g.cap[e] -= push
            g.cap[e ^ 1] += push
        sent += push
    F = np.zeros((n_r, n_s))
    for (i, j), e in arcs.items():
        F[i, j] = g.cap[e ^ 1]
    return F


def _forest_path(adj, a, b):
    """Node path a -> b in a forest given as adjacency sets, or None."""
    prev = {a: None}
    stack = [a]
    while stack:
        u = stack.pop()
        if u == b:
            break
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                stack.append(w)
    if b not in prev:
        return None
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _to_vertex(F, cost, tol):
    """Cancel support cycles until the positive-flow arcs form a forest."""
    n_r, n_s = F.shape
    while True:
        adj = {("r", i): set() for i in range(n_r)}
        adj.update({("s", j): set() for j in range(n_s)})
        cycle = None
        for i, j in zip(*np.nonzero(F > tol)):
            a, b = ("r", i), ("s", j)
            path = _forest_path(adj, b, a)
            if path is not None:
                cycle = [a] + path  # a -> b -> ... -> a
                break
            adj[a].add(b)
            adj[b].add(a)
        if cycle is None:
            return F
        edges = []
        for u, w in zip(cycle, cycle[1:]):
            edges.append((u[1], w[1]) if u[0] == "r" else (w[1], u[1]))
        signs = np.array([1 if t % 2 == 0 else -1 for t in range(len(edges))])
        delta = sum(s * cost[e] for s, e in zip(signs, edges))
        if delta > 0:
            signs = -signs
        theta = min(F[e] for s, e in zip(signs, edges) if s < 0)
        for s, e in zip(signs, edges):
            F[e] += s * theta
        for s, e in zip(signs, edges):
            if s < 0 and F[e] <= tol:
                F[e] = 0.0


def transportation_solve(open_sites, instance, unit_costs) -> np.ndarray:
    """Fractions ``y`` (``|R| x |S|``) minimizing ``sum p_r y_rs unit_costs[r, s]``.

    ``unit_costs`` is per person.  Only open sites with a retained distance
    entry may receive population, and each open site serves at most its capacity.
    """
    open_idx = sorted(instance.site_index(s) for s in open_sites)
    pops = instance.populations
    caps = instance.capacities
    total = pops.sum()
    if caps is None:
        caps = np.full(len(instance.sites), total)
    if caps[open_idx].sum() < total - 1e-9:
        raise InfeasibleError(f"open capacity {caps[open_idx].sum():g} is below population {total:g}")
    cost = np.asarray(unit_costs, float)[:, open_idx]
    allowed = instance.distances.retained[:, open_idx] & np.isfinite(cost)
    cost = np.where(allowed, cost, 0.0)
    F = _min_cost_flow(pops, caps[open_idx], cost, allowed)
    F = _to_vertex(F, cost, tol=1e-12 * max(1.0, total))
    Y = np.zeros(instance.D.shape)
    Y[:, open_idx] = F / pops[:, None]
    return Y
