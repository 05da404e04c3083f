"""Exact transportation LP solvers: network simplex and permutation brute force."""

from __future__ import annotations

import itertools
import time
from collections import deque

import numpy as np

from occlab.transport.problem import (
    DEFAULT_ENTRY_CAP,
    SizeCapExceeded,
    SolveReport,
    TransportPlan,
    TransportProblem,
    cost_matrix,
)

# After this many consecutive degenerate pivots, switch from the most-negative
# entering rule to Bland's lowest-index rule until progress resumes.
_BLAND_TRIGGER = 64


def _initial_tree_northwest(a, b):
    """Northwest-corner basic feasible solution on the bipartite grid.

    Returns basis arcs as parallel index arrays plus their flows; exactly
    m + n - 1 arcs, forming a spanning tree (degenerate zero flows allowed).
    """
    m, n = a.size, b.size
    rows = np.empty(m + n - 1, dtype=np.intp)
    cols = np.empty(m + n - 1, dtype=np.intp)
    flow = np.empty(m + n - 1)
    ra = a.astype(float).copy()
    rb = b.astype(float).copy()
    i = j = k = 0
    while k < m + n - 1:
        rows[k] = i
        cols[k] = j
        move = min(ra[i], rb[j])
        flow[k] = move
        ra[i] -= move
        rb[j] -= move
        k += 1
        at_last_row = i == m - 1
        at_last_col = j == n - 1
        if at_last_row and at_last_col:
            break
        # advance along the exhausted side; prefer the row on ties so the
        # basis stays a tree (deterministic)
        if ra[i] <= rb[j] and not at_last_row:
            i += 1
        else:
            j += 1
    return rows[:k], cols[:k], flow[:k]


class _BasisTree:
    """Spanning-tree basis over nodes [sources 0..m-1, sinks m..m+n-1]."""

    def __init__(self, m, n, rows, cols, flows):
        self.m = m
        self.n = n
        self.adj = {node: set() for node in range(m + n)}
        self.flow = {}
        for i, j, f in zip(rows, cols, flows):
            self._add_arc(int(i), int(j) + m, float(f))

    def _add_arc(self, u, v, f):
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.flow[self._key(u, v)] = f

    def _remove_arc(self, u, v):
        self.adj[u].discard(v)
        self.adj[v].discard(u)
        del self.flow[self._key(u, v)]

    @staticmethod
    def _key(u, v):
        return (u, v) if u < v else (v, u)

    def potentials(self, C):
        """Duals (u, v) with u_i + v_j = C_ij on every basic arc."""
        m, n = self.m, self.n
        u = np.zeros(m)
        v = np.zeros(n)
        seen = np.zeros(m + n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            node = stack.pop()
            for nxt in self.adj[node]:
                if seen[nxt]:
                    continue
                seen[nxt] = True
                if node < m:  # source -> sink
                    v[nxt - m] = C[node, nxt - m] - u[node]
                else:  # sink -> source
                    u[nxt] = C[nxt, node - m] - v[node - m]
                stack.append(nxt)
        return u, v

    def path(self, start, goal):
        """Unique tree path from start to goal (list of nodes)."""
        prev = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nxt in self.adj[node]:
                if nxt not in prev:
                    prev[nxt] = node
                    queue.append(nxt)
        path = [goal]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        path.reverse()
        return path

    def pivot(self, enter_i, enter_j):
        """Bring arc (i, j) into the basis; return leaving arc and step size.

        The cycle alternates orientation along the tree path from sink back
        to source; flow increases on forward arcs and decreases on reverse
        arcs.  The leaving arc is the reverse arc with the smallest flow,
        lowest (i, j) on ties.
        """
        m = self.m
        nodes = self.path(enter_j + m, enter_i)  # sink ... source
        # Traversal starts at the entering arc's sink, so arcs walked
        # sink->source carry decreasing flow (reverse) and arcs walked
        # source->sink carry increasing flow (forward).
        segs = []
        for k in range(len(nodes) - 1):
            x, y = nodes[k], nodes[k + 1]
            if x >= m:  # sink -> source: reverse arc (y, x)
                segs.append((y, x - m, -1))
            else:  # source -> sink: forward arc (x, y)
                segs.append((x, y - m, +1))
        rev = [(i, j) for i, j, s in segs if s < 0]
        theta = min(self.flow[self._key(i, j + m)] for i, j in rev)
        leaving = min(
            (i, j) for i, j in rev if self.flow[self._key(i, j + m)] <= theta
        )
        for i, j, sign in segs:
            self.flow[self._key(i, j + m)] += sign * theta
        self._add_arc(enter_i, enter_j + m, theta)
        self._remove_arc(leaving[0], leaving[1] + m)
        return leaving, theta

    def plan_arrays(self):
        rows, cols, flows = [], [], []
        for (x, y), f in self.flow.items():
            i, j = (x, y - self.m) if x < self.m else (y, x - self.m)
            rows.append(i)
            cols.append(j)
            flows.append(f)
        order = np.lexsort((cols, rows))
        return (
            np.asarray(rows, dtype=np.intp)[order],
            np.asarray(cols, dtype=np.intp)[order],
            np.asarray(flows)[order],
        )


def wasserstein_exact(
    problem: TransportProblem,
    entry_cap: int = DEFAULT_ENTRY_CAP,
    max_pivots: int | None = None,
):
    """Exact optimum of the transportation LP by primal network simplex.

    Entering arc: most negative reduced cost, lowest flat index on ties;
    after a run of degenerate pivots the rule switches to Bland's
    lowest-index rule, which prevents cycling.  Returns (plan, report).
    """
    t0 = time.perf_counter()
    if problem.is_empty:
        plan = TransportPlan(np.zeros(0, np.intp), np.zeros(0, np.intp), np.zeros(0), 0.0)
        return plan, SolveReport("exact", 0.0, wall_time=time.perf_counter() - t0)
    if problem.matrix_entries() > entry_cap:
        raise SizeCapExceeded(
            f"{problem.matrix_entries()} cost entries exceed cap {entry_cap}; "
            "use wasserstein_entropic"
        )
    C = cost_matrix(problem)
    a = problem.source.masses
    # rescale the target so the balance is exact, not just within tolerance
    b = problem.target.masses * (problem.source.total_mass / problem.target.total_mass)
    m, n = a.size, b.size
    tree = _BasisTree(m, n, *_initial_tree_northwest(a, b))
    tol = 1e-12 * max(1.0, float(np.max(C)))
    if max_pivots is None:
        max_pivots = 200 * (m + n) + 10_000
    degenerate_run = 0
    pivots = 0
    while pivots < max_pivots:
        u, v = tree.potentials(C)
        reduced = C - u[:, None] - v[None, :]
        if degenerate_run < _BLAND_TRIGGER:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -tol:
                break
        else:
            negative = np.flatnonzero(reduced.ravel() < -tol)
            if negative.size == 0:
                break
            flat = int(negative[0])
        enter_i, enter_j = divmod(flat, n)
        _, theta = tree.pivot(enter_i, enter_j)
        degenerate_run = degenerate_run + 1 if theta <= tol else 0
        pivots += 1
    else:
        raise RuntimeError("network simplex exceeded pivot budget")
    rows, cols, flows = tree.plan_arrays()
    keep = flows > 0
    cost = float(np.sum(flows * C[rows, cols]))
    plan = TransportPlan(rows[keep], cols[keep], flows[keep], cost)
    report = SolveReport(
        "exact", cost, gap_bound=0.0, iterations=pivots,
        wall_time=time.perf_counter() - t0,
    )
    return plan, report


def wasserstein_bruteforce(problem: TransportProblem, n_cap: int = 8) -> float:
    """Exhaustive assignment minimum for equal counts and uniform masses.

    Equals the LP optimum on such instances because the coupling polytope's
    vertices are permutation matrices (Birkhoff).
    """
    ns, nt = len(problem.source), len(problem.target)
    if ns != nt:
        raise ValueError("brute force requires equal atom counts")
    if ns == 0:
        return 0.0
    if ns > n_cap:
        raise ValueError(f"brute force capped at n <= {n_cap}")
    w = problem.source.masses
    if not (
        np.allclose(w, w[0], rtol=1e-12, atol=0)
        and np.allclose(problem.target.masses, w[0], rtol=1e-12, atol=0)
    ):
        raise ValueError("brute force requires uniform equal masses")
    C = cost_matrix(problem)
    best = np.inf
    for perm in itertools.permutations(range(ns)):
        total = C[range(ns), perm].sum()
        if total < best:
            best = total
    return float(best * w[0])
