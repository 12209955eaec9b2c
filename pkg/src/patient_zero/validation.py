"""Independent oracles and hand-built worlds used by ``validate`` and the tests."""

from __future__ import annotations

from collections import deque

import numpy as np

from .analytic import classify_path
from .epidemic import (Course, EpidemicParams, EpidemicState, FirstHospitalization,
                       make_timeline)
from .network import Graph, RBTree, rb_paths
from .sdctf import Session


def tree_graph(edges, n: int | None = None) -> Graph:
    """A plain graph from an edge list, every node its own household."""
    n = n if n is not None else 1 + max(max(e) for e in edges)
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return Graph([tuple(sorted(a)) for a in adj], np.arange(n))


def tree_suite() -> dict:
    """Small trees of at most 12 nodes: paths, stars and binary trees."""
    trees = {
        "path3": [(0, 1), (1, 2)],
        "path6": [(i, i + 1) for i in range(5)],
        "path12": [(i, i + 1) for i in range(11)],
        "star5": [(0, i) for i in range(1, 5)],
        "star12": [(0, i) for i in range(1, 12)],
        "binary7": [((i - 1) // 2, i) for i in range(1, 7)],
        "binary12": [((i - 1) // 2, i) for i in range(1, 12)],
        "spider10": [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (0, 6), (6, 7), (7, 8), (8, 9)],
    }
    return {name: tree_graph(edges) for name, edges in trees.items()}


def _tree_path(g, source, target) -> list:
    parent = {source: None}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if u not in parent:
                parent[u] = v
                queue.append(u)
    if target not in parent:
        return []
    path = [target]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def exact_tree_marginals(g, source, t0: int, t_end: int, params: EpidemicParams) -> np.ndarray:
    """``P(node not exposed by day t)`` on a tree, computed hop by hop along
    the unique path from the source.  Each hop adds the latency plus a
    geometric wait truncated by the sender's infectious period, mixed over
    the sender's disease course; days past the horizon are dropped.

    Returns an array indexed by ``[node, t - t0]``.
    """
    courses = [(params.p_a, params.infectious_days(Course.ASYMPTOMATIC)),
               ((1 - params.p_a) * (1 - params.p_h), params.infectious_days(Course.RECOVERING)),
               ((1 - params.p_a) * params.p_h, params.infectious_days(Course.HOSPITALIZED))]
    lam = params.p_i
    width = t_end - t0 + 1
    # kernel[k]: probability that one hop takes exactly k days
    kernel = np.zeros(width)
    for pi, length in courses:
        for d in range(max(0, min(width - params.T_E, length if length != np.inf else width))):
            kernel[params.T_E + d] += pi * lam * (1 - lam) ** d
    out = np.ones((g.n, width))
    for v in range(g.n):
        path = _tree_path(g, source, v)
        if not path:
            continue
        hits = np.zeros(width)
        hits[0] = 1.0
        for _ in range(len(path) - 1):
            hits = np.convolve(hits, kernel)[:width]
        out[v] = 1.0 - np.cumsum(hits)
    return out


def monte_carlo_marginals(g, source, t0: int, t_end: int, params: EpidemicParams, reps: int, rng) -> np.ndarray:
    """Empirical ``P(not exposed by day t)`` from the day-by-day simulator."""
    from .epidemic import seed_state, step

    rng = np.random.default_rng(rng)
    counts = np.zeros((g.n, t_end - t0 + 1))
    for _ in range(reps):
        state = seed_state(source, params, rng)
        while state.day <= t_end - t0:
            step(state, g, params, rng)
        for v, tl in state.timelines.items():
            counts[v, tl.exposure_day:] += 1
    return 1.0 - counts / reps


def brute_force_class_counts(d_c: int, d_h: int, n: int) -> dict:
    """Count root paths of length ``n`` per (k, alpha, beta) by enumeration."""
    tree = RBTree(d_c, d_h)
    counts: dict = {}
    for path in rb_paths(tree, n):
        key = classify_path(tree, path)
        counts[key] = counts.get(key, 0) + 1
    return counts


# --- hand-built tree worlds ---------------------------------------------

def _world(tree, params, entries, h):
    state = EpidemicState(0, {}, entries[0][0])
    for node, day, course, infector in entries:
        state.timelines[node] = make_timeline(day, course, infector, params)
    t_h = state.timelines[h].hospitalization_day
    state.day = t_h
    return FirstHospitalization(state, h, t_h, None)


def bridge_world(which: str):
    """Two red-blue tree outbreaks in which asymptomatic nodes hide the path.

    ``a``: the middle household on the path holds only asymptomatic path
    nodes, yet LS+ still reaches the source through a symptomatic housemate.
    ``b``: LS+ reaches the source only if it drains its queue before moving
    to the first improved candidate.

    Returns ``(tree, params, found, names)``; wrap it with :func:`bridge_session`.
    """
    tree = RBTree(3, 2)
    params = EpidemicParams.dde_nr()
    A, R, H = Course.ASYMPTOMATIC, Course.RECOVERING, Course.HOSPITALIZED
    if which == "a":
        v1, v2, v3, v4, v5 = (), (0,), (0, 2), (0, 3), (0, 2, 0)
        entries = [(v1, 0, R, None), (v2, 3, A, v1), (v3, 6, A, v2), (v4, 7, R, v2), (v5, 9, H, v3)]
    elif which == "b":
        v1, v2, v3, v4, v5 = (), (3,), (3, 0), (3, 0, 0), (3, 0, 2)
        entries = [(v1, 0, R, None), (v2, 3, A, v1), (v3, 6, A, v2), (v4, 9, R, v3), (v5, 10, H, v3)]
    else:
        raise ValueError("scenario must be 'a' or 'b'")
    names = dict(zip(("v1", "v2", "v3", "v4", "v5"), (v1, v2, v3, v4, v5)))
    return tree, params, _world(tree, params, entries, v5), names


def bridge_session(which: str) -> tuple[Session, dict]:
    tree, params, found, names = bridge_world(which)
    return Session(tree, params, found, freeze_epidemic=True), names
