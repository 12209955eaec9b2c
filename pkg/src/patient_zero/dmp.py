"""Random sensors + reverse dissemination + dynamic message passing.

``P_S^i(t)`` below is the probability that node ``i`` has not been exposed
by the end of day ``t``.  A node exposed on day ``e`` transmits on days
``e + T_E, ..., e + T_E + L - 1`` where ``L`` depends on its course, and a
successful attempt on day ``t`` exposes the neighbour on day ``t``.  Message
passing is exact on trees.  Household cliques are replaced by stars around
an extra centre node per household before the messages are run, so that
households do not create short loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .epidemic import EpidemicParams
from .network import Graph
from .sdctf import Session

NEVER = 10 ** 9


class StarGraph(Graph):
    """HNM graph whose household cliques were replaced by stars.

    Nodes ``0..n_members-1`` are the original agents; node
    ``n_members + hid`` is the centre of household ``hid``.
    """

    def __init__(self, adjacency, household_of, n_members: int, params=None):
        super().__init__(adjacency, household_of, params)
        self.n_members = n_members

    def is_centre(self, v) -> bool:
        return v >= self.n_members

    def centre_of(self, v) -> int:
        return self.n_members + int(self.household_of[v])


def star_transform(g: Graph) -> StarGraph:
    hids = sorted(g.households)
    index = {hid: i for i, hid in enumerate(hids)}
    n = g.n
    adjacency = []
    for v in range(n):
        mates = set(g.household(v))
        external = [u for u in g.neighbors(v) if u not in mates]
        adjacency.append(tuple(sorted(external + [n + index[g.household_id(v)]])))
    for hid in hids:
        adjacency.append(tuple(g.households[hid]))
    household_of = np.concatenate([[index[h] for h in g.household_of.tolist()], np.arange(len(hids))])
    return StarGraph(adjacency, household_of, n, g.params)


@dataclass
class DmpModel:
    """Directed-edge arrays for message passing on a fixed graph."""

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    rev: np.ndarray
    lam: np.ndarray
    latency: np.ndarray  # per edge, T_E of the sender
    course_pi: np.ndarray  # (edges, courses)
    course_len: np.ndarray  # (edges, courses); NEVER for no recovery
    params: EpidemicParams
    n_members: int

    @classmethod
    def from_graph(cls, g, params: EpidemicParams, star: bool = True) -> "DmpModel":
        """Build messages for ``g``; with ``star`` the households become stars
        whose centres have a one-day latency, take the infection from a member
        with certainty and pass it on with probability ``p_i``."""
        h = star_transform(g) if star else g
        n_members = h.n_members if star else g.n
        src, dst = [], []
        for v in range(h.n):
            for u in h.neighbors(v):
                src.append(v)
                dst.append(u)
        src = np.array(src, dtype=np.int64)
        dst = np.array(dst, dtype=np.int64)
        order = {(a, b): i for i, (a, b) in enumerate(zip(src.tolist(), dst.tolist()))}
        rev = np.array([order[(b, a)] for a, b in zip(src.tolist(), dst.tolist())], dtype=np.int64)

        recover = NEVER if params.no_recovery else params.T_I
        member_pi = [params.p_a + (1 - params.p_a) * (1 - params.p_h), params.p_hospitalized]
        member_len = [recover, params.T_H]
        centre = src >= n_members
        lam = np.where(dst >= n_members, 1.0, params.p_i)
        latency = np.where(centre, 1, params.T_E)
        course_pi = np.where(centre[:, None], [1.0, 0.0], member_pi)
        course_len = np.where(centre[:, None], [recover, recover], member_len).astype(np.int64)
        return cls(h.n, src, dst, rev, lam, latency, course_pi, course_len, params, n_members)


@dataclass
class DmpResult:
    t0: int
    ps: np.ndarray  # (nodes, days) with column j holding day t0 + j

    @property
    def t_end(self) -> int:
        return self.t0 + self.ps.shape[1] - 1

    def marginal(self, v, t: int) -> float:
        """P(v not exposed by the end of day t)."""
        if t < self.t0:
            return 1.0
        if t > self.t_end:
            raise ValueError(f"day {t} is past the computed horizon {self.t_end}")
        return float(self.ps[v, t - self.t0])


def _node_products(theta, dst, n_nodes):
    """Zero-safe products of incoming messages: (log of nonzero part, zeros)."""
    zero = theta <= 0.0
    logs = np.log(np.where(zero, 1.0, theta))
    return (np.bincount(dst, weights=logs, minlength=n_nodes),
            np.bincount(dst, weights=zero, minlength=n_nodes))


def dmp_marginals(model: DmpModel, source: int, t0: int, t_end: int, eps: float = 0.01,
                  removal: str = "exact") -> DmpResult:
    """Iterate the message equations from ``source`` exposed on day ``t0``.

    Only messages whose sender is infected with probability above ``eps``
    are updated; ``eps=0`` gives the exact recursion on trees.
    ``removal="damped"`` damps the infectious mass by the probability of a
    recovery on that day instead of removing each course exactly.
    """
    if removal not in ("exact", "damped"):
        raise ValueError("removal must be 'exact' or 'damped'")
    params = model.params
    E, C = model.course_pi.shape
    n = model.n_nodes
    steps = max(t_end - t0, 0)
    finite_len = np.where(model.course_len < NEVER, model.course_len, 0)
    lag = int(model.latency.max() + finite_len.max() + 2)
    if removal == "damped":
        lag = max(lag, int(model.latency.max() + params.T_I + 2))

    p0 = np.ones(n)
    p0[source] = 0.0
    # column lag + j holds day t0 + j; earlier columns are the all-susceptible past
    hist = np.ones((E, lag + steps + 1))
    hist[:, lag] = p0[model.src]
    ps = np.ones((n, steps + 1))
    ps[:, 0] = p0

    theta = np.ones(E)
    phi = np.zeros((E, C))
    lam = model.lam
    keep = 1.0 - lam
    rows = np.arange(E)
    decay = np.where(model.course_len < NEVER, keep[:, None] ** np.minimum(model.course_len, 10 ** 6), 0.0)
    has_end = model.course_len < NEVER

    for j in range(1, steps + 1):
        col = lag + j
        base = col - model.latency
        new = hist[rows, base - 1] - hist[rows, base]
        if removal == "exact":
            old_base = base[:, None] - model.course_len.clip(max=col)
            old = np.where(has_end, hist[rows[:, None], (old_base - 1).clip(0)] - hist[rows[:, None], old_base.clip(0)], 0.0)
            phi = keep[:, None] * phi + model.course_pi * (new[:, None] - decay * old)
        else:
            rb = base - params.T_I
            recovered = hist[rows, rb - 1] - hist[rows, rb]
            damp = 0.0 if params.no_recovery else recovered
            phi = keep[:, None] * (1.0 - damp)[:, None] * phi + model.course_pi * new[:, None]
        active = (1.0 - hist[:, col - 1]) > eps
        theta = np.where(active, theta - lam * phi.sum(axis=1), theta)
        np.clip(theta, 0.0, 1.0, out=theta)

        logs, zeros = _node_products(theta, model.dst, n)
        ps[:, j] = p0 * np.where(zeros > 0, 0.0, np.exp(logs))
        # cavity: leave out the message coming back from the receiver
        back = theta[model.rev]
        back_zero = back <= 0.0
        cav_zeros = zeros[model.src] - back_zero
        cav = np.exp(logs[model.src] - np.log(np.where(back_zero, 1.0, back)))
        hist[:, col] = p0[model.src] * np.where(cav_zeros > 0, 0.0, np.minimum(cav, 1.0))
    return DmpResult(t0, ps)


# --- observations, feasible sources and scoring ------------------------------

@dataclass(frozen=True)
class Observation:
    node: int
    kind: str  # "symptomatic", "positive" (no onset) or "negative"
    day: int  # onset day for symptomatic, test day otherwise


def exposure_bounds(observations, params: EpidemicParams) -> dict:
    """Per node, the earliest and latest exposure day consistent with its
    test results."""
    bounds: dict = {}
    for ob in observations:
        lo, hi = bounds.get(ob.node, (-math.inf, math.inf))
        if ob.kind == "symptomatic":
            e = ob.day - params.onset_delay
            lo, hi = max(lo, e), min(hi, e)
        elif ob.kind == "negative":
            lo = max(lo, ob.day - params.T_E + 1)
        else:
            hi = min(hi, ob.day - params.T_E)
        bounds[ob.node] = (lo, hi)
    return bounds


@dataclass(frozen=True)
class CandidatePair:
    node: int
    start_time: int
    score: float = 0.0


def feasible_sources(observations, g, params: EpidemicParams, k1: int = 5, k2: int = 5,
                     t_min: int | None = None, window: int = 60) -> list[CandidatePair]:
    """Latest (node, exposure day) pairs that can explain the ``k1`` earliest
    symptomatic observations, by backward search over (node, day) pairs.

    A pair ``(u, t')`` can cause ``(w, t)`` when ``u`` and ``w`` are in
    contact and ``u`` is infectious on day ``t``.  Intermediate nodes must
    respect their own test results.  The search walks days downwards and
    stops once ``k2`` complete explanations exist that no later step can
    outrank.
    """
    sym = sorted((ob for ob in observations if ob.kind == "symptomatic"), key=lambda o: (o.day, o.node))
    seen, first = set(), []
    for ob in sym:
        if ob.node not in seen:
            seen.add(ob.node)
            first.append(ob)
    first = first[:k1]
    if not first:
        return []
    if len(first) > 62:
        raise ValueError("at most 62 observations can be tracked at once")
    delay = params.onset_delay
    starts = [ob.day - delay for ob in first]
    t_max = max(starts)
    if t_min is None:
        t_min = min(starts) - window
    span = t_max - t_min + 1
    if span <= 0:
        return []
    bounds = exposure_bounds(observations, params)
    n = g.n
    lo = np.full(n, t_min, dtype=np.int64)
    hi = np.full(n, t_max, dtype=np.int64)
    for v, (a, b) in bounds.items():
        if a > -math.inf:
            lo[v] = max(t_min, a)
        if b < math.inf:
            hi[v] = min(t_max, b)
    reach = params.T_I if not params.no_recovery else span
    reach = max(reach, params.T_H)

    full = (1 << len(first)) - 1
    masks = np.zeros((span, n), dtype=np.int64)  # row i is day t_max - i
    for i, (ob, e) in enumerate(zip(first, starts)):
        if lo[ob.node] <= e <= hi[ob.node]:
            masks[t_max - e, ob.node] |= 1 << i
    csr = g.to_csr()
    indptr, indices = csr.indptr, csr.indices
    nonempty = np.diff(indptr) > 0
    starts_idx = indptr[:-1][nonempty]

    for t in range(t_max, t_min - 1, -1):
        row = masks[t_max - t]
        if row.any() and indices.size:
            # OR the masks of every neighbour exposed on day t
            spread = np.zeros(n, dtype=np.int64)
            spread[nonempty] = np.bitwise_or.reduceat(row[indices], starts_idx)
            if spread.any():
                for tp in range(t - params.T_E, max(t - params.T_E - reach, t_min - 1), -1):
                    ok = (lo <= tp) & (tp <= hi)
                    masks[t_max - tp] |= np.where(ok, spread, 0)
        # pairs on day t - T_E or later can no longer change
        done_rows = np.nonzero((masks == full).any(axis=1))[0]
        if done_rows.size:
            times = np.sort(t_max - np.nonzero(masks == full)[0])[::-1]
            if times.size >= k2 and times[k2 - 1] >= t - params.T_E:
                break
    done = np.argwhere(masks == full)
    pairs = sorted(((t_max - int(r), int(v)) for r, v in done), key=lambda x: (-x[0], x[1]))
    return [CandidatePair(v, t) for t, v in pairs[:k2]]


def score_pair(result: DmpResult, observations, params: EpidemicParams) -> float:
    """Log-likelihood proxy of the observations under one (source, day)."""
    total = 0.0
    for ob in observations:
        if ob.kind == "symptomatic":
            e = ob.day - params.onset_delay
            term = result.marginal(ob.node, e - 1) - result.marginal(ob.node, e)
        elif ob.kind == "negative":
            term = result.marginal(ob.node, ob.day - params.T_E)
        else:
            term = 1.0 - result.marginal(ob.node, ob.day - params.T_E)
        if term <= 0.0:
            return -math.inf
        total += math.log(term)
    return total


def observation_horizon(observations, params: EpidemicParams) -> int:
    days = [ob.day - params.onset_delay if ob.kind == "symptomatic" else ob.day - params.T_E
            for ob in observations]
    return max(days)


def rank_candidates(pairs, observations, g, params: EpidemicParams, model: DmpModel | None = None,
                    eps: float = 0.01) -> list[CandidatePair]:
    """Score each pair by message passing; best first (ties keep the search
    order, latest start first)."""
    model = model or DmpModel.from_graph(g, params)
    horizon = observation_horizon(observations, params)
    scored = []
    for pair in pairs:
        result = dmp_marginals(model, pair.node, pair.start_time, max(horizon, pair.start_time), eps)
        scored.append(CandidatePair(pair.node, pair.start_time, score_pair(result, observations, params)))
    order = sorted(range(len(scored)), key=lambda i: (-scored[i].score, i))
    return [scored[i] for i in order]


@dataclass
class DmpOutcome:
    estimate: int
    candidates: list
    sensors: list
    fell_back: bool


def collect_observations(session: Session, nodes) -> list[Observation]:
    """Test ``nodes`` through the session, one capped batch per day."""
    obs = [Observation(session.first_hospitalized, "symptomatic", session.first_hospitalized_onset)]
    for v in nodes:
        session.submit_test(v)
    while session.pending:
        for v, r in session.advance_day():
            day = session.clock - 1 if not session.freeze_epidemic else session.t_h
            if r.has_onset:
                obs.append(Observation(v, "symptomatic", r.onset))
            elif r.negative:
                obs.append(Observation(v, "negative", day))
            else:
                obs.append(Observation(v, "positive", day))
    return obs


def run_random_dmp(session: Session, n_sensors: int, k1: int = 5, k2: int = 5, seed=None,
                   eps: float = 0.01, window: int = 60) -> DmpOutcome:
    """Random sensor placement followed by feasible-source search and
    message-passing scores.  Falls back to the hospitalized node when no
    pair explains the observations."""
    g = session.reveal_network()
    rng = np.random.default_rng(seed)
    h = session.first_hospitalized
    others = np.array([v for v in range(g.n) if v != h])
    count = int(min(max(n_sensors, 0), others.size))
    sensors = rng.choice(others, size=count, replace=False).tolist() if count else []
    obs = collect_observations(session, sensors)
    pairs = feasible_sources(obs, g, session.params, k1, k2, window=window)
    if not pairs:
        return DmpOutcome(h, [], sensors, True)
    ranked = rank_candidates(pairs, obs, g, session.params, eps=eps)
    return DmpOutcome(ranked[0].node, ranked, sensors, False)
