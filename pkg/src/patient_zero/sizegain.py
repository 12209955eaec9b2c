"""Size-Gain: adaptive sensor placement over a shrinking candidate set.

Infection is assumed to travel one hop every ``mu`` days give or take
``sigma`` days per hop, with ``mu = T_E + (1 - p_i) / p_i`` the mean DDE
hop delay.  Every observation is turned into an interval of possible
exposure days (a point for a symptom onset, a half line for negative or
onset-free positive tests).  A candidate source ``s`` survives when some
start day ``t_s`` puts every observed node ``v`` within
``t_s + mu d(s, v) +- sigma d(s, v)`` of its interval.  For intervals on a
line this is the same as requiring the pairwise condition

    |(t2 - t1) - mu (d2 - d1)| <= sigma (d1 + d2)

for every pair of observations, one-sided where an interval is open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .dmp import Observation, exposure_bounds
from .epidemic import EpidemicParams
from .sdctf import Session


@dataclass(frozen=True)
class SgConfig:
    sigma: float | None = None
    deadline_day: int | None = None
    n_hypotheses: int = 200
    exact_limit: int = 1_000_000
    max_days: int = 365

    def __post_init__(self):
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def default_sigma(p_i: float) -> float:
    """Standard deviation of the geometric DDE hop delay."""
    return math.sqrt(1.0 - p_i) / p_i if p_i > 0 else math.inf


def hop_delay(params: EpidemicParams) -> float:
    return params.T_E + ((1.0 - params.p_i) / params.p_i if params.p_i > 0 else math.inf)


def all_pairs_distances(g) -> np.ndarray:
    return shortest_path(g.to_csr(), unweighted=True, directed=False)


def observation_interval(ob: Observation, params: EpidemicParams) -> tuple[float, float]:
    return exposure_bounds([ob], params)[ob.node]


def pair_constraint(i1, i2, d1: float, d2: float, mu: float, sigma: float) -> bool:
    """Pairwise Size-Gain test for two exposure intervals at distances
    ``d1, d2`` from the candidate."""
    if math.isinf(d1) or math.isinf(d2):
        return False
    lo = i2[0] - i1[1]
    hi = i2[1] - i1[0]
    shift = mu * (d2 - d1)
    band = sigma * (d1 + d2) if (d1 + d2) > 0 else 0.0
    return lo <= shift + band and hi >= shift - band


@dataclass
class SgState:
    dist: np.ndarray
    mu: float
    sigma: float
    candidates: np.ndarray  # bool mask over nodes
    start_lo: np.ndarray
    start_hi: np.ndarray
    observations: list = field(default_factory=list)

    @classmethod
    def initial(cls, dist: np.ndarray, h: int, mu: float, sigma: float) -> "SgState":
        n = dist.shape[0]
        reachable = np.isfinite(dist[:, h])
        return cls(dist, mu, sigma, reachable, np.full(n, -math.inf), np.full(n, math.inf))

    def candidate_set(self) -> set:
        return set(np.flatnonzero(self.candidates).tolist())


def sg_filter(state: SgState, ob: Observation, params: EpidemicParams) -> SgState:
    """Add one observation and drop candidates it rules out."""
    lo, hi = observation_interval(ob, params)
    d = state.dist[:, ob.node]
    finite = np.isfinite(d)
    hops = np.where(finite, d, 0.0)
    band = np.where(hops > 0, state.sigma * np.where(hops > 0, hops, 1.0), 0.0)
    reach = state.mu * hops
    with np.errstate(invalid="ignore"):
        new_lo = np.where(finite, lo - reach - band, -math.inf)
        new_hi = np.where(finite, hi - reach + band, math.inf if ob.kind == "negative" else -math.inf)
    state.start_lo = np.maximum(state.start_lo, new_lo)
    state.start_hi = np.minimum(state.start_hi, new_hi)
    state.candidates &= state.start_lo <= state.start_hi
    state.observations.append(ob)
    return state


def hypotheses(state: SgState, rng, limit: int, sensors: int, exact_limit: int, span: int = 60):
    """(node, start day) pairs under the uniform prior, sampled when the
    full table would exceed ``exact_limit`` predictions."""
    nodes, starts = [], []
    for s in np.flatnonzero(state.candidates).tolist():
        lo, hi = state.start_lo[s], state.start_hi[s]
        lo = math.ceil(lo) if math.isfinite(lo) else (math.floor(hi) - span if math.isfinite(hi) else -span)
        hi = math.floor(hi) if math.isfinite(hi) else lo + span
        if hi < lo:
            # the feasible window holds no whole day; keep its nearest day
            lo = hi = int(round((state.start_lo[s] + state.start_hi[s]) / 2))
        count = hi - lo + 1
        nodes.append(np.full(count, s))
        starts.append(np.arange(lo, hi + 1))
    if not nodes:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    nodes = np.concatenate(nodes)
    starts = np.concatenate(starts).astype(float)
    if nodes.size * max(sensors, 1) > exact_limit and nodes.size > limit:
        pick = rng.choice(nodes.size, size=limit, replace=False)
        nodes, starts = nodes[pick], starts[pick]
    return nodes, starts


def sg_rank_sensors(state: SgState, params: EpidemicParams, test_day: int, untested, rng,
                    cfg: SgConfig = SgConfig()) -> list:
    """Untested nodes ordered by the expected number of candidates left
    after observing them (fewest first, ties by node id)."""
    untested = np.asarray(sorted(untested), dtype=np.int64)
    if untested.size == 0:
        return []
    nodes, starts = hypotheses(state, rng, cfg.n_hypotheses, untested.size, cfg.exact_limit)
    if nodes.size == 0:
        return untested.tolist()
    d = state.dist[np.ix_(nodes, untested)]
    exposure = starts[:, None] + state.mu * d
    negative = ~(exposure <= test_day - params.T_E)
    keys = np.rint(np.where(negative, 0.0, exposure)).astype(np.int64)
    keys[negative] = np.iinfo(np.int64).max
    total = nodes.size
    expected = np.empty(untested.size)
    for j in range(untested.size):
        order = np.lexsort((nodes, keys[:, j]))
        k, v = keys[order, j], nodes[order]
        new_group = np.r_[True, k[1:] != k[:-1]]
        new_pair = new_group | np.r_[True, v[1:] != v[:-1]]
        group_id = np.cumsum(new_group) - 1
        size = np.bincount(group_id)
        distinct = np.bincount(group_id, weights=new_pair)
        expected[j] = float(size @ distinct) / total
    order = np.lexsort((untested, expected))
    return untested[order].tolist()


def sg_next_sensor(state: SgState, params: EpidemicParams, test_day: int, untested, rng=None,
                   cfg: SgConfig = SgConfig()):
    ranked = sg_rank_sensors(state, params, test_day, untested, np.random.default_rng(rng), cfg)
    return ranked[0] if ranked else None


@dataclass
class SgOutcome:
    estimate: int
    candidates: set
    sensors: list
    fell_back: bool
    forced_choice: bool


def run_sg(session: Session, cfg: SgConfig = SgConfig(), seed=None) -> SgOutcome:
    """Place sensors day by day until one candidate is left or the deadline
    passes, then pick uniformly among what is left."""
    g = session.reveal_network()
    params = session.params
    rng = np.random.default_rng(seed)
    sigma = default_sigma(params.p_i) if cfg.sigma is None else cfg.sigma
    dist = all_pairs_distances(g)
    h = session.first_hospitalized
    state = SgState.initial(dist, h, hop_delay(params), sigma)
    sg_filter(state, Observation(h, "symptomatic", session.first_hospitalized_onset), params)
    untested = set(range(g.n)) - {h}
    sensors = []
    cap = session.daily_test_cap or g.n
    last_day = session.t_h + cfg.max_days if cfg.deadline_day is None else cfg.deadline_day
    while state.candidates.sum() > 1 and untested and session.clock < last_day:
        test_day = session.t_h if session.freeze_epidemic else session.clock
        batch = sg_rank_sensors(state, params, test_day, untested, rng, cfg)[:cap]
        for v in batch:
            session.submit_test(v)
            untested.discard(v)
            sensors.append(v)
        for v, r in session.advance_day():
            if r.has_onset:
                ob = Observation(v, "symptomatic", r.onset)
            else:
                ob = Observation(v, "negative" if r.negative else "positive", test_day)
            sg_filter(state, ob, params)
    left = np.flatnonzero(state.candidates)
    if left.size == 0:
        return SgOutcome(h, set(), sensors, True, False)
    if left.size == 1:
        return SgOutcome(int(left[0]), {int(left[0])}, sensors, False, False)
    return SgOutcome(int(rng.choice(left)), set(left.tolist()), sensors, False, True)
