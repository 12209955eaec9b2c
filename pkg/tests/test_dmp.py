import math

import numpy as np
import pytest

from patient_zero.dmp import (CandidatePair, DmpModel, Observation, dmp_marginals, exposure_bounds,
                              feasible_sources, rank_candidates, run_random_dmp, score_pair, star_transform)
from patient_zero.epidemic import Course, EpidemicParams, seed_state, step
from patient_zero.network import NetworkParams, generate_hnm
from patient_zero.sdctf import NoOutbreakError, open_session
from patient_zero.validation import exact_tree_marginals, monte_carlo_marginals, tree_suite, tree_graph

P = EpidemicParams()


def test_star_transform_counts():
    g = generate_hnm(NetworkParams(30, 2, 3), 0)
    s = star_transform(g)
    assert s.n == 30 + 10
    for v in range(30):
        mates = set(g.household(v)) - {v}
        assert not mates & set(s.neighbors(v))
        assert s.centre_of(v) in s.neighbors(v)
        assert set(s.neighbors(v)) - {s.centre_of(v)} == set(g.neighbors(v)) - mates
    for c in range(30, 40):
        assert s.is_centre(c) and len(s.neighbors(c)) == 3


def test_isolated_source():
    g = tree_graph([(1, 2)], n=3)
    r = dmp_marginals(DmpModel.from_graph(g, P, star=False), 0, 0, 10, eps=0.0)
    assert np.all(r.ps[0] == 0) and np.all(r.ps[1:] == 1)


def test_single_edge_first_day():
    params = EpidemicParams(p_a=0.0, p_i=0.3)
    g = tree_graph([(0, 1)])
    r = dmp_marginals(DmpModel.from_graph(g, params, star=False), 0, 5, 20, eps=0.0)
    assert r.marginal(1, 5 + params.T_E - 1) == 1.0
    assert r.marginal(1, 5 + params.T_E) == pytest.approx(1 - params.p_i)


def test_path3_exact():
    g = tree_suite()["path3"]
    for params in (P, EpidemicParams.dde_nr(), EpidemicParams(p_i=0.6, T_I=4, T_P=1, T_H=3)):
        got = dmp_marginals(DmpModel.from_graph(g, params, star=False), 0, 0, 15, eps=0.0).ps
        assert np.abs(got - exact_tree_marginals(g, 0, 0, 15, params)).max() < 1e-9


def test_tree_oracle_matches_simulation():
    g = tree_suite()["binary7"]
    params = EpidemicParams(p_i=0.4, T_I=4, T_P=1, T_H=3)
    mc = monte_carlo_marginals(g, 0, 0, 12, params, 20_000, 1)
    exact = exact_tree_marginals(g, 0, 0, 12, params)
    se = np.sqrt(exact * (1 - exact) / 20_000)
    assert np.all(np.abs(mc - exact) <= 4.5 * se + 1e-12)


def test_messages_bounded_and_monotone_on_hnm():
    g = generate_hnm(NetworkParams(60, 2, 3), 2)
    r = dmp_marginals(DmpModel.from_graph(g, P), 4, 0, 40, eps=0.0)
    assert np.all((r.ps >= 0) & (r.ps <= 1))
    assert np.all(np.diff(r.ps, axis=1) <= 1e-12)


def test_threshold_close_to_exact():
    g = generate_hnm(NetworkParams(60, 2, 3), 2)
    model = DmpModel.from_graph(g, P)
    a = dmp_marginals(model, 4, 0, 30, eps=0.0).ps
    b = dmp_marginals(model, 4, 0, 30, eps=0.01).ps
    assert np.abs(a - b).max() < 0.05


def test_single_observation_is_self_explaining():
    g = tree_graph([(0, 1), (1, 2)])
    pairs = feasible_sources([Observation(2, "symptomatic", 20)], g, P)
    assert CandidatePair(2, 20 - P.onset_delay) in pairs
    assert pairs[0] == CandidatePair(2, 20 - P.onset_delay)


def test_chain_finds_true_start():
    g = tree_graph([(0, 1), (1, 2)])
    obs = [Observation(0, "symptomatic", 0 + P.onset_delay),
           Observation(1, "symptomatic", 4 + P.onset_delay),
           Observation(2, "symptomatic", 9 + P.onset_delay)]
    pairs = feasible_sources(obs, g, P, k1=10)
    assert pairs[0] == CandidatePair(0, 0)


def _forward_reach(g, node, start, bounds, params, horizon):
    """(w, day) pairs reachable from (node, start) under the exposure bounds."""
    longest = max(params.infectious_days(c) for c in Course)
    longest = horizon if math.isinf(longest) else longest
    reached = {(node, start)}
    frontier = [(node, start)]
    while frontier:
        v, t = frontier.pop()
        for u in g.neighbors(v):
            for t2 in range(t + params.T_E, min(t + params.T_E + longest, horizon + 1)):
                lo, hi = bounds.get(u, (-math.inf, math.inf))
                if lo <= t2 <= hi and (u, t2) not in reached:
                    reached.add((u, t2))
                    frontier.append((u, t2))
    return reached


def test_feasible_pairs_reach_every_observation():
    g = generate_hnm(NetworkParams(30, 2, 3), 7)
    rng = np.random.default_rng(1)
    for trial in range(5):
        state = seed_state(0, P, rng, Course.RECOVERING)
        while state.day < 25:
            step(state, g, P, rng)
        obs = [Observation(v, "symptomatic", tl.symptom_onset_day)
               for v, tl in state.timelines.items() if tl.symptom_onset_day is not None and tl.symptom_onset_day < 25]
        if len(obs) < 2:
            continue
        pairs = feasible_sources(obs, g, P, k1=3, k2=4)
        first = sorted(obs, key=lambda o: (o.day, o.node))[:3]
        bounds = exposure_bounds(obs, P)
        for pair in pairs:
            reach = _forward_reach(g, pair.node, pair.start_time, bounds, P, 30)
            for ob in first:
                assert (ob.node, ob.day - P.onset_delay) in reach


def test_duplicate_observation_doubles_log_score():
    g = tree_graph([(0, 1), (1, 2)])
    model = DmpModel.from_graph(g, P, star=False)
    r = dmp_marginals(model, 0, 0, 30, eps=0.0)
    ob = Observation(2, "symptomatic", 7 + P.onset_delay)
    assert score_pair(r, [ob, ob], P) == pytest.approx(2 * score_pair(r, [ob], P))


def test_full_observation_on_tree_ranks_true_source_first():
    g = tree_suite()["binary7"]
    params = EpidemicParams(p_a=0.0, p_h=0.0, p_i=0.5)
    rng = np.random.default_rng(4)
    state = seed_state(2, params, rng)
    while state.day < 14:
        step(state, g, params, rng)
    day = 14 + params.onset_delay
    obs = [Observation(v, "symptomatic", state.timelines[v].symptom_onset_day) if v in state.timelines
           else Observation(v, "negative", day) for v in range(g.n)]
    pairs = feasible_sources(obs, g, params, k1=g.n, k2=10)
    ranked = rank_candidates(pairs, obs, g, params, model=DmpModel.from_graph(g, params, star=False), eps=0.0)
    assert (ranked[0].node, ranked[0].start_time) == (2, 0)


def test_random_dmp_falls_back_or_explains_h():
    g = generate_hnm(NetworkParams(99, 2, 3), 0)
    for seed in range(10):
        try:
            s = open_session(g, P, seed, seed)
        except NoOutbreakError:
            continue
        out = run_random_dmp(s, 0, seed=seed)
        assert out.sensors == []
        assert out.fell_back or out.candidates[0].node is not None
        if not out.fell_back:
            pairs = feasible_sources([Observation(s.first_hospitalized, "symptomatic",
                                                  s.first_hospitalized_onset)], g, P)
            assert out.estimate in {p.node for p in pairs}
