import io

import pytest

from patient_zero.epidemic import Course, EpidemicParams, EpidemicState, FirstHospitalization, make_timeline
from patient_zero.network import NetworkParams, generate_hnm
from patient_zero.sdctf import (NEGATIVE, POSITIVE_NO_ONSET, NoOutbreakError, ResultKind, Session,
                                default_test_cap, evaluate_test, open_session)
from patient_zero.validation import tree_graph

P = EpidemicParams()


def _frozen(g, entries, h):
    state = EpidemicState(0, {}, entries[0][0])
    for v, day, course, infector in entries:
        state.timelines[v] = make_timeline(day, course, infector, P)
    t_h = state.timelines[h].hospitalization_day
    state.day = t_h
    return Session(g, P, FirstHospitalization(state, h, t_h, None), freeze_epidemic=True)


def test_certain_hospitalization_makes_source_first():
    g = generate_hnm(NetworkParams(30, 2, 3), 0)
    s = open_session(g, EpidemicParams(p_a=0, p_h=1), 5, 1)
    assert s.first_hospitalized == 5 == s.true_source


def test_no_outbreak_raises():
    g = tree_graph([(0, 1)])
    with pytest.raises(NoOutbreakError):
        open_session(g, EpidemicParams(p_a=1.0), 0, 0)


def test_ledger_and_queries():
    g = generate_hnm(NetworkParams(30, 2, 3), 0)
    s = open_session(g, EpidemicParams(p_a=0, p_h=1), 5, 1)
    led = s.ledger
    assert (led.tests, led.edges, led.household_queries, led.contact_queries, led.days) == (0, 0, 0, 0, 0)
    assert s.query_household(5) == s.query_household(5) == frozenset(g.household(5))
    assert s.ledger.household_queries == 2
    s.query_contacts(5)
    assert s.ledger.edges == g.degree(5)
    s.query_contacts(5)
    assert s.ledger.edges == g.degree(5)
    u = g.neighbors(5)[0]
    s.query_contacts(u)
    assert s.ledger.edges == g.degree(5) + g.degree(u) - 1


def test_isolated_node_has_no_contacts():
    g = tree_graph([(0, 1)], n=3)
    s = _frozen(g, [(0, 0, Course.HOSPITALIZED, None)], 0)
    assert s.query_contacts(2) == frozenset()
    assert s.query_household(2) == frozenset({2})


def test_results_by_state():
    g = tree_graph([(0, 1), (1, 2), (2, 3)])
    s = _frozen(g, [(0, 0, Course.RECOVERING, None), (1, 1, Course.ASYMPTOMATIC, 0),
                    (2, 4, Course.HOSPITALIZED, 1)], 2)
    assert evaluate_test(s.truth_state(), 3, s.t_h, P) == NEGATIVE
    assert evaluate_test(s.truth_state(), 1, s.t_h, P) == POSITIVE_NO_ONSET
    r = evaluate_test(s.truth_state(), 0, s.t_h, P)
    assert r.kind is ResultKind.POSITIVE_ONSET and r.onset == P.onset_delay
    # exposed but not yet past onset: no onset to reveal
    assert evaluate_test(s.truth_state(), 2, 4 + P.onset_delay - 1, P).positive_no_onset


def test_daily_cap_arithmetic():
    g = generate_hnm(NetworkParams(402, 2, 3), 0)
    assert default_test_cap(g) == 5
    g = tree_graph([(i, i + 1) for i in range(399)])
    assert default_test_cap(g) == 4
    s = _frozen(g, [(0, 0, Course.HOSPITALIZED, None)], 0)
    for v in range(1, 11):
        s.submit_test(v)
    sizes = []
    while s.pending:
        sizes.append(len(s.advance_day()))
    assert sizes == [4, 4, 2]
    assert s.ledger.days == 3 and s.ledger.tests == 10


def test_frozen_results_ignore_order():
    g = generate_hnm(NetworkParams(99, 2, 3), 3)
    a = open_session(g, P, 0, 8, freeze_epidemic=True)
    b = open_session(g, P, 0, 8, freeze_epidemic=True)
    nodes = list(range(20))
    for v in nodes:
        a.submit_test(v)
    for v in reversed(nodes):
        b.submit_test(v)
    ra, rb = {}, {}
    while a.pending:
        ra.update(a.advance_day())
        rb.update(b.advance_day())
    assert ra == rb


def test_trace_replays():
    g = generate_hnm(NetworkParams(99, 2, 3), 3)
    outs = []
    for _ in range(2):
        s = open_session(g, P, 1, 4, trace=True)
        s.query_contacts(s.first_hospitalized)
        for v in s.query_household(s.first_hospitalized):
            s.submit_test(v)
        s.advance_day()
        buf = io.StringIO()
        s.write_trace(buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1] and outs[0].count("\n") >= 4


def test_reveal_network_charges_every_edge():
    g = generate_hnm(NetworkParams(30, 2, 3), 0)
    s = open_session(g, EpidemicParams(p_a=0, p_h=1), 5, 1)
    s.query_contacts(5)
    s.reveal_network()
    assert s.ledger.edges == g.number_of_edges()
