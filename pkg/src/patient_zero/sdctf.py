"""Query oracle between a detection algorithm and the epidemic world.

A :class:`Session` starts on the day of the first hospitalization.  The
algorithm learns who was hospitalized and may then ask for households,
contacts and tests.  Household and contact queries are answered at once;
tests join a FIFO queue, at most ``daily_test_cap`` of them are dispatched
per day, and each result is delivered by :meth:`Session.advance_day`
one day after dispatch.

Results are evaluated against the world as it was on the dispatch day.  With
``freeze_epidemic`` the world stays as it was on the hospitalization day,
which is the setting of the tree analysis; otherwise the outbreak keeps
spreading while the search goes on.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .epidemic import (EpidemicParams, EpidemicState, first_symptomatic,
                       run_until_first_hospitalization, transmission_path)


class NoOutbreakError(RuntimeError):
    """The epidemic died out before anybody was hospitalized."""


class ResultKind(enum.Enum):
    NEGATIVE = "negative"
    POSITIVE_NO_ONSET = "positive-no-onset"
    POSITIVE_ONSET = "positive-onset"


@dataclass(frozen=True)
class TestResult:
    kind: ResultKind
    onset: int | None = None

    __test__ = False  # keep pytest from collecting this class

    @property
    def negative(self) -> bool:
        return self.kind is ResultKind.NEGATIVE

    @property
    def has_onset(self) -> bool:
        return self.kind is ResultKind.POSITIVE_ONSET

    @property
    def positive_no_onset(self) -> bool:
        return self.kind is ResultKind.POSITIVE_NO_ONSET


NEGATIVE = TestResult(ResultKind.NEGATIVE)
POSITIVE_NO_ONSET = TestResult(ResultKind.POSITIVE_NO_ONSET)


def evaluate_test(state: EpidemicState, v, day: int, params: EpidemicParams) -> TestResult:
    """What a test of ``v`` taken on ``day`` would report."""
    tl = state.timelines.get(v)
    if tl is None or day < tl.exposure_day + params.T_E:
        return NEGATIVE
    if tl.symptom_onset_day is None or day < tl.symptom_onset_day:
        return POSITIVE_NO_ONSET
    return TestResult(ResultKind.POSITIVE_ONSET, tl.symptom_onset_day)


@dataclass
class Ledger:
    tests: int = 0
    edges: int = 0
    household_queries: int = 0
    contact_queries: int = 0
    days: int = 0

    def snapshot(self) -> "Ledger":
        return Ledger(**asdict(self))


def default_test_cap(g) -> int | None:
    """One percent of the population per day; no cap on infinite graphs."""
    return math.ceil(0.01 * g.n) if g.finite else None


class Session:
    def __init__(self, g, params: EpidemicParams, found, *, freeze_epidemic: bool = False,
                 daily_test_cap: int | None = -1, trace: bool = False):
        self.g = g
        self.params = params
        self._found = found
        self._outbreak = found.outbreak
        self.freeze_epidemic = freeze_epidemic
        self.first_hospitalized = found.h
        self.t_h = found.t_h
        self.clock = found.t_h
        self.daily_test_cap = default_test_cap(g) if daily_test_cap == -1 else daily_test_cap
        self.ledger = Ledger()
        self.pending: deque = deque()
        self._revealed_edges: set = set()
        self._trace: list | None = [] if trace else None
        self._log("hospitalized", found.h, {"onset": self.first_hospitalized_onset})

    # --- what the algorithm may see ------------------------------------

    @property
    def first_hospitalized_onset(self) -> int:
        """Symptom onset of the hospitalized node, known from the admission."""
        return self._found.state.timelines[self.first_hospitalized].symptom_onset_day

    @property
    def days_elapsed(self) -> int:
        return self.clock - self.t_h

    def query_household(self, v) -> frozenset:
        members = frozenset(self.g.household(v))
        self.ledger.household_queries += 1
        self._log("household", v, sorted(map(str, members)))
        return members

    def query_contacts(self, v) -> frozenset:
        nbrs = frozenset(self.g.neighbors(v))
        self.ledger.contact_queries += 1
        for u in nbrs:
            edge = frozenset((u, v))
            if edge not in self._revealed_edges:
                self._revealed_edges.add(edge)
                self.ledger.edges += 1
        self._log("contacts", v, len(nbrs))
        return nbrs

    def reveal_network(self):
        """Hand the whole contact network to a baseline that assumes it.

        Every edge is charged to the ledger.
        """
        if not self.g.finite:
            raise ValueError("cannot reveal an infinite network")
        for u, v in self.g.edges():
            edge = frozenset((u, v))
            if edge not in self._revealed_edges:
                self._revealed_edges.add(edge)
                self.ledger.edges += 1
        self._log("network", None, self.ledger.edges)
        return self.g

    def submit_test(self, v) -> int:
        """Queue a test of ``v``; returns the queue length after submission."""
        if v not in self.g:
            raise KeyError(f"unknown node {v!r}")
        self.pending.append(v)
        return len(self.pending)

    def advance_day(self) -> list:
        """Dispatch today's tests, move the clock one day and return the
        results of everything dispatched today."""
        cap = len(self.pending) if self.daily_test_cap is None else self.daily_test_cap
        batch = [self.pending.popleft() for _ in range(min(cap, len(self.pending)))]
        self.ledger.tests += len(batch)
        state = self._found.state
        day = self.t_h if self.freeze_epidemic else self.clock
        results = [(v, evaluate_test(state, v, day, self.params)) for v in batch]
        for v, r in results:
            self._log("test", v, {"dispatched": self.clock, "kind": r.kind.value, "onset": r.onset})
        self.clock += 1
        self.ledger.days = self.days_elapsed
        if not self.freeze_epidemic:
            self._outbreak.advance_to(self.clock)
        return results

    # --- ground truth, for scoring only ---------------------------------

    @property
    def true_source(self):
        return self._found.state.source

    def truth_state(self) -> EpidemicState:
        return self._found.state

    def true_transmission_path(self) -> list:
        return transmission_path(self._found.state, self.first_hospitalized)

    def evaluate_estimate(self, estimate) -> tuple[bool, bool]:
        """(estimate is the source, estimate is a first symptomatic node)."""
        return estimate == self.true_source, estimate in first_symptomatic(self._found.state)

    # --- trace ----------------------------------------------------------

    def _log(self, event, node, payload):
        if self._trace is not None:
            self._trace.append({"day": self.clock, "event": event,
                                "node": node if node is None or isinstance(node, int) else str(node),
                                "payload": payload})

    @property
    def trace(self) -> list:
        return list(self._trace or [])

    def write_trace(self, stream) -> None:
        for record in self._trace or []:
            stream.write(json.dumps(record, sort_keys=True) + "\n")


def open_session(g, params: EpidemicParams, source, seed=None, *, freeze_epidemic: bool = False,
                 daily_test_cap: int | None = -1, trace: bool = False, source_course=None) -> Session:
    """Run the outbreak from ``source`` and hand over at the first
    hospitalization.  ``daily_test_cap=-1`` picks the default cap."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    found = run_until_first_hospitalization(g, source, params, rng, source_course=source_course)
    if found is None:
        raise NoOutbreakError(f"no hospitalization in the outbreak started at {source!r}")
    return Session(g, params, found, freeze_epidemic=freeze_epidemic,
                   daily_test_cap=daily_test_cap, trace=trace)
