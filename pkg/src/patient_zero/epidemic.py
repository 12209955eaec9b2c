"""The deterministically developing epidemic (DDE) and its no-recovery variant.

Time is counted in whole days.  A node exposed on day ``e`` becomes
infectious on day ``e + T_E``; symptomatic nodes show symptoms on
``e + T_E + T_P`` (``e + T_E`` when the pre-symptomatic stage is dropped) and
hospitalized ones enter hospital on ``e + T_E + T_H``, from which day they no
longer transmit.  Everyone else stops transmitting on ``e + T_E + T_I``
unless recovery is disabled.  An infectious node that succeeds against a
susceptible neighbour on day ``t`` exposes it on day ``t``.

Two engines implement the same law:

* :func:`step` advances a state by one day with explicit Bernoulli attempts.
  It is the reference implementation.
* :class:`Outbreak` draws, for every exposed node and neighbour, the
  geometric number of failed daily attempts up front and processes the
  resulting exposure events in time order.  It is much faster and is what the
  query sessions run on.
"""

from __future__ import annotations

import csv
import enum
import heapq
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .network import ParameterError


class Course(enum.Enum):
    ASYMPTOMATIC = "asymptomatic"
    RECOVERING = "symptomatic-recovering"
    HOSPITALIZED = "symptomatic-hospitalized"

    @property
    def symptomatic(self) -> bool:
        return self is not Course.ASYMPTOMATIC


@dataclass(frozen=True)
class EpidemicParams:
    p_i: float = 0.1
    p_a: float = 0.5
    p_h: float = 0.2
    T_E: int = 3
    T_P: int = 2
    T_I: int = 14
    T_H: int = 5
    no_recovery: bool = False
    drop_presymptomatic: bool = False

    def __post_init__(self):
        for name in ("p_i", "p_a", "p_h"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {value}")
        for name in ("T_E", "T_P", "T_I", "T_H"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ParameterError(f"{name} must be a nonnegative integer, got {value}")
        if self.T_E < 1:
            raise ParameterError("T_E must be at least one day")
        if not self.T_P < self.T_E + self.T_H:
            raise ParameterError("need T_P < T_E + T_H")
        if not self.T_P <= self.T_I:
            raise ParameterError("need T_P <= T_I")

    @classmethod
    def dde_nr(cls, **kwargs) -> "EpidemicParams":
        """Parameters of the no-recovery, no-pre-symptomatic variant."""
        return cls(no_recovery=True, drop_presymptomatic=True, **kwargs)

    @property
    def onset_delay(self) -> int:
        """Days from exposure to symptom onset."""
        return self.T_E + (0 if self.drop_presymptomatic else self.T_P)

    @property
    def hospitalization_delay(self) -> int:
        return self.T_E + self.T_H

    def infectious_days(self, course: Course) -> float:
        """Length of the infectious period (``inf`` when it never ends)."""
        if course is Course.HOSPITALIZED:
            return self.T_H
        return math.inf if self.no_recovery else self.T_I

    @property
    def p_hospitalized(self) -> float:
        return (1.0 - self.p_a) * self.p_h

    def with_(self, **kwargs) -> "EpidemicParams":
        return replace(self, **kwargs)


@dataclass(slots=True)
class NodeTimeline:
    exposure_day: int
    course: Course
    infector: object = None
    symptom_onset_day: int | None = None
    hospitalization_day: int | None = None


def make_timeline(exposure_day: int, course: Course, infector, params: EpidemicParams) -> NodeTimeline:
    onset = exposure_day + params.onset_delay if course.symptomatic else None
    hosp = exposure_day + params.hospitalization_delay if course is Course.HOSPITALIZED else None
    return NodeTimeline(exposure_day, course, infector, onset, hosp)


@dataclass
class EpidemicState:
    """Per-node timelines.  ``day`` is the first day not yet simulated: every
    exposure that happens before ``day`` is recorded, none after."""

    day: int
    timelines: dict = field(default_factory=dict)
    source: object = None

    def timeline(self, v) -> NodeTimeline | None:
        return self.timelines.get(v)

    def is_infected(self, v) -> bool:
        return v in self.timelines

    def is_infectious(self, v, day: int, params: EpidemicParams) -> bool:
        tl = self.timelines.get(v)
        if tl is None:
            return False
        start = tl.exposure_day + params.T_E
        return start <= day < start + params.infectious_days(tl.course)

    def compartment(self, v, day: int, params: EpidemicParams) -> str:
        tl = self.timelines.get(v)
        if tl is None or tl.exposure_day > day:
            return "S"
        start = tl.exposure_day + params.T_E
        if day < start:
            return "E"
        if tl.course is Course.HOSPITALIZED and day >= tl.hospitalization_day:
            return "H"
        if day >= start + params.infectious_days(tl.course):
            return "R"
        if tl.course is Course.ASYMPTOMATIC:
            return "A"
        return "I" if day >= tl.symptom_onset_day else "P"

    def copy(self) -> "EpidemicState":
        return EpidemicState(self.day, {v: replace(tl) for v, tl in self.timelines.items()}, self.source)


def draw_course(rng: np.random.Generator, params: EpidemicParams) -> Course:
    if rng.random() < params.p_a:
        return Course.ASYMPTOMATIC
    if rng.random() < params.p_h:
        return Course.HOSPITALIZED
    return Course.RECOVERING


def seed_state(source, params: EpidemicParams, rng: np.random.Generator, course: Course | None = None) -> EpidemicState:
    """State on day 0: the source has just been exposed."""
    course = draw_course(rng, params) if course is None else course
    return EpidemicState(0, {source: make_timeline(0, course, None, params)}, source)


def step(state: EpidemicState, g, params: EpidemicParams, rng: np.random.Generator) -> EpidemicState:
    """Simulate day ``state.day`` with one Bernoulli(p_i) attempt per
    (infectious node, susceptible neighbour) pair, then move to the next day.

    A node hit by several successful attempts on the same day takes one of
    the successful infectors uniformly at random.  The state is updated in
    place and returned.
    """
    day = state.day
    attempts: dict = {}
    for v in list(state.timelines):
        if not state.is_infectious(v, day, params):
            continue
        for u in g.neighbors(v):
            if u not in state.timelines:
                attempts.setdefault(u, []).append(v)
    targets = list(attempts)
    if targets and params.p_i > 0:
        for u in targets:
            infectors = attempts[u]
            hits = [v for v, x in zip(infectors, rng.random(len(infectors))) if x < params.p_i]
            if hits:
                infector = hits[int(rng.integers(len(hits)))] if len(hits) > 1 else hits[0]
                state.timelines[u] = make_timeline(day, draw_course(rng, params), infector, params)
    state.day = day + 1
    return state


class Outbreak:
    """Event-driven DDE simulation that can be advanced to any later day.

    For every newly exposed node ``k`` and each neighbour ``u`` the number of
    failed daily attempts before the first success is geometric; the
    resulting exposure event is dropped if it falls outside ``k``'s infectious
    period.  Events are processed in day order with uniformly random
    tie-breaking, so this is equivalent in law to repeated :func:`step`.
    """

    def __init__(self, g, params: EpidemicParams, source, rng: np.random.Generator,
                 source_course: Course | None = None):
        if source not in g:
            raise KeyError(f"unknown source node {source!r}")
        self.g = g
        self.params = params
        self.rng = rng
        self.state = seed_state(source, params, rng, source_course)
        self._events: list = []
        self._counter = 0
        self._schedule(source)

    def _schedule(self, k):
        params = self.params
        if params.p_i <= 0:
            return
        tl = self.state.timelines[k]
        nbrs = [u for u in self.g.neighbors(k) if u not in self.state.timelines]
        if not nbrs:
            return
        start = tl.exposure_day + params.T_E
        length = params.infectious_days(tl.course)
        if params.p_i >= 1:
            delays = np.zeros(len(nbrs), dtype=np.int64)
        else:
            delays = self.rng.geometric(params.p_i, size=len(nbrs)) - 1
        keys = self.rng.random(len(nbrs))
        for u, d, key in zip(nbrs, delays.tolist(), keys.tolist()):
            if d < length:
                self._counter += 1
                heapq.heappush(self._events, (start + d, key, self._counter, u, k))

    def _expose(self, u, day, infector):
        self.state.timelines[u] = make_timeline(day, draw_course(self.rng, self.params), infector, self.params)
        self._schedule(u)

    def next_event_day(self) -> float:
        while self._events and self._events[0][3] in self.state.timelines:
            heapq.heappop(self._events)
        return self._events[0][0] if self._events else math.inf

    def advance_to(self, day: int) -> EpidemicState:
        """Process every exposure that happens before ``day``."""
        while self.next_event_day() < day:
            t, _, _, u, k = heapq.heappop(self._events)
            self._expose(u, t, k)
        self.state.day = max(self.state.day, day)
        return self.state

    def run_until_first_hospitalization(self, max_day: int = 10_000, max_nodes: int = 1_000_000):
        """Advance to the first hospitalization day.

        Returns ``(h, t_h)`` with ``h`` drawn uniformly among the nodes
        hospitalized that day, or ``None`` if no hospitalization can occur.
        """
        pending: dict[int, list] = {}
        first = math.inf

        def note(v):
            nonlocal first
            tl = self.state.timelines[v]
            if tl.hospitalization_day is not None:
                pending.setdefault(tl.hospitalization_day, []).append(v)
                first = min(first, tl.hospitalization_day)

        note(self.state.source)
        while True:
            t = self.next_event_day()
            if t >= first:
                break
            if t > max_day or len(self.state.timelines) > max_nodes:
                return None
            _, _, _, u, k = heapq.heappop(self._events)
            self._expose(u, t, k)
            note(u)
        if math.isinf(first):
            return None
        self.state.day = first
        candidates = pending[first]
        h = candidates[int(self.rng.integers(len(candidates)))] if len(candidates) > 1 else candidates[0]
        return h, first


class FirstHospitalization(NamedTuple):
    state: EpidemicState
    h: object
    t_h: int
    outbreak: Outbreak


def run_until_first_hospitalization(g, source, params: EpidemicParams, rng, *,
                                    source_course: Course | None = None,
                                    max_day: int = 10_000) -> FirstHospitalization | None:
    """Run the epidemic from ``source`` until somebody is hospitalized.

    The returned state is positioned at the start of the hospitalization day.
    ``None`` signals that the outbreak died out (or never hospitalizes anyone
    within ``max_day``).
    """
    rng = np.random.default_rng(rng)
    outbreak = Outbreak(g, params, source, rng, source_course)
    found = outbreak.run_until_first_hospitalization(max_day=max_day)
    if found is None:
        return None
    h, t_h = found
    return FirstHospitalization(outbreak.state, h, t_h, outbreak)


def transmission_path(state: EpidemicState, h) -> list:
    """``[source, ..., h]`` following infector links back from ``h``."""
    if h not in state.timelines:
        raise KeyError(f"node {h!r} is not infected")
    path = [h]
    while state.timelines[path[-1]].infector is not None:
        path.append(state.timelines[path[-1]].infector)
    path.reverse()
    return path


def first_symptomatic(state: EpidemicState) -> set:
    """Nodes with the earliest symptom onset among the infected."""
    onsets = {v: tl.symptom_onset_day for v, tl in state.timelines.items()
              if tl.symptom_onset_day is not None}
    if not onsets:
        return set()
    best = min(onsets.values())
    return {v for v, t in onsets.items() if t == best}


def write_timelines_csv(state: EpidemicState, stream) -> None:
    """Debug dump: ``node,exposure_day,course,infector``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["node", "exposure_day", "course", "infector"])
    for v, tl in sorted(state.timelines.items(), key=lambda kv: (kv[1].exposure_day, str(kv[0]))):
        writer.writerow([v, tl.exposure_day, tl.course.value, "" if tl.infector is None else tl.infector])
