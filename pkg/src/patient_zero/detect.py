"""LocalSearch (LS) and LS+ source detection, with the eager ``v2`` variants.

The search keeps one candidate, initially the first hospitalized node.  An
iteration queries the candidate's household and contacts, tests them, and
remembers the node with the earliest reported symptom onset.  When the test
queue runs dry the search moves to that node, or stops if nobody beat the
candidate.  LS+ also follows asymptomatic nodes: their households are always
tested, and the contacts of asymptomatic members of the candidate's own
household are tested too.  The ``v2`` variants start the next iteration as
soon as a day's results contain an earlier onset.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .sdctf import Ledger, ResultKind, Session, TestResult


@dataclass(frozen=True)
class LsConfig:
    plus: bool = False
    v2: bool = False
    sigma_E: int = 0
    sigma_P: int = 0

    def __post_init__(self):
        if self.sigma_E < 0 or self.sigma_P < 0:
            raise ValueError("window slacks must be nonnegative")

    @classmethod
    def named(cls, name: str) -> "LsConfig":
        """``ls``, ``ls+``, ``lsv2`` or ``ls+v2``."""
        table = {"ls": cls(), "ls+": cls(plus=True), "lsv2": cls(v2=True),
                 "ls+v2": cls(plus=True, v2=True)}
        try:
            return table[name.lower()]
        except KeyError:
            raise ValueError(f"unknown local search variant {name!r}") from None


@dataclass
class LsOutcome:
    estimate: object
    candidate_history: list
    ledger: Ledger
    success_source: bool
    success_first_symptomatic: bool
    tested: dict = field(default_factory=dict, repr=False)


def backward_window(onset: int, params, cfg: LsConfig) -> tuple[int, int]:
    """Contact window in which a symptomatic candidate was infected.

    Only meaningful on time-varying networks; on static graphs every
    neighbour counts as a backward contact.
    """
    centre = onset - (params.T_E + params.T_P)
    slack = cfg.sigma_E + cfg.sigma_P
    return centre - slack, centre + slack


def asymptomatic_window(onset: int, params, cfg: LsConfig) -> tuple[int, int]:
    """Window for contacts of an asymptomatic housemate of the candidate."""
    slack = cfg.sigma_E + cfg.sigma_P
    return (onset - (params.T_P + 2 * params.T_E + params.T_I) - slack,
            onset - (params.T_P + 2 * params.T_E) + slack)


def _key(v):
    return (str(type(v)), v)


def run_ls(session: Session, cfg: LsConfig = LsConfig()) -> LsOutcome:
    h = session.first_hospitalized
    results: dict = {h: TestResult(ResultKind.POSITIVE_ONSET, session.first_hospitalized_onset)}
    households: dict = {}
    contacts: dict = {}
    cap = session.daily_test_cap

    def household(v):
        if v not in households:
            households[v] = sorted(session.query_household(v), key=_key)
        return households[v]

    def neighbours(v):
        if v not in contacts:
            contacts[v] = sorted(session.query_contacts(v), key=_key)
        return contacts[v]

    cand = h
    history = [h]
    while True:
        cand_onset = results[cand].onset
        best, best_onset = cand, cand_onset
        home = set(household(cand))
        queue: deque = deque()
        seen: set = set()

        def enqueue(nodes):
            for u in nodes:
                if u not in seen:
                    seen.add(u)
                    queue.append(u)

        def process(v, r: TestResult):
            nonlocal best, best_onset
            if r.has_onset:
                if r.onset < cand_onset and (r.onset, _key(v)) < (best_onset, _key(best)):
                    best, best_onset = v, r.onset
            elif cfg.plus and r.positive_no_onset:
                enqueue(household(v))
                if v in home:
                    enqueue(neighbours(v))

        enqueue(household(cand))
        enqueue(neighbours(cand))
        while queue:
            batch = []
            while queue and (cap is None or len(batch) < cap):
                v = queue.popleft()
                if v in results:
                    process(v, results[v])
                else:
                    batch.append(v)
            if batch:
                for v in batch:
                    session.submit_test(v)
                for v, r in session.advance_day():
                    results[v] = r
                    process(v, r)
            if cfg.v2 and best != cand:
                break
        if best == cand:
            break
        cand = best
        history.append(cand)

    ok_source, ok_first = session.evaluate_estimate(cand)
    return LsOutcome(cand, history, session.ledger.snapshot(), ok_source, ok_first, results)


def ls_success_predicate(path, timelines) -> bool:
    """LS succeeds on a tree exactly when every path node is symptomatic."""
    return all(timelines[v].course.symptomatic for v in path)


def ls_plus_success_predicate(path, timelines, g) -> bool:
    """Sufficient condition for LS+ on the red-blue tree: a symptomatic
    source and a symptomatic path node in every household the path visits."""
    if not timelines[path[0]].course.symptomatic:
        return False
    covered: dict = {}
    for v in path:
        hid = g.household_id(v)
        covered[hid] = covered.get(hid, False) or timelines[v].course.symptomatic
    return all(covered.values())
