"""Follow one local search from the first hospitalization back to the source.

A household-community network is generated, an outbreak is run from a
random node until someone is hospitalized, and LS and LS+ then trace
backwards through tests and contact queries.  The session trace shows
every query, test and result the searcher saw.
"""

import numpy as np

from patient_zero import EpidemicParams, LsConfig, NetworkParams, NoOutbreakError, generate_hnm, open_session, run_ls
from patient_zero.sdctf import Session

g = generate_hnm(NetworkParams(n=399, d_h=2, d_c=3), seed=1)
params = EpidemicParams()
rng = np.random.default_rng(3)

while True:
    source = int(rng.integers(g.n))
    try:
        session = open_session(g, params, source, rng, trace=True)
        break
    except NoOutbreakError:
        continue

print(f"source {session.true_source}, first hospitalized {session.first_hospitalized} on day {session.t_h}")
print(f"transmission path: {session.true_transmission_path()}")

ls = run_ls(session, LsConfig.named("ls"))
print(f"\nLS estimate {ls.estimate} (success {ls.success_source}), {ls.ledger.tests} tests, "
      f"{ls.ledger.edges} edges revealed, {ls.ledger.days} days")
for event in session.trace[:12]:
    print("  ", event)

# the same world, searched again with the asymptomatic-aware variant
again = Session(g, params, session._found)
plus = run_ls(again, LsConfig.named("ls+"))
print(f"\nLS+ estimate {plus.estimate} (success {plus.success_source}), {plus.ledger.tests} tests")
print("candidate history:", plus.candidate_history)
