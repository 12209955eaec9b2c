"""Analytic LS success on the red-blue tree next to simulation.

For each asymptomatic share the closed form for LS, the lower bound for
LS+ and the back-of-the-envelope estimate are printed beside empirical
success rates with Wilson intervals.  Pass a replicate count as the first
argument for tighter intervals.
"""

import sys
import tempfile
from pathlib import Path

from patient_zero import ExperimentConfig, compare_theory

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 1000

with tempfile.TemporaryDirectory() as tmp:
    cfg = ExperimentConfig(model="rbtree_ddenr", algorithms=["ls", "ls+"], p_a=[0.0, 0.2, 0.4, 0.6, 0.8],
                           replicates=reps, output=str(Path(tmp) / "theory.csv"))
    rows = compare_theory(cfg)

print(f"{'p_a':>5} {'LS sim':>22} {'LS exact':>9} {'LS+ sim':>22} {'LS+ bound':>10} {'rough':>7}")
for r in rows:
    ls = f"{r['ls_empirical']:.3f} [{r['ls_lo']:.3f},{r['ls_hi']:.3f}]"
    plus = f"{r['ls_plus_empirical']:.3f} [{r['ls_plus_lo']:.3f},{r['ls_plus_hi']:.3f}]"
    print(f"{r['p_a']:>5} {ls:>22} {r['ls_theory']:>9.3f} {plus:>22} {r['ls_plus_bound']:>10.3f} {r['boe']:>7.3f}")
