"""LS, LS+, random message passing and size-gain sensor placement on the
same worlds.

Every algorithm replays the identical outbreak for each replicate, so the
accuracy and test-count differences come from the searchers alone.  The
size-gain method needs the whole network and many tests, so it runs on
fewer replicates.
"""

import sys
import tempfile
from pathlib import Path

from patient_zero import ExperimentConfig, run_experiment

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 100

with tempfile.TemporaryDirectory() as tmp:
    cfg = ExperimentConfig(algorithms=["ls", "ls+", "random_dmp", "sg"], p_i=[0.1, 0.5],
                           replicates=reps, sg_replicates=max(reps // 10, 5),
                           output=str(Path(tmp) / "runs.csv"))
    _, summary = run_experiment(cfg)

print(f"{'p_i':>5} {'algorithm':<11} {'success':>24} {'tests':>8} {'edges':>8} {'days':>6}")
for r in summary:
    acc = f"{r['success']:.3f} [{r['success_lo']:.3f}, {r['success_hi']:.3f}]"
    print(f"{r['p_i']:>5} {r['algorithm']:<11} {acc:>24} {r['tests']:>8.1f} {r['edges']:>8.1f} {r['days']:>6.1f}")
