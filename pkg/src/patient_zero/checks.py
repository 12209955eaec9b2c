"""Identity and oracle checks behind ``patient-zero validate`` and the
acceptance tests.  Each check returns ``(ok, detail)`` and takes its sample
sizes and tolerances as arguments."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .analytic import (PathLengthDist, RBTreeParams, RETParams,
                       path_classes, rb_path_class_count, rb_path_count, rb_path_count_recurrence,
                       ret_expected_profile, ret_expected_size, ret_path_length_approx,
                       simulate_ret_profiles, simulate_stopped_ret)
from .detect import LsConfig, ls_plus_success_predicate, ls_success_predicate, run_ls
from .dmp import DmpModel, dmp_marginals
from .epidemic import EpidemicParams
from .harness import ExperimentConfig, compare_theory, run_experiment, run_replicates, summarize
from .network import RBTree
from .sdctf import NoOutbreakError, Session, open_session
from .validation import exact_tree_marginals, bridge_session, tree_suite

RET_DEFAULT = RETParams.from_model(3, 2, 0.1, 3, 0.5, 0.2)  # d_r=5, d=4, p_i'=0.271


def check_path_counts(n_max: int = 30, class_n_max: int = 15, degrees=range(1, 6)):
    worst = 0
    for d_c in degrees:
        for d_h in degrees:
            rb = RBTreeParams(d_c, d_h)
            for n in range(n_max + 1):
                if rb_path_count(n, rb, exact=True) != rb_path_count_recurrence(n, rb):
                    return False, f"closed form differs at n={n}, (d_c, d_h)={rb}"
            for n in range(class_n_max + 1):
                total = sum(rb_path_class_count(n, k, a, b, rb) for k, a, b in path_classes(n))
                worst = max(worst, abs(total - rb_path_count_recurrence(n, rb)))
    return worst == 0, f"largest class-sum gap {worst}"


def check_ret_profile(reps: int = 100_000, horizon: int = 8, z_max: float = 4.0,
                      size_tol: float = 1e-9, size_horizon: int = 20, ret: RETParams = RET_DEFAULT, seed=0):
    A = simulate_ret_profiles(ret, horizon, reps, np.random.default_rng(seed))
    worst_z = 0.0
    for t in range(horizon + 1):
        for l in range(t + 1):
            x = A[:, t, l]
            se = x.std(ddof=1) / np.sqrt(reps)
            gap = abs(x.mean() - ret_expected_profile(t, l, ret))
            z = gap / se if se > 0 else (0.0 if gap < 1e-12 else np.inf)
            worst_z = max(worst_z, z)
    worst_gap = max(abs(ret_expected_size(t, ret) - sum(ret_expected_profile(t, l, ret) for l in range(t + 1)))
                    for t in range(size_horizon + 1))
    ok = worst_z <= z_max and worst_gap <= size_tol
    return ok, f"max |z| {worst_z:.2f} (limit {z_max}), size identity gap {worst_gap:.1e}"


def check_path_length_approx(reps: int = 100_000, tv_max: float = 0.05, ret: RETParams = RET_DEFAULT, seed=0):
    approx = ret_path_length_approx(ret)
    mass = approx.total
    depths = simulate_stopped_ret(ret, reps, np.random.default_rng(seed))
    unfinished = int((depths < 0).sum())
    tv = approx.total_variation(PathLengthDist.from_samples(depths[depths >= 0]))
    ok = bool(np.all(approx.pmf >= 0)) and 1 - 1e-6 <= mass <= 1 + 1e-12 and tv <= tv_max
    return ok, f"mass {mass:.9f}, total variation {tv:.4f} (limit {tv_max}), unfinished runs {unfinished}"


def theory_sweep(reps: int = 10_000, p_as=(0.0, 0.2, 0.4, 0.6, 0.8), seed: int = 0, output=None):
    """LS and LS+ on frozen red-blue tree worlds next to the analytic values."""
    with tempfile.TemporaryDirectory() as tmp:
        cfg = ExperimentConfig(model="rbtree_ddenr", algorithms=["ls", "ls+"], p_a=list(p_as),
                               replicates=reps, base_seed=seed,
                               output=str(output or Path(tmp) / "theory.csv"))
        return compare_theory(cfg)


def check_ls_formula(rows):
    bad = [r["p_a"] for r in rows if not r["ls_theory_inside_ci"]]
    detail = ", ".join(f"p_a={r['p_a']}: {r['ls_empirical']:.4f} in [{r['ls_lo']:.4f}, {r['ls_hi']:.4f}] "
                       f"vs {r['ls_theory']:.4f}" for r in rows)
    return not bad, detail


def check_ls_plus_bound(rows):
    bad = [r["p_a"] for r in rows if r["ls_plus_bound_violated"]]
    detail = ", ".join(f"p_a={r['p_a']}: {r['ls_plus_empirical']:.4f} vs bound {r['ls_plus_bound']:.4f}"
                       for r in rows)
    return not bad, detail


DMP_PARAMS = {
    "dde": EpidemicParams(),
    "dde_nr": EpidemicParams.dde_nr(),
    "fast": EpidemicParams(p_i=0.5, p_a=0.3, p_h=0.6, T_E=1, T_P=1, T_I=3, T_H=2),
}


def check_dmp_trees(t_max: int = 15, tol: float = 1e-6):
    worst = 0.0
    for name, g in tree_suite().items():
        for params in DMP_PARAMS.values():
            model = DmpModel.from_graph(g, params, star=False)
            for source in (0, g.n - 1):
                got = dmp_marginals(model, source, 0, t_max, eps=0.0).ps
                want = exact_tree_marginals(g, source, 0, t_max, params)
                worst = max(worst, float(np.abs(got - want).max()))
    return worst <= tol, f"largest marginal error {worst:.1e} (limit {tol:g})"


def baseline_runs(reps: int = 2000, sg_reps: int = 192, high_p_i: float = 0.9, seed: int = 0):
    """Summaries at the defaults and SG against LS at a high infection rate."""
    with tempfile.TemporaryDirectory() as tmp:
        base = ExperimentConfig(algorithms=["ls", "ls+", "random_dmp", "sg"], replicates=reps,
                                sg_replicates=sg_reps, base_seed=seed, output=str(Path(tmp) / "a.csv"))
        high = ExperimentConfig(algorithms=["ls", "sg"], p_i=high_p_i, replicates=sg_reps,
                                base_seed=seed, output=str(Path(tmp) / "b.csv"))
        return summarize(run_replicates(base)), summarize(run_replicates(high))


def check_baseline_ordering(rows, high_rows):
    by = {r["algorithm"]: r for r in rows}
    hi = {r["algorithm"]: r for r in high_rows}

    def half(r):
        return (r["success_hi"] - r["success_lo"]) / 2

    chain = ["ls+", "ls", "random_dmp", "sg"]
    ok = True
    for a, b in zip(chain, chain[1:]):
        slack = max(half(by[a]), half(by[b]))
        ok &= by[a]["success"] >= by[b]["success"] - slack
    tests = [by[a]["tests"] for a in ("ls", "ls+", "random_dmp")]
    ok &= tests[0] <= tests[1] <= tests[2]
    ok &= hi["sg"]["success"] > hi["ls"]["success"]
    detail = ("accuracy " + " ".join(f"{a}={by[a]['success']:.3f}" for a in chain)
              + "; tests " + " ".join(f"{a}={by[a]['tests']:.1f}" for a in ("ls", "ls+", "random_dmp"))
              + f"; high p_i sg={hi['sg']['success']:.3f} ls={hi['ls']['success']:.3f}")
    return bool(ok), detail


def check_predicates(reps: int = 10_000, seed: int = 0):
    tree = RBTree(3, 2)
    params = EpidemicParams.dde_nr()
    ls_mismatch = plus_violation = 0
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(reps):
        try:
            s = open_session(tree, params, (), np.random.default_rng(child), freeze_epidemic=True)
        except NoOutbreakError:
            continue
        state = s.truth_state()
        path = s.true_transmission_path()
        ls = run_ls(s, LsConfig())
        ls_mismatch += ls.success_source != ls_success_predicate(path, state.timelines)
        s2 = Session(tree, params, s._found, freeze_epidemic=True)
        plus = run_ls(s2, LsConfig(plus=True))
        plus_violation += ls_plus_success_predicate(path, state.timelines, tree) and not plus.success_source
    scenario = {}
    for which in ("a", "b"):
        for name in ("ls+", "ls+v2"):
            session, names = bridge_session(which)
            scenario[which, name] = run_ls(session, LsConfig.named(name)).success_source
    bridge_ok = scenario["a", "ls+"] and scenario["b", "ls+"] and not scenario["b", "ls+v2"]
    ok = ls_mismatch == 0 and plus_violation == 0 and bridge_ok
    return ok, (f"LS mismatches {ls_mismatch}, LS+ violations {plus_violation}, "
                f"constructed worlds {'as expected' if bridge_ok else scenario}")


def check_determinism(seed: int = 7, reps: int = 20):
    """Run a small sweep and a theory comparison twice; compare bytes."""
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in range(2):
            sim = ExperimentConfig(algorithms=["ls", "ls+", "random_dmp", "sg"], p_a=[0.3, 0.7],
                                   replicates=reps, base_seed=seed, output=str(Path(tmp) / f"sim{run}.csv"))
            run_experiment(sim)
            theory = ExperimentConfig(model="rbtree_ddenr", algorithms=["ls", "ls+"], p_a=[0.2, 0.6],
                                      replicates=reps * 10, base_seed=seed, output=str(Path(tmp) / f"th{run}.csv"))
            compare_theory(theory)
            outputs.append([(Path(tmp) / name).read_bytes()
                            for name in (f"sim{run}.csv", f"sim{run}.summary.csv", f"th{run}.csv")])
    same = outputs[0] == outputs[1]
    return same, f"{sum(len(b) for b in outputs[0])} bytes compared"


def run_checks(quick: bool = True):
    """Yield ``(name, ok, detail)`` for every check; ``quick`` shrinks the
    Monte Carlo sample sizes (and with them the power of the checks)."""
    scale = 10 if quick else 1
    yield ("path counts", *check_path_counts())
    yield ("RET profile", *check_ret_profile(reps=100_000 // scale))
    yield ("stopped RET path length", *check_path_length_approx(reps=100_000 // scale))
    rows = theory_sweep(reps=10_000 // scale)
    yield ("LS exact formula", *check_ls_formula(rows))
    yield ("LS+ lower bound", *check_ls_plus_bound(rows))
    yield ("message passing on trees", *check_dmp_trees())
    yield ("LS predicates", *check_predicates(reps=10_000 // scale))
    yield ("determinism", *check_determinism())
    if not quick:
        yield ("baseline ordering", *check_baseline_ordering(*baseline_runs()))
