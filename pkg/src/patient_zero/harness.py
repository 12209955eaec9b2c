"""Replicated experiments: parameter sweeps, summaries and theory comparisons.

A replicate is one world (graph, source and outbreak) on which every
requested algorithm runs from the same first hospitalization.  Seeds come
from ``SeedSequence([base_seed, grid_index, replicate])`` so a replicate can
be rerun on its own and the output does not depend on worker scheduling.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .analytic import (PathLengthDist, RBTreeParams, RETParams, boe_success, ls_plus_success_lb,
                       ls_success, p_cond, ret_path_length_approx, simulate_stopped_ret)
from .detect import LsConfig, run_ls
from .dmp import run_random_dmp
from .epidemic import EpidemicParams
from .network import NetworkParams, RBTree, generate_hnm
from .sdctf import NoOutbreakError, open_session
from .sizegain import SgConfig, run_sg
from .stats import student_t, wilson

SCHEMA_VERSION = 1
MODELS = ("hnm_dde", "rbtree_ddenr", "ret")
ALGORITHMS = ("ls", "ls+", "lsv2", "ls+v2", "random_dmp", "sg")
PARAM_KEYS = ("n", "d_h", "d_c", "p_i", "p_a", "p_h")
RECORD_FIELDS = ("algorithm", "replicate", "seed", "success_source", "success_first_symptomatic",
                 "tests", "edges", "days", "path_length")


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


@dataclass
class ExperimentConfig:
    """Flat experiment description; any parameter given as a list is swept."""

    model: str = "hnm_dde"
    algorithms: list = field(default_factory=lambda: ["ls", "ls+"])
    n: object = 399
    d_h: object = 2
    d_c: object = 3
    p_i: object = 0.1
    p_a: object = 0.5
    p_h: object = 0.2
    replicates: int = 100
    sg_replicates: int | None = None
    base_seed: int = 0
    freeze_epidemic: bool | None = None
    output: str = "results.csv"
    workers: int = 1
    max_attempts: int = 1000

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if isinstance(self.algorithms, str):
            self.algorithms = [self.algorithms]
        self.algorithms = [a.lower() for a in self.algorithms]
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.model == "rbtree_ddenr" and {"random_dmp", "sg"} & set(self.algorithms):
            raise ConfigError("random_dmp and sg need a finite network")
        if not self.grid():
            raise ConfigError("empty parameter grid")

    @property
    def frozen(self) -> bool:
        if self.freeze_epidemic is None:
            return self.model == "rbtree_ddenr"
        return bool(self.freeze_epidemic)

    def grid(self) -> list[dict]:
        axes = [v if isinstance(v, (list, tuple)) else [v] for v in (getattr(self, k) for k in PARAM_KEYS)]
        return [dict(zip(PARAM_KEYS, combo)) for combo in itertools.product(*axes)]

    def swept(self) -> list[str]:
        return [k for k in PARAM_KEYS if isinstance(getattr(self, k), (list, tuple)) and len(getattr(self, k)) > 1]

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_mapping(json.load(fh))

    def metadata(self) -> str:
        data = asdict(self)
        data.pop("output")
        data.pop("workers")
        data["freeze_epidemic"] = self.frozen
        return json.dumps(data, sort_keys=True)


@dataclass
class ExperimentRecord:
    point: dict
    algorithm: str
    replicate: int
    seed: int
    success_source: bool
    success_first_symptomatic: bool
    tests: int
    edges: int
    days: int
    path_length: int

    def row(self) -> list[str]:
        return [_fmt(self.point[k]) for k in PARAM_KEYS] + [_fmt(getattr(self, f)) for f in RECORD_FIELDS]


# --- one replicate -------------------------------------------------------

def _world(cfg: ExperimentConfig, point: dict, ss: np.random.SeedSequence):
    """Graph, epidemic parameters, source and outbreak seed of one replicate."""
    graph_ss, pick_ss = ss.spawn(2)
    pick = np.random.default_rng(pick_ss)
    if cfg.model == "hnm_dde":
        g = generate_hnm(NetworkParams(int(point["n"]), int(point["d_h"]), int(point["d_c"])), graph_ss)
        params = EpidemicParams(point["p_i"], point["p_a"], point["p_h"])
    elif cfg.model == "rbtree_ddenr":
        g = RBTree(int(point["d_c"]), int(point["d_h"]))
        params = EpidemicParams.dde_nr(p_i=point["p_i"], p_a=point["p_a"], p_h=point["p_h"])
    else:
        raise ConfigError("the ret model has no search simulation; use compare_theory")
    for _ in range(cfg.max_attempts):
        source = int(pick.integers(g.n)) if g.finite else ()
        seed = int(pick.integers(2 ** 63))
        try:
            open_session(g, params, source, seed, freeze_epidemic=cfg.frozen)
        except NoOutbreakError:
            continue
        return g, params, source, seed
    raise NoOutbreakError(f"no hospitalization in {cfg.max_attempts} attempts at {point}")


def run_replicate(cfg: ExperimentConfig, grid_index: int, replicate: int) -> list[ExperimentRecord]:
    point = cfg.grid()[grid_index]
    ss = np.random.SeedSequence([cfg.base_seed, grid_index, replicate])
    world_ss, algo_ss = ss.spawn(2)
    g, params, source, seed = _world(cfg, point, world_ss)
    algo_seed = int(algo_ss.generate_state(1)[0])

    def session():
        return open_session(g, params, source, seed, freeze_epidemic=cfg.frozen)

    plus_run = None

    def ls_plus():
        nonlocal plus_run
        if plus_run is None:
            s = session()
            plus_run = (s, run_ls(s, LsConfig.named("ls+")).estimate)
        return plus_run

    records = []
    for algo in cfg.algorithms:
        if algo == "sg" and cfg.sg_replicates is not None and replicate >= cfg.sg_replicates:
            continue
        if algo == "ls+":
            s, estimate = ls_plus()
        elif algo.startswith("ls"):
            s = session()
            estimate = run_ls(s, LsConfig.named(algo)).estimate
        elif algo == "random_dmp":
            budget = ls_plus()[0].ledger.tests + 1
            s = session()
            estimate = run_random_dmp(s, budget, seed=algo_seed).estimate
        else:
            deadline = ls_plus()[0].clock
            s = session()
            estimate = run_sg(s, SgConfig(deadline_day=deadline), seed=algo_seed).estimate
        ok_source, ok_first = s.evaluate_estimate(estimate)
        records.append(ExperimentRecord(point, algo, replicate, seed, ok_source, ok_first,
                                        s.ledger.tests, s.ledger.edges, s.ledger.days,
                                        len(s.true_transmission_path()) - 1))
    return records


def _replicate_task(args):
    cfg, grid_index, replicate = args
    return run_replicate(cfg, grid_index, replicate)


def run_replicates(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """All records, ordered by (grid point, replicate, algorithm)."""
    tasks = [(cfg, gi, r) for gi in range(len(cfg.grid())) for r in range(cfg.replicates)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(_replicate_task, tasks, chunksize=16))
    else:
        chunks = [_replicate_task(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


# --- summaries -----------------------------------------------------------

SUMMARY_FIELDS = ("algorithm", "replicates",
                  "success", "success_lo", "success_hi",
                  "first_symptomatic", "first_symptomatic_lo", "first_symptomatic_hi",
                  "tests", "tests_lo", "tests_hi",
                  "edges", "edges_lo", "edges_hi",
                  "days", "days_lo", "days_hi")


def summarize(records) -> list[dict]:
    """One row per (grid point, algorithm): Wilson intervals for the two
    success rates and Student-t intervals for the mean counts."""
    groups: dict = {}
    for rec in records:
        key = (tuple(rec.point[k] for k in PARAM_KEYS), rec.algorithm)
        groups.setdefault(key, []).append(rec)
    rows = []
    for (point, algo), recs in groups.items():
        row = dict(zip(PARAM_KEYS, point))
        row["algorithm"] = algo
        row["replicates"] = len(recs)
        for name, attr in (("success", "success_source"), ("first_symptomatic", "success_first_symptomatic")):
            ci = wilson(sum(getattr(r, attr) for r in recs), len(recs))
            row.update({name: ci.mean, f"{name}_lo": ci.lo, f"{name}_hi": ci.hi})
        for name in ("tests", "edges", "days"):
            ci = student_t([getattr(r, name) for r in recs])
            row.update({name: ci.mean, f"{name}_lo": ci.lo, f"{name}_hi": ci.hi})
        rows.append(row)
    return rows


def _header(kind: str, cfg: ExperimentConfig | None) -> str:
    line = f"# patient-zero {kind} schema={SCHEMA_VERSION}"
    if cfg is not None:
        line += f" config={cfg.metadata()}"
    return line + "\n"


def write_csv(path, kind: str, columns, rows, cfg=None) -> None:
    buf = io.StringIO()
    buf.write(_header(kind, cfg))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> tuple[str, list[dict]]:
    """(header comment, rows as dicts of strings)."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# patient-zero"):
        raise ValueError(f"{path}: missing schema header")
    rows = list(csv.DictReader(line for line in text[1:] if not line.startswith("#")))
    return text[0], rows


def summary_path(output) -> Path:
    p = Path(output)
    return p.with_name(p.stem + ".summary" + p.suffix)


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ExperimentRecord], list[dict]]:
    """Run every replicate, then write the per-replicate CSV to ``cfg.output``
    and the summary next to it."""
    records = run_replicates(cfg)
    rows = summarize(records)
    write_csv(cfg.output, "records", PARAM_KEYS + RECORD_FIELDS, (r.row() for r in records), cfg)
    write_csv(summary_path(cfg.output), "summary", PARAM_KEYS + SUMMARY_FIELDS,
              ([_fmt(row[c]) for c in PARAM_KEYS + SUMMARY_FIELDS] for row in rows), cfg)
    return records, rows


# --- theory versus simulation -------------------------------------------

THEORY_FIELDS = ("replicates", "p", "mean_path_length",
                 "ls_empirical", "ls_lo", "ls_hi", "ls_theory", "ls_theory_inside_ci",
                 "ls_plus_empirical", "ls_plus_lo", "ls_plus_hi", "ls_plus_bound", "ls_plus_bound_violated",
                 "boe", "approx_ls", "approx_ls_plus_bound")


def theory_row(point: dict, lengths, ls_hits=None, plus_hits=None, T_E: int = 3) -> dict:
    """Analytic predictions at one grid point.

    ``lengths`` are sampled transmission path lengths; ``ls_hits`` and
    ``plus_hits`` are per-replicate successes (omitted for the ret model).
    """
    dist = PathLengthDist.from_samples(lengths)
    rb = RBTreeParams(int(point["d_c"]), int(point["d_h"]))
    p = p_cond(point["p_a"], point["p_h"])
    ret = RETParams.from_model(rb.d_c, rb.d_h, point["p_i"], T_E, point["p_a"], point["p_h"])
    approx = ret_path_length_approx(ret)
    row = dict(point)
    row.update(replicates=len(lengths), p=p, mean_path_length=dist.mean(),
               ls_theory=ls_success(dist, p), ls_plus_bound=ls_plus_success_lb(dist, p, rb),
               boe=_safe_boe(ret, point), approx_ls=ls_success(approx, p),
               approx_ls_plus_bound=ls_plus_success_lb(approx, p, rb))
    for name, hits in (("ls", ls_hits), ("ls_plus", plus_hits)):
        if hits is None:
            row.update({f"{name}_empirical": "", f"{name}_lo": "", f"{name}_hi": ""})
            continue
        ci = wilson(int(np.sum(hits)), len(hits))
        row.update({f"{name}_empirical": ci.mean, f"{name}_lo": ci.lo, f"{name}_hi": ci.hi})
    if ls_hits is None:
        row["ls_theory_inside_ci"] = row["ls_plus_bound_violated"] = ""
    else:
        row["ls_theory_inside_ci"] = row["ls_lo"] <= row["ls_theory"] <= row["ls_hi"]
        half = (row["ls_plus_hi"] - row["ls_plus_lo"]) / 2
        row["ls_plus_bound_violated"] = row["ls_plus_empirical"] < row["ls_plus_bound"] - half
    return row


def _safe_boe(ret: RETParams, point: dict) -> float:
    if point["p_a"] < 1 and (1 - point["p_a"]) * point["p_h"] <= 0:
        return math.nan
    return boe_success(ret.d, ret.p_i, point["p_a"], point["p_h"])


def compare_theory(cfg: ExperimentConfig) -> list[dict]:
    """Empirical LS and LS+ success next to the analytic values, written to
    ``cfg.output``.  The ret model compares the formulas on stopped-RET path
    lengths only."""
    rows = []
    if cfg.model == "ret":
        for gi, point in enumerate(cfg.grid()):
            ret = RETParams.from_model(int(point["d_c"]), int(point["d_h"]), point["p_i"], 3,
                                       point["p_a"], point["p_h"])
            rng = np.random.default_rng(np.random.SeedSequence([cfg.base_seed, gi]))
            depths = simulate_stopped_ret(ret, cfg.replicates, rng)
            rows.append(theory_row(point, depths[depths >= 0]))
    elif cfg.model == "rbtree_ddenr":
        run = ExperimentConfig(**{**asdict(cfg), "algorithms": ["ls", "ls+"]})
        records = run_replicates(run)
        for point in cfg.grid():
            key = tuple(point[k] for k in PARAM_KEYS)
            mine = [r for r in records if tuple(r.point[k] for k in PARAM_KEYS) == key]
            ls = [r for r in mine if r.algorithm == "ls"]
            plus = [r.success_source for r in mine if r.algorithm == "ls+"]
            rows.append(theory_row(point, [r.path_length for r in ls], [r.success_source for r in ls], plus))
    else:
        raise ConfigError("compare_theory needs the rbtree_ddenr or ret model")
    write_csv(cfg.output, "theory", PARAM_KEYS + THEORY_FIELDS,
              ([_fmt(row[c]) for c in PARAM_KEYS + THEORY_FIELDS] for row in rows), cfg)
    return rows


# --- plot data -----------------------------------------------------------

PLOT_METRICS = ("success", "first_symptomatic", "tests", "edges")


def emit_plot_data(summary_csv, out_dir) -> list[Path]:
    """Split a summary into one ``x,mean,lo,hi`` file per (metric, algorithm,
    fixed values of any further swept parameters)."""
    _, rows = read_csv(summary_csv)
    if not rows:
        raise ValueError(f"{summary_csv}: no summary rows")
    needed = set(PARAM_KEYS) | {"algorithm"} | {f"{m}{s}" for m in PLOT_METRICS for s in ("", "_lo", "_hi")}
    missing = needed - set(rows[0])
    if missing:
        raise ValueError(f"{summary_csv}: missing columns {sorted(missing)}")
    swept = [k for k in PARAM_KEYS if len({r[k] for r in rows}) > 1]
    x_key = swept[0] if swept else "p_a"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict = {}
    for r in rows:
        extra = "".join(f"_{k}{r[k]}" for k in swept[1:])
        for metric in PLOT_METRICS:
            name = f"{metric}_vs_{x_key}_{r['algorithm'].replace('+', 'plus')}{extra}.csv"
            files.setdefault(name, []).append([float(r[x_key]), r[metric], r[f"{metric}_lo"], r[f"{metric}_hi"]])
    paths = []
    for name, data in sorted(files.items()):
        data.sort(key=lambda row: row[0])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "mean", "lo", "hi"])
        writer.writerows([_fmt(x), m, lo, hi] for x, m, lo, hi in data)
        (out / name).write_text(buf.getvalue())
        paths.append(out / name)
    return paths
