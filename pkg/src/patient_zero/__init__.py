"""Finding patient zero of an epidemic by contact tracing."""

from .analytic import (DETProfile, PathLengthDist, RBTreeParams, RETParams, boe_success, det_path_length_dist,
                       ls_plus_success_lb, ls_success, p_cond, rb_path_class_count, rb_path_count,
                       rb_path_count_recurrence, ret_expected_profile, ret_expected_size, ret_path_length_approx)
from .detect import LsConfig, LsOutcome, ls_plus_success_predicate, ls_success_predicate, run_ls
from .dmp import (DmpModel, Observation, dmp_marginals, feasible_sources, rank_candidates, run_random_dmp,
                  star_transform)
from .epidemic import Course, EpidemicParams, EpidemicState, Outbreak, run_until_first_hospitalization, step
from .harness import ExperimentConfig, ExperimentRecord, compare_theory, emit_plot_data, run_experiment
from .network import Graph, NetworkParams, ParameterError, RBTree, generate_hnm, rb_children
from .sdctf import Ledger, NoOutbreakError, Session, TestResult, open_session
from .sizegain import SgConfig, SgState, run_sg, sg_filter, sg_next_sensor
from .stats import student_t, wilson

__version__ = "0.1.0"
