"""Causally fair feature selection via conditional-independence tests and group testing."""

from .citest import CiQuery, CiResult, ci_test, group_split, make_backend
from .classifier import LogRegModel, TrainConfig, feature_importance, predict, train
from .graph import (
    Dag,
    Path,
    Role,
    Roles,
    d_separated,
    d_separated_bruteforce,
    descendants,
    is_blocked,
    oracle_c1,
    oracle_c2,
    oracle_theorem,
    random_dag,
    remove_incoming,
)
from .metrics import FairnessReport, abs_odds_difference, cmi, interventional_gap
from .scm import Dataset, ScmSpec, gen_benchmark, intervene_sample, sample
from .selector import SelectionResult, bench_counts, grp_sel, seq_sel

__version__ = "0.1.0"
