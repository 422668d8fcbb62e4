"""Train the A-only / ALL / selected baselines and score each one."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .classifier import LogRegModel, TrainConfig, accuracy, predict, train
from .errors import ContractError
from .graph import Roles
from .metrics import FairnessReport, abs_odds_difference, cmi, interventional_gaps
from .scm import Dataset, ScmSpec

MIN_ROWS = 10


def train_test_split(data: Dataset, test_fraction: float = 0.3, seed: int = 0) -> tuple[Dataset, Dataset]:
    if data.n_rows < MIN_ROWS:
        raise ContractError(f"need at least {MIN_ROWS} rows for a train/test split, have {data.n_rows}")
    perm = np.random.default_rng(seed).permutation(data.n_rows)
    cut = data.n_rows - max(1, int(round(test_fraction * data.n_rows)))
    return data.take(np.sort(perm[:cut])), data.take(np.sort(perm[cut:]))


def intervention_levels(spec: ScmSpec, data: Dataset, names, max_points: int = 3) -> list[dict]:
    """Grid of do-values: every level of discrete nodes, quartiles of continuous ones."""
    per_node = []
    for v in names:
        k = spec.kinds[v]
        if k.is_discrete:
            per_node.append(list(range(k.cardinality)))
        else:
            per_node.append([float(q) for q in np.quantile(data[v], np.linspace(0.25, 0.75, max_points))])
    return [dict(zip(names, combo)) for combo in itertools.product(*per_node)]


@dataclass(frozen=True)
class ModelEvaluation:
    name: str
    model: LogRegModel
    report: FairnessReport


def evaluate_model(
    model: LogRegModel,
    test: Dataset,
    roles: Roles,
    spec: ScmSpec | None = None,
    selected=(),
    n_mc: int = 50000,
    seed: int = 0,
    a_values=None,
    s_values=None,
) -> FairnessReport:
    _, y_hat = predict(model, test)
    y = test[roles.target]
    s = test[roles.sensitive[0]]
    aod = abs_odds_difference(y, y_hat, s)
    info = cmi(s, y_hat, [test[a] for a in roles.admissible])
    gap = gap_p = None
    if spec is not None:
        if a_values is None:
            a_values = intervention_levels(spec, test, roles.admissible) or [{}]
        if s_values is None:
            s_values = intervention_levels(spec, test, roles.sensitive)
        gap, gap_p = interventional_gaps(spec, model, selected, a_values, s_values, n_mc, seed)
    return FairnessReport(aod, info, gap, accuracy(y, y_hat), gap_p)


def evaluate_baselines(
    data: Dataset,
    roles: Roles,
    selected,
    spec: ScmSpec | None = None,
    n_mc: int = 50000,
    seed: int = 0,
    config: TrainConfig = TrainConfig(),
    test_spec: ScmSpec | None = None,
) -> dict[str, ModelEvaluation]:
    """Fit A-only, ALL and A+selected models on a train split; score on the test split.

    ``test_spec`` overrides the SCM used for interventional gaps (distribution shift).
    """
    train_set, test_set = train_test_split(data, seed=seed)
    admissible = list(roles.admissible)
    feature_sets = {
        "A": (admissible, ()),
        "ALL": (admissible + list(roles.candidates), tuple(roles.candidates)),
        "selected": (admissible + [c for c in roles.candidates if c in set(selected)], tuple(selected)),
    }
    out = {}
    for name, (feats, sel) in feature_sets.items():
        model = train(train_set, feats, roles.target, config)
        report = evaluate_model(model, test_set, roles, test_spec or spec, sel, n_mc, seed)
        out[name] = ModelEvaluation(name, model, report)
    return out
