"""Fairness and information metrics for a trained predictor."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .classifier import LogRegModel, predict
from .errors import ContractError, DegenerateDataError
from .scm import ScmSpec, intervene_sample


@dataclass(frozen=True)
class FairnessReport:
    abs_odds_difference: float
    cmi_nats: float
    interventional_gap: float | None
    accuracy: float
    interventional_gap_proba: float | None = None

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v is not None and not np.isfinite(v):
                raise ContractError(f"report field {k} is not finite")

    def to_json(self) -> dict:
        return asdict(self)


def _rates(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float]:
    pos, neg = y_true == 1, y_true == 0
    if not pos.any() or not neg.any():
        raise DegenerateDataError("a group lacks positive or negative true labels")
    tpr = float(np.mean(y_pred[pos] == 1))
    fpr = float(np.mean(y_pred[neg] == 1))
    return fpr, tpr


def abs_odds_difference(y_true, y_pred, s) -> float:
    """0.5 * (|FPR_0 - FPR_1| + |TPR_0 - TPR_1|) between the two groups of binary ``s``."""
    y_true, y_pred, s = (np.asarray(a) for a in (y_true, y_pred, s))
    if not len(y_true) == len(y_pred) == len(s):
        raise ContractError("columns must have equal length")
    groups = np.unique(s)
    if len(groups) != 2:
        raise DegenerateDataError(f"need exactly two sensitive groups, found {len(groups)}")
    (f0, t0), (f1, t1) = (_rates(y_true[s == g], y_pred[s == g]) for g in groups)
    return 0.5 * (abs(f0 - f1) + abs(t0 - t1))


def quantile_bins(x: np.ndarray, n_bins: int = 4) -> np.ndarray:
    """Equal-frequency bin index per value."""
    x = np.asarray(x, dtype=float)
    edges = np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def _codes(col: np.ndarray, n_bins: int) -> np.ndarray:
    col = np.asarray(col)
    integral = np.issubdtype(col.dtype, np.integer) or (np.all(col == np.round(col)) and len(np.unique(col)) <= 2 * n_bins)
    if integral:
        return np.unique(col, return_inverse=True)[1]
    return quantile_bins(col, n_bins)


def cmi(s, yprime, a: Sequence | np.ndarray | None = None, n_bins: int = 4) -> float:
    """Plug-in I(s; yprime | a) in nats, clamped at 0.

    ``a`` is a sequence of columns (or a single column / None). Columns that are
    not integer-valued are cut into ``n_bins`` equal-frequency bins.
    """
    s = np.asarray(s)
    yp = np.asarray(yprime)
    n = len(s)
    if n == 0:
        raise ContractError("cmi of empty data")
    if len(yp) != n:
        raise ContractError("columns must have equal length")
    if a is None:
        a_cols = []
    elif isinstance(a, np.ndarray) and a.ndim == 1:
        a_cols = [a]
    else:
        a_cols = list(a.T) if isinstance(a, np.ndarray) else list(a)
    sc, yc = _codes(s, n_bins), _codes(yp, n_bins)
    stratum = np.zeros(n, dtype=np.int64)
    for col in a_cols:
        c = _codes(col, n_bins)
        stratum = stratum * (int(c.max()) + 1) + c
    _, stratum = np.unique(stratum, return_inverse=True)
    ks, ky, kz = int(sc.max()) + 1, int(yc.max()) + 1, int(stratum.max()) + 1
    joint = np.bincount((stratum * ks + sc) * ky + yc, minlength=kz * ks * ky).reshape(kz, ks, ky) / n
    pz = joint.sum(axis=(1, 2), keepdims=True)
    psz = joint.sum(axis=2, keepdims=True)
    pyz = joint.sum(axis=1, keepdims=True)
    mask = joint > 0
    num = joint * np.broadcast_to(pz, joint.shape)
    den = np.broadcast_to(psz, joint.shape) * np.broadcast_to(pyz, joint.shape)
    value = float(np.sum(joint[mask] * np.log(num[mask] / den[mask])))
    return max(0.0, value)


def _as_assignment(value, names: Sequence[str]) -> dict:
    if isinstance(value, Mapping):
        return dict(value)
    return {v: value for v in names}


def interventional_gaps(
    spec: ScmSpec,
    model: LogRegModel,
    selected: Sequence[str],
    a_values: Sequence,
    s_values: Sequence,
    n_mc: int = 50000,
    seed: int = 0,
    common_random_numbers: bool = True,
) -> tuple[float, float]:
    """Max over (a, s, s') of |P(Y'=1 | do(S=s), do(A=a)) - P(Y'=1 | do(S=s'), do(A=a))|.

    Returns the gap for thresholded predictions and for mean predicted
    probability. Each ``a`` gets its own derived seed; with
    ``common_random_numbers`` every ``s`` under that ``a`` reuses it.
    """
    dag = spec.dag
    allowed = set(selected) | set(dag.admissible)
    stray = [f for f in model.features if f not in allowed]
    if stray:
        raise ContractError(f"model uses features outside selected and admissible sets: {stray}")
    if len(s_values) < 2:
        raise ContractError("need at least two sensitive values")
    seeds = np.random.SeedSequence(seed).spawn(len(a_values) * len(s_values))
    gap_hard = gap_soft = 0.0
    for i, a in enumerate(a_values):
        p_hard, p_soft = [], []
        for j, s in enumerate(s_values):
            ss = seeds[i * len(s_values) + (0 if common_random_numbers else j)]
            do = {**_as_assignment(a, dag.admissible), **_as_assignment(s, dag.sensitive)}
            data = intervene_sample(spec, do, n_mc, int(ss.generate_state(1)[0]))
            proba, hard = predict(model, data)
            p_hard.append(float(hard.mean()))
            p_soft.append(float(proba.mean()))
        for u, v in itertools.combinations(range(len(s_values)), 2):
            gap_hard = max(gap_hard, abs(p_hard[u] - p_hard[v]))
            gap_soft = max(gap_soft, abs(p_soft[u] - p_soft[v]))
    return gap_hard, gap_soft


def interventional_gap(
    spec: ScmSpec,
    model: LogRegModel,
    selected: Sequence[str],
    a_values: Sequence,
    s_values: Sequence,
    n_mc: int = 50000,
    seed: int = 0,
    use_proba: bool = False,
    common_random_numbers: bool = True,
) -> float:
    hard, soft = interventional_gaps(spec, model, selected, a_values, s_values, n_mc, seed, common_random_numbers)
    return soft if use_proba else hard
