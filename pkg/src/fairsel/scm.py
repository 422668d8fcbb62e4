"""Structural causal models over a :class:`~fairsel.graph.Dag`.

Sampling is ancestral. Every node consumes one block of random numbers in
topological order whether or not it is intervened on, so an intervention
never shifts the noise of any other node: two runs with the same seed and
different interventions use common random numbers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ContractError, LookupFailure, SpecError
from .graph import Dag, Role, Roles

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class ColumnKind:
    kind: str
    cardinality: int | None = None

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise ContractError(f"unknown column kind {self.kind!r}")
        if self.kind == DISCRETE and (self.cardinality is None or self.cardinality < 2):
            raise ContractError("discrete columns need cardinality >= 2")

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE


@dataclass(frozen=True)
class LinearGaussian:
    """value = intercept + sum(weight * parent) + noise_std * N(0, 1).

    With ``binary=True`` the node emits ``1[latent > 0]`` instead (a probit unit),
    which is how a binary target is produced from continuous parents.
    """

    weights: Mapping[str, float] = field(default_factory=dict)
    noise_std: float = 1.0
    intercept: float = 0.0
    binary: bool = False

    def kind(self) -> ColumnKind:
        return ColumnKind(DISCRETE, 2) if self.binary else ColumnKind(CONTINUOUS)

    def to_json(self) -> dict:
        return {
            "type": "linear_gaussian",
            "weights": dict(self.weights),
            "noise_std": self.noise_std,
            "intercept": self.intercept,
            "binary": self.binary,
        }


@dataclass(frozen=True)
class DiscreteCpt:
    """Conditional probability table.

    ``table`` has one row per combination of parent values, enumerated in
    lexicographic order over ``parents`` (last parent varies fastest).
    """

    cardinality: int
    parents: tuple[str, ...] = ()
    table: tuple[tuple[float, ...], ...] = ((0.5, 0.5),)

    def kind(self) -> ColumnKind:
        return ColumnKind(DISCRETE, self.cardinality)

    def to_json(self) -> dict:
        return {
            "type": "discrete_cpt",
            "cardinality": self.cardinality,
            "parents": list(self.parents),
            "table": [list(r) for r in self.table],
        }


Mechanism = Union[LinearGaussian, DiscreteCpt]


def mechanism_from_json(obj: Mapping) -> Mechanism:
    t = obj.get("type")
    if t == "linear_gaussian":
        return LinearGaussian(
            weights={k: float(v) for k, v in obj.get("weights", {}).items()},
            noise_std=float(obj.get("noise_std", 1.0)),
            intercept=float(obj.get("intercept", 0.0)),
            binary=bool(obj.get("binary", False)),
        )
    if t == "discrete_cpt":
        return DiscreteCpt(
            cardinality=int(obj["cardinality"]),
            parents=tuple(obj.get("parents", ())),
            table=tuple(tuple(float(p) for p in row) for row in obj["table"]),
        )
    raise SpecError(f"unknown mechanism type {t!r}")


class ScmSpec:
    """A DAG plus one generating mechanism per node; validated at construction."""

    def __init__(self, dag: Dag, mechanisms: Mapping[str, Mechanism], annotations: Mapping | None = None):
        self.dag = dag
        self.mechanisms = dict(mechanisms)
        self.annotations = dict(annotations or {})
        self.kinds: dict[str, ColumnKind] = {}
        missing = set(dag.nodes) - set(self.mechanisms)
        if missing:
            raise SpecError(f"nodes without a mechanism: {sorted(missing)}")
        extra = set(self.mechanisms) - set(dag.nodes)
        if extra:
            raise SpecError(f"mechanisms for unknown nodes: {sorted(extra)}")
        self._tables: dict[str, np.ndarray] = {}
        for v in dag.topological_order:
            self._validate(v, self.mechanisms[v])
            self.kinds[v] = self.mechanisms[v].kind()

    def _validate(self, v: str, mech: Mechanism) -> None:
        parents = set(self.dag.parents(v))
        if isinstance(mech, LinearGaussian):
            if set(mech.weights) != parents:
                raise SpecError(f"{v}: weights must name exactly the parents {sorted(parents)}")
            if not all(math.isfinite(w) for w in mech.weights.values()):
                raise SpecError(f"{v}: non-finite weight")
            if not mech.noise_std > 0:
                raise SpecError(f"{v}: noise_std must be > 0")
        elif isinstance(mech, DiscreteCpt):
            if set(mech.parents) != parents or len(mech.parents) != len(parents):
                raise SpecError(f"{v}: CPT parents must be exactly {sorted(parents)}")
            cards = []
            for p in mech.parents:
                k = self.kinds[p]
                if not k.is_discrete:
                    raise SpecError(f"{v}: CPT parent {p} is continuous")
                cards.append(k.cardinality)
            table = np.asarray(mech.table, dtype=float)
            expected = (int(np.prod(cards)) if cards else 1, mech.cardinality)
            if table.shape != expected:
                raise SpecError(f"{v}: CPT shape {table.shape} != {expected}")
            if (table < 0).any() or np.abs(table.sum(axis=1) - 1).max() > 1e-9:
                raise SpecError(f"{v}: CPT rows must be probabilities summing to 1")
            self._tables[v] = np.cumsum(table, axis=1)
        else:
            raise SpecError(f"{v}: unsupported mechanism {type(mech).__name__}")

    @property
    def roles(self) -> Roles:
        return self.dag.role_assignment()

    def to_json(self) -> dict:
        out = self.dag.to_json()
        for node in out["nodes"]:
            node["mechanism"] = self.mechanisms[node["name"]].to_json()
        if self.annotations:
            out["annotations"] = self.annotations
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ScmSpec":
        dag = Dag.from_json(obj)
        mechs = {}
        for node in obj["nodes"]:
            if "mechanism" not in node:
                raise SpecError(f"node {node['name']!r} has no mechanism")
            mechs[node["name"]] = mechanism_from_json(node["mechanism"])
        return cls(dag, mechs, obj.get("annotations"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ScmSpec":
        return cls.from_json(json.loads(Path(path).read_text()))


# -- datasets ------------------------------------------------------------------


class Dataset:
    """Column-major table; continuous columns are float64, discrete ones int64."""

    def __init__(
        self,
        columns: Mapping[str, np.ndarray],
        kinds: Mapping[str, ColumnKind],
        roles: Mapping[str, Role | str] | None = None,
    ):
        self.names = tuple(columns)
        self.kinds = {c: kinds[c] for c in self.names}
        self.roles = {c: Role(r) for c, r in (roles or {}).items()}
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ContractError("dataset is not rectangular")
        self.n_rows = lengths.pop() if lengths else 0
        self.columns: dict[str, np.ndarray] = {}
        for c in self.names:
            k = self.kinds[c]
            if k.is_discrete:
                arr = np.asarray(columns[c], dtype=np.int64)
                if arr.size and (arr.min() < 0 or arr.max() >= k.cardinality):
                    raise ContractError(f"column {c!r} has values outside [0, {k.cardinality})")
            else:
                arr = np.asarray(columns[c], dtype=np.float64)
                if not np.isfinite(arr).all():
                    raise ContractError(f"column {c!r} has missing or non-finite values")
            arr.flags.writeable = False
            self.columns[c] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise LookupFailure(f"unknown column {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def __len__(self) -> int:
        return self.n_rows

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self[c].astype(float) for c in names])

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset({c: self.columns[c][rows] for c in self.names}, self.kinds, self.roles)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.names == other.names
            and self.kinds == other.kinds
            and all(np.array_equal(self.columns[c], other.columns[c]) for c in self.names)
        )

    def column_meta(self) -> dict:
        out = {}
        for c in self.names:
            k = self.kinds[c]
            entry = {"kind": k.kind}
            if k.is_discrete:
                entry["cardinality"] = k.cardinality
            if c in self.roles:
                entry["role"] = self.roles[c].value
            out[c] = entry
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.names)
            cols = [self.columns[c] for c in self.names]
            fmt = [
                (lambda v: str(int(v))) if self.kinds[c].is_discrete else (lambda v: repr(float(v)))
                for c in self.names
            ]
            for i in range(self.n_rows):
                w.writerow([f(col[i]) for f, col in zip(fmt, cols)])

    @classmethod
    def from_csv(cls, path: str | Path, sidecar: Mapping | None = None) -> "Dataset":
        """Read a CSV with a header row.

        ``sidecar`` may carry a ``columns`` map (column -> kind/cardinality/role) and
        the role lists of a roles file. Columns without a declared kind are
        continuous unless every value is a small non-negative integer.
        """
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ContractError(f"{path}: empty CSV")
        header, body = rows[0], rows[1:]
        if any(len(r) != len(header) for r in body):
            raise ContractError(f"{path}: ragged rows")
        meta = dict((sidecar or {}).get("columns", {}))
        roles: dict[str, str] = {c: m["role"] for c, m in meta.items() if "role" in m}
        if sidecar is not None and "target" in sidecar:
            r = Roles.from_json(sidecar)
            for c in header:
                role = r.role_of(c)
                if role is not None:
                    roles[c] = role.value
        cols, kinds = {}, {}
        for j, c in enumerate(header):
            try:
                raw = np.array([float(r[j]) for r in body])
            except ValueError:
                raise ContractError(f"{path}: column {c!r} is not numeric") from None
            m = meta.get(c, {})
            if "kind" in m:
                kind = ColumnKind(m["kind"], m.get("cardinality"))
            elif raw.size and np.all(raw == np.round(raw)) and raw.min() >= 0 and raw.max() < 64:
                kind = ColumnKind(DISCRETE, max(2, int(raw.max()) + 1))
            else:
                kind = ColumnKind(CONTINUOUS)
            cols[c], kinds[c] = raw, kind
        return cls(cols, kinds, {c: r for c, r in roles.items() if c in cols})


# -- sampling -----------------------------------------------------------------


def _coerce_value(spec: ScmSpec, v: str, value) -> float:
    k = spec.kinds[v]
    if k.is_discrete:
        if isinstance(value, bool) or float(value) != int(value) or not 0 <= int(value) < k.cardinality:
            raise ContractError(f"do({v}={value!r}) is not a valid level of a {k.cardinality}-level variable")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ContractError(f"do({v}={value!r}) is not finite")
    return value


def _sample(spec: ScmSpec, n: int, seed: int, assignments: Mapping[str, float]) -> Dataset:
    if int(n) < 1:
        raise ContractError("row count must be >= 1")
    n = int(n)
    rng = np.random.default_rng(seed)
    values: dict[str, np.ndarray] = {}
    for v in spec.dag.topological_order:
        mech = spec.mechanisms[v]
        if isinstance(mech, LinearGaussian):
            noise = rng.standard_normal(n)
            if v in assignments:
                values[v] = np.full(n, assignments[v], dtype=float)
                continue
            latent = mech.intercept + mech.noise_std * noise
            for p, w in mech.weights.items():
                latent = latent + w * values[p]
            values[v] = (latent > 0).astype(np.int64) if mech.binary else latent
        else:
            u = rng.random(n)
            if v in assignments:
                values[v] = np.full(n, assignments[v], dtype=np.int64)
                continue
            cum = spec._tables[v]
            if mech.parents:
                idx = np.zeros(n, dtype=np.int64)
                for p in mech.parents:
                    idx = idx * spec.kinds[p].cardinality + values[p].astype(np.int64)
                rows = cum[idx]
            else:
                rows = np.broadcast_to(cum[0], (n, mech.cardinality))
            # guard against cumulative sums that round to just below 1
            values[v] = np.minimum((u[:, None] >= rows).sum(axis=1), mech.cardinality - 1)
    order = spec.dag.nodes
    return Dataset({v: values[v] for v in order}, spec.kinds, spec.dag.roles)


def sample(spec: ScmSpec, n: int, seed: int) -> Dataset:
    return _sample(spec, n, seed, {})


def intervene_sample(spec: ScmSpec, assignments: Mapping[str, float], n: int, seed: int) -> Dataset:
    """Sample from the mutilated model with each assigned node clamped to its value."""
    clamped = {}
    for v, value in assignments.items():
        if v not in spec.kinds:
            raise LookupFailure(f"unknown variable {v!r}")
        if v == spec.dag.target:
            raise ContractError("the target variable cannot be intervened on")
        clamped[v] = _coerce_value(spec, v, value)
    return _sample(spec, n, seed, clamped)


# -- synthetic benchmark -----------------------------------------------------------

WEIGHT_RANGE = (0.5, 1.5)
SENSITIVE_WEIGHT_RANGE = (1.0, 1.5)
ADMISSIBLE_LEVELS = 3
ADMISSIBLE_GIVEN_S = ((0.6, 0.3, 0.1), (0.1, 0.3, 0.6))


def _signed(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.choice((-1.0, 1.0)) * rng.uniform(lo, hi))


def gen_benchmark(
    n_features: int,
    p_biased: float = 0.0,
    seed: int = 0,
    n_biased: int | None = None,
) -> ScmSpec:
    """Synthetic fair-selection instance.

    Topology: binary S; three-level admissible A with parent S; candidates
    ``X1..Xn``. A biased candidate is a child of S (|weight| in [1.0, 1.5]) and a
    parent of Y, signed so that its S -> X -> Y effect is positive. A clean
    candidate has A as parent with probability 1/2 and an earlier clean
    candidate as parent with probability 1/4, and feeds Y with probability 1/2.
    Y is a probit unit over A, all biased and the chosen clean candidates, with
    its intercept centring the latent at zero.

    Edges among A and the clean candidates are positive so that no two directed
    paths into a candidate can cancel; magnitudes stay in [0.5, 1.5].

    Each candidate is biased independently with probability ``p_biased``;
    ``n_biased`` instead fixes the count exactly (positions drawn uniformly).
    """
    if n_features < 1:
        raise ContractError("n_features must be >= 1")
    if not 0.0 <= p_biased <= 1.0:
        raise ContractError("p_biased must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    feats = [f"X{i + 1}" for i in range(n_features)]
    if n_biased is None:
        is_biased = rng.random(n_features) < p_biased
    else:
        if not 0 <= n_biased <= n_features:
            raise ContractError("n_biased must lie in [0, n_features]")
        is_biased = np.zeros(n_features, dtype=bool)
        is_biased[rng.choice(n_features, size=n_biased, replace=False)] = True

    nodes = ["S", "A", *feats, "Y"]
    roles = {"S": Role.SENSITIVE, "A": Role.ADMISSIBLE, "Y": Role.TARGET}
    roles.update({f: Role.CANDIDATE for f in feats})
    edges = [("S", "A"), ("A", "Y")]
    mechs: dict[str, Mechanism] = {
        "S": DiscreteCpt(2, (), ((0.5, 0.5),)),
        "A": DiscreteCpt(ADMISSIBLE_LEVELS, ("S",), ADMISSIBLE_GIVEN_S),
    }
    mean = {"S": 0.5, "A": float(np.dot(np.mean(ADMISSIBLE_GIVEN_S, axis=0), range(ADMISSIBLE_LEVELS)))}
    y_weights = {"A": rng.uniform(*WEIGHT_RANGE)}
    biased, clean, y_clean = [], [], []
    for f, b in zip(feats, is_biased):
        if b:
            w_s = _signed(rng, *SENSITIVE_WEIGHT_RANGE)
            weights = {"S": w_s}
            y_weights[f] = math.copysign(rng.uniform(*WEIGHT_RANGE), w_s)
            biased.append(f)
        else:
            weights = {}
            if rng.random() < 0.5:
                weights["A"] = rng.uniform(*WEIGHT_RANGE)
            if clean and rng.random() < 0.25:
                weights[clean[int(rng.integers(len(clean)))]] = rng.uniform(*WEIGHT_RANGE)
            if rng.random() < 0.5:
                y_weights[f] = _signed(rng, *WEIGHT_RANGE)
                y_clean.append(f)
            clean.append(f)
        edges += [(p, f) for p in weights]
        mechs[f] = LinearGaussian(weights, 1.0, 0.0)
        mean[f] = sum(w * mean[p] for p, w in weights.items())
    edges += [(p, "Y") for p in y_weights if p != "A"]
    intercept = -sum(w * mean[p] for p, w in y_weights.items())
    mechs["Y"] = LinearGaussian(y_weights, 1.0, intercept, binary=True)
    dag = Dag(nodes, edges, roles)
    annotations = {
        "generator": "fair-selection benchmark",
        "n_features": n_features,
        "p_biased": p_biased,
        "seed": seed,
        "biased": biased,
        "clean": clean,
        "y_clean_parents": y_clean,
    }
    return ScmSpec(dag, mechs, annotations)


def scale_sensitive_effects(spec: ScmSpec, factor: float, features: Sequence[str] | None = None) -> ScmSpec:
    """Copy of ``spec`` with every sensitive -> candidate weight multiplied by ``factor``.

    Structure is unchanged; only the strength of the listed (default: all)
    candidates' dependence on the sensitive nodes moves.
    """
    sens = set(spec.dag.sensitive)
    targets = set(spec.dag.candidates if features is None else features)
    mechs = dict(spec.mechanisms)
    for v in targets:
        m = mechs[v]
        if isinstance(m, LinearGaussian) and sens & set(m.weights):
            w = {p: (x * factor if p in sens else x) for p, x in m.weights.items()}
            mechs[v] = replace(m, weights=w)
    return ScmSpec(spec.dag, mechs, spec.annotations)

