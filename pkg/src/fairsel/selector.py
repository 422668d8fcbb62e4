"""Sequential and group-testing selection of causally fair features.

Both selectors run two phases. Phase 1 keeps candidates independent of the
sensitive set given the admissible set (``c1``). Phase 2 keeps the remaining
candidates that are independent of the target given ``A | c1`` (``c2``).
The group-testing variant tests whole groups and bisects only dependent ones.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .citest import DEFAULT_ALPHA, CiBackend, CiQuery, CiResult, make_backend
from .citest import group_split
from .errors import ContractError
from .graph import Dag, Role, Roles, _subsets
from .scm import gen_benchmark


@dataclass(frozen=True)
class TraceEntry:
    phase: int
    query: CiQuery
    result: CiResult

    def to_json(self) -> dict:
        return {"phase": self.phase, **self.query.to_json(), **self.result.to_json()}


@dataclass(frozen=True)
class SelectionResult:
    c1: tuple[str, ...]
    c2: tuple[str, ...]
    trace: tuple[TraceEntry, ...] = field(default=())
    algorithm: str = ""

    @property
    def selected(self) -> tuple[str, ...]:
        return self.c1 + self.c2

    @property
    def test_count(self) -> int:
        return len(self.trace)

    @property
    def phase1_count(self) -> int:
        return sum(1 for e in self.trace if e.phase == 1)

    @property
    def phase2_count(self) -> int:
        return sum(1 for e in self.trace if e.phase == 2)

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "c1": list(self.c1),
            "c2": list(self.c2),
            "selected": list(self.selected),
            "test_count": self.test_count,
            "phase1_tests": self.phase1_count,
            "phase2_tests": self.phase2_count,
        }

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in self.trace)


class _Run:
    """Shared bookkeeping: issues queries, records the trace."""

    def __init__(self, backend: CiBackend, roles: Roles, alpha: float, subset_mode: bool):
        self.backend = backend
        self.roles = roles
        self.alpha = alpha
        self.subset_mode = subset_mode
        self.trace: list[TraceEntry] = []

    def ask(self, phase: int, x: Sequence[str], y: Sequence[str], z: Sequence[str]) -> bool:
        q = CiQuery(tuple(x), tuple(y), tuple(z), self.alpha)
        r = self.backend.test(q)
        self.trace.append(TraceEntry(phase, q, r))
        return r.independent

    def independent_of_sensitive(self, xs: Sequence[str]) -> bool:
        conds = _subsets(self.roles.admissible) if self.subset_mode else [self.roles.admissible]
        return any(self.ask(1, xs, self.roles.sensitive, c) for c in conds)

    def independent_of_target(self, xs: Sequence[str], c1: Sequence[str]) -> bool:
        return self.ask(2, xs, (self.roles.target,), (*self.roles.admissible, *c1))


def _roles_from(source) -> Roles | None:
    source = getattr(source, "data", source)
    dag = source if isinstance(source, Dag) else getattr(source, "dag", None)
    if dag is not None:
        return dag.role_assignment()
    data_roles = getattr(source, "roles", None)
    if data_roles:
        by_role = {r: [c for c, rr in data_roles.items() if rr is r] for r in Role}
        targets = by_role[Role.TARGET]
        if len(targets) != 1:
            raise ContractError("dataset roles must name exactly one target")
        return Roles(
            tuple(by_role[Role.SENSITIVE]),
            tuple(by_role[Role.ADMISSIBLE]),
            targets[0],
            tuple(by_role[Role.CANDIDATE]),
        )
    return None


def _prepare(source, roles: Roles | None, backend) -> tuple[CiBackend, Roles]:
    be = backend if isinstance(backend, CiBackend) else make_backend(backend, source)
    roles = roles if roles is not None else _roles_from(source if source is not None else be)
    if roles is None:
        raise ContractError("roles are required: give them explicitly or use a source that carries them")
    return be, roles


def seq_sel(
    source,
    roles: Roles | None = None,
    backend: str | CiBackend = "oracle",
    alpha: float = DEFAULT_ALPHA,
    subset_mode: bool = False,
    seed: int = 0,
) -> SelectionResult:
    """One CI test per candidate per phase.

    ``source`` is a Dag / ScmSpec (oracle backend) or a Dataset; ``seed`` is
    accepted for interface symmetry and unused.
    """
    be, roles = _prepare(source, roles, backend)
    run = _Run(be, roles, alpha, subset_mode)
    c1 = tuple(x for x in roles.candidates if run.independent_of_sensitive((x,)))
    rest = [x for x in roles.candidates if x not in set(c1)]
    c2 = tuple(x for x in rest if run.independent_of_target((x,), c1))
    return SelectionResult(c1, c2, tuple(run.trace), "seqsel")


def grp_sel(
    source,
    roles: Roles | None = None,
    backend: str | CiBackend = "oracle",
    alpha: float = DEFAULT_ALPHA,
    subset_mode: bool = False,
    seed: int = 0,
) -> SelectionResult:
    """Group testing with seeded random bisection of dependent groups.

    Phase 2 always conditions on ``A | c1`` as fixed at the end of phase 1.
    """
    be, roles = _prepare(source, roles, backend)
    run = _Run(be, roles, alpha, subset_mode)
    rng = np.random.default_rng(seed)

    def recurse(xs: tuple[str, ...], passes) -> list[str]:
        if not xs:
            return []
        if passes(xs):
            return list(xs)
        if len(xs) == 1:
            return []
        left, right = group_split(xs, int(rng.integers(2**63)))
        return recurse(left, passes) + recurse(right, passes)

    order = {x: i for i, x in enumerate(roles.candidates)}
    found1 = recurse(roles.candidates, run.independent_of_sensitive)
    c1 = tuple(sorted(found1, key=order.__getitem__))
    rest = tuple(x for x in roles.candidates if x not in set(c1))
    found2 = recurse(rest, lambda xs: run.independent_of_target(xs, c1))
    c2 = tuple(sorted(found2, key=order.__getitem__))
    return SelectionResult(c1, c2, tuple(run.trace), "grpsel")


ALGORITHMS = {"seqsel": seq_sel, "grpsel": grp_sel}


# -- test-count benchmark -------------------------------------------------------

BENCH_HEADER = ("algorithm", "n", "p", "seed", "test_count")


@dataclass(frozen=True)
class BenchRecord:
    algorithm: str
    n: int
    p: float
    seed: int
    test_count: int
    phase1_count: int
    c1_size: int


def bench_counts(
    n_grid: Iterable[int],
    p_grid: Iterable[float] | None = None,
    k_fixed: int | None = None,
    seeds: Iterable[int] = range(20),
) -> list[BenchRecord]:
    """Oracle-backend test counts of both selectors over benchmark instances.

    Give exactly one of ``p_grid`` (biased fraction) or ``k_fixed`` (biased count).
    """
    n_grid, seeds = list(n_grid), list(seeds)
    if (p_grid is None) == (k_fixed is None):
        raise ContractError("give exactly one of p_grid or k_fixed")
    settings = [(None, float(p)) for p in p_grid] if p_grid is not None else [(k_fixed, None)]
    if not n_grid or not seeds or not settings:
        raise ContractError("grids must be nonempty")
    out = []
    for n in n_grid:
        for k, p in settings:
            for s in seeds:
                spec = gen_benchmark(n, p if p is not None else 0.0, seed=s, n_biased=k)
                p_eff = p if p is not None else k / n
                for name, algo in ALGORITHMS.items():
                    r = algo(spec.dag, backend="oracle", seed=s)
                    out.append(BenchRecord(name, n, p_eff, s, r.test_count, r.phase1_count, len(r.c1)))
    return out


def bench_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in records:
        w.writerow([r.algorithm, r.n, repr(r.p), r.seed, r.test_count])
    return buf.getvalue()


def mean_counts(records: Iterable[BenchRecord]) -> dict[tuple[str, int, float], float]:
    groups: dict[tuple[str, int, float], list[int]] = {}
    for r in records:
        groups.setdefault((r.algorithm, r.n, r.p), []).append(r.test_count)
    return {k: float(np.mean(v)) for k, v in groups.items()}
