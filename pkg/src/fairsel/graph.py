"""Causal DAGs with variable roles, d-separation and fair-set oracles.

Two independent d-separation routes live here: :func:`d_separated_bruteforce`
enumerates every simple path in the skeleton and checks each with
:func:`is_blocked`; :func:`d_separated` runs a linear-time active-trail
reachability search. Tests compare the two on random graphs.
"""

from __future__ import annotations

import enum
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ContractError, LookupFailure, StructuralError


class Role(str, enum.Enum):
    SENSITIVE = "sensitive"
    ADMISSIBLE = "admissible"
    CANDIDATE = "candidate"
    TARGET = "target"


@dataclass(frozen=True)
class Roles:
    """Role assignment of the variables used by the selectors."""

    sensitive: tuple[str, ...]
    admissible: tuple[str, ...]
    target: str
    candidates: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sensitive", tuple(self.sensitive))
        object.__setattr__(self, "admissible", tuple(self.admissible))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.sensitive:
            raise ContractError("roles: at least one sensitive variable is required")
        if not self.target:
            raise ContractError("roles: a target variable is required")
        seen: set[str] = set()
        for name in (*self.sensitive, *self.admissible, self.target, *self.candidates):
            if name in seen:
                raise ContractError(f"roles: variable {name!r} has more than one role")
            seen.add(name)

    @classmethod
    def from_json(cls, obj: Mapping) -> "Roles":
        for key in ("sensitive", "target"):
            if not obj.get(key):
                raise ContractError(f"roles file is missing the {key!r} role")
        return cls(
            sensitive=tuple(obj["sensitive"]),
            admissible=tuple(obj.get("admissible", ())),
            target=obj["target"],
            candidates=tuple(obj.get("candidates", ())),
        )

    def to_json(self) -> dict:
        return {
            "sensitive": list(self.sensitive),
            "admissible": list(self.admissible),
            "target": self.target,
            "candidates": list(self.candidates),
        }

    def role_of(self, name: str) -> Role | None:
        if name in self.sensitive:
            return Role.SENSITIVE
        if name in self.admissible:
            return Role.ADMISSIBLE
        if name == self.target:
            return Role.TARGET
        if name in self.candidates:
            return Role.CANDIDATE
        return None


class Dag:
    """Immutable DAG over named variables, each carrying a :class:`Role`.

    Node order is preserved and used for every deterministic traversal.
    """

    def __init__(
        self,
        nodes: Iterable[str],
        edges: Iterable[tuple[str, str]],
        roles: Mapping[str, Role | str],
    ):
        self._nodes = tuple(nodes)
        self._index = {v: i for i, v in enumerate(self._nodes)}
        if len(self._index) != len(self._nodes):
            raise StructuralError("duplicate node names")
        self._edges = tuple(dict.fromkeys((str(a), str(b)) for a, b in edges))
        self._parents: dict[str, tuple[str, ...]] = {v: () for v in self._nodes}
        self._children: dict[str, tuple[str, ...]] = {v: () for v in self._nodes}
        for a, b in self._edges:
            if a not in self._index or b not in self._index:
                raise LookupFailure(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise StructuralError(f"self-loop on {a}")
            self._parents[b] += (a,)
            self._children[a] += (b,)
        self._roles = {}
        for v in self._nodes:
            if v not in roles:
                raise StructuralError(f"node {v!r} has no role")
            self._roles[v] = Role(roles[v])
        extra = set(roles) - set(self._nodes)
        if extra:
            raise LookupFailure(f"roles given for unknown nodes: {sorted(extra)}")
        self._order = self._toposort()
        self._validate_roles()

    def _toposort(self) -> tuple[str, ...]:
        indeg = {v: len(self._parents[v]) for v in self._nodes}
        ready = deque(v for v in self._nodes if indeg[v] == 0)
        order = []
        while ready:
            v = ready.popleft()
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self._nodes):
            raise StructuralError("graph contains a cycle")
        return tuple(order)

    def _validate_roles(self) -> None:
        targets = [v for v in self._nodes if self._roles[v] is Role.TARGET]
        if len(targets) != 1:
            raise StructuralError(f"expected exactly one target node, found {len(targets)}")
        (self._target,) = targets
        if self._children[self._target]:
            raise StructuralError(f"target {self._target!r} must have no children")
        for v in self._nodes:
            if self._roles[v] is Role.SENSITIVE and self._parents[v]:
                raise StructuralError(f"sensitive node {v!r} must have no parents")

    # -- accessors ---------------------------------------------------------

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return self._edges

    @property
    def roles(self) -> dict[str, Role]:
        return dict(self._roles)

    @property
    def topological_order(self) -> tuple[str, ...]:
        return self._order

    def parents(self, v: str) -> tuple[str, ...]:
        self._check(v)
        return self._parents[v]

    def children(self, v: str) -> tuple[str, ...]:
        self._check(v)
        return self._children[v]

    def has_edge(self, a: str, b: str) -> bool:
        return a in self._index and b in self._children[a]

    def _check(self, *names: str) -> None:
        for v in names:
            if v not in self._index:
                raise LookupFailure(f"unknown variable {v!r}")

    def with_role(self, role: Role) -> tuple[str, ...]:
        return tuple(v for v in self._nodes if self._roles[v] is role)

    @property
    def sensitive(self) -> tuple[str, ...]:
        return self.with_role(Role.SENSITIVE)

    @property
    def admissible(self) -> tuple[str, ...]:
        return self.with_role(Role.ADMISSIBLE)

    @property
    def candidates(self) -> tuple[str, ...]:
        return self.with_role(Role.CANDIDATE)

    @property
    def target(self) -> str:
        return self._target

    def role_assignment(self) -> Roles:
        return Roles(self.sensitive, self.admissible, self.target, self.candidates)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and set(self._edges) == set(other._edges)
            and self._roles == other._roles
        )

    def __hash__(self) -> int:
        return hash((self._nodes, frozenset(self._edges)))

    def __repr__(self) -> str:
        return f"Dag(nodes={len(self._nodes)}, edges={len(self._edges)})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "nodes": [{"name": v, "role": self._roles[v].value} for v in self._nodes],
            "edges": [{"from": a, "to": b} for a, b in self._edges],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Dag":
        nodes = [n["name"] for n in obj["nodes"]]
        roles = {n["name"]: n["role"] for n in obj["nodes"]}
        edges = [(e["from"], e["to"]) for e in obj.get("edges", ())]
        try:
            return cls(nodes, edges, roles)
        except ValueError as exc:
            if isinstance(exc, StructuralError):
                raise
            raise StructuralError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | FsPath) -> "Dag":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# -- paths ------------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    """A simple path in the skeleton; ``forward[i]`` is True iff the i-th step is nodes[i] -> nodes[i+1]."""

    nodes: tuple[str, ...]
    forward: tuple[bool, ...] = field(default=())

    @classmethod
    def through(cls, dag: Dag, nodes: Sequence[str]) -> "Path":
        nodes = tuple(nodes)
        dag._check(*nodes)
        if len(set(nodes)) != len(nodes):
            raise StructuralError(f"path repeats a node: {nodes}")
        forward = []
        for a, b in zip(nodes, nodes[1:]):
            if dag.has_edge(a, b):
                forward.append(True)
            elif dag.has_edge(b, a):
                forward.append(False)
            else:
                raise StructuralError(f"{a} and {b} are not adjacent")
        return cls(nodes, tuple(forward))

    def __str__(self) -> str:
        out = [self.nodes[0]]
        for fwd, v in zip(self.forward, self.nodes[1:]):
            out.append(" -> " if fwd else " <- ")
            out.append(v)
        return "".join(out)


def descendants(dag: Dag, v: str) -> set[str]:
    dag._check(v)
    seen: set[str] = set()
    stack = list(dag.children(v))
    while stack:
        u = stack.pop()
        if u not in seen:
            seen.add(u)
            stack.extend(dag.children(u))
    return seen


def ancestors(dag: Dag, vs: Iterable[str]) -> set[str]:
    """Ancestors of ``vs``, including ``vs`` themselves."""
    seen: set[str] = set()
    stack = list(vs)
    while stack:
        u = stack.pop()
        if u not in seen:
            seen.add(u)
            stack.extend(dag.parents(u))
    return seen


def is_blocked(dag: Dag, path: Path | Sequence[str], z: Iterable[str]) -> bool:
    if not isinstance(path, Path):
        path = Path.through(dag, path)
    else:
        # re-derive directions so a hand-built Path is validated against this graph
        path = Path.through(dag, path.nodes)
    z = set(z)
    dag._check(*z)
    if path.nodes[0] in z or path.nodes[-1] in z:
        raise ContractError("conditioning set contains a path endpoint")
    for i in range(1, len(path.nodes) - 1):
        mid = path.nodes[i]
        collider = path.forward[i - 1] and not path.forward[i]
        if collider:
            if mid not in z and not (descendants(dag, mid) & z):
                return True
        elif mid in z:
            return True
    return False


def simple_paths(dag: Dag, a: str, b: str) -> Iterator[Path]:
    """Every simple path between ``a`` and ``b`` in the undirected skeleton."""
    nbrs = {v: set(dag.parents(v)) | set(dag.children(v)) for v in dag.nodes}
    stack = [(a, [a])]
    while stack:
        v, trail = stack.pop()
        if v == b:
            yield Path.through(dag, trail)
            continue
        for u in sorted(nbrs[v], key=dag._index.__getitem__, reverse=True):
            if u not in trail:
                stack.append((u, trail + [u]))


def _check_disjoint(dag: Dag, x, y, z) -> tuple[set, set, set]:
    x, y, z = set(x), set(y), set(z)
    dag._check(*x, *y, *z)
    if x & y or x & z or y & z:
        raise ContractError("x, y and z must be pairwise disjoint")
    return x, y, z


def d_separated_bruteforce(dag: Dag, x: Iterable[str], y: Iterable[str], z: Iterable[str]) -> bool:
    """Exhaustive path enumeration; exponential, used as a test oracle."""
    x, y, z = _check_disjoint(dag, x, y, z)
    for a in sorted(x):
        for b in sorted(y):
            for p in simple_paths(dag, a, b):
                if not is_blocked(dag, p, z):
                    return False
    return True


def _reach(dag: Dag, sources: Iterable[str], z: set[str]):
    """Active-trail search; returns (reachable nodes, predecessor map over (node, direction) states).

    Direction "up" means the node was entered from one of its children, "down" from a parent.
    """
    anc_z = ancestors(dag, z)
    pred: dict[tuple[str, str], tuple[str, str] | None] = {}
    queue = deque()
    for s in sources:
        pred[(s, "up")] = None
        queue.append((s, "up"))
    reached: set[str] = set()
    while queue:
        state = queue.popleft()
        v, d = state
        if v not in z:
            reached.add(v)
        nxt = []
        if d == "up" and v not in z:
            nxt += [(p, "up") for p in dag.parents(v)]
            nxt += [(c, "down") for c in dag.children(v)]
        elif d == "down":
            if v not in z:
                nxt += [(c, "down") for c in dag.children(v)]
            if v in anc_z:
                nxt += [(p, "up") for p in dag.parents(v)]
        for s in nxt:
            if s not in pred:
                pred[s] = state
                queue.append(s)
    return reached, pred


def d_connected_set(dag: Dag, sources: Iterable[str], z: Iterable[str]) -> set[str]:
    """Nodes outside ``z`` joined to some source by a trail active given ``z``."""
    sources = set(sources)
    z = set(z)
    dag._check(*sources, *z)
    reached, _ = _reach(dag, sources, z)
    return reached - sources


def d_separated(dag: Dag, x: Iterable[str], y: Iterable[str], z: Iterable[str]) -> bool:
    x, y, z = _check_disjoint(dag, x, y, z)
    if not x or not y:
        return True
    return not (d_connected_set(dag, x, z) & y)


def witness_path(dag: Dag, x: Iterable[str], y: Iterable[str], z: Iterable[str]) -> Path | None:
    """An unblocked path from x to y given z, or None when d-separated."""
    x, y, z = _check_disjoint(dag, x, y, z)
    reached, pred = _reach(dag, x, z)
    hit = next((v for v in dag.nodes if v in y and v in reached), None)
    if hit is None:
        return None
    end = next(s for s in ((hit, "down"), (hit, "up")) if s in pred)
    trail = []
    state = end
    while state is not None:
        trail.append(state[0])
        state = pred[state]
    trail.reverse()
    # loop-erase the trail (collider detours revisit nodes)
    simple: list[str] = []
    for v in trail:
        if v in simple:
            del simple[simple.index(v) + 1 :]
        else:
            simple.append(v)
    path = Path.through(dag, simple)
    if not is_blocked(dag, path, z):
        return path
    for a in sorted(x, key=dag._index.__getitem__):
        for b in sorted(y, key=dag._index.__getitem__):
            for p in simple_paths(dag, a, b):
                if not is_blocked(dag, p, z):
                    return p
    raise AssertionError("reachability and path enumeration disagree")


# -- graph surgery and fair-set oracles ----------------------------------------


def remove_incoming(dag: Dag, targets: Iterable[str]) -> Dag:
    targets = set(targets)
    dag._check(*targets)
    edges = [(a, b) for a, b in dag.edges if b not in targets]
    return Dag(dag.nodes, edges, dag.roles)


def _subsets(items: Sequence[str]) -> Iterator[tuple[str, ...]]:
    """Full set first, then the remaining subsets by increasing size."""
    yield tuple(items)
    for r in range(len(items)):
        yield from itertools.combinations(items, r)


def oracle_c1(dag: Dag, subset_mode: bool = False) -> set[str]:
    s, a = dag.sensitive, dag.admissible
    conds = list(_subsets(a)) if subset_mode else [a]
    out = set()
    for x in dag.candidates:
        if any(d_separated(dag, {x}, s, c) for c in conds):
            out.add(x)
    return out


def oracle_c2(dag: Dag, c1: Iterable[str]) -> set[str]:
    c1 = set(c1)
    z = set(dag.admissible) | c1
    return {
        x for x in dag.candidates if x not in c1 and d_separated(dag, {x}, {dag.target}, z)
    }


def oracle_condition_iii(dag: Dag) -> set[str]:
    """Candidates that are not descendants of any sensitive node once edges into A are cut."""
    cut = remove_incoming(dag, dag.admissible)
    reach: set[str] = set()
    for s in dag.sensitive:
        reach |= descendants(cut, s)
    return {x for x in dag.candidates if x not in reach}


def oracle_theorem(dag: Dag) -> set[str]:
    """Every candidate that is safe to add: the full three-condition characterization.

    Condition (i) allows any subset of the admissible set. Condition (ii) uses the
    full-A first-phase set as its certifying set, which is jointly separated from S.
    """
    c1_plain = oracle_c1(dag, subset_mode=False)
    c1_any = oracle_c1(dag, subset_mode=True)
    return c1_any | oracle_c2(dag, c1_plain) | oracle_condition_iii(dag)


# -- random instances -------------------------------------------------------


def random_dag(
    n_nodes: int,
    n_edges: int,
    seed: int,
    n_sensitive: int = 1,
    n_admissible: int = 1,
) -> Dag:
    """Random DAG honouring the role constraints (sensitive roots, childless target).

    Node order is a topological order; sensitive nodes come first and the target last.
    """
    if n_nodes < n_sensitive + n_admissible + 1:
        raise ContractError("too few nodes for the requested roles")
    rng = np.random.default_rng(seed)
    names = [f"V{i}" for i in range(n_nodes)]
    roles = {}
    for i, v in enumerate(names):
        roles[v] = Role.SENSITIVE if i < n_sensitive else Role.CANDIDATE
    roles[names[-1]] = Role.TARGET
    middle = names[n_sensitive:-1]
    for i in rng.choice(len(middle), size=n_admissible, replace=False):
        roles[middle[int(i)]] = Role.ADMISSIBLE
    allowed = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes) if j >= n_sensitive]
    k = min(n_edges, len(allowed))
    picks = rng.choice(len(allowed), size=k, replace=False)
    edges = [(names[allowed[p][0]], names[allowed[p][1]]) for p in sorted(picks)]
    return Dag(names, edges, roles)
