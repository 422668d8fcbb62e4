"""Conditional-independence tests for single variables and variable groups.

A group query ``(x, y | z)`` is answered from its pairwise tests: the group
is independent iff the smallest pairwise p-value exceeds ``alpha / (|x| |y|)``.
The reported p-value is the Bonferroni-adjusted minimum, so
``independent == (p_value > alpha)`` always holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import ContractError, DegenerateDataError, InsufficientDataError
from .graph import Dag, d_connected_set
from .scm import Dataset

DEFAULT_ALPHA = 0.01
BACKENDS = ("oracle", "fisher_z", "g_test")


@dataclass(frozen=True)
class CiQuery:
    x: tuple[str, ...]
    y: tuple[str, ...]
    z: tuple[str, ...] = ()
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.x or not self.y:
            raise ContractError("x and y must be nonempty")
        sx, sy, sz = set(self.x), set(self.y), set(self.z)
        if len(sx) != len(self.x) or len(sy) != len(self.y) or len(sz) != len(self.z):
            raise ContractError("duplicate variables in a query")
        if sx & sy or sx & sz or sy & sz:
            raise ContractError("x, y and z must be pairwise disjoint")
        if not 0.0 < self.alpha < 1.0:
            raise ContractError("alpha must lie in (0, 1)")

    def to_json(self) -> dict:
        return {"x": list(self.x), "y": list(self.y), "z": list(self.z), "alpha": self.alpha}


@dataclass(frozen=True)
class CiResult:
    independent: bool
    p_value: float
    statistic: float
    tests_consumed: int = 1

    def to_json(self) -> dict:
        return {
            "independent": self.independent,
            "p_value": self.p_value,
            "statistic": self.statistic,
            "tests_consumed": self.tests_consumed,
        }


class CiBackend:
    name = "abstract"

    def test(self, q: CiQuery) -> CiResult:
        raise NotImplementedError


class OracleBackend(CiBackend):
    """Answers queries by d-separation in a known graph."""

    name = "oracle"

    def __init__(self, dag: Dag):
        self.dag = dag
        self._cache: dict[tuple[frozenset, frozenset], frozenset] = {}

    def _connected(self, sources: Iterable[str], z: Iterable[str]) -> frozenset:
        key = (frozenset(sources), frozenset(z))
        hit = self._cache.get(key)
        if hit is None:
            hit = frozenset(d_connected_set(self.dag, key[0], key[1]))
            self._cache[key] = hit
        return hit

    def test(self, q: CiQuery) -> CiResult:
        self.dag._check(*q.x, *q.y, *q.z)
        # the y-side of selector queries repeats (S or Y with a fixed z), so cache from there
        independent = not (self._connected(q.y, q.z) & set(q.x))
        return CiResult(independent, 1.0 if independent else 0.0, 0.0, 1)


class _PairwiseBackend(CiBackend):
    def __init__(self, data: Dataset):
        self.data = data

    def pair(self, a: str, b: str, z: tuple[str, ...]) -> tuple[float, float]:
        raise NotImplementedError

    def _check_columns(self, q: CiQuery) -> None:
        for c in (*q.x, *q.y, *q.z):
            self.data[c]

    def test(self, q: CiQuery) -> CiResult:
        self._check_columns(q)
        m = len(q.x) * len(q.y)
        best_p, best_stat = 2.0, 0.0
        for a in q.x:
            for b in q.y:
                stat, p = self.pair(a, b, q.z)
                if p < best_p:
                    best_p, best_stat = p, stat
        adjusted = min(1.0, best_p * m)
        independent = best_p > q.alpha / m
        return CiResult(independent, adjusted, best_stat, m)


class FisherZBackend(_PairwiseBackend):
    """Partial correlation via least-squares residuals, Fisher z-transform, two-sided normal p-value.

    Discrete columns are used as numeric values (a binary sensitive attribute or
    target is fine); the test is exact for linear-Gaussian dependence.
    """

    name = "fisher_z"

    def __init__(self, data: Dataset):
        super().__init__(data)
        self._basis: dict[tuple[str, ...], np.ndarray] = {}
        self._resid: dict[tuple[str, tuple[str, ...]], np.ndarray] = {}
        self._std: dict[str, float] = {}

    def _check_columns(self, q: CiQuery) -> None:
        super()._check_columns(q)
        n, k = self.data.n_rows, len(q.z)
        if n < k + 10:
            raise InsufficientDataError(f"fisher_z needs n >= |z| + 10 = {k + 10} rows, have {n}")
        for c in (*q.x, *q.y, *q.z):
            if c not in self._std:
                self._std[c] = float(np.std(self.data[c]))
            if self._std[c] == 0.0:
                raise DegenerateDataError(f"column {c!r} has zero variance")

    def _q(self, z: tuple[str, ...]) -> np.ndarray:
        key = tuple(sorted(z))
        if key not in self._basis:
            design = np.column_stack([np.ones(self.data.n_rows), self.data.matrix(key)])
            u, s, _ = np.linalg.svd(design, full_matrices=False)
            rank = int((s > s[0] * 1e-10).sum())
            self._basis[key] = u[:, :rank]
        return self._basis[key]

    def _residual(self, c: str, z: tuple[str, ...]) -> np.ndarray:
        key = (c, tuple(sorted(z)))
        if key not in self._resid:
            v = self.data[c].astype(float)
            q = self._q(z)
            self._resid[key] = v - q @ (q.T @ v)
        return self._resid[key]

    def partial_correlation(self, a: str, b: str, z: Sequence[str] = ()) -> float:
        ra, rb = self._residual(a, tuple(z)), self._residual(b, tuple(z))
        na, nb = float(ra @ ra), float(rb @ rb)
        scale = self.data.n_rows * 1e-24
        if na <= scale * self._std[a] ** 2 or nb <= scale * self._std[b] ** 2:
            # a column fully determined by z is conditionally constant
            return 0.0
        return float(ra @ rb) / math.sqrt(na * nb)

    def pair(self, a: str, b: str, z: tuple[str, ...]) -> tuple[float, float]:
        r = self.partial_correlation(a, b, z)
        r = min(max(r, -1 + 1e-15), 1 - 1e-15)
        stat = math.sqrt(self.data.n_rows - len(z) - 3) * math.atanh(r)
        p = 2.0 * stats.norm.sf(abs(stat))
        return stat, float(p)


class GTestBackend(_PairwiseBackend):
    """Likelihood-ratio G test on the contingency table of (a, b) within each stratum of z.

    Degrees of freedom sum ``(rows - 1)(cols - 1)`` over strata, counting only
    levels observed in the stratum.
    """

    name = "g_test"
    MIN_EXPECTED_PER_CELL = 5

    def _check_columns(self, q: CiQuery) -> None:
        super()._check_columns(q)
        for c in (*q.x, *q.y, *q.z):
            if not self.data.kinds[c].is_discrete:
                raise ContractError(f"g_test needs discrete columns; {c!r} is continuous")
        for a in q.x:
            for b in q.y:
                cells = self._card(a) * self._card(b) * math.prod(self._card(c) for c in q.z)
                need = self.MIN_EXPECTED_PER_CELL * cells
                if self.data.n_rows < need:
                    raise InsufficientDataError(
                        f"g_test on ({a}, {b} | {len(q.z)} vars) needs >= {need} rows, have {self.data.n_rows}"
                    )

    def _card(self, c: str) -> int:
        return self.data.kinds[c].cardinality

    def pair(self, a: str, b: str, z: tuple[str, ...]) -> tuple[float, float]:
        ka, kb = self._card(a), self._card(b)
        stratum = np.zeros(self.data.n_rows, dtype=np.int64)
        for c in z:
            stratum = stratum * self._card(c) + self.data[c]
        _, stratum = np.unique(stratum, return_inverse=True)
        n_strata = int(stratum.max()) + 1
        flat = (stratum * ka + self.data[a]) * kb + self.data[b]
        counts = np.bincount(flat, minlength=n_strata * ka * kb).reshape(n_strata, ka, kb).astype(float)
        g, df = 0.0, 0
        for t in counts:
            rows, cols = t.sum(axis=1), t.sum(axis=0)
            total = rows.sum()
            r_obs, c_obs = int((rows > 0).sum()), int((cols > 0).sum())
            if r_obs < 2 or c_obs < 2:
                continue
            df += (r_obs - 1) * (c_obs - 1)
            expected = np.outer(rows, cols) / total
            mask = t > 0
            g += 2.0 * float((t[mask] * np.log(t[mask] / expected[mask])).sum())
        if df == 0:
            return 0.0, 1.0
        return g, float(stats.chi2.sf(g, df))


def make_backend(name: str, source) -> CiBackend:
    if isinstance(source, CiBackend):
        return source
    if name == "oracle":
        if not isinstance(source, Dag):
            source = getattr(source, "dag", source)
        if not isinstance(source, Dag):
            raise ContractError("the oracle backend needs a Dag")
        return OracleBackend(source)
    if name in ("fisher_z", "g_test"):
        if not isinstance(source, Dataset):
            raise ContractError(f"the {name} backend needs a Dataset")
        return FisherZBackend(source) if name == "fisher_z" else GTestBackend(source)
    raise ContractError(f"unknown backend {name!r}; choose from {BACKENDS}")


def ci_test(backend: str | CiBackend, data_or_dag, q: CiQuery) -> CiResult:
    if isinstance(backend, CiBackend):
        return backend.test(q)
    return make_backend(backend, data_or_dag).test(q)


def group_split(xs: Sequence[str], seed: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Seeded shuffle of ``xs`` split at ceil(len/2)."""
    xs = tuple(xs)
    if len(xs) < 2:
        raise ContractError("group_split needs at least two items")
    perm = np.random.default_rng(seed).permutation(len(xs))
    shuffled = tuple(xs[i] for i in perm)
    cut = (len(xs) + 1) // 2
    return shuffled[:cut], shuffled[cut:]
