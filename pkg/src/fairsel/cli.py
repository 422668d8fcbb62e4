"""Batch command-line front end: gen, select, eval, bench, dsep."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .citest import BACKENDS, DEFAULT_ALPHA
from .errors import ContractError, FairselError, LookupFailure
from .evaluation import evaluate_baselines
from .graph import Dag, Roles, d_separated, oracle_c1, oracle_c2, oracle_condition_iii, oracle_theorem, witness_path
from .scm import Dataset, ScmSpec, gen_benchmark, sample
from .selector import ALGORITHMS, bench_counts, bench_csv


@dataclass
class RunConfig:
    command: str
    spec: Path | None = None
    data: Path | None = None
    roles: Path | None = None
    alpha: float = DEFAULT_ALPHA
    backend: str = "fisher_z"
    algo: str = "grpsel"
    subset_mode: bool = False
    seed: int = 0
    out: Path = Path(".")
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ContractError("alpha must lie in (0, 1)")
        if self.backend not in BACKENDS:
            raise ContractError(f"backend must be one of {BACKENDS}")
        for name in ("spec", "data", "roles"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"{name} file not found: {p}")


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def _load_graph(path: Path) -> Dag:
    obj = _load_json(path)
    if all("mechanism" in n for n in obj.get("nodes", ())):
        return ScmSpec.from_json(obj).dag
    return Dag.from_json(obj)


def _roles_and_data(cfg: RunConfig) -> tuple[Roles | None, Dataset | None]:
    roles_obj = _load_json(cfg.roles) if cfg.roles else None
    roles = Roles.from_json(roles_obj) if roles_obj is not None else None
    data = Dataset.from_csv(cfg.data, roles_obj) if cfg.data else None
    if roles is not None and data is not None:
        for c in (*roles.sensitive, *roles.admissible, roles.target, *roles.candidates):
            if c not in data:
                raise LookupFailure(f"role file names column {c!r} absent from {cfg.data}")
    return roles, data


# -- commands ---------------------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> list[Path]:
    x = cfg.extra
    spec = gen_benchmark(x["n_features"], x["p"], cfg.seed, x.get("n_biased"))
    data = sample(spec, x["rows"], cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    paths = [cfg.out / n for n in ("scm.json", "data.csv", "roles.json", "fair_set.json")]
    spec.save(paths[0])
    data.to_csv(paths[1])
    _dump(paths[2], {**spec.roles.to_json(), "columns": data.column_meta()})
    dag = spec.dag
    c1 = oracle_c1(dag)
    order = {v: i for i, v in enumerate(dag.nodes)}

    def ordered(s):
        return sorted(s, key=order.__getitem__)

    _dump(
        paths[3],
        {
            "fair_set": ordered(oracle_theorem(dag)),
            "c1": ordered(c1),
            "c2": ordered(oracle_c2(dag, c1)),
            "condition_iii": ordered(oracle_condition_iii(dag)),
            "biased": spec.annotations.get("biased", []),
        },
    )
    return paths


def cmd_select(cfg: RunConfig) -> dict:
    roles, data = _roles_and_data(cfg)
    if cfg.backend == "oracle":
        if cfg.spec is None:
            raise ContractError("the oracle backend needs --spec")
        source = _load_graph(cfg.spec)
        roles = roles or source.role_assignment()
    else:
        if data is None or roles is None:
            raise ContractError(f"the {cfg.backend} backend needs --data and --roles")
        source = data
    result = ALGORITHMS[cfg.algo](source, roles, cfg.backend, cfg.alpha, cfg.subset_mode, cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = {**result.to_json(), "backend": cfg.backend, "alpha": cfg.alpha, "subset_mode": cfg.subset_mode, "seed": cfg.seed}
    _dump(cfg.out / "selected.json", {"selected": list(result.selected), "c1": list(result.c1), "c2": list(result.c2)})
    (cfg.out / "trace.jsonl").write_text(result.trace_jsonl())
    _dump(cfg.out / "summary.json", summary)
    return summary


def cmd_eval(cfg: RunConfig) -> dict:
    roles, data = _roles_and_data(cfg)
    if data is None or roles is None:
        raise ContractError("eval needs --data and --roles")
    spec = ScmSpec.load(cfg.spec) if cfg.spec else None
    selected = _load_json(cfg.extra["selected"])["selected"]
    evals = evaluate_baselines(data, roles, selected, spec, cfg.extra["n_mc"], cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = {name: e.report.to_json() for name, e in evals.items()}
    for name, e in evals.items():
        e.model.save(cfg.out / f"model_{name}.json")
    _dump(cfg.out / "report.json", report)
    return report


def cmd_bench(cfg: RunConfig) -> Path:
    x = cfg.extra
    records = bench_counts(x["n_grid"], x.get("p_grid"), x.get("k"), range(cfg.seed, cfg.seed + x["seeds"]))
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "bench.csv"
    path.write_text(bench_csv(records))
    return path


def cmd_dsep(cfg: RunConfig) -> tuple[bool, str | None]:
    dag = _load_graph(cfg.spec)
    x, y, z = cfg.extra["x"], cfg.extra["y"], cfg.extra["z"]
    sep = d_separated(dag, x, y, z)
    path = None if sep else str(witness_path(dag, x, y, z))
    return sep, path


# -- argument parsing -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "argument", "message": message}) + "\n")
        raise SystemExit(2)


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _fraction(s: str) -> float:
    v = float(s)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _names(s: str) -> list[str]:
    return [t for t in (p.strip() for p in s.split(",")) if t]


def _int_list(s: str) -> list[int]:
    return [_positive_int(t) for t in _names(s)]


def _float_list(s: str) -> list[float]:
    return [_fraction(t) for t in _names(s)]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fairsel", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, backend_default="fisher_z"):
        sp.add_argument("--spec", type=Path)
        sp.add_argument("--data", type=Path)
        sp.add_argument("--roles", type=Path)
        sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
        sp.add_argument("--backend", choices=BACKENDS, default=backend_default)
        sp.add_argument("--algo", choices=sorted(ALGORITHMS), default="grpsel")
        sp.add_argument("--subset-mode", action="store_true")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=Path("."))

    g = sub.add_parser("gen", help="generate a synthetic benchmark instance")
    common(g)
    g.add_argument("--n-features", type=_positive_int, required=True)
    g.add_argument("--p", type=_fraction, default=0.0)
    g.add_argument("--n-biased", type=int)
    g.add_argument("--rows", type=_positive_int, default=5000)

    s = sub.add_parser("select", help="run SeqSel or GrpSel")
    common(s)

    e = sub.add_parser("eval", help="train and score A-only, ALL and selected models")
    common(e)
    e.add_argument("--selected", type=Path, required=True)
    e.add_argument("--n-mc", type=_positive_int, default=50000)

    b = sub.add_parser("bench", help="CI-test counts of both selectors (oracle backend)")
    common(b, "oracle")
    b.add_argument("--n-grid", type=_int_list, required=True)
    grid = b.add_mutually_exclusive_group(required=True)
    grid.add_argument("--p-grid", type=_float_list)
    grid.add_argument("--k", type=int)
    b.add_argument("--seeds", type=_positive_int, default=20)

    d = sub.add_parser("dsep", help="d-separation query on a DAG or SCM spec")
    common(d, "oracle")
    d.add_argument("--x", type=_names, required=True)
    d.add_argument("--y", type=_names, required=True)
    d.add_argument("--z", type=_names, default=[])
    return p


_EXTRA = {
    "gen": ("n_features", "p", "n_biased", "rows"),
    "eval": ("selected", "n_mc"),
    "bench": ("n_grid", "p_grid", "k", "seeds"),
    "dsep": ("x", "y", "z"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bench" and (not args.n_grid or (args.p_grid is not None and not args.p_grid)):
            parser.error("grids must be nonempty")
        if args.command == "dsep" and args.spec is None:
            parser.error("dsep needs --spec")
        cfg = RunConfig(
            command=args.command,
            spec=args.spec,
            data=args.data,
            roles=args.roles,
            alpha=args.alpha,
            backend=args.backend,
            algo=args.algo,
            subset_mode=args.subset_mode,
            seed=args.seed,
            out=args.out,
            extra={k: getattr(args, k) for k in _EXTRA.get(args.command, ())},
        )
        if cfg.command == "gen":
            for path in cmd_gen(cfg):
                print(path)
        elif cfg.command == "select":
            s = cmd_select(cfg)
            print(f"{s['algorithm']}: selected {len(s['selected'])} features with {s['test_count']} CI tests")
        elif cfg.command == "eval":
            for name, r in cmd_eval(cfg).items():
                print(name, json.dumps(r, sort_keys=True))
        elif cfg.command == "bench":
            print(cmd_bench(cfg))
        elif cfg.command == "dsep":
            sep, path = cmd_dsep(cfg)
            print("d-separated" if sep else f"d-connected via {path}")
    except FairselError as exc:
        sys.stderr.write(json.dumps({"error": exc.kind, "message": str(exc)}) + "\n")
        return 1
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "io", "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
