import json

import numpy as np
import pytest
from scipy import stats

from fairsel.citest import CiQuery, FisherZBackend
from fairsel.errors import ContractError, LookupFailure, SpecError
from fairsel.graph import oracle_c1, oracle_theorem
from fairsel.scm import (
    Dataset,
    DiscreteCpt,
    LinearGaussian,
    ScmSpec,
    gen_benchmark,
    intervene_sample,
    sample,
    scale_sensitive_effects,
)

from conftest import A, S, X, Y, make_dag


def _single():
    dag = make_dag([], {"S": S, "Y": Y})
    return ScmSpec(dag, {"S": LinearGaussian({}, 1.0), "Y": LinearGaussian({}, 1.0)})


def _xy(slope=2.0, noise=0.1):
    dag = make_dag([("S", "Y")], {"S": S, "Y": Y})
    return ScmSpec(dag, {"S": LinearGaussian({}, 1.0), "Y": LinearGaussian({"S": slope}, noise)})


def test_single_node_mean():
    n = 10000
    d = sample(_single(), n, seed=3)
    assert abs(d["S"].mean()) < 5 / np.sqrt(n)


def test_fitted_slope():
    d = sample(_xy(), 10000, seed=1)
    slope = np.polyfit(d["S"], d["Y"], 1)[0]
    assert 1.9 <= slope <= 2.1


def test_same_seed_bit_identical():
    spec = gen_benchmark(10, 0.3, seed=5)
    a, b = sample(spec, 500, 11), sample(spec, 500, 11)
    assert a.equals(b)
    assert not a.equals(sample(spec, 500, 12))


def test_empty_intervention_matches_observational():
    spec = gen_benchmark(10, 0.3, seed=5)
    assert sample(spec, 300, 9).equals(intervene_sample(spec, {}, 300, 9))


def test_clamped_parent_mean():
    dag = make_dag([("S", "X")], {"S": S, "X": X, "Y": Y})
    spec = ScmSpec(
        dag,
        {"S": LinearGaussian({}, 1.0), "X": LinearGaussian({"S": 1.0}, 1.0), "Y": LinearGaussian({}, 1.0)},
    )
    n = 20000
    d = intervene_sample(spec, {"S": 1.0}, n, seed=0)
    assert np.all(d["S"] == 1.0)
    assert abs(d["X"].mean() - 1.0) < 5 / np.sqrt(n)


def test_intervening_on_a_sink_changes_only_that_column():
    spec = gen_benchmark(6, 0.5, seed=2)
    sink = next(v for v in spec.dag.candidates if not spec.dag.children(v))
    obs = sample(spec, 1000, 4)
    do = intervene_sample(spec, {sink: 3.0}, 1000, 4)
    for c in obs.names:
        if c == sink:
            assert np.all(do[c] == 3.0)
        else:
            assert np.array_equal(obs[c], do[c])


def test_intervention_equals_conditioning_for_root():
    dag = make_dag([("A", "Y")], {"S": S, "A": A, "Y": Y})
    spec = ScmSpec(
        dag,
        {
            "S": DiscreteCpt(2, (), ((0.5, 0.5),)),
            "A": DiscreteCpt(2, (), ((0.4, 0.6),)),
            "Y": LinearGaussian({"A": 1.2}, 1.0, -0.5, binary=True),
        },
    )
    n = 50000
    obs = sample(spec, n, 1)
    for a in (0, 1):
        p_cond = obs["Y"][obs["A"] == a].mean()
        p_do = intervene_sample(spec, {"A": a}, n, 2 + a)["Y"].mean()
        se = np.sqrt(p_do * (1 - p_do) / n + p_cond * (1 - p_cond) / (obs["A"] == a).sum())
        assert abs(p_cond - p_do) < 4 * se
        # analytic value: Phi(intercept + weight * a)
        assert abs(p_do - stats.norm.cdf(-0.5 + 1.2 * a)) < 4 * np.sqrt(p_do * (1 - p_do) / n)


def test_intervention_on_target_rejected():
    with pytest.raises(ContractError):
        intervene_sample(_xy(), {"Y": 0.0}, 10, 0)


def test_intervention_unknown_variable():
    with pytest.raises(LookupFailure):
        intervene_sample(_xy(), {"Q": 0.0}, 10, 0)


def test_intervention_discrete_level_checked():
    spec = gen_benchmark(3, 0.0, seed=0)
    with pytest.raises(ContractError):
        intervene_sample(spec, {"A": 7}, 10, 0)
    with pytest.raises(ContractError):
        intervene_sample(spec, {"S": 0.5}, 10, 0)


def test_row_count_must_be_positive():
    with pytest.raises(ContractError):
        sample(_xy(), 0, 0)


# -- spec validation --------------------------------------------------------------------


def test_weight_on_non_parent_rejected():
    dag = make_dag([], {"S": S, "Y": Y})
    with pytest.raises(SpecError):
        ScmSpec(dag, {"S": LinearGaussian({}, 1.0), "Y": LinearGaussian({"S": 1.0}, 1.0)})


def test_cpt_rows_must_sum_to_one():
    dag = make_dag([], {"S": S, "Y": Y})
    with pytest.raises(SpecError):
        ScmSpec(dag, {"S": DiscreteCpt(2, (), ((0.5, 0.6),)), "Y": LinearGaussian({}, 1.0)})


def test_cpt_shape_checked():
    dag = make_dag([("S", "Y")], {"S": S, "Y": Y})
    with pytest.raises(SpecError):
        ScmSpec(dag, {"S": DiscreteCpt(2), "Y": DiscreteCpt(2, ("S",), ((0.5, 0.5),))})


def test_cpt_with_continuous_parent_rejected():
    dag = make_dag([("S", "Y")], {"S": S, "Y": Y})
    with pytest.raises(SpecError):
        ScmSpec(dag, {"S": LinearGaussian({}, 1.0), "Y": DiscreteCpt(2, ("S",), ((0.5, 0.5),))})


def test_missing_mechanism():
    dag = make_dag([], {"S": S, "Y": Y})
    with pytest.raises(SpecError):
        ScmSpec(dag, {"S": LinearGaussian({}, 1.0)})


def test_nonpositive_noise():
    dag = make_dag([], {"S": S, "Y": Y})
    with pytest.raises(SpecError):
        ScmSpec(dag, {"S": LinearGaussian({}, 0.0), "Y": LinearGaussian({}, 1.0)})


def test_cpt_sampling_frequencies():
    dag = make_dag([("S", "Y")], {"S": S, "Y": Y})
    spec = ScmSpec(
        dag,
        {"S": DiscreteCpt(2, (), ((0.3, 0.7),)), "Y": DiscreteCpt(3, ("S",), ((0.2, 0.3, 0.5), (0.6, 0.3, 0.1)))},
    )
    n = 40000
    d = sample(spec, n, 0)
    assert abs(d["S"].mean() - 0.7) < 4 * np.sqrt(0.21 / n)
    for s, row in ((0, (0.2, 0.3, 0.5)), (1, (0.6, 0.3, 0.1))):
        ys = d["Y"][d["S"] == s]
        freq = np.bincount(ys, minlength=3) / len(ys)
        assert np.allclose(freq, row, atol=4 * np.sqrt(0.25 / len(ys)))


# -- serialization --------------------------------------------------------------------


def test_spec_json_round_trip(tmp_path):
    spec = gen_benchmark(8, 0.4, seed=3)
    path = tmp_path / "scm.json"
    spec.save(path)
    again = ScmSpec.load(path)
    assert again.dag == spec.dag
    assert sample(again, 200, 1).equals(sample(spec, 200, 1))
    assert json.loads(path.read_text())["annotations"]["biased"] == spec.annotations["biased"]


def test_csv_round_trip(tmp_path):
    spec = gen_benchmark(5, 0.4, seed=3)
    d = sample(spec, 50, 2)
    d.to_csv(tmp_path / "d.csv")
    back = Dataset.from_csv(tmp_path / "d.csv", {"columns": d.column_meta()})
    assert back.equals(d)
    assert back.roles == d.roles


def test_dataset_rejects_out_of_range_levels():
    from fairsel.scm import ColumnKind

    with pytest.raises(ContractError):
        Dataset({"a": np.array([0, 1, 2])}, {"a": ColumnKind("discrete", 2)})
    with pytest.raises(ContractError):
        Dataset({"a": np.array([0.0, np.nan])}, {"a": ColumnKind("continuous")})


# -- benchmark generator ---------------------------------------------------------------


def test_benchmark_no_bias_all_fair():
    spec = gen_benchmark(40, 0.0, seed=1)
    assert oracle_theorem(spec.dag) == set(spec.dag.candidates)


def test_benchmark_all_biased_c1_empty():
    spec = gen_benchmark(20, 1.0, seed=1)
    assert oracle_c1(spec.dag) == set()


def test_benchmark_fixed_count():
    spec = gen_benchmark(64, seed=4, n_biased=8)
    assert len(spec.annotations["biased"]) == 8


def test_benchmark_ground_truth_matches_oracle_theorem():
    for seed in range(10):
        spec = gen_benchmark(30, 0.3, seed=seed)
        assert oracle_theorem(spec.dag) == set(spec.annotations["clean"])


def test_benchmark_biased_count_concentration():
    n, p = 200, 0.15
    bound = 4 * np.sqrt(n * p * (1 - p))
    for seed in range(30):
        k = len(gen_benchmark(n, p, seed=seed).annotations["biased"])
        assert abs(k - n * p) <= bound


def test_benchmark_weights_bounded_away_from_zero():
    spec = gen_benchmark(50, 0.3, seed=8)
    for m in spec.mechanisms.values():
        if isinstance(m, LinearGaussian):
            assert all(0.5 <= abs(w) <= 1.5 for w in m.weights.values())


def test_benchmark_faithful_edges_detected():
    """Every edge shows up as a dependence given the child's other parents, at n=5000."""
    for seed in range(5):
        spec = gen_benchmark(16, 0.25, seed=seed)
        be = FisherZBackend(sample(spec, 5000, seed))
        for a, b in spec.dag.edges:
            others = tuple(p for p in spec.dag.parents(b) if p != a)
            assert not be.test(CiQuery((a,), (b,), others, 0.01)).independent, (seed, a, b)


def test_scaling_sensitive_effects():
    spec = gen_benchmark(12, 0.5, seed=1)
    shifted = scale_sensitive_effects(spec, 2.0)
    assert shifted.dag == spec.dag
    for f in spec.annotations["biased"]:
        assert shifted.mechanisms[f].weights["S"] == 2.0 * spec.mechanisms[f].weights["S"]
    for f in spec.annotations["clean"]:
        assert shifted.mechanisms[f] == spec.mechanisms[f]
