import numpy as np
import pytest
from hypothesis import given, strategies as st

from fairsel.classifier import train
from fairsel.errors import ContractError, DegenerateDataError
from fairsel.metrics import FairnessReport, abs_odds_difference, cmi, interventional_gap, interventional_gaps, quantile_bins
from fairsel.scm import DiscreteCpt, LinearGaussian, ScmSpec, gen_benchmark, sample

from conftest import A, S, X, Y, make_dag


def test_abs_odds_difference_hand_example():
    y = np.array([1, 1, 0, 0, 1, 1, 0, 0])
    yp = np.array([1, 0, 0, 0, 1, 1, 1, 0])
    s = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    # group 0: tpr 0.5, fpr 0; group 1: tpr 1, fpr 0.5
    assert abs_odds_difference(y, yp, s) == pytest.approx(0.5)


def test_abs_odds_difference_perfect_predictor():
    rng = np.random.default_rng(0)
    y, s = rng.integers(0, 2, 100), rng.integers(0, 2, 100)
    assert abs_odds_difference(y, y, s) == 0.0


def test_abs_odds_difference_degenerate_group():
    y = np.array([1, 1, 0, 1])
    s = np.array([0, 0, 1, 1])
    with pytest.raises(DegenerateDataError):
        abs_odds_difference(np.array([1, 1, 0, 0]), y, np.array([0, 0, 1, 1]))
    with pytest.raises(DegenerateDataError):
        abs_odds_difference(y, y, np.zeros(4))
    with pytest.raises(ContractError):
        abs_odds_difference(y, y, s[:3])


def test_cmi_independent_is_near_zero():
    rng = np.random.default_rng(1)
    n = 50000
    assert cmi(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 3, n)) < 1e-3


def test_cmi_identical_binary_is_log2():
    rng = np.random.default_rng(2)
    s = rng.integers(0, 2, 100000)
    assert cmi(s, s) == pytest.approx(np.log(2), abs=1e-3)


def test_cmi_conditioning_removes_mediated_dependence():
    rng = np.random.default_rng(3)
    n = 100000
    s = rng.integers(0, 2, n)
    a = np.where(rng.random(n) < 0.9, s, 1 - s)
    yp = np.where(rng.random(n) < 0.9, a, 1 - a)
    assert cmi(s, yp) > 0.1
    assert cmi(s, yp, [a]) < 1e-3


def test_cmi_exact_plug_in_value():
    s = np.array([0, 0, 1, 1])
    yp = np.array([0, 1, 1, 1])
    # joint (0,0)=(0,1)=1/4, (1,1)=1/2
    want = 0.25 * np.log(0.25 / (0.5 * 0.25)) + 0.25 * np.log(0.25 / (0.5 * 0.75)) + 0.5 * np.log(0.5 / (0.5 * 0.75))
    assert cmi(s, yp) == pytest.approx(want)


@given(st.lists(st.integers(0, 2), min_size=5, max_size=60), st.lists(st.integers(0, 1), min_size=5, max_size=60))
def test_cmi_nonnegative(a, b):
    n = min(len(a), len(b))
    assert cmi(np.array(a[:n]), np.array(b[:n])) >= 0.0


def test_quantile_bins_balanced():
    b = quantile_bins(np.arange(1000.0), 4)
    assert np.bincount(b).tolist() == [250, 250, 250, 250]


def test_report_rejects_nan():
    with pytest.raises(ContractError):
        FairnessReport(np.nan, 0.0, None, 1.0)


def _direct_spec():
    dag = make_dag(
        [("S", "A"), ("S", "X2"), ("A", "X1"), ("X1", "Y"), ("X2", "Y"), ("A", "Y")],
        {"S": S, "A": A, "X1": X, "X2": X, "Y": Y},
    )
    return ScmSpec(
        dag,
        {
            "S": DiscreteCpt(2, (), ((0.5, 0.5),)),
            "A": DiscreteCpt(2, ("S",), ((0.7, 0.3), (0.3, 0.7))),
            "X1": LinearGaussian({"A": 1.0}, 1.0),
            "X2": LinearGaussian({"S": 1.5}, 1.0),
            "Y": LinearGaussian({"X1": 1.0, "X2": 1.0, "A": 0.5}, 1.0, -1.25, binary=True),
        },
    )


def test_interventional_gap_fair_model_is_zero():
    spec = _direct_spec()
    data = sample(spec, 5000, 0)
    m = train(data, ["A", "X1"], "Y")
    g = interventional_gap(spec, m, ["X1"], [0, 1], [0, 1], n_mc=20000, seed=1)
    assert g == 0.0


def test_interventional_gap_unfair_model_positive():
    spec = _direct_spec()
    data = sample(spec, 5000, 0)
    m = train(data, ["A", "X1", "X2"], "Y")
    hard, soft = interventional_gaps(spec, m, ["X1", "X2"], [0, 1], [0, 1], n_mc=20000, seed=1)
    assert hard > 0.2 and soft > 0.2


def test_interventional_gap_without_crn_is_small_for_fair_model():
    spec = _direct_spec()
    m = train(sample(spec, 5000, 0), ["A", "X1"], "Y")
    g = interventional_gap(spec, m, ["X1"], [0, 1], [0, 1], n_mc=50000, seed=1, common_random_numbers=False)
    assert g < 0.02


def test_interventional_gap_contract():
    spec = _direct_spec()
    m = train(sample(spec, 500, 0), ["A", "X1", "X2"], "Y")
    with pytest.raises(ContractError):
        interventional_gap(spec, m, ["X1"], [0], [0, 1])
    with pytest.raises(ContractError):
        interventional_gap(spec, m, ["X1", "X2"], [0], [0])


def test_benchmark_gap_reproducible():
    spec = gen_benchmark(8, 0.5, seed=3)
    feats = ["A", *spec.dag.candidates]
    m = train(sample(spec, 2000, 3), feats, "Y")
    args = (spec, m, list(spec.dag.candidates), [0, 1, 2], [0, 1], 5000, 9)
    assert interventional_gap(*args) == interventional_gap(*args)
