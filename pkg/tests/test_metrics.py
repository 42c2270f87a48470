import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from qcredit import metrics
from qcredit.errors import ConfigError


@st.composite
def scored(draw):
    n = draw(st.integers(2, 60))
    levels = draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    # few distinct levels gives heavy ties
    scores = rng.integers(0, levels, n) / levels if draw(st.booleans()) else rng.random(n)
    return scores, labels


def test_worked_example():
    assert metrics.auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]).value == 0.75


def test_perfect_and_inverted():
    assert metrics.auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).value == 1.0
    assert metrics.auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]).value == 0.0


def test_all_tied_is_half():
    assert metrics.auc([0.5] * 6, [0, 1, 0, 1, 1, 0]).value == 0.5


@given(scored())
def test_rank_auc_equals_pairwise(data):
    s, y = data
    assert abs(metrics.auc(s, y).value - oracle.brute_auc(s, y)) < 1e-12


@given(scored())
def test_trapezoid_area_equals_auc(data):
    s, y = data
    assert abs(metrics.trapezoid_area(metrics.roc_curve(s, y)) - metrics.auc(s, y).value) < 1e-12


@given(scored())
def test_label_flip_antisymmetry(data):
    s, y = data
    assert abs(metrics.auc(s, 1 - y).value - (1 - metrics.auc(s, y).value)) < 1e-15


@given(scored())
def test_monotone_transform_invariant(data):
    s, y = data
    assert metrics.auc(np.exp(3 * s), y).value == metrics.auc(s, y).value


@given(scored())
def test_roc_monotone_and_endpoints(data):
    s, y = data
    c = metrics.roc_curve(s, y)
    assert (c.fpr[0], c.tpr[0]) == (0.0, 0.0)
    assert (c.fpr[-1], c.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
    assert np.isinf(c.thresholds[0]) and np.all(np.diff(c.thresholds[1:]) < 0)


def test_roc_ties_share_a_point():
    c = metrics.roc_curve([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1])
    assert c.points() == [(np.inf, 0.0, 0.0), (0.5, 1.0, 1.0)]


def test_perfect_roc_passes_through_corner():
    c = metrics.roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert (0.0, 1.0) in list(zip(c.fpr, c.tpr))


@pytest.mark.parametrize("labels,cls", [([1, 1, 1], "negative"), ([0, 0], "positive")])
def test_single_class_rejected(labels, cls):
    with pytest.raises(ConfigError, match=cls):
        metrics.auc(np.arange(len(labels)), labels)


def test_nan_scores_rejected():
    with pytest.raises(ConfigError, match="NaN"):
        metrics.auc([0.1, np.nan], [0, 1])


def test_length_mismatch():
    with pytest.raises(ConfigError):
        metrics.auc([0.1, 0.2], [0, 1, 1])


def test_write_roc_csv(tmp_path):
    path = tmp_path / "roc.csv"
    metrics.write_roc_csv(metrics.roc_curve([0.2, 0.7], [0, 1]), path, "cfg")
    lines = path.read_text().splitlines()
    assert lines[0] == "# cfg" and lines[1] == "threshold,fpr,tpr"
