import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pauckit.dataio import (
    BatchSpec, FormatError, SampleSet, generate_synthetic, iter_batches, load_csv,
    min_max_scale, parse_synthetic_spec,
)


def test_synthetic_prior():
    d = generate_synthetic(50, 950, 2, 2.0, seed=7)
    assert d.prior_p == 0.05
    assert d.n == 1000 and d.dim == 2


def test_synthetic_degenerate_overlap():
    d = generate_synthetic(1, 1, 1, 0.0, seed=0)
    assert d.n_pos == 1 and d.n_neg == 1


def test_synthetic_deterministic():
    a = generate_synthetic(20, 30, 3, 1.5, seed=11)
    b = generate_synthetic(20, 30, 3, 1.5, seed=11)
    assert a.features.tobytes() == b.features.tobytes()
    c = generate_synthetic(20, 30, 3, 1.5, seed=11, stream=1)
    assert not np.array_equal(a.features, c.features)


def test_synthetic_class_means():
    d = generate_synthetic(4000, 4000, 4, 2.0, seed=3)
    shift = 2.0 / np.sqrt(4)
    np.testing.assert_allclose(d.features[d.pos_idx].mean(axis=0), shift, atol=0.06)
    np.testing.assert_allclose(d.features[d.neg_idx].mean(axis=0), -shift, atol=0.06)


@pytest.mark.parametrize("args", [(0, 5, 2, 1.0), (5, 0, 2, 1.0), (5, 5, 0, 1.0), (5, 5, 2, -1.0)])
def test_synthetic_rejects_bad_args(args):
    with pytest.raises(ValueError):
        generate_synthetic(*args, seed=0)


def test_parse_synthetic_spec():
    assert parse_synthetic_spec("50:950:2:3.0") == dict(n_pos=50, n_neg=950, d=2, separation=3.0)
    for bad in ("50:950:2", "a:1:1:1", "1:1:1:x"):
        with pytest.raises(ValueError):
            parse_synthetic_spec(bad)


def test_sampleset_invariants():
    d = SampleSet(np.zeros((4, 1)), np.array([1, 0, 1, 0]))
    assert sorted(np.concatenate([d.pos_idx, d.neg_idx])) == [0, 1, 2, 3]
    assert d.prior_p == 0.5
    with pytest.raises(ValueError, match="no positive instances"):
        SampleSet(np.zeros((2, 1)), np.array([0, 0]))
    with pytest.raises(ValueError, match="labels must be 0 or 1"):
        SampleSet(np.zeros((2, 1)), np.array([0, 2]))


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_three_rows(tmp_path):
    d = load_csv(_write(tmp_path, "0.1,0.2,1\n0.3,0.4,0\n0.5,0.6,0\n"))
    assert d.n == 3 and d.prior_p == pytest.approx(1 / 3, abs=0)
    np.testing.assert_array_equal(d.labels, [1, 0, 0])
    np.testing.assert_array_equal(d.features[:, 1], [0.2, 0.4, 0.6])


def test_load_csv_header_and_named_label(tmp_path):
    d = load_csv(_write(tmp_path, "y,f1,f2\n1,0.5,7\n0,0.25,8\n"), label_column="y")
    np.testing.assert_array_equal(d.labels, [1, 0])
    np.testing.assert_array_equal(d.features, [[0.5, 7.0], [0.25, 8.0]])
    assert load_csv(tmp_path / "d.csv", label_column=0).n == 2


def test_load_csv_all_positive(tmp_path):
    with pytest.raises(FormatError, match="no negative instances"):
        load_csv(_write(tmp_path, "1,1\n2,1\n"))


def test_load_csv_header_only(tmp_path):
    with pytest.raises(FormatError, match="empty dataset"):
        load_csv(_write(tmp_path, "x,y\n"))


def test_load_csv_bad_label_reports_row(tmp_path):
    with pytest.raises(FormatError, match="row 3: non-binary label"):
        load_csv(_write(tmp_path, "x,y\n0.1,1\n0.2,2\n"))


def test_load_csv_missing_value(tmp_path):
    with pytest.raises(FormatError, match="row 2: missing value"):
        load_csv(_write(tmp_path, "0.1,1\n,0\n"))


def test_min_max_scale():
    tr = SampleSet(np.array([[0.0, 5.0], [2.0, 5.0]]), np.array([1, 0]))
    te = SampleSet(np.array([[1.0, 5.0], [4.0, 6.0]]), np.array([1, 0]))
    np.testing.assert_array_equal(min_max_scale(tr).features, [[0, 0], [1, 0]])
    np.testing.assert_array_equal(min_max_scale(te, reference=tr).features, [[0.5, 0], [2, 1]])


def test_batches_partition_sizes():
    d = generate_synthetic(3, 7, 1, 1.0, seed=0)
    sl = iter_batches(d, BatchSpec(4, shuffle_seed=5), epoch=0)
    assert [len(s) for s in sl] == [4, 4, 2]
    assert sorted(np.concatenate(sl)) == list(range(10))


def test_stratified_single_positive():
    d = generate_synthetic(1, 19, 1, 1.0, seed=0)
    for epoch in range(5):
        sl = iter_batches(d, BatchSpec(5, shuffle_seed=1, stratified=True), epoch)
        assert sum(int(np.isin(d.pos_idx, s).sum()) for s in sl) == 1
        assert sum(1 for s in sl if np.isin(d.pos_idx, s).any()) == 1


def test_batches_deterministic():
    d = generate_synthetic(10, 30, 2, 1.0, seed=0)
    spec = BatchSpec(8, shuffle_seed=3, stratified=True)
    a, b = iter_batches(d, spec, 4), iter_batches(d, spec, 4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, iter_batches(d, spec, 5)))


def test_batch_larger_than_data():
    d = generate_synthetic(2, 2, 1, 1.0, seed=0)
    with pytest.raises(ValueError):
        iter_batches(d, BatchSpec(5), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 40), st.booleans(), st.integers(0, 2**32))
def test_every_epoch_is_a_permutation(n_pos, n_neg, bs, strat, seed):
    d = generate_synthetic(n_pos, n_neg, 1, 1.0, seed=0)
    bs = min(bs, d.n)
    sl = iter_batches(d, BatchSpec(bs, shuffle_seed=seed, stratified=strat), epoch=seed % 7)
    assert sorted(np.concatenate(sl).tolist()) == list(range(d.n))
    assert all(len(s) == bs for s in sl[:-1])
    if strat and bs >= 2:
        # each batch holds both classes whenever there are enough of each to go round
        n_batches = len(sl)
        if n_pos >= n_batches and n_neg >= n_batches:
            for s in sl:
                if len(s) < 2:
                    continue
                lab = d.labels[s]
                assert lab.min() == 0 and lab.max() == 1
