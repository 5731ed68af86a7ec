import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgddi.embedding import EmbeddingSet
from kgddi.exceptions import KGDDIError, SamplingError, StratificationError
from kgddi.graph import DdiDataset
from kgddi.pairs import (
    FoldPlan,
    PairFeaturizer,
    _pair_from_index,
    _pair_index,
    build_pair_features,
    make_folds,
    sample_negative_pairs,
    write_pairs_tsv,
)


def _dataset(pairs, n):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return DdiDataset(pairs, np.ones(len(pairs), dtype=np.int64), ("s",) * len(pairs),
                      np.arange(n), {i: f"d{i}" for i in range(n)})


def _random_dataset(rng, n, m):
    all_pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
    return _dataset(all_pairs[rng.choice(len(all_pairs), size=m, replace=False)], n)


class TestNegativeSampling:
    def test_forced_choice(self):
        neg = sample_negative_pairs(_dataset([(0, 1)], 3), ratio=1, seed=0)
        assert len(neg) == 1 and tuple(neg[0]) in {(0, 2), (1, 2)}

    def test_count_equals_positives(self, rng):
        ds = _random_dataset(rng, 30, 40)
        assert len(sample_negative_pairs(ds, 1.0, seed=1)) == 40
        assert len(sample_negative_pairs(ds, 2.5, seed=1)) == 100

    def test_insufficient_unknowns(self):
        with pytest.raises(SamplingError):
            sample_negative_pairs(_dataset([(0, 1), (0, 2)], 3), ratio=1, seed=0)

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            sample_negative_pairs(_dataset([(0, 1)], 3), ratio=0)

    def test_ten_thousand_seeds_never_overlap(self):
        ds = _random_dataset(np.random.default_rng(0), 100, 500)
        positives = set(_pair_index(ds.pairs[:, 0], ds.pairs[:, 1], 100).tolist())
        for seed in range(10_000):
            neg = sample_negative_pairs(ds, 1, seed=seed)
            assert not positives & set(_pair_index(neg[:, 0], neg[:, 1], 100).tolist())

    def test_rejection_path_for_large_universes(self, monkeypatch):
        import kgddi.pairs as pairs_mod
        monkeypatch.setattr(pairs_mod, "_ENUMERATE_LIMIT", 10)
        ds = _random_dataset(np.random.default_rng(1), 40, 200)
        neg = sample_negative_pairs(ds, 1, seed=3)
        pos = set(map(tuple, ds.pairs.tolist()))
        assert len(neg) == 200 and len(set(map(tuple, neg.tolist()))) == 200
        assert not pos & set(map(tuple, neg.tolist()))


@given(st.integers(0, 2**16), st.integers(3, 25), st.data())
def test_negatives_are_canonical_and_disjoint(seed, n, data):
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    m = data.draw(st.integers(1, total // 2))
    ds = _random_dataset(rng, n, m)
    neg = sample_negative_pairs(ds, 1, seed=seed)
    assert np.all(neg[:, 0] < neg[:, 1])
    assert len(set(map(tuple, neg.tolist()))) == len(neg)
    assert not set(map(tuple, neg.tolist())) & set(map(tuple, ds.pairs.tolist()))
    assert np.array_equal(neg, sample_negative_pairs(ds, 1, seed=seed))


@given(st.integers(2, 300))
def test_pair_index_roundtrip_and_count(n):
    i, j = np.triu_indices(n, k=1)
    k = _pair_index(i, j, n)
    assert np.array_equal(k, np.arange(n * (n - 1) // 2))
    back_i, back_j = _pair_from_index(k, n)
    assert np.array_equal(back_i, i) and np.array_equal(back_j, j)


class TestFeatures:
    def _emb(self, rng, n=4, d=3):
        return EmbeddingSet([f"d{i}" for i in range(n)], rng.normal(size=(n, d)))

    def test_width_is_twice_dim(self, rng):
        ps = build_pair_features([(0, 1), (2, 3)], self._emb(rng))
        assert ps.X.shape == (2, 6)

    def test_orientation_invariance(self, rng):
        emb = self._emb(rng)
        a = build_pair_features([(0, 2)], emb).X
        b = build_pair_features([(2, 0)], emb).X
        assert np.array_equal(a, b)
        assert np.array_equal(a[0], np.concatenate([emb.vectors[0], emb.vectors[2]]))

    def test_missing_vector_is_filtered(self, rng):
        emb = EmbeddingSet(["d0", "d1", "d2"], rng.normal(size=(3, 2)))
        ps = build_pair_features([(0, 1), (1, 5)], emb, labels=[1, 0],
                                 id_to_label={0: "d0", 1: "d1", 5: "d5"})
        assert ps.n_filtered == 1 and len(ps) == 1
        assert ps.pairs.tolist() == [[0, 1]]

    def test_everything_filtered(self, rng):
        emb = EmbeddingSet(["d0"], rng.normal(size=(1, 2)))
        with pytest.raises(KGDDIError):
            build_pair_features([(0, 1)], emb, id_to_label={0: "d0", 1: "d1"})

    def test_label_lookup_matches_row_lookup(self, rng):
        emb = self._emb(rng)
        shuffled = EmbeddingSet(emb.labels[::-1], emb.vectors[::-1])
        by_id = PairFeaturizer(emb).fit().transform([(0, 3)])
        by_label = PairFeaturizer(shuffled, {i: f"d{i}" for i in range(4)}).fit().transform([(0, 3)])
        assert np.array_equal(by_id, by_label)

    def test_featurizer_needs_embedding(self):
        with pytest.raises(ValueError):
            PairFeaturizer().fit()


class TestFolds:
    def test_ten_examples_five_folds(self):
        plan = make_folds(np.zeros(10), k=5, holdout=0.0, stratified=False)
        assert sorted(np.bincount(plan.fold)) == [2] * 5

    def test_balanced_labels_exact_prevalence(self):
        y = np.array([0, 1] * 25)
        plan = make_folds(y, k=5, holdout=0.0, seed=3)
        for f in range(5):
            assert y[plan.fold == f].mean() == 0.5

    def test_holdout_twenty_percent(self):
        plan = make_folds(np.array([0, 1] * 50), k=5, holdout=0.2)
        assert plan.holdout_mask.sum() == 20 and len(plan.train_index) == 80

    def test_seventy_thirty_reachable(self):
        plan = make_folds(np.array([0, 1] * 50), k=5, holdout=0.3)
        assert len(plan.test_index) == 30

    def test_small_class(self):
        with pytest.raises(StratificationError):
            make_folds(np.array([0] * 20 + [1] * 3), k=5, holdout=0.0)

    @pytest.mark.parametrize("k,holdout", [(1, 0.2), (5, 1.0), (5, -0.1)])
    def test_bad_arguments(self, k, holdout):
        with pytest.raises(ValueError):
            make_folds(np.zeros(20), k=k, holdout=holdout)

    def test_sklearn_splitter_contract(self):
        from sklearn.model_selection import cross_val_score
        from sklearn.dummy import DummyClassifier
        y = np.array([0, 1] * 20)
        plan = make_folds(y, k=4, holdout=0.0)
        scores = cross_val_score(DummyClassifier(), np.zeros((40, 1)), y, cv=plan)
        assert len(scores) == 4

    def test_restrict(self):
        plan = make_folds(np.array([0, 1] * 10), k=2, holdout=0.2)
        sub = plan.restrict(plan.train_index)
        assert len(sub.fold) == 16 and (sub.fold >= 0).all()


@given(st.lists(st.integers(0, 2), min_size=30, max_size=200), st.integers(2, 6),
       st.floats(0, 0.5), st.integers(0, 2**16), st.booleans())
def test_folds_partition_training_portion(labels, k, holdout, seed, stratified):
    y = np.array(labels)
    try:
        plan = make_folds(y, k=k, holdout=holdout, stratified=stratified, seed=seed)
    except StratificationError:
        return
    train = plan.train_index
    assert len(train) + len(plan.test_index) == len(y)
    assert abs(len(plan.test_index) - holdout * len(y)) <= 1
    seen = np.concatenate([test for _, test in plan.split()])
    assert np.array_equal(np.sort(seen), train)
    for tr, te in plan.split():
        assert not set(tr) & set(te)
    if stratified:
        for c in np.unique(y):
            per_fold = [(y[plan.fold == f] == c).sum() for f in range(k)]
            expected = (y[train] == c).sum() / k
            assert all(abs(n - expected) <= 1 for n in per_fold)
    assert np.array_equal(plan.fold, make_folds(y, k, holdout, stratified, seed).fold)


def test_pair_dump(tmp_path):
    write_pairs_tsv(tmp_path / "p.tsv", [(0, 1)], [1], [3], {0: "a", 1: "b"})
    assert (tmp_path / "p.tsv").read_text() == "a\tb\t1\t3\n"
    assert FoldPlan(2, np.array([0, 1, -1])).get_n_splits() == 2
