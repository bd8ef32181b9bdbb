import csv
import io
import json
import urllib.error

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kknn import dataset
from kknn.dataset import (
    LDA,
    PCA,
    Dataset,
    DatasetError,
    FetchError,
    Preprocessor,
    SplitPlan,
    fetch_openml,
    holdout_fractions,
    lda_reduce,
    load_csv,
    load_features,
    pca_reduce,
    split_indices,
    standardize,
    stratified_split,
    subsample,
)


@pytest.fixture
def small_csv(tmp_path):
    path = tmp_path / "small.csv"
    path.write_text("a,b,y\n0,0,A\n1,0,A\n0,1,B\n")
    return path


class TestDatasetType:
    def test_arrays_are_read_only(self):
        d = Dataset([[0.0], [1.0]], [0, 1])
        with pytest.raises(ValueError):
            d.features[0, 0] = 5.0

    def test_rejects_nan(self):
        with pytest.raises(DatasetError, match="NaN"):
            Dataset([[np.nan], [1.0]], [0, 1])

    def test_rejects_row_label_mismatch(self):
        with pytest.raises(DatasetError):
            Dataset([[0.0], [1.0]], [0, 1, 1])

    def test_validate_requires_two_classes(self):
        with pytest.raises(DatasetError, match="single class"):
            Dataset([[0.0], [1.0]], [0, 0], ("a",)).validate()

    def test_validate_requires_every_class_present(self):
        with pytest.raises(DatasetError, match="without samples"):
            Dataset([[0.0], [1.0]], [0, 0], ("a", "b")).validate()

    def test_equality_compares_contents(self):
        a = Dataset([[0.0], [1.0]], [0, 1])
        assert a == Dataset(np.array([[0.0], [1.0]]), np.array([0, 1]))
        assert a != Dataset([[0.0], [2.0]], [0, 1])


class TestLoadCsv:
    def test_basic_parse(self, small_csv):
        d = load_csv(small_csv)
        assert (d.n, d.m, d.class_count) == (3, 2, 2)
        assert d.labels.tolist() == [0, 0, 1]
        assert d.class_names == ("A", "B")
        assert d.feature_names == ("a", "b")

    def test_label_column_first(self, tmp_path):
        path = tmp_path / "first.csv"
        path.write_text("y,a,b\nA,0,0\nA,1,0\nB,0,1\n")
        d = load_csv(path, label_column=0)
        assert d.features.tolist() == [[0, 0], [1, 0], [0, 1]]
        assert d.feature_names == ("a", "b")

    def test_label_column_by_name(self, tmp_path):
        path = tmp_path / "named.csv"
        path.write_text("a,cls,b\n0,x,1\n2,y,3\n")
        d = load_csv(path, label_column="cls")
        assert d.features.tolist() == [[0, 1], [2, 3]]
        assert d.class_names == ("x", "y")

    def test_no_header(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("0, 0, 1\n 1,0,2\n")
        d = load_csv(path, has_header=False)
        assert d.features.tolist() == [[0, 0], [1, 0]]
        assert d.class_names == ("1", "2")

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,y\n0,abc,A\n1,0,B\n")
        with pytest.raises(DatasetError, match=r"row 2, column 'b'"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")

    def test_single_class(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("a,y\n0,A\n1,A\n")
        with pytest.raises(DatasetError, match="one class"):
            load_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DatasetError, match="empty"):
            load_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,y\n0,A\n1\n")
        with pytest.raises(DatasetError, match="row 3"):
            load_csv(path)

    def test_unknown_label_column(self, small_csv):
        with pytest.raises(DatasetError, match="no column"):
            load_csv(small_csv, label_column="zzz")

    def test_load_features_drops_label(self, small_csv):
        assert load_features(small_csv, "y").tolist() == [[0, 0], [1, 0], [0, 1]]


# ------------------------------------------------------------------ OpenML


class FakeOpenML:
    """Serves a tiny zoo-like dataset through the JSON API shapes used by the client."""

    def __init__(self, table):
        self.table = table
        self.calls = []

    def __call__(self, url):
        self.calls.append(url)
        if "/data/list/data_name/zoo/" in url:
            return json.dumps({"data": {"dataset": [{"did": 62}]}}).encode()
        if "/data/list/" in url:
            raise urllib.error.HTTPError(url, 412, "no match", None, None)
        if url.endswith("/data/62"):
            return json.dumps({"data_set_description": {"file_id": 52352, "default_target_attribute": "type"}}).encode()
        if url.endswith("/data/features/62"):
            feats = [{"name": "animal", "data_type": "string", "is_row_identifier": "true"}]
            for name in self.table["features"]:
                if name == "legs":
                    feats.append({"name": name, "data_type": "numeric"})
                else:
                    feats.append({"name": name, "data_type": "nominal", "nominal_value": ["false", "true"]})
            feats.append({"name": "type", "data_type": "nominal"})
            return json.dumps({"data_features": {"feature": feats}}).encode()
        if url.endswith("/get_csv/52352"):
            return self.table["csv"].encode()
        raise urllib.error.URLError("unexpected url " + url)


@pytest.fixture
def fake_zoo(cache_dir):
    """A zoo payload in OpenML's export layout, rebuilt from the cached copy."""
    rows = list(csv.reader(io.StringIO((cache_dir / "zoo.csv").read_text())))
    header, body = rows[0], rows[1:]
    feats = header[:-1]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["animal"] + feats + ["type"])
    for i, row in enumerate(body):
        cells = [c if f == "legs" else ("true" if c == "1" else "false") for f, c in zip(feats, row[:-1])]
        w.writerow([f"'animal{i}'"] + cells + [row[-1]])
    return FakeOpenML({"features": feats, "csv": out.getvalue()})


class TestFetchOpenml:
    def test_zoo_matches_table_shape(self, tmp_path, monkeypatch, fake_zoo):
        monkeypatch.setattr(dataset, "_http_get", fake_zoo)
        d = fetch_openml("zoo", tmp_path)
        assert (d.n, d.m, d.class_count) == (101, 16, 7)
        meta = json.loads((tmp_path / "zoo.meta.json").read_text())
        assert meta["target"] == "type" and meta["source_url"].endswith("52352")
        assert len(meta["sha256"]) == 64 and meta["retrieved"]

    def test_second_call_hits_cache(self, tmp_path, monkeypatch, fake_zoo):
        monkeypatch.setattr(dataset, "_http_get", fake_zoo)
        first = fetch_openml("zoo", tmp_path)
        n_calls = len(fake_zoo.calls)

        def offline(url):
            raise AssertionError("network used on a cache hit")

        monkeypatch.setattr(dataset, "_http_get", offline)
        assert fetch_openml("zoo", tmp_path) == first
        assert n_calls == 4

    def test_network_matches_bundled_cache(self, tmp_path, monkeypatch, fake_zoo, cache_dir):
        monkeypatch.setattr(dataset, "_http_get", fake_zoo)
        fetched = fetch_openml("zoo", tmp_path)
        cached = fetch_openml("zoo", cache_dir)
        assert np.array_equal(fetched.features, cached.features)
        assert fetched.class_names == cached.class_names

    def test_network_error_without_cache(self, tmp_path, monkeypatch):
        def down(url):
            raise urllib.error.URLError("network disabled")

        monkeypatch.setattr(dataset, "_http_get", down)
        with pytest.raises(FetchError, match="network error"):
            fetch_openml("zoo", tmp_path)
        assert not list(tmp_path.iterdir())

    def test_unknown_dataset(self, tmp_path, monkeypatch, fake_zoo):
        monkeypatch.setattr(dataset, "_http_get", fake_zoo)
        with pytest.raises(FetchError, match="unknown dataset"):
            fetch_openml("no-such-thing", tmp_path)

    def test_malformed_payload(self, tmp_path, monkeypatch):
        monkeypatch.setattr(dataset, "_http_get", lambda url: b"<html>")
        with pytest.raises(FetchError, match="malformed"):
            fetch_openml(62, tmp_path)

    @pytest.mark.parametrize(
        "name,shape",
        [
            ("zoo", (101, 16, 7)),
            ("sonar", (208, 60, 2)),
            ("ionosphere", (351, 34, 2)),
            ("prnn_crabs", (200, 7, 2)),
            ("vowel", (990, 13, 11)),
            ("thyroid-new", (215, 5, 3)),
            ("glass", (214, 9, 6)),
            ("digits", (1797, 64, 10)),
        ],
    )
    def test_bundled_cache_shapes(self, cache_dir, name, shape):
        d = fetch_openml(name, cache_dir)
        assert (d.n, d.m, d.class_count) == shape


# ----------------------------------------------------------- preprocessing


class TestStandardize:
    def test_two_values(self):
        d = standardize(Dataset([[1.0], [3.0]], [0, 1]))
        assert d.features[:, 0].tolist() == [-1.0, 1.0]

    def test_constant_column(self):
        d = standardize(Dataset([[5.0, 1], [5.0, 2], [5.0, 3]], [0, 1, 0]))
        assert d.features[:, 0].tolist() == [0, 0, 0]

    def test_idempotent(self, rng):
        d = Dataset(rng.normal(3, 4, size=(30, 4)), np.arange(30) % 2)
        once = standardize(d)
        np.testing.assert_allclose(standardize(once).features, once.features, atol=1e-12)
        np.testing.assert_allclose(once.features.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(once.features.std(axis=0), 1, atol=1e-12)


class TestPCA:
    def test_rank_one_reconstruction(self, rng):
        t = rng.normal(size=25)
        X = np.c_[t, 2 * t + 1]
        p = PCA(1).fit(X)
        recon = p.transform(X) @ p.components_.T + p.mean_
        np.testing.assert_allclose(recon, X, atol=1e-9)

    def test_full_rank_is_isometry(self, rng):
        X = rng.normal(size=(20, 4))
        Z = pca_reduce(Dataset(X, np.arange(20) % 2), 4).features
        dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
        dz = np.linalg.norm(Z[:, None] - Z[None], axis=-1)
        np.testing.assert_allclose(dz, dx, atol=1e-9)

    def test_projected_variance(self, rng):
        X = rng.normal(size=(20, 5)) @ rng.normal(size=(5, 5))
        Z = PCA(3).fit(X).transform(X)
        top = np.sort(np.linalg.eigvalsh(np.cov(X.T)))[::-1][:3]
        assert np.var(Z, axis=0, ddof=1).sum() == pytest.approx(top.sum(), rel=1e-10)

    def test_target_dim_out_of_range(self, rng):
        with pytest.raises(DatasetError):
            pca_reduce(Dataset(rng.normal(size=(5, 3)), [0, 1, 0, 1, 0]), 4)


class TestLDA:
    def test_separable_clusters(self, rng):
        X = np.vstack([rng.normal(0, 0.3, (20, 2)), rng.normal(0, 0.3, (20, 2)) + [4.0, 1.0]])
        y = np.repeat([0, 1], 20)
        Z = lda_reduce(Dataset(X, y), 1).features[:, 0]
        dist = np.abs(Z[:, None] - Z[None])
        np.fill_diagonal(dist, np.inf)
        assert np.all(y[np.argmin(dist, axis=1)] == y)

    def test_default_dim_is_classes_minus_one(self, rng):
        y = np.arange(80) % 4
        d = Dataset(rng.normal(size=(80, 6)) + y[:, None], y)
        assert lda_reduce(d).m == 3

    def test_too_many_dims(self, rng):
        y = np.arange(30) % 3
        with pytest.raises(DatasetError):
            lda_reduce(Dataset(rng.normal(size=(30, 5)), y), 3)

    def test_singular_scatter_needs_ridge(self):
        X = np.array([[0.0, 0], [1, 0], [0, 5], [1, 5]])
        y = np.array([0, 0, 1, 1])
        with pytest.raises(DatasetError, match="singular"):
            LDA(1, ridge=0.0).fit(X, y)
        assert LDA(1).fit(X, y).components_.shape == (2, 1)


class TestPreprocessor:
    def test_chain_matches_manual_steps(self, rng):
        y = np.arange(60) % 3
        d = Dataset(rng.normal(size=(60, 8)) * 5 + y[:, None], y)
        prep = Preprocessor(standardize=True, pca=4, lda="auto").fit(d)
        manual = lda_reduce(pca_reduce(standardize(d), 4))
        np.testing.assert_allclose(np.abs(prep.apply(d).features), np.abs(manual.features), atol=1e-8)

    def test_pca_auto_uses_k(self, rng):
        d = Dataset(rng.normal(size=(40, 10)), np.arange(40) % 2)
        assert Preprocessor(pca="auto").fit(d, k=5).apply(d).m == 5
        with pytest.raises(DatasetError):
            Preprocessor(pca="auto").fit(d)

    def test_round_trip(self, rng):
        d = Dataset(rng.normal(size=(30, 6)), np.arange(30) % 3)
        prep = Preprocessor(standardize=True, pca=3, lda=2).fit(d)
        again = Preprocessor.from_dict(json.loads(json.dumps(prep.to_dict())))
        Q = rng.normal(size=(7, 6))
        np.testing.assert_array_equal(again.transform(Q), prep.transform(Q))

    def test_fit_uses_training_statistics_only(self, rng):
        train = Dataset(rng.normal(size=(20, 3)), np.arange(20) % 2)
        prep = Preprocessor(standardize=True).fit(train)
        shifted = prep.transform(train.features + 100.0)
        assert np.all(shifted.mean(axis=0) > 10)


# ---------------------------------------------------------------- splitting


class TestSplitting:
    def test_seventeen_fractions(self):
        fr = holdout_fractions()
        assert len(fr) == 17 == len(set(fr))
        assert fr[0] == 0.1 and fr[-1] == 0.9 and fr[8] == 0.5

    def test_balanced_half(self):
        labels = np.repeat([0, 1], 5)
        train, test = split_indices(labels, SplitPlan(0.5, seed=1))
        assert len(train) == 5 and len(test) == 5
        assert all(2 <= np.sum(labels[train] == c) <= 3 for c in (0, 1))

    def test_every_class_kept_in_training(self):
        labels = np.array([0] * 50 + [1, 1, 2])
        train, _ = split_indices(labels, SplitPlan(0.1))
        assert set(labels[train].tolist()) == {0, 1, 2}

    def test_plan_validates_fraction(self):
        with pytest.raises(DatasetError):
            SplitPlan(1.0)

    def test_unstratified_missing_class(self):
        labels = np.array([0] * 30 + [1])
        with pytest.raises(DatasetError, match="no training samples"):
            for seed in range(50):
                split_indices(labels, SplitPlan(0.1, seed=seed, stratified=False))

    def test_stratified_split_returns_datasets(self, rng):
        d = Dataset(rng.normal(size=(40, 2)), np.arange(40) % 4)
        train, test = stratified_split(d, SplitPlan(0.25, seed=3))
        assert train.n + test.n == 40 and train.n == 10
        assert train.class_names == d.class_names

    def test_subsample(self, rng):
        d = Dataset(rng.normal(size=(100, 2)), np.arange(100) % 2)
        s = subsample(d, 0.25, seed=0)
        assert s.n == 25 and s.class_count == 2

    @settings(max_examples=60, deadline=None)
    @given(
        counts=st.lists(st.integers(1, 30), min_size=2, max_size=6),
        fraction=st.sampled_from(holdout_fractions()),
        seed=st.integers(0, 2**32),
    )
    def test_partition_and_determinism(self, counts, fraction, seed):
        labels = np.repeat(np.arange(len(counts)), counts)
        n = labels.size
        try:
            train, test = split_indices(labels, SplitPlan(fraction, seed))
        except DatasetError:
            # only possible when every sample would land in training
            assert all(c == 1 for c in counts) or round(fraction * n) >= n or fraction * n < len(counts)
            return
        assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(n))
        assert np.intersect1d(train, test).size == 0
        for c, size in enumerate(counts):
            got = np.sum(labels[train] == c)
            assert got >= 1
            assert abs(got - fraction * size) < 1 + 1e-9 or got == 1
        again = split_indices(labels, SplitPlan(fraction, seed))
        assert np.array_equal(again[0], train)
