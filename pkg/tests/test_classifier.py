import json
import warnings

import numpy as np
import pytest

from kknn import curvature
from kknn.classifier import (
    KClampWarning,
    KKNNClassifier,
    KNNClassifier,
    ModelFormatError,
    adjust_neighborhood,
    fit,
    knn_classify,
    knn_get_neighbors,
    knn_predict,
    load_model,
    majority_vote,
    predict,
    predict_labels,
    query_scores,
    read_model,
    save_model,
)
from kknn.dataset import Dataset
from kknn.knn_graph import neighbors_of_query


@pytest.fixture
def blobs(rng):
    y = np.arange(90) % 3
    centers = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    return Dataset(centers[y] + rng.normal(size=(90, 2)), y, ("a", "b", "c"))


class TestAdjustNeighborhood:
    def test_eleven_neighbors_score_four(self):
        assert adjust_neighborhood(range(11), 4) == [0, 1, 2, 3, 4, 5, 6]

    def test_floor_at_one(self):
        assert adjust_neighborhood([7, 3, 9], 9) == [7]

    def test_no_prune(self):
        assert adjust_neighborhood([4, 2, 8], 0) == [4, 2, 8]

    def test_accepts_patch(self, blobs):
        p = neighbors_of_query(blobs, [0.0, 0.0], 6)
        assert adjust_neighborhood(p, 2) == p.neighbor_indices[:4].tolist()

    def test_monotone_in_score(self):
        sizes = [len(adjust_neighborhood(range(6), s)) for s in range(10)]
        assert sizes == sorted(sizes, reverse=True)

    def test_empty(self):
        with pytest.raises(ValueError):
            adjust_neighborhood([], 0)


class TestMajorityVote:
    def test_strict_majority(self):
        assert majority_vote([1, 1, 2]) == 1

    def test_tie_goes_to_smallest(self):
        assert majority_vote([1, 2]) == 1
        assert majority_vote([2, 1]) == 1
        assert majority_vote([3, 0, 3, 0]) == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            majority_vote([])


class TestBaseline:
    LINE = Dataset([[0.0], [1.0], [3.0]], [0, 0, 1], ("A", "B"))

    def test_hand_example(self):
        assert [j for j, _ in knn_get_neighbors(self.LINE, [0.4], 2)] == [0, 1]
        assert knn_classify(self.LINE, [0.4], 2) == 0

    def test_exact_match_k1(self):
        assert knn_classify(self.LINE, [3.0], 1) == 1

    def test_equidistant_tie(self):
        d = Dataset([[0.0], [2.0]], [1, 0])
        assert knn_classify(d, [1.0], 2) == 0

    def test_batch_matches_single(self, blobs, rng):
        Q = rng.normal(scale=3, size=(20, 2))
        assert knn_predict(blobs, Q, 5).tolist() == [knn_classify(blobs, q, 5) for q in Q]

    @pytest.mark.parametrize("k", [0, 4])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            knn_classify(self.LINE, [0.0], k)


class TestFit:
    def test_scores_in_range(self, blobs):
        model = fit(blobs)
        assert model.k == 6 and len(model.profile) == blobs.n
        assert model.profile.scores.min() >= 0 and model.profile.scores.max() <= 9

    def test_deterministic(self, blobs):
        a, b = fit(blobs, 5), fit(blobs, 5)
        assert np.array_equal(a.profile.raw, b.profile.raw)

    def test_clamps_k(self):
        d = Dataset([[0.0, 0], [1, 0], [0, 1]], [0, 1, 0])
        with pytest.warns(KClampWarning):
            model = fit(d, 10)
        assert model.k == 2

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            fit(Dataset([[0.0]], [0]), 1)


class TestPredict:
    def test_follows_the_five_steps(self, blobs, rng):
        model = fit(blobs, 7)
        for q in rng.normal(scale=3, size=(10, 2)):
            patch = neighbors_of_query(blobs, q, 7)
            raw = curvature.curvature_of_query(patch)
            score = curvature.quantize(np.append(model.profile.raw, raw))[2][-1]
            keep = patch.neighbor_indices[: max(1, 7 - score)]
            (p,) = predict(model, q[None, :])
            assert p.score == score and p.effective_k == len(keep)
            assert p.label == majority_vote(blobs.labels[keep])

    def test_effective_k_bounds(self, blobs, rng):
        model = fit(blobs)
        for p in predict(model, rng.normal(scale=3, size=(30, 2))):
            assert 1 <= p.effective_k <= model.k
            assert p.effective_k == max(1, model.k - p.score)

    def test_single_class_training(self, rng):
        d = Dataset(rng.normal(size=(20, 2)), np.zeros(20, dtype=int), ("only", "other"))
        assert set(predict_labels(fit(d), rng.normal(size=(10, 2))).tolist()) == {0}

    @pytest.mark.filterwarnings("ignore::kknn.curvature.RankCollapseWarning")
    def test_tight_clusters(self, rng):
        X = np.vstack([rng.normal(0, 0.05, (20, 2)), rng.normal(0, 0.05, (20, 2)) + 10])
        d = Dataset(X, np.repeat([0, 1], 20))
        for k in range(1, 11):
            assert predict_labels(fit(d, k), [[0.0, 0.0], [10.0, 10.0]]).tolist() == [0, 1]

    def test_query_order_independent(self, blobs, rng):
        model = fit(blobs)
        Q = rng.normal(scale=3, size=(25, 2))
        perm = rng.permutation(25)
        a = predict(model, Q)
        b = predict(model, Q[perm])
        assert [a[i] for i in perm] == b

    def test_query_scores_do_not_accumulate(self, blobs):
        model = fit(blobs)
        raw = np.array([1e9, 0.0, 1e9])
        assert query_scores(model, raw).tolist() == [query_scores(model, [v])[0] for v in raw]

    def test_scaling_invariance(self, blobs, rng):
        Q = rng.normal(scale=3, size=(15, 2))
        a = predict(fit(blobs), Q)
        b = predict(fit(blobs.with_features(4.0 * blobs.features)), 4.0 * Q)
        assert a == b

    def test_dimension_mismatch(self, blobs):
        with pytest.raises(ValueError, match="3 features, model expects 2"):
            predict(fit(blobs), np.zeros((1, 3)))

    def test_training_points_match_themselves(self, blobs):
        model = fit(blobs)
        for i in range(0, blobs.n, 9):
            p = neighbors_of_query(blobs, blobs.features[i], model.k)
            assert p.neighbor_indices[0] == i and p.neighbor_distances[0] == 0.0


class TestPersistence:
    def test_round_trip(self, blobs, tmp_path, rng):
        model = fit(blobs)
        save_model(model, tmp_path / "m.json")
        again = load_model(tmp_path / "m.json")
        assert again.k == model.k and again.train == model.train
        assert np.array_equal(again.profile.scores, model.profile.scores)
        Q = rng.normal(scale=3, size=(20, 2))
        assert predict(again, Q) == predict(model, Q)

    def test_preprocess_field(self, blobs, tmp_path):
        save_model(fit(blobs), tmp_path / "m.json", preprocess={"steps": []})
        assert read_model(tmp_path / "m.json")[1] == {"steps": []}
        save_model(fit(blobs), tmp_path / "n.json")
        assert read_model(tmp_path / "n.json")[1] is None

    def test_not_json(self, tmp_path):
        (tmp_path / "m.json").write_text("garbage")
        with pytest.raises(ModelFormatError):
            load_model(tmp_path / "m.json")

    def test_wrong_version(self, blobs, tmp_path):
        save_model(fit(blobs), tmp_path / "m.json")
        doc = json.loads((tmp_path / "m.json").read_text())
        doc["version"] = 99
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="version"):
            load_model(tmp_path / "m.json")

    def test_truncated_curvatures(self, blobs, tmp_path):
        save_model(fit(blobs), tmp_path / "m.json")
        doc = json.loads((tmp_path / "m.json").read_text())
        doc["raw_curvatures"] = doc["raw_curvatures"][:-1]
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            load_model(tmp_path / "m.json")


class TestEstimators:
    def test_fit_predict(self, blobs):
        kk = KKNNClassifier().fit(blobs.features, blobs.labels)
        assert np.mean(kk.predict(blobs.features) == blobs.labels) > 0.9
        kn = KNNClassifier(k=3).fit(blobs.features, blobs.labels)
        assert kn.predict(blobs.features).tolist() == knn_predict(blobs, blobs.features, 3).tolist()

    def test_knn_estimator_clamps(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = KNNClassifier(k=5).fit([[0.0], [1.0]], [0, 1])
        assert est.k_ == 1 and any(issubclass(w.category, KClampWarning) for w in caught)
