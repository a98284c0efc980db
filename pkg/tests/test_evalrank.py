"""
Tests for distances, ranking metrics, k-reciprocal re-ranking and the
embedding file formats.
"""

import logging
import math

import numpy as np
import pytest

from rptm.errors import ConfigError, CorruptError, DimensionError, FormatError
from rptm.evalrank import (
    RERANK_PRESETS, cmc, evaluate, jaccard_distance, k_reciprocal_encoding,
    k_reciprocal_rerank, load_embeddings, mean_average_precision, normalized_distance,
    pairwise_distances, rank, read_split, save_embeddings, write_metrics, write_split,
)
from rptm.evalrank.metrics import RankingResult, average_precision
from rptm.tabular import read_csv


def flags_result(*flag_lists):
    flags = [np.array(f, dtype=bool) for f in flag_lists]
    return RankingResult([np.arange(len(f)) for f in flags], flags)


def reference_rerank(dist_matrix, num_query, k1, k2, eta):
    """Straight-line loop version of k-reciprocal re-ranking on plain lists"""
    n = len(dist_matrix)
    squared = [[dist_matrix[i][j] ** 2 for j in range(n)] for i in range(n)]
    col_max = [max(squared[i][j] for i in range(n)) or 1.0 for j in range(n)]
    dist = [[squared[j][i] / col_max[i] for j in range(n)] for i in range(n)]
    ranking = [sorted(range(n), key=lambda j, i=i: (dist[i][j], j)) for i in range(n)]

    def reciprocal(i, k):
        return {c for c in ranking[i][:k + 1] if i in ranking[c][:k + 1]}

    encoding = []
    for i in range(n):
        base = reciprocal(i, k1)
        members = set(base)
        for c in base:
            cand = reciprocal(c, int(round(k1 / 2.0)))
            if len(cand & base) > 2.0 / 3.0 * len(cand):
                members |= cand
        weights = {j: math.exp(-dist[i][j]) for j in members}
        total = sum(weights.values())
        encoding.append([weights.get(j, 0.0) / total for j in range(n)])

    if k2 > 1:
        encoding = [[sum(encoding[r][j] for r in ranking[i][:k2]) / k2 for j in range(n)]
                    for i in range(n)]

    out = []
    for q in range(num_query):
        row = []
        for g in range(num_query, n):
            low = sum(min(a, b) for a, b in zip(encoding[q], encoding[g]))
            high = sum(max(a, b) for a, b in zip(encoding[q], encoding[g]))
            jaccard = 1.0 - low / high
            row.append(eta * dist[q][g] + (1.0 - eta) * jaccard)
        out.append(row)
    return np.array(out)


class TestPairwiseDistances:
    """Test pairwise_distances"""

    def test_simple(self):
        d = pairwise_distances([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]])
        assert d[0, 0] == 0.0
        assert d[0, 1] == pytest.approx(math.sqrt(2))

    def test_matches_loops(self, rng):
        q = rng.normal(size=(5, 3))
        g = rng.normal(size=(7, 3))
        d = pairwise_distances(q, g)
        for i in range(5):
            for j in range(7):
                assert d[i, j] == pytest.approx(math.dist(q[i], g[j]), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            pairwise_distances(np.zeros((2, 3)), np.zeros((2, 4)))


class TestRank:
    """Test rank"""

    def test_order(self):
        result = rank(np.array([[0.2, 0.1, 0.3]]), ["a"], ["b", "a", "a"])
        assert result.orders[0].tolist() == [1, 0, 2]
        assert result.flags[0].tolist() == [True, False, True]

    def test_ties_lower_index_first(self):
        result = rank(np.array([[0.5, 0.5, 0.1, 0.5]]), ["a"], ["a", "b", "c", "d"])
        assert result.orders[0].tolist() == [2, 0, 1, 3]

    def test_matches_stable_sort(self, rng):
        dists = rng.integers(0, 5, size=(4, 9)).astype(float)
        result = rank(dists, list("abcd"), list("abcdabcda"))
        for i in range(4):
            expected = sorted(range(9), key=lambda j: (dists[i, j], j))
            assert result.orders[i].tolist() == expected

    def test_exclusion_mask(self):
        exclude = np.array([[False, True, False]])
        result = rank(np.array([[0.2, 0.1, 0.3]]), ["a"], ["b", "a", "a"], exclude)
        assert result.orders[0].tolist() == [0, 2]
        assert result.flags[0].tolist() == [False, True]

    def test_shape_errors(self):
        with pytest.raises(DimensionError):
            rank(np.zeros((2, 3)), ["a"], ["a", "b", "c"])
        with pytest.raises(DimensionError):
            rank(np.zeros((1, 3)), ["a"], ["a", "b", "c"], np.zeros((1, 2), dtype=bool))


class TestCMC:
    """Test cmc"""

    def test_perfect(self):
        assert cmc(flags_result([1, 0], [1, 1]), 1) == 1.0

    def test_first_match_at_rank_three(self):
        result = flags_result([0, 0, 1, 0, 0])
        assert cmc(result, 1) == 0.0
        assert cmc(result, 5) == 1.0

    def test_matches_scan_and_is_monotone(self, rng):
        flags = [rng.random(12) < 0.2 for _ in range(10)]
        for f in flags:
            f[rng.integers(12)] = True
        result = flags_result(*flags)
        values = []
        for k in range(1, 13):
            expected = sum(any(f[:k]) for f in flags) / 10
            values.append(cmc(result, k))
            assert values[-1] == pytest.approx(expected)
        assert values == sorted(values)
        assert values[-1] == 1.0

    def test_errors(self):
        with pytest.raises(ConfigError):
            cmc(flags_result([1]), 0)
        with pytest.raises(ConfigError, match="no gallery match"):
            cmc(flags_result([0, 0]), 1)


class TestMeanAveragePrecision:
    """Test average precision and mAP"""

    def test_matches_at_one_and_three(self):
        assert average_precision(np.array([1, 0, 1, 0], dtype=bool)) == pytest.approx(5 / 6)

    def test_perfect(self):
        assert mean_average_precision(flags_result([1, 1, 0], [1, 0, 0])) == 1.0

    def test_last_rank(self):
        assert average_precision(np.array([0, 0, 0, 1], dtype=bool)) == pytest.approx(0.25)

    def test_mean_over_queries(self):
        result = flags_result([1, 0, 1, 0], [0, 0, 0, 1])
        assert mean_average_precision(result) == pytest.approx((5 / 6 + 0.25) / 2)

    def test_bounds(self, rng):
        for _ in range(20):
            f = rng.random(8) < 0.4
            f[rng.integers(8)] = True
            value = average_precision(f)
            assert 0.0 < value <= 1.0
            first_miss = np.argmin(f) if not f.all() else len(f)
            perfect = not f[first_miss:].any()
            assert (value == 1.0) == perfect

    def test_no_match_rejected(self):
        with pytest.raises(ConfigError):
            mean_average_precision(flags_result([0, 0]))


class TestEvaluate:
    """Test evaluate"""

    def test_metric_names(self, rng):
        q = rng.normal(size=(3, 4))
        g = np.vstack([q + 0.01, rng.normal(size=(5, 4))])
        metrics = evaluate(pairwise_distances(q, g), ["a", "b", "c"], list("abcxyzwv"))
        assert list(metrics) == ["mAP", "cmc@1", "cmc@5", "cmc@10"]
        assert metrics["mAP"] == 1.0
        assert metrics["cmc@1"] == 1.0

    def test_monotone_transform_invariance(self, rng):
        dists = rng.random((6, 10))
        qids = list("aabbcc")
        gids = list("abcabcabcd")
        base = evaluate(dists, qids, gids)
        for transform in (np.exp, np.sqrt, lambda d: 3 * d + 1, lambda d: d ** 3):
            assert evaluate(transform(dists), qids, gids) == base

    def test_queries_without_match_dropped(self, caplog):
        dists = np.array([[0.1, 0.2], [0.3, 0.4]])
        with caplog.at_level(logging.WARNING):
            metrics = evaluate(dists, ["a", "z"], ["b", "a"], ranks=(1,))
        assert metrics == {"mAP": 0.5, "cmc@1": 0.0}
        assert "dropping 1 of 2 queries" in caplog.text

    def test_no_query_has_match(self):
        with pytest.raises(ConfigError):
            evaluate(np.zeros((1, 2)), ["z"], ["a", "b"])


class TestRerank:
    """Test k-reciprocal re-ranking"""

    @pytest.fixture
    def points(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(6, 2))
        return pairwise_distances(pts, pts)

    def test_matches_reference(self, points):
        for k1, k2, eta in ((4, 2, 0.0), (4, 1, 0.3), (3, 3, 0.2)):
            got = k_reciprocal_rerank(points, 2, k1=k1, k2=k2, eta=eta)
            expected = reference_rerank(points.tolist(), 2, k1, k2, eta)
            np.testing.assert_allclose(got, expected, rtol=0, atol=1e-9)

    def test_eta_one_keeps_ordering(self, rng):
        pts = rng.normal(size=(30, 5))
        all_dists = pairwise_distances(pts, pts)
        revised = k_reciprocal_rerank(all_dists, 10, k1=6, k2=3, eta=1.0)
        original = all_dists[:10, 10:]
        assert revised.shape == (10, 20)
        assert np.array_equal(np.argsort(revised, axis=1, kind="stable"),
                              np.argsort(original, axis=1, kind="stable"))

    def test_encoding_rows_are_distributions(self, points):
        encoding = k_reciprocal_encoding(normalized_distance(points), 4, 1)
        np.testing.assert_allclose(encoding.sum(axis=1), 1.0)
        assert np.all(np.diag(encoding) > 0)

    def test_many_exact_duplicates(self):
        pts = np.vstack([np.zeros((6, 3)), np.eye(3)[:2]])
        all_dists = pairwise_distances(pts, pts)
        encoding = k_reciprocal_encoding(normalized_distance(all_dists), 2, 1)
        assert np.all(np.isfinite(encoding))
        np.testing.assert_allclose(encoding.sum(axis=1), 1.0)
        assert encoding[5, 5] == 1.0
        for k2 in (1, 2):
            revised = k_reciprocal_rerank(all_dists, 3, k1=2, k2=k2, eta=0.2)
            assert np.all(np.isfinite(revised))

    def test_jaccard_range(self, points):
        encoding = k_reciprocal_encoding(normalized_distance(points), 4, 2)
        d_j = jaccard_distance(encoding, encoding)
        assert np.all(d_j >= -1e-12) and np.all(d_j <= 1.0 + 1e-12)
        np.testing.assert_allclose(np.diag(d_j), 0.0, atol=1e-12)

    def test_parameter_errors(self, points):
        with pytest.raises(ConfigError):
            k_reciprocal_rerank(points, 2, k1=2, k2=3)
        with pytest.raises(ConfigError):
            k_reciprocal_rerank(points, 2, k1=4, k2=0)
        with pytest.raises(ConfigError):
            k_reciprocal_rerank(points, 2, k1=4, k2=2, eta=1.5)
        with pytest.raises(DimensionError):
            k_reciprocal_rerank(points[:, :5], 2, k1=4, k2=2)
        with pytest.raises(DimensionError):
            k_reciprocal_rerank(points, 6, k1=4, k2=2)

    def test_presets(self):
        assert RERANK_PRESETS["veri"] == {"k1": 60, "k2": 15, "eta": 0.2}
        assert RERANK_PRESETS["duke"]["k1"] == 20


class TestEmbeddingFiles:
    """Test embedding, split and metric files"""

    def test_embeddings_round_trip(self, tmp_path, rng):
        vectors = rng.normal(size=(4, 3))
        save_embeddings(vectors, tmp_path / "e.bin")
        loaded = load_embeddings(tmp_path / "e.bin")
        assert loaded.dtype == np.float64
        np.testing.assert_array_equal(loaded, vectors.astype(np.float32))
        assert (tmp_path / "e.bin").read_bytes()[:7] == b"RPTMEMB"

    def test_embeddings_corrupt(self, tmp_path):
        save_embeddings(np.zeros((2, 2)), tmp_path / "e.bin")
        blob = (tmp_path / "e.bin").read_bytes()
        (tmp_path / "short.bin").write_bytes(blob[:-1])
        with pytest.raises(CorruptError, match="size"):
            load_embeddings(tmp_path / "short.bin")
        (tmp_path / "magic.bin").write_bytes(b"Z" + blob[1:])
        with pytest.raises(CorruptError, match="magic"):
            load_embeddings(tmp_path / "magic.bin")

    def test_split_round_trip(self, tmp_path):
        write_split(["a", "a", "b"], ["query", "gallery", "gallery"], tmp_path / "s.csv")
        assert read_split(tmp_path / "s.csv") == (["a", "a", "b"],
                                                  ["query", "gallery", "gallery"])

    def test_split_errors(self, tmp_path):
        (tmp_path / "bad.csv").write_text("index,id,split\n0,a,train\n")
        with pytest.raises(FormatError, match="split must be"):
            read_split(tmp_path / "bad.csv")
        (tmp_path / "dup.csv").write_text("index,id,split\n0,a,query\n0,a,query\n")
        with pytest.raises(FormatError, match="repeated"):
            read_split(tmp_path / "dup.csv")
        (tmp_path / "hdr.csv").write_text("idx,id,split\n")
        with pytest.raises(FormatError, match="header"):
            read_split(tmp_path / "hdr.csv")

    def test_metrics_file(self, tmp_path):
        write_metrics({"mAP": 0.5, "cmc@1": 1.0}, tmp_path / "m.csv")
        assert read_csv(tmp_path / "m.csv", ("metric", "value")) == [
            ["mAP", "0.500000"], ["cmc@1", "1.000000"],
        ]
