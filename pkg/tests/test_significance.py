import math

import numpy as np
import pytest
from helpers import euclid_matrix

from textdiv import (
    Corpus,
    EvalInstance,
    MetricSpec,
    Partition,
    SignificanceConfig,
    StatisticKind,
    corpus_significance,
    exact_pvalue,
    harmonic_mean_p,
    instance_significance,
    mean_aggregate_score,
    montecarlo_pvalue,
    prepare_from_matrix,
    prepare_from_vectors,
    prepare_instance,
    sensitivity_curve,
    statistic_for_partition,
    trm_statistic,
)
from textdiv.errors import ExactLimitExceededError, InsufficientSamplesError
from textdiv.significance import _instance_seed


def two_cluster_matrix():
    """1-D points {0, 1} vs {10, 11}; all 6 reassignments enumerable by hand."""
    return euclid_matrix([[0.0], [1.0]], [[10.0], [11.0]])


class TestStatisticKind:
    def test_validation(self):
        with pytest.raises(ValueError):
            StatisticKind(kind="anova")
        with pytest.raises(ValueError):
            StatisticKind(kind="frechet", metric=MetricSpec(kind="bleu"))
        with pytest.raises(ValueError):
            StatisticKind(kind="trm", tie_policy="strict")
        with pytest.raises(ValueError):
            StatisticKind(kind="trm", symmetrization="max")

    def test_orientation(self):
        assert StatisticKind(kind="mean_agg").smaller_is_more_divergent
        assert not StatisticKind(kind="trm").smaller_is_more_divergent
        assert not StatisticKind(kind="frechet").smaller_is_more_divergent


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SignificanceConfig(mode="bootstrap")
        with pytest.raises(ValueError):
            SignificanceConfig(mode="montecarlo", samples=50)
        SignificanceConfig(mode="exact", samples=50)  # samples unused here
        with pytest.raises(ValueError):
            SignificanceConfig(threads=0)


class TestExactTrm:
    def test_hand_enumerated_pvalue(self):
        # 6 partitions; q = 4/3 for the two cluster-respecting splits and
        # 2/3 for the four mixed ones, so p = 2/6
        prep = prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="trm"))
        res = exact_pvalue(prep)
        assert res.observed == pytest.approx(4 / 3, abs=1e-15)
        assert res.p == 1 / 3
        assert res.evaluations == 6
        assert res.mode == "exact"
        assert res.log10_p == pytest.approx(math.log10(1 / 3))

    def test_observed_is_first_row(self):
        mat = two_cluster_matrix()
        prep = prepare_from_matrix(mat, StatisticKind(kind="trm"))
        res = exact_pvalue(prep)
        assert res.observed == trm_statistic(mat).q

    def test_statistic_for_partition_matches_trm(self):
        mat = two_cluster_matrix()
        prep = prepare_from_matrix(mat, StatisticKind(kind="trm"))
        for cand in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]:
            part = Partition(candidate_indices=cand, size=4)
            assert statistic_for_partition(prep, part) == pytest.approx(
                trm_statistic(mat, part).q, abs=1e-15
            )

    def test_limit_enforced(self):
        rng = np.random.default_rng(0)
        mat = euclid_matrix(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))
        prep = prepare_from_matrix(mat, StatisticKind(kind="trm"))
        with pytest.raises(ExactLimitExceededError, match="montecarlo"):
            exact_pvalue(prep, exact_limit=100)

    def test_threads_do_not_change_the_count(self):
        rng = np.random.default_rng(1)
        mat = euclid_matrix(rng.normal(size=(4, 2)), rng.normal(size=(4, 2)))
        prep = prepare_from_matrix(mat, StatisticKind(kind="trm"))
        a = exact_pvalue(prep, threads=1)
        b = exact_pvalue(prep, threads=4)
        assert a.p == b.p
        assert a.observed == b.observed


class TestExactMeanAgg:
    def test_hand_enumerated_pvalue(self):
        # observed statistic is -(10 + 9)/2 = -9.5; only the mirror split
        # matches it, so p = 2/6 again but through the score orientation
        prep = prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="mean_agg"))
        res = exact_pvalue(prep)
        assert res.observed == pytest.approx(-9.5, abs=1e-12)
        assert res.p == 1 / 3

    def test_smaller_scores_count_as_extreme(self):
        # mixed splits score about -1, far above the observed -9.5; with the
        # divergence orientation they must not count
        prep = prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="mean_agg"))
        res = exact_pvalue(prep)
        part = Partition(candidate_indices=(0, 2), size=4)
        mixed = statistic_for_partition(prep, part)
        assert mixed == pytest.approx(-1.0, abs=1e-12)
        assert mixed > res.observed


class TestExactVectorStatistics:
    def test_frechet_pvalue(self):
        cand = np.array([[0.0], [1.0]])
        ref = np.array([[10.0], [11.0]])
        prep = prepare_from_vectors(cand, ref, StatisticKind(kind="frechet"))
        res = exact_pvalue(prep)
        assert res.observed == pytest.approx(100.0, abs=1e-3)
        assert res.p == 1 / 3

    def test_mmd_pvalue(self):
        cand = np.array([[0.0], [1.0]])
        ref = np.array([[10.0], [11.0]])
        prep = prepare_from_vectors(cand, ref, StatisticKind(kind="mmd"))
        res = exact_pvalue(prep)
        assert res.p == 1 / 3
        assert res.observed > 1.0

    def test_frechet_needs_two_per_side(self):
        with pytest.raises(InsufficientSamplesError):
            prepare_from_vectors(
                np.zeros((1, 2)), np.zeros((3, 2)), StatisticKind(kind="frechet")
            )

    def test_kind_routing(self):
        with pytest.raises(ValueError):
            prepare_from_vectors(
                np.zeros((2, 2)), np.zeros((2, 2)), StatisticKind(kind="trm")
            )
        with pytest.raises(ValueError):
            prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="mmd"))


class TestMonteCarlo:
    def test_converges_to_exact(self):
        prep = prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="trm"))
        res = montecarlo_pvalue(prep, samples=2000, seed=42)
        assert res.mode == "montecarlo"
        assert res.evaluations == 2000
        assert res.p == pytest.approx(1 / 3, abs=0.05)

    def test_seed_determinism(self):
        prep = prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="trm"))
        a = montecarlo_pvalue(prep, samples=500, seed=7)
        b = montecarlo_pvalue(prep, samples=500, seed=7)
        assert a.p == b.p

    def test_add_one_keeps_p_positive(self):
        # a wildly separated pair: no sampled split should beat the
        # observed one, leaving the floor 1 / (samples + 1)
        mat = euclid_matrix([[0.0], [0.1]], [[1000.0], [1000.1]])
        prep = prepare_from_matrix(mat, StatisticKind(kind="trm"))
        res = montecarlo_pvalue(prep, samples=500, seed=3)
        assert res.p >= 1 / 501
        assert res.p > 0.0

    def test_sample_floor(self):
        prep = prepare_from_matrix(two_cluster_matrix(), StatisticKind(kind="trm"))
        with pytest.raises(ValueError):
            montecarlo_pvalue(prep, samples=99, seed=0)

    def test_threads_do_not_change_p(self):
        rng = np.random.default_rng(2)
        mat = euclid_matrix(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))
        prep = prepare_from_matrix(mat, StatisticKind(kind="trm"))
        a = montecarlo_pvalue(prep, samples=5000, seed=11, threads=1)
        b = montecarlo_pvalue(prep, samples=5000, seed=11, threads=4)
        assert a.p == b.p


class TestHarmonicMean:
    def test_closed_form(self):
        assert harmonic_mean_p([0.01, 1.0]) == pytest.approx(2 / 101, rel=1e-12)

    def test_single_value_passthrough(self):
        assert harmonic_mean_p([0.25]) == pytest.approx(0.25)

    def test_bounded_by_min_and_max(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            ps = rng.uniform(1e-6, 1.0, size=rng.integers(1, 8))
            h = harmonic_mean_p(ps)
            assert ps.min() <= h + 1e-15
            assert h <= ps.max() + 1e-15

    def test_validation(self):
        with pytest.raises(ValueError):
            harmonic_mean_p([])
        with pytest.raises(ValueError):
            harmonic_mean_p([0.5, 0.0])
        with pytest.raises(ValueError):
            harmonic_mean_p([1.5])


class TestInstanceSeeds:
    def test_stable_and_id_sensitive(self):
        assert _instance_seed(0, "a") == _instance_seed(0, "a")
        assert _instance_seed(0, "a") != _instance_seed(0, "b")
        assert _instance_seed(0, "a") != _instance_seed(1, "a")


def tiny_text_corpus():
    return Corpus(
        [
            EvalInstance.from_texts(
                "i1",
                ["a man runs", "a man walks", "dogs bark loudly"],
                ["a man is running", "a person runs"],
            ),
            EvalInstance.from_texts(
                "i2",
                ["the sun sets", "the sun rises", "rain falls hard"],
                ["the sun is setting", "sunset over water"],
            ),
        ]
    )


class TestCorpusLevel:
    def test_instance_significance_montecarlo_is_deterministic(self):
        kind = StatisticKind(kind="trm", metric=MetricSpec(kind="meteor_lite"))
        config = SignificanceConfig(mode="montecarlo", samples=200, seed=9)
        inst = tiny_text_corpus().instances[0]
        a = instance_significance(inst, kind, config)
        b = instance_significance(inst, kind, config)
        assert a.p == b.p
        assert a.observed == b.observed

    def test_corpus_combines_by_harmonic_mean(self):
        corpus = tiny_text_corpus()
        kind = StatisticKind(kind="trm", metric=MetricSpec(kind="meteor_lite"))
        config = SignificanceConfig(mode="exact")
        res = corpus_significance(corpus, kind, config)
        assert [r.instance_id for r in res.instances] == ["i1", "i2"]
        assert res.hmp == pytest.approx(
            harmonic_mean_p([r.p for r in res.instances]), rel=1e-12
        )
        assert res.log10_hmp == pytest.approx(math.log10(res.hmp))

    def test_prepare_instance_requires_metric_for_trm(self):
        inst = tiny_text_corpus().instances[0]
        with pytest.raises(ValueError, match="metric"):
            prepare_instance(inst, StatisticKind(kind="trm"))

    def test_prepare_instance_requires_embeddings_for_mmd(self):
        inst = tiny_text_corpus().instances[0]
        with pytest.raises(ValueError, match="embedding"):
            prepare_instance(inst, StatisticKind(kind="mmd"))


class TestMeanAggregateScore:
    def test_meteor_takes_best_reference(self):
        from textdiv.distances import meteor_lite_score

        inst = EvalInstance.from_texts(
            "x", ["a man runs"], ["a man is running", "a person runs"]
        )
        expected = max(
            meteor_lite_score(inst.candidates[0], r) for r in inst.references
        )
        got = mean_aggregate_score(inst, MetricSpec(kind="meteor_lite"))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_bleu_pools_references(self):
        from textdiv.distances import bleu_score

        inst = EvalInstance.from_texts("x", ["a b c", "a b"], ["a b c d", "b c"])
        expected = (
            bleu_score(inst.candidates[0], inst.references)
            + bleu_score(inst.candidates[1], inst.references)
        ) / 2
        got = mean_aggregate_score(inst, MetricSpec(kind="bleu"))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_identity_candidates_score_one(self):
        inst = EvalInstance.from_texts("x", ["a man runs"], ["a man runs"])
        for kind in ("bleu", "rouge_l", "meteor_lite"):
            assert mean_aggregate_score(inst, MetricSpec(kind=kind)) == pytest.approx(1.0)


class TestSensitivityCurve:
    def test_truncation_matches_manual_prefixes(self):
        corpus = tiny_text_corpus()
        kind = StatisticKind(kind="trm", metric=MetricSpec(kind="meteor_lite"))
        config = SignificanceConfig(mode="exact")
        curve = sensitivity_curve(corpus, kind, k_max=3, config=config)
        assert [pt.k for pt in curve] == [1, 2, 3]
        manual = Corpus(
            [
                EvalInstance(
                    instance_id=inst.instance_id,
                    candidates=inst.candidates[:2],
                    references=inst.references,
                )
                for inst in corpus
            ]
        )
        expected = corpus_significance(manual, kind, config)
        assert curve[1].hmp == pytest.approx(expected.hmp, rel=1e-12)

    def test_short_instances_rejected_with_ids(self):
        corpus = tiny_text_corpus()
        kind = StatisticKind(kind="trm", metric=MetricSpec(kind="meteor_lite"))
        with pytest.raises(ValueError, match="i1"):
            sensitivity_curve(corpus, kind, k_max=4, config=SignificanceConfig())

    def test_k_max_validation(self):
        kind = StatisticKind(kind="trm", metric=MetricSpec(kind="meteor_lite"))
        with pytest.raises(ValueError):
            sensitivity_curve(tiny_text_corpus(), kind, k_max=0, config=SignificanceConfig())
