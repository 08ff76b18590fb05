from __future__ import annotations

import numpy as np
import pytest

from alids.errors import CapabilityError, ConfigError
from alids.learner import (
    BoostConfig,
    LogisticConfig,
    LogisticModel,
    loss_gradient,
    predict_proba,
    train,
    train_logistic,
)
from alids.query import (
    CandidateScore,
    DensityConfig,
    QueryStrategy,
    binary_entropy,
    density_weights,
    density_wrap,
    eer_score,
    egl_score,
    egl_scores,
    qbc_disagreement,
    random_select,
    select_next,
    stream_decide,
    uncertainty_score,
)
from reference import brute_force_eer, explicit_egl

H2_TWO_THIRDS = 0.9182958340544896  # -2/3*log2(2/3) - 1/3*log2(1/3)


class TestUncertaintyScore:
    def test_entropy_peaks_at_half(self):
        assert uncertainty_score(0.5, "entropy") == 1.0

    def test_argmax_is_closest_to_half(self):
        posteriors = np.array([0.9, 0.55, 0.02])
        for criterion in ("entropy", "least_confident", "margin"):
            scores = np.asarray(uncertainty_score(posteriors, criterion))
            assert int(np.argmax(scores)) == 1, criterion

    def test_entropy_of_two_thirds(self):
        assert uncertainty_score(2 / 3, "entropy") == pytest.approx(
            H2_TWO_THIRDS, abs=1e-12
        )

    def test_least_confident_and_margin_forms(self):
        assert uncertainty_score(0.8, "least_confident") == pytest.approx(0.2)
        assert uncertainty_score(0.8, "margin") == pytest.approx(-0.6)

    def test_criteria_induce_same_ordering(self, rng):
        for _ in range(50):
            p = rng.random(20)
            orders = []
            for criterion in ("entropy", "least_confident", "margin"):
                scores = np.asarray(uncertainty_score(p, criterion))
                orders.append(np.lexsort((np.arange(20), -scores)).tolist())
            assert orders[0] == orders[1] == orders[2]


class TestQbcDisagreement:
    def test_unanimous_committee_scores_zero(self):
        posteriors = np.full(4, 0.9)
        assert qbc_disagreement(posteriors, "vote_entropy") == 0.0
        assert qbc_disagreement(posteriors, "avg_kl") == pytest.approx(0.0, abs=1e-12)

    def test_even_split_is_one_bit(self):
        posteriors = np.array([0.9, 0.8, 0.1, 0.2])
        assert qbc_disagreement(posteriors, "vote_entropy") == 1.0

    def test_two_one_hard_vote(self):
        posteriors = np.array([0.9, 0.7, 0.2])
        got = qbc_disagreement(posteriors, "vote_entropy")
        assert got == pytest.approx(H2_TWO_THIRDS, abs=1e-12)

    def test_soft_vote_uses_mean_posterior(self):
        posteriors = np.array([0.25, 0.75])
        assert qbc_disagreement(posteriors, "vote_entropy", soft=True) == 1.0

    def test_avg_kl_zero_iff_equal(self, rng):
        equal = np.full(5, 0.37)
        assert qbc_disagreement(equal, "avg_kl") == pytest.approx(0.0, abs=1e-12)
        unequal = np.array([0.2, 0.8, 0.5])
        assert qbc_disagreement(unequal, "avg_kl") > 0.0

    def test_avg_kl_known_value(self):
        # members (0.25, 0.75): mean 0.5; each KL = 1 - H2(0.25) bits
        posteriors = np.array([0.25, 0.75])
        expected = 1.0 - float(binary_entropy(0.25))
        assert qbc_disagreement(posteriors, "avg_kl") == pytest.approx(expected, abs=1e-12)

    def test_vote_entropy_bounds(self, rng):
        for _ in range(100):
            c = int(rng.integers(2, 9))
            p = rng.random(c)
            v = qbc_disagreement(p, "vote_entropy")
            assert 0.0 <= v <= 1.0
            assert qbc_disagreement(p, "avg_kl") >= 0.0

    def test_single_member_rejected(self):
        with pytest.raises(ConfigError):
            qbc_disagreement(np.array([0.5]), "vote_entropy")

    def test_matrix_input_gives_per_instance_scores(self):
        posteriors = np.array([[0.9, 0.1], [0.9, 0.9]]).T  # 2 members x 2 instances
        out = qbc_disagreement(posteriors, "vote_entropy")
        assert out.shape == (2,)
        assert out[0] == 1.0
        assert out[1] == 0.0


class TestEgl:
    def test_half_posterior_unit_norm(self):
        # p = 0.5 and |(x,1)| = 1 requires x = 0
        model = LogisticModel(weights=np.zeros(1), bias=0.0, config=LogisticConfig())
        assert egl_score(model, np.zeros(1)) == pytest.approx(0.5, rel=1e-12)

    def test_extreme_posterior_drives_score_to_zero(self):
        model = LogisticModel(weights=np.array([40.0]), bias=0.0, config=LogisticConfig())
        assert egl_score(model, np.array([1.0])) < 1e-10

    def test_closed_form_matches_explicit_expectation(self, rng):
        for _ in range(1000):
            d = int(rng.integers(1, 5))
            model = LogisticModel(
                weights=rng.normal(size=d),
                bias=float(rng.normal()),
                config=LogisticConfig(),
            )
            x = rng.normal(size=d)
            closed = egl_score(model, x)
            explicit = explicit_egl(model, x, loss_gradient)
            assert closed == pytest.approx(explicit, abs=1e-12)

    def test_requires_gradient_capability(self, rng):
        x = rng.random((10, 2))
        y = (x[:, 0] > 0.5).astype(float)
        boosted = train(x, y, BoostConfig(rounds=2))
        with pytest.raises(CapabilityError):
            egl_scores(boosted, x)


class TestEer:
    def _tiny_problem(self, rng):
        x = rng.random((6, 2))
        y = (x[:, 0] > 0.5).astype(float)
        model = train(x[:4], y[:4], BoostConfig(rounds=5))
        return model, x, y

    def test_matches_brute_force_both_losses(self, rng):
        model, x, y = self._tiny_problem(rng)
        retrain = lambda a, b: train(a, b, BoostConfig(rounds=5))
        for loss in ("log", "zero_one"):
            mine = eer_score(model, x[:4], y[:4], x[4:6], x[5], loss, retrain)
            oracle = brute_force_eer(
                model,
                x[:4],
                y[:4],
                x[4:6],
                x[5],
                loss,
                retrain,
                lambda m, row: predict_proba(m, row),
            )
            assert mine == pytest.approx(oracle, abs=1e-12), loss

    def test_two_point_hand_run_log_loss(self, rng):
        # 2-point labeled set, 2-point sample: compare against an inline
        # hand-run of the definition.
        x_lab = np.array([[0.1, 0.1], [0.9, 0.9]])
        y_lab = np.array([0.0, 1.0])
        sample = np.array([[0.2, 0.3], [0.8, 0.7]])
        cand = np.array([0.55, 0.5])
        cfg = BoostConfig(rounds=4)
        model = train(x_lab, y_lab, cfg)
        retrain = lambda a, b: train(a, b, cfg)

        p = float(predict_proba(model, cand))
        expected = 0.0
        for y_hat, w in ((0, 1 - p), (1, p)):
            m2 = train(np.vstack([x_lab, cand[None]]), np.append(y_lab, y_hat), cfg)
            q = np.asarray(predict_proba(m2, sample))
            expected += w * float(np.mean(-(q * np.log(q) + (1 - q) * np.log(1 - q))))
        got = eer_score(model, x_lab, y_lab, sample, cand, "log", retrain)
        assert got == pytest.approx(-expected, abs=1e-12)

    def test_empty_sample_rejected(self, rng):
        model, x, y = self._tiny_problem(rng)
        with pytest.raises(ConfigError):
            eer_score(
                model, x[:4], y[:4], np.zeros((0, 2)), x[5], "log",
                lambda a, b: train(a, b, BoostConfig(rounds=2)),
            )

    def test_degenerate_posterior_weights_single_retrain(self, rng):
        # A model extremely confident the candidate is normal weights the
        # y=1 branch by ~0, so the score equals the y=0 branch loss.
        x_lab = np.array([[0.0, 0.0], [1.0, 1.0]] * 3)
        y_lab = np.array([0.0, 1.0] * 3)
        cfg = BoostConfig(rounds=40)
        model = train(x_lab, y_lab, cfg)
        cand = np.array([0.0, 0.0])
        sample = np.array([[0.0, 0.1], [1.0, 0.9]])
        retrain = lambda a, b: train(a, b, cfg)
        got = eer_score(model, x_lab, y_lab, sample, cand, "log", retrain)
        m0 = retrain(np.vstack([x_lab, cand[None]]), np.append(y_lab, 0.0))
        q = np.asarray(predict_proba(m0, sample))
        loss0 = float(np.mean(-(q * np.log(q) + (1 - q) * np.log(1 - q))))
        assert got == pytest.approx(-loss0, rel=1e-6)


class TestDensity:
    def test_identical_candidate_keeps_score(self):
        pool = np.tile([[1.0, 2.0]], (5, 1))
        w = density_weights(np.array([[1.0, 2.0]]), pool, beta=1.0)
        assert w[0] == pytest.approx(1.0, rel=1e-12)
        assert density_wrap(np.array([0.7]), w)[0] == pytest.approx(0.7, rel=1e-12)

    def test_beta_zero_recovers_base(self, rng):
        pool = rng.random((6, 3))
        w = density_weights(rng.random((4, 3)), pool, beta=0.0)
        assert (w == 1.0).all()

    def test_orthogonal_candidate_scores_zero(self):
        pool = np.array([[1.0, 0.0]] * 3)
        w = density_weights(np.array([[0.0, 1.0]]), pool, beta=1.0)
        assert w[0] == 0.0

    def test_zero_norm_pairs_similarity_zero(self):
        pool = np.array([[0.0, 0.0], [1.0, 0.0]])
        w = density_weights(np.array([[0.0, 0.0]]), pool, beta=1.0)
        assert w[0] == 0.0


class TestSelectNext:
    def test_tie_breaks_by_id(self):
        scores = [CandidateScore(0, 0.2), CandidateScore(1, 0.9), CandidateScore(2, 0.9)]
        assert select_next(scores, 1) == [1]

    def test_full_pool_ordering(self):
        scores = [CandidateScore(0, 0.2), CandidateScore(1, 0.9), CandidateScore(2, 0.5)]
        assert select_next(scores, 3) == [1, 2, 0]

    def test_oversized_batch_warns_and_returns_pool(self):
        scores = [CandidateScore(0, 0.2), CandidateScore(1, 0.9)]
        with pytest.warns(UserWarning, match="exceeds pool"):
            assert select_next(scores, 5) == [1, 0]

    def test_uncertainty_posteriors_select_middle(self):
        posteriors = {10: 0.9, 11: 0.5, 12: 0.1}
        scores = [
            CandidateScore(i, float(uncertainty_score(p, "entropy")))
            for i, p in posteriors.items()
        ]
        assert select_next(scores, 1) == [11]


class TestRandomSelect:
    def test_full_batch_is_permutation(self):
        ids = [3, 5, 9, 11]
        out = random_select(ids, seed=1, batch=4)
        assert sorted(out) == ids

    def test_deterministic_per_seed(self):
        ids = list(range(30))
        assert random_select(ids, 7, 5) == random_select(ids, 7, 5)

    def test_uniform_frequency(self):
        ids = [0, 1, 2, 3]
        counts = {i: 0 for i in ids}
        trials = 10_000
        for t in range(trials):
            counts[random_select(ids, seed=t, batch=1)[0]] += 1
        # binomial(10^4, 1/4): sigma = sqrt(n p (1-p)) ~ 43.3
        sigma = (trials * 0.25 * 0.75) ** 0.5
        for i in ids:
            assert abs(counts[i] - trials * 0.25) < 3 * sigma


class TestStreamDecide:
    def _model(self, bias=0.0):
        return LogisticModel(weights=np.zeros(2), bias=bias, config=LogisticConfig())

    def test_uncertain_instance_queried(self):
        strategy = QueryStrategy(kind="uncertainty")
        decision = stream_decide(self._model(), np.zeros(2), strategy, threshold=0.9)
        assert decision == "query"

    def test_confident_instance_discarded(self):
        # bias 4.6 -> p ~ 0.99 -> entropy ~ 0.08 bits
        strategy = QueryStrategy(kind="uncertainty")
        decision = stream_decide(self._model(4.6), np.zeros(2), strategy, threshold=0.9)
        assert decision == "discard"

    def test_zero_threshold_queries_everything(self, rng):
        strategy = QueryStrategy(kind="uncertainty")
        for _ in range(10):
            model = self._model(float(rng.normal(scale=3)))
            assert stream_decide(model, rng.random(2), strategy, 0.0) == "query"

    def test_unsupported_strategy_rejected(self):
        strategy = QueryStrategy(kind="qbc")
        with pytest.raises(ConfigError):
            stream_decide(self._model(), np.zeros(2), strategy, 0.5)


class TestStrategyConfig:
    def test_density_cannot_wrap_random(self):
        with pytest.raises(ConfigError):
            QueryStrategy(kind="random", density=DensityConfig(beta=1.0))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            QueryStrategy(kind="mystery")

    def test_dict_round_trip(self):
        strategy = QueryStrategy(kind="qbc", qbc_metric="avg_kl", density=DensityConfig(beta=2.0))
        assert QueryStrategy.from_dict(strategy.to_dict()) == strategy

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            QueryStrategy.from_dict({"kind": "uncertainty", "oops": 1})
