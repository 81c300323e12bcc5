import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turntake import (
    InputValidationError,
    LikelihoodStream,
    Thresholds,
    agreement_curve,
    confusion_matrix,
    judge_label_a,
    judge_label_b,
    judge_label_c,
    judge_label_e,
    metric_agreement,
    per_class_roc_auc,
    roc_auc,
    sensitivity_me,
    single_label,
    tune_thresholds,
)
from turntake.judge import threshold_grid, tuning_objective
from turntake.labeler import CLASSES, NOT_BC, DecisionInstance

from .oracles import oracle_auc


def vec(na=0.0, bc=0.0, i=0.0, t=0.0, c=0.0):
    return np.array([na, bc, i, t, c])


def uniform_rest(**kwargs):
    """Probability vector with the named masses, remaining mass spread uniformly."""
    order = ("na", "bc", "i", "t", "c")
    named = {k: v for k, v in kwargs.items()}
    rest = (1.0 - sum(named.values())) / (5 - len(named))
    return np.array([named.get(k, rest) for k in order])


def instance(metric, chunk, actual):
    return DecisionInstance(metric, chunk, "AI", actual, (0, chunk - 1))


def stream_from_rows(rows, start=0):
    return LikelihoodStream(start, np.array(rows))


class TestJudgeLabels:
    def test_j1_turn_change(self):
        assert judge_label_a(uniform_rest(t=0.5, c=0.2), 0.0) == "T"

    def test_j1_boundary_is_strict(self):
        assert judge_label_a(uniform_rest(t=0.3, c=0.3), 0.0) == "C"

    def test_j1_continuation(self):
        assert judge_label_a(uniform_rest(t=0.1, c=0.4), 0.0) == "C"

    def test_j2_backchannel(self):
        assert judge_label_b(uniform_rest(bc=0.3), 0.1) == "BC"

    def test_j2_boundary_is_strict(self):
        assert judge_label_b(uniform_rest(bc=0.1), 0.1) == NOT_BC

    def test_j2_zero(self):
        assert judge_label_b(uniform_rest(bc=0.0), 0.1) == NOT_BC

    def test_j3_interrupt(self):
        assert judge_label_c(uniform_rest(i=0.2, c=0.5), -0.45) == "I"

    def test_j4_turn_change(self):
        assert judge_label_e(uniform_rest(t=0.3, c=0.35), -0.1) == "T"

    def test_j3_continuation(self):
        assert judge_label_c(vec(i=0.0, c=1.0), -0.45) == "C"

    def test_malformed_vector_rejected(self):
        with pytest.raises(InputValidationError):
            judge_label_a(np.array([0.5, 0.5, 0.5, 0.5, 0.5]), 0.0)
        with pytest.raises(InputValidationError):
            judge_label_a(np.array([0.5, 0.5]), 0.0)

    @settings(max_examples=80, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=5, max_size=5),
        st.floats(min_value=-0.9, max_value=0.9),
    )
    def test_monotone_in_threshold(self, raw, theta):
        p = np.array(raw) / np.sum(raw)
        higher = min(0.99, theta + 0.05)
        if judge_label_a(p, theta) == "C":
            assert judge_label_a(p, higher) == "C"
        if judge_label_b(p, abs(theta)) == NOT_BC:
            assert judge_label_b(p, min(1.0, abs(theta) + 0.05)) == NOT_BC


class TestAgreement:
    def test_hand_computed_ci(self):
        rows = [uniform_rest(t=0.6, c=0.1)] * 10
        stream = stream_from_rows(rows)
        instances = [instance("a", i, "T" if i < 8 else "C") for i in range(10)]
        report = metric_agreement(instances, stream, 0.0, "a")
        speak_up = report["branches"]["speak_up"]
        assert speak_up["agreement"] == pytest.approx(1.0)
        let_continue = report["branches"]["let_continue"]
        assert let_continue["agreement"] == 0.0

    def test_ci_halfwidth_formula(self):
        # 8 agreements of 10: sample std of the indicator is 0.4216
        rows = [uniform_rest(t=0.6, c=0.1)] * 8 + [uniform_rest(t=0.1, c=0.6)] * 2
        stream = stream_from_rows(rows)
        instances = [instance("a", i, "T") for i in range(10)]
        report = metric_agreement(instances, stream, 0.0, "a")
        branch = report["branches"]["speak_up"]
        assert branch["agreement"] == pytest.approx(0.8)
        lo, hi = branch["ci95"]
        assert (hi - lo) / 2 == pytest.approx(1.96 * 0.421637 / np.sqrt(10), abs=1e-4)

    def test_empty_branch_reported_undefined(self):
        stream = stream_from_rows([uniform_rest(t=0.6, c=0.1)])
        report = metric_agreement([instance("a", 0, "T")], stream, 0.0, "a")
        assert report["branches"]["let_continue"] == {
            "n": 0,
            "agreement": None,
            "ci95": None,
        }

    def test_perfect_agreement_zero_width(self):
        rows = [uniform_rest(t=0.6, c=0.1)] * 5
        stream = stream_from_rows(rows)
        instances = [instance("a", i, "T") for i in range(5)]
        report = metric_agreement(instances, stream, 0.0, "a")
        lo, hi = report["branches"]["speak_up"]["ci95"]
        assert lo == hi == 1.0

    def test_missing_rows_listed(self):
        stream = stream_from_rows([uniform_rest(t=0.6, c=0.1)])
        with pytest.raises(InputValidationError, match="7"):
            metric_agreement([instance("a", 7, "T")], stream, 0.0, "a")

    def test_decision_share(self):
        rows = [uniform_rest(t=0.6, c=0.1)] * 4
        stream = stream_from_rows(rows)
        instances = [instance("a", i, actual) for i, actual in enumerate("TTTC")]
        report = metric_agreement(instances, stream, 0.0, "a")
        assert report["decision_share_pct"] == pytest.approx(75.0)


@pytest.mark.filterwarnings("ignore:no validation instances")
class TestTuning:
    def planted(self, argmax):
        # positives separable from negatives exactly in (argmax, argmax + 0.01)
        rows, instances = [], []
        for j in range(40):
            positive = j % 2 == 0
            diff = argmax + 0.01 if positive else argmax
            rows.append(uniform_rest(t=(1 + diff) / 2 - 0.1, c=(1 - diff) / 2 - 0.1))
            instances.append(instance("a", j, "T" if positive else "C"))
        return stream_from_rows(rows), instances

    def test_recovers_planted_optimum(self):
        stream, instances = self.planted(0.13)
        tuned = tune_thresholds({"a": instances}, stream)
        assert tuned.t1 == pytest.approx(0.13, abs=0.0100001)
        grid, curve = agreement_curve(instances, stream, "a")
        assert curve[np.flatnonzero(np.isclose(grid, tuned.t1))[0]] == curve.max()

    def test_rescan_confirms_global_maximum(self):
        stream, instances = self.planted(-0.2)
        tuned = tune_thresholds({"a": instances}, stream)
        best = tuning_objective(instances, stream, "a", tuned.t1)
        for theta in threshold_grid("a"):
            assert best >= tuning_objective(instances, stream, "a", theta) - 1e-12

    def test_tie_breaks_to_smallest(self):
        rows = [uniform_rest(t=0.2, c=0.2)] * 6
        stream = stream_from_rows(rows)
        instances = [instance("a", j, "T" if j % 2 else "C") for j in range(6)]
        tuned = tune_thresholds({"a": instances}, stream)
        assert tuned.t1 == -0.5  # every threshold scores 0.5; grid minimum wins

    def test_empty_metric_keeps_default_with_warning(self):
        stream = stream_from_rows([uniform_rest(bc=0.5)])
        with pytest.warns(UserWarning):
            tuned = tune_thresholds({"b": [instance("b", 0, "BC")]}, stream)
        assert tuned.t1 == Thresholds().t1
        assert tuned.t3 == Thresholds().t3

    def test_probability_grid_for_metric_b(self):
        grid = threshold_grid("b")
        assert grid[0] == 0.0 and grid[-1] == 1.0 and len(grid) == 101
        grid = threshold_grid("a")
        assert grid[0] == -0.5 and grid[-1] == 0.5 and len(grid) == 101


class TestSensitivity:
    def test_formula(self):
        curve = np.full(100, 80.0)
        curve[::2] = 84.0  # sd of the curve is 2.005... use exact check below
        me = sensitivity_me(curve)
        assert me == pytest.approx(1.96 * np.std(curve, ddof=1) / 10.0, abs=1e-15)

    def test_constant_curve(self):
        assert sensitivity_me(np.full(50, 0.7)) == pytest.approx(0.0, abs=1e-12)

    def test_alternating_curve(self):
        curve = np.tile([0.0, 1.0], 50)
        assert sensitivity_me(curve) == pytest.approx(1.96 * 0.502519 / 10.0, abs=1e-6)

    def test_needs_two_points(self):
        with pytest.raises(InputValidationError):
            sensitivity_me([0.5])


class TestSingleLabel:
    def test_ratio_rule(self):
        stream = stream_from_rows([vec(na=0.5, c=0.5)])
        points = {"NA": 0.45, "BC": 0.4, "I": 0.4, "T": 0.4, "C": 0.2}
        labels = single_label(stream, points)
        assert CLASSES[labels[0]] == "C"  # ratio 2.5 beats 1.11

    def test_fallback_to_c(self):
        stream = stream_from_rows([np.full(5, 0.2)])
        points = {cls: 0.9 for cls in CLASSES}
        assert CLASSES[single_label(stream, points)[0]] == "C"

    def test_certain_class_wins(self):
        stream = stream_from_rows([vec(t=1.0)])
        assert CLASSES[single_label(stream)[0]] == "T"

    def test_selection_invariant_when_cleared_set_unchanged(self):
        rng = np.random.default_rng(17)
        points = {"NA": 0.4, "BC": 0.3, "I": 0.35, "T": 0.3, "C": 0.2}
        point_vec = np.array([points[c] for c in CLASSES])
        rows = rng.dirichlet(np.ones(5), size=300)
        stream = stream_from_rows(rows)
        base = single_label(stream, points)
        for scale in (0.5, 0.9):
            scaled = {c: p * scale for c, p in points.items()}
            same_cleared = np.all(
                (rows > point_vec) == (rows > point_vec * scale), axis=1
            )
            got = single_label(stream, scaled)
            assert np.array_equal(got[same_cleared], base[same_cleared])


class TestConfusion:
    def test_identical_sequences_are_diagonal(self):
        dialogue = np.array([4, 4, 3, 0, 2, 4, 1, 4])
        owner = np.array([1, 1, 1, 1, 1, 1, 1, 1])
        matrix, n = confusion_matrix(dialogue, dialogue[1:], owner, ai_speaker=2, start_chunk=1)
        assert n == 7
        assert np.trace(matrix) == pytest.approx(100.0)

    def test_single_cell(self):
        dialogue = np.full(6, 2)  # all I
        generated = np.full(5, 4)  # all C
        owner = np.ones(6)
        matrix, n = confusion_matrix(dialogue, generated, owner, 2, start_chunk=1)
        assert matrix[4, 2] == pytest.approx(100.0)
        assert matrix.sum() == pytest.approx(100.0)

    def test_only_ai_decision_chunks_scored(self):
        dialogue = np.array([4] * 10)
        generated = np.array([4] * 9)
        owner = np.array([1] * 5 + [2] * 5)  # AI = 2: human-owned chunks are 0..4
        matrix, n = confusion_matrix(dialogue, generated, owner, 2, start_chunk=1)
        assert n == 5  # decisions at i = 1..5 (owner of i-1 is the human)

    def test_hand_counted_matrix(self):
        dialogue = np.array([0, 4, 4, 3, 4, 2, 2, 4, 1, 4, 0, 0, 4, 4, 3, 4, 4, 4, 4, 4])
        generated = np.array([4, 4, 3, 4, 2, 4, 4, 1, 4, 0, 4, 4, 4, 3, 4, 4, 0, 4, 4])
        owner = np.ones(20)
        matrix, n = confusion_matrix(dialogue, generated, owner, 2, start_chunk=1)
        assert n == 19
        # count (generated=4, dialogue=4) pairs by hand: chunks 1,4,7,12,16,18,19...
        pairs = list(zip(generated, dialogue[1:]))
        want = 100.0 * sum(1 for g, d in pairs if g == 4 and d == 4) / 19
        assert matrix[4, 4] == pytest.approx(want)

    def test_no_scored_chunks_is_error(self):
        with pytest.raises(InputValidationError):
            confusion_matrix(np.array([4, 4]), np.array([4]), np.array([2, 2]), 2, 1)

    def test_cells_sum_to_100(self):
        rng = np.random.default_rng(19)
        dialogue = rng.integers(0, 5, size=200)
        generated = rng.integers(0, 5, size=199)
        owner = rng.integers(1, 3, size=200)
        matrix, _ = confusion_matrix(dialogue, generated, owner, 2, start_chunk=1)
        assert matrix.sum() == pytest.approx(100.0)
        assert (matrix >= 0).all()


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.8], [1, 0]) == 1.0

    def test_identical_scores(self):
        assert roc_auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_small_example(self):
        assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_single_class_undefined(self):
        assert roc_auc([0.1, 0.2], [1, 1]) is None

    def test_matches_literal_pairwise(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            n = int(rng.integers(2, 120))
            scores = np.round(rng.random(n), 2)  # force ties
            labels = rng.random(n) < 0.5
            if labels.all() or not labels.any():
                labels[0] = not labels[0]
            assert roc_auc(scores, labels) == pytest.approx(
                oracle_auc(scores.tolist(), labels.tolist()), abs=1e-12
            )

    def test_complement_identities(self):
        rng = np.random.default_rng(43)
        scores = rng.random(50)  # continuous, ties almost surely absent
        labels = rng.random(50) < 0.4
        labels[0], labels[1] = True, False
        auc = roc_auc(scores, labels)
        assert auc + roc_auc(scores, ~labels) == pytest.approx(1.0, abs=1e-12)
        assert auc + roc_auc(-scores, labels) == pytest.approx(1.0, abs=1e-12)

    def test_per_class_wrapper(self):
        labels = np.array([0, 4, 4, 3, 4, 4])
        rows = [uniform_rest(na=0.8), uniform_rest(c=0.7), uniform_rest(c=0.6),
                uniform_rest(t=0.9), uniform_rest(c=0.5), uniform_rest(c=0.9)]
        out = per_class_roc_auc(labels, stream_from_rows(rows))
        assert out["NA"] == 1.0 and out["T"] == 1.0 and out["C"] == 1.0
        assert out["BC"] is None and out["I"] is None
        assert out["overall"] == pytest.approx(1.0)


class TestMonotonicityAllLabels:
    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=5, max_size=5),
        st.floats(min_value=-0.9, max_value=0.9),
    )
    def test_j3_j4_never_flip_up(self, raw, theta):
        p = np.array(raw) / np.sum(raw)
        higher = min(0.99, theta + 0.07)
        if judge_label_c(p, theta) == "C":
            assert judge_label_c(p, higher) == "C"
        if judge_label_e(p, theta) == "C":
            assert judge_label_e(p, higher) == "C"
