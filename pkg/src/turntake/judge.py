"""Judge-model evaluation: thresholded labels, agreement, tuning and scoring.

A judge model emits one five-way probability vector per chunk
(p_NA, p_BC, p_I, p_T, p_C). This module turns those likelihoods into
per-metric judge labels, measures their agreement with the decisions that
were actually made, tunes the decision thresholds on validation instances,
quantifies threshold sensitivity, and produces single-label sequences,
confusion matrices and ROC-AUC scores.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, InputValidationError
from .labeler import BC, C, CLASSES, I, NOT_BC, T, DecisionInstance, METRIC_DECISIONS
from .timeline import other_speaker

PROB_SUM_TOL = 1e-6

#: default decision thresholds and single-label operating points
DEFAULT_T1 = 0.0
DEFAULT_T2 = 0.1
DEFAULT_T3 = -0.45
DEFAULT_T4 = -0.1
DEFAULT_OPERATING_POINTS = {"NA": 0.45, "BC": 0.4, "I": 0.4, "T": 0.4, "C": 0.2}

#: grid specs for threshold tuning and sensitivity (step 0.01)
DIFFERENCE_GRID = (-0.5, 0.5)
PROBABILITY_GRID = (0.0, 1.0)

BRANCH_NAMES = {
    "a": ("speak_up", "let_continue"),
    "b": ("backchannel", "no_backchannel"),
    "c": ("interrupt", "no_interrupt"),
    "d": ("speak_up", "let_continue"),
    "e": ("floor_taken", "floor_kept"),
}


@dataclass(frozen=True)
class Thresholds:
    """Judge decision thresholds plus single-label operating points."""

    t1: float = DEFAULT_T1
    t2: float = DEFAULT_T2
    t3: float = DEFAULT_T3
    t4: float = DEFAULT_T4
    operating_points: Dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_OPERATING_POINTS)
    )

    def __post_init__(self) -> None:
        if not 0.0 <= self.t2 <= 1.0:
            raise ConfigurationError(f"t2 must lie in [0, 1], got {self.t2}")
        for name, value in (("t1", self.t1), ("t3", self.t3), ("t4", self.t4)):
            if not -1.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [-1, 1], got {value}")
        for cls in CLASSES:
            point = self.operating_points.get(cls)
            if point is None or not 0.0 <= point <= 1.0:
                raise ConfigurationError(
                    f"operating point for {cls} must lie in [0, 1], got {point!r}"
                )

    def for_metric(self, metric_id: str) -> float:
        return {"a": self.t1, "b": self.t2, "c": self.t3, "d": self.t1, "e": self.t4}[
            metric_id
        ]


@dataclass
class LikelihoodStream:
    """Per-chunk probability rows, starting at chunk `start_chunk`."""

    start_chunk: int
    probs: np.ndarray  # shape (n, 5), columns ordered as CLASSES

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 2 or self.probs.shape[1] != len(CLASSES):
            raise InputValidationError("likelihood rows must have five columns")
        validate_probability_rows(self.probs)

    @property
    def chunks(self) -> np.ndarray:
        return np.arange(self.start_chunk, self.start_chunk + self.probs.shape[0])

    def has(self, chunk: int) -> bool:
        return self.start_chunk <= chunk < self.start_chunk + self.probs.shape[0]

    def row(self, chunk: int) -> np.ndarray:
        if not self.has(chunk):
            raise InputValidationError(f"no likelihood row for chunk {chunk}")
        return self.probs[chunk - self.start_chunk]


def validate_probability_rows(probs: np.ndarray) -> None:
    if np.any(~np.isfinite(probs)):
        raise InputValidationError("likelihoods must be finite")
    if np.any(probs < -1e-9) or np.any(probs > 1 + 1e-9):
        raise InputValidationError("likelihoods must lie in [0, 1]")
    sums = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_SUM_TOL)
    if bad.size:
        raise InputValidationError(
            f"probability rows must sum to 1 +/- {PROB_SUM_TOL}; first bad row {int(bad[0])}"
        )


def _validate_vector(p: Sequence[float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (len(CLASSES),):
        raise InputValidationError(f"expected a 5-way probability vector, got shape {p.shape}")
    validate_probability_rows(p[None, :])
    return p


def judge_label_a(p: Sequence[float], t1: float = DEFAULT_T1) -> str:
    """J1 (metrics a and d): T iff p_T - p_C > t1."""
    p = _validate_vector(p)
    return "T" if p[T] - p[C] > t1 else "C"


def judge_label_b(p: Sequence[float], t2: float = DEFAULT_T2) -> str:
    """J2 (metric b): BC iff p_BC > t2."""
    p = _validate_vector(p)
    return "BC" if p[BC] > t2 else NOT_BC


def judge_label_c(p: Sequence[float], t3: float = DEFAULT_T3) -> str:
    """J3 (metric c): I iff p_I - p_C > t3."""
    p = _validate_vector(p)
    return "I" if p[I] - p[C] > t3 else "C"


def judge_label_e(p: Sequence[float], t4: float = DEFAULT_T4) -> str:
    """J4 (metric e): T iff p_T - p_C > t4."""
    p = _validate_vector(p)
    return "T" if p[T] - p[C] > t4 else "C"


def judge_label(metric_id: str, p: Sequence[float], threshold: float) -> str:
    if metric_id in ("a", "d"):
        return judge_label_a(p, threshold)
    if metric_id == "b":
        return judge_label_b(p, threshold)
    if metric_id == "c":
        return judge_label_c(p, threshold)
    if metric_id == "e":
        return judge_label_e(p, threshold)
    raise ConfigurationError(f"unknown metric {metric_id!r}")


def _require_rows(instances: Sequence[DecisionInstance], stream: LikelihoodStream) -> None:
    missing = sorted({inst.chunk for inst in instances if not stream.has(inst.chunk)})
    if missing:
        raise InputValidationError(
            f"likelihood rows missing for decision chunks: {missing[:20]}"
            + (" ..." if len(missing) > 20 else "")
        )


def _decision_values(
    instances: Sequence[DecisionInstance], stream: LikelihoodStream, metric_id: str
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-instance judge statistic and positive/negative flag.

    The judge label is positive iff the statistic strictly exceeds the
    metric's threshold: p_BC for metric b, p_T - p_C for a/d/e, p_I - p_C
    for c. Identical to the judge_label_* functions, in vector form.
    """
    _require_rows(instances, stream)
    rows = np.array([stream.row(inst.chunk) for inst in instances]).reshape(-1, len(CLASSES))
    if metric_id == "b":
        values = rows[:, BC]
    elif metric_id == "c":
        values = rows[:, I] - rows[:, C]
    else:
        values = rows[:, T] - rows[:, C]
    positive_value = METRIC_DECISIONS[metric_id][0]
    is_positive = np.array([inst.actual == positive_value for inst in instances], dtype=bool)
    return values, is_positive


def binomial_ci_halfwidth(indicator: np.ndarray) -> float:
    """1.96 * sample std / sqrt(n) of a 0/1 agreement indicator."""
    n = indicator.size
    if n < 2:
        return 0.0
    return float(1.96 * np.std(indicator, ddof=1) / np.sqrt(n))


def _branch_row(indicator: np.ndarray) -> Dict[str, object]:
    n = int(indicator.size)
    if n == 0:
        return {"n": 0, "agreement": None, "ci95": None}
    agreement = float(indicator.mean())
    half = binomial_ci_halfwidth(indicator)
    return {"n": n, "agreement": agreement, "ci95": [agreement - half, agreement + half]}


def metric_agreement(
    instances: Sequence[DecisionInstance],
    stream: LikelihoodStream,
    threshold: float,
    metric_id: str,
) -> Dict[str, object]:
    """Agreement of judge labels with actual decisions, split by decision branch."""
    values, is_positive = _decision_values(instances, stream, metric_id)
    judged_positive = values > threshold
    pos_name, neg_name = BRANCH_NAMES[metric_id]
    n_total = len(instances)
    n_positive = int(is_positive.sum())
    return {
        "threshold": float(threshold),
        "n_instances": n_total,
        "n_positive": n_positive,
        "decision_share_pct": (100.0 * n_positive / n_total) if n_total else None,
        "branches": {
            pos_name: _branch_row(judged_positive[is_positive].astype(float)),
            neg_name: _branch_row((~judged_positive[~is_positive]).astype(float)),
        },
    }


def threshold_grid(metric_id: str) -> np.ndarray:
    """Tuning grid: step 0.01 over [-0.5, 0.5] (difference) or [0, 1] (probability)."""
    lo, hi = PROBABILITY_GRID if metric_id == "b" else DIFFERENCE_GRID
    steps = int(round((hi - lo) / 0.01))
    return np.round(lo + 0.01 * np.arange(steps + 1), 10)


def _objective_from_values(
    values: np.ndarray, is_positive: np.ndarray, threshold: float
) -> float:
    judged = values > threshold
    parts = []
    if is_positive.any():
        parts.append(judged[is_positive].mean())
    if (~is_positive).any():
        parts.append((~judged[~is_positive]).mean())
    if not parts:
        raise InputValidationError("objective undefined: no instances on either branch")
    return float(np.mean(parts))


def tuning_objective(
    instances: Sequence[DecisionInstance],
    stream: LikelihoodStream,
    metric_id: str,
    threshold: float,
) -> float:
    """Unweighted mean of the defined branch agreements."""
    values, is_positive = _decision_values(instances, stream, metric_id)
    return _objective_from_values(values, is_positive, threshold)


def agreement_curve(
    instances: Sequence[DecisionInstance],
    stream: LikelihoodStream,
    metric_id: str,
    grid: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Objective value at every grid point, for tuning and sensitivity analysis."""
    if grid is None:
        grid = threshold_grid(metric_id)
    values, is_positive = _decision_values(instances, stream, metric_id)
    curve = np.array(
        [_objective_from_values(values, is_positive, theta) for theta in grid]
    )
    return grid, curve


def tune_thresholds(
    instances_by_metric: Dict[str, Sequence[DecisionInstance]],
    stream: LikelihoodStream,
    defaults: Optional[Thresholds] = None,
) -> Thresholds:
    """Exhaustive grid search maximising branch-mean agreement per threshold.

    Metrics a and d share J1, so t1 is tuned on their pooled instances. Ties
    break toward the smallest threshold. Metrics without instances keep the
    default with a warning.
    """
    defaults = defaults or Thresholds()
    pools = {
        "t1": (
            list(instances_by_metric.get("a", ())) + list(instances_by_metric.get("d", ())),
            "a",
        ),
        "t2": (list(instances_by_metric.get("b", ())), "b"),
        "t3": (list(instances_by_metric.get("c", ())), "c"),
        "t4": (list(instances_by_metric.get("e", ())), "e"),
    }
    tuned: Dict[str, float] = {}
    for name, (pool, metric_id) in pools.items():
        if not pool:
            warnings.warn(
                f"no validation instances for {name}; keeping default "
                f"{getattr(defaults, name)}",
                stacklevel=2,
            )
            tuned[name] = getattr(defaults, name)
            continue
        grid, values = agreement_curve(pool, stream, metric_id)
        tuned[name] = float(grid[int(np.argmax(values))])  # argmax takes the first max
    return replace(defaults, **tuned)


def sensitivity_me(agreement_values: Sequence[float]) -> float:
    """Margin of error 1.96 * sigma / sqrt(n) over an agreement-vs-threshold curve."""
    values = np.asarray(agreement_values, dtype=float)
    if values.size < 2:
        raise InputValidationError("sensitivity needs at least two grid points")
    return float(1.96 * np.std(values, ddof=1) / np.sqrt(values.size))


def single_label(
    stream: LikelihoodStream, operating_points: Optional[Dict[str, float]] = None
) -> np.ndarray:
    """Generate one label code per stream row via per-class operating points.

    Classes whose probability strictly exceeds their operating point compete;
    the largest probability-to-point ratio wins (ties: class order NA, BC, I,
    T, C). If no class clears its point the chunk falls back to C.
    """
    points = dict(DEFAULT_OPERATING_POINTS if operating_points is None else operating_points)
    point_vec = np.array([points[cls] for cls in CLASSES], dtype=float)
    probs = stream.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(point_vec > 0, probs / point_vec, np.where(probs > 0, np.inf, 0.0))
    cleared = probs > point_vec
    ratios = np.where(cleared, ratios, -np.inf)
    winners = np.argmax(ratios, axis=1).astype(np.int8)  # first max wins ties
    winners[~cleared.any(axis=1)] = C
    return winners


def confusion_matrix(
    labels_dialogue: np.ndarray,
    labels_generated: np.ndarray,
    ownership: np.ndarray,
    ai_speaker: int,
    start_chunk: int = 0,
) -> Tuple[np.ndarray, int]:
    """5x5 percentage matrix, rows = generated labels, columns = dialogue labels.

    Only decision chunks attributed to the AI are scored: chunks i with
    owner(i-1) equal to the human side. `start_chunk` is the grid index of
    the first entry of labels_generated (streams may omit chunk 0).
    """
    labels_dialogue = np.asarray(labels_dialogue)
    labels_generated = np.asarray(labels_generated)
    ownership = np.asarray(ownership)
    human = other_speaker(ai_speaker)

    matrix = np.zeros((len(CLASSES), len(CLASSES)), dtype=float)
    n_scored = 0
    for offset, generated in enumerate(labels_generated):
        i = start_chunk + offset
        if i < 1 or i >= labels_dialogue.size:
            continue
        if ownership[i - 1] != human:
            continue
        matrix[int(generated), int(labels_dialogue[i])] += 1
        n_scored += 1
    if n_scored == 0:
        raise InputValidationError("no chunks attributed to the AI side to score")
    return matrix * (100.0 / n_scored), n_scored


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> Optional[float]:
    """Probability that a random positive outranks a random negative (ties count 1/2).

    Returns None when only one class is present (undefined).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputValidationError("scores and labels must be 1-d and the same length")
    if scores.size == 0:
        raise InputValidationError("roc_auc needs at least one sample")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=float)
    sorted_scores = scores[order]
    group_starts = np.concatenate(
        ([0], np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1, [scores.size])
    )
    for lo, hi in zip(group_starts[:-1], group_starts[1:]):
        ranks[order[lo:hi]] = 0.5 * (lo + hi - 1) + 1.0  # 1-based midrank
    rank_sum = ranks[labels].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def per_class_roc_auc(
    label_codes: np.ndarray, stream: LikelihoodStream, start_chunk: Optional[int] = None
) -> Dict[str, Optional[float]]:
    """One-vs-rest ROC-AUC per class, scored where stream rows exist."""
    label_codes = np.asarray(label_codes)
    start = stream.start_chunk if start_chunk is None else start_chunk
    end = min(label_codes.size, start + stream.probs.shape[0])
    if end <= start:
        raise InputValidationError("no overlap between labels and stream rows")
    truth = label_codes[start:end]
    probs = stream.probs[: end - start]

    out: Dict[str, Optional[float]] = {}
    defined: List[float] = []
    for code, cls in enumerate(CLASSES):
        auc = roc_auc(probs[:, code], truth == code)
        out[cls] = auc
        if auc is not None:
            defined.append(auc)
    out["overall"] = float(np.mean(defined)) if defined else None
    return out
