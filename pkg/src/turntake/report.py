"""Assemble and merge machine-readable evaluation reports.

The report is a plain JSON document with fixed top-level keys
{corpus_stats, metrics, confusion, roc_auc, thresholds, counts}; the schema
ships with the package (data/report.schema.json). Reports for different
conversations can be merged by count-weighted aggregation.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import InputValidationError
from .judge import (
    CLASSES,
    LikelihoodStream,
    Thresholds,
    agreement_curve,
    confusion_matrix,
    metric_agreement,
    per_class_roc_auc,
    sensitivity_me,
    single_label,
)
from .labeler import METRICS, TurnLabelSequence, extract_all_instances
from .stats import CorpusStats

SCHEMA_VERSION = 1


def thresholds_payload(thresholds: Thresholds) -> Dict[str, object]:
    return {
        "t1": thresholds.t1,
        "t2": thresholds.t2,
        "t3": thresholds.t3,
        "t4": thresholds.t4,
        "operating_points": dict(thresholds.operating_points),
    }


def corpus_stats_payload(stats: CorpusStats) -> Dict[str, object]:
    return {
        "total_ms": stats.total_ms,
        "event_rates_per_min": stats.event_rates_per_min,
        "duration_shares_pct": stats.duration_shares_pct,
        "speaking_rate_wpm": {str(k): v for k, v in stats.speaking_rate_wpm.items()},
        "backchannel_rate_wpm": {str(k): v for k, v in stats.backchannel_rate_wpm.items()},
    }


def build_report(
    label_seq: TurnLabelSequence,
    stream: LikelihoodStream,
    thresholds: Thresholds,
    ai_speaker: int,
    corpus_stats: Optional[CorpusStats] = None,
    config: Optional[Dict[str, object]] = None,
    with_sensitivity: bool = True,
) -> Dict[str, object]:
    """Full evaluation of one conversation against one likelihood stream."""
    instances = extract_all_instances(label_seq, ai_speaker)

    metrics: Dict[str, object] = {}
    for metric_id in METRICS:
        threshold = thresholds.for_metric(metric_id)
        pool = instances[metric_id]
        if pool:
            row = metric_agreement(pool, stream, threshold, metric_id)
            if with_sensitivity:
                _, curve = agreement_curve(pool, stream, metric_id)
                row["margin_of_error"] = sensitivity_me(curve)
            else:
                row["margin_of_error"] = None
        else:
            row = {
                "threshold": float(threshold),
                "n_instances": 0,
                "n_positive": 0,
                "decision_share_pct": None,
                "margin_of_error": None,
                "branches": {},
            }
        metrics[metric_id] = row

    generated = single_label(stream, thresholds.operating_points)
    try:
        matrix, n_scored = confusion_matrix(
            label_seq.labels, generated, label_seq.owner, ai_speaker, stream.start_chunk
        )
        confusion = {
            "classes": list(CLASSES),
            "rows": "generated",
            "columns": "dialogue",
            "matrix_pct": matrix.tolist(),
            "n_scored": n_scored,
        }
    except InputValidationError:
        confusion = None

    roc = per_class_roc_auc(label_seq.labels, stream)

    counts = {
        "n_chunks": int(label_seq.labels.size),
        "n_stream_rows": int(stream.probs.shape[0]),
    }
    for metric_id in METRICS:
        counts[f"instances_{metric_id}"] = metrics[metric_id]["n_instances"]

    return {
        "schema_version": SCHEMA_VERSION,
        "config": config or {},
        "corpus_stats": corpus_stats_payload(corpus_stats) if corpus_stats else None,
        "metrics": metrics,
        "confusion": confusion,
        "roc_auc": roc,
        "thresholds": thresholds_payload(thresholds),
        "counts": counts,
    }


def _merge_branch(rows: List[Dict[str, object]]) -> Dict[str, object]:
    total = sum(row["n"] for row in rows)
    if total == 0:
        return {"n": 0, "agreement": None, "ci95": None}
    agreement = sum(row["n"] * (row["agreement"] or 0.0) for row in rows) / total
    # 0/1 indicators: sample variance is n*a*(1-a)/(n-1), recoverable from (a, n)
    if total >= 2:
        variance = total * agreement * (1.0 - agreement) / (total - 1)
        half = 1.96 * float(np.sqrt(variance)) / float(np.sqrt(total))
    else:
        half = 0.0
    return {"n": total, "agreement": agreement, "ci95": [agreement - half, agreement + half]}


def merge_reports(reports: Sequence[Dict[str, object]]) -> Dict[str, object]:
    """Count-weighted, order-independent merge of per-conversation reports."""
    if not reports:
        raise InputValidationError("nothing to merge")
    if len(reports) == 1:
        return dict(reports[0])

    merged_metrics: Dict[str, object] = {}
    for metric_id in METRICS:
        rows = [report["metrics"][metric_id] for report in reports]
        branch_names: List[str] = []
        for row in rows:
            for name in row["branches"]:
                if name not in branch_names:
                    branch_names.append(name)
        branches = {
            name: _merge_branch([row["branches"][name] for row in rows if name in row["branches"]])
            for name in branch_names
        }
        n_instances = sum(row["n_instances"] for row in rows)
        n_positive = sum(row["n_positive"] for row in rows)
        merged_metrics[metric_id] = {
            "threshold": rows[0]["threshold"],
            "n_instances": n_instances,
            "n_positive": n_positive,
            "decision_share_pct": (100.0 * n_positive / n_instances) if n_instances else None,
            "margin_of_error": None,  # threshold sensitivity is not mergeable from summaries
            "branches": branches,
        }

    stats_rows = [r["corpus_stats"] for r in reports if r.get("corpus_stats")]
    merged_stats = _merge_corpus_stats(stats_rows) if stats_rows else None

    confusion_rows = [r["confusion"] for r in reports if r.get("confusion")]
    merged_confusion = _merge_confusion(confusion_rows) if confusion_rows else None

    counts: Dict[str, float] = {}
    for report in reports:
        for key, value in report["counts"].items():
            counts[key] = counts.get(key, 0) + value

    return {
        "schema_version": SCHEMA_VERSION,
        "config": {"merged_from": len(reports)},
        "corpus_stats": merged_stats,
        "metrics": merged_metrics,
        "confusion": merged_confusion,
        "roc_auc": None,  # needs raw scores; per-conversation values stay in the parts
        "thresholds": reports[0]["thresholds"],
        "counts": counts,
    }


def _merge_corpus_stats(rows: List[Dict[str, object]]) -> Dict[str, object]:
    total_ms = sum(row["total_ms"] for row in rows)
    merged: Dict[str, object] = {"total_ms": total_ms}
    for section in (
        "event_rates_per_min",
        "duration_shares_pct",
        "speaking_rate_wpm",
        "backchannel_rate_wpm",
    ):
        keys = {key for row in rows for key in row.get(section, {})}
        merged[section] = {
            key: sum(row[section].get(key, 0.0) * row["total_ms"] for row in rows) / total_ms
            for key in sorted(keys)
        }
    return merged


def _merge_confusion(rows: List[Dict[str, object]]) -> Dict[str, object]:
    total = sum(row["n_scored"] for row in rows)
    matrix = np.zeros((len(CLASSES), len(CLASSES)))
    for row in rows:
        matrix += np.asarray(row["matrix_pct"]) * row["n_scored"]
    matrix /= total
    return {
        "classes": list(CLASSES),
        "rows": "generated",
        "columns": "dialogue",
        "matrix_pct": matrix.tolist(),
        "n_scored": total,
    }
