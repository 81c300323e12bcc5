import json
import subprocess
import sys

import numpy as np
import pytest

from turntake import (
    BaselineModel,
    InputValidationError,
    LikelihoodStream,
    SynthParams,
    Thresholds,
    TranscriptToken,
)
from turntake import io as tio
from turntake.baseline import N_FEATURES
from turntake.labeler import TurnLabelSequence


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "turntake", *[str(a) for a in args]],
        capture_output=True,
        text=True,
    )


class TestRoundTrips:
    def test_va_intervals(self, tmp_path):
        path = tmp_path / "va.csv"
        tio.write_va_intervals(path, [(1, 0, 1000), (2, 1500.5, 2000)])
        got = tio.read_va_intervals(path)
        assert got == [(1, 0.0, 1000.0), (2, 1500.5, 2000.0)]
        tio.write_va_intervals(path, got)
        first = path.read_bytes()
        tio.write_va_intervals(path, tio.read_va_intervals(path))
        assert path.read_bytes() == first

    def test_rttm_lines(self, tmp_path):
        path = tmp_path / "diar.rttm"
        path.write_text(
            "SPEAKER conv 1 0.00 1.50 <NA> <NA> alice <NA> <NA>\n"
            "SPEAKER conv 1 2.00 0.50 <NA> <NA> bob <NA> <NA>\n"
        )
        got = tio.read_va_intervals(path, rttm_speakers=("alice", "bob"))
        assert got == [(1, 0.0, 1500.0), (2, 2000.0, 2500.0)]

    def test_rttm_unknown_speaker_rejected(self, tmp_path):
        path = tmp_path / "diar.rttm"
        path.write_text("SPEAKER conv 1 0.0 1.0 <NA> <NA> mallory <NA> <NA>\n")
        with pytest.raises(InputValidationError):
            tio.read_va_intervals(path, rttm_speakers=("alice", "bob"))

    def test_transcript(self, tmp_path):
        path = tmp_path / "tr.csv"
        tokens = [TranscriptToken(1, "hello", 0, 300), TranscriptToken(2, "i", 400, 500)]
        tio.write_transcript(path, tokens)
        assert tio.read_transcript(path) == tokens

    def test_labels(self, tmp_path):
        path = tmp_path / "labels.csv"
        labels = TurnLabelSequence(
            labels=np.array([0, 4, 3, 2, 1], dtype=np.int8),
            owner=np.array([0, 1, 2, 2, 1], dtype=np.int8),
        )
        tio.write_labels(path, labels)
        got = tio.read_labels(path)
        assert np.array_equal(got.labels, labels.labels)
        assert np.array_equal(got.owner, labels.owner)

    def test_stream(self, tmp_path):
        path = tmp_path / "s.csv"
        rng = np.random.default_rng(1)
        probs = rng.dirichlet(np.ones(5), size=20)
        tio.write_stream(path, LikelihoodStream(1, probs))
        got = tio.read_stream(path)
        assert got.start_chunk == 1
        np.testing.assert_allclose(got.probs, probs, atol=1e-7)
        first = path.read_bytes()
        tio.write_stream(path, got)
        assert path.read_bytes() == first

    def test_stream_validation(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("chunk,p_na,p_bc,p_i,p_t,p_c\n0,0.5,0.5,0.5,0.5,0.5\n")
        with pytest.raises(InputValidationError):
            tio.read_stream(path)
        path.write_text("chunk,p_na,p_bc,p_i,p_t,p_c\n0,1,0,0,0,0\n5,1,0,0,0,0\n")
        with pytest.raises(InputValidationError, match="consecutive"):
            tio.read_stream(path)

    def test_thresholds(self, tmp_path):
        path = tmp_path / "t.json"
        thresholds = Thresholds(t1=0.05, t2=0.2, t3=-0.3, t4=0.0)
        tio.write_thresholds(path, thresholds)
        assert tio.read_thresholds(path) == thresholds

    def test_model(self, tmp_path):
        path = tmp_path / "m.json"
        rng = np.random.default_rng(3)
        model = BaselineModel(
            weights=rng.normal(size=(5, N_FEATURES)), bias=rng.normal(size=5), seed=7
        )
        tio.write_model(path, model)
        got = tio.read_model(path)
        np.testing.assert_array_equal(got.weights, model.weights)
        assert got.seed == 7

    def test_synth_params(self, tmp_path):
        path = tmp_path / "p.json"
        params = SynthParams(duration_ms=90_000, seed=5)
        tio.write_synth_params(path, params)
        assert tio.read_synth_params(path) == params

    def test_fillers(self, tmp_path):
        path = tmp_path / "f.txt"
        tio.write_fillers(path, ["Right", "i  see"])
        assert tio.read_fillers(path) == {"right", "i see"}


DURATION_MS = 120_000


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    params = SynthParams(
        duration_ms=DURATION_MS,
        ipu_ms={1: (3000.0, 400.0), 2: (2600.0, 350.0)},
        turn_ipus_mean=2.0,
        backchannel_rate_per_min=2.0,
        backchannel_phrases=("i see",),
        interruption_rate_per_min=1.0,
        seed=42,
    )
    tio.write_synth_params(root / "params.json", params)
    proc = run_cli(
        "generate", "--params", root / "params.json", "--out", root / "conv",
        "--ideal-stream", "0.9",
    )
    assert proc.returncode == 0, proc.stderr
    return root / "conv"


class TestCli:
    def test_generate_artifacts(self, corpus):
        for name in ("va.csv", "transcript.csv", "labels.csv", "timeline.json", "stream.csv"):
            assert (corpus / name).exists()

    def test_segment(self, corpus, tmp_path):
        out = tmp_path / "timeline.json"
        proc = run_cli("segment", "--va", corpus / "va.csv", "--out", out, "--total-ms", DURATION_MS)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        want = json.loads((corpus / "timeline.json").read_text())
        assert payload == want

    def test_label_matches_generated(self, corpus, tmp_path):
        out = tmp_path / "labels.csv"
        proc = run_cli(
            "label", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--out", out, "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.read_bytes() == (corpus / "labels.csv").read_bytes()

    def test_stats_on_empty_va(self, tmp_path):
        va = tmp_path / "va.csv"
        va.write_text("speaker,start_ms,end_ms\n")
        out = tmp_path / "stats.json"
        proc = run_cli("stats", "--va", va, "--out", out)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["total_ms"] == 0.0
        assert all(v == 0.0 for v in payload["event_rates_per_min"].values())

    def test_stats(self, corpus, tmp_path):
        out = tmp_path / "stats.json"
        proc = run_cli(
            "stats", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--out", out, "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["event_rates_per_min"]["ipu"] > 0
        assert sum(payload["duration_shares_pct"].values()) == pytest.approx(100.0)

    def test_unknown_command_exits_nonzero(self):
        proc = run_cli("frobnicate")
        assert proc.returncode == 2

    def test_missing_file_is_validation_error(self, tmp_path):
        proc = run_cli("segment", "--va", tmp_path / "nope.csv", "--out", tmp_path / "o")
        assert proc.returncode == 1
        assert "error" in proc.stderr

    def test_malformed_file_names_line(self, tmp_path):
        va = tmp_path / "bad.csv"
        va.write_text("speaker,start_ms,end_ms\n1,100\n")
        proc = run_cli("segment", "--va", va, "--out", tmp_path / "o.json")
        assert proc.returncode == 1
        assert "bad.csv:2" in proc.stderr

    def test_evaluate_report_validates_schema(self, corpus, tmp_path):
        jsonschema = pytest.importorskip("jsonschema")
        out = tmp_path / "report.json"
        proc = run_cli(
            "evaluate", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--stream", corpus / "stream.csv", "--ai-speaker", 2, "--out", out,
            "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(out.read_text())
        schema = json.loads(tio.packaged_schema_path().read_text())
        jsonschema.validate(report, schema)

    def test_evaluate_deterministic_bytes(self, corpus, tmp_path):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        for out in (out1, out2):
            proc = run_cli(
                "evaluate", "--va", corpus / "va.csv",
                "--transcript", corpus / "transcript.csv",
                "--stream", corpus / "stream.csv", "--ai-speaker", 2, "--out", out,
            )
            assert proc.returncode == 0, proc.stderr
        assert out1.read_bytes() == out2.read_bytes()

    def test_tune_then_judge_consistency(self, corpus, tmp_path):
        thresholds_path = tmp_path / "thresholds.json"
        proc = run_cli(
            "tune", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--stream", corpus / "stream.csv", "--ai-speaker", 2, "--out", thresholds_path,
            "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        report_path = tmp_path / "report.json"
        proc = run_cli(
            "judge", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--stream", corpus / "stream.csv", "--ai-speaker", 2,
            "--thresholds-file", thresholds_path, "--out", report_path,
            "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(report_path.read_text())
        thresholds = json.loads(thresholds_path.read_text())

        # re-scan: the tuned threshold's objective must be the grid maximum
        from turntake.judge import threshold_grid, tuning_objective
        from turntake.labeler import extract_all_instances

        stream = tio.read_stream(corpus / "stream.csv")
        labels = tio.read_labels(corpus / "labels.csv")
        instances = extract_all_instances(labels, ai_speaker=2)
        pool = instances["a"] + instances["d"]
        best = tuning_objective(pool, stream, "a", thresholds["t1"])
        for theta in threshold_grid("a"):
            assert best >= tuning_objective(pool, stream, "a", theta) - 1e-12

        branches = report["metrics"]["a"]["branches"]
        mean_branch = np.mean([b["agreement"] for b in branches.values()])
        assert mean_branch >= 0.99  # ideal stream agrees with the dialogue

    def test_train_and_predict(self, corpus, tmp_path):
        corpus_root = corpus.parent / "train_corpus"
        corpus_root.mkdir(exist_ok=True)
        (corpus_root / "conv0").mkdir(exist_ok=True)
        for name in ("va.csv", "transcript.csv"):
            (corpus_root / "conv0" / name).write_bytes((corpus / name).read_bytes())
        model_path = tmp_path / "model.json"
        proc = run_cli(
            "train-baseline", "--corpus", corpus_root, "--out", model_path,
            "--epochs", 20, "--seed", 1,
        )
        assert proc.returncode == 0, proc.stderr
        stream_path = tmp_path / "pred.csv"
        proc = run_cli(
            "predict", "--model", model_path, "--va", corpus / "va.csv",
            "--transcript", corpus / "transcript.csv", "--out", stream_path,
            "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        stream = tio.read_stream(stream_path)  # validates the wire format
        assert stream.start_chunk == 1

    def test_report_merge(self, corpus, tmp_path):
        r1 = tmp_path / "r1.json"
        proc = run_cli(
            "evaluate", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--stream", corpus / "stream.csv", "--ai-speaker", 2, "--out", r1,
            "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        merged = tmp_path / "merged.json"
        proc = run_cli("report", r1, r1, "--out", merged)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(merged.read_text())
        one = json.loads(r1.read_text())
        metric = payload["metrics"]["a"]
        assert metric["n_instances"] == 2 * one["metrics"]["a"]["n_instances"]
        for branch, row in metric["branches"].items():
            assert row["agreement"] == pytest.approx(
                one["metrics"]["a"]["branches"][branch]["agreement"]
            )


class TestNormalizedForms:
    def test_transcript_byte_stable(self, tmp_path):
        path = tmp_path / "t.csv"
        tio.write_transcript(path, [TranscriptToken(1, "hello", 0, 312.5)])
        first = path.read_bytes()
        tio.write_transcript(path, tio.read_transcript(path))
        assert path.read_bytes() == first

    def test_labels_byte_stable(self, tmp_path):
        path = tmp_path / "l.csv"
        labels = TurnLabelSequence(
            labels=np.array([0, 4, 3], dtype=np.int8), owner=np.array([0, 1, 1], dtype=np.int8)
        )
        tio.write_labels(path, labels)
        first = path.read_bytes()
        tio.write_labels(path, tio.read_labels(path))
        assert path.read_bytes() == first

    def test_thresholds_byte_stable(self, tmp_path):
        path = tmp_path / "th.json"
        tio.write_thresholds(path, Thresholds(t1=0.07))
        first = path.read_bytes()
        tio.write_thresholds(path, tio.read_thresholds(path))
        assert path.read_bytes() == first


class TestConfiguration:
    def test_filler_env_var_override(self, corpus, tmp_path, monkeypatch):
        # an empty filler list suppresses all backchannel labels
        fillers = tmp_path / "none.txt"
        fillers.write_text("zzz\n")
        out_default = tmp_path / "default.csv"
        out_env = tmp_path / "env.csv"
        proc = run_cli(
            "label", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--out", out_default, "--total-ms", DURATION_MS,
        )
        assert proc.returncode == 0, proc.stderr
        import os
        import subprocess

        env = dict(os.environ, TURNTAKE_FILLERS=str(fillers))
        proc = subprocess.run(
            [sys.executable, "-m", "turntake", "label",
             "--va", str(corpus / "va.csv"),
             "--transcript", str(corpus / "transcript.csv"),
             "--out", str(out_env), "--total-ms", str(DURATION_MS)],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0, proc.stderr
        assert b"BC" in out_default.read_bytes()
        assert b"BC" not in out_env.read_bytes()

    def test_config_file_sets_thresholds(self, corpus, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "ai_speaker": 2,
            "thresholds": {"t1": 0.2, "t2": 0.3, "t3": -0.2, "t4": 0.05},
            "operating_points": {"NA": 0.5, "BC": 0.5, "I": 0.5, "T": 0.5, "C": 0.5},
        }))
        out = tmp_path / "report.json"
        proc = run_cli(
            "judge", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--stream", corpus / "stream.csv", "--config", config,
            "--total-ms", DURATION_MS, "--out", out,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["thresholds"]["t1"] == 0.2
        assert payload["thresholds"]["operating_points"]["NA"] == 0.5

    def test_flag_overrides_config(self, corpus, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"thresholds": {"t1": 0.2}}))
        out = tmp_path / "report.json"
        proc = run_cli(
            "judge", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--stream", corpus / "stream.csv", "--config", config,
            "--thresholds", "0.11,0.2,-0.3,0.0",
            "--total-ms", DURATION_MS, "--out", out,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["thresholds"]["t1"] == 0.11


class TestMoreCliPaths:
    def test_segment_from_rttm(self, tmp_path):
        rttm = tmp_path / "conv.rttm"
        rttm.write_text(
            "SPEAKER conv 1 0.00 2.00 <NA> <NA> agent <NA> <NA>\n"
            "SPEAKER conv 1 2.50 1.50 <NA> <NA> caller <NA> <NA>\n"
        )
        out = tmp_path / "timeline.json"
        proc = run_cli(
            "segment", "--va", rttm, "--rttm-speakers", "agent,caller",
            "--total-ms", 4000, "--out", out,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["ipus"]["1"] == [[0, 49]]
        assert payload["ipus"]["2"] == [[62, 99]]
        assert payload["silence_runs"][0]["kind"] == "gap"

    def test_evaluate_with_model(self, corpus, tmp_path):
        corpus_root = tmp_path / "train_corpus"
        (corpus_root / "conv0").mkdir(parents=True)
        for name in ("va.csv", "transcript.csv"):
            (corpus_root / "conv0" / name).write_bytes((corpus / name).read_bytes())
        model_path = tmp_path / "model.json"
        proc = run_cli(
            "train-baseline", "--corpus", corpus_root, "--out", model_path,
            "--epochs", 10, "--seed", 0,
        )
        assert proc.returncode == 0, proc.stderr
        out = tmp_path / "report.json"
        proc = run_cli(
            "evaluate", "--va", corpus / "va.csv",
            "--transcript", corpus / "transcript.csv",
            "--model", model_path, "--ai-speaker", 2,
            "--total-ms", DURATION_MS, "--out", out,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["counts"]["n_stream_rows"] == payload["counts"]["n_chunks"] - 1

    def test_judge_without_stream_or_model_fails(self, corpus, tmp_path):
        proc = run_cli(
            "judge", "--va", corpus / "va.csv", "--transcript", corpus / "transcript.csv",
            "--total-ms", DURATION_MS, "--out", tmp_path / "r.json",
        )
        assert proc.returncode == 1
        assert "--stream" in proc.stderr
