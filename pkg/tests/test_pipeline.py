"""Integration tests for stage orchestration and the command-line surface.

Stages run against the shared 14-clip session corpus; the CLI is driven
through main(argv) and checked for artifacts and exit codes (0 success,
1 stage failure, 2 config/usage error).
"""

import json
import shutil
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from touchmap import pipeline
from touchmap.audio_io import read_wav
from touchmap.cli import main
from touchmap.config import ConfigError, load_config
from touchmap.io_formats import (
    read_coords_csv,
    read_embeddings_csv,
    read_events,
    read_history_csv,
    read_manifest,
)
from touchmap.pipeline import (
    PipelineError,
    run_eval,
    run_features,
    run_plot,
    run_reduce,
    run_train_eval,
)
from touchmap.regressor import load_model


def svg_point_count(svg_text: str) -> int:
    root = ET.fromstring(svg_text)  # also proves well-formedness
    return sum(
        1 for el in root.iter() if el.tag.endswith("circle") and el.get("r") == "3.0"
    )


def svg_has_error_square(svg_text: str) -> bool:
    root = ET.fromstring(svg_text)
    return any(
        el.tag.endswith("rect") and el.get("stroke-dasharray") for el in root.iter()
    )


@pytest.fixture(scope="module")
def reduced(small_corpus, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("reduce")
    cfg = load_config(overrides=["manifold.n_neighbors=5"])
    pipeline.run_reduce(
        small_corpus / "embeddings.csv",
        cfg,
        out,
        manifest_path=small_corpus / "manifest.jsonl",
    )
    return out


@pytest.fixture(scope="module")
def trained(small_corpus, small_detection, reduced, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("train")
    cfg = load_config(overrides=["regressor.epochs=3", "regressor.batch=4"])
    pipeline.run_train_eval(
        small_detection / "segments",
        reduced / "coords.csv",
        small_corpus / "manifest.jsonl",
        cfg,
        out,
    )
    return out


class TestRunFeatures:
    def test_writes_one_csv_per_clip_with_full_tracks(self, small_corpus, tmp_path):
        cfg = load_config()
        summary = run_features(small_corpus / "audio", cfg, tmp_path)
        assert summary["clips"] == 14 and summary["failures"] == []
        files = sorted(tmp_path.glob("*.features.csv"))
        assert len(files) == 14
        lines = files[0].read_text().splitlines()
        assert lines[0] == "frame,time_s,energy,flatness,onset,centroid,zcr"
        from touchmap.dsp import compute_features

        clip = read_wav(small_corpus / "audio" / "clip_0000.wav")
        spec, _ = compute_features(clip)
        assert len(lines) - 1 == spec.n_frames
        first = lines[1].split(",")
        assert int(first[0]) == 0
        assert [float(v) >= 0 for v in first[1:]]

    def test_bad_clip_recorded_but_rest_processed(self, small_corpus, tmp_path):
        audio = tmp_path / "audio"
        audio.mkdir()
        for src in sorted((small_corpus / "audio").glob("*.wav"))[:2]:
            shutil.copy(src, audio / src.name)
        (audio / "broken.wav").write_text("this is not audio")
        summary = run_features(audio, load_config(), tmp_path / "out")
        assert summary["clips"] == 2
        assert len(summary["failures"]) == 1
        assert "broken.wav" in summary["failures"][0]["file"]

    def test_all_clips_failing_raises(self, tmp_path):
        audio = tmp_path / "audio"
        audio.mkdir()
        (audio / "only.wav").write_text("nope")
        with pytest.raises(PipelineError, match="all 1 clips failed"):
            run_features(audio, load_config(), tmp_path / "out")

    def test_missing_directory_raises(self, tmp_path):
        with pytest.raises(PipelineError, match="not a directory"):
            run_features(tmp_path / "ghost", load_config(), tmp_path / "out")


class TestRunDetect:
    def test_artifacts_join_up(self, small_corpus, small_detection):
        records = read_events(small_detection / "events.jsonl")
        segments = sorted((small_detection / "segments").glob("*.wav"))
        assert len(records) == len(segments) > 0
        clip_ids = {p.stem for p in (small_corpus / "audio").glob("*.wav")}
        for seg in segments:
            clip_id, event_part = seg.stem.rsplit("__", 1)
            assert clip_id in clip_ids
            assert event_part.startswith("e") and event_part[1:].isdigit()
        # every segment is exactly the configured cut length
        cfg = load_config()
        want = cfg.detector.segment_samples(cfg.dsp.sample_rate)
        for seg in segments[:5]:
            assert read_wav(seg).samples.shape == (want,)

    def test_parallel_jobs_produce_identical_artifacts(
        self, small_corpus, small_detection, tmp_path
    ):
        out = tmp_path / "jobs4"
        pipeline.run_detect(small_corpus / "audio", load_config(), out, n_jobs=4)
        assert (out / "events.jsonl").read_bytes() == (
            small_detection / "events.jsonl"
        ).read_bytes()
        a = sorted(p.name for p in (out / "segments").glob("*.wav"))
        b = sorted(p.name for p in (small_detection / "segments").glob("*.wav"))
        assert a == b
        for name in a[:5]:
            assert (out / "segments" / name).read_bytes() == (
                small_detection / "segments" / name
            ).read_bytes()


class TestRunReduce:
    def test_coords_and_scatter_written(self, small_corpus, reduced):
        emb = read_embeddings_csv(small_corpus / "embeddings.csv")
        coords = read_coords_csv(reduced / "coords.csv")
        assert coords.ids == emb.ids
        assert coords.coords.shape == (14, 2)
        assert np.all(np.isfinite(coords.coords))
        svg = (reduced / "scatter.svg").read_text()
        assert svg_point_count(svg) == 14

    def test_too_few_rows_is_config_error(self, small_corpus, tmp_path):
        with pytest.raises(ConfigError, match="n_neighbors"):
            run_reduce(small_corpus / "embeddings.csv", load_config(), tmp_path)


class TestRunTrainEval:
    def test_report_and_artifacts(self, small_corpus, small_detection, reduced, trained):
        report = json.loads((trained / "report.json").read_text())
        n_clips = report["train_clips"] + report["holdout_clips"]
        assert report["holdout_clips"] == round(0.2 * n_clips)
        assert report["train_pairs"] >= 10
        assert report["epochs_run"] >= 1
        assert report["join_errors"] == []
        assert report["coordinate_span"] > 0
        assert report["mean_holdout_error"] >= 0
        assert report["holdout_error_fraction_of_span"] == pytest.approx(
            report["mean_holdout_error"] / report["coordinate_span"]
        )
        assert 0 <= report["nearest_cluster_accuracy"] <= 1
        model = load_model(trained / "model.ckpt")
        assert model.config.epochs == 3
        history = read_history_csv(trained / "history.csv")
        assert len(history) == report["epochs_run"]
        assert all(h.holdout_metric is not None for h in history)

    def test_holdout_frac_validation(self, small_corpus, small_detection, tmp_path):
        with pytest.raises(ValueError, match="holdout_frac"):
            run_train_eval(
                small_detection / "segments",
                small_corpus / "embeddings.csv",
                small_corpus / "manifest.jsonl",
                load_config(),
                tmp_path,
                holdout_frac=1.0,
            )

    def test_too_few_training_pairs_raises(
        self, small_corpus, small_detection, reduced, tmp_path
    ):
        cfg = load_config(overrides=["regressor.epochs=1"])
        with pytest.raises(PipelineError, match="training pairs"):
            run_train_eval(
                small_detection / "segments",
                reduced / "coords.csv",
                small_corpus / "manifest.jsonl",
                cfg,
                tmp_path,
                holdout_frac=0.95,
            )


class TestRunEval:
    def test_checkpoint_evaluates_all_segments(
        self, small_corpus, small_detection, reduced, trained, tmp_path
    ):
        summary = run_eval(
            trained / "model.ckpt",
            small_detection / "segments",
            reduced / "coords.csv",
            small_corpus / "manifest.jsonl",
            load_config(),
            tmp_path,
        )
        n_segments = len(list((small_detection / "segments").glob("*.wav")))
        assert summary["pairs"] == n_segments
        assert len(summary["per_item"]) == n_segments
        assert summary["mean_error"] == pytest.approx(
            np.mean([item["error"] for item in summary["per_item"]])
        )
        assert (tmp_path / "report.json").exists()

    def test_no_pairs_raises(self, trained, reduced, small_corpus, tmp_path):
        empty = tmp_path / "segments"
        empty.mkdir()
        with pytest.raises(PipelineError, match="no evaluable pairs"):
            run_eval(
                trained / "model.ckpt",
                empty,
                reduced / "coords.csv",
                small_corpus / "manifest.jsonl",
                load_config(),
                tmp_path,
            )


class TestRunPlot:
    def test_plain_scatter(self, reduced, tmp_path):
        out = tmp_path / "plain.svg"
        summary = run_plot(reduced / "coords.csv", out)
        assert summary["points"] == 14
        svg = out.read_text()
        assert svg_point_count(svg) == 14
        assert not svg_has_error_square(svg)

    def test_report_draws_error_square(self, reduced, trained, tmp_path):
        out = tmp_path / "sq.svg"
        run_plot(reduced / "coords.csv", out, report_path=trained / "report.json")
        assert svg_has_error_square(out.read_text())

    def test_report_without_error_fields_rejected(self, reduced, tmp_path):
        bad = tmp_path / "report.json"
        bad.write_text(json.dumps({"pairs": 3}))
        with pytest.raises(PipelineError, match="report lacks"):
            run_plot(reduced / "coords.csv", tmp_path / "x.svg", report_path=bad)


class TestCli:
    def test_synth_from_spec_file(self, small_spec, tmp_path, capsys):
        spec_dict = small_spec.to_dict()
        spec_dict["n_clips"] = 2
        spec_file = tmp_path / "spec.json"
        spec_file.write_text(json.dumps(spec_dict))
        out = tmp_path / "corpus"
        rc = main(["synth", "--spec", str(spec_file), "--out", str(out)])
        assert rc == 0
        assert len(list((out / "audio").glob("*.wav"))) == 2
        assert "clips: 2" in capsys.readouterr().out

    def test_full_chain_on_session_corpus(
        self, small_corpus, tmp_path, capsys
    ):
        work = tmp_path
        assert (
            main(["detect", "--audio", str(small_corpus / "audio"), "--out", str(work)])
            == 0
        )
        assert (work / "events.jsonl").exists()
        assert (
            main(
                [
                    "reduce",
                    "--embeddings", str(small_corpus / "embeddings.csv"),
                    "--manifest", str(small_corpus / "manifest.jsonl"),
                    "--set", "manifold.n_neighbors=5",
                    "--out", str(work),
                ]
            )
            == 0
        )
        assert (work / "coords.csv").exists() and (work / "scatter.svg").exists()
        assert (
            main(
                [
                    "train",
                    "--segments", str(work / "segments"),
                    "--coords", str(work / "coords.csv"),
                    "--manifest", str(small_corpus / "manifest.jsonl"),
                    "--set", "regressor.epochs=3",
                    "--set", "regressor.batch=4",
                    "--out", str(work),
                ]
            )
            == 0
        )
        assert (work / "model.ckpt").exists() and (work / "history.csv").exists()
        assert (
            main(
                [
                    "eval",
                    "--checkpoint", str(work / "model.ckpt"),
                    "--segments", str(work / "segments"),
                    "--coords", str(work / "coords.csv"),
                    "--manifest", str(small_corpus / "manifest.jsonl"),
                    "--out", str(work / "eval"),
                ]
            )
            == 0
        )
        assert (work / "eval" / "report.json").exists()
        assert (
            main(
                [
                    "plot",
                    "--coords", str(work / "coords.csv"),
                    "--manifest", str(small_corpus / "manifest.jsonl"),
                    "--report", str(work / "eval" / "report.json"),
                    "--out", str(work / "final.svg"),
                ]
            )
            == 0
        )
        svg = (work / "final.svg").read_text()
        assert svg_point_count(svg) == 14
        assert svg_has_error_square(svg)
        out_text = capsys.readouterr().out
        assert "mean_error" in out_text

    def test_unknown_config_key_exits_2(self, small_corpus, tmp_path, capsys):
        rc = main(
            [
                "detect",
                "--audio", str(small_corpus / "audio"),
                "--set", "detector.bogus_knob=1",
                "--out", str(tmp_path),
            ]
        )
        assert rc == 2
        assert "bogus_knob" in capsys.readouterr().err

    def test_too_few_rows_exits_2(self, small_corpus, tmp_path, capsys):
        rc = main(
            [
                "reduce",
                "--embeddings", str(small_corpus / "embeddings.csv"),
                "--out", str(tmp_path),
            ]
        )
        assert rc == 2
        assert "n_neighbors" in capsys.readouterr().err

    def test_missing_audio_dir_exits_1(self, tmp_path, capsys):
        rc = main(["detect", "--audio", str(tmp_path / "ghost"), "--out", str(tmp_path)])
        assert rc == 1
        assert "not a directory" in capsys.readouterr().err

    def test_missing_out_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["plot", "--coords", "x.csv"])
        assert exc.value.code == 2

    def test_empty_audio_dir_warns_but_succeeds(self, tmp_path, capsys):
        audio = tmp_path / "audio"
        audio.mkdir()
        rc = main(["detect", "--audio", str(audio), "--out", str(tmp_path)])
        assert rc == 0
        assert "no WAV files" in capsys.readouterr().err

    def test_print_config_dumps_effective_json(self, reduced, tmp_path, capsys):
        rc = main(
            [
                "plot",
                "--coords", str(reduced / "coords.csv"),
                "--print-config",
                "--set", "manifold.n_neighbors=7",
                "--out", str(tmp_path / "p.svg"),
            ]
        )
        assert rc == 0
        text = capsys.readouterr().out
        doc = json.loads(text[: text.index("\n}") + 2])
        assert doc["manifold"]["n_neighbors"] == 7
