import json
from pathlib import Path

import pytest

from app.corpus.manifest import load_manifest, write_manifest
from app.corpus.schemas import Corpus, CorpusSample, VisualContext
from app.db.registry import RunRegistry
from app.main import main
from app.models.run import RunStatus

from tests.conftest import TINY_MODEL, TINY_SYNTH

CLI_MODEL = {k: v for k, v in TINY_MODEL.items() if k not in ("feature_dim", "n_proposals", "visual_in_dim")}


def _write_config(path: Path, **sections) -> Path:
    path.write_text(json.dumps(sections), encoding="utf-8")
    return path


def _corpus_files(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in ("run.json", "runs.db")
    }


def _train_log(out: Path) -> list[str]:
    """train_log.jsonl lines without the timing field."""
    lines = []
    for line in (out / "train_log.jsonl").read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        record.pop("wall_clock_seconds")
        lines.append(json.dumps(record, sort_keys=True))
    return lines


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A synthetic corpus, its augmented dev split and a one-epoch MAOP model."""
    root = tmp_path_factory.mktemp("cli")
    config = _write_config(
        root / "config.json",
        synth=TINY_SYNTH,
        model=CLI_MODEL,
        train={"max_epochs": 1, "batch_size": 4},
    )
    assert main(["synth-data", "--config", str(config), "--seed", "0", "--out", str(root / "data")]) == 0
    assert main(["mask", "--corpus", str(root / "data" / "dev"), "--augment", "--out", str(root / "dev_aug")]) == 0
    assert main([
        "train", "--variant", "maop", "--train", str(root / "data" / "train"), "--dev", str(root / "data" / "dev"),
        "--config", str(config), "--out", str(root / "maop"),
    ]) == 0
    return root


class TestDataCommands:
    def test_synth_records_the_run(self, workspace):
        out = workspace / "data"
        recorded = json.loads((out / "run.json").read_text(encoding="utf-8"))
        assert recorded["command"] == "synth-data"
        assert recorded["synth"]["splits"] == TINY_SYNTH["splits"]
        runs = RunRegistry(out).runs()
        assert [(r.command, r.status, r.exit_code) for r in runs] == [("synth-data", RunStatus.COMPLETED, 0)]

    def test_augment_quadruples_the_split(self, workspace):
        assert len(load_manifest(workspace / "dev_aug")) == 4 * TINY_SYNTH["splits"]["dev"]
        assert (workspace / "dev_aug" / "masks.jsonl").is_file()

    def test_replay_reproduces_the_corpus(self, workspace, tmp_path):
        assert main(["replay", "--run", str(workspace / "data"), "--out", str(tmp_path / "again")]) == 0
        assert _corpus_files(tmp_path / "again") == _corpus_files(workspace / "data")
        assert json.loads((tmp_path / "again" / "run.json").read_text(encoding="utf-8"))["command"] == "synth-data"

    def test_replay_into_the_same_directory(self, workspace):
        assert main(["replay", "--run", str(workspace / "data"), "--out", str(workspace / "data")]) == 2

    def test_unknown_config_section(self, tmp_path):
        config = _write_config(tmp_path / "bad.json", optimizer={"lr": 1})
        assert main(["synth-data", "--config", str(config), "--out", str(tmp_path / "out")]) == 2
        assert not (tmp_path / "out").exists()


class TestTrainCommand:
    def test_writes_best_checkpoint_and_log(self, workspace):
        out = workspace / "maop"
        assert (out / "best" / "params.bin").is_file()
        assert len((out / "train_log.jsonl").read_text(encoding="utf-8").splitlines()) == 1
        assert json.loads((out / "params.json").read_text(encoding="utf-8"))["total"] > 0

    def test_replay_reproduces_training(self, workspace, tmp_path):
        assert main(["replay", "--run", str(workspace / "maop"), "--out", str(tmp_path / "again")]) == 0
        assert _train_log(tmp_path / "again") == _train_log(workspace / "maop")
        assert (tmp_path / "again" / "best" / "params.bin").read_bytes() == (workspace / "maop" / "best" / "params.bin").read_bytes()

    def test_maop_without_proposals(self, workspace, tmp_path):
        for split in ("train", "dev"):
            corpus = load_manifest(workspace / "data" / split)
            stripped = Corpus(
                [CorpusSample(s.utterance, VisualContext(s.visual.image_id, s.visual.global_feature)) for s in corpus],
                name=split,
            )
            write_manifest(stripped, tmp_path / split)
        code = main([
            "train", "--variant", "maop", "--train", str(tmp_path / "train"), "--dev", str(tmp_path / "dev"),
            "--out", str(tmp_path / "out"),
        ])
        assert code == 2
        [run] = RunRegistry(tmp_path / "out").runs()
        assert run.status is RunStatus.FAILED and run.exit_code == 2


class TestEvaluateCommand:
    def _evaluate(self, workspace, out, *extra):
        return main([
            "evaluate", "--checkpoint", str(workspace / "maop" / "best"), "--dataset", str(workspace / "dev_aug"),
            "--out", str(out), *extra,
        ])

    def test_wer_only(self, workspace, tmp_path):
        assert self._evaluate(workspace, tmp_path, "--metrics", "wer") == 0
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["metrics"] == ["wer"]
        assert report["rr"] is None and report["gr"] is None
        assert (tmp_path / "traces.jsonl").is_file()

    def test_replay_reproduces_the_evaluation(self, workspace, tmp_path):
        assert self._evaluate(workspace, tmp_path / "first", "--metrics", "wer,rr,gr,iou", "--recompute-threshold") == 0
        assert main(["replay", "--run", str(tmp_path / "first"), "--out", str(tmp_path / "again")]) == 0
        for name in ("report.json", "traces.jsonl"):
            assert (tmp_path / "again" / name).read_bytes() == (tmp_path / "first" / name).read_bytes(), name

    def test_grounding_without_threshold(self, workspace, tmp_path):
        assert self._evaluate(workspace, tmp_path, "--metrics", "rr,gr") == 2

    def test_threshold_from_an_earlier_run(self, workspace, tmp_path):
        assert self._evaluate(workspace, tmp_path / "dev", "--metrics", "wer,rr,gr", "--recompute-threshold") == 0
        first = json.loads((tmp_path / "dev" / "report.json").read_text(encoding="utf-8"))
        assert self._evaluate(
            workspace, tmp_path / "test", "--metrics", "rr,gr,iou", "--k", "1,3",
            "--gr-threshold-from", str(tmp_path / "dev"),
        ) == 0
        second = json.loads((tmp_path / "test" / "report.json").read_text(encoding="utf-8"))
        assert second["gr_threshold"] == pytest.approx(first["e_alpha_v"])
        assert [row["k"] for row in second["iou"]] == [1, 3]

    def test_unknown_metric(self, workspace, tmp_path):
        assert self._evaluate(workspace, tmp_path, "--metrics", "wer,bleu") == 2

    def test_image_swap_probe(self, workspace, tmp_path):
        image_id = load_manifest(workspace / "data" / "test").samples[0].visual.image_id
        code = main([
            "probe-swap", "--checkpoint", str(workspace / "maop" / "best"), "--dataset", str(workspace / "dev_aug"),
            "--image-id", image_id, "--image-source", str(workspace / "data" / "test"), "--out", str(tmp_path),
        ])
        assert code == 0
        assert {"baseline", "swapped", "substitute_image_id"} <= set(json.loads((tmp_path / "probe.json").read_text(encoding="utf-8")))

    def test_probe_with_unknown_image(self, workspace, tmp_path):
        code = main([
            "probe-swap", "--checkpoint", str(workspace / "maop" / "best"), "--dataset", str(workspace / "dev_aug"),
            "--image-id", "img-nowhere", "--out", str(tmp_path),
        ])
        assert code == 1


def test_param_count(tmp_path):
    config = _write_config(tmp_path / "config.json", model=TINY_MODEL)
    assert main(["param-count", "--config", str(config), "--vocab-size", "20", "--out", str(tmp_path / "out")]) == 0
    counts = json.loads((tmp_path / "out" / "params.json").read_text(encoding="utf-8"))
    assert counts["MAG"]["total"] == counts["MAOP"]["total"] > counts["UNIMODAL"]["total"]
