"""
End-to-end tests for the staged pipeline on tiny experiments
"""
import copy
import json
from unittest.mock import AsyncMock, MagicMock, patch

import pytest

from levy_extract.core.errors import ArtifactWriteError, MissingInputError, TrainingError
from levy_extract.models.flow import TrainConfig
from levy_extract.pipeline import stages
from levy_extract.exporters.json_file import JsonFileExporter
from levy_extract.pipeline.config import run_config_from_dict
from levy_extract.pipeline.stages import ExperimentPipeline, burst_train_seed, map_calls, train_directory
from levy_extract.pipeline.storage import read_manifest


def statuses(pipeline):
    return [(step["stage"], step["status"]) for step in pipeline.steps]


def with_changes(raw, **blocks):
    changed = copy.deepcopy(raw)
    for block, values in blocks.items():
        changed[block].update(values)
    return run_config_from_dict(changed)


@pytest.fixture
def ou_config(ou_raw):
    return run_config_from_dict(ou_raw)


class TestRunAll:
    """Test cases for a full run and its cache behaviour"""

    @pytest.mark.asyncio
    async def test_every_stage_writes_its_files(self, ou_config):
        pipeline = ExperimentPipeline(ou_config)
        report = await pipeline.run_all()
        root = ou_config.output_path()

        assert statuses(pipeline) == [("dataset", "complete"), ("models", "complete"),
                                      ("extraction", "complete"), ("report", "complete")]
        for name in ("dataset/meta.json", "dataset/burst_0002.csv", "models/burst_0000/model.pt",
                     "models/burst_0000/training_curve.csv", "extraction/result.json", "extraction/drift.csv",
                     "extraction/diffusion.csv", "report/report.json", "report/errors.csv", "report/fields.svg"):
            assert (root / name).is_file(), name
        assert not (root / "report" / "jump_fit.svg").exists()
        assert report.n_points == 3
        assert report.truth_known
        assert report.jump is None
        assert "dataset/meta.json" in report.artifacts

    @pytest.mark.asyncio
    async def test_rerun_uses_cache(self, ou_config):
        await ExperimentPipeline(ou_config).run_all()
        pipeline = ExperimentPipeline(ou_config)
        with patch.object(stages, "train_bursts", MagicMock(side_effect=AssertionError("retrained"))):
            await pipeline.run_all()

        assert statuses(pipeline) == [("dataset", "cached"), ("extraction", "cached"), ("report", "complete")]

    @pytest.mark.asyncio
    async def test_acceptance_change_only_rebuilds_report(self, ou_raw, ou_config):
        await ExperimentPipeline(ou_config).run_all()
        pipeline = ExperimentPipeline(with_changes(ou_raw, acceptance={"drift_rel_l2": 0.5}))
        report = await pipeline.run_all()

        assert statuses(pipeline)[-2:] == [("extraction", "cached"), ("report", "complete")]
        assert [c.criterion for c in report.acceptance] == ["b1 rel_l2"]

    @pytest.mark.asyncio
    async def test_extraction_change_reuses_checkpoints(self, ou_raw, ou_config):
        await ExperimentPipeline(ou_config).run_all()
        pipeline = ExperimentPipeline(with_changes(ou_raw, extraction={"ball_eps": 0.4}))
        with patch.object(stages, "train_burst_task", MagicMock(side_effect=AssertionError("retrained"))):
            result_report = await pipeline.run_all()

        assert statuses(pipeline) == [("dataset", "cached"), ("models", "complete"),
                                      ("extraction", "complete"), ("report", "complete")]
        assert result_report.n_points == 3

    @pytest.mark.asyncio
    async def test_corrupt_checkpoint_retrains_only_that_burst(self, ou_raw, ou_config):
        await ExperimentPipeline(ou_config).run_all()
        (ou_config.output_path() / "models" / "burst_0001" / "model.pt").write_bytes(b"garbage")
        pipeline = ExperimentPipeline(with_changes(ou_raw, extraction={"ball_eps": 0.4}))
        with patch.object(stages, "train_burst_task", wraps=stages.train_burst_task) as spy:
            await pipeline.run_all()

        assert spy.call_count == 1
        assert spy.call_args.args[3].endswith("burst_0001")

    @pytest.mark.asyncio
    async def test_force_stage_retrains_everything(self, ou_config):
        await ExperimentPipeline(ou_config).run_all()
        pipeline = ExperimentPipeline(ou_config, force_stage="models")
        with patch.object(stages, "train_burst_task", wraps=stages.train_burst_task) as spy:
            await pipeline.run_all()

        assert spy.call_count == 3
        assert statuses(pipeline)[0] == ("dataset", "cached")

    @pytest.mark.asyncio
    async def test_same_config_is_bit_identical(self, ou_raw, tmp_path):
        """Test that two fresh runs produce byte-identical extraction files"""
        roots = []
        for name in ("a", "b"):
            raw = copy.deepcopy(ou_raw)
            raw["output_dir"] = str(tmp_path / name)
            config = run_config_from_dict(raw)
            await ExperimentPipeline(config).run_all()
            roots.append(config.output_path())

        for name in ("dataset/burst_0001.csv", "extraction/result.json", "extraction/drift.csv",
                     "extraction/diffusion.csv"):
            assert (roots[0] / name).read_bytes() == (roots[1] / name).read_bytes(), name


class TestStageErrors:
    """Test cases for missing and stale stage inputs"""

    @pytest.mark.asyncio
    async def test_train_without_dataset(self, ou_config):
        with pytest.raises(MissingInputError, match="run `simulate` first"):
            await ExperimentPipeline(ou_config).run_train()

    @pytest.mark.asyncio
    async def test_extract_without_models(self, ou_config):
        pipeline = ExperimentPipeline(ou_config)
        await pipeline.run_simulate()
        with pytest.raises(MissingInputError, match="run `train` first"):
            await pipeline.run_extract()

    @pytest.mark.asyncio
    async def test_report_without_extraction(self, ou_config):
        with pytest.raises(MissingInputError, match="run `extract` first"):
            await ExperimentPipeline(ou_config).run_report()

    @pytest.mark.asyncio
    async def test_report_refuses_stale_extraction(self, ou_raw, ou_config):
        """Test that the report stage rejects an extraction made with other settings"""
        await ExperimentPipeline(ou_config).run_all()
        changed = ExperimentPipeline(with_changes(ou_raw, extraction={"ball_eps": 0.3}))
        report_file = ou_config.output_path() / "report" / "report.json"
        before = report_file.read_bytes()

        with pytest.raises(MissingInputError, match="stale"):
            await changed.run_report()
        assert report_file.read_bytes() == before

    @pytest.mark.asyncio
    async def test_report_refuses_tampered_extraction(self, ou_config):
        await ExperimentPipeline(ou_config).run_all()
        result_file = ou_config.output_path() / "extraction" / "result.json"
        result_file.write_text(result_file.read_text(encoding="utf-8") + "\n", encoding="utf-8")

        with pytest.raises(MissingInputError, match="do not match stage.json"):
            await ExperimentPipeline(ou_config).run_report()

    @pytest.mark.asyncio
    async def test_stale_dataset(self, ou_raw, ou_config):
        await ExperimentPipeline(ou_config).run_simulate()
        changed = copy.deepcopy(ou_raw)
        changed["seed"] = 8
        with pytest.raises(MissingInputError, match="stale"):
            await ExperimentPipeline(run_config_from_dict(changed)).run_train()

    @pytest.mark.asyncio
    async def test_failed_result_write_is_not_certified(self, ou_raw, ou_config):
        """Test that a refused result.json write leaves no complete extraction behind"""
        await ExperimentPipeline(ou_config).run_all()
        extraction_dir = ou_config.output_path() / "extraction"
        changed = with_changes(ou_raw, extraction={"ball_eps": 0.4})

        with patch.object(JsonFileExporter, "export", AsyncMock(return_value=False)):
            with pytest.raises(ArtifactWriteError, match="result.json"):
                await ExperimentPipeline(changed).run_extract()

        assert read_manifest(extraction_dir) is None
        assert not (extraction_dir / "result.json").exists()
        with pytest.raises(MissingInputError, match="run `extract` first"):
            await ExperimentPipeline(changed).run_report()

    @pytest.mark.asyncio
    async def test_io_error_while_exporting(self, ou_config):
        pipeline = ExperimentPipeline(ou_config)
        with patch.object(JsonFileExporter, "export", AsyncMock(side_effect=OSError("disk full"))):
            with pytest.raises(ArtifactWriteError, match="disk full"):
                await pipeline.run_all()

        assert read_manifest(ou_config.output_path() / "extraction") is None

    @pytest.mark.asyncio
    async def test_every_burst_failing(self, ou_config):
        pipeline = ExperimentPipeline(ou_config)
        await pipeline.run_simulate()
        with patch.object(stages, "train_flow", MagicMock(side_effect=TrainingError("non-finite loss", 0, 0))):
            with pytest.raises(TrainingError, match="every burst"):
                await pipeline.run_train()

        manifest = read_manifest(ou_config.output_path() / "models")
        assert manifest.status == "failed"
        assert sorted(manifest.failed) == ["0", "1", "2"]

    @pytest.mark.asyncio
    async def test_one_burst_failing_is_flagged(self, ou_config):
        """Test that an aborted burst becomes a failed grid point, not a failed run"""
        real = stages.train_burst_task

        def flaky(samples, architecture, schedule, directory, input_digest):
            if directory.endswith("burst_0001"):
                return None, "non-finite loss (epoch=0, batch=0)"
            return real(samples, architecture, schedule, directory, input_digest)

        with patch.object(stages, "train_burst_task", flaky):
            report = await ExperimentPipeline(ou_config).run_all()

        assert report.failed_points == [1]
        result = json.loads((ou_config.output_path() / "extraction" / "result.json").read_text(encoding="utf-8"))
        assert "no trained model" in result["failed"]["1"]

    def test_invalid_arguments(self, ou_config):
        with pytest.raises(ValueError, match="workers"):
            ExperimentPipeline(ou_config, workers=0)
        with pytest.raises(ValueError, match="force_stage"):
            ExperimentPipeline(ou_config, force_stage="plots")


class TestStableRun:
    """Test cases for a tiny run with Levy jumps"""

    @pytest.mark.asyncio
    async def test_raw_jump_fit(self, stable_raw):
        config = run_config_from_dict(stable_raw)
        report = await ExperimentPipeline(config).run_all()
        result = json.loads((config.output_path() / "extraction" / "result.json").read_text(encoding="utf-8"))

        assert 0.0 < report.jump["alpha_hat"] < 2.0
        assert report.jump["source"] == "raw"
        assert "jump_flow" in result["diagnostics"]
        assert (config.output_path() / "report" / "jump_fit.svg").is_file()
        assert report.acceptance[0].criterion == "alpha_hat"
        assert report.acceptance[0].passed


class TestWorkers:
    """Test cases for process-pool execution"""

    @pytest.mark.asyncio
    async def test_worker_count_does_not_change_the_dataset(self, ou_raw, tmp_path):
        datasets = []
        for workers in (1, 2):
            raw = copy.deepcopy(ou_raw)
            raw["output_dir"] = str(tmp_path / f"w{workers}")
            datasets.append(await ExperimentPipeline(run_config_from_dict(raw), workers=workers).run_simulate())

        assert datasets[0] == datasets[1]

    @pytest.mark.asyncio
    async def test_map_calls_keeps_order(self):
        assert await map_calls(pow, [(2, 3), (3, 2), (5, 0)], workers=1) == [8, 9, 1]

    def test_train_seeds_differ_per_burst(self):
        seeds = {burst_train_seed(7, i) for i in range(10)}
        assert len(seeds) == 10
        assert burst_train_seed(7, 3) == burst_train_seed(7, 3)


class TestTrainDirectory:
    """Test cases for training a dataset directory without a run config"""

    @pytest.mark.asyncio
    async def test_trains_every_burst(self, ou_config, tmp_path):
        await ExperimentPipeline(ou_config).run_simulate()
        out = tmp_path / "models"
        manifest = await train_directory(ou_config.output_path() / "dataset", "nsf1d", out,
                                         schedule=TrainConfig(epochs=1, batch_size=200))

        assert len(manifest.files) == 6
        assert (out / "burst_0002" / "model.pt").is_file()
        assert read_manifest(out) == manifest

    @pytest.mark.asyncio
    async def test_wrong_arch_dimension(self, ou_config, tmp_path):
        await ExperimentPipeline(ou_config).run_simulate()
        with pytest.raises(ValueError, match="2D but the dataset is 1D"):
            await train_directory(ou_config.output_path() / "dataset", "realnvp2d", tmp_path / "models")
