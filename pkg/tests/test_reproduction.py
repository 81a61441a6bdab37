"""
Full reproduction runs of the bundled experiments (enable with --runslow)
"""
from pathlib import Path

import pytest

from levy_extract.pipeline.config import load_run_config
from levy_extract.pipeline.stages import ExperimentPipeline

CONFIG_DIR = Path(__file__).parents[1] / "configs"


@pytest.mark.slow
@pytest.mark.asyncio
@pytest.mark.parametrize("name", ["ex1_cubic_1d", "ex2_decoupled_2d", "ex3_coupled_2d", "ou_control"])
async def test_bundled_experiment_passes(name, tmp_path, monkeypatch):
    """Run every stage and check the configured acceptance bands"""
    monkeypatch.setenv("LEVY_EXTRACT_OUTPUT_ROOT", str(tmp_path))
    config = load_run_config(CONFIG_DIR / f"{name}.json")
    report = await ExperimentPipeline(config, workers=4).run_all()

    failed = [f"{c.criterion}={c.value} (bound {c.bound})" for c in report.acceptance if not c.passed]
    assert report.passed, failed
    assert not report.failed_points
