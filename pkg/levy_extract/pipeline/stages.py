"""
simulate -> train -> extract -> report, with digest-keyed stage caching
"""
import asyncio
import hashlib
import logging
import multiprocessing
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import RunConfig
from .report import RESULT_FILE, build_report, load_extraction_result
from .storage import (
    MANIFEST_FILE,
    STAGES,
    StageManifest,
    files_intact,
    load_dataset,
    read_manifest,
    save_dataset,
    write_manifest,
)
from ..core.errors import ArtifactWriteError, MissingInputError, ParameterError, TrainingError
from ..core.expressions import compile_sde
from ..core.fileio import file_sha256
from ..core.kramers_moyal import assemble_result, extract_point_outcome, fit_jump_estimates
from ..core.simulator import simulate_burst, validate_fields_on_grid
from ..exporters.base import DataExporterBase
from ..exporters.console import ConsoleExporter
from ..exporters.csv_file import (
    DIFFUSION_FILE,
    DRIFT_FILE,
    TRAINING_CURVE_FILE,
    CsvFileExporter,
    write_error_table,
    write_training_curve,
)
from ..exporters.json_file import JsonFileExporter
from ..exporters.svg_plots import SvgPlotExporter
from ..flows.checkpoint import load_model, save_model
from ..flows.model import FlowModel, torch_threads
from ..flows.training import train_flow
from ..models.base import digest_of
from ..models.extraction import ExtractionResult, ExtractionSettings
from ..models.flow import FlowArchitecture, TrainConfig
from ..models.report import RunReport
from ..models.sde import Burst, BurstDataset

logger = logging.getLogger(__name__)

MODEL_FILE = "model.pt"
REPORT_FILE = "report.json"
ERRORS_FILE = "errors.csv"


def burst_dir_name(index: int) -> str:
    return f"burst_{index:04d}"


def burst_train_seed(seed: int, index: int) -> int:
    """Training seed of burst `index`, independent of the simulation substream"""
    state = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), 2)).generate_state(1)
    return int(state[0])


def train_burst_task(
    samples: np.ndarray,
    architecture: FlowArchitecture,
    schedule: TrainConfig,
    directory: str,
    input_digest: str,
) -> Tuple[Optional[Dict[str, str]], Optional[str]]:
    """
    Train and checkpoint one burst's flow (runs in a worker process)

    Returns:
        ({relative file: sha256}, None) on success, (None, message) when training aborted
    """
    directory = Path(directory)
    try:
        with torch_threads(1):
            model = train_flow(samples, architecture, schedule)
    except (TrainingError, ParameterError) as e:
        return None, str(e)
    model_sha = save_model(model, directory / MODEL_FILE, input_digest=input_digest)
    curve_sha = file_sha256(write_training_curve(directory / TRAINING_CURVE_FILE, model.training_history))
    return {f"{directory.name}/{MODEL_FILE}": model_sha, f"{directory.name}/{TRAINING_CURVE_FILE}": curve_sha}, None


def extract_point_task(model: Optional[FlowModel], burst: Burst, t_star: float, settings: ExtractionSettings,
                       jump) -> Tuple:
    with torch_threads(1):
        return extract_point_outcome(model, burst.samples, burst.z, t_star, settings, jump)


class ExperimentPipeline:
    """
    One experiment's stages under config.output_path()

    Args:
        config: validated run config
        workers: concurrent bursts / grid points (1 runs in-process)
        force_stage: recompute this stage and every later one regardless of cache
        console: exporter for the final report (None to stay quiet)
    """

    def __init__(self, config: RunConfig, workers: int = 1, force_stage: Optional[str] = None,
                 console: Optional[ConsoleExporter] = None):
        if workers < 1:
            raise ParameterError(f"workers must be positive, got {workers}")
        if force_stage is not None and force_stage not in STAGES:
            raise ParameterError(f"force_stage must be one of {STAGES}, got {force_stage!r}")
        self.config = config
        self.workers = int(workers)
        self.forced = set(STAGES[STAGES.index(force_stage):]) if force_stage else set()
        self.console = console
        self.root = config.output_path()
        self.steps: List[Dict[str, Any]] = []

    def stage_dir(self, stage: str) -> Path:
        return self.root / stage

    async def _map(self, fn: Callable, calls: Sequence[tuple]) -> List[Any]:
        return await map_calls(fn, calls, self.workers)

    def _cached(self, stage: str, digest: str, check_files: bool = True) -> Optional[StageManifest]:
        if stage in self.forced:
            return None
        manifest = read_manifest(self.stage_dir(stage))
        if manifest is None or manifest.input_digest != digest or manifest.status != "complete":
            return None
        if check_files and not files_intact(self.stage_dir(stage), manifest.files):
            logger.warning(f"{stage}: 出力ファイルのダイジェスト不一致のため再計算")
            return None
        return manifest

    def _record(self, stage: str, status: str, started: float) -> float:
        elapsed = time.perf_counter() - started
        self.steps.append({"stage": stage, "status": status, "elapsed_seconds": elapsed})
        return elapsed

    def _require(self, stage: str, digest: str, hint: str) -> StageManifest:
        manifest = read_manifest(self.stage_dir(stage))
        if manifest is None or manifest.status != "complete":
            raise MissingInputError(f"{stage} stage output missing in {self.stage_dir(stage)}; run `{hint}` first")
        if manifest.input_digest != digest:
            raise MissingInputError(f"{stage} stage output is stale for this config; run `{hint}` first")
        return manifest

    def _clear(self, stage: str, names: Sequence[str]) -> Path:
        """Drop a stage's manifest and the named outputs before they are rewritten"""
        directory = self.stage_dir(stage)
        for name in (MANIFEST_FILE, *names):
            (directory / name).unlink(missing_ok=True)
        return directory

    @staticmethod
    async def _export(exporter: DataExporterBase, data: Any, target: Path) -> None:
        try:
            ok = await exporter.export(data)
        except OSError as e:
            raise ArtifactWriteError(f"could not write {target}: {e}") from e
        if not ok:
            raise ArtifactWriteError(f"could not write {target}")

    async def run_simulate(self) -> BurstDataset:
        """Generate (or reuse) the burst dataset"""
        started = time.perf_counter()
        directory = self.stage_dir("dataset")
        digest = self.config.dataset_digest()
        if self._cached("dataset", digest):
            logger.info(f"データセットはキャッシュ済み: {directory}")
            self._record("dataset", "cached", started)
            return load_dataset(directory)

        config = self.config
        grid = config.grid.points()
        validate_fields_on_grid(compile_sde(config.sde), grid)
        logger.info(f"シミュレーション開始: {len(grid)} bursts x {config.grid.n_samples} samples")
        calls = [(config.sde, z, config.grid.n_samples, config.seed, i) for i, z in enumerate(grid)]
        bursts = await self._map(simulate_burst, calls)
        dataset = BurstDataset(bursts=bursts, t_star=config.sde.t_star, seed=config.seed,
                               spec_hash=config.sde.digest, spec=config.sde)

        if directory.exists():
            shutil.rmtree(directory)
        files = save_dataset(dataset, directory)
        elapsed = self._record("dataset", "complete", started)
        write_manifest(directory, StageManifest(stage="dataset", input_digest=digest, elapsed_seconds=elapsed, files=files))
        return dataset

    def _load_dataset(self) -> BurstDataset:
        self._require("dataset", self.config.dataset_digest(), "simulate")
        return load_dataset(self.stage_dir("dataset"))

    async def run_train(self, dataset: Optional[BurstDataset] = None) -> List[Optional[FlowModel]]:
        """
        Train one flow per burst; valid checkpoints from an identical earlier run are reused

        A burst whose training aborts is recorded in stage.json and yields None.
        """
        started = time.perf_counter()
        dataset = dataset if dataset is not None else self._load_dataset()
        digest = self.config.models_digest()
        previous = self._cached("models", digest, check_files=False)
        if previous is None and self.stage_dir("models").exists():
            shutil.rmtree(self.stage_dir("models"))
        models, manifest = await train_bursts(
            dataset, self.config.training.architecture, self.config.training.schedule,
            self.stage_dir("models"), digest, self.config.seed, self.workers, previous=previous,
        )
        if not any(m is not None for m in models):
            manifest.status = "failed"
        manifest.elapsed_seconds = self._record("models", manifest.status, started)
        write_manifest(self.stage_dir("models"), manifest)
        if manifest.status == "failed":
            raise TrainingError("training aborted for every burst")
        return models

    def _load_models(self, count: int) -> List[Optional[FlowModel]]:
        manifest = self._require("models", self.config.models_digest(), "train")
        directory = self.stage_dir("models")
        if not files_intact(directory, manifest.files):
            raise MissingInputError(f"model checkpoints in {directory} do not match stage.json; run `train` again")
        return [
            None if str(i) in manifest.failed else load_model(directory / burst_dir_name(i) / MODEL_FILE)
            for i in range(count)
        ]

    async def run_extract(self, dataset: Optional[BurstDataset] = None,
                          models: Optional[Sequence[Optional[FlowModel]]] = None) -> ExtractionResult:
        """Jump fit plus per-point drift and diffusion; failing points are flagged, not fatal"""
        started = time.perf_counter()
        directory = self.stage_dir("extraction")
        digest = self.config.extraction_digest()
        if self._cached("extraction", digest):
            logger.info(f"抽出結果はキャッシュ済み: {directory}")
            self._record("extraction", "cached", started)
            return load_extraction_result(directory)

        dataset = dataset if dataset is not None else self._load_dataset()
        if models is None:
            models = self._load_models(len(dataset.bursts))
        settings = self.config.extraction
        seed = self.config.seed
        with torch_threads(1):
            jump, diagnostics = fit_jump_estimates(dataset, models, settings, seed)
        calls = [(model, burst, dataset.t_star, settings, jump) for burst, model in zip(dataset.bursts, models)]
        outcomes = await self._map(extract_point_task, calls)
        result = assemble_result(dataset, settings, jump, outcomes, seed, diagnostics)

        truth = compile_sde(dataset.spec) if dataset.spec is not None else None
        self._clear("extraction", (RESULT_FILE, DRIFT_FILE, DIFFUSION_FILE))
        await self._export(JsonFileExporter(str(directory / RESULT_FILE)), result, directory / RESULT_FILE)
        await self._export(CsvFileExporter(str(directory), truth=truth), result, directory)
        files = {name: file_sha256(directory / name) for name in (RESULT_FILE, DRIFT_FILE, DIFFUSION_FILE)}
        elapsed = self._record("extraction", "complete", started)
        write_manifest(directory, StageManifest(stage="extraction", input_digest=digest, elapsed_seconds=elapsed,
                                                files=files, failed={str(k): v for k, v in result.fields.failed.items()}))
        return result

    async def run_report(self) -> RunReport:
        """Report, error table and plots, rebuilt from the extraction files"""
        started = time.perf_counter()
        extraction = self._require("extraction", self.config.extraction_digest(), "extract")
        if not files_intact(self.stage_dir("extraction"), extraction.files):
            raise MissingInputError(f"extraction files in {self.stage_dir('extraction')} do not match stage.json; "
                                    f"run `extract` again")
        directory = self.stage_dir("report")
        report = build_report(self.config, self.root)
        self._clear("report", (REPORT_FILE, ERRORS_FILE))
        await self._export(JsonFileExporter(str(directory / REPORT_FILE)), report, directory / REPORT_FILE)
        try:
            write_error_table(directory / ERRORS_FILE, report)
        except OSError as e:
            raise ArtifactWriteError(f"could not write {directory / ERRORS_FILE}: {e}") from e
        plots = SvgPlotExporter(str(directory))
        await self._export(plots, report, directory)
        if self.console is not None:
            await self.console.export(report)
        names = [REPORT_FILE, ERRORS_FILE] + [p.name for p in plots.written]
        files = {name: file_sha256(directory / name) for name in names}
        elapsed = self._record("report", "complete", started)
        write_manifest(directory, StageManifest(stage="report", input_digest=self.config.report_digest(),
                                                elapsed_seconds=elapsed, files=files))
        return report

    async def run_all(self) -> RunReport:
        """Every stage in order; cached stages are skipped"""
        logger.info(f"パイプライン開始: {self.config.experiment} -> {self.root}")
        dataset = await self.run_simulate()
        models = None
        if self._cached("extraction", self.config.extraction_digest()) is None:
            models = await self.run_train(dataset)
        await self.run_extract(dataset, models)
        return await self.run_report()


async def train_bursts(
    dataset: BurstDataset,
    architecture: FlowArchitecture,
    schedule: TrainConfig,
    directory: Path,
    digest: str,
    seed: int,
    workers: int = 1,
    previous: Optional[StageManifest] = None,
) -> Tuple[List[Optional[FlowModel]], StageManifest]:
    """
    Train (or reuse) one checkpoint per burst under directory/burst_<idx>/

    Args:
        dataset: bursts to fit
        architecture: flow layout
        schedule: optimizer settings (seed replaced per burst)
        directory: models stage directory
        digest: stage digest; also keys each checkpoint's input digest
        seed: run seed
        workers: concurrent training jobs
        previous: manifest of an earlier run with the same digest, if any

    Returns:
        (models with None for aborted bursts, stage manifest)
    """
    directory.mkdir(parents=True, exist_ok=True)
    files: Dict[str, str] = {}
    pending = []
    for index, burst in enumerate(dataset.bursts):
        name = burst_dir_name(index)
        keys = [f"{name}/{MODEL_FILE}", f"{name}/{TRAINING_CURVE_FILE}"]
        if previous is not None and all(k in previous.files for k in keys):
            recorded = {k: previous.files[k] for k in keys}
            if files_intact(directory, recorded):
                files.update(recorded)
                continue
            logger.warning(f"{name}: チェックポイントのダイジェスト不一致、再学習します")
        per_burst = TrainConfig(**{**schedule.to_dict(), "seed": burst_train_seed(seed, index)})
        input_digest = digest_of({"stage": digest, "burst": index, "samples": burst_digest(burst)})
        pending.append((index, (burst.samples, architecture, per_burst, str(directory / name), input_digest)))

    if pending:
        logger.info(f"学習開始: {len(pending)}/{len(dataset.bursts)} bursts")
    outcomes = await map_calls(train_burst_task, [args for _, args in pending], workers)
    failed: Dict[str, str] = {}
    for (index, _), (written, error) in zip(pending, outcomes):
        if error is not None:
            logger.warning(f"burst {index} の学習を中断: {error}")
            failed[str(index)] = error
        else:
            files.update(written)

    models = [
        None if str(i) in failed else load_model(directory / burst_dir_name(i) / MODEL_FILE)
        for i in range(len(dataset.bursts))
    ]
    manifest = StageManifest(stage="models", input_digest=digest, files=dict(sorted(files.items())), failed=failed)
    return models, manifest


def burst_digest(burst: Burst) -> str:
    """Content digest of one burst (initial point and raw sample bytes)"""
    samples = hashlib.sha256(np.ascontiguousarray(burst.samples, dtype=np.float64).tobytes()).hexdigest()
    return digest_of({"z": burst.z, "samples_sha256": samples})


async def train_directory(dataset_dir: Path, arch: str, out_dir: Path, workers: int = 1,
                          schedule: Optional[TrainConfig] = None, seed: int = 0) -> StageManifest:
    """Train every burst of a dataset directory without a run config"""
    dataset = load_dataset(dataset_dir)
    architecture = FlowArchitecture(arch=arch)
    if architecture.dim != dataset.dim:
        raise ParameterError(f"arch {arch} is {architecture.dim}D but the dataset is {dataset.dim}D")
    schedule = schedule or TrainConfig()
    source = read_manifest(dataset_dir)
    digest = digest_of({"dataset": source.input_digest if source is not None else dataset.spec_hash,
                        "training": {**architecture.to_dict(), **schedule.to_dict()}, "seed": seed})
    started = time.perf_counter()
    previous = read_manifest(out_dir)
    if previous is not None and previous.input_digest != digest:
        previous = None
    _, manifest = await train_bursts(dataset, architecture, schedule, out_dir, digest, seed,
                                     workers, previous=previous)
    manifest.elapsed_seconds = time.perf_counter() - started
    write_manifest(out_dir, manifest)
    return manifest


async def map_calls(fn: Callable, calls: Sequence[tuple], workers: int = 1) -> List[Any]:
    """fn(*args) for every call, results in call order; a spawn-based process pool when workers > 1"""
    if workers == 1 or len(calls) <= 1:
        return [fn(*args) for args in calls]
    loop = asyncio.get_running_loop()
    context = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(workers, len(calls)), mp_context=context) as pool:
        futures = [loop.run_in_executor(pool, fn, *args) for args in calls]
        return list(await asyncio.gather(*futures))
