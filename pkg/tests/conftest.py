"""
共通フィクスチャ（乱数・小さな実験設定）と slow マーカーの制御
"""
import copy
import json

import numpy as np
import pytest

from levy_extract.core.simulator import simulate_burst
from levy_extract.models.sde import SdeSpec, StableParams


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    """固定シードの乱数ジェネレーター"""
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def stable_burst():
    """dx = (3x - x^3)dt + dL (alpha=1.5) から z=1 で生成した 5000 点のバースト"""
    spec = SdeSpec(drift=["3*x1 - x1^3"], diffusion_matrix=[["0"]],
                   stable=StableParams(alpha=1.5, sigma=1.0, dim=1), t_star=0.01)
    return simulate_burst(spec, [1.0], 5000, seed=11, index=0)


TINY_OU = {
    "experiment": "tiny_ou",
    "seed": 7,
    "sde": {"drift": ["-x1"], "diffusion_matrix": [["1"]], "stable": None, "t_star": 0.01, "dt": 0.001},
    "grid": {"ranges": [[-1.0, 1.0]], "resolution": 3, "n_samples": 400},
    "training": {"arch": "nsf1d", "n_layers": 1, "hidden_layers": 1, "hidden_units": 4, "epochs": 2,
                 "batch_size": 200},
    "extraction": {"fit_jumps": False, "quad_resolution": 101},
    "acceptance": {"interior_margin": 0.0},
}

TINY_STABLE = {
    "experiment": "tiny_stable",
    "seed": 3,
    "sde": {"drift": ["0"], "diffusion_matrix": [["0"]], "stable": {"alpha": 1.5, "sigma": 1.0},
            "t_star": 0.01, "dt": 0.001},
    "grid": {"ranges": [[-1.0, 1.0]], "resolution": 3, "n_samples": 2000},
    "training": {"arch": "nsf1d", "n_layers": 1, "hidden_layers": 1, "hidden_units": 4, "epochs": 2,
                 "batch_size": 500},
    "extraction": {"jump_source": "raw", "field_source": "samples", "jump_eps": [0.3, 0.8]},
    "acceptance": {"alpha_range": [0.0, 2.0]},
}


@pytest.fixture
def ou_raw(tmp_path):
    """出力先を一時ディレクトリにした OU 設定"""
    raw = copy.deepcopy(TINY_OU)
    raw["output_dir"] = str(tmp_path / "runs" / "tiny_ou")
    return raw


@pytest.fixture
def stable_raw(tmp_path):
    raw = copy.deepcopy(TINY_STABLE)
    raw["output_dir"] = str(tmp_path / "runs" / "tiny_stable")
    return raw


@pytest.fixture
def write_config(tmp_path):
    """設定辞書をJSONファイルに書き出すヘルパー"""
    def write(raw, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw, indent=2), encoding="utf-8")
        return path
    return write
