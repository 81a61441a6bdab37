#!/usr/bin/env python3
"""
ライブラリのデモンストレーション（小規模・数十秒で完了）
"""

import asyncio
import logging

import numpy as np

from levy_extract import (
    SdeSpec,
    StableParams,
    estimate_drift,
    generate_dataset,
    sample_standard_symmetric_stable,
    theoretical_annulus_rate,
    train_flow,
)
from levy_extract.core.kramers_moyal import annulus_mass_rate
from levy_extract.core.stable import hill_tail_index
from levy_extract.models.flow import FlowArchitecture, TrainConfig

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


async def demo_stable_sampler():
    """α安定分布サンプラーのデモ"""
    print("\n" + "=" * 60)
    print("対称α安定分布サンプラーのデモ")
    print("=" * 60)

    rng = np.random.default_rng(0)
    for alpha in (1.0, 1.5, 1.9):
        draws = sample_standard_symmetric_stable(alpha, 200_000, rng)
        print(f"alpha={alpha}: Hill tail index of |X| = {hill_tail_index(np.abs(draws)):.3f}")


async def demo_burst_and_drift():
    """短時間バースト生成 → フロー学習 → ドリフト推定のデモ"""
    print("\n" + "=" * 60)
    print("dx = (3x - x^3)dt + dL (alpha=1.5) のドリフト推定デモ")
    print("=" * 60)

    spec = SdeSpec(drift=["3*x1 - x1^3"], diffusion_matrix=[["0"]],
                   stable=StableParams(alpha=1.5, sigma=1.0, dim=1), t_star=0.01)
    dataset = generate_dataset(spec, [[1.0]], n_samples=5000, seed=0)
    burst = dataset.bursts[0]

    rate = annulus_mass_rate(burst.samples, burst.z, 0.5, 2.0, spec.t_star)
    print(f"annulus rate at eps=0.5: sample {rate:.3f}, "
          f"closed form {theoretical_annulus_rate(1.5, 1.0, 1, 0.5, 2.0):.3f}")

    architecture = FlowArchitecture(arch="nsf1d", n_layers=4)
    model = train_flow(burst.samples, architecture, TrainConfig(epochs=30, seed=0))
    drift = estimate_drift(model, burst.z, eps=0.5, t_star=spec.t_star)
    print(f"b(1): estimate {drift[0]:.3f}, true 2.0")


async def main():
    """メイン処理"""
    await demo_stable_sampler()
    await demo_burst_and_drift()


if __name__ == "__main__":
    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        print("\nデモを終了します")
