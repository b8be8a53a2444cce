#!/usr/bin/env python3
"""Success probability over (depth, learning rate) on a small boolean task,
plus the failure-attribution outputs: per-layer gain box stats by outcome and
the final-indicator histogram split by success/failure."""

from vannodes.config import ExperimentConfig
from vannodes.experiments import run_grid

config = ExperimentConfig(
    experiment="grid",
    dataset="xor2",
    depths=[3, 10, 25],
    widths=[32],
    activation="tanh",
    init="scaled_gaussian",
    sigma_w_sq=0.0,
    optimizer="sgd",
    learning_rates=[0.01, 0.1, 1.0],
    batch_size=4,
    epochs=150,
    max_epochs=150,
    runs=10,
    success_metric="train_accuracy",
    success_threshold=0.99,
    out_dir="out/grid",
)

if __name__ == "__main__":
    run_grid(config)
    print(f"wrote {config.out_dir}/ (hash {config.config_hash()})")
