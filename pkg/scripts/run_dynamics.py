#!/usr/bin/env python3
"""Indicator quartiles over training on MNIST, one band per learning rate.

Requires the MNIST IDX files; run `vannodes fetch-mnist` (or copy the four
files into data/mnist/) first.  Falls back to the xor2 table if MNIST is
absent so the script stays runnable offline, and says so.
"""

import os

from vannodes.config import ExperimentConfig
from vannodes.experiments import run_dynamics

config = ExperimentConfig(
    experiment="dynamics",
    dataset="mnist",
    depths=[10],
    widths=[100],
    activation="tanh",
    init="scaled_gaussian",
    sigma_w_sq=0.0,
    optimizer="sgd",
    learning_rates=[0.01, 0.1, 0.5],
    batch_size=100,
    epochs=30,
    max_epochs=30,
    runs=5,
    train_slice=5000,
    test_slice=1000,
    success_metric="test_accuracy",
    success_threshold=0.9,
    out_dir="out/dynamics",
)

if __name__ == "__main__":
    if not os.path.exists(os.path.join(config.mnist_dir, "train-images-idx3-ubyte")):
        print("MNIST files not found; running on the xor2 table instead")
        config = config.with_overrides(
            {"dataset": "xor2", "widths": [32], "batch_size": 4,
             "success_metric": "train_accuracy", "success_threshold": 0.99}
        )
    run_dynamics(config)
    print(f"wrote {config.out_dir}/ (hash {config.config_hash()})")
