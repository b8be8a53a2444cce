#!/usr/bin/env python3
"""Depth table comparing scaled Gaussian, orthogonal init, and the
Householder-reflection parametrization (orthogonal throughout training)."""

from vannodes.config import ExperimentConfig
from vannodes.experiments import run_orthogonal_table

config = ExperimentConfig(
    experiment="orthogonal_table",
    dataset="xor2",
    depths=[5, 15, 30],
    widths=[16],
    activation="tanh",
    init="scaled_gaussian",
    sigma_w_sq=0.0,
    optimizer="sgd",
    learning_rates=[0.1],
    batch_size=4,
    epochs=200,
    max_epochs=200,
    early_stop=True,
    runs=10,
    success_metric="train_accuracy",
    success_threshold=0.99,
    out_dir="out/orth",
)

if __name__ == "__main__":
    run_orthogonal_table(config)
    print(f"wrote {config.out_dir}/ (hash {config.config_hash()})")
