#!/usr/bin/env python3
"""Boolean-task table: plain scaled-Gaussian init vs the rank-limited
bottleneck init, with the gradient log-ratio between the two."""

from vannodes.config import ExperimentConfig
from vannodes.experiments import run_tasks_table

config = ExperimentConfig(
    experiment="tasks_table",
    depths=[10],
    widths=[64],
    activation="tanh",
    init="scaled_gaussian",
    sigma_w_sq=1.0,
    bottleneck_nb=1,
    optimizer="sgd",
    learning_rates=[0.1],
    batch_size=4,
    epochs=300,
    max_epochs=300,
    early_stop=True,
    runs=10,
    success_metric="train_accuracy",
    success_threshold=0.99,
    out_dir="out/tasks",
)

if __name__ == "__main__":
    run_tasks_table(config)
    print(f"wrote {config.out_dir}/ (hash {config.config_hash()})")
