#!/usr/bin/env python3
"""Permuted squared-correlation heatmaps: depth sweep at N=50, width sweep at
L=50.  Deep/narrow cells should show large near-black blocks."""

from vannodes.config import ExperimentConfig
from vannodes.experiments import run_heatmap

config = ExperimentConfig(
    experiment="heatmap",
    widths=[50, 20, 100],
    depths=[5, 50, 150],
    activation="hard_tanh",
    init="scaled_gaussian",
    sigma_w_sq=0.0,
    sigma_x_sq=0.1,
    probe_samples=2000,
    out_dir="out/heatmap",
)

if __name__ == "__main__":
    run_heatmap(config)
    print(f"wrote {config.out_dir}/ (hash {config.config_hash()})")
