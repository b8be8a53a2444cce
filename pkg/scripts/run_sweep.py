#!/usr/bin/env python3
"""Indicator vs depth, theory against simulation, at desk scale.

Saturating-linear backbone at the norm-preserving weight scale; two widths so
the 1/N floor and the L/N slope are both visible.
"""

from vannodes.config import ExperimentConfig
from vannodes.experiments import run_vni_sweep

config = ExperimentConfig(
    experiment="vni_sweep",
    depths=[5, 10, 20, 40, 60, 80, 100],
    widths=[50, 200],
    activation="hard_tanh",
    init="scaled_gaussian",
    sigma_w_sq=0.0,  # tune to sigma_w^2 mu_1 = 1
    sigma_x_sq=0.1,
    probe_samples=2000,
    runs=10,
    out_dir="out/sweep",
)

if __name__ == "__main__":
    run_vni_sweep(config)
    print(f"wrote {config.out_dir}/ (hash {config.config_hash()})")
