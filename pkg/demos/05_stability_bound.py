"""Predict the largest safe step size, then try to cross it.

A short pilot run snapshots the annealed per-node gains.  Freezing those
gains makes the mean of the weight-error recursion linear, and its largest
stable step follows from the spectral radius of per-node covariance
aggregates.  The demo evaluates that bound on a small network, then runs
the simulator below and above it to show the prediction biting.
"""

import numpy as np

from diffusion_lms import (
    MeanRecursionModel,
    build_topology,
    config_from_dict,
    mean_error_matrix,
    pilot_alpha,
    realize_models,
    spectral_radius,
    stability_bound,
)
from diffusion_lms.filters import NetworkState, adapt_all, combine_all
from diffusion_lms.signals import gen_unknown_system


def frozen_run(combination, alpha, variances, mu, iterations=400, seed=0):
    """Zero-noise network run with the gain pinned to its pilot snapshot."""
    rng = np.random.default_rng(seed)
    n = len(alpha)
    wo = gen_unknown_system(2, 99).weights
    scale = np.sqrt(variances)[:, None]
    state = NetworkState.zeros(n, 2)
    for _ in range(iterations):
        x = rng.standard_normal((n, 2)) * scale
        phi, new_var, _ = adapt_all(state, x, x @ wo, "DPLMS", mu, frozen_alpha=alpha)
        state.weights = combine_all(phi, combination)
        state.variances = new_var
        if not np.all(np.isfinite(state.weights)):
            return np.inf
    return float(np.sum((state.weights - wo[None, :]) ** 2))


def main():
    config = config_from_dict({
        "topology": {"kind": "random", "nodes": 3, "edge_probability": 1.0},
        "filter_length": 2,
        "regressors": {"kind": "white", "variance": [0.5, 1.0, 1.5]},
        "noise": {"gaussian_variance": 0.0},
        "algorithms": [{"name": "DPLMS", "step_size": 1.0}],
        "iterations": 500,
        "runs": 1,
        "seed": 3,
        "assumed_noise_variance": 0.01,
    })
    _, combination = build_topology(config)
    profile, _ = realize_models(config)
    variances = np.array([0.5, 1.0, 1.5])
    covariances = np.stack([profile.covariance(n) for n in range(3)])

    alpha = pilot_alpha(config)
    print("pilot gain snapshot:", np.array2string(alpha, precision=5))

    mu_max = stability_bound(alpha, np.eye(3), covariances)
    print(f"predicted largest mean-stable step size: {mu_max:.1f}\n")

    print(f"{'step':>10} {'rho(B)':>8} {'mean theory':>12} {'realized':>12}")
    for fraction in (0.5, 0.9, 1.1, 1.5):
        mu = fraction * mu_max
        model = MeanRecursionModel(
            combination.weights, np.eye(3), mu, alpha, covariances
        )
        b = mean_error_matrix(model)
        rho = spectral_radius(b)
        wo = gen_unknown_system(2, 99).weights
        theory = np.tile(wo, 3)
        for _ in range(400):
            theory = b @ theory
        theory_err = float(theory @ theory)
        err = frozen_run(combination, alpha, variances, mu)
        print(f"{fraction:>9.1f}x {rho:>8.3f} {theory_err:>12.2e} {err:>12.2e}")
    print(
        "\nthe bound governs the mean of the error recursion: its decay\n"
        "(third column) flips to growth exactly where rho(B) crosses 1.\n"
        "realized runs also feel second-moment fluctuations the mean ignores,\n"
        "so they demand extra margin: at 0.9x the mean still decays while a\n"
        "single realization already blows up.  comfortably inside the bound\n"
        "(0.5x here) theory and realization collapse together"
    )


if __name__ == "__main__":
    main()
