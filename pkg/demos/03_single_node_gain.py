"""Watch the probabilistic filter's step size anneal on a single node.

The update keeps a scalar belief variance about its own error.  Each new
regressor shrinks that belief, so the effective gain decays roughly like
1/i without any schedule being imposed.  A late impulse therefore barely
moves the estimate, which is the whole robustness story in one plot: the
plain LMS takes the hit, the probabilistic filter shrugs it off.
"""

import numpy as np

from diffusion_lms import NodeFilterState, plms_step


def main():
    rng = np.random.default_rng(5)
    m = 8
    true = rng.standard_normal(m)
    true /= np.linalg.norm(true)

    plms = NodeFilterState(weights=np.zeros(m), observation_noise_var=0.01)
    lms_w = np.zeros(m)
    lms_mu = 0.05

    iterations = 600
    impulse_at = 400
    gains, plms_err, lms_err = [], [], []
    for i in range(iterations):
        x = rng.standard_normal(m)
        noise = rng.normal(0.0, 0.1)
        if i == impulse_at:
            noise += 50.0  # a single catastrophic outlier
        d = float(x @ true) + noise

        before = plms.posterior_variance
        plms = plms_step(plms, x, d, tau=1.0)
        # recover the gain actually used from the variance contraction
        gains.append((1.0 - plms.posterior_variance / before) / float(x @ x) * m)

        lms_w = lms_w + lms_mu * (d - float(x @ lms_w)) * x

        plms_err.append(float(np.sum((plms.weights - true) ** 2)))
        lms_err.append(float(np.sum((lms_w - true) ** 2)))

    def db(v):
        return 10 * np.log10(max(v, 1e-300))

    print(f"error before the impulse (iteration {impulse_at - 1}):")
    print(f"  probabilistic {db(plms_err[impulse_at - 1]):7.1f} dB   "
          f"plain LMS {db(lms_err[impulse_at - 1]):7.1f} dB")
    print(f"error right after the impulse (iteration {impulse_at}):")
    print(f"  probabilistic {db(plms_err[impulse_at]):7.1f} dB   "
          f"plain LMS {db(lms_err[impulse_at]):7.1f} dB")
    print(f"final error (iteration {iterations - 1}):")
    print(f"  probabilistic {db(plms_err[-1]):7.1f} dB   "
          f"plain LMS {db(lms_err[-1]):7.1f} dB")
    print(f"\neffective gain decayed from {gains[0]:.3f} to {gains[-1]:.2e}")

    try:
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the plot")
        return
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].semilogy(gains)
    axes[0].set_ylabel("effective gain")
    axes[1].plot(10 * np.log10(np.maximum(plms_err, 1e-300)), label="probabilistic")
    axes[1].plot(10 * np.log10(np.maximum(lms_err, 1e-300)), label="plain LMS")
    axes[1].axvline(impulse_at, color="k", ls=":", lw=1)
    axes[1].set_ylabel("squared error (dB)")
    axes[1].set_xlabel("iteration")
    axes[1].legend()
    fig.savefig("demos/single_node_gain.png", dpi=120)
    print("wrote demos/single_node_gain.png")


if __name__ == "__main__":
    main()
