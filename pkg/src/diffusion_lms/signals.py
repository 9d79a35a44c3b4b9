"""Signal models: the unknown system, per-node regressors, and measurement noise.

The measurement at node n and iteration i is d_n(i) = x_n(i)^T w_o(i) + v_n(i),
where w_o may optionally drift as a Gaussian random walk and v_n is white
Gaussian noise plus an optional Bernoulli-Gaussian impulsive component.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

REGRESSOR_KINDS = ("white", "diagonal", "correlated")


@dataclass(frozen=True)
class UnknownSystem:
    """System coefficients plus the standard deviation of their random walk."""

    weights: np.ndarray
    process_noise_std: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if self.process_noise_std < 0:
            raise ValueError("process_noise_std must be nonnegative")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @property
    def length(self) -> int:
        return self.weights.size


def gen_unknown_system(length: int, seed, process_noise_std: float = 0.0) -> UnknownSystem:
    """Draw i.i.d. standard-normal coefficients and normalize to unit norm."""
    if length < 1:
        raise ValueError("length must be at least 1")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(length)
    norm = np.linalg.norm(w)
    while norm == 0.0:  # probability zero, but keeps the postcondition airtight
        w = rng.standard_normal(length)
        norm = np.linalg.norm(w)
    return UnknownSystem(w / norm, process_noise_std)


def random_walk_step(system: UnknownSystem, rng: np.random.Generator) -> UnknownSystem:
    """One random-walk increment of the system coefficients.

    With a zero process-noise level the same system is returned and the
    generator is left untouched.
    """
    if system.process_noise_std == 0.0:
        return system
    drift = rng.normal(0.0, system.process_noise_std, system.length)
    return replace(system, weights=system.weights + drift)


def measure(system: UnknownSystem, x: np.ndarray, noise_sample: float) -> float:
    """Scalar measurement x^T w_o + v for one node and iteration."""
    x = np.asarray(x, dtype=float)
    if x.shape != system.weights.shape:
        raise ValueError("regressor length does not match the system")
    return float(x @ system.weights + noise_sample)


@dataclass(frozen=True, eq=False)
class RegressorProfile:
    """Per-node statistics of the input process.

    Parameters
    ----------
    kind : {"white", "diagonal", "correlated"}
        white      -- i.i.d. Gaussian vectors with one variance per node.
        diagonal   -- independent coordinates with per-coordinate variances,
                      one row of ``node_variances`` per node.
        correlated -- first-order autoregressive scalar process pushed through
                      the length-M tapped-delay window, one variance per node.
    node_variances : ndarray
        Shape (N,) for white/correlated, (N, M) for diagonal.  All entries
        must be strictly positive.
    length : int
        Regressor length M.
    correlation : float
        AR(1) coefficient in [0, 1); only meaningful for ``correlated``.
    """

    kind: str
    node_variances: np.ndarray
    length: int
    correlation: float = 0.0

    def __post_init__(self):
        if self.kind not in REGRESSOR_KINDS:
            raise ValueError(f"unknown regressor kind {self.kind!r}")
        if self.length < 1:
            raise ValueError("length must be at least 1")
        v = np.asarray(self.node_variances, dtype=float)
        if self.kind == "diagonal":
            if v.ndim != 2 or v.shape[1] != self.length:
                raise ValueError("diagonal profile needs variances of shape (N, M)")
        elif v.ndim != 1:
            raise ValueError("profile needs one variance per node")
        if not (v > 0).all():
            raise ValueError("regressor variances must be strictly positive")
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError("correlation must lie in [0, 1)")
        object.__setattr__(self, "node_variances", v)
        v.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.node_variances.shape[0]

    def covariance(self, node: int) -> np.ndarray:
        """Regressor covariance matrix of one node."""
        m = self.length
        if self.kind == "white":
            return float(self.node_variances[node]) * np.eye(m)
        if self.kind == "diagonal":
            return np.diag(self.node_variances[node])
        lags = np.abs(np.arange(m)[:, None] - np.arange(m)[None, :])
        return float(self.node_variances[node]) * self.correlation ** lags

    def stream(self, node: int, rng: np.random.Generator) -> "RegressorStream":
        return RegressorStream(self, node, rng)


class RegressorStream:
    """Sequential regressor source for one node.

    For the correlated profile the stream carries the AR(1) window across
    calls, so consecutive vectors overlap by M - 1 samples exactly as a
    tapped-delay line does.  White and diagonal draws are memoryless.
    """

    def __init__(self, profile: RegressorProfile, node: int, rng: np.random.Generator):
        self.profile = profile
        self.node = node
        self.rng = rng
        if profile.kind == "correlated":
            sigma = float(np.sqrt(profile.node_variances[node]))
            # Stationary start: first window drawn from the stationary law.
            self._window = _ar1_block(
                rng, profile.length, profile.correlation, sigma, prev=None
            )

    def draw_block(self, count: int) -> np.ndarray:
        """``count`` consecutive regressors, shape (count, M)."""
        p, m = self.profile, self.profile.length
        if p.kind == "white":
            scale = float(np.sqrt(p.node_variances[self.node]))
            return self.rng.standard_normal((count, m)) * scale
        if p.kind == "diagonal":
            scales = np.sqrt(p.node_variances[self.node])
            return self.rng.standard_normal((count, m)) * scales[None, :]
        sigma = float(np.sqrt(p.node_variances[self.node]))
        fresh = _ar1_block(self.rng, count, p.correlation, sigma, prev=self._window[-1])
        seq = np.concatenate([self._window, fresh])
        self._window = seq[-m:]
        # Window at iteration i holds [u(i), u(i-1), ..., u(i-M+1)].
        strided = np.lib.stride_tricks.sliding_window_view(seq, m)[1 : count + 1]
        return strided[:, ::-1].copy()

    def draw(self) -> np.ndarray:
        return self.draw_block(1)[0]


def _ar1_block(rng, count, rho, sigma, prev):
    """AR(1) samples u(i) = rho u(i-1) + sqrt(1 - rho^2) sigma g(i).

    ``prev=None`` starts from the stationary distribution.  The stationary
    variance is sigma^2 for every rho in [0, 1).
    """
    if count == 0:
        return np.empty(0)
    innov = rng.standard_normal(count) * (sigma * np.sqrt(1.0 - rho * rho))
    if prev is None:
        innov[0] = rng.standard_normal() * sigma
        zi = [0.0]
    else:
        zi = [rho * float(prev)]
    out, _ = lfilter([1.0], [1.0, -rho], innov, zi=zi)
    return out


def gen_regressor(profile: RegressorProfile, node: int, rng: np.random.Generator) -> np.ndarray:
    """One regressor drawn from the profile's stationary law.

    Stateless convenience: for the correlated kind each call yields an
    independent stationary window.  Use :meth:`RegressorProfile.stream` when
    the shifted tapped-delay sequence across iterations matters.
    """
    return profile.stream(node, rng).draw()


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Measurement noise: per-node white Gaussian floor plus an optional
    Bernoulli-Gaussian impulsive component shared by all nodes.

    The impulsive part is f(i) g(i) with f ~ N(0, impulse_variance) and g a
    Bernoulli(impulse_probability) gate, so its variance contribution is
    impulse_probability * impulse_variance.
    """

    gaussian_variance: np.ndarray
    impulse_probability: float = 0.0
    impulse_variance: float = 0.0

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.gaussian_variance, dtype=float))
        if (v < 0).any():
            raise ValueError("gaussian_variance must be nonnegative")
        if not 0.0 <= self.impulse_probability <= 1.0:
            raise ValueError("impulse_probability must lie in [0, 1]")
        if self.impulse_probability > 0.0 and self.impulse_variance <= 0.0:
            raise ValueError("impulse_variance must be positive when impulses are on")
        if self.impulse_variance < 0.0:
            raise ValueError("impulse_variance must be nonnegative")
        object.__setattr__(self, "gaussian_variance", v)
        v.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.gaussian_variance.size

    def total_variance(self, node: int) -> float:
        return float(
            self.gaussian_variance[node]
            + self.impulse_probability * self.impulse_variance
        )

    def sample_block(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Noise for all nodes over ``count`` iterations, shape (count, N)."""
        n = self.node_count
        out = rng.standard_normal((count, n)) * np.sqrt(self.gaussian_variance)[None, :]
        if self.impulse_probability > 0.0:
            amp = rng.standard_normal((count, n)) * np.sqrt(self.impulse_variance)
            gate = rng.random((count, n)) < self.impulse_probability
            out += amp * gate
        return out

    def sample(self, node: int, rng: np.random.Generator, size: int | None = None):
        """Noise samples for a single node."""
        count = 1 if size is None else size
        eps = rng.standard_normal(count) * np.sqrt(self.gaussian_variance[node])
        if self.impulse_probability > 0.0:
            amp = rng.standard_normal(count) * np.sqrt(self.impulse_variance)
            gate = rng.random(count) < self.impulse_probability
            eps = eps + amp * gate
        return float(eps[0]) if size is None else eps


def sample_noise(model: NoiseModel, node: int, rng: np.random.Generator) -> float:
    """One noise sample for ``node``."""
    return model.sample(node, rng)
