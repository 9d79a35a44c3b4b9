"""Adaptive filters: the probabilistic LMS kernel, its diffusion form, and
the classic diffusion baselines.

All diffusion strategies here follow the synchronous adapt-then-combine
pattern.  During adaptation every node refines its own estimate from its
local measurement only, reading exclusively the weights of the previous
iteration; during combination every node averages the intermediate estimates
of its neighborhood.  Processing order within an iteration therefore cannot
change the result.

The probabilistic LMS step treats the weight estimate as a Gaussian belief
whose scalar variance is tracked alongside the weights.  Each update uses
the step size

    alpha(i) = (var(i-1) + q) / ((var(i-1) + q) ||x||^2 + r)

where q is the assumed random-walk variance of the true system and r the
assumed observation-noise variance, followed by the variance contraction

    var(i) = (1 - alpha(i) ||x||^2 / L) (var(i-1) + q),

with L the filter length.  The step size starts near the normalized-LMS
value 1/||x||^2 and anneals as the belief sharpens, which is what blunts
late impulsive hits.  ``variance_sign="minus"`` flips the sign of q inside
the bracketed terms (not in the numerator of alpha); it exists only to
reproduce that alternate convention and degenerates for q > var.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import CombinationMatrix, NetworkTopology

# Lower clamp for the tracked variance; keeps alpha positive forever.
VARIANCE_FLOOR = 1e-12

SIGN_PLUS = "plus"
SIGN_MINUS = "minus"

DPLMS = "DPLMS"
DLMS = "DLMS"
DSE_LMS = "DSE-LMS"

#: Algorithms the simulator can execute.
SIMULATABLE = (DPLMS, DLMS, DSE_LMS)

#: Algorithms with per-iteration operation counts (the two extra entries are
#: published counts of algorithms this package does not simulate).
COUNTABLE = (DPLMS, DLMS, DSE_LMS, "DLLAD", "DRVSSLMS")


def normalize_algorithm(name: str) -> str:
    key = str(name).strip().upper().replace("_", "-")
    if key == "DSELMS":
        key = DSE_LMS
    if key in COUNTABLE:
        return key
    raise ValueError(f"unknown algorithm {name!r}")


@dataclass
class NodeFilterState:
    """Everything one node carries between iterations.

    ``weights`` is the committed estimate, ``intermediate`` the
    post-adaptation estimate awaiting combination, ``posterior_variance``
    the tracked belief variance of the probabilistic step.
    """

    weights: np.ndarray
    posterior_variance: float = 1.0
    intermediate: np.ndarray = None
    process_noise_var: float = 0.0
    observation_noise_var: float = 0.0
    variance_sign: str = SIGN_PLUS

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if self.intermediate is None:
            self.intermediate = self.weights.copy()
        else:
            self.intermediate = np.asarray(self.intermediate, dtype=float)
        if self.posterior_variance <= 0:
            raise ValueError("posterior_variance must be positive")
        if self.process_noise_var < 0 or self.observation_noise_var < 0:
            raise ValueError("noise variances must be nonnegative")
        if self.variance_sign not in (SIGN_PLUS, SIGN_MINUS):
            raise ValueError("variance_sign must be 'plus' or 'minus'")


def initial_states(
    node_count: int,
    length: int,
    posterior_variance: float = 1.0,
    process_noise_var=0.0,
    observation_noise_var=0.0,
    variance_sign: str = SIGN_PLUS,
) -> list[NodeFilterState]:
    """Zero-initialized per-node states (the conventional start)."""
    q = np.broadcast_to(np.asarray(process_noise_var, float), (node_count,))
    r = np.broadcast_to(np.asarray(observation_noise_var, float), (node_count,))
    return [
        NodeFilterState(
            weights=np.zeros(length),
            posterior_variance=posterior_variance,
            process_noise_var=float(q[n]),
            observation_noise_var=float(r[n]),
            variance_sign=variance_sign,
        )
        for n in range(node_count)
    ]


def _bracket_base(variance_prev, process_noise_var, variance_sign):
    if variance_sign == SIGN_MINUS:
        return variance_prev - process_noise_var
    return variance_prev + process_noise_var


def plms_alpha(
    variance_prev: float,
    process_noise_var: float,
    observation_noise_var: float,
    x: np.ndarray,
    variance_sign: str = SIGN_PLUS,
) -> float:
    """Variable step size of the probabilistic LMS update."""
    norm_sq = float(np.asarray(x, float) @ np.asarray(x, float))
    predicted = variance_prev + process_noise_var
    denom = _bracket_base(variance_prev, process_noise_var, variance_sign) * norm_sq
    denom += observation_noise_var
    if denom == 0.0:
        raise ValueError("step-size denominator is zero (zero regressor and zero "
                         "observation-noise variance)")
    return predicted / denom


def plms_variance_update(
    variance_prev: float,
    process_noise_var: float,
    alpha: float,
    x: np.ndarray,
    length: int,
    variance_sign: str = SIGN_PLUS,
) -> float:
    """Belief-variance contraction after one update, clamped from below."""
    norm_sq = float(np.asarray(x, float) @ np.asarray(x, float))
    base = _bracket_base(variance_prev, process_noise_var, variance_sign)
    return max((1.0 - alpha * norm_sq / length) * base, VARIANCE_FLOOR)


def plms_step(state: NodeFilterState, x, d: float, tau: float) -> NodeFilterState:
    """Standalone probabilistic LMS update of a single filter.

    Returns a new state with refreshed weights and variance; ``tau`` scales
    the step (1 recovers the plain recursion).
    """
    x = np.asarray(x, dtype=float)
    alpha = plms_alpha(
        state.posterior_variance,
        state.process_noise_var,
        state.observation_noise_var,
        x,
        state.variance_sign,
    )
    err = d - float(x @ state.weights)
    weights = state.weights + tau * alpha * err * x
    variance = plms_variance_update(
        state.posterior_variance,
        state.process_noise_var,
        alpha,
        x,
        x.size,
        state.variance_sign,
    )
    return replace(
        state, weights=weights, intermediate=weights.copy(), posterior_variance=variance
    )


def dplms_adapt(state: NodeFilterState, x, d: float, mu: float) -> NodeFilterState:
    """Adaptation half of the diffusion probabilistic LMS at one node.

    The intermediate estimate absorbs the probabilistic step scaled by the
    network step size ``mu``; committed weights stay untouched until the
    combination half of the iteration.
    """
    x = np.asarray(x, dtype=float)
    alpha = plms_alpha(
        state.posterior_variance,
        state.process_noise_var,
        state.observation_noise_var,
        x,
        state.variance_sign,
    )
    err = d - float(x @ state.weights)
    phi = state.weights + mu * alpha * err * x
    variance = plms_variance_update(
        state.posterior_variance,
        state.process_noise_var,
        alpha,
        x,
        x.size,
        state.variance_sign,
    )
    return replace(state, intermediate=phi, posterior_variance=variance)


def dlms_adapt(state: NodeFilterState, x, d: float, mu: float) -> NodeFilterState:
    """Adaptation half of diffusion LMS (fixed step size)."""
    x = np.asarray(x, dtype=float)
    err = d - float(x @ state.weights)
    return replace(state, intermediate=state.weights + mu * err * x)


def dse_lms_adapt(state: NodeFilterState, x, d: float, mu: float) -> NodeFilterState:
    """Adaptation half of diffusion sign-error LMS; sign(0) counts as 0."""
    x = np.asarray(x, dtype=float)
    err = d - float(x @ state.weights)
    return replace(state, intermediate=state.weights + mu * np.sign(err) * x)


_ADAPT = {DPLMS: dplms_adapt, DLMS: dlms_adapt, DSE_LMS: dse_lms_adapt}


def diffusion_combine(
    intermediates: np.ndarray, matrix: CombinationMatrix, node: int
) -> np.ndarray:
    """Combination half: the weighted neighborhood average of intermediate
    estimates for one node.  ``intermediates`` stacks one row per node."""
    phis = np.asarray(intermediates, dtype=float)
    return matrix.weights[:, node] @ phis


def run_network_iteration(
    states: list[NodeFilterState],
    algorithm: str,
    topology: NetworkTopology,
    matrix: CombinationMatrix,
    regressors: np.ndarray,
    desired: np.ndarray,
    mu: float,
    order=None,
    counter: "OpCounter | None" = None,
) -> list[NodeFilterState]:
    """One synchronous adapt-then-combine pass over the whole network.

    ``regressors`` has one row per node, ``desired`` one measurement per
    node.  ``order`` optionally permutes the per-node processing sequence;
    because adaptation reads only previous-iteration weights and each
    combination sums its neighborhood in index order, any order yields
    bit-identical states.
    """
    algorithm = normalize_algorithm(algorithm)
    if algorithm not in SIMULATABLE:
        raise ValueError(f"{algorithm} has published costs only; it cannot be run")
    n = len(states)
    if matrix.node_count != n or topology.node_count != n:
        raise ValueError("states, topology, and matrix disagree on node count")
    regressors = np.asarray(regressors, dtype=float)
    desired = np.asarray(desired, dtype=float)
    adapt = _ADAPT[algorithm]
    if order is None:
        order = range(n)
    new_states: list[NodeFilterState | None] = [None] * n
    for node in order:
        new_states[node] = adapt(states[node], regressors[node], float(desired[node]), mu)
    phis = np.stack([s.intermediate for s in new_states])
    for node in order:
        combined = np.zeros(regressors.shape[1])
        for l in topology.neighborhood(node):
            combined += matrix.weights[l, node] * phis[l]
        new_states[node].weights = combined
    if counter is not None:
        m = regressors.shape[1]
        _charge_adapt(counter, algorithm, m, n)
        _charge_combine(counter, m, n)
    return new_states


# ---------------------------------------------------------------------------
# Vectorized whole-network engine used by the experiment harness.


@dataclass
class NetworkState:
    """Array form of the per-node states: one row per node."""

    weights: np.ndarray    # (N, M)
    variances: np.ndarray  # (N,)

    @classmethod
    def zeros(cls, node_count: int, length: int, posterior_variance: float = 1.0):
        return cls(
            np.zeros((node_count, length)),
            np.full(node_count, float(posterior_variance)),
        )


@dataclass
class FilterHyperparams:
    """Assumed model variances handed to the probabilistic step."""

    process_noise_var: np.ndarray      # (N,)
    observation_noise_var: np.ndarray  # (N,)
    variance_sign: str = SIGN_PLUS

    @classmethod
    def broadcast(cls, node_count, process_noise_var, observation_noise_var,
                  variance_sign=SIGN_PLUS):
        return cls(
            np.broadcast_to(np.asarray(process_noise_var, float), (node_count,)).copy(),
            np.broadcast_to(np.asarray(observation_noise_var, float), (node_count,)).copy(),
            variance_sign,
        )


def adapt_all(
    state: NetworkState,
    regressors: np.ndarray,
    desired: np.ndarray,
    algorithm: str,
    mu: float,
    hyper: FilterHyperparams | None = None,
    frozen_alpha: np.ndarray | None = None,
    counter: "OpCounter | None" = None,
):
    """Vectorized adaptation across all nodes.

    Returns ``(phi, new_variances, alpha)``; for the fixed-step baselines the
    variances pass through and alpha is None.  ``frozen_alpha`` pins the
    probabilistic step size (used by the mean-recursion analysis), skipping
    the variance update.
    """
    algorithm = normalize_algorithm(algorithm)
    if algorithm not in SIMULATABLE:
        raise ValueError(f"{algorithm} has published costs only; it cannot be run")
    w, var = state.weights, state.variances
    n, m = w.shape
    err = desired - np.einsum("nm,nm->n", regressors, w)
    if counter is not None:
        _charge_adapt(counter, algorithm, m, n)
    if algorithm == DLMS:
        phi = w + (mu * err)[:, None] * regressors
        return phi, var, None
    if algorithm == DSE_LMS:
        phi = w + mu * np.sign(err)[:, None] * regressors
        return phi, var, None
    norm_sq = np.einsum("nm,nm->n", regressors, regressors)
    if frozen_alpha is not None:
        alpha = np.asarray(frozen_alpha, dtype=float)
        new_var = var
    else:
        if hyper is None:
            raise ValueError("the probabilistic step needs hyperparameters")
        predicted = var + hyper.process_noise_var
        if hyper.variance_sign == SIGN_MINUS:
            base = var - hyper.process_noise_var
        else:
            base = predicted
        denom = base * norm_sq + hyper.observation_noise_var
        if (denom == 0.0).any():
            raise ValueError("step-size denominator is zero at some node")
        alpha = predicted / denom
        new_var = np.maximum((1.0 - alpha * norm_sq / m) * base, VARIANCE_FLOOR)
    phi = w + (mu * alpha * err)[:, None] * regressors
    return phi, new_var, alpha


def combine_all(
    phi: np.ndarray, matrix: CombinationMatrix, counter: "OpCounter | None" = None
) -> np.ndarray:
    """Vectorized combination: every node averages its neighborhood."""
    if counter is not None:
        n, m = phi.shape
        _charge_combine(counter, m, n)
    return matrix.weights.T @ phi


# ---------------------------------------------------------------------------
# Per-iteration operation counts.


@dataclass
class OpCount:
    """Arithmetic cost of one network iteration (adaptation + combination)."""

    multiplications: int
    additions: int
    absolutes: int = 0
    signs: int = 0
    lower_bound: bool = False

    def __iter__(self):
        yield from (self.multiplications, self.additions, self.absolutes, self.signs)


@dataclass
class OpCounter:
    """Running tally an instrumented kernel charges while it executes."""

    multiplications: int = 0
    additions: int = 0
    absolutes: int = 0
    signs: int = 0

    def as_tuple(self):
        return (self.multiplications, self.additions, self.absolutes, self.signs)


# Cost model charged by the instrumented kernels.  Adaptation carries a
# per-node block plus a once-per-iteration remainder; combination is charged
# network-wide by the combination kernel.  op_counts() aggregates the same
# entries, so the closed forms and the instrumented tallies cannot drift
# apart without a test noticing.
_ADAPT_COST = {
    # algorithm: (per-node (mul, add, abs, sgn), per-iteration (mul, add))
    DPLMS: ((lambda m: (2 * m, 3 * m - 1, 0, 0)), (lambda m: (m, 0))),
    DSE_LMS: ((lambda m: (2 * m + 1, 3 * m - 1, 0, 1)), (lambda m: (m, 0))),
    DLMS: ((lambda m: (2 * m + 1, 2 * m, 0, 0)), (lambda m: (0, 0))),
}


def _charge_adapt(counter: OpCounter, algorithm: str, m: int, n: int):
    per_node, per_iter = _ADAPT_COST[algorithm]
    mul, add, absv, sgn = per_node(m)
    counter.multiplications += mul * n
    counter.additions += add * n
    counter.absolutes += absv * n
    counter.signs += sgn * n
    mul, add = per_iter(m)
    counter.multiplications += mul
    counter.additions += add


def _charge_combine(counter: OpCounter, m: int, n: int):
    counter.multiplications += n * m
    counter.additions += (n - 1) * m


def op_counts(algorithm: str, filter_length: int, node_count: int) -> OpCount:
    """Closed-form per-iteration operation counts for a whole network.

    Counts cover the weight recursions (adaptation and combination) of each
    algorithm; the step-size bookkeeping of the variable-step algorithms is
    excluded by convention, and the DRVSSLMS multiplication counts are lower
    bounds.
    """
    algorithm = normalize_algorithm(algorithm)
    m, n = int(filter_length), int(node_count)
    if m < 1 or n < 1:
        raise ValueError("filter_length and node_count must be positive")
    if algorithm in _ADAPT_COST:
        c = OpCounter()
        _charge_adapt(c, algorithm, m, n)
        _charge_combine(c, m, n)
        return OpCount(*c.as_tuple())
    if algorithm == "DLLAD":
        base = op_counts(DPLMS, m, n)
        return OpCount(base.multiplications, base.additions, absolutes=n)
    # DRVSSLMS: two adaptation passes, each a lower bound on multiplications.
    return OpCount(
        2 * ((3 * m + 1) * n + m) + n * m,
        2 * (3 * m - 1) * n + (n - 1) * m,
        signs=n,
        lower_bound=True,
    )
