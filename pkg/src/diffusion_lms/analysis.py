"""Performance metrics and mean-stability analysis of the diffusion network.

The mean weight-error of the synchronous adapt-then-combine network with a
frozen probabilistic step size evolves as a linear recursion

    E[err(i)] = B E[err(i-1)],
    B = (A^T kron I_M) (I - mu blockdiag{D_1, ..., D_N}),
    D_n = sum_l alpha_l c_{l,n} R_l,

with A the combination weights, C the adaptation weights, alpha the frozen
per-node step sizes, and R_l the regressor covariance of node l.  The network
is mean-stable whenever mu < 2 / max_n rho(D_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import CombinationMatrix

POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_CAP = 10_000


def msd(true_weights: np.ndarray, weights: np.ndarray) -> float:
    """Network mean-square deviation: the squared weight-error norm averaged
    over nodes.  ``weights`` stacks one row per node."""
    w_o = np.asarray(true_weights, dtype=float)
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w.shape[1] != w_o.size:
        raise ValueError("weight length does not match the true system")
    diff = w - w_o[None, :]
    return float(np.mean(np.einsum("nm,nm->n", diff, diff)))


@dataclass
class MsdCurve:
    """Ensemble-averaged MSD trajectory; ``values`` is linear, dB derived."""

    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("curve values must be one-dimensional")

    def __len__(self):
        return self.values.size

    @property
    def values_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.values)

    def steady_state_db(self, tail: int = 200) -> float:
        """Mean dB level over the final ``tail`` iterations."""
        tail = min(tail, len(self))
        return float(np.mean(self.values_db[-tail:]))

    def write_csv(self, path) -> None:
        """Serialize as ``iteration,msd_linear,msd_db`` rows.

        Floats are written with shortest round-trip formatting, so identical
        curves serialize to identical bytes.
        """
        db = self.values_db
        with open(path, "w", newline="") as fh:
            fh.write("iteration,msd_linear,msd_db\n")
            for i, (lin, d) in enumerate(zip(self.values, db)):
                fh.write(f"{i},{float(lin)!r},{float(d)!r}\n")


@dataclass(frozen=True, eq=False)
class MeanRecursionModel:
    """Ingredients of the mean weight-error recursion.

    ``combination`` holds the combination weights A, ``adaptation_weights``
    the measurement-sharing weights C (both column-stochastic over
    neighborhoods), ``alpha`` the frozen per-node step sizes, and
    ``input_covariances`` one M-by-M regressor covariance per node.
    """

    combination: np.ndarray
    adaptation_weights: np.ndarray
    step_size: float
    alpha: np.ndarray
    input_covariances: np.ndarray

    def __post_init__(self):
        a = _weights_array(self.combination)
        c = _weights_array(self.adaptation_weights)
        al = np.asarray(self.alpha, dtype=float)
        covs = np.asarray(self.input_covariances, dtype=float)
        n = a.shape[0]
        if c.shape != (n, n):
            raise ValueError("adaptation weights must match the combination shape")
        if al.shape != (n,):
            raise ValueError("alpha must hold one step size per node")
        if covs.ndim != 3 or covs.shape[0] != n or covs.shape[1] != covs.shape[2]:
            raise ValueError("input_covariances must have shape (N, M, M)")
        for name, val in (("combination", a), ("adaptation_weights", c),
                          ("alpha", al), ("input_covariances", covs)):
            object.__setattr__(self, name, val)
            val.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.combination.shape[0]

    @property
    def length(self) -> int:
        return self.input_covariances.shape[1]

    def update_blocks(self) -> np.ndarray:
        """The per-node matrices D_n = sum_l alpha_l c_{l,n} R_l, shape (N, M, M)."""
        weighted = self.alpha[:, None] * self.adaptation_weights  # (l, n)
        return np.einsum("ln,lij->nij", weighted, self.input_covariances)


def _weights_array(value) -> np.ndarray:
    if isinstance(value, CombinationMatrix):
        return np.array(value.weights)
    return np.asarray(value, dtype=float)


def mean_error_matrix(model: MeanRecursionModel) -> np.ndarray:
    """The MN-by-MN transition matrix B of the mean weight-error recursion."""
    n, m = model.node_count, model.length
    blocks = model.update_blocks()
    inner = np.eye(n * m)
    for node in range(n):
        s = slice(node * m, (node + 1) * m)
        inner[s, s] -= model.step_size * blocks[node]
    return np.kron(model.combination.T, np.eye(m)) @ inner


def spectral_radius(
    matrix: np.ndarray,
    tol: float = POWER_ITERATION_TOL,
    max_iterations: int = POWER_ITERATION_CAP,
    seed: int = 0,
) -> float:
    """Largest eigenvalue magnitude via power iteration.

    Deterministic for a fixed ``seed`` (which only sets the start vector).
    Convergence is declared when the residual ||M v - lambda v|| drops below
    ``tol * max(1, |lambda|)``; exceeding ``max_iterations`` raises.
    """
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(mat.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(max_iterations):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        lam = float(v @ w)  # Rayleigh-style estimate, keeps the sign
        if np.linalg.norm(w - lam * v) <= tol * max(1.0, abs(lam)):
            return abs(lam)
        v = w / norm
    raise RuntimeError(
        f"power iteration did not converge within {max_iterations} iterations"
    )


def _symmetric_radius(matrix: np.ndarray) -> float:
    """Spectral radius of a symmetric matrix via its extreme eigenvalues."""
    eigs = np.linalg.eigvalsh(matrix)
    return max(abs(float(eigs[0])), abs(float(eigs[-1])))


def stability_bound(
    alpha: np.ndarray,
    adaptation_weights,
    input_covariances: np.ndarray,
    literal_diagonal: bool = False,
) -> float:
    """Largest mean-stable step size 2 / max_n rho(D_n).

    ``alpha`` is a frozen per-node step-size snapshot, ``adaptation_weights``
    the column-stochastic measurement-sharing matrix, ``input_covariances``
    one symmetric positive-definite matrix per node.  ``literal_diagonal``
    switches to the variant that weights each covariance by the self-weight
    c_{l,l} only, collapsing the maximum over nodes to a single matrix.
    """
    al = np.asarray(alpha, dtype=float)
    c = _weights_array(adaptation_weights)
    covs = np.asarray(input_covariances, dtype=float)
    if (al <= 0).any():
        raise ValueError("alpha entries must be positive")
    if covs.ndim != 3 or covs.shape[1] != covs.shape[2]:
        raise ValueError("input_covariances must have shape (N, M, M)")
    for r in covs:
        if not np.allclose(r, r.T, atol=1e-10):
            raise ValueError("input covariances must be symmetric")
        if np.linalg.eigvalsh(r)[0] <= 0.0:
            raise ValueError("input covariances must be positive definite")
    # The blocks are symmetric, so use an exact eigensolver here: power
    # iteration stalls when the two leading eigenvalues nearly tie, which
    # diagonal per-tap covariances hit routinely.
    if literal_diagonal:
        d = np.einsum("l,lij->ij", al * np.diagonal(c), covs)
        worst = _symmetric_radius(d)
    else:
        weighted = al[:, None] * c
        blocks = np.einsum("ln,lij->nij", weighted, covs)
        worst = max(_symmetric_radius(b) for b in blocks)
    if worst == 0.0:
        return math.inf
    return 2.0 / worst
