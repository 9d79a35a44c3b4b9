"""Sensor-network topologies and combination weights for diffusion strategies.

Graphs are undirected and stored as boolean adjacency matrices with a zero
diagonal; every node is nevertheless a member of its own neighborhood, which
is the convention the combination step relies on.  Both generators keep
retrying until they produce a connected graph, so downstream code can assume
connectivity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Retry budget shared by both generators before giving up on connectivity.
MAX_CONNECTIVITY_ATTEMPTS = 1000

# Column sums of a combination matrix must match 1 to this tolerance.
COLUMN_SUM_TOL = 1e-12


class TopologyGenerationError(RuntimeError):
    """No connected graph was found within the retry budget."""


def _is_connected(adjacency: np.ndarray) -> bool:
    # Breadth-first sweep from node 0 using boolean frontiers.
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    frontier = np.zeros(n, dtype=bool)
    seen[0] = frontier[0] = True
    while frontier.any():
        frontier = adjacency[frontier].any(axis=0) & ~seen
        seen |= frontier
    return bool(seen.all())


@dataclass(frozen=True, eq=False)
class NetworkTopology:
    """Undirected graph over ``node_count`` sensors.

    Parameters
    ----------
    node_count : int
        Number of nodes N.
    adjacency : ndarray of bool, shape (N, N)
        Symmetric adjacency with a zero diagonal.  Self-membership of each
        neighborhood is implied, not stored.
    coordinates : ndarray, shape (N, 2), optional
        Unit-square positions; only present for geometric graphs.
    """

    node_count: int
    adjacency: np.ndarray
    coordinates: np.ndarray | None = None

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.shape != (self.node_count, self.node_count):
            raise ValueError("adjacency shape does not match node_count")
        if adj.diagonal().any():
            raise ValueError("adjacency diagonal must be zero")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        object.__setattr__(self, "adjacency", adj)
        adj.setflags(write=False)
        if self.coordinates is not None:
            coords = np.asarray(self.coordinates, dtype=float)
            if coords.shape != (self.node_count, 2):
                raise ValueError("coordinates must have shape (node_count, 2)")
            object.__setattr__(self, "coordinates", coords)
            coords.setflags(write=False)

    def neighborhood(self, node: int) -> np.ndarray:
        """Sorted neighbor indices of ``node``, including ``node`` itself."""
        mask = self.adjacency[:, node].copy()
        mask[node] = True
        return np.flatnonzero(mask)

    @property
    def degrees(self) -> np.ndarray:
        """Edge count per node (self-membership not counted)."""
        return self.adjacency.sum(axis=0)

    def is_connected(self) -> bool:
        return _is_connected(self.adjacency)

    def edge_list(self) -> list[tuple[int, int]]:
        """Edges as sorted (l, n) pairs with l < n."""
        upper = np.triu(self.adjacency, k=1)
        return [(int(l), int(n)) for l, n in zip(*np.nonzero(upper))]

    def to_json_dict(self) -> dict:
        doc = {
            "node_count": self.node_count,
            "edges": [[l, n] for l, n in self.edge_list()],
        }
        if self.coordinates is not None:
            doc["coordinates"] = [[float(x), float(y)] for x, y in self.coordinates]
        return doc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)


@dataclass(frozen=True, eq=False)
class CombinationMatrix:
    """Nonnegative combination weights; ``weights[l, n]`` scales the share of
    node l's intermediate estimate in node n's combination.  Each column sums
    to one over the neighborhood of the column's node."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if (w < 0).any():
            raise ValueError("combination weights must be nonnegative")
        cols = w.sum(axis=0)
        if np.max(np.abs(cols - 1.0)) > COLUMN_SUM_TOL:
            raise ValueError("combination matrix columns must each sum to 1")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.weights.shape[0]

    def check_support(self, topology: NetworkTopology) -> None:
        """Raise if any weight lies outside the topology's neighborhoods."""
        allowed = topology.adjacency | np.eye(topology.node_count, dtype=bool)
        if (self.weights[~allowed] != 0).any():
            raise ValueError("combination weights outside neighborhood support")


def gen_random_topology(node_count: int, edge_probability: float, seed) -> NetworkTopology:
    """Connected Bernoulli random graph: each pair is linked independently
    with probability ``edge_probability``; regenerates until connected.

    Raises
    ------
    TopologyGenerationError
        If no connected draw occurs within MAX_CONNECTIVITY_ATTEMPTS.
    """
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    if not 0.0 <= edge_probability <= 1.0:
        raise ValueError("edge_probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(node_count, k=1)
    for _ in range(MAX_CONNECTIVITY_ATTEMPTS):
        mask = rng.random(rows.size) < edge_probability
        adj = np.zeros((node_count, node_count), dtype=bool)
        adj[rows[mask], cols[mask]] = True
        adj |= adj.T
        if _is_connected(adj):
            return NetworkTopology(node_count, adj)
    raise TopologyGenerationError(
        f"no connected graph with edge probability {edge_probability} "
        f"after {MAX_CONNECTIVITY_ATTEMPTS} attempts"
    )


def gen_geometric_topology(node_count: int, radius: float, seed) -> NetworkTopology:
    """Connected random geometric graph on the unit square.

    Nodes are placed uniformly; two nodes are linked when their Euclidean
    distance is at most ``radius``.  Placements are redrawn until the graph
    is connected.
    """
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_CONNECTIVITY_ATTEMPTS):
        coords = rng.random((node_count, 2))
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=-1))
        adj = (dist <= radius) & ~np.eye(node_count, dtype=bool)
        if _is_connected(adj):
            return NetworkTopology(node_count, adj, coordinates=coords)
    raise TopologyGenerationError(
        f"no connected geometric graph with radius {radius} "
        f"after {MAX_CONNECTIVITY_ATTEMPTS} attempts"
    )


def uniform_combination(topology: NetworkTopology) -> CombinationMatrix:
    """Uniform averaging rule: every member of a node's neighborhood
    (itself included) receives weight 1 / |neighborhood|."""
    members = topology.adjacency | np.eye(topology.node_count, dtype=bool)
    counts = members.sum(axis=0)
    return CombinationMatrix(members.astype(float) / counts[None, :])
