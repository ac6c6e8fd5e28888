"""Two-stage network sampling from a graphon.

Stage one draws N agent types uniformly from [0,1] and sorts them (sorting is
a relabeling of agents, so it loses no generality and keeps plots comparable
across population sizes). Stage two evaluates the kernel at type pairs to get
the weighted network, and optionally draws independent Bernoulli links to get
the 0-1 network.

All randomness flows through explicit seeds handed to numpy's default
generator. Bernoulli draws consume the stream in row-major upper-triangle
order (pairs (0,1), (0,2), ..., (1,2), ...), so a port using the same
generator reproduces networks bitwise.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .kernels import GraphonSpec, evaluate

__all__ = [
    "TypeVector",
    "WeightedNetwork",
    "SimpleNetwork",
    "sample_types",
    "weighted_network",
    "simple_network",
    "network_to_json",
    "network_from_json",
    "write_edge_csv",
]


@dataclass(frozen=True, eq=False)
class TypeVector:
    """Sorted vector of agent types in [0,1] plus the seed that produced it."""

    types: np.ndarray
    seed: object = None

    def __post_init__(self):
        object.__setattr__(self, "types", np.asarray(self.types, dtype=float).reshape(-1))

    @property
    def N(self) -> int:
        return self.types.shape[0]


@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    """Kernel values at type pairs: P[i, j] = W(t_i, t_j), zero diagonal."""

    P: np.ndarray
    types: TypeVector

    @property
    def N(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True, eq=False)
class SimpleNetwork:
    """0-1 adjacency matrix drawn edge-wise from a weighted network."""

    A: np.ndarray
    types: TypeVector
    seed: object = None

    @property
    def N(self) -> int:
        return self.A.shape[0]


def sample_types(N: int, seed) -> TypeVector:
    """Draw N iid Uniform[0,1] types and sort them ascending."""
    if N < 1:
        raise ValueError(f"population size must be positive, got {N}")
    rng = np.random.default_rng(seed)
    return TypeVector(types=np.sort(rng.random(N)), seed=seed)


def weighted_network(spec: GraphonSpec, types: TypeVector) -> WeightedNetwork:
    """Evaluate the kernel at all type pairs; the diagonal is zeroed."""
    t = types.types
    P = np.asarray(evaluate(spec, t[:, None], t[None, :]), dtype=float)
    np.fill_diagonal(P, 0.0)
    return WeightedNetwork(P=P, types=types)


def simple_network(Pw: WeightedNetwork, seed) -> SimpleNetwork:
    """Draw each edge i < j independently as Bernoulli(P[i, j])."""
    N = Pw.N
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(N, k=1)
    draws = rng.random(iu.shape[0])
    A = np.zeros((N, N))
    edges = (draws < Pw.P[iu, ju]).astype(float)
    A[iu, ju] = edges
    A[ju, iu] = edges
    return SimpleNetwork(A=A, types=Pw.types, seed=seed)


def network_to_json(matrix: np.ndarray, types: TypeVector) -> dict:
    return {"types": types.types.tolist(), "matrix": np.asarray(matrix).tolist()}


def network_from_json(doc: dict) -> tuple[np.ndarray, TypeVector]:
    matrix = np.asarray(doc["matrix"], dtype=float)
    types = TypeVector(types=np.asarray(doc["types"], dtype=float))
    return matrix, types


def write_edge_csv(matrix: np.ndarray, path) -> None:
    """Write the upper triangle as (i, j, weight) rows, zero edges omitted."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight"])
        iu, ju = np.triu_indices(matrix.shape[0], k=1)
        for i, j in zip(iu, ju):
            wij = matrix[i, j]
            if wij != 0.0:
                writer.writerow([int(i), int(j), repr(float(wij))])


def load_network_json(path) -> tuple[np.ndarray, TypeVector]:
    with open(path) as fh:
        return network_from_json(json.load(fh))
