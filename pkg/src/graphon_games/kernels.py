"""Graphon kernel models and pointwise evaluation.

A graphon is a symmetric measurable function W : [0,1]^2 -> [0,1]. This module
defines the four supported kernel families (constant, block, minmax, grid step
function), their pointwise evaluation and the per-family regularity metadata
(piecewise Lipschitz constant L and interior breakpoint count Omega) used by
the sampling-deviation bounds.

Community and grid cells are laid out contiguously left to right. All cells
are right-open except the last, which is closed at 1, so every x in [0,1]
belongs to exactly one cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphonSpec",
    "erdos_renyi",
    "sbm",
    "minmax",
    "grid_kernel",
    "step_graphon_from_matrix",
    "evaluate",
    "lipschitz_metadata",
    "to_json",
    "from_json",
]

_MASS_TOL = 1e-9


def _validate_symmetric_unit(mat, name):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {mat.shape}")
    if not np.array_equal(mat, mat.T):
        raise ValueError(f"{name} must be symmetric")
    if np.any(mat < 0.0) or np.any(mat > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return mat


def _validate_sbm(Q, w):
    Q = _validate_symmetric_unit(Q, "Q")
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] != Q.shape[0]:
        raise ValueError("w must be a vector matching the block count of Q")
    if np.any(w <= 0.0):
        raise ValueError("all community masses must be positive")
    if abs(w.sum() - 1.0) > _MASS_TOL:
        raise ValueError(f"community masses must sum to 1, got {w.sum()!r}")
    return Q, w


@dataclass(frozen=True, eq=False)
class GraphonSpec:
    """Declarative graphon model.

    ``kind`` is one of ``"er"``, ``"sbm"``, ``"minmax"``, ``"grid"``. Only the
    fields relevant to the kind are set; use the module-level constructors
    rather than instantiating directly. Instances are immutable and safe to
    share across workers.
    """

    kind: str
    p: float | None = None
    Q: np.ndarray | None = None
    w: np.ndarray | None = None
    values: np.ndarray | None = None

    @property
    def lipschitz_L(self) -> float:
        return 2.0 if self.kind == "minmax" else 0.0

    @property
    def block_count_Omega(self) -> int:
        if self.kind == "sbm":
            return self.Q.shape[0] - 1
        if self.kind == "grid":
            return self.values.shape[0] - 1
        return 0

    def __repr__(self):
        if self.kind == "er":
            return f"GraphonSpec(er, p={self.p})"
        if self.kind == "sbm":
            return f"GraphonSpec(sbm, K={self.Q.shape[0]})"
        if self.kind == "grid":
            return f"GraphonSpec(grid, M={self.values.shape[0]})"
        return "GraphonSpec(minmax)"


def erdos_renyi(p: float) -> GraphonSpec:
    """Constant kernel W(x, y) = p."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    return GraphonSpec(kind="er", p=p)


def sbm(Q, w) -> GraphonSpec:
    """Block-constant kernel with K communities.

    ``Q[k, l]`` is the connection probability between communities k and l,
    ``w[k]`` the mass of community k. Community k occupies the interval
    ``[sum(w[:k]), sum(w[:k+1]))``.
    """
    Q, w = _validate_sbm(Q, w)
    return GraphonSpec(kind="sbm", Q=Q, w=w)


def minmax() -> GraphonSpec:
    """Distance-decay kernel W(x, y) = min(x, y) * (1 - max(x, y))."""
    return GraphonSpec(kind="minmax")


def grid_kernel(values) -> GraphonSpec:
    """Step-function kernel constant on the uniform M x M grid of [0,1]^2."""
    values = _validate_symmetric_unit(values, "values")
    return GraphonSpec(kind="grid", values=values)


def step_graphon_from_matrix(P) -> GraphonSpec:
    """Embed an N x N symmetric matrix in [0,1] as a step-function graphon.

    Cell (i, j) of the uniform N-partition carries the constant value P[i, j],
    so evaluation at any (x, y) with x in cell i and y in cell j returns
    P[i, j]. This is the exact kernel counterpart of a finite network.
    """
    return grid_kernel(P)


def _cell_index(x, n_cells):
    # Right-open cells, last cell closed at 1: floor(x * n) clipped to n - 1.
    idx = np.floor(np.asarray(x) * n_cells).astype(int)
    return np.minimum(idx, n_cells - 1)


def _sbm_block_index(x, w):
    bounds = np.concatenate(([0.0], np.cumsum(w)))
    bounds[-1] = 1.0  # guard against cumsum rounding below 1
    idx = np.searchsorted(bounds, np.asarray(x), side="right") - 1
    return np.clip(idx, 0, len(w) - 1)


def evaluate(spec: GraphonSpec, x, y):
    """Evaluate W(x, y). Accepts scalars or broadcasting arrays in [0, 1].

    Evaluation is exactly symmetric: evaluate(spec, x, y) == evaluate(spec, y, x)
    bitwise, for every kernel family.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    for name, arr in (("x", xa), ("y", ya)):
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError(f"coordinate {name} outside [0, 1]")

    if spec.kind == "er":
        out = np.broadcast_to(np.float64(spec.p), np.broadcast_shapes(xa.shape, ya.shape)).copy()
    elif spec.kind == "minmax":
        out = np.minimum(xa, ya) * (1.0 - np.maximum(xa, ya))
    elif spec.kind == "sbm":
        out = spec.Q[_sbm_block_index(xa, spec.w), _sbm_block_index(ya, spec.w)]
    elif spec.kind == "grid":
        n = spec.values.shape[0]
        out = spec.values[_cell_index(xa, n), _cell_index(ya, n)]
    else:  # pragma: no cover - constructors forbid this
        raise ValueError(f"unknown graphon kind {spec.kind!r}")

    if np.isscalar(x) and np.isscalar(y):
        return float(out)
    return out


def lipschitz_metadata(spec: GraphonSpec) -> tuple[float, int]:
    """Return (L, Omega): the piecewise Lipschitz constant and breakpoint count.

    Constant and step-function kernels are flat within cells (L = 0, Omega =
    number of interior cell boundaries); the minmax kernel is globally
    Lipschitz with constant 2 (Omega = 0).
    """
    return spec.lipschitz_L, spec.block_count_Omega


def to_json(spec: GraphonSpec) -> dict:
    """Serialize to a plain JSON document."""
    if spec.kind == "er":
        return {"kind": "er", "p": spec.p}
    if spec.kind == "sbm":
        return {"kind": "sbm", "Q": spec.Q.tolist(), "w": spec.w.tolist()}
    if spec.kind == "grid":
        return {"kind": "grid", "values": spec.values.tolist()}
    return {"kind": "minmax"}


def from_json(doc: dict) -> GraphonSpec:
    """Rebuild a GraphonSpec from its JSON document."""
    kind = doc.get("kind")
    if kind == "er":
        return erdos_renyi(doc["p"])
    if kind == "sbm":
        return sbm(doc["Q"], doc["w"])
    if kind == "minmax":
        return minmax()
    if kind == "grid":
        return grid_kernel(doc["values"])
    raise ValueError(f"unknown graphon kind {kind!r}")
