"""Discretized kernel operators and their spectra.

The integral operator f -> int W(., y) f(y) dy is discretized by midpoint
collocation on the uniform M-grid: the kernel is sampled at cell midpoints
and the quadrature weight is 1/M. This preserves symmetry exactly and is
exact for step-function kernels aligned with the grid.

Functions on the grid are step functions; their L2 norm is
sqrt(mean(values**2)), so a vector with unit L2 norm has Euclidean norm
sqrt(M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IterationLimitError
from .kernels import GraphonSpec, _validate_sbm, evaluate

__all__ = [
    "GridFunction",
    "DiscretizedOperator",
    "EigenPair",
    "midpoints",
    "discretize",
    "apply",
    "power_method",
    "dominant_eigenpair",
    "top_k_eigen",
    "sbm_eigen_analytic",
    "minmax_eigen_analytic",
    "operator_distance",
]

POWER_TOL = 1e-10
POWER_MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function on the uniform M-cell partition of [0,1]."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(-1))

    @property
    def M(self) -> int:
        return self.values.shape[0]

    def l2_norm(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))

    def value_at(self, x):
        """Evaluate the step function at points x in [0, 1]."""
        idx = np.minimum(np.floor(np.asarray(x) * self.M).astype(int), self.M - 1)
        out = self.values[idx]
        return float(out) if np.isscalar(x) else out

    def to_json(self) -> list:
        return self.values.tolist()

    @classmethod
    def from_json(cls, doc) -> "GridFunction":
        return cls(np.asarray(doc, dtype=float))

    def write_csv(self, path) -> None:
        """Plot-ready (grid midpoint, value) rows."""
        with open(path, "w") as fh:
            fh.write("midpoint,value\n")
            for x, v in zip(midpoints(self.M), self.values):
                fh.write(f"{float(x)!r},{float(v)!r}\n")


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """Midpoint-collocation matrix of a kernel operator at resolution M.

    Application to a grid function g is (1/M) * kernel_matrix @ g.values.
    """

    kernel_matrix: np.ndarray

    @property
    def M(self) -> int:
        return self.kernel_matrix.shape[0]

    def matrix(self) -> np.ndarray:
        """The matrix (1/M) * kernel_matrix actually applied to grid vectors."""
        return self.kernel_matrix / self.M


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    function: GridFunction

    def to_json(self) -> dict:
        return {"value": self.value, "function": self.function.to_json()}


def midpoints(M: int) -> np.ndarray:
    return (np.arange(M) + 0.5) / M


def discretize(spec: GraphonSpec, M: int) -> DiscretizedOperator:
    """Sample the kernel at the M x M grid of cell midpoints."""
    if M < 2:
        raise ValueError(f"resolution must be at least 2, got {M}")
    m = midpoints(M)
    K = evaluate(spec, m[:, None], m[None, :])
    return DiscretizedOperator(kernel_matrix=np.asarray(K, dtype=float))


def apply(op: DiscretizedOperator, f: GridFunction) -> GridFunction:
    """Apply the discretized operator: (1/M) * kernel_matrix @ f."""
    if f.M != op.M:
        raise ValueError(f"resolution mismatch: operator M={op.M}, function M={f.M}")
    return GridFunction(op.kernel_matrix @ f.values / op.M)


def _orient(v: np.ndarray) -> np.ndarray:
    # Fix the +/- ambiguity: make the mean nonnegative; if the mean is
    # essentially zero, make the largest-magnitude entry positive.
    m = v.mean()
    if abs(m) > 1e-12:
        return v if m >= 0.0 else -v
    j = int(np.argmax(np.abs(v)))
    return v if v[j] >= 0.0 else -v


def power_method(A: np.ndarray, tol: float, max_iter: int):
    """Largest (algebraic) eigenvalue and unit eigenvector of a symmetric matrix.

    Plain power iteration from the all-ones direction, declared converged
    only when both the Rayleigh quotient has settled and the residual
    ||A v - lam v|| is below tol * max(1, |lam|). A matrix with a dominant
    +/- eigenvalue pair (a bipartite-like network) makes the unshifted
    iteration oscillate with a stationary Rayleigh quotient; when the
    residual stalls, the iteration restarts on A + shift*I with shift equal
    to the max absolute row sum, which makes the top of the spectrum
    strictly dominant. Matrices with negative entries start shifted, since
    for them the largest-magnitude eigenvalue need not be the largest one.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    row_bound = float(np.max(np.abs(A).sum(axis=1))) if n else 0.0
    shift = 0.0 if np.all(A >= 0.0) else row_bound
    B = A if shift == 0.0 else A + shift * np.eye(n)
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = float(v @ (A @ v))
    Bv = B @ v
    stall = 0
    resid_checkpoint = math.inf
    for it in range(1, max_iter + 1):
        norm = float(np.linalg.norm(Bv))
        if norm == 0.0:
            # B vanished: for the unshifted nonnegative case the operator is
            # zero; otherwise A = -shift * I and the whole spectrum is -shift.
            return -shift, np.full(n, 1.0 / math.sqrt(n))
        v_new = Bv / norm
        Bv_new = B @ v_new
        lam_new = float(v_new @ Bv_new) - shift
        scale = max(1.0, abs(lam_new))
        resid = float(np.linalg.norm(Bv_new - (lam_new + shift) * v_new))
        if abs(lam_new - lam) <= tol * scale and resid <= tol * scale:
            return lam_new, v_new
        stall = stall + 1 if abs(lam_new - lam) <= tol * scale else 0
        if shift == 0.0 and (stall >= 5 or (it % 50 == 0 and resid > 0.5 * resid_checkpoint)):
            shift = row_bound
            B = A + shift * np.eye(n)
            Bv_new = B @ v_new
            stall = 0
            resid_checkpoint = math.inf
        elif it % 50 == 0:
            resid_checkpoint = resid
        v, Bv, lam = v_new, Bv_new, lam_new
    raise IterationLimitError(
        f"power iteration did not converge in {max_iter} iterations",
        last_iterate=v,
        residual_history=[resid],
    )


def _l2_normalize(v: np.ndarray) -> np.ndarray:
    n = np.sqrt(np.mean(v**2))
    if n == 0.0:
        return v
    return v / n


def dominant_eigenpair(
    op: DiscretizedOperator, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER
) -> EigenPair:
    """Largest eigenvalue and eigenfunction via power iteration.

    Starts from the all-ones vector (guaranteed overlap with the nonnegative
    dominant eigenfunction of a nonnegative kernel) and converges when both
    the Rayleigh quotient and the residual settle to ``tol``, so the returned
    pair satisfies ||apply(op, psi) - lam psi|| <= tol * max(1, |lam|). The
    eigenfunction is returned with unit L2 norm and nonnegative mean.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    lam, v = power_method(op.matrix(), tol, max_iter)
    psi = _orient(_l2_normalize(v))
    return EigenPair(lam, GridFunction(psi))


def top_k_eigen(op: DiscretizedOperator, k: int) -> list[EigenPair]:
    """The k largest eigenvalues with L2-orthonormal eigenfunctions.

    Uses a full symmetric eigendecomposition; eigenvectors are rescaled from
    unit Euclidean norm to unit L2 norm.
    """
    if k < 1 or k > op.M:
        raise ValueError(f"k must lie in [1, {op.M}], got {k}")
    evals, evecs = np.linalg.eigh(op.matrix())
    pairs = []
    for i in range(1, k + 1):
        v = _orient(evecs[:, -i] * np.sqrt(op.M))
        pairs.append(EigenPair(float(evals[-i]), GridFunction(v)))
    return pairs


def sbm_eigen_analytic(Q, w) -> list[tuple[float, np.ndarray]]:
    """Exact spectrum of a block-constant kernel.

    The kernel operator shares its eigenvalues with the K x K matrix
    E = Q diag(w); eigenfunctions are constant on each community. The
    computation runs on the symmetric similar matrix
    diag(sqrt(w)) Q diag(sqrt(w)), which has the same spectrum and is
    numerically stable. Returned per-block values give eigenfunctions with
    unit L2 norm; pairs are sorted by descending eigenvalue.
    """
    Q, w = _validate_sbm(Q, w)
    sw = np.sqrt(w)
    S = sw[:, None] * Q * sw[None, :]
    evals, evecs = np.linalg.eigh(S)
    out = []
    for i in range(len(w) - 1, -1, -1):
        # Per-block eigenfunction values: u / sqrt(w) has unit L2 norm since
        # sum_k w_k * (u_k / sqrt(w_k))**2 = sum_k u_k**2 = 1.
        psi = evecs[:, i] / sw
        mass_mean = float(np.sum(w * psi))
        if abs(mass_mean) > 1e-12:
            if mass_mean < 0.0:
                psi = -psi
        elif psi[int(np.argmax(np.abs(psi)))] < 0.0:
            psi = -psi
        out.append((float(evals[i]), psi))
    return out


def minmax_eigen_analytic(h: int, M: int) -> tuple[float, GridFunction]:
    """Closed-form eigenpair of the minmax kernel: (1/(pi h)^2, sqrt(2) sin(h pi x))."""
    if h < 1:
        raise ValueError("mode index must be a positive integer")
    lam = 1.0 / (np.pi * h) ** 2
    psi = np.sqrt(2.0) * np.sin(h * np.pi * midpoints(M))
    return lam, GridFunction(psi)


def operator_distance(a: DiscretizedOperator, b: DiscretizedOperator) -> float:
    """L2 -> L2 operator norm of the difference of two discretized operators.

    For symmetric matrices this is the largest absolute eigenvalue of
    (1/M) (A - B).
    """
    if a.M != b.M:
        raise ValueError(f"resolution mismatch: {a.M} vs {b.M}")
    diff = (a.kernel_matrix - b.kernel_matrix) / a.M
    evals = np.linalg.eigvalsh(diff)
    return float(max(abs(evals[0]), abs(evals[-1])))
