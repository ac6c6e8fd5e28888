"""Nash equilibrium solvers for finite network games and discretized graphon games.

Both game classes share one structure: each agent best-responds to a local
aggregate, the (1/N)-weighted network average of the other strategies. Under
the contraction condition (lipschitz ratio of the payoff times the largest
operator eigenvalue below one) the best-response map is a Banach contraction,
so the equilibrium is unique and best-response iteration converges
geometrically.

Linear-quadratic payoffs admit a direct linear-solve path: for complements
(alpha > 0) the equilibrium is interior and solves (I - (alpha/N) P) s = beta;
for substitutes the direct solution is accepted only if nonnegative, otherwise
the solver falls back to projected best-response iteration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionError, IterationLimitError
from .kernels import GraphonSpec
from .spectral import GridFunction, discretize, dominant_eigenpair, power_method

__all__ = [
    "LqPayoff",
    "GenericPayoff",
    "EquilibriumReport",
    "local_aggregate",
    "br_lq",
    "contraction_factor",
    "solve_network_lq",
    "solve_network_generic",
    "solve_graphon_lq",
    "solve_graphon_generic",
    "solve_network",
    "solve_graphon",
    "step_function_embed",
    "l2_distance",
    "bound_rho",
    "comparative_statics_bound",
    "lq_s_max",
    "lq_as_generic",
    "matrix_dominant_eigenvalue",
    "report_to_json",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1_000_000
_ACCEPT_NEG = -1e-12
_BISECT_TOL = 1e-12
_BISECT_MAX = 200


@dataclass(frozen=True)
class LqPayoff:
    """Linear-quadratic payoff -s^2/2 + s (alpha z + beta).

    alpha weighs the peer effect (complements if positive, substitutes if
    negative); beta > 0 is the standalone marginal return.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError(f"standalone marginal return must be positive, got {self.beta}")


@dataclass(frozen=True)
class GenericPayoff:
    """Payoff described by its strategy gradient plus regularity constants.

    ``grad_s(s, z)`` must be vectorized over numpy arrays and strictly
    decreasing in s at rate at least ``alpha_U`` (strong concavity);
    ``ell_U`` bounds its sensitivity to the aggregate z. Strategies live in
    the box ``bounds``. The constants are caller-supplied and only
    spot-checked at a few probe points.
    """

    grad_s: object
    alpha_U: float
    ell_U: float
    bounds: tuple[float, float]

    def __post_init__(self):
        if self.alpha_U <= 0.0:
            raise ValueError("strong concavity constant must be positive")
        if self.ell_U < 0.0:
            raise ValueError("aggregate Lipschitz constant must be nonnegative")
        lo, hi = self.bounds
        if not (0.0 <= lo < hi):
            raise ValueError(f"bounds must satisfy 0 <= lo < hi, got {self.bounds}")
        self._spot_check()

    def _spot_check(self):
        lo, hi = self.bounds
        probes_s = np.array([lo, 0.5 * (lo + hi), hi])
        for z in (0.0, 1.0):
            g = np.asarray(self.grad_s(probes_s, np.full(3, z)), dtype=float)
            for i in range(2):
                slope = (g[i + 1] - g[i]) / (probes_s[i + 1] - probes_s[i])
                if slope > -self.alpha_U * (1.0 - 1e-6):
                    raise ValueError(
                        "grad_s is not decreasing in s at the declared rate "
                        f"(slope {slope:.6g} at z={z})"
                    )
        g0 = np.asarray(self.grad_s(probes_s, np.zeros(3)), dtype=float)
        g1 = np.asarray(self.grad_s(probes_s, np.ones(3)), dtype=float)
        if np.max(np.abs(g1 - g0)) > self.ell_U * (1.0 + 1e-6) + 1e-9:
            raise ValueError("grad_s varies in z faster than the declared ell_U")


@dataclass
class EquilibriumReport:
    """Solver output: the profile plus convergence diagnostics.

    ``step_norms`` records the Euclidean norm of successive best-response
    steps (empty on the direct-solve path); their ratios measure the realized
    contraction rate.
    """

    profile: object
    iterations: int
    residual: float
    contraction_factor: float
    method: str
    step_norms: list = field(default_factory=list)

    def profile_array(self) -> np.ndarray:
        if isinstance(self.profile, GridFunction):
            return self.profile.values
        return np.asarray(self.profile)


def local_aggregate(P: np.ndarray, s: np.ndarray) -> np.ndarray:
    """z = (1/N) P s, each agent's network-weighted average of strategies."""
    P = np.asarray(P, dtype=float)
    s = np.asarray(s, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[1] != s.shape[0]:
        raise ValueError(f"dimension mismatch: P {P.shape}, s {s.shape}")
    return P @ s / P.shape[0]


def br_lq(z, p: LqPayoff, hi: float | None = None):
    """Linear-quadratic best response max(0, alpha z + beta), clipped at hi."""
    out = np.maximum(0.0, p.alpha * np.asarray(z, dtype=float) + p.beta)
    if hi is not None:
        out = np.minimum(out, hi)
    return float(out) if np.isscalar(z) else out


def _lipschitz_ratio(payoff) -> float:
    if isinstance(payoff, LqPayoff):
        return abs(payoff.alpha)
    return payoff.ell_U / payoff.alpha_U


def contraction_factor(payoff, lambda_max: float) -> float:
    """The Banach modulus (ell_U / alpha_U) * lambda_max of the game operator."""
    if lambda_max < 0.0:
        raise ValueError("lambda_max must be nonnegative")
    return _lipschitz_ratio(payoff) * lambda_max


def matrix_dominant_eigenvalue(A: np.ndarray, tol: float = 1e-13, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric matrix by power iteration.

    For the nonnegative matrices arising here this is also the spectral
    radius (Perron), which is what the contraction checks need.
    """
    lam, _ = power_method(A, tol, max_iter)
    return lam


def _check_contraction(payoff, lam: float) -> float:
    q = contraction_factor(payoff, lam)
    if q >= 1.0:
        raise ContractionError(
            q,
            f"contraction violated: lipschitz ratio {_lipschitz_ratio(payoff):.6g} "
            f"times lambda_max {lam:.6g} gives {q:.6g} >= 1",
        )
    return q


def _br_iterate(br, s0: np.ndarray, tol: float, max_iter: int):
    s = np.asarray(s0, dtype=float)
    step_norms = []
    residuals = []
    for it in range(1, max_iter + 1):
        s_new = br(s)
        diff = s_new - s
        res = float(np.max(np.abs(diff)))
        step_norms.append(float(np.linalg.norm(diff)))
        residuals.append(res)
        s = s_new
        if res <= tol:
            return s, it, res, step_norms
    raise IterationLimitError(
        f"best-response iteration did not reach tol {tol:g} in {max_iter} iterations",
        last_iterate=s,
        residual_history=residuals,
    )


def _solve_lq_on(A_apply, lam: float, p: LqPayoff, system_matrix: np.ndarray,
                 tol: float, max_iter: int):
    """Shared LQ path: direct solve, substitutes fallback to projected BR.

    ``A_apply(s)`` returns the aggregate z; ``system_matrix`` is the linear
    operator matrix such that the equilibrium solves (I - alpha * M) s = beta.
    """
    q = _check_contraction(p, lam)
    n = system_matrix.shape[0]
    lin = np.eye(n) - p.alpha * system_matrix
    s = np.linalg.solve(lin, np.full(n, p.beta))
    if p.alpha > 0.0 or s.min() >= _ACCEPT_NEG:
        s = np.maximum(s, 0.0)
        res = float(np.max(np.abs(s - br_lq(A_apply(s), p))))
        return s, 0, res, q, "direct-solve", []
    br = lambda sv: br_lq(A_apply(sv), p)
    s0 = np.full(n, p.beta)
    s, iters, res, steps = _br_iterate(br, s0, tol, max_iter)
    return s, iters, res, q, "br-iteration", steps


def solve_network_lq(P: np.ndarray, p: LqPayoff,
                     tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EquilibriumReport:
    """Equilibrium of the N-agent linear-quadratic game on network P."""
    P = np.asarray(P, dtype=float)
    N = P.shape[0]
    lam = matrix_dominant_eigenvalue(P / N)
    s, iters, res, q, method, steps = _solve_lq_on(
        lambda sv: local_aggregate(P, sv), lam, p, P / N, tol, max_iter
    )
    return EquilibriumReport(profile=s, iterations=iters, residual=res,
                             contraction_factor=q, method=method, step_norms=steps)


def _br_generic(payoff: GenericPayoff, z: np.ndarray) -> np.ndarray:
    """Best response by monotone bisection of grad_s over the strategy box.

    Strong concavity makes grad_s strictly decreasing in s, so the argmax is
    lo where the gradient is already nonpositive, hi where it is still
    nonnegative, and the unique interior root otherwise.
    """
    lo, hi = payoff.bounds
    z = np.asarray(z, dtype=float)
    g_lo = np.asarray(payoff.grad_s(np.full_like(z, lo), z), dtype=float)
    g_hi = np.asarray(payoff.grad_s(np.full_like(z, hi), z), dtype=float)
    out = np.where(g_lo <= 0.0, lo, np.where(g_hi >= 0.0, hi, np.nan))
    interior = np.isnan(out)
    if np.any(interior):
        zi = z[interior]
        a = np.full_like(zi, lo)
        b = np.full_like(zi, hi)
        for _ in range(_BISECT_MAX):
            mid = 0.5 * (a + b)
            g_mid = np.asarray(payoff.grad_s(mid, zi), dtype=float)
            up = g_mid > 0.0
            a = np.where(up, mid, a)
            b = np.where(up, b, mid)
            if float(np.max(b - a)) <= _BISECT_TOL:
                break
        out[interior] = 0.5 * (a + b)
    return out


def solve_network_generic(P: np.ndarray, payoff: GenericPayoff,
                          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                          start: np.ndarray | None = None) -> EquilibriumReport:
    """Best-response iteration for a generic strongly concave payoff."""
    P = np.asarray(P, dtype=float)
    N = P.shape[0]
    lam = matrix_dominant_eigenvalue(P / N)
    q = _check_contraction(payoff, lam)
    br = lambda sv: _br_generic(payoff, local_aggregate(P, sv))
    s0 = np.asarray(start, dtype=float) if start is not None else _br_generic(payoff, np.zeros(N))
    s, iters, res, steps = _br_iterate(br, s0, tol, max_iter)
    return EquilibriumReport(profile=s, iterations=iters, residual=res,
                             contraction_factor=q, method="br-iteration", step_norms=steps)


def solve_graphon_lq(spec: GraphonSpec, p: LqPayoff, M: int,
                     tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EquilibriumReport:
    """Equilibrium of the linear-quadratic graphon game on the M-point grid."""
    op = discretize(spec, M)
    lam = dominant_eigenpair(op).value
    A = op.matrix()
    s, iters, res, q, method, steps = _solve_lq_on(lambda sv: A @ sv, lam, p, A, tol, max_iter)
    return EquilibriumReport(profile=GridFunction(s), iterations=iters, residual=res,
                             contraction_factor=q, method=method, step_norms=steps)


def solve_graphon_generic(spec: GraphonSpec, payoff: GenericPayoff, M: int,
                          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                          start: np.ndarray | None = None) -> EquilibriumReport:
    """Best-response iteration for a generic payoff on the discretized kernel."""
    op = discretize(spec, M)
    lam = dominant_eigenpair(op).value
    q = _check_contraction(payoff, lam)
    A = op.matrix()
    br = lambda sv: _br_generic(payoff, A @ sv)
    s0 = np.asarray(start, dtype=float) if start is not None else _br_generic(payoff, np.zeros(M))
    s, iters, res, steps = _br_iterate(br, s0, tol, max_iter)
    return EquilibriumReport(profile=GridFunction(s), iterations=iters, residual=res,
                             contraction_factor=q, method="br-iteration", step_norms=steps)


def solve_network(P, payoff, **kwargs) -> EquilibriumReport:
    """Dispatch on payoff type."""
    if isinstance(payoff, LqPayoff):
        return solve_network_lq(P, payoff, **kwargs)
    return solve_network_generic(P, payoff, **kwargs)


def solve_graphon(spec, payoff, M, **kwargs) -> EquilibriumReport:
    """Dispatch on payoff type."""
    if isinstance(payoff, LqPayoff):
        return solve_graphon_lq(spec, payoff, M, **kwargs)
    return solve_graphon_generic(spec, payoff, M, **kwargs)


def step_function_embed(s) -> GridFunction:
    """Pair agent i with cell i of the uniform N-partition."""
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] < 1:
        raise ValueError("profile must have at least one entry")
    return GridFunction(s)


def l2_distance(f: GridFunction, g: GridFunction) -> float:
    """L2 distance of two step functions, via the common grid refinement."""
    if f.M == g.M:
        fv, gv = f.values, g.values
    else:
        L = math.lcm(f.M, g.M)
        fv = np.repeat(f.values, L // f.M)
        gv = np.repeat(g.values, L // g.M)
    return float(np.sqrt(np.mean((fv - gv) ** 2)))


def bound_rho(N: int, delta: float, L: float, Omega: int, Ktilde: float):
    """High-probability sampling bounds for equilibrium distances.

    Returns (d_N, rho, bound_weighted, bound_simple) where
    d_N = 1/N + sqrt(8 log(N/delta) / N) is the type-deviation radius,
    rho = 2 sqrt(max(0, (L^2 - Omega^2) d_N^2) + Omega d_N) the operator-norm
    radius, and the two bounds are Ktilde * rho for the weighted game and
    Ktilde * (rho + sqrt(4 log(2N/delta) / N)) for the 0-1 game.

    The (L^2 - Omega^2) d_N^2 term can go negative when Omega > L; it is
    clamped at zero (with a warning), which keeps the expression a valid,
    slightly larger radius.
    """
    if not 0.0 < delta <= math.exp(-1.0):
        raise ValueError(f"delta must lie in (0, e^-1], got {delta}")
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    d_N = 1.0 / N + math.sqrt(8.0 * math.log(N / delta) / N)
    radicand_sq = (L * L - Omega * Omega) * d_N * d_N
    if radicand_sq < 0.0:
        warnings.warn(
            f"(L^2 - Omega^2) d_N^2 = {radicand_sq:.6g} < 0 clamped to 0 "
            f"(L={L}, Omega={Omega}, d_N={d_N:.6g})",
            stacklevel=2,
        )
        radicand_sq = 0.0
    rho = 2.0 * math.sqrt(radicand_sq + Omega * d_N)
    bound_weighted = Ktilde * rho
    bound_simple = Ktilde * (rho + math.sqrt(4.0 * math.log(2.0 * N / delta) / N))
    return d_N, rho, bound_weighted, bound_simple


def comparative_statics_bound(payoff, lambda_max: float, s_max: float) -> float:
    """Sensitivity constant: (ratio * s_max) / (1 - ratio * lambda_max).

    Multiplied by an operator-norm perturbation it bounds the L2 movement of
    the equilibrium.
    """
    ratio = _lipschitz_ratio(payoff)
    q = ratio * lambda_max
    if q >= 1.0:
        raise ContractionError(q)
    return ratio * s_max / (1.0 - q)


def lq_s_max(p: LqPayoff, lambda_max: float) -> float:
    """Box bound on LQ equilibrium strategies, for use inside bound formulas.

    Complements: the Neumann-series supremum beta / (1 - alpha lambda_max).
    Substitutes: best responses never exceed beta.
    """
    if p.alpha > 0.0:
        q = p.alpha * lambda_max
        if q >= 1.0:
            raise ContractionError(q)
        return p.beta / (1.0 - q)
    return p.beta


def lq_as_generic(p: LqPayoff, hi: float) -> GenericPayoff:
    """Encode an LQ payoff as a GenericPayoff with strategy box [0, hi]."""
    return GenericPayoff(
        grad_s=lambda s, z: p.beta + p.alpha * z - s,
        alpha_U=1.0,
        ell_U=abs(p.alpha),
        bounds=(0.0, hi),
    )


def report_to_json(report: EquilibriumReport) -> dict:
    return {
        "profile": report.profile_array().tolist(),
        "iterations": report.iterations,
        "residual": report.residual,
        "contraction_factor": report.contraction_factor,
        "method": report.method,
    }
