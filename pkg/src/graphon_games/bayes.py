"""Incomplete-information checks against the infinite-population equilibrium.

When agents know the kernel and their own type but not the realized network,
the infinite-population equilibrium played as a type-contingent strategy is an
approximate Bayesian equilibrium. Two quantities are measured here:

  * the expected local aggregate of an agent of type x, which equals the
    kernel-weighted average int W(x, y) s(y) dy exactly (for any population
    size distribution), and
  * a Monte Carlo estimate of the suboptimality epsilon = 2 L_U E|zeta - z(x)|,
    where zeta is the realized aggregate over random types and links,
    normalized by 1/(N-1) so the linear-quadratic equivalence is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import LqPayoff, lq_s_max, solve_graphon
from .kernels import GraphonSpec, evaluate
from .spectral import GridFunction, discretize, dominant_eigenpair, midpoints

__all__ = ["EpsilonEstimate", "expected_aggregate", "estimate_epsilon"]

DEFAULT_RESOLUTION = 1000


@dataclass(frozen=True)
class EpsilonEstimate:
    epsilon_hat: float
    N: int
    trials: int
    L_U: float
    stderr: float

    def to_json(self) -> dict:
        return {
            "epsilon_hat": self.epsilon_hat,
            "N": self.N,
            "trials": self.trials,
            "L_U": self.L_U,
            "stderr": self.stderr,
        }


def expected_aggregate(spec: GraphonSpec, sbar: GridFunction, x: float) -> float:
    """int W(x, y) sbar(y) dy by midpoint quadrature on sbar's grid.

    This equals the expected realized aggregate of an agent of type x under
    type and link randomness, for any population size.
    """
    m = midpoints(sbar.M)
    return float(np.mean(np.asarray(evaluate(spec, x, m)) * sbar.values))


def estimate_epsilon(spec: GraphonSpec, payoff, L_U: float | None, N: int, trials: int, seed,
                     sbar: GridFunction | None = None,
                     M: int = DEFAULT_RESOLUTION) -> EpsilonEstimate:
    """Monte Carlo estimate of the Bayesian suboptimality bound.

    Each trial draws one agent type, N-1 opponent types, Bernoulli links with
    the kernel probabilities, and records |zeta - z(x)| where
    zeta = (1/(N-1)) sum_j A_j sbar(t_j). The estimate is 2 L_U times the
    mean deviation, with its standard error.

    ``L_U`` may be None for linear-quadratic payoffs, in which case
    |alpha| * s_max is used. ``sbar`` is the precomputed equilibrium on the
    M-point grid; it is solved here when omitted.
    """
    if N < 2:
        raise ValueError(f"population size must be at least 2, got {N}")
    if trials < 1:
        raise ValueError("need at least one trial")
    if sbar is None:
        sbar = solve_graphon(spec, payoff, M).profile
    if L_U is None:
        if not isinstance(payoff, LqPayoff):
            raise ValueError("L_U must be supplied for generic payoffs")
        lam = dominant_eigenpair(discretize(spec, sbar.M)).value
        L_U = abs(payoff.alpha) * lq_s_max(payoff, lam)

    rng = np.random.default_rng(seed)
    deviations = np.empty(trials)
    for k in range(trials):
        ti = rng.random()
        tj = rng.random(N - 1)
        link_prob = np.asarray(evaluate(spec, ti, tj))
        links = rng.random(N - 1) < link_prob
        zeta = float(links @ sbar.value_at(tj)) / (N - 1)
        deviations[k] = abs(zeta - expected_aggregate(spec, sbar, ti))

    mean_dev = float(deviations.mean())
    if trials > 1:
        se = float(deviations.std(ddof=1)) / math.sqrt(trials)
    else:
        se = math.nan
    return EpsilonEstimate(
        epsilon_hat=2.0 * L_U * mean_dev,
        N=N,
        trials=trials,
        L_U=float(L_U),
        stderr=2.0 * L_U * se,
    )
