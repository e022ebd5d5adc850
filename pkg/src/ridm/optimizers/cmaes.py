"""Covariance matrix adaptation evolution strategy, maximization form.

Standard strategy constants and update equations (rank-1 + rank-mu
covariance update, cumulative step-size adaptation) with two local choices:
fitnesses are ranked descending because objectives here are maximized, and
the covariance is symmetrized and eigenvalue-floored after every update so
sampling never hits a factorization failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# fitness assigned to non-finite evaluations so that ranking is total
FAILED_FITNESS = -1.0e9

# relative eigenvalue floor applied after every covariance update
EIGENVALUE_FLOOR = 1.0e-14

_CMA_STREAM_TAG = 11


@dataclass(frozen=True)
class CmaConstants:
    """Strategy constants derived from the problem dimension."""

    dimension: int
    population: int  # lambda
    parents: int  # mu
    weights: np.ndarray  # mu positive recombination weights, sum 1
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float  # E||N(0, I)||


def cma_constants(dimension: int, population: int | None = None) -> CmaConstants:
    n = int(dimension)
    if n < 1:
        raise ValueError("dimension must be >= 1")
    lam = population if population is not None else 4 + int(3 * math.log(n))
    if lam < 2:
        raise ValueError("population must be >= 2")
    mu = lam // 2
    raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = float(1.0 / np.sum(weights**2))
    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n**2))
    weights.flags.writeable = False
    return CmaConstants(
        dimension=n,
        population=lam,
        parents=mu,
        weights=weights,
        mu_eff=mu_eff,
        c_sigma=c_sigma,
        d_sigma=d_sigma,
        c_c=c_c,
        c_1=c_1,
        c_mu=c_mu,
        chi_n=chi_n,
    )


@dataclass(frozen=True)
class CmaState:
    """Search distribution N(mean, sigma^2 * C) plus adaptation memory."""

    constants: CmaConstants
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int = 0

    def __post_init__(self):
        n = self.constants.dimension
        if self.mean.shape != (n,):
            raise ValueError(f"mean must have shape ({n},)")
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")


def cma_init(mean, sigma: float = 0.5, population: int | None = None) -> CmaState:
    mean = np.asarray(mean, dtype=float).copy()
    constants = cma_constants(mean.shape[0], population)
    n = constants.dimension
    return CmaState(
        constants=constants,
        mean=mean,
        sigma=float(sigma),
        cov=np.eye(n),
        p_sigma=np.zeros(n),
        p_c=np.zeros(n),
    )


def _decompose(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with symmetrization and relative eigenvalue floor."""
    sym = 0.5 * (cov + cov.T)
    eigenvalues, basis = np.linalg.eigh(sym)
    floor = EIGENVALUE_FLOOR * float(eigenvalues.max())
    eigenvalues = np.maximum(eigenvalues, max(floor, EIGENVALUE_FLOOR))
    return eigenvalues, basis


def repaired_cov(cov: np.ndarray) -> np.ndarray:
    eigenvalues, basis = _decompose(cov)
    rebuilt = (basis * eigenvalues) @ basis.T
    # reconstruction is not bitwise symmetric; commutative addition makes it so
    return 0.5 * (rebuilt + rebuilt.T)


def cma_ask(state: CmaState, rng_seed) -> list[np.ndarray]:
    """Sample one population from N(mean, sigma^2*C), deterministic per seed.

    rng_seed may be an int or a sequence of ints; the generation counter is
    mixed in so successive generations draw distinct candidates.
    """
    constants = state.constants
    key = [_CMA_STREAM_TAG]
    if isinstance(rng_seed, (int, np.integer)):
        key.append(int(rng_seed))
    else:
        key.extend(int(s) for s in rng_seed)
    key.append(state.generation)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
    eigenvalues, basis = _decompose(state.cov)
    scale = basis * np.sqrt(eigenvalues)
    z = rng.standard_normal((constants.population, constants.dimension))
    return [state.mean + state.sigma * (scale @ z[i]) for i in range(constants.population)]


def cma_tell(state: CmaState, candidates, fitnesses) -> CmaState:
    """One strategy update from an evaluated population (higher is better)."""
    constants = state.constants
    lam, mu, n = constants.population, constants.parents, constants.dimension
    if len(candidates) != lam or len(fitnesses) != lam:
        raise ValueError(f"expected {lam} candidates and fitnesses")
    fit = np.asarray(fitnesses, dtype=float)
    fit = np.where(np.isfinite(fit), fit, FAILED_FITNESS)
    # stable argsort keeps candidate order on ties (maximization: descending)
    order = np.argsort(-fit, kind="stable")
    selected = np.array([candidates[i] for i in order[:mu]])

    weights = constants.weights
    y = (selected - state.mean) / state.sigma  # (mu, n)
    y_w = weights @ y

    mean = state.mean + state.sigma * y_w

    eigenvalues, basis = _decompose(state.cov)
    inv_sqrt = (basis / np.sqrt(eigenvalues)) @ basis.T
    c_s, d_s = constants.c_sigma, constants.d_sigma
    p_sigma = (1.0 - c_s) * state.p_sigma + math.sqrt(
        c_s * (2.0 - c_s) * constants.mu_eff
    ) * (inv_sqrt @ y_w)

    gen = state.generation + 1
    norm = float(np.linalg.norm(p_sigma))
    h_sig = norm / math.sqrt(1.0 - (1.0 - c_s) ** (2 * gen)) < (
        1.4 + 2.0 / (n + 1.0)
    ) * constants.chi_n

    c_c = constants.c_c
    p_c = (1.0 - c_c) * state.p_c + (
        math.sqrt(c_c * (2.0 - c_c) * constants.mu_eff) * y_w if h_sig else 0.0
    )

    c_1, c_mu = constants.c_1, constants.c_mu
    rank_one = np.outer(p_c, p_c)
    if not h_sig:
        # compensate the missing rank-one mass so C does not shrink
        rank_one = rank_one + c_c * (2.0 - c_c) * state.cov
    rank_mu = (y.T * weights) @ y
    cov = (1.0 - c_1 - c_mu) * state.cov + c_1 * rank_one + c_mu * rank_mu
    cov = repaired_cov(cov)

    sigma = state.sigma * math.exp((c_s / d_s) * (norm / constants.chi_n - 1.0))

    return CmaState(
        constants=constants,
        mean=mean,
        sigma=sigma,
        cov=cov,
        p_sigma=p_sigma,
        p_c=p_c,
        generation=gen,
    )
