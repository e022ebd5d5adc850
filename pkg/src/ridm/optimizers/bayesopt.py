"""Gaussian-process Bayesian optimization with expected improvement.

Built for tiny budgets (tens of evaluations): fixed squared-exponential
kernel hyperparameters on unit-hypercube coordinates, exact GP regression
via Cholesky, and an acquisition maximizer made of quasi-random probing
plus deterministic local refinement.  Everything is reproducible from the
seed; there is no stochastic restart logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# kernel defaults in unit-cube coordinates; budgets are far too small for
# marginal-likelihood tuning to be reliable
LENGTH_SCALE = 0.2
NOISE_VARIANCE = 1.0e-6
MAX_JITTER = 1.0e-2

PROBE_COUNT = 1024

_BO_STREAM_TAG = 13

_HALTON_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


class IllConditionedError(RuntimeError):
    """Kernel matrix failed to factorize even at the maximum jitter."""


@dataclass(frozen=True)
class GpState:
    """Observations in unit-cube coordinates plus kernel hyperparameters."""

    dimension: int
    points: np.ndarray  # (m, dimension), unit hypercube
    values: np.ndarray  # (m,)
    length_scale: float = LENGTH_SCALE
    noise_variance: float = NOISE_VARIANCE

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, self.dimension)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if points.shape[0] != values.shape[0]:
            raise ValueError("points and values must have equal length")
        points.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @property
    def observed_count(self) -> int:
        return self.points.shape[0]

    @property
    def incumbent(self) -> tuple[np.ndarray, float]:
        """Best observed (x, f); earliest wins ties."""
        if self.observed_count == 0:
            raise ValueError("no observations yet")
        i = int(np.argmax(self.values))
        return self.points[i], float(self.values[i])


def gp_init(dimension: int, length_scale: float = LENGTH_SCALE,
            noise_variance: float = NOISE_VARIANCE) -> GpState:
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    return GpState(
        dimension=dimension,
        points=np.zeros((0, dimension)),
        values=np.zeros(0),
        length_scale=float(length_scale),
        noise_variance=float(noise_variance),
    )


def gp_observe(state: GpState, x, value: float) -> GpState:
    x = np.asarray(x, dtype=float).reshape(1, state.dimension)
    if not np.isfinite(value):
        raise ValueError("observed fitness must be finite")
    return replace(
        state,
        points=np.vstack([state.points, x]),
        values=np.append(state.values, float(value)),
    )


def _signal_variance(values: np.ndarray) -> float:
    if values.shape[0] < 2:
        return 1.0
    var = float(np.var(values - values.mean()))
    return var if var > 1.0e-12 else 1.0


def _kernel(state: GpState, a: np.ndarray, b: np.ndarray, sf2: float) -> np.ndarray:
    # squared-exponential on the unit cube
    sq = (
        np.sum(a * a, axis=1)[:, None]
        - 2.0 * (a @ b.T)
        + np.sum(b * b, axis=1)[None, :]
    )
    return sf2 * np.exp(-np.maximum(sq, 0.0) / (2.0 * state.length_scale**2))


def _factorize(state: GpState, sf2: float) -> np.ndarray:
    """Cholesky of K + jitter*I with jitter escalation x10 up to MAX_JITTER."""
    gram = _kernel(state, state.points, state.points, sf2)
    jitter = state.noise_variance
    while True:
        try:
            return np.linalg.cholesky(gram + jitter * np.eye(state.observed_count))
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > MAX_JITTER:
                raise IllConditionedError(
                    f"kernel matrix not positive definite at jitter {MAX_JITTER}"
                ) from None


def _posterior_batch(state: GpState, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=float).reshape(-1, state.dimension)
    sf2 = _signal_variance(state.values)
    if state.observed_count == 0:
        return np.zeros(xs.shape[0]), np.full(xs.shape[0], sf2)
    center = float(state.values.mean())
    chol = _factorize(state, sf2)
    centered = state.values - center
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, centered))
    cross = _kernel(state, xs, state.points, sf2)  # (q, m)
    mean = center + cross @ alpha
    v = np.linalg.solve(chol, cross.T)  # (m, q)
    variance = sf2 - np.sum(v * v, axis=0)
    return mean, np.maximum(variance, 0.0)


def gp_posterior(state: GpState, x) -> tuple[float, float]:
    """Posterior (mean, variance) at one point of the unit hypercube."""
    mean, variance = _posterior_batch(state, np.asarray(x, dtype=float).reshape(1, -1))
    return float(mean[0]), float(variance[0])


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def expected_improvement_values(mean: float, std: float, best: float) -> float:
    """Closed-form EI for maximization; exact exploitation limit at std = 0."""
    if std <= 0.0:
        return max(mean - best, 0.0)
    z = (mean - best) / std
    return (mean - best) * _norm_cdf(z) + std * _norm_pdf(z)


def expected_improvement(state: GpState, x) -> float:
    mean, variance = gp_posterior(state, x)
    _, best = state.incumbent
    return expected_improvement_values(mean, math.sqrt(variance), best)


def _radical_inverse(index: int, base: int) -> float:
    result = 0.0
    denom = 1.0
    while index > 0:
        denom *= base
        index, digit = divmod(index, base)
        result += digit / denom
    return result


def halton_points(count: int, dimension: int) -> np.ndarray:
    """Unshifted Halton sequence (skipping index 0) in the unit cube."""
    if dimension > len(_HALTON_BASES):
        raise ValueError(f"dimension {dimension} exceeds supported {len(_HALTON_BASES)}")
    bases = _HALTON_BASES[:dimension]
    out = np.empty((count, dimension))
    for i in range(count):
        for j, base in enumerate(bases):
            out[i, j] = _radical_inverse(i + 1, base)
    return out


def _acquisition_probes(state: GpState, rng_seed) -> np.ndarray:
    key = [_BO_STREAM_TAG]
    if isinstance(rng_seed, (int, np.integer)):
        key.append(int(rng_seed))
    else:
        key.extend(int(s) for s in rng_seed)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
    shift = rng.uniform(size=state.dimension)
    return (halton_points(PROBE_COUNT, state.dimension) + shift) % 1.0


def _ei_batch(state: GpState, xs: np.ndarray) -> np.ndarray:
    mean, variance = _posterior_batch(state, xs)
    if state.observed_count == 0:
        best = 0.0
    else:
        best = state.incumbent[1]
    std = np.sqrt(variance)
    return np.array(
        [expected_improvement_values(float(m), float(s), best) for m, s in zip(mean, std)]
    )


def _refine(state: GpState, start: np.ndarray) -> np.ndarray:
    """Deterministic compass search on EI from the best probe."""
    x = start.copy()
    best = _ei_batch(state, x[None, :])[0]
    step = 0.05
    while step >= 1.0e-4:
        moved = False
        for j in range(state.dimension):
            for direction in (1.0, -1.0):
                trial = x.copy()
                trial[j] = min(1.0, max(0.0, trial[j] + direction * step))
                value = _ei_batch(state, trial[None, :])[0]
                if value > best:
                    x, best = trial, value
                    moved = True
        if not moved:
            step *= 0.5
    return x


def propose(state: GpState, rng_seed) -> np.ndarray:
    """Acquisition maximizer: quasi-random probes, then local refinement."""
    probes = _acquisition_probes(state, rng_seed)
    scores = _ei_batch(state, probes)
    return _refine(state, probes[int(np.argmax(scores))])


def bo_step(state: GpState, objective, rng_seed) -> tuple[GpState, np.ndarray, float]:
    """Propose one point, evaluate it, fold the observation into the state.

    `objective` is either a bare callable over unit-cube vectors or a handle
    with `evaluate` and `budget` attributes; with a budgeted handle the call
    fails once the observations already use up the budget.  Returns the new
    state plus the evaluated (point, fitness).
    """
    evaluate = getattr(objective, "evaluate", objective)
    budget = getattr(objective, "budget", None)
    if budget is not None and state.observed_count >= budget:
        raise RuntimeError("budget exhausted")
    x = propose(state, rng_seed)
    value = float(evaluate(x))
    if not np.isfinite(value):
        value = -1.0e9
    return gp_observe(state, x, value), x, value
