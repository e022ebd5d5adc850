"""Black-box maximizers over parameter vectors: CMA-ES and GP/EI search.

`optimize` is the single driver: it evaluates the initial point first (so a
constant objective keeps it, ties resolve to the earliest evaluation), then
spends the remaining budget with the chosen method.  History rows are
(eval_index, fitness, best_so_far) for every single evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import format_float
from .bayesopt import (
    GpState,
    IllConditionedError,
    bo_step,
    expected_improvement,
    expected_improvement_values,
    gp_init,
    gp_observe,
    gp_posterior,
    halton_points,
    propose,
)
from .cmaes import (
    FAILED_FITNESS,
    CmaConstants,
    CmaState,
    cma_ask,
    cma_constants,
    cma_init,
    cma_tell,
)

METHODS = ("cmaes", "bo")

__all__ = [
    "METHODS",
    "FAILED_FITNESS",
    "CmaConstants",
    "CmaState",
    "GpState",
    "IllConditionedError",
    "ObjectiveHandle",
    "OptimizationResult",
    "bo_step",
    "cma_ask",
    "cma_constants",
    "cma_init",
    "cma_tell",
    "expected_improvement",
    "expected_improvement_values",
    "gp_init",
    "gp_observe",
    "gp_posterior",
    "halton_points",
    "history_to_csv",
    "optimize",
    "propose",
]


@dataclass(frozen=True)
class ObjectiveHandle:
    """A deterministic scalar fitness to be maximized under a budget."""

    dimension: int
    evaluate: Callable[[np.ndarray], float]
    budget: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class OptimizationResult:
    best_params: np.ndarray
    best_fitness: float
    history: list  # (eval_index, fitness, best_so_far) per evaluation

    @property
    def evaluations(self) -> int:
        return len(self.history)


def _checked(objective: ObjectiveHandle, x: np.ndarray) -> float:
    value = float(objective.evaluate(x))
    # sentinel keeps the ranking total when a rollout blows up
    return value if np.isfinite(value) else FAILED_FITNESS


def optimize(
    objective: ObjectiveHandle,
    method: str,
    init,
    seed: int = 0,
    *,
    sigma0: float = 0.5,
    bounds: tuple | None = None,
    population: int | None = None,
    stagnation_generations: int | None = None,
    stagnation_tolerance: float = 1.0e-6,
    gp_length_scale: float | None = None,
    gp_noise_variance: float | None = None,
) -> OptimizationResult:
    """Maximize the objective from `init`; strict improvements move the best.

    `bounds` (low, high vectors) is required for method "bo", where the
    search lives in the unit hypercube spanned by them.  Stagnation early
    stop applies to CMA-ES only and is off unless stagnation_generations is
    given.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    init = np.asarray(init, dtype=float).copy()
    if init.shape != (objective.dimension,):
        raise ValueError(
            f"init has shape {init.shape}, objective dimension is {objective.dimension}"
        )

    history: list[tuple[int, float, float]] = []
    best_params = init.copy()
    best_fitness = _checked(objective, init)
    history.append((0, best_fitness, best_fitness))
    evals = 1

    if method == "cmaes":
        state = cma_init(init, sigma=sigma0, population=population)
        best_per_generation: list[float] = []
        while evals + state.constants.population <= objective.budget:
            candidates = cma_ask(state, [seed])
            fitnesses = []
            for candidate in candidates:
                fitness = _checked(objective, candidate)
                if fitness > best_fitness:
                    best_fitness = fitness
                    best_params = candidate.copy()
                history.append((evals, fitness, best_fitness))
                fitnesses.append(fitness)
                evals += 1
            state = cma_tell(state, candidates, fitnesses)
            best_per_generation.append(best_fitness)
            if stagnation_generations is not None and len(best_per_generation) > stagnation_generations:
                window_ago = best_per_generation[-stagnation_generations - 1]
                if best_fitness - window_ago <= stagnation_tolerance:
                    break
        return OptimizationResult(best_params, best_fitness, history)

    if bounds is None:
        raise ValueError("method 'bo' requires bounds")
    low = np.asarray(bounds[0], dtype=float)
    high = np.asarray(bounds[1], dtype=float)
    if low.shape != (objective.dimension,) or high.shape != (objective.dimension,):
        raise ValueError("bounds must be per-dimension vectors")
    if not np.all(low < high):
        raise ValueError("bounds require low < high in every dimension")
    span = high - low

    def to_unit(x: np.ndarray) -> np.ndarray:
        return np.clip((x - low) / span, 0.0, 1.0)

    def from_unit(u: np.ndarray) -> np.ndarray:
        return low + u * span

    state = gp_init(
        objective.dimension,
        length_scale=gp_length_scale if gp_length_scale is not None else 0.2,
        noise_variance=gp_noise_variance if gp_noise_variance is not None else 1.0e-6,
    )
    state = gp_observe(state, to_unit(init), best_fitness)
    while evals < objective.budget:
        state, unit_x, fitness = bo_step(
            state, lambda u: _checked(objective, from_unit(u)), [seed, evals]
        )
        if fitness > best_fitness:
            best_fitness = fitness
            best_params = from_unit(unit_x)
        history.append((evals, fitness, best_fitness))
        evals += 1
    return OptimizationResult(best_params, best_fitness, history)


def history_to_csv(history) -> str:
    lines = ["eval_index,fitness,best_so_far"]
    for index, fitness, best in history:
        lines.append(f"{index},{format_float(fitness)},{format_float(best)}")
    return "\n".join(lines) + "\n"
