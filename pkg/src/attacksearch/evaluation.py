"""Utility components and the scout-confirm evaluation protocol.

The scalarized utility of a configuration is

    U = D + w_f * F - w_r * ln(1 + T) - w_v * V

with D the normalized reward drop, F the action flip rate, T the
per-episode virtual evaluation time in seconds, and V the normalized
return variability. T is charged per episode so that utilities of a
deterministic victim do not depend on how many episodes an estimate used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .configspace import AttackConfig
from .rngutil import Stream
from .victims import RolloutBatch


@dataclass(frozen=True)
class UtilityWeights:
    flip: float = 0.25
    runtime: float = 0.15
    variability: float = 0.05

    def __post_init__(self) -> None:
        if self.flip < 0 or self.runtime < 0 or self.variability < 0:
            raise ValueError("utility weights must be >= 0")


DEFAULT_WEIGHTS = UtilityWeights()


@dataclass(frozen=True)
class CleanBaseline:
    j_clean: float
    episodes: int
    batch: RolloutBatch | None = None   # clean stats, forwarded to summarization

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("baseline episodes must be >= 1")


@dataclass(frozen=True)
class UtilityReport:
    config: AttackConfig
    drop: float
    flip: float
    runtime: float       # per-episode virtual seconds
    variability: float
    utility: float
    episodes: int
    returns: tuple[float, ...]
    phase: str           # "scout" | "confirm"

    def __post_init__(self) -> None:
        if not (0.0 <= self.flip <= 1.0):
            raise ValueError(f"flip rate must lie in [0, 1], got {self.flip}")
        if self.runtime < 0 or self.variability < 0:
            raise ValueError("runtime and variability must be >= 0")


def reward_drop(j_clean: float, j_adv: float) -> float:
    """(J_clean - J_adv) / (|J_clean| + 1); negative when the attack helps."""
    if not (math.isfinite(j_clean) and math.isfinite(j_adv)):
        raise ValueError("returns must be finite")
    return (j_clean - j_adv) / (abs(j_clean) + 1.0)


def flip_rate(clean_actions, attacked_actions, action_kind: str = "discrete",
              kappa: float = 0.0) -> float:
    """Fraction of decision points whose action changed.

    Discrete actions flip on inequality; continuous actions flip when the
    L1 action shift exceeds kappa.
    """
    clean = list(clean_actions)
    attacked = list(attacked_actions)
    if len(clean) != len(attacked):
        raise ValueError("action sequences must have equal length")
    if not clean:
        raise ValueError("action sequences must be non-empty")
    if action_kind == "discrete":
        hits = sum(1 for u, v in zip(clean, attacked) if int(u) != int(v))
    elif action_kind == "continuous":
        hits = sum(1 for u, v in zip(clean, attacked)
                   if float(np.abs(np.asarray(u) - np.asarray(v)).sum()) > kappa)
    else:
        raise ValueError(f"unknown action kind: {action_kind!r}")
    return hits / len(clean)


def continuous_flip_threshold(action_range: float, action_dim: int) -> float:
    """Default kappa: 5% of the action range per dimension, L1-aggregated."""
    return 0.05 * action_range * action_dim


def variability(returns, j_clean: float) -> float:
    """Population standard deviation of returns, normalized by |J_clean|+1."""
    arr = np.asarray(list(returns), dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one return")
    if arr.size == 1:
        return 0.0
    return float(np.std(arr)) / (abs(j_clean) + 1.0)


def scalarize(drop: float, flip: float, runtime: float, var: float,
              weights: UtilityWeights = DEFAULT_WEIGHTS) -> float:
    for name, value in (("drop", drop), ("flip", flip), ("runtime", runtime),
                        ("variability", var)):
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")
    if runtime < 0:
        raise ValueError(f"runtime must be >= 0, got {runtime}")
    return (drop + weights.flip * flip
            - weights.runtime * math.log1p(runtime)
            - weights.variability * var)


def make_baseline(victim, episodes: int, rng: np.random.Generator) -> CleanBaseline:
    batch = victim.clean_rollout(episodes, rng)
    return CleanBaseline(j_clean=float(np.mean(batch.returns)),
                         episodes=episodes, batch=batch)


class VictimEvaluationError(RuntimeError):
    def __init__(self, config: AttackConfig, cause: Exception):
        super().__init__(f"victim failed while evaluating {config.encode()}: {cause}")
        self.config = config


def estimate_utility(victim, config: AttackConfig, episodes: int,
                     baseline: CleanBaseline, rng: np.random.Generator,
                     weights: UtilityWeights = DEFAULT_WEIGHTS,
                     phase: str = "scout") -> UtilityReport:
    """Empirical utility from `episodes` attacked rollouts."""
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    try:
        batch = victim.attacked_rollout(config, episodes, rng)
    except Exception as exc:  # attach the offending config
        raise VictimEvaluationError(config, exc) from exc
    j_adv = float(np.mean(batch.returns))
    drop = reward_drop(baseline.j_clean, j_adv)
    flip = batch.flip_fraction
    runtime = batch.elapsed_virtual / episodes
    var = variability(batch.returns, baseline.j_clean)
    utility = scalarize(drop, flip, runtime, var, weights)
    return UtilityReport(config=config, drop=drop, flip=flip, runtime=runtime,
                         variability=var, utility=utility, episodes=episodes,
                         returns=tuple(float(r) for r in batch.returns), phase=phase)


@dataclass(frozen=True)
class Evaluation:
    report: UtilityReport
    seed: int            # logged stream fingerprint for this evaluation


@dataclass(frozen=True)
class ScoutConfirmResult:
    scouts: tuple[Evaluation, ...]
    confirms: tuple[Evaluation, ...]
    episodes_used: int


_SCOUT, _CONFIRM = 0, 1


def scout_confirm(victim, candidates, scout_episodes: int, confirm_episodes: int,
                  top_k: int, baseline: CleanBaseline, stream: Stream,
                  weights: UtilityWeights = DEFAULT_WEIGHTS) -> ScoutConfirmResult:
    """Scout every candidate cheaply, then re-evaluate the best few.

    Consumes exactly len(candidates) * scout_episodes
    + top_k * confirm_episodes episodes.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if scout_episodes < 1 or confirm_episodes < 1:
        raise ValueError("episode counts must be >= 1")
    if not (1 <= top_k <= len(candidates)):
        raise ValueError(f"top_k must lie in [1, {len(candidates)}], got {top_k}")

    scouts = []
    for i, config in enumerate(candidates):
        child = stream.child(_SCOUT, i)
        report = estimate_utility(victim, config, scout_episodes, baseline,
                                  child.generator(), weights, phase="scout")
        scouts.append(Evaluation(report, child.state_u64()))

    ranked = sorted(range(len(candidates)),
                    key=lambda i: (-scouts[i].report.utility,
                                   candidates[i].sort_key()))
    confirms = []
    for j, i in enumerate(ranked[:top_k]):
        child = stream.child(_CONFIRM, j)
        report = estimate_utility(victim, candidates[i], confirm_episodes, baseline,
                                  child.generator(), weights, phase="confirm")
        confirms.append(Evaluation(report, child.state_u64()))

    episodes_used = len(candidates) * scout_episodes + top_k * confirm_episodes
    return ScoutConfirmResult(tuple(scouts), tuple(confirms), episodes_used)
