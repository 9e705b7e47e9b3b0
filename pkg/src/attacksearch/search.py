"""The finite-budget search loop with feedback-refined proposals.

Each round samples a batch from the current proposal (restricted to
configurations not yet evaluated), evaluates it with the scout-confirm
protocol, converts the outcomes into deterministic feedback signals,
builds the feedback-induced proposal from the full history, and mixes it
into the current proposal. The loop stops once exactly
min(budget, |space|) distinct configurations have been evaluated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .configspace import AttackConfig, ConfigSpace
from .evaluation import (DEFAULT_WEIGHTS, CleanBaseline, Evaluation,
                         UtilityReport, UtilityWeights, scout_confirm)
from .proposal import ProposalDistribution, ProposalError, update
from .rngutil import Stream

logger = logging.getLogger(__name__)

TAG_WEAK_DROP = "weak-drop"
TAG_HIGH_COST = "high-cost"
TAG_UNSTABLE = "unstable-returns"
TAG_LOW_FLIP = "low-flip"


@dataclass(frozen=True)
class FeedbackSignal:
    """Failure tags plus grid-step direction recommendations."""

    tags: tuple[str, ...] = ()
    epsilon_step: int = 0        # -1 | 0 | +1 grid positions
    steps_step: int = 0
    toggle_allocation: bool = False

    @property
    def is_zero(self) -> bool:
        return (not self.tags and self.epsilon_step == 0
                and self.steps_step == 0 and not self.toggle_allocation)


def feedback(report: UtilityReport,
             weights: UtilityWeights = DEFAULT_WEIGHTS) -> FeedbackSignal:
    """Deterministic rule set converting one evaluation into directions."""
    tags: list[str] = []
    eps_step = 0
    steps_step = 0
    toggle = False
    if report.drop < 0.1:
        tags.append(TAG_WEAK_DROP)
        eps_step = 1
    if weights.runtime * math.log1p(report.runtime) > report.drop + weights.flip * report.flip:
        tags.append(TAG_HIGH_COST)
        steps_step = -1
    if report.variability > 0.5 * max(report.drop, 0.1):
        tags.append(TAG_UNSTABLE)
    if report.flip < 0.2:
        tags.append(TAG_LOW_FLIP)
        toggle = True
    return FeedbackSignal(tuple(tags), eps_step, steps_step, toggle)


@dataclass(frozen=True)
class SearchParams:
    budget: int
    batch_size: int
    alpha: float = 0.5
    alpha_schedule: str = "constant"     # "constant" | "harmonic"
    beta: float = 50.0                   # exploitation temperature for q-hat
    spread: float = 2.0                  # neighborhood deposit weight
    scout_episodes: int = 2
    confirm_episodes: int = 5
    confirm_top_k: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.budget >= self.batch_size >= 1):
            raise ValueError("need budget >= batch_size >= 1")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.alpha_schedule not in ("constant", "harmonic"):
            raise ValueError(f"unknown alpha schedule: {self.alpha_schedule!r}")
        if self.beta < 0 or self.spread < 0:
            raise ValueError("beta and spread must be >= 0")
        if self.scout_episodes < 1 or self.confirm_episodes < 1 or self.confirm_top_k < 1:
            raise ValueError("episode counts and confirm_top_k must be >= 1")

    def alpha_at(self, round_number: int) -> float:
        """Update rate for the given 1-based round."""
        if self.alpha_schedule == "harmonic":
            return 1.0 / (1.0 + round_number)
        return self.alpha


@dataclass
class EvalEntry:
    round_index: int
    phase: str
    config_index: int
    report: UtilityReport
    signal: FeedbackSignal
    seed: int


@dataclass
class SearchHistory:
    """Everything the search has observed, in evaluation order."""

    space_size: int
    entries: list[EvalEntry] = field(default_factory=list)
    evaluated: set[int] = field(default_factory=set)
    current_utility: dict[int, float] = field(default_factory=dict)
    current_signal: dict[int, FeedbackSignal] = field(default_factory=dict)
    best_per_round: list[tuple[int, float]] = field(default_factory=list)
    episodes_used: int = 0
    virtual_seconds: float = 0.0
    notes: list[str] = field(default_factory=list)
    proposal_snapshots: list[np.ndarray] = field(default_factory=list)

    def record(self, entry: EvalEntry) -> None:
        self.entries.append(entry)
        self.evaluated.add(entry.config_index)
        # confirmed utilities replace scout utilities for the same config
        self.current_utility[entry.config_index] = entry.report.utility
        self.current_signal[entry.config_index] = entry.signal
        self.virtual_seconds += entry.report.runtime * entry.report.episodes

    def close_round(self, space: ConfigSpace) -> None:
        idx, value = _argmax_utility(self.current_utility, space)
        if self.best_per_round and value < self.best_per_round[-1][1]:
            idx, value = self.best_per_round[-1]
        self.best_per_round.append((idx, value))

    @property
    def rounds(self) -> int:
        return len(self.best_per_round)


def _argmax_utility(utilities: dict[int, float], space: ConfigSpace) -> tuple[int, float]:
    best_idx = min(utilities, key=lambda i: (-utilities[i], space.configs[i].sort_key()))
    return best_idx, utilities[best_idx]


def propose_batch(q: ProposalDistribution, b: int, history: SearchHistory,
                  rng: np.random.Generator) -> list[int]:
    """Sample b distinct unevaluated configuration indices proportional to q.

    Returns every remaining index when fewer than b are unevaluated, and an
    empty list when the space is exhausted. If the proposal places no mass
    on the unevaluated set, sampling falls back to uniform over it.
    """
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    if q.size != history.space_size:
        raise ProposalError("proposal is not aligned with the search space")
    remaining = np.setdiff1d(np.arange(q.size), np.fromiter(history.evaluated, dtype=int,
                                                            count=len(history.evaluated)))
    if remaining.size == 0:
        return []
    if remaining.size <= b:
        return [int(i) for i in remaining]
    weights = q.probs[remaining].copy()
    total = weights.sum()
    if total <= 0.0:
        weights = np.full(remaining.size, 1.0 / remaining.size)
    else:
        weights = weights / total
    chosen: list[int] = []
    alive = np.ones(remaining.size, dtype=bool)
    for _ in range(b):
        w = np.where(alive, weights, 0.0)
        w_total = w.sum()
        if w_total <= 0.0:
            w = alive.astype(float)
            w_total = w.sum()
        pick = int(rng.choice(remaining.size, p=w / w_total))
        alive[pick] = False
        chosen.append(int(remaining[pick]))
    return chosen


def induced_proposal(history: SearchHistory, space: ConfigSpace, beta: float,
                     spread: float) -> ProposalDistribution:
    """Exploitation weights on evaluated configs plus neighborhood deposits.

    Each evaluated config carries weight exp(beta * U) and spreads
    spread * weight uniformly over the neighborhood of its position
    shifted one grid step along any nonzero feedback direction.
    """
    if not history.current_utility:
        raise ValueError("history contains no evaluated configurations")
    if beta < 0 or spread < 0:
        raise ValueError("beta and spread must be >= 0")
    utilities = history.current_utility
    u_max = max(utilities.values())
    probs = np.zeros(space.size)
    for idx, utility in utilities.items():
        weight = math.exp(beta * (utility - u_max))
        probs[idx] += weight
        if spread <= 0:
            continue
        signal = history.current_signal.get(idx, FeedbackSignal())
        center = space.shifted(space.configs[idx],
                               epsilon_step=signal.epsilon_step,
                               steps_step=signal.steps_step,
                               toggle_allocation=signal.toggle_allocation)
        neighbors = space.neighbors(center)
        if not neighbors:
            continue
        deposit = spread * weight / len(neighbors)
        for n in neighbors:
            probs[space.index_of(n)] += deposit
    return ProposalDistribution(probs / probs.sum())


@dataclass(frozen=True)
class SearchResult:
    best_config: AttackConfig
    best_report: UtilityReport
    best_index: int
    history: SearchHistory


def run_search(victim, space: ConfigSpace, params: SearchParams,
               q0: ProposalDistribution, baseline: CleanBaseline,
               weights: UtilityWeights = DEFAULT_WEIGHTS,
               refine: bool = True, record_proposals: bool = False) -> SearchResult:
    """Run the full loop until exactly min(budget, |space|) configs are evaluated.

    With refine=False the proposal is never updated (pure sampling from q0),
    which is the uniform-random baseline when q0 is uniform. With
    record_proposals=True the proposal vector in force at each round is
    snapshotted into the history.
    """
    if q0.size != space.size:
        raise ProposalError("initial proposal is not aligned with the space")
    budget = params.budget
    if budget > space.size:
        budget = space.size
    history = SearchHistory(space_size=space.size)
    if budget < params.budget:
        note = f"budget clamped from {params.budget} to {budget} (space size)"
        logger.warning(note)
        history.notes.append(note)
    best_eval: dict[int, Evaluation] = {}
    stream = Stream(params.seed)
    q = q0
    round_index = 0
    while len(history.evaluated) < budget:
        if record_proposals:
            history.proposal_snapshots.append(q.probs.copy())
        batch_budget = min(params.batch_size, budget - len(history.evaluated))
        batch = propose_batch(q, batch_budget, history,
                              stream.child(round_index, 0).generator())
        if not batch:
            break
        configs = [space.configs[i] for i in batch]
        top_k = min(params.confirm_top_k, len(configs))
        outcome = scout_confirm(victim, configs, params.scout_episodes,
                                params.confirm_episodes, top_k, baseline,
                                stream.child(round_index, 1), weights)
        for ev in outcome.scouts:
            idx = space.index_of(ev.report.config)
            history.record(EvalEntry(round_index, "scout", idx, ev.report,
                                     feedback(ev.report, weights), ev.seed))
            best_eval[idx] = ev
        for ev in outcome.confirms:
            idx = space.index_of(ev.report.config)
            history.record(EvalEntry(round_index, "confirm", idx, ev.report,
                                     feedback(ev.report, weights), ev.seed))
            best_eval[idx] = ev
        history.episodes_used += outcome.episodes_used
        history.close_round(space)
        if refine and len(history.evaluated) < budget:
            q_hat = induced_proposal(history, space, params.beta, params.spread)
            q = update(q, q_hat, params.alpha_at(round_index + 1))
        round_index += 1
    best_index, _ = _argmax_utility(history.current_utility, space)
    return SearchResult(best_config=space.configs[best_index],
                        best_report=best_eval[best_index].report,
                        best_index=best_index, history=history)
