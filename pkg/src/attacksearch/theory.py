"""Exact quantities behind the search guarantees, validated by brute force
and Monte Carlo.

Covers the exhaustive utility map and its eta-effective sets, the Gibbs
reference distribution, the correction operator's mass identities, batch
hit probabilities and the hitting-time bound, the noisy-correction
sufficient condition, the gap between two correction strengths, and the
finite-episode uniform deviation bound with its coverage experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .configspace import AttackConfig, ConfigSpace
from .evaluation import (DEFAULT_WEIGHTS, CleanBaseline, UtilityWeights,
                         estimate_utility)
from .proposal import ProposalDistribution, correction_operator
from .rngutil import Stream
from .victims import ResponseSurfaceVictim


@dataclass(frozen=True)
class UtilityMap:
    """Per-configuration utility over a full enumerated space."""

    space: ConfigSpace
    utilities: np.ndarray
    drops: np.ndarray
    flips: np.ndarray
    runtimes: np.ndarray
    variabilities: np.ndarray

    def __post_init__(self) -> None:
        if self.utilities.shape != (self.space.size,):
            raise ValueError("utility map must cover the whole space")

    @property
    def u_star(self) -> float:
        return float(self.utilities.max())

    @property
    def argmax_indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.utilities == self.utilities.max()))

    @property
    def best_index(self) -> int:
        return self.argmax_indices[0]

    @property
    def best_config(self) -> AttackConfig:
        return self.space.configs[self.best_index]


@dataclass(frozen=True)
class EffectiveSet:
    eta: float
    indices: tuple[int, ...]
    mask: np.ndarray

    def __contains__(self, index: int) -> bool:
        return bool(self.mask[index])

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class BoundReport:
    name: str
    p: float
    b: int
    hit_prob: float
    bound: float
    empirical: float
    standard_error: float
    passed: bool
    detail: str = ""

    def __post_init__(self) -> None:
        if not (0.0 <= self.p <= 1.0) or not (0.0 <= self.hit_prob <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


def brute_force_utility(victim, space: ConfigSpace, baseline: CleanBaseline,
                        weights: UtilityWeights = DEFAULT_WEIGHTS,
                        episodes: int | None = None, seed: int = 0) -> UtilityMap:
    """Evaluate every configuration once through the standard estimator.

    Non-deterministic victims are refused unless an explicit episode count
    for averaging is supplied.
    """
    deterministic = bool(getattr(victim, "is_deterministic", True))
    if episodes is None:
        if not deterministic:
            raise ValueError("victim is not deterministic; supply episodes for averaging")
        episodes = 1
    stream = Stream(seed, (7,))
    n = space.size
    u = np.empty(n)
    d = np.empty(n)
    f = np.empty(n)
    t = np.empty(n)
    v = np.empty(n)
    for i, config in enumerate(space.configs):
        report = estimate_utility(victim, config, episodes, baseline,
                                  stream.child(i).generator(), weights, phase="scout")
        u[i], d[i], f[i] = report.utility, report.drop, report.flip
        t[i], v[i] = report.runtime, report.variability
    return UtilityMap(space, u, d, f, t, v)


def brute_force_utility_reference(victim: ResponseSurfaceVictim, space: ConfigSpace,
                                  baseline: CleanBaseline,
                                  weights: UtilityWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    """Independent nested-loop oracle for deterministic response surfaces.

    Shares no code with the estimator path: walks the grids directly and
    composes the utility inline from the victim's ground-truth surfaces.
    """
    if not victim.is_deterministic:
        raise ValueError("reference oracle requires a deterministic victim")
    out = []
    for family in space.families:
        grid = space.grids[family]
        for eps in grid.epsilons:
            for steps in grid.steps:
                for restarts in grid.restarts:
                    for rho in grid.rhos:
                        for sd in grid.seeds:
                            for alloc in grid.allocations:
                                cfg = AttackConfig(family, eps, steps, restarts,
                                                   rho, sd, alloc)
                                adv = victim.attacked_return_mean(cfg)
                                drop = (baseline.j_clean - adv) / (abs(baseline.j_clean) + 1.0)
                                flip = victim.flip_true(cfg)
                                runtime = victim.episode_seconds_true(cfg)
                                util = (drop + weights.flip * flip
                                        - weights.runtime * math.log(1.0 + runtime))
                                out.append(util)
    return np.array(out)


def population_utility_map(victim: ResponseSurfaceVictim, space: ConfigSpace,
                           weights: UtilityWeights = DEFAULT_WEIGHTS) -> UtilityMap:
    """Closed-form population utility for a (possibly noisy) response surface.

    The variability component is the exact return noise scale normalized by
    |J_clean| + 1, and the flip component is the exact flip probability.
    """
    n = space.size
    u = np.empty(n)
    d = np.empty(n)
    f = np.empty(n)
    t = np.empty(n)
    v = np.empty(n)
    denom = abs(victim.j_clean) + 1.0
    for i, config in enumerate(space.configs):
        d[i] = (victim.j_clean - victim.attacked_return_mean(config)) / denom
        f[i] = victim.flip_true(config)
        t[i] = victim.episode_seconds_true(config)
        v[i] = victim.return_noise_scale(config) / denom
        u[i] = (d[i] + weights.flip * f[i]
                - weights.runtime * math.log1p(t[i]) - weights.variability * v[i])
    return UtilityMap(space, u, d, f, t, v)


def effective_set(umap: UtilityMap, eta: float) -> EffectiveSet:
    """Configurations within eta of the maximal utility."""
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    mask = umap.utilities >= umap.u_star - eta
    return EffectiveSet(eta=eta, indices=tuple(int(i) for i in np.flatnonzero(mask)),
                        mask=mask)


def gibbs_reference(umap: UtilityMap, beta: float) -> ProposalDistribution:
    """Softmax of beta * U over the space (uniform at beta = 0)."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    scaled = beta * umap.utilities
    weights = np.exp(scaled - scaled.max())
    return ProposalDistribution(weights / weights.sum())


def hit_probability(p: float, b: int) -> float:
    """Probability that a batch of b independent draws contains a hit."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    return 1.0 - (1.0 - p) ** b

def hitting_time_bound(p: float, b: int) -> float:
    """Upper bound on the expected first hitting round; inf when p = 0."""
    h = hit_probability(p, b)
    if h == 0.0:
        return math.inf
    return 1.0 / h


def monte_carlo_hitting_time(q, member_mask, b: int, trials: int,
                             rng: np.random.Generator,
                             max_rounds: int = 100_000,
                             name: str = "hitting-time") -> BoundReport:
    """Simulate rounds of b draws until one lands in the member set.

    `q` is either a single proposal or a per-round sequence of proposals
    (the last one repeating). The reported bound is always computed from
    the first round's member mass.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    sequence = list(q) if isinstance(q, (list, tuple)) else [q]
    mask = np.asarray(member_mask, dtype=bool)
    cdfs = [np.cumsum(dist.probs) for dist in sequence]
    p0 = float(sequence[0].probs[mask].sum())
    bound = hitting_time_bound(p0, b)

    hits = np.zeros(trials, dtype=np.int64)
    active = np.arange(trials)
    round_number = 0
    while active.size and round_number < max_rounds:
        cdf = cdfs[min(round_number, len(cdfs) - 1)]
        draws = np.searchsorted(cdf, rng.random((active.size, b)), side="right")
        np.clip(draws, 0, mask.size - 1, out=draws)
        hit = mask[draws].any(axis=1)
        round_number += 1
        hits[active[hit]] = round_number
        active = active[~hit]
    capped = active.size
    hits[active] = max_rounds
    mean = float(hits.mean())
    se = float(hits.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    if p0 == 0.0:
        passed = False
        detail = "no guarantee: member mass is zero"
    else:
        passed = mean <= bound + 3.0 * se and capped == 0
        detail = f"{capped} trials hit the round cap" if capped else ""
    return BoundReport(name=name, p=p0, b=b, hit_prob=hit_probability(p0, b),
                       bound=bound, empirical=mean, standard_error=se,
                       passed=passed, detail=detail)


@dataclass(frozen=True)
class NoisyCorrectionVerdict:
    guaranteed: bool
    threshold: float
    slack: float


def noisy_correction_check(p: float, r: float, gamma: float,
                           xi: float) -> NoisyCorrectionVerdict:
    """Improvement is guaranteed iff xi < gamma/(1+gamma) * (r - p), strictly."""
    for label, value in (("p", p), ("r", r)):
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"{label} must lie in [0, 1], got {value}")
    if gamma < 0 or xi < 0:
        raise ValueError("gamma and xi must be >= 0")
    threshold = gamma / (1.0 + gamma) * (r - p)
    return NoisyCorrectionVerdict(guaranteed=xi < threshold,
                                  threshold=threshold, slack=threshold - xi)


def baseline_gap(p: float, r: float, gamma_ours: float, gamma_base: float) -> float:
    """Ideal corrected-mass difference between two correction strengths."""
    if gamma_ours < 0 or gamma_base < 0:
        raise ValueError("correction strengths must be >= 0")
    return ((gamma_ours - gamma_base) * (r - p)
            / ((1.0 + gamma_ours) * (1.0 + gamma_base)))


def baseline_gap_direct(p: float, r: float, gamma_ours: float,
                        gamma_base: float) -> float:
    """Same quantity via two explicit correction-operator evaluations."""
    q = ProposalDistribution(np.array([p, 1.0 - p]))
    q_star = ProposalDistribution(np.array([r, 1.0 - r]))
    ours = correction_operator(q, q_star, gamma_ours).probs[0]
    base = correction_operator(q, q_star, gamma_base).probs[0]
    return float(ours - base)


def hoeffding_bound(m: int, delta: float, space_size: int, r_min: float,
                    r_max: float, j_clean: float, w_flip: float) -> float:
    """Uniform finite-episode deviation bound over the whole space."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if r_max < r_min:
        raise ValueError("need r_max >= r_min")
    if space_size < 1:
        raise ValueError("space_size must be >= 1")
    root = math.sqrt(math.log(4.0 * space_size / delta) / (2.0 * m))
    return (r_max - r_min) / (abs(j_clean) + 1.0) * root + w_flip * root


@dataclass(frozen=True)
class CoverageReport:
    zeta: float
    trials: int
    deviation_frequency: float       # trials where max |U_hat - U| <= zeta
    implication_frequency: float     # trials where empirical eta-optimal => population-ok
    implication_violations: int      # among covered trials (must be zero)
    required: float                  # 1 - delta minus 3 binomial SEs
    max_deviation_seen: float
    passed: bool


def coverage_experiment(victim: ResponseSurfaceVictim, space: ConfigSpace,
                        m: int, delta: float, trials: int,
                        rng_seed: int, eta: float = 0.05,
                        weights: UtilityWeights = DEFAULT_WEIGHTS) -> CoverageReport:
    """Check the uniform deviation event and the near-optimality implication.

    Requires a victim with hard return bounds. Each trial estimates the
    utility of every configuration from m episodes and tests (a) that all
    estimates deviate from the population utility by at most zeta and
    (b) that every empirically eta-optimal configuration is population
    (eta + 2*zeta)-optimal.
    """
    if not hasattr(victim, "return_bounds"):
        raise ValueError("coverage experiment requires a victim with bounded returns")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    r_min, r_max = victim.return_bounds(space.configs)
    zeta = hoeffding_bound(m, delta, space.size, r_min, r_max, victim.j_clean,
                           weights.flip)
    pop = population_utility_map(victim, space, weights)
    pop_u = pop.utilities
    pop_star = pop.u_star
    baseline = CleanBaseline(j_clean=victim.j_clean, episodes=1)

    covered = 0
    implied = 0
    violations = 0
    max_dev_seen = 0.0
    stream = Stream(rng_seed, (404,))
    for trial in range(trials):
        estimates = np.empty(space.size)
        for i, config in enumerate(space.configs):
            report = estimate_utility(victim, config, m, baseline,
                                      stream.child(trial, i).generator(), weights)
            estimates[i] = report.utility
        max_dev = float(np.abs(estimates - pop_u).max())
        max_dev_seen = max(max_dev_seen, max_dev)
        event_a = max_dev <= zeta
        near_opt = estimates >= estimates.max() - eta
        event_b = bool(np.all(pop_u[near_opt] >= pop_star - eta - 2.0 * zeta))
        covered += event_a
        implied += event_b
        if event_a and not event_b:
            violations += 1
    freq_a = covered / trials
    freq_b = implied / trials
    se = math.sqrt(max(freq_a * (1.0 - freq_a), 1e-12) / trials)
    required = (1.0 - delta) - 3.0 * se
    passed = freq_a >= required and freq_b >= required and violations == 0
    return CoverageReport(zeta=zeta, trials=trials, deviation_frequency=freq_a,
                          implication_frequency=freq_b,
                          implication_violations=violations, required=required,
                          max_deviation_seen=max_dev_seen, passed=passed)
