"""Pluggable simulated victims.

Two built-ins:

* `ResponseSurfaceVictim` - a task parameterized by a small vector theta
  that maps every attack configuration to a ground-truth expected reward
  drop, flip probability, per-episode evaluation time, and return noise
  scale. Rollouts draw from those surfaces directly, which makes large
  search experiments cheap and gives the theory checks a closed-form
  population utility. Tasks with nearby theta have nearby optimal
  configurations.

* `LinearWorldModelVictim` - a deterministic gridworld whose agent acts
  through a linear encoder, linear latent dynamics, and a softmax-linear
  policy. Observation attacks are genuinely executed against this victim:
  perturbations are synthesized per decision point, projected to the
  epsilon/255 ball and the observation box, and the environment advances
  with the attacked action while its dynamics stay untouched.

Both victims are immutable descriptors plus pure rollout functions; given
equal seeds and arguments, rollouts are bit-reproducible except for the
measured wall-clock field (utilities only ever consume the virtual clock).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import attacks
from .attacks import LinearAttackSurface, apply_perturbation, synthesize_delta
from .configspace import AllocationRule, AttackConfig, AttackFamily
from .rngutil import Stream

THETA_DIM = 8

# Family-level hyperparameter ranges used by the response surface. These
# are fixed constants of the surface (not read from any particular search
# space) so the ground truth stays a pure function of (theta, config).
_FAMILY_EPS_RANGE = {
    AttackFamily.APGD_CE: (2.0, 20.0),
    AttackFamily.APGD_DLR: (2.0, 20.0),
    AttackFamily.FAB: (2.0, 20.0),
    AttackFamily.SQUARE: (2.0, 16.0),
    AttackFamily.PHYSCOND_WMA: (2.0, 20.0),
}
_FAMILY_STEPS_RANGE = {
    AttackFamily.APGD_CE: (4.0, 24.0),
    AttackFamily.APGD_DLR: (4.0, 24.0),
    AttackFamily.FAB: (6.0, 32.0),
    AttackFamily.SQUARE: (20.0, 160.0),
    AttackFamily.PHYSCOND_WMA: (6.0, 32.0),
}


@dataclass(frozen=True)
class VictimDescriptor:
    task_id: str
    action_kind: str     # "discrete" | "continuous"
    action_count: int
    horizon: int


@dataclass(frozen=True)
class EpisodeTrace:
    """Per-step records of one episode (struct-of-arrays layout)."""

    latents: np.ndarray           # (T, k)
    predicted_next: np.ndarray    # (T, k); row t predicts the latent at t+1
    actions: np.ndarray           # (T,)
    rewards: np.ndarray           # (T,)
    margins: np.ndarray           # (T,) top-2 policy probability gap
    observations: np.ndarray | None = None
    perturbed: np.ndarray | None = None


@dataclass(frozen=True)
class RolloutBatch:
    returns: np.ndarray                     # (episodes,)
    flips: np.ndarray | None                # (decisions,) bool; attacked only
    elapsed_wall: float                     # measured; never enters utilities
    elapsed_virtual: float                  # deterministic clock, seconds
    trajectories: tuple[EpisodeTrace, ...] = ()
    flip_rate_exact: float | None = None    # set by fully deterministic victims

    def __post_init__(self) -> None:
        if self.returns.size < 1:
            raise ValueError("rollout batch must contain at least one episode")
        if self.elapsed_virtual < 0 or self.elapsed_wall < 0:
            raise ValueError("elapsed time must be >= 0")

    @property
    def flip_fraction(self) -> float:
        if self.flip_rate_exact is not None:
            return self.flip_rate_exact
        if self.flips is None or self.flips.size == 0:
            return 0.0
        return float(np.mean(self.flips))


def _require_episodes(episodes: int) -> None:
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class ResponseSurfaceVictim:
    """Analytic stand-in victim driven by a task parameter vector."""

    task_id: str
    theta: tuple[float, ...]
    noise_scale: float = 0.0
    horizon: int = 10
    action_count: int = 6

    def __post_init__(self) -> None:
        if len(self.theta) != THETA_DIM:
            raise ValueError(f"theta must have {THETA_DIM} components")
        if any(not (0.0 <= t <= 1.0) for t in self.theta):
            raise ValueError("theta components must lie in [0, 1]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")

    @property
    def descriptor(self) -> VictimDescriptor:
        return VictimDescriptor(self.task_id, "discrete", self.action_count, self.horizon)

    @property
    def is_deterministic(self) -> bool:
        return self.noise_scale == 0.0

    @property
    def j_clean(self) -> float:
        return 100.0 * (0.5 + self.theta[0])

    @property
    def preferred_allocation(self) -> AllocationRule:
        return AllocationRule.MARGIN_LINEAR if self.theta[3] >= 0.5 else AllocationRule.FIXED

    # ------------------------------------------------------------------
    # Ground-truth surfaces
    # ------------------------------------------------------------------

    def drop_true(self, config: AttackConfig) -> float:
        """Expected normalized reward drop; smooth and unimodal in (eps, steps).

        This is the population value of (J_clean - J_adv) / (|J_clean| + 1);
        the attacked return mean is derived from it, so drops above 1 push
        attacked returns below zero.
        """
        th = self.theta
        e_lo, e_hi = _FAMILY_EPS_RANGE[config.family]
        s_lo, s_hi = _FAMILY_STEPS_RANGE[config.family]
        eps_peak = e_lo + (e_hi - e_lo) * th[1]
        steps_peak = s_lo + (s_hi - s_lo) * th[2]
        sig_e = 0.25 * (e_hi - e_lo)
        sig_s = 0.25 * (s_hi - s_lo)
        gauss = math.exp(-((config.epsilon - eps_peak) ** 2) / (2 * sig_e ** 2)
                         - ((config.steps - steps_peak) ** 2) / (2 * sig_s ** 2))
        amp = 0.55 + 0.5 * th[4]
        fam_pref = 0.75 + 0.25 * math.cos(2 * math.pi * (th[5] - config.family.rank / 5.0))
        alloc_mult = 1.0 if config.allocation is self.preferred_allocation else 0.8
        rho_mult = 1.0 - 0.1 * abs(config.rho - 0.75)
        return amp * fam_pref * gauss * alloc_mult * rho_mult

    def flip_true(self, config: AttackConfig) -> float:
        """Flip probability; monotone increasing in epsilon, capped below 1."""
        cap = 0.55 + 0.4 * self.theta[6]
        return cap * (1.0 - math.exp(-config.epsilon / 8.0))

    def episode_seconds_true(self, config: AttackConfig) -> float:
        cost = 0.35 + 0.65 * self.theta[7]
        alloc_mult = 1.12 if config.allocation is AllocationRule.MARGIN_LINEAR else 1.0
        return cost * (2.0 + 0.45 * config.steps * config.restarts) * alloc_mult

    def return_noise_scale(self, config: AttackConfig) -> float:
        return self.noise_scale * 0.05 * (abs(self.j_clean) + 1.0)

    def attacked_return_mean(self, config: AttackConfig) -> float:
        return self.j_clean - self.drop_true(config) * (abs(self.j_clean) + 1.0)

    def return_bounds(self, configs) -> tuple[float, float]:
        """Hard bounds on attacked episodic returns over the given configs."""
        means = [self.attacked_return_mean(c) for c in configs]
        spread = math.sqrt(3.0) * max((self.return_noise_scale(c) for c in configs), default=0.0)
        return min(means) - spread, max(means) + spread

    # ------------------------------------------------------------------
    # Rollouts
    # ------------------------------------------------------------------

    def clean_rollout(self, episodes: int, rng: np.random.Generator) -> RolloutBatch:
        _require_episodes(episodes)
        start = time.perf_counter()
        trace = self._clean_trace()
        trajectories = tuple(trace for _ in range(episodes))
        returns = np.array([math.fsum(trace.rewards)] * episodes, dtype=float)
        return RolloutBatch(
            returns=returns,
            flips=None,
            elapsed_wall=time.perf_counter() - start,
            elapsed_virtual=0.5 * episodes,
            trajectories=trajectories,
        )

    def _clean_trace(self) -> EpisodeTrace:
        """Deterministic pseudo-trajectory whose statistics encode theta."""
        th = self.theta
        h = self.horizon
        t = np.arange(h, dtype=float)
        freq = 0.5 + 2.0 * th[5]
        phase = 2.0 * math.pi * th[1]
        scale = 0.5 + 2.0 * th[2]
        latents = np.stack([
            scale * np.sin(freq * t + phase),
            scale * (0.8 + 0.4 * th[3]) * np.cos(freq * t + phase),
            np.full(h, scale * (0.5 + th[1])),
            np.full(h, scale * (0.5 + th[6])),
        ], axis=1)
        pred_err = 0.05 + 0.4 * th[6]
        predicted = np.empty_like(latents)
        predicted[:-1] = latents[1:]
        predicted[-1] = latents[-1]
        predicted[:-1, 0] += pred_err * np.where(np.arange(h - 1) % 2 == 0, 1.0, -1.0)
        pattern = 1.0 + 0.4 * np.sin((1.0 + 2.0 * th[5]) * t + 1.3)
        rewards = self.j_clean * pattern / math.fsum(pattern)
        stride = 1 + int(2.999 * th[3])
        actions = (stride * np.arange(h)) % self.action_count
        margins = np.full(h, 0.15 + 0.7 * th[3])
        return EpisodeTrace(latents=latents, predicted_next=predicted,
                            actions=actions, rewards=rewards, margins=margins)

    def attacked_rollout(self, config: AttackConfig, episodes: int,
                         rng: np.random.Generator) -> RolloutBatch:
        _require_episodes(episodes)
        start = time.perf_counter()
        mean_return = self.attacked_return_mean(config)
        flip_p = self.flip_true(config)
        n_flip_samples = episodes * self.horizon
        if self.is_deterministic:
            returns = np.full(episodes, mean_return, dtype=float)
            # illustrative indicator pattern; the exact rate rides alongside
            idx = np.arange(n_flip_samples, dtype=float)
            flips = np.floor((idx + 1) * flip_p) - np.floor(idx * flip_p) >= 1.0
            flip_exact = flip_p
        else:
            sigma = self.return_noise_scale(config)
            half_width = math.sqrt(3.0) * sigma
            returns = mean_return + rng.uniform(-half_width, half_width, size=episodes)
            flips = rng.random(n_flip_samples) < flip_p
            flip_exact = None
        return RolloutBatch(
            returns=returns,
            flips=flips,
            elapsed_wall=time.perf_counter() - start,
            elapsed_virtual=self.episode_seconds_true(config) * episodes,
            flip_rate_exact=flip_exact,
        )


def surface_task(task_id: str, task_seed: int, noise_scale: float = 0.0,
                 horizon: int = 10, action_count: int = 6) -> ResponseSurfaceVictim:
    rng = Stream(task_seed, (101,)).generator()
    theta = tuple(rng.uniform(0.05, 0.95, size=THETA_DIM).tolist())
    return ResponseSurfaceVictim(task_id, theta, noise_scale, horizon, action_count)


def surface_task_family(family_seed: int, n_tasks: int, noise_scale: float = 0.0,
                        n_clusters: int = 5, jitter: float = 0.02,
                        task_prefix: str = "task", horizon: int = 10,
                        action_count: int = 6) -> list[ResponseSurfaceVictim]:
    """Tasks drawn around shared cluster centers.

    Tasks in the same cluster have nearly identical theta, hence nearly
    identical optimal configurations and behavioral summaries.
    """
    rng = Stream(family_seed, (202,)).generator()
    centers = rng.uniform(0.12, 0.88, size=(n_clusters, THETA_DIM))
    tasks = []
    for i in range(n_tasks):
        center = centers[i % n_clusters]
        theta = np.clip(center + rng.normal(0.0, jitter, size=THETA_DIM), 0.0, 1.0)
        tasks.append(ResponseSurfaceVictim(
            f"{task_prefix}-{i:03d}", tuple(theta.tolist()),
            noise_scale, horizon, action_count))
    return tasks


# ----------------------------------------------------------------------
# Linear closed-loop world-model victim
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AttackStepOutcome:
    perturbed_obs: np.ndarray
    flipped: bool
    clean_action: int
    attacked_action: int
    loss_evals: int


@dataclass(frozen=True)
class LinearWorldModelVictim:
    """Deterministic gridworld agent with linear encoder/dynamics/policy."""

    task_id: str
    obs_dim: int = 64
    latent_dim: int = 12
    grid_size: int = 5
    action_count: int = 4
    horizon: int = 12
    weight_seed: int = 0
    gradient_cost_seconds: float = 0.05
    step_cost_seconds: float = 0.01

    def __post_init__(self) -> None:
        if self.action_count != 4:
            raise ValueError("the gridworld victim uses exactly 4 move actions")
        if self.grid_size < 2 or self.obs_dim < 4 or self.latent_dim < 2:
            raise ValueError("victim dimensions too small")

    @property
    def descriptor(self) -> VictimDescriptor:
        return VictimDescriptor(self.task_id, "discrete", self.action_count, self.horizon)

    @property
    def n_cells(self) -> int:
        return self.grid_size * self.grid_size

    @cached_property
    def _weights(self) -> dict[str, np.ndarray]:
        rng = Stream(self.weight_seed, (11, 13)).generator()
        d, k, a = self.obs_dim, self.latent_dim, self.action_count
        render = 0.45 * np.tanh(rng.normal(0.0, 1.2, size=(d, self.n_cells)))
        encoder = rng.normal(0.0, 1.0 / math.sqrt(d), size=(k, d))
        raw = rng.normal(size=(k, k))
        q, _ = np.linalg.qr(raw)
        dynamics = 0.9 * q
        action_in = rng.normal(0.0, 0.3 / math.sqrt(k), size=(k, a))
        # Fit the policy head to goal-seeking target logits so the clean
        # agent is competent and action flips genuinely cost return. The
        # rank-k least-squares fit plus target jitter leaves imperfections.
        targets = np.zeros((a, self.n_cells))
        n = self.grid_size
        g_row, g_col = divmod(self.n_cells - 1, n)
        for cell in range(self.n_cells):
            row, col = divmod(cell, n)
            dist = abs(row - g_row) + abs(col - g_col)
            for action in range(a):
                nrow, ncol = row, col
                if action == 0:
                    nrow = max(row - 1, 0)
                elif action == 1:
                    nrow = min(row + 1, n - 1)
                elif action == 2:
                    ncol = max(col - 1, 0)
                else:
                    ncol = min(col + 1, n - 1)
                ndist = abs(nrow - g_row) + abs(ncol - g_col)
                targets[action, cell] = 1.0 if ndist < dist else (-1.0 if ndist > dist else -0.2)
        targets += rng.normal(0.0, 0.15, size=targets.shape)
        latent_states = encoder @ render
        policy = targets @ np.linalg.pinv(latent_states)
        for arr in (render, encoder, dynamics, action_in, policy):
            arr.setflags(write=False)
        return {"render": render, "encoder": encoder, "dynamics": dynamics,
                "action_in": action_in, "policy": policy}

    @cached_property
    def attack_surface(self) -> LinearAttackSurface:
        w = self._weights
        logit_map = w["policy"] @ w["encoder"]
        logit_map.setflags(write=False)
        return LinearAttackSurface(logit_map=logit_map, encoder=w["encoder"],
                                   dynamics=w["dynamics"], action_in=w["action_in"])

    @property
    def goal_cell(self) -> int:
        return self.n_cells - 1

    def observe(self, cell: int) -> np.ndarray:
        return self._weights["render"][:, cell].copy()

    def encode(self, obs: np.ndarray) -> np.ndarray:
        return self._weights["encoder"] @ obs

    def policy_logits(self, latent: np.ndarray) -> np.ndarray:
        return self._weights["policy"] @ latent

    def _policy(self, obs: np.ndarray) -> tuple[int, float, np.ndarray]:
        """Greedy action, top-2 probability margin, and the latent."""
        latent = self.encode(obs)
        logits = self.policy_logits(latent)
        shifted = logits - logits.max()
        probs = np.exp(shifted)
        probs /= probs.sum()
        order = np.argsort(probs)[::-1]
        margin = float(probs[order[0]] - probs[order[1]])
        return int(order[0]), margin, latent

    def transition(self, cell: int, action: int) -> tuple[int, float, bool]:
        """Deterministic grid move; returns (next_cell, reward, done)."""
        n = self.grid_size
        row, col = divmod(cell, n)
        if action == 0:
            row = max(row - 1, 0)
        elif action == 1:
            row = min(row + 1, n - 1)
        elif action == 2:
            col = max(col - 1, 0)
        else:
            col = min(col + 1, n - 1)
        nxt = row * n + col
        if nxt == self.goal_cell:
            return nxt, 1.0, True
        g_row, g_col = divmod(self.goal_cell, n)
        dist = abs(row - g_row) + abs(col - g_col)
        reward = -0.05 - 0.1 * dist / (2 * (n - 1))
        return nxt, reward, False

    def effective_steps(self, config: AttackConfig, margin: float) -> int:
        """Attack steps for one decision point under the allocation rule."""
        if config.allocation is AllocationRule.FIXED:
            return config.steps
        frac = _clip01(margin)
        return math.ceil(1 + (config.steps - 1) * frac)

    def attack_step(self, cell: int, config: AttackConfig,
                    attack_rng: np.random.Generator,
                    prev_latent: np.ndarray | None = None,
                    prev_action: int | None = None) -> AttackStepOutcome:
        obs = self.observe(cell)
        clean_action, margin, _ = self._policy(obs)
        steps = self.effective_steps(config, margin)
        result = synthesize_delta(self.attack_surface, obs, clean_action, config,
                                  steps, attack_rng, prev_latent, prev_action)
        perturbed = apply_perturbation(obs, result.delta, config.epsilon)
        attacked_action, _, _ = self._policy(perturbed)
        return AttackStepOutcome(
            perturbed_obs=perturbed,
            flipped=attacked_action != clean_action,
            clean_action=clean_action,
            attacked_action=attacked_action,
            loss_evals=result.loss_evals,
        )

    def clean_rollout(self, episodes: int, rng: np.random.Generator) -> RolloutBatch:
        _require_episodes(episodes)
        start = time.perf_counter()
        root = int(rng.integers(2 ** 63))
        traces, returns = [], []
        virtual = 0.0
        for ep in range(episodes):
            ep_gen = Stream(root, (ep,)).generator()
            cell = int(ep_gen.integers(self.n_cells))
            latents, preds, actions, rewards, margins = [], [], [], [], []
            for _ in range(self.horizon):
                obs = self.observe(cell)
                action, margin, latent = self._policy(obs)
                pred = self.attack_surface.predicted_latent(latent, action)
                cell, reward, done = self.transition(cell, action)
                latents.append(latent)
                preds.append(pred)
                actions.append(action)
                rewards.append(reward)
                margins.append(margin)
                virtual += self.step_cost_seconds
                if done:
                    break
            traces.append(EpisodeTrace(
                latents=np.array(latents), predicted_next=np.array(preds),
                actions=np.array(actions), rewards=np.array(rewards),
                margins=np.array(margins)))
            returns.append(math.fsum(rewards))
        return RolloutBatch(
            returns=np.array(returns, dtype=float),
            flips=None,
            elapsed_wall=time.perf_counter() - start,
            elapsed_virtual=virtual,
            trajectories=tuple(traces),
        )

    def attacked_rollout(self, config: AttackConfig, episodes: int,
                         rng: np.random.Generator) -> RolloutBatch:
        _require_episodes(episodes)
        start = time.perf_counter()
        root = int(rng.integers(2 ** 63))
        traces, returns, flips = [], [], []
        virtual = 0.0
        for ep in range(episodes):
            ep_gen = Stream(root, (ep,)).generator()
            cell = int(ep_gen.integers(self.n_cells))
            latents, preds, actions, rewards, margins = [], [], [], [], []
            obs_rows, pert_rows = [], []
            prev_latent: np.ndarray | None = None
            prev_action: int | None = None
            for t in range(self.horizon):
                attack_rng = Stream(root, (ep, t, config.seed)).generator()
                outcome = self.attack_step(cell, config, attack_rng,
                                           prev_latent, prev_action)
                obs = self.observe(cell)
                att_action, att_margin, att_latent = self._policy(outcome.perturbed_obs)
                pred = self.attack_surface.predicted_latent(att_latent, att_action)
                cell, reward, done = self.transition(cell, att_action)
                flips.append(outcome.flipped)
                latents.append(att_latent)
                preds.append(pred)
                actions.append(att_action)
                rewards.append(reward)
                margins.append(att_margin)
                obs_rows.append(obs)
                pert_rows.append(outcome.perturbed_obs)
                virtual += (self.step_cost_seconds
                            + self.gradient_cost_seconds * outcome.loss_evals)
                prev_latent, prev_action = att_latent, att_action
                if done:
                    break
            traces.append(EpisodeTrace(
                latents=np.array(latents), predicted_next=np.array(preds),
                actions=np.array(actions), rewards=np.array(rewards),
                margins=np.array(margins), observations=np.array(obs_rows),
                perturbed=np.array(pert_rows)))
            returns.append(math.fsum(rewards))
        return RolloutBatch(
            returns=np.array(returns, dtype=float),
            flips=np.array(flips, dtype=bool),
            elapsed_wall=time.perf_counter() - start,
            elapsed_virtual=virtual,
            trajectories=tuple(traces),
        )


def run_attack_step(victim: LinearWorldModelVictim, state: int, config: AttackConfig,
                    rng: np.random.Generator) -> tuple[np.ndarray, bool, int, int]:
    """Single-decision attack execution; the caller advances the environment
    with the attacked action."""
    outcome = victim.attack_step(state, config, rng)
    return (outcome.perturbed_obs, outcome.flipped,
            outcome.clean_action, outcome.attacked_action)


# Re-exported here because the observation contract lives with the victims.
__all__ = [
    "AttackStepOutcome", "EpisodeTrace", "LinearWorldModelVictim",
    "ResponseSurfaceVictim", "RolloutBatch", "VictimDescriptor",
    "apply_perturbation", "run_attack_step", "surface_task",
    "surface_task_family", "attacks",
]
