import math

import numpy as np
import pytest

from attacksearch import proposal
from attacksearch.configspace import (AllocationRule, AttackConfig, AttackFamily,
                                      ConfigSpace, FamilyGrid)
from attacksearch.evaluation import DEFAULT_WEIGHTS, UtilityReport
from attacksearch.logs import trial_records
from attacksearch.rngutil import Stream
from attacksearch.search import (EvalEntry, FeedbackSignal, SearchHistory,
                                 SearchParams, feedback, induced_proposal,
                                 propose_batch, run_search)
from attacksearch.theory import brute_force_utility
from attacksearch.victims import surface_task


def a_config(epsilon=8, steps=10):
    return AttackConfig(AttackFamily.APGD_CE, epsilon, steps, 1, 0.75, 0,
                        AllocationRule.FIXED)


def report(drop=0.5, flip=0.5, runtime=1.0, var=0.0, config=None, episodes=2,
           phase="scout"):
    from attacksearch.evaluation import scalarize
    config = config or a_config()
    return UtilityReport(config=config, drop=drop, flip=flip, runtime=runtime,
                         variability=var,
                         utility=scalarize(drop, flip, runtime, var),
                         episodes=episodes, returns=(1.0,) * episodes, phase=phase)


def search_space(eps=(2, 4, 8, 12, 16), steps=(4, 10)):
    return ConfigSpace(grids={AttackFamily.APGD_CE: FamilyGrid(
        epsilons=eps, steps=steps)})


def history_with(space, entries):
    history = SearchHistory(space_size=space.size)
    for round_index, config, rep, signal in entries:
        history.record(EvalEntry(round_index, rep.phase, space.index_of(config),
                                 rep, signal, seed=0))
    return history


# ---------------------------------------------------------------- feedback


def test_feedback_strong_attack_all_quiet():
    signal = feedback(report(drop=0.9, flip=0.8, runtime=1.0, var=0.0))
    assert signal.tags == ()
    assert signal.is_zero


def test_feedback_weak_drop_and_low_flip():
    signal = feedback(report(drop=0.0, flip=0.1, runtime=0.1, var=0.0))
    assert "weak-drop" in signal.tags and "low-flip" in signal.tags
    assert signal.epsilon_step == 1
    assert signal.toggle_allocation


def test_feedback_high_cost_rule():
    # runtime term 0.6 > drop + w_f * flip = 0.5
    runtime = math.exp(0.6 / DEFAULT_WEIGHTS.runtime) - 1.0
    signal = feedback(report(drop=0.4, flip=0.4, runtime=runtime, var=0.0))
    assert "high-cost" in signal.tags
    assert signal.steps_step == -1


def test_feedback_unstable_returns_rule():
    signal = feedback(report(drop=0.4, flip=0.5, runtime=0.1, var=0.3))
    assert "unstable-returns" in signal.tags
    quiet = feedback(report(drop=0.4, flip=0.5, runtime=0.1, var=0.1))
    assert "unstable-returns" not in quiet.tags


# ---------------------------------------------------------------- propose_batch


def test_point_mass_proposal_sampled():
    space = search_space()
    history = SearchHistory(space_size=space.size)
    q = proposal.point_mass(space.size, 3)
    batch = propose_batch(q, 1, history, Stream(1).generator())
    assert batch == [3]


def test_exhaustive_batch_returns_all_remaining():
    space = search_space(eps=(2, 4), steps=(4,))
    history = SearchHistory(space_size=space.size)
    q = proposal.uniform(space.size)
    batch = propose_batch(q, space.size, history, Stream(2).generator())
    assert batch == list(range(space.size))


def test_exhausted_space_returns_empty():
    space = search_space(eps=(2,), steps=(4,))
    history = SearchHistory(space_size=space.size)
    history.evaluated.update(range(space.size))
    assert propose_batch(proposal.uniform(space.size), 2, history,
                         Stream(3).generator()) == []


def test_batch_skips_evaluated_and_is_distinct():
    space = search_space()
    history = SearchHistory(space_size=space.size)
    history.evaluated.update({0, 1, 2})
    q = proposal.uniform(space.size)
    batch = propose_batch(q, 5, history, Stream(4).generator())
    assert len(batch) == len(set(batch)) == 5
    assert not set(batch) & {0, 1, 2}


def test_zero_mass_on_remaining_falls_back_to_uniform():
    space = search_space(eps=(2, 4), steps=(4,))
    history = SearchHistory(space_size=space.size)
    q = proposal.point_mass(space.size, 0)
    history.evaluated.add(0)
    batch = propose_batch(q, 2, history, Stream(5).generator())
    assert len(batch) == len(set(batch)) == 2
    assert set(batch) <= {1, 2, 3}


def test_inclusion_frequency_matches_uniform_without_replacement():
    """10000 batches of 8 from a uniform 100-config proposal: per-config
    inclusion frequency within 3 binomial standard errors of 8/100."""
    size, b, trials = 100, 8, 10_000
    q = proposal.uniform(size)
    history = SearchHistory(space_size=size)
    counts = np.zeros(size)
    gen = Stream(6).generator()
    for _ in range(trials):
        for idx in propose_batch(q, b, history, gen):
            counts[idx] += 1
    p = b / size
    se = math.sqrt(p * (1 - p) / trials)
    freq = counts / trials
    assert np.all(np.abs(freq - p) <= 3 * se + 1e-12)


# ---------------------------------------------------------------- induced proposal


def test_induced_uniform_over_evaluated_at_beta_zero():
    space = search_space()
    entries = [(0, a_config(2, 4), report(drop=0.1, config=a_config(2, 4)), FeedbackSignal()),
               (0, a_config(8, 10), report(drop=0.9, config=a_config(8, 10)), FeedbackSignal())]
    history = history_with(space, entries)
    q = induced_proposal(history, space, beta=0.0, spread=0.0)
    i, j = space.index_of(a_config(2, 4)), space.index_of(a_config(8, 10))
    assert q.probs[i] == pytest.approx(0.5, abs=1e-12)
    assert q.probs[j] == pytest.approx(0.5, abs=1e-12)
    assert q.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_induced_concentrates_on_best_at_high_beta():
    space = search_space()
    entries = [(0, a_config(2, 4), report(drop=0.1, config=a_config(2, 4)), FeedbackSignal()),
               (0, a_config(8, 10), report(drop=0.9, config=a_config(8, 10)), FeedbackSignal()),
               (0, a_config(16, 4), report(drop=0.2, config=a_config(16, 4)), FeedbackSignal())]
    history = history_with(space, entries)
    q = induced_proposal(history, space, beta=50.0, spread=0.0)
    best = space.index_of(a_config(8, 10))
    assert q.probs[best] >= 1.0 - 1e-6


def test_induced_single_config_spread_half():
    space = search_space()
    config = a_config(8, 10)
    history = history_with(space, [(0, config, report(config=config), FeedbackSignal())])
    q = induced_proposal(history, space, beta=0.0, spread=1.0)
    idx = space.index_of(config)
    neighbors = space.neighbors(config)
    assert q.probs[idx] == pytest.approx(0.5, abs=1e-12)
    for n in neighbors:
        assert q.probs[space.index_of(n)] == pytest.approx(0.5 / len(neighbors), abs=1e-12)


def test_induced_shifts_along_feedback_direction():
    space = search_space()
    config = a_config(8, 10)
    signal = FeedbackSignal(tags=("weak-drop",), epsilon_step=1)
    history = history_with(space, [(0, config, report(config=config), signal)])
    q = induced_proposal(history, space, beta=0.0, spread=1.0)
    shifted_center = space.shifted(config, epsilon_step=1)
    assert shifted_center.epsilon == 12
    neighbors = space.neighbors(shifted_center)
    share = 0.5 / len(neighbors)
    self_idx = space.index_of(config)
    for n in neighbors:
        i = space.index_of(n)
        expected = share + (0.5 if i == self_idx else 0.0)
        assert q.probs[i] == pytest.approx(expected, abs=1e-12)
    assert space.index_of(shifted_center) not in {space.index_of(n) for n in neighbors}


def test_induced_requires_history():
    space = search_space()
    with pytest.raises(ValueError):
        induced_proposal(SearchHistory(space_size=space.size), space, 1.0, 0.5)


# ---------------------------------------------------------------- run_search


def small_victim(seed=3):
    return surface_task(f"search-task-{seed}", seed)


def make_baseline_for(victim):
    from attacksearch.evaluation import make_baseline
    return make_baseline(victim, 3, Stream(100).generator())


def test_exhaustive_search_matches_brute_force():
    space = search_space()
    victim = small_victim()
    baseline = make_baseline_for(victim)
    params = SearchParams(budget=space.size, batch_size=4, seed=0)
    result = run_search(victim, space, params, proposal.uniform(space.size), baseline)
    umap = brute_force_utility(victim, space, baseline)
    assert result.best_config == umap.best_config
    assert len(result.history.evaluated) == space.size


def test_budget_one_single_evaluation():
    space = search_space()
    victim = small_victim()
    baseline = make_baseline_for(victim)
    params = SearchParams(budget=1, batch_size=1, seed=5)
    result = run_search(victim, space, params, proposal.uniform(space.size), baseline)
    assert len(result.history.evaluated) == 1
    assert result.history.rounds == 1


def test_budget_clamped_with_note():
    space = search_space(eps=(2, 4), steps=(4,))
    victim = small_victim()
    baseline = make_baseline_for(victim)
    params = SearchParams(budget=50, batch_size=4, seed=1)
    result = run_search(victim, space, params, proposal.uniform(space.size), baseline)
    assert len(result.history.evaluated) == space.size
    assert any("clamped" in note for note in result.history.notes)


def test_budget_exactness_and_monotone_best():
    space = search_space()
    victim = small_victim(seed=9)
    baseline = make_baseline_for(victim)
    params = SearchParams(budget=7, batch_size=3, seed=2)
    result = run_search(victim, space, params, proposal.uniform(space.size), baseline)
    assert len(result.history.evaluated) == 7
    bests = [u for _, u in result.history.best_per_round]
    assert all(b >= a for a, b in zip(bests, bests[1:]))
    assert result.history.episodes_used == sum(
        e.report.episodes for e in result.history.entries)


def test_search_deterministic_trial_logs():
    space = search_space()
    victim = surface_task("det-task", 4, noise_scale=0.4)
    baseline = make_baseline_for(victim)
    params = SearchParams(budget=8, batch_size=4, seed=11)
    a = run_search(victim, space, params, proposal.uniform(space.size), baseline)
    b = run_search(victim, space, params, proposal.uniform(space.size), baseline)
    assert trial_records(a.history, space) == trial_records(b.history, space)


def test_refine_false_never_updates_proposal():
    space = search_space()
    victim = small_victim(seed=12)
    baseline = make_baseline_for(victim)
    params = SearchParams(budget=8, batch_size=4, seed=3)
    result = run_search(victim, space, params, proposal.uniform(space.size), baseline,
                        refine=False, record_proposals=True)
    snaps = result.history.proposal_snapshots
    assert len(snaps) == 2
    assert np.array_equal(snaps[0], snaps[1])


def test_alpha_schedules():
    params = SearchParams(budget=4, batch_size=2, alpha=0.3)
    assert params.alpha_at(1) == 0.3
    harmonic = SearchParams(budget=4, batch_size=2, alpha_schedule="harmonic")
    assert harmonic.alpha_at(1) == 0.5
    assert harmonic.alpha_at(3) == 0.25


def test_search_params_validation():
    with pytest.raises(ValueError):
        SearchParams(budget=2, batch_size=4)
    with pytest.raises(ValueError):
        SearchParams(budget=4, batch_size=2, alpha=1.5)
    with pytest.raises(ValueError):
        SearchParams(budget=4, batch_size=2, alpha_schedule="linear")
