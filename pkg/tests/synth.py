"""Synthetic period-summary generators shared by the inference and acceptance tests."""

from __future__ import annotations

import numpy as np

from nof1engine.trial import PeriodSummary


def make_summary(arm, event_days, n_obs=14, period_len=14, previous_arm=None, start_day=1):
    return PeriodSummary(
        arm=arm,
        start_day=start_day,
        end_day=start_day + period_len - 1,
        period_len_days=period_len,
        event_days=event_days,
        n_observed_days=n_obs,
        mean_pain=None,
        previous_arm=previous_arm,
    )


def conjugacy_config(n_effect_arms: int, n_periods: int, seed: int | None = None):
    """One deterministic test configuration for the posterior-vs-oracle check.

    Returns (priors, sigma_y, summaries): placebo is the reference arm,
    periods cycle placebo and the effect arms, one baseline period is added
    when there are >= 2 periods, and one period is partially observed when
    there are >= 4 (exercising the variance-rescaling path).
    """
    if seed is None:
        seed = 1000 + 10 * n_effect_arms + n_periods
    rng = np.random.default_rng(seed)
    arms = [f"arm{i}" for i in range(n_effect_arms)]
    true_effects = {arm: -3.0 + 1.1 * i for i, arm in enumerate(arms)}
    true_effects["placebo"] = 0.0
    priors = {arm: (-2.5 + 0.8 * i, 0.9 + 0.3 * i) for i, arm in enumerate(arms)}
    sigma_y = 1.5
    ref_level = 6.0

    summaries = []
    day = 1
    if n_periods >= 2:
        y = int(np.clip(round(rng.normal(ref_level, sigma_y)), 0, 14))
        summaries.append(make_summary("baseline", y, start_day=day))
        day += 14
    cycle = ["placebo", *arms]
    prev = None
    for p in range(n_periods):
        arm = cycle[p % len(cycle)]
        y = int(np.clip(round(rng.normal(ref_level + true_effects[arm], sigma_y)), 0, 14))
        n_obs = 10 if (p == 3 and n_periods >= 4) else 14
        summaries.append(make_summary(arm, y, n_obs=n_obs, previous_arm=prev, start_day=day))
        prev = arm
        day += 14
    return priors, sigma_y, summaries


def carryover_dataset(
    gamma: float,
    sigma_y: float,
    seed: int,
    n_blocks: int = 4,
    n_baseline: int = 4,
    arms: tuple[str, ...] = ("a", "b", "placebo"),
    effects: dict | None = None,
    ref_level: float = 6.0,
):
    """Block-randomized periods whose counts include an additive carryover term."""
    effects = effects or {"a": -2.0, "b": -1.0, "placebo": 0.0}
    rng = np.random.default_rng(seed)
    seq = []
    for _ in range(n_blocks):
        seq.extend([arms[i] for i in rng.permutation(len(arms))])
    summaries = []
    day = 1
    for _ in range(n_baseline):
        y = max(0, int(round(rng.normal(ref_level, sigma_y))))
        summaries.append(make_summary("baseline", y, start_day=day))
        day += 14
    prev = None
    for arm in seq:
        ind = 1.0 if (prev is not None and prev != "placebo") else 0.0
        mu = ref_level + effects[arm] + gamma * ind
        y = max(0, int(round(rng.normal(mu, sigma_y))))
        summaries.append(make_summary(arm, y, previous_arm=prev, start_day=day))
        prev = arm
        day += 14
    return summaries
