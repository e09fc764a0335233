"""Dataset splits, evaluation reports, baselines, partner switching.

Splits are exclusive at the primitive level: no dish appearing in any
training recipe occurs in a test recipe, and no timetable in the training
pairs occurs in a test pair. Exclusivity is re-verified at load time.

Accuracy is the fraction of episodes ending in a success terminal; message
costs only affect returns, never the success criterion.
"""

from __future__ import annotations

import csv
import json
import os
from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kitchen as kt
from . import scheduling as sc
from .core import TerminalKind
from .policy import ActMode, AgentContext, act
from .trainer import run_episode


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def kitchen_splits(
    spec: kt.KitchenSpec,
    rng: np.random.Generator,
    n_train: int,
    n_test: int,
    dish_fraction: float = 0.7,
):
    """Scenario lists drawn from disjoint dish pools."""
    pool = kt.enumerate_dishes(spec.M, spec.W, include_empty=False)
    if len(pool) < 2 * spec.K:
        raise ValueError(f"only {len(pool)} dishes exist; cannot split for K={spec.K}")
    order = rng.permutation(len(pool))
    cut = int(round(dish_fraction * len(pool)))
    cut = min(max(cut, spec.K), len(pool) - spec.K)
    train_pool = [pool[i] for i in order[:cut]]
    test_pool = [pool[i] for i in order[cut:]]

    def sample(dishes, n):
        out = []
        for _ in range(n):
            idx = rng.choice(len(dishes), size=spec.K, replace=False)
            recipe = tuple(dishes[i] for i in idx)
            out.append(kt.KitchenScenario(recipe, int(rng.integers(spec.K))))
        return out

    return sample(train_pool, n_train), sample(test_pool, n_test)


def default_schedule_counts(D: int) -> tuple[int, int]:
    """Train/test timetable pool sizes; 11:5 of the 2^D total."""
    total = 1 << D
    return (total * 11) // 16, (total * 5) // 16


def scheduling_splits(
    spec: sc.SchedulingSpec,
    rng: np.random.Generator,
    n_train: int,
    n_test: int,
    train_schedules: int = 0,
    test_schedules: int = 0,
):
    """Scenario lists of timetable pairs drawn from disjoint pools."""
    total = 1 << spec.D
    if not train_schedules or not test_schedules:
        train_schedules, test_schedules = default_schedule_counts(spec.D)
    if train_schedules + test_schedules > total:
        raise ValueError(
            f"{train_schedules}+{test_schedules} schedules requested but only "
            f"{total} distinct schedules exist for D={spec.D}"
        )
    if train_schedules < 1 or test_schedules < 1:
        raise ValueError("need at least one schedule per split")
    order = rng.permutation(total)
    train_pool = [sc.index_schedule(int(i), spec.D) for i in order[:train_schedules]]
    test_pool = [
        sc.index_schedule(int(i), spec.D)
        for i in order[train_schedules : train_schedules + test_schedules]
    ]

    def sample(pool, n):
        return [
            sc.SchedScenario(
                (pool[rng.integers(len(pool))], pool[rng.integers(len(pool))])
            )
            for _ in range(n)
        ]

    return sample(train_pool, n_train), sample(test_pool, n_test)


def sample_scenarios(env, rng: np.random.Generator, n: int) -> list:
    """Scenarios drawn from the generative distribution (no split pools);
    what the baseline Monte-Carlo oracles run on."""
    out = []
    if env.env_id == "kitchen":
        s = env.spec
        while len(out) < n:
            recipe = kt.generate_recipe(rng, s.K, s.M, s.W)
            target = int(rng.integers(s.K))
            if recipe[target]:
                out.append(kt.KitchenScenario(recipe, target))
    else:
        s = env.spec
        for _ in range(n):
            out.append(
                sc.SchedScenario(
                    (sc.generate_schedule(rng, s.D, s.p), sc.generate_schedule(rng, s.D, s.p))
                )
            )
    return out


def verify_exclusivity(env, train_scenarios, test_scenarios) -> None:
    """Raise if the two splits share primitives; called at load time."""
    if env.env_id == "kitchen":
        train_p = {d for s in train_scenarios for d in s.recipe}
        test_p = {d for s in test_scenarios for d in s.recipe}
    else:
        train_p = {s for sce in train_scenarios for s in sce.schedules}
        test_p = {s for sce in test_scenarios for s in sce.schedules}
    overlap = train_p & test_p
    if overlap:
        raise ValueError(f"splits share {len(overlap)} primitives, e.g. {next(iter(overlap))}")


def gen_splits(env, rng: np.random.Generator, n_train: int, n_test: int, **kwargs):
    if env.env_id == "kitchen":
        return kitchen_splits(
            env.spec, rng, n_train, n_test, kwargs.get("dish_fraction", 0.7)
        )
    return scheduling_splits(
        env.spec, rng, n_train, n_test,
        kwargs.get("train_schedules", 0), kwargs.get("test_schedules", 0),
    )


def save_splits(out_dir, env, train_scenarios, test_scenarios) -> None:
    os.makedirs(out_dir, exist_ok=True)
    mod = kt if env.env_id == "kitchen" else sc
    mod.save_scenarios(os.path.join(out_dir, "train.json"), env.spec, train_scenarios)
    mod.save_scenarios(os.path.join(out_dir, "test.json"), env.spec, test_scenarios)


def load_splits(data_dir, env):
    mod = kt if env.env_id == "kitchen" else sc
    train = mod.load_scenarios(os.path.join(data_dir, "train.json"), env.spec)
    test = mod.load_scenarios(os.path.join(data_dir, "test.json"), env.spec)
    verify_exclusivity(env, train, test)
    return train, test


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    label: str
    episodes: int
    successes: int
    success_rate: float
    stderr: float  # Bernoulli standard error of the success rate
    terminal_breakdown: dict
    mean_return: tuple[float, float]
    unique_identifier_rate: Optional[float] = None

    @classmethod
    def from_outcomes(cls, label, outcomes, returns, ui_rate=None):
        n = len(outcomes)
        wins = sum(1 for kind, _ in outcomes if kind is TerminalKind.SUCCESS)
        p = wins / n
        ret = np.asarray(returns)
        return cls(
            label=label,
            episodes=n,
            successes=wins,
            success_rate=p,
            stderr=float(np.sqrt(p * (1.0 - p) / n)),
            terminal_breakdown=dict(Counter(reason for _, reason in outcomes)),
            mean_return=(float(ret[:, 0].mean()), float(ret[:, 1].mean())),
            unique_identifier_rate=ui_rate,
        )


def evaluate(
    env, agents, scenarios, episodes: int, rng: np.random.Generator,
    mode: str = "greedy", label: str = "eval",
) -> EvalReport:
    """Decentralized-execution evaluation: no supervision, no updates."""
    act_mode = ActMode(mode)
    outcomes, returns = [], []
    for _ in range(episodes):
        scenario = scenarios[rng.integers(len(scenarios))]
        traj = run_episode(env, scenario, agents, rng, (act_mode, act_mode))
        outcomes.append((traj.outcome, traj.steps[-1].reason))
        returns.append(traj.returns())
    ui = None
    if env.env_id == "kitchen":
        ui = unique_identifier_rate(agents[0], env, scenarios)
    return EvalReport.from_outcomes(label, outcomes, returns, ui)


def unique_identifier_rate(chef_modules, env, scenarios) -> float:
    """Fraction of greedy first moves that name a unique target ingredient,
    over scenarios that have one."""
    hits = 0
    total = 0
    for scenario in scenarios:
        uid = kt.unique_identifiers(scenario.recipe, scenario.target)
        if not uid:
            continue
        total += 1
        state = env.reset(scenario)
        ctx = AgentContext(
            env.encode_public(scenario, state),
            env.private_index(scenario, 0),
            env.belief_init(0),
            env.bob_init(0),
        )
        a = act(chef_modules, env, 0, ctx, rng=None, mode="greedy")
        hits += a in uid
    return hits / total if total else float("nan")


def random_chef_ui_rate(scenarios, W: int) -> float:
    """Expected unique-identifier rate of a uniform-random chef (the
    Monte-Carlo limit, computed exactly over the scenario list)."""
    rates = [
        len(kt.unique_identifiers(s.recipe, s.target)) / W
        for s in scenarios
        if kt.unique_identifiers(s.recipe, s.target)
    ]
    return float(np.mean(rates)) if rates else float("nan")


def switch_eval(
    env, agents_run1, agents_run2, scenarios, episodes: int,
    rng: np.random.Generator, mode: str = "greedy",
) -> EvalReport:
    """Cross-pair evaluation: chef of one run with assistant of the other,
    averaged over both cross pairings."""
    if agents_run1[0].q_spec != agents_run2[0].q_spec:
        raise ValueError("runs use different encodings; cannot cross-pair")
    act_mode = ActMode(mode)
    outcomes, returns = [], []
    pairs = ([agents_run1[0], agents_run2[1]], [agents_run2[0], agents_run1[1]])
    for k in range(episodes):
        team = pairs[k % 2]
        scenario = scenarios[rng.integers(len(scenarios))]
        traj = run_episode(env, scenario, team, rng, (act_mode, act_mode))
        outcomes.append((traj.outcome, traj.steps[-1].reason))
        returns.append(traj.returns())
    return EvalReport.from_outcomes("switch", outcomes, returns)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

KITCHEN_BASELINES = ("random", "uniform")
SCHEDULING_BASELINES = ("random", "self_random")


def _kitchen_baseline_action(policy, env, scenario, state, rng) -> int:
    if policy == "uniform" or state.turn == 1:
        return int(rng.integers(env.spec.W))
    # the chef part of the reference baseline: no inference, but it does
    # know its own target and never plays outside it
    need = kt.remaining_needed(state, scenario.recipe[scenario.target])
    options = sorted(set(need))
    return options[rng.integers(len(options))]


def _scheduling_baseline_action(policy, env, scenario, state, rng) -> int:
    D = env.spec.D
    propose_base = D * (D + 1) // 2
    if policy == "random":
        return propose_base + int(rng.integers(D))
    free = [d for d in range(D) if scenario.schedules[state.turn][d] == 0]
    if not free:
        return env.n_actions - 1  # reject
    return propose_base + free[rng.integers(len(free))]


def baseline_report(
    env, policy: str, scenarios, episodes: int, rng: np.random.Generator,
) -> EvalReport:
    """Monte-Carlo report for a named scripted baseline."""
    pick = _kitchen_baseline_action if env.env_id == "kitchen" else _scheduling_baseline_action
    outcomes, returns = [], []
    for _ in range(episodes):
        scenario = scenarios[rng.integers(len(scenarios))]
        state = env.reset(scenario)
        totals = [0.0, 0.0]
        while True:
            a = pick(policy, env, scenario, state, rng)
            out = env.step(state, scenario, a)
            totals[0] += out.rewards[0]
            totals[1] += out.rewards[1]
            if out.terminal:
                outcomes.append((out.kind, out.reason))
                returns.append(tuple(totals))
                break
            state = out.next_state
    return EvalReport.from_outcomes(f"baseline:{policy}", outcomes, returns)


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------

CSV_FIELDS = [
    "label", "episodes", "successes", "success_rate", "stderr",
    "mean_return_a", "mean_return_b", "unique_identifier_rate", "terminals",
]


def append_report_csv(path, report: EvalReport) -> None:
    """One row per report; plot-ready summary format."""
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if new:
            writer.writeheader()
        writer.writerow(
            {
                "label": report.label,
                "episodes": report.episodes,
                "successes": report.successes,
                "success_rate": f"{report.success_rate:.6f}",
                "stderr": f"{report.stderr:.6f}",
                "mean_return_a": f"{report.mean_return[0]:.6f}",
                "mean_return_b": f"{report.mean_return[1]:.6f}",
                "unique_identifier_rate": (
                    "" if report.unique_identifier_rate is None
                    else f"{report.unique_identifier_rate:.6f}"
                ),
                "terminals": json.dumps(report.terminal_breakdown, sort_keys=True),
            }
        )
