"""Acceptance suite: one test per gate, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete. The learning gates (6-10) share two desk-scale training runs per
game through session fixtures; everything else is fast.
"""

import itertools
import os

import numpy as np
import pytest

from tomcollab import harness
from tomcollab.beliefs import (
    apply_mask,
    brute_force_posterior,
    counterfactual_update,
)
from tomcollab.config import build_game, build_train_config, parse_config
from tomcollab.gradcheck import REL_TOL, run_gradient_checks
from tomcollab.kitchen import KitchenGame, KitchenScenario, KitchenSpec, enumerate_dishes
from tomcollab.rng import make_rng
from tomcollab.scheduling import (
    Inform,
    Propose,
    SchedulingGame,
    SchedulingSpec,
    index_schedule,
)
from tomcollab.trainer import TrainConfig, train
from tomcollab.approximator import forward

from .oracles import kitchen_oracle_rollout, scheduling_oracle_step
from .toyenv import N_STATES, ToyGame, ToyScenario, value_iteration

SEEDS = (101, 202)
CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def report(num, ok, msg):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {msg}")
    assert ok, f"criterion {num}: {msg}"


# ---------------------------------------------------------------------------
# session fixtures: the shared desk-scale runs
# ---------------------------------------------------------------------------

def _desk_runs(config_name):
    values = parse_config(os.path.join(CONFIG_DIR, config_name))
    game = build_game(values)
    data_rng = make_rng(77)
    train_s, test_s = harness.gen_splits(
        game, data_rng, values["train_scenarios"], values["test_scenarios"]
    )
    runs = []
    for seed in SEEDS:
        cfg = build_train_config(values, seed=seed)
        agents, metrics = train(game, train_s, test_s, cfg)
        runs.append({"agents": agents, "metrics": metrics})
    return {"game": game, "train": train_s, "test": test_s, "runs": runs,
            "cfg": build_train_config(values)}


@pytest.fixture(scope="session")
def kitchen_runs():
    return _desk_runs("kitchen_desk.cfg")


@pytest.fixture(scope="session")
def scheduling_runs():
    return _desk_runs("scheduling_desk.cfg")


# ---------------------------------------------------------------------------
# 1. belief oracle equivalence
# ---------------------------------------------------------------------------

def test_criterion_1_belief_oracle_equivalence():
    rng = make_rng(0)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.choice([2, 3, 4, 8, 16]))  # covers K <= 16 and 2^D, D <= 4
        prior = rng.dirichlet(np.ones(n))
        if n > 2 and rng.random() < 0.3:
            prior[rng.integers(n)] = 0.0
            prior /= prior.sum()
        lik = rng.uniform(0.0, 1.0, size=n)
        if (prior * lik).sum() < 1e-12:
            continue
        fast = counterfactual_update(prior, lik)
        slow = brute_force_posterior(prior, lik)
        worst = max(worst, np.abs(fast - slow).max())
    assert worst < 1e-12

    comm_worst = 0.0
    for _ in range(2_000):
        n = int(rng.integers(2, 17))
        prior = rng.dirichlet(np.ones(n))
        lik = rng.uniform(0.05, 1.0, size=n)
        mask = (rng.random(n) < 0.7).astype(float)
        mask[int(rng.integers(n))] = 1.0
        first = apply_mask(prior, mask)
        if first is None:
            continue
        a = counterfactual_update(first, lik)
        b = apply_mask(counterfactual_update(prior, lik), mask)
        if a is None or b is None:
            assert a is None and b is None
            continue
        comm_worst = max(comm_worst, np.abs(a - b).max())
    report(1, worst < 1e-12 and comm_worst < 1e-9,
           f"Bayes vs enumeration max err {worst:.2e}; "
           f"mask/update commutation max err {comm_worst:.2e}")


# ---------------------------------------------------------------------------
# 2. environment rules vs brute-force oracles
# ---------------------------------------------------------------------------

def test_criterion_2_environment_oracles():
    # kitchen: outcomes depend only on (target, actions); sweep every target
    # for every (W <= 4, M <= 3) and every action sequence up to length 4,
    # then every full scenario in a small world to cover recipe handling
    checked = 0
    for W, M in [(2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (4, 3)]:
        spec = KitchenSpec(K=2, M=M, W=W)
        dishes = [d for d in enumerate_dishes(M, W) if d]
        seqs = [s for L in range(1, 5) for s in itertools.product(range(W), repeat=L)]
        for target in dishes:
            other = next(d for d in dishes if d != target)
            scenario = KitchenScenario((target, other), 0)
            game = KitchenGame(spec)
            for seq in seqs:
                n, kind = kitchen_oracle_rollout(target, seq, W, spec.step_cap)
                state = game.reset(scenario)
                outs = []
                for a in seq:
                    out = game.step(state, scenario, a)
                    outs.append(out)
                    if out.terminal:
                        break
                    state = out.next_state
                if kind == "running":
                    assert all(not o.terminal for o in outs)
                else:
                    assert len(outs) == n and outs[-1].kind.value == kind
                checked += 1

    # scheduling: every (schedule pair, action) for D <= 4, exact
    sched_checked = 0
    for D in (1, 2, 3, 4):
        spec = SchedulingSpec(D=D)
        game = SchedulingGame(spec)
        for ai, bi in itertools.product(range(1 << D), repeat=2):
            a, b = index_schedule(ai, D), index_schedule(bi, D)
            scenario = game.scenario_from_json({"a": list(a), "b": list(b)})
            state = game.reset(scenario)
            for idx, act_obj in enumerate(game.actions):
                if isinstance(act_obj, Inform):
                    oracle_act = ("inform", act_obj.start, act_obj.end)
                elif isinstance(act_obj, Propose):
                    oracle_act = ("propose", act_obj.slot)
                else:
                    oracle_act = ("reject",)
                kind, cost = scheduling_oracle_step(a, b, 0, oracle_act, [])
                out = game.step(state, scenario, idx)
                if kind == "running":
                    assert not out.terminal and out.next_state.costs == (-0.1, 0.0)
                else:
                    assert out.kind.value == kind
                sched_checked += 1
    report(2, True, f"kitchen rollouts checked {checked}; "
                    f"scheduling cases checked {sched_checked}; all exact")


# ---------------------------------------------------------------------------
# 3. gradient checks
# ---------------------------------------------------------------------------

def test_criterion_3_gradient_checks():
    results = run_gradient_checks()
    worst = max(err for _, err in results)
    report(3, worst < REL_TOL,
           f"{len(results)} (architecture, loss) pairs, max relative error {worst:.2e}")


# ---------------------------------------------------------------------------
# 4. tabular sanity
# ---------------------------------------------------------------------------

def test_criterion_4_tabular_value_iteration():
    game = ToyGame()
    cfg = TrainConfig(rounds=2, round_length=3000, batch_size=16, gamma=0.9,
                      hidden=(32, 32), eval_episodes=20, target_sync=250,
                      seed=11, metrics_every=1000)
    agents, _ = train(game, [ToyScenario()], [ToyScenario()], cfg)
    oracle = value_iteration(0.9)
    worst = 0.0
    for s in range(N_STATES - 1):
        state = type(game.reset(None))(s, 0, 2 * s)
        row = game.q_row(0, game.encode_public(ToyScenario(), state), 0, 0,
                         game.bob_init(0))
        q = forward(agents[0].q_spec, agents[0].q_params, row)
        worst = max(worst, float(np.abs(q - oracle[s]).max()))
    report(4, worst < 1e-2, f"max |Q - Q*| over 5-state chain = {worst:.4f}")


# ---------------------------------------------------------------------------
# 5. random baselines reproduce the reference numbers
# ---------------------------------------------------------------------------

def test_criterion_5_random_baselines():
    kg = KitchenGame(KitchenSpec(4, 5, 10))
    scen = harness.sample_scenarios(kg, make_rng(11), 10_000)
    kitchen = harness.baseline_report(kg, "random", scen, 10_000, make_rng(12))

    sg = SchedulingGame(SchedulingSpec(8, 0.5))
    sscen = harness.sample_scenarios(sg, make_rng(13), 10_000)
    rand = harness.baseline_report(sg, "random", sscen, 10_000, make_rng(14))
    own = harness.baseline_report(sg, "self_random", sscen, 10_000, make_rng(15))

    ok = (abs(kitchen.success_rate - 0.0567) < 0.02
          and abs(rand.success_rate - 0.25) < 0.02
          and abs(own.success_rate - 0.50) < 0.02)
    report(5, ok,
           f"kitchen random {100 * kitchen.success_rate:.2f}% (ref 5.67 +- 2pp); "
           f"random propose {100 * rand.success_rate:.2f}% (ref 25); "
           f"own-slot propose {100 * own.success_rate:.2f}% (ref 50)")


# ---------------------------------------------------------------------------
# 6-10. desk-scale learning gates
# ---------------------------------------------------------------------------

def _final_accuracies(bundle, episodes=2000):
    game, test_s = bundle["game"], bundle["test"]
    reps = [
        harness.evaluate(game, run["agents"], test_s, episodes, make_rng(900 + i),
                         mode="greedy", label=f"seed{i}")
        for i, run in enumerate(bundle["runs"])
    ]
    return reps


def test_criterion_6_kitchen_learning(kitchen_runs):
    reps = _final_accuracies(kitchen_runs)
    accs = [r.success_rate for r in reps]
    mean = float(np.mean(accs))
    uniform = harness.baseline_report(
        kitchen_runs["game"], "uniform", kitchen_runs["test"], 10_000, make_rng(13)
    ).success_rate
    iters = 2 * kitchen_runs["cfg"].rounds * kitchen_runs["cfg"].round_length
    ok = mean >= 0.70 and mean >= 10 * uniform and iters <= 300_000
    report(6, ok,
           f"kitchen test accuracy {[f'{a:.3f}' for a in accs]} mean {mean:.3f} "
           f"(gate 0.70); uniform-play baseline {uniform:.4f} "
           f"(10x = {10 * uniform:.3f}); {iters} iterations/seed")


def test_criterion_7_scheduling_learning(scheduling_runs):
    reps = _final_accuracies(scheduling_runs)
    accs = [r.success_rate for r in reps]
    mean = float(np.mean(accs))
    own = harness.baseline_report(
        scheduling_runs["game"], "self_random", scheduling_runs["test"],
        10_000, make_rng(14)
    ).success_rate
    iters = 2 * scheduling_runs["cfg"].rounds * scheduling_runs["cfg"].round_length
    ok = mean >= 0.65 and mean >= own + 0.10 and iters <= 300_000
    report(7, ok,
           f"scheduling test accuracy {[f'{a:.3f}' for a in accs]} mean {mean:.3f} "
           f"(gate 0.65); own-slot baseline on this split {own:.3f} "
           f"(gate baseline+10pp = {own + 0.10:.3f}); {iters} iterations/seed")


def test_criterion_8_unique_identifier_emergence(kitchen_runs):
    game, test_s = kitchen_runs["game"], kitchen_runs["test"]
    rates = [
        harness.unique_identifier_rate(run["agents"][0], game, test_s)
        for run in kitchen_runs["runs"]
    ]
    rand = harness.random_chef_ui_rate(test_s, game.spec.W)
    mean = float(np.mean(rates))
    ok = mean >= rand + 0.15
    report(8, ok,
           f"trained chef unique-identifier rate {[f'{r:.3f}' for r in rates]} "
           f"mean {mean:.3f} vs random chef {rand:.3f} (gate +15pp = {rand + 0.15:.3f})")


def test_criterion_9_group_switch(kitchen_runs):
    game, test_s = kitchen_runs["game"], kitchen_runs["test"]
    reps = _final_accuracies(kitchen_runs)
    same = float(np.mean([r.success_rate for r in reps]))
    cross = harness.switch_eval(
        game, kitchen_runs["runs"][0]["agents"], kitchen_runs["runs"][1]["agents"],
        test_s, 4000, make_rng(15)
    ).success_rate
    drop = same - cross
    report(9, drop <= 0.15,
           f"same-pair {same:.3f} vs cross-pair {cross:.3f}; drop {drop * 100:+.1f}pp "
           f"(gate <= 15pp)")


def test_criterion_10_windowed_monotonicity(kitchen_runs):
    per_seed = []
    for run in kitchen_runs["runs"]:
        evals = [m["eval_success"] for m in run["metrics"]
                 if m["eval_success"] is not None]
        per_seed.append(evals)
    means = np.mean(per_seed, axis=0)
    drops = [means[i] - means[i + 1] for i in range(len(means) - 1)]
    worst = max(drops) if drops else 0.0
    report(10, worst <= 0.03,
           f"per-round mean eval {[f'{m:.3f}' for m in means]}; "
           f"worst round-to-round drop {worst * 100:+.1f}pp (gate <= 3pp)")


# ---------------------------------------------------------------------------
# 11. determinism
# ---------------------------------------------------------------------------

def test_criterion_11_determinism(tmp_path):
    game = KitchenGame(KitchenSpec(3, 3, 6))
    train_s, test_s = harness.kitchen_splits(game.spec, make_rng(5), 200, 60)
    cfg = TrainConfig(rounds=2, round_length=60, batch_size=8, eval_episodes=40,
                      metrics_every=20, seed=9)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        train(game, train_s, test_s, cfg, out_dir=str(out))
        outs.append(out)
    same = True
    for fname in ("metrics.jsonl", "agents_final.json",
                  "checkpoint_round_001.json", "checkpoint_round_002.json"):
        same &= (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    report(11, same, "identical seed+config gives byte-identical metric logs "
                     "and checkpoints")
