"""Kitchen collaboration game.

Two agents prepare one dish from a public recipe of K dishes. Only agent 0
(the chef) knows which dish is the target. A dish is a multiset of up to M
ingredients drawn from {0..W-1}. Agents alternate placing one ingredient on
the workplace; placing anything the target does not still need ends the
game as a failure, completing the target exactly ends it as a success.
Rewards are +1/-1 to both agents at the end, nothing per step.

Dishes are stored as sorted tuples (the canonical multiset form).
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import STEP_CAP, StepOutcome, TerminalKind

Dish = tuple[int, ...]
Recipe = tuple[Dish, ...]

SCENARIO_FORMAT_VERSION = 1


@dataclass(frozen=True)
class KitchenSpec:
    K: int  # dishes per recipe
    M: int  # max ingredients per dish
    W: int  # ingredient vocabulary size
    success_reward: float = 1.0
    failure_reward: float = -1.0
    step_cap: int = STEP_CAP

    def __post_init__(self):
        if self.K < 1 or self.M < 1 or self.W < 2:
            raise ValueError("need K >= 1, M >= 1, W >= 2")


@dataclass(frozen=True)
class KitchenScenario:
    recipe: Recipe
    target: int


@dataclass(frozen=True)
class KitchenState:
    prepared: Dish  # multiset already on the workplace
    turn: int
    step: int


def generate_dish(rng: np.random.Generator, M: int, W: int) -> Dish:
    """Sample M values from {0..W} with replacement; draws of W are dropped.

    Including W in the draw is what produces dishes with fewer than M
    ingredients (possibly none).
    """
    draws = rng.integers(0, W + 1, size=M)
    return tuple(sorted(int(d) for d in draws if d < W))


def generate_recipe(
    rng: np.random.Generator, K: int, M: int, W: int, max_attempts: int = 1000
) -> Recipe:
    """K pairwise-distinct dishes, resampling duplicates."""
    dishes: list[Dish] = []
    attempts = 0
    while len(dishes) < K:
        d = generate_dish(rng, M, W)
        if d not in dishes:
            dishes.append(d)
        attempts += 1
        if attempts > max_attempts:
            raise ValueError(
                f"could not draw {K} distinct dishes for M={M}, W={W} "
                f"in {max_attempts} attempts"
            )
    return tuple(dishes)


def enumerate_dishes(M: int, W: int, include_empty: bool = True) -> list[Dish]:
    """All distinct dishes: multisets of size <= M over {0..W-1}."""
    out: list[Dish] = [()] if include_empty else []
    for m in range(1, M + 1):
        out.extend(itertools.combinations_with_replacement(range(W), m))
    return out


def validate_scenario(spec: KitchenSpec, scenario: KitchenScenario) -> None:
    r = scenario.recipe
    if len(r) != spec.K:
        raise ValueError(f"recipe has {len(r)} dishes, spec wants {spec.K}")
    if len(set(r)) != len(r):
        raise ValueError("recipe contains duplicate dishes")
    for d in r:
        if len(d) > spec.M:
            raise ValueError(f"dish {d} exceeds M={spec.M}")
        if any(g < 0 or g >= spec.W for g in d):
            raise ValueError(f"dish {d} has ingredients outside 0..{spec.W - 1}")
        if tuple(sorted(d)) != d:
            raise ValueError(f"dish {d} is not in canonical sorted form")
    if not 0 <= scenario.target < spec.K:
        raise ValueError(f"target {scenario.target} out of range")
    if not r[scenario.target]:
        raise ValueError("target dish is empty; game would be unplayable")


def reset(spec: KitchenSpec, scenario: KitchenScenario) -> KitchenState:
    validate_scenario(spec, scenario)
    return KitchenState(prepared=(), turn=0, step=0)


def step(
    spec: KitchenSpec, state: KitchenState, scenario: KitchenScenario, ingredient: int
) -> StepOutcome:
    """Apply one ingredient placement to a live state."""
    if not 0 <= ingredient < spec.W:
        raise ValueError(f"ingredient {ingredient} outside 0..{spec.W - 1}")
    target = Counter(scenario.recipe[scenario.target])
    prepared = Counter(state.prepared)
    prepared[ingredient] += 1

    both = (spec.failure_reward, spec.failure_reward)
    if prepared[ingredient] > target[ingredient]:
        nxt = KitchenState(tuple(sorted(prepared.elements())), 1 - state.turn, state.step + 1)
        return StepOutcome(nxt, both, True, TerminalKind.FAILURE, "excess_ingredient")
    nxt = KitchenState(tuple(sorted(prepared.elements())), 1 - state.turn, state.step + 1)
    if prepared == target:
        wins = (spec.success_reward, spec.success_reward)
        return StepOutcome(nxt, wins, True, TerminalKind.SUCCESS, "dish_complete")
    if nxt.step >= spec.step_cap:
        return StepOutcome(nxt, both, True, TerminalKind.FAILURE, "step_cap")
    return StepOutcome(nxt, (0.0, 0.0), False, TerminalKind.NONE)


def remaining_needed(state: KitchenState, target: Dish) -> Dish:
    """Target multiset minus the prepared multiset."""
    need = Counter(target) - Counter(state.prepared)
    return tuple(sorted(need.elements()))


def unique_identifiers(recipe: Recipe, target: int) -> frozenset[int]:
    """Ingredients of the target dish appearing in no other dish."""
    others = set()
    for k, d in enumerate(recipe):
        if k != target:
            others.update(d)
    return frozenset(g for g in recipe[target] if g not in others)


def _counts(dish: Dish, W: int) -> np.ndarray:
    v = np.zeros(W)
    for g in dish:
        v[g] += 1.0
    return v


class KitchenGame:
    """Codec and environment wrapper used by agents, trainer and harness.

    Private-state spaces: agent 0 has K hypotheses (the target index),
    agent 1 has the trivial singleton space. Beliefs over the singleton
    space are the constant [1.0]; its encoding is that same constant, which
    keeps every agent code path uniform across both games.
    """

    env_id = "kitchen"

    def __init__(self, spec: KitchenSpec):
        self.spec = spec
        self.n_actions = spec.W
        self._hyp_enc = (np.eye(spec.K), np.ones((1, 1)))
        self._pub_dim = spec.K * spec.W + spec.W + 1

    # -- rules ------------------------------------------------------------
    def reset(self, scenario):
        return reset(self.spec, scenario)

    def step(self, state, scenario, action):
        return step(self.spec, state, scenario, action)

    def private_index(self, scenario, agent: int) -> int:
        return scenario.target if agent == 0 else 0

    # -- hypothesis spaces -------------------------------------------------
    def hyp_count(self, agent: int) -> int:
        return self.spec.K if agent == 0 else 1

    def hyp_encodings(self, agent: int) -> np.ndarray:
        return self._hyp_enc[agent]

    def belief_init(self, agent: int) -> np.ndarray:
        n = self.hyp_count(1 - agent)
        return np.full(n, 1.0 / n)

    def bob_dim(self, agent: int) -> int:
        return self.hyp_count(agent)

    def bob_init(self, agent: int) -> np.ndarray:
        n = self.hyp_count(agent)
        return np.full(n, 1.0 / n)

    def f_head(self, agent: int) -> str:
        return "softmax"

    def f_loss(self, agent: int) -> str:
        return "kl_divergence"

    def inform_mask(self, action: int):
        return None  # observing an ingredient carries no hard evidence

    def discretize_for(self, agent: int, belief: np.ndarray, rng) -> np.ndarray:
        """One-hot sample from the observer's belief over agent's space."""
        from .beliefs import discretize_kitchen

        return discretize_kitchen(belief, rng)

    # -- encodings ----------------------------------------------------------
    def encode_public(self, scenario, state) -> np.ndarray:
        s = self.spec
        parts = [_counts(d, s.W) for d in scenario.recipe]
        parts.append(_counts(state.prepared, s.W))
        parts.append(np.array([state.step / s.step_cap]))
        return np.concatenate(parts)

    def public_dim(self) -> int:
        return self._pub_dim

    def q_dim(self, agent: int) -> int:
        return (
            self._pub_dim
            + self.hyp_count(agent)
            + self.hyp_count(1 - agent)
            + self.bob_dim(agent)
        )

    def pi_dim(self, agent: int) -> int:
        return self._pub_dim + self.hyp_count(1 - agent)

    def f_dim(self, agent: int) -> int:
        return self.bob_dim(agent) + self.n_actions + self._pub_dim

    def q_row(self, agent, pub, own_idx, hyp_idx, bob) -> np.ndarray:
        own = self._hyp_enc[agent][own_idx]
        hyp = self._hyp_enc[1 - agent][hyp_idx]
        return np.concatenate([pub, own, hyp, bob])

    def q_rows(self, agent, pub, own_idx, bob) -> np.ndarray:
        """One row per partner hypothesis, in hypothesis order."""
        h = self.hyp_count(1 - agent)
        own = self._hyp_enc[agent][own_idx]
        fixed = np.concatenate([pub, own])
        rows = np.empty((h, self.q_dim(agent)))
        rows[:, : fixed.size] = fixed
        rows[:, fixed.size : fixed.size + h] = self._hyp_enc[1 - agent]
        rows[:, fixed.size + h :] = bob
        return rows

    def pi_row(self, agent, pub, hyp_idx) -> np.ndarray:
        return np.concatenate([pub, self._hyp_enc[1 - agent][hyp_idx]])

    def pi_rows(self, agent, pub) -> np.ndarray:
        h = self.hyp_count(1 - agent)
        rows = np.empty((h, self.pi_dim(agent)))
        rows[:, : pub.size] = pub
        rows[:, pub.size :] = self._hyp_enc[1 - agent]
        return rows

    def f_row(self, agent, pub, bob, action) -> np.ndarray:
        a = np.zeros(self.n_actions)
        a[action] = 1.0
        return np.concatenate([bob, a, pub])

    # -- serialization ------------------------------------------------------
    def spec_json(self):
        return {"K": self.spec.K, "M": self.spec.M, "W": self.spec.W}

    def scenario_to_json(self, scenario):
        return {"recipe": [list(d) for d in scenario.recipe], "target": scenario.target}

    def scenario_from_json(self, obj):
        return KitchenScenario(
            recipe=tuple(tuple(sorted(d)) for d in obj["recipe"]), target=obj["target"]
        )

    def state_to_json(self, state):
        return {"prepared": list(state.prepared), "turn": state.turn, "step": state.step}

    def state_from_json(self, obj):
        return KitchenState(tuple(obj["prepared"]), obj["turn"], obj["step"])


def save_scenarios(path, spec: KitchenSpec, scenarios) -> None:
    game = KitchenGame(spec)
    doc = {
        "v": SCENARIO_FORMAT_VERSION,
        "env": "kitchen",
        "spec": {"K": spec.K, "M": spec.M, "W": spec.W},
        "scenarios": [game.scenario_to_json(s) for s in scenarios],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_scenarios(path, spec: KitchenSpec) -> list[KitchenScenario]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("env") != "kitchen":
        raise ValueError(f"{path} is not a kitchen scenario file")
    got = doc["spec"]
    if (got["K"], got["M"], got["W"]) != (spec.K, spec.M, spec.W):
        raise ValueError(f"scenario file spec {got} does not match {spec}")
    game = KitchenGame(spec)
    out = [game.scenario_from_json(o) for o in doc["scenarios"]]
    for s in out:
        validate_scenario(spec, s)
    return out
