"""Appointment scheduling game.

Each agent holds a private D-slot timetable (0 free, 1 occupied). Agents
alternate actions: inform (announce one contiguous run of occupied slots),
propose (end the game naming a meeting slot), or reject (end the game
claiming no common free slot exists). Proposing an occupied slot, rejecting
a meetable pair, or informing an interval that is not fully occupied for
the sender all fail the game. Success pays +1 to both, failure -2 to both;
each legal inform costs its sender 0.1, settled at the end of the game.

Schedules are indexed big-endian: schedule index w has slot d occupied iff
bit (D-1-d) of w is set, so the index reads as the slot string, e.g. for
D=3 index 0b011 = 3 is the schedule [0, 1, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .core import STEP_CAP, StepOutcome, TerminalKind

Schedule = tuple[int, ...]

SCENARIO_FORMAT_VERSION = 1


class Inform(NamedTuple):
    start: int
    end: int  # inclusive


class Propose(NamedTuple):
    slot: int


class Reject(NamedTuple):
    pass


SchedAction = Union[Inform, Propose, Reject]


@dataclass(frozen=True)
class SchedulingSpec:
    D: int
    p: float = 0.5  # per-slot occupancy probability when sampling schedules
    success_reward: float = 1.0
    failure_reward: float = -2.0
    message_cost: float = 0.1
    step_cap: int = STEP_CAP

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("need D >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError("need 0 < p < 1")


@dataclass(frozen=True)
class SchedScenario:
    schedules: tuple[Schedule, Schedule]


@dataclass(frozen=True)
class SchedState:
    history: tuple[tuple[int, tuple[int, int]], ...]  # (sender, (start, end))
    turn: int
    step: int
    costs: tuple[float, float]  # accumulated message costs, <= 0


def generate_schedule(rng: np.random.Generator, D: int, p: float) -> Schedule:
    return tuple(int(x) for x in (rng.random(D) < p))


def legal_informs(schedule: Schedule) -> list[tuple[int, int]]:
    """All intervals [start, end] whose slots are all occupied."""
    D = len(schedule)
    out = []
    for start in range(D):
        for end in range(start, D):
            if all(schedule[d] for d in range(start, end + 1)):
                out.append((start, end))
    return out


def action_space(D: int) -> tuple[SchedAction, ...]:
    """Canonical action order: informs by (start, end), proposes, reject."""
    acts: list[SchedAction] = [Inform(s, e) for s in range(D) for e in range(s, D)]
    acts.extend(Propose(d) for d in range(D))
    acts.append(Reject())
    return tuple(acts)


def has_common_free_slot(a: Schedule, b: Schedule) -> bool:
    return any(x == 0 and y == 0 for x, y in zip(a, b))


def step(
    spec: SchedulingSpec,
    state: SchedState,
    scenario: SchedScenario,
    action: SchedAction,
) -> StepOutcome:
    """Apply one action; schedules of both agents decide the outcome."""
    me = state.turn
    mine = scenario.schedules[me]
    theirs = scenario.schedules[1 - me]

    def final(kind, reason, costs):
        base = spec.success_reward if kind is TerminalKind.SUCCESS else spec.failure_reward
        rewards = (base + costs[0], base + costs[1])
        nxt = SchedState(state.history, 1 - me, state.step + 1, costs)
        return StepOutcome(nxt, rewards, True, kind, reason)

    if isinstance(action, Propose):
        if not 0 <= action.slot < spec.D:
            raise ValueError(f"slot {action.slot} outside 0..{spec.D - 1}")
        if mine[action.slot] == 0 and theirs[action.slot] == 0:
            return final(TerminalKind.SUCCESS, "proposal_met", state.costs)
        return final(TerminalKind.FAILURE, "proposal_occupied", state.costs)

    if isinstance(action, Reject):
        if has_common_free_slot(mine, theirs):
            return final(TerminalKind.FAILURE, "wrong_reject", state.costs)
        return final(TerminalKind.SUCCESS, "correct_reject", state.costs)

    if not (0 <= action.start <= action.end < spec.D):
        raise ValueError(f"malformed interval {action}")
    if any(mine[d] == 0 for d in range(action.start, action.end + 1)):
        # "valid but wrong" message: no cost charged for the failing inform
        return final(TerminalKind.FAILURE, "untruthful_inform", state.costs)

    costs = list(state.costs)
    costs[me] -= spec.message_cost
    costs = (costs[0], costs[1])
    nxt = SchedState(
        history=state.history + ((me, (action.start, action.end)),),
        turn=1 - me,
        step=state.step + 1,
        costs=costs,
    )
    if nxt.step >= spec.step_cap:
        base = spec.failure_reward
        rewards = (base + costs[0], base + costs[1])
        return StepOutcome(nxt, rewards, True, TerminalKind.FAILURE, "step_cap")
    return StepOutcome(nxt, (0.0, 0.0), False, TerminalKind.NONE)


def reset(spec: SchedulingSpec, scenario: SchedScenario) -> SchedState:
    for sched in scenario.schedules:
        if len(sched) != spec.D:
            raise ValueError(f"schedule {sched} is not {spec.D} slots")
        if any(b not in (0, 1) for b in sched):
            raise ValueError(f"schedule {sched} is not binary")
    return SchedState(history=(), turn=0, step=0, costs=(0.0, 0.0))


def schedule_index(schedule: Schedule) -> int:
    idx = 0
    for b in schedule:
        idx = (idx << 1) | b
    return idx


def index_schedule(idx: int, D: int) -> Schedule:
    return tuple((idx >> (D - 1 - d)) & 1 for d in range(D))


def all_schedules(D: int) -> np.ndarray:
    """(2^D, D) 0/1 matrix, row w = schedule with index w."""
    out = np.zeros((1 << D, D))
    for w in range(1 << D):
        for d in range(D):
            out[w, d] = (w >> (D - 1 - d)) & 1
    return out


def consistent_schedule_mask(intervals, D: int) -> np.ndarray:
    """mask[w] = 1 iff schedule w has every informed slot occupied."""
    bits = all_schedules(D)
    mask = np.ones(1 << D)
    for start, end in intervals:
        for d in range(start, end + 1):
            mask *= bits[:, d]
    return mask


class SchedulingGame:
    """Codec and environment wrapper for the scheduling game.

    Beliefs over a partner's timetable live on the full 2^D hypothesis
    space; the estimate of the partner's belief about one's own timetable
    is kept as D per-slot occupancy probabilities.
    """

    env_id = "scheduling"

    def __init__(self, spec: SchedulingSpec):
        self.spec = spec
        self.actions = action_space(spec.D)
        self.n_actions = len(self.actions)
        self._bits = all_schedules(spec.D)
        self._pub_dim = 2 * spec.D + 1
        self._masks = self._build_masks()

    def _build_masks(self):
        masks = []
        for a in self.actions:
            if isinstance(a, Inform):
                masks.append(consistent_schedule_mask([(a.start, a.end)], self.spec.D))
            else:
                masks.append(None)
        return masks

    # -- rules ------------------------------------------------------------
    def reset(self, scenario):
        return reset(self.spec, scenario)

    def step(self, state, scenario, action: int):
        return step(self.spec, state, scenario, self.actions[action])

    def private_index(self, scenario, agent: int) -> int:
        return schedule_index(scenario.schedules[agent])

    # -- hypothesis spaces ---------------------------------------------------
    def hyp_count(self, agent: int) -> int:
        return 1 << self.spec.D

    def hyp_encodings(self, agent: int) -> np.ndarray:
        return self._bits

    def belief_init(self, agent: int) -> np.ndarray:
        n = self.hyp_count(1 - agent)
        return np.full(n, 1.0 / n)

    def bob_dim(self, agent: int) -> int:
        return self.spec.D

    def bob_init(self, agent: int) -> np.ndarray:
        return np.full(self.spec.D, 0.5)  # marginals of the uniform belief

    def f_head(self, agent: int) -> str:
        return "sigmoid"

    def f_loss(self, agent: int) -> str:
        return "l2_distance"

    def inform_mask(self, action: int):
        return self._masks[action]

    def discretize_for(self, agent: int, belief: np.ndarray, rng) -> np.ndarray:
        from .beliefs import discretize_scheduling, marginalize

        return discretize_scheduling(marginalize(belief, self._bits))

    # -- encodings ----------------------------------------------------------
    def encode_public(self, scenario, state) -> np.ndarray:
        """Union of informed slots per sender, plus normalized step count."""
        D = self.spec.D
        enc = np.zeros(self._pub_dim)
        for sender, (start, end) in state.history:
            enc[sender * D + start : sender * D + end + 1] = 1.0
        enc[-1] = state.step / self.spec.step_cap
        return enc

    def public_dim(self) -> int:
        return self._pub_dim

    def q_dim(self, agent: int) -> int:
        return self._pub_dim + 3 * self.spec.D

    def pi_dim(self, agent: int) -> int:
        return self._pub_dim + self.spec.D

    def f_dim(self, agent: int) -> int:
        return self.spec.D + self.n_actions + self._pub_dim

    def q_row(self, agent, pub, own_idx, hyp_idx, bob) -> np.ndarray:
        return np.concatenate([pub, self._bits[own_idx], self._bits[hyp_idx], bob])

    def q_rows(self, agent, pub, own_idx, bob) -> np.ndarray:
        h = self.hyp_count(1 - agent)
        fixed = np.concatenate([pub, self._bits[own_idx]])
        rows = np.empty((h, self.q_dim(agent)))
        rows[:, : fixed.size] = fixed
        rows[:, fixed.size : fixed.size + self.spec.D] = self._bits
        rows[:, fixed.size + self.spec.D :] = bob
        return rows

    def pi_row(self, agent, pub, hyp_idx) -> np.ndarray:
        return np.concatenate([pub, self._bits[hyp_idx]])

    def pi_rows(self, agent, pub) -> np.ndarray:
        h = self.hyp_count(1 - agent)
        rows = np.empty((h, self.pi_dim(agent)))
        rows[:, : pub.size] = pub
        rows[:, pub.size :] = self._bits
        return rows

    def f_row(self, agent, pub, bob, action) -> np.ndarray:
        a = np.zeros(self.n_actions)
        a[action] = 1.0
        return np.concatenate([bob, a, pub])

    # -- serialization ------------------------------------------------------
    def spec_json(self):
        return {"D": self.spec.D, "p": self.spec.p}

    def scenario_to_json(self, scenario):
        return {"a": list(scenario.schedules[0]), "b": list(scenario.schedules[1])}

    def scenario_from_json(self, obj):
        return SchedScenario((tuple(obj["a"]), tuple(obj["b"])))

    def state_to_json(self, state):
        return {
            "history": [[sender, list(iv)] for sender, iv in state.history],
            "turn": state.turn,
            "step": state.step,
            "costs": list(state.costs),
        }

    def state_from_json(self, obj):
        return SchedState(
            history=tuple((s, (iv[0], iv[1])) for s, iv in obj["history"]),
            turn=obj["turn"],
            step=obj["step"],
            costs=(obj["costs"][0], obj["costs"][1]),
        )


def save_scenarios(path, spec: SchedulingSpec, scenarios) -> None:
    game = SchedulingGame(spec)
    doc = {
        "v": SCENARIO_FORMAT_VERSION,
        "env": "scheduling",
        "spec": {"D": spec.D, "p": spec.p},
        "scenarios": [game.scenario_to_json(s) for s in scenarios],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_scenarios(path, spec: SchedulingSpec) -> list[SchedScenario]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("env") != "scheduling":
        raise ValueError(f"{path} is not a scheduling scenario file")
    if doc["spec"]["D"] != spec.D:
        raise ValueError(f"scenario file D={doc['spec']['D']} does not match D={spec.D}")
    game = SchedulingGame(spec)
    out = [game.scenario_from_json(o) for o in doc["scenarios"]]
    for s in out:
        reset(spec, s)  # validates shapes
    return out
