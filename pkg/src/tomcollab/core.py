"""Shared game-core types: step outcomes, trajectories, serialization.

Both games are turn-based with strict alternation starting from agent 0 and
one mover per time step. Episodes are hard-capped at ``STEP_CAP`` moves;
hitting the cap counts as a failure with the environment's failure reward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

N_AGENTS = 2
STEP_CAP = 20

TRAJECTORY_FORMAT_VERSION = 1


class TerminalKind(Enum):
    NONE = "none"
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class StepOutcome:
    """Result of applying one action to a live state."""

    next_state: Any
    rewards: tuple[float, ...]
    terminal: bool
    kind: TerminalKind
    reason: str = ""  # failure/success cause, e.g. "excess_ingredient"

    def __post_init__(self):
        if self.terminal == (self.kind is TerminalKind.NONE):
            raise ValueError("kind must be NONE exactly when non-terminal")


@dataclass
class StepRecord:
    """One move: pre-action state and per-agent mental-state snapshots.

    ``beliefs[i]`` is agent i's distribution over the partner's private
    space and ``bobs[i]`` its running estimate of the partner's belief about
    agent i, both as they stood when the acting agent chose ``action``.
    ``supervision`` is the observer's refreshed belief about the actor,
    discretized; it is only filled in during centralized training and only
    for non-terminal moves.
    """

    state: Any
    agent: int
    action: int
    rewards: tuple[float, ...]
    beliefs: tuple[np.ndarray, ...]
    bobs: tuple[np.ndarray, ...]
    supervision: Optional[np.ndarray]
    terminal: TerminalKind
    reason: str = ""


@dataclass
class Trajectory:
    """Full episode record; the replay and serialization unit."""

    env_id: str
    scenario: Any
    private: tuple[int, ...]  # true private-state index per agent
    steps: list[StepRecord] = field(default_factory=list)
    outcome: TerminalKind = TerminalKind.NONE

    def returns(self) -> tuple[float, ...]:
        """Undiscounted per-agent sum of recorded rewards."""
        totals = [0.0] * N_AGENTS
        for s in self.steps:
            for i, r in enumerate(s.rewards):
                totals[i] += r
        return tuple(totals)


def record_step(traj: Trajectory, step: StepRecord) -> Trajectory:
    """Append a step, closing the trajectory if the step was terminal."""
    if traj.outcome is not TerminalKind.NONE:
        raise ValueError("cannot append to a finished trajectory")
    traj.steps.append(step)
    if step.terminal is not TerminalKind.NONE:
        traj.outcome = step.terminal
    return traj


def _array_to_list(a: Optional[np.ndarray]):
    return None if a is None else [float(x) for x in a]


def trajectory_to_json(traj: Trajectory, env) -> str:
    """One-line JSON record for a trajectory (the JSONL row format)."""
    rec = {
        "v": TRAJECTORY_FORMAT_VERSION,
        "env": traj.env_id,
        "scenario": env.scenario_to_json(traj.scenario),
        "private": list(traj.private),
        "outcome": traj.outcome.value,
        "steps": [
            {
                "state": env.state_to_json(s.state),
                "agent": s.agent,
                "action": s.action,
                "rewards": list(s.rewards),
                "beliefs": [_array_to_list(b) for b in s.beliefs],
                "bobs": [_array_to_list(b) for b in s.bobs],
                "supervision": _array_to_list(s.supervision),
                "terminal": s.terminal.value,
                "reason": s.reason,
            }
            for s in traj.steps
        ],
    }
    return json.dumps(rec, sort_keys=True)


def trajectory_from_json(line: str, env) -> Trajectory:
    rec = json.loads(line)
    if rec["v"] != TRAJECTORY_FORMAT_VERSION:
        raise ValueError(f"unsupported trajectory format version {rec['v']}")
    if rec["env"] != env.env_id:
        raise ValueError(f"trajectory env {rec['env']!r} does not match {env.env_id!r}")
    traj = Trajectory(
        env_id=rec["env"],
        scenario=env.scenario_from_json(rec["scenario"]),
        private=tuple(rec["private"]),
    )
    for s in rec["steps"]:
        sup = s["supervision"]
        traj.steps.append(
            StepRecord(
                state=env.state_from_json(s["state"]),
                agent=s["agent"],
                action=s["action"],
                rewards=tuple(s["rewards"]),
                beliefs=tuple(np.asarray(b, dtype=np.float64) for b in s["beliefs"]),
                bobs=tuple(np.asarray(b, dtype=np.float64) for b in s["bobs"]),
                supervision=None if sup is None else np.asarray(sup, dtype=np.float64),
                terminal=TerminalKind(s["terminal"]),
                reason=s["reason"],
            )
        )
    traj.outcome = TerminalKind(rec["outcome"])
    return traj


def write_trajectories(path, trajectories, env) -> None:
    with open(path, "w") as fh:
        for t in trajectories:
            fh.write(trajectory_to_json(t, env) + "\n")


def read_trajectories(path, env) -> list[Trajectory]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(trajectory_from_json(line, env))
    return out
