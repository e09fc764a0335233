"""Alternating fixed-partner training with full-trajectory replay.

One agent learns per round while the partner stays frozen, which keeps the
learner's effective environment stationary. Every episode is stored whole
in a replay buffer that is cleared at each round start; each iteration
replays a batch of complete trajectories and applies three updates to the
learner: a TD step on its Q-net (against a periodically synced target
copy), maximum likelihood on its partner-policy model over the partner's
observed actions, and a supervised step on its belief propagator against
the partner's discretized belief messages.

Because moves strictly alternate, the learner's decision process is an
MDP over its own decision points: the reward for one decision is its own
move's reward plus its share of the partner's response, and the discount
is applied once per decision. Bootstrap inputs come from the next decision
point's recorded snapshots.
"""

from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .approximator import (
    MlpSpec,
    OptimizerState,
    forward,
    loss_and_grad,
    optimizer_step,
    spec_from_json,
    spec_to_json,
)
from .beliefs import bob_update, update_on_partner_action
from .core import StepRecord, TerminalKind, Trajectory, record_step
from .policy import ActMode, AgentContext, AgentModules, act, make_agent
from .rng import split_rng

METRICS_FORMAT_VERSION = 1
AGENTS_FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    rounds: int = 6
    round_length: int = 2000  # episodes (= update iterations) per agent per round
    batch_size: int = 32  # trajectories per update
    gamma: float = 0.95
    lr_q: float = 1e-3
    lr_pi: float = 1e-3
    lr_f: float = 1e-3
    target_sync: int = 500  # updates between target-net syncs
    buffer_capacity: int = 5000  # trajectories
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    optimizer: str = "adam"
    beta_exec: float = 5.0
    beta_train_start: float = 1.0
    eps_start: float = 0.3
    eps_end: float = 0.02
    eval_episodes: int = 600
    eval_mode: str = "greedy"
    metrics_every: int = 1000
    halt_patience: int = 0  # iterations without a new best train accuracy; 0 = off
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        for name in ("rounds", "round_length", "batch_size", "target_sync",
                     "buffer_capacity", "eval_episodes", "metrics_every"):
            if getattr(self, name) < (0 if name == "round_length" else 1):
                raise ValueError(f"{name} must be positive")


def run_episode(
    env,
    scenario,
    agents,
    rng: np.random.Generator,
    modes: tuple[ActMode, ActMode] = (ActMode(), ActMode()),
    record_supervision: bool = False,
    stats: Optional[dict] = None,
) -> Trajectory:
    """Play one game; agents act, observe each other, and update beliefs.

    With ``record_supervision`` the observer's refreshed belief about the
    actor is discretized and stored on the actor's step (the training-only
    message channel). Belief/bob snapshots in the record are pre-action.
    """
    state = env.reset(scenario)
    private = (env.private_index(scenario, 0), env.private_index(scenario, 1))
    beliefs = [env.belief_init(0), env.belief_init(1)]
    bobs = [env.bob_init(0), env.bob_init(1)]
    traj = Trajectory(env.env_id, scenario, private)

    while True:
        i = state.turn
        pub = env.encode_public(scenario, state)
        ctx = AgentContext(pub, private[i], beliefs[i], bobs[i])
        m = modes[i]
        a = act(agents[i], env, i, ctx, rng, mode=m.mode, beta=m.beta, epsilon=m.epsilon)
        out = env.step(state, scenario, a)

        snap_beliefs = (beliefs[0].copy(), beliefs[1].copy())
        snap_bobs = (bobs[0].copy(), bobs[1].copy())
        supervision = None
        if not out.terminal:
            j = 1 - i
            beliefs[j], resets = update_on_partner_action(
                env, j, agents[j].pi_spec, agents[j].pi_params,
                beliefs[j], pub, a, env.inform_mask(a),
            )
            if stats is not None and resets:
                stats["degenerate_resets"] = stats.get("degenerate_resets", 0) + resets
            if record_supervision:
                supervision = env.discretize_for(i, beliefs[j], rng)
            bobs[i] = bob_update(
                env, i, agents[i].f_spec, agents[i].f_params, pub, bobs[i], a
            )
        record_step(
            traj,
            StepRecord(state, i, a, out.rewards, snap_beliefs, snap_bobs,
                       supervision, out.kind, out.reason),
        )
        if out.terminal:
            return traj
        state = out.next_state


@dataclass
class LearnerView:
    """Replay matrices for one trajectory from one learner's seat."""

    q_in: np.ndarray  # (n_dec, q_dim) decision-time inputs
    q_act: np.ndarray  # (n_dec,) actions taken
    q_reff: np.ndarray  # (n_dec,) own-move + partner-response reward
    q_done: np.ndarray  # (n_dec,) no next decision
    q_next: np.ndarray  # (n_dec, q_dim) next-decision inputs (zeros where done)
    pi_in: np.ndarray  # (n_partner, pi_dim)
    pi_act: np.ndarray  # (n_partner,)
    f_in: np.ndarray  # (n_sup, f_dim)
    f_tgt: np.ndarray  # (n_sup, bob_dim)


def build_view(env, traj: Trajectory, learner: int) -> LearnerView:
    own = traj.private[learner]
    partner_own = traj.private[1 - learner]
    pubs = [env.encode_public(traj.scenario, s.state) for s in traj.steps]

    q_in, q_act, q_reff, q_done, q_next = [], [], [], [], []
    pi_in, pi_act = [], []
    f_in, f_tgt = [], []
    zero_row = np.zeros(env.q_dim(learner))

    for idx, s in enumerate(traj.steps):
        if s.agent != learner:
            pi_in.append(env.pi_row(learner, pubs[idx], partner_own))
            pi_act.append(s.action)
            continue
        q_in.append(env.q_row(learner, pubs[idx], own, partner_own, s.bobs[learner]))
        q_act.append(s.action)
        r = s.rewards[learner]
        done = True
        nxt_row = zero_row
        if s.terminal is TerminalKind.NONE:
            response = traj.steps[idx + 1]
            r += response.rewards[learner]
            if response.terminal is TerminalKind.NONE:
                nd = traj.steps[idx + 2]
                nxt_row = env.q_row(
                    learner, pubs[idx + 2], own, partner_own, nd.bobs[learner]
                )
                done = False
            if s.supervision is not None:
                f_in.append(env.f_row(learner, pubs[idx], s.bobs[learner], s.action))
                f_tgt.append(s.supervision)
        q_reff.append(r)
        q_done.append(done)
        q_next.append(nxt_row)

    def stack(rows, dim):
        return np.asarray(rows) if rows else np.empty((0, dim))

    return LearnerView(
        q_in=stack(q_in, env.q_dim(learner)),
        q_act=np.asarray(q_act, dtype=np.int64),
        q_reff=np.asarray(q_reff, dtype=np.float64),
        q_done=np.asarray(q_done, dtype=bool),
        q_next=stack(q_next, env.q_dim(learner)),
        pi_in=stack(pi_in, env.pi_dim(learner)),
        pi_act=np.asarray(pi_act, dtype=np.int64),
        f_in=stack(f_in, env.f_dim(learner)),
        f_tgt=stack(f_tgt, env.bob_dim(learner)),
    )


class ReplayBuffer:
    """FIFO of complete trajectories (with their cached learner views)."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def add(self, traj: Trajectory, view: LearnerView) -> None:
        self._items.append((traj, view))

    def sample(self, rng: np.random.Generator, n: int) -> list[LearnerView]:
        """n whole trajectories; with replacement only while underfull."""
        size = len(self._items)
        if size == 0:
            raise ValueError("cannot sample from an empty buffer")
        replace = size < n
        idx = rng.choice(size, size=n, replace=replace)
        return [self._items[i][1] for i in idx]


def compute_targets(
    views: list[LearnerView], q_spec: MlpSpec, q_target: np.ndarray, gamma: float
) -> list[np.ndarray]:
    """Per-view TD targets: reward plus discounted target-net max at the
    next decision point, reward alone where the game ended."""
    rows = [v.q_next[~v.q_done] for v in views]
    stacked = np.concatenate([r for r in rows if r.size], axis=0) if any(
        r.size for r in rows
    ) else None
    maxq = None
    if stacked is not None:
        maxq = forward(q_spec, q_target, stacked).max(axis=1)
    out = []
    pos = 0
    for v in views:
        y = v.q_reff.copy()
        live = ~v.q_done
        k = int(live.sum())
        if k:
            y[live] += gamma * maxq[pos : pos + k]
            pos += k
        out.append(y)
    return out


def losses(
    env, learner: int, modules: AgentModules, views: list[LearnerView],
    targets: list[np.ndarray],
) -> tuple[dict, dict]:
    """The three scalar losses and their gradients for one batch."""
    loss_out: dict = {}
    grads: dict = {}
    n_act = env.n_actions

    q_x = np.concatenate([v.q_in for v in views], axis=0)
    if q_x.shape[0]:
        q_a = np.concatenate([v.q_act for v in views])
        q_y = np.concatenate(targets)
        t = np.zeros((q_x.shape[0], n_act))
        w = np.zeros_like(t)
        rows = np.arange(q_x.shape[0])
        t[rows, q_a] = q_y
        w[rows, q_a] = 1.0
        loss_out["q"], grads["q"] = loss_and_grad(
            modules.q_spec, modules.q_params, q_x, t, "squared_error", w
        )
    else:
        loss_out["q"], grads["q"] = 0.0, np.zeros_like(modules.q_params)

    pi_x = np.concatenate([v.pi_in for v in views], axis=0)
    if pi_x.shape[0]:
        pi_a = np.concatenate([v.pi_act for v in views])
        onehot = np.zeros((pi_x.shape[0], n_act))
        onehot[np.arange(pi_x.shape[0]), pi_a] = 1.0
        loss_out["pi"], grads["pi"] = loss_and_grad(
            modules.pi_spec, modules.pi_params, pi_x, onehot, "softmax_cross_entropy"
        )
    else:
        loss_out["pi"], grads["pi"] = 0.0, np.zeros_like(modules.pi_params)

    f_x = np.concatenate([v.f_in for v in views], axis=0)
    if f_x.shape[0]:
        f_t = np.concatenate([v.f_tgt for v in views], axis=0)
        loss_out["f"], grads["f"] = loss_and_grad(
            modules.f_spec, modules.f_params, f_x, f_t, env.f_loss(learner)
        )
    else:
        loss_out["f"], grads["f"] = 0.0, np.zeros_like(modules.f_params)
    return loss_out, grads


@dataclass
class TrainState:
    """Counters that persist across rounds."""

    iteration: int = 0  # global update count
    updates: list[int] = field(default_factory=lambda: [0, 0])  # per agent
    planned: list[int] = field(default_factory=lambda: [1, 1])
    optimizers: dict = field(default_factory=dict)
    window: dict = field(default_factory=dict)
    best_train: float = -1.0
    best_iteration: int = 0
    halted: bool = False
    stats: dict = field(default_factory=dict)

    def anneal(self, agent: int, lo: float, hi: float) -> float:
        progress = min(1.0, self.updates[agent] / max(1, self.planned[agent]))
        return lo + (hi - lo) * progress


def _flush_window(state: TrainState, cfg: TrainConfig, rnd, learner, metrics, log_fh):
    w = state.window
    if not w.get("count"):
        return
    rec = {
        "iteration": state.iteration,
        "round": rnd,
        "learner": learner,
        "L_Q": w["q"] / w["count"],
        "L_pi": w["pi"] / w["count"],
        "L_f": w["f"] / w["count"],
        "train_success": w["wins"] / w["count"],
        "eval_success": None,
    }
    metrics.append(rec)
    if log_fh:
        log_fh.write(json.dumps(rec, sort_keys=True) + "\n")
        log_fh.flush()
    if rec["train_success"] > state.best_train:
        state.best_train = rec["train_success"]
        state.best_iteration = state.iteration
    if cfg.halt_patience and state.iteration - state.best_iteration >= cfg.halt_patience:
        state.halted = True
    state.window = {}


def train_round(
    env,
    agents: list[AgentModules],
    learner: int,
    scenarios,
    cfg: TrainConfig,
    state: TrainState,
    rng: np.random.Generator,
    rnd: int = 0,
    metrics: Optional[list] = None,
    log_fh=None,
) -> None:
    """One round: the learner plays, replays, and updates; partner frozen."""
    if metrics is None:
        metrics = []
    buffer = ReplayBuffer(cfg.buffer_capacity)
    mods = agents[learner]
    opts = state.optimizers.setdefault(
        learner, {k: OptimizerState(cfg.optimizer) for k in ("q", "pi", "f")}
    )

    for _ in range(cfg.round_length):
        eps = state.anneal(learner, cfg.eps_start, cfg.eps_end)
        beta = state.anneal(learner, cfg.beta_train_start, cfg.beta_exec)
        modes = [ActMode(), ActMode()]
        modes[learner] = ActMode("sample", beta=beta, epsilon=eps)
        sc = scenarios[rng.integers(len(scenarios))]
        traj = run_episode(
            env, sc, agents, rng, (modes[0], modes[1]),
            record_supervision=True, stats=state.stats,
        )
        buffer.add(traj, build_view(env, traj, learner))

        views = buffer.sample(rng, cfg.batch_size)
        targets = compute_targets(views, mods.q_spec, mods.q_target, cfg.gamma)
        loss_vals, grads = losses(env, learner, mods, views, targets)
        for key, lr in (("q", cfg.lr_q), ("pi", cfg.lr_pi), ("f", cfg.lr_f)):
            params = getattr(mods, f"{key}_params")
            new_params, opts[key] = optimizer_step(params, grads[key], lr, opts[key])
            setattr(mods, f"{key}_params", new_params)

        state.iteration += 1
        state.updates[learner] += 1
        if state.updates[learner] % cfg.target_sync == 0:
            mods.q_target = mods.q_params.copy()

        w = state.window
        w["count"] = w.get("count", 0) + 1
        w["q"] = w.get("q", 0.0) + loss_vals["q"]
        w["pi"] = w.get("pi", 0.0) + loss_vals["pi"]
        w["f"] = w.get("f", 0.0) + loss_vals["f"]
        w["wins"] = w.get("wins", 0) + (traj.outcome is TerminalKind.SUCCESS)
        if w["count"] >= cfg.metrics_every:
            _flush_window(state, cfg, rnd, learner, metrics, log_fh)
            if state.halted:
                return


def evaluate_success(
    env, agents, scenarios, episodes: int, rng: np.random.Generator,
    mode: str = "greedy",
) -> float:
    """Decentralized-execution success rate; no supervision, no updates."""
    act_mode = ActMode(mode) if mode == "greedy" else ActMode("sample")
    wins = 0
    for _ in range(episodes):
        sc = scenarios[rng.integers(len(scenarios))]
        traj = run_episode(env, sc, agents, rng, (act_mode, act_mode))
        wins += traj.outcome is TerminalKind.SUCCESS
    return wins / episodes


def train(
    env,
    train_scenarios,
    test_scenarios,
    cfg: TrainConfig,
    out_dir: Optional[str] = None,
) -> tuple[list[AgentModules], list[dict]]:
    """Full alternating run; returns trained agents and the metric log.

    With ``out_dir``: appends the metric log to metrics.jsonl as it goes,
    writes a checkpoint per round and agents_final.json at the end.
    """
    r_init, r_train, r_eval = split_rng(cfg.seed, 3)
    agents = [
        make_agent(env, i, cfg.hidden, cfg.activation, r_init, cfg.beta_exec)
        for i in range(2)
    ]
    state = TrainState()
    total = cfg.rounds * cfg.round_length
    state.planned = [total, total]
    metrics: list[dict] = []
    log_fh = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        log_fh = open(os.path.join(out_dir, "metrics.jsonl"), "w")

    def emit_eval(rnd: int):
        score = evaluate_success(
            env, agents, test_scenarios, cfg.eval_episodes, r_eval, cfg.eval_mode
        )
        rec = {
            "iteration": state.iteration, "round": rnd, "learner": None,
            "L_Q": None, "L_pi": None, "L_f": None,
            "train_success": None, "eval_success": score,
        }
        metrics.append(rec)
        if log_fh:
            log_fh.write(json.dumps(rec, sort_keys=True) + "\n")
            log_fh.flush()

    emit_eval(0)
    for rnd in range(1, cfg.rounds + 1):
        for learner in range(2):
            train_round(
                env, agents, learner, train_scenarios, cfg, state, r_train,
                rnd=rnd, metrics=metrics, log_fh=log_fh,
            )
            if state.halted:
                break
        emit_eval(rnd)
        if out_dir:
            save_agents(os.path.join(out_dir, f"checkpoint_round_{rnd:03d}.json"), env, agents)
        if state.halted:
            break
    if out_dir:
        save_agents(os.path.join(out_dir, "agents_final.json"), env, agents)
        log_fh.close()
    return agents, metrics


def _agent_to_json(m: AgentModules) -> dict:
    arr = lambda a: [float(x) for x in a]
    return {
        "q_spec": spec_to_json(m.q_spec), "q_params": arr(m.q_params),
        "q_target": arr(m.q_target),
        "pi_spec": spec_to_json(m.pi_spec), "pi_params": arr(m.pi_params),
        "f_spec": spec_to_json(m.f_spec), "f_params": arr(m.f_params),
        "beta": m.beta,
    }


def save_agents(path, env, agents) -> None:
    doc = {
        "v": AGENTS_FORMAT_VERSION,
        "env": env.env_id,
        "env_spec": env.spec_json(),
        "agents": [_agent_to_json(m) for m in agents],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_agents(path, env) -> list[AgentModules]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc["v"] != AGENTS_FORMAT_VERSION:
        raise ValueError(f"unsupported agents format version {doc['v']}")
    if doc["env"] != env.env_id or doc["env_spec"] != env.spec_json():
        raise ValueError(
            f"checkpoint is for {doc['env']} {doc['env_spec']}, "
            f"not {env.env_id} {env.spec_json()}"
        )
    agents = []
    for a in doc["agents"]:
        agents.append(
            AgentModules(
                q_spec=spec_from_json(a["q_spec"]),
                q_params=np.asarray(a["q_params"]),
                q_target=np.asarray(a["q_target"]),
                pi_spec=spec_from_json(a["pi_spec"]),
                pi_params=np.asarray(a["pi_params"]),
                f_spec=spec_from_json(a["f_spec"]),
                f_params=np.asarray(a["f_params"]),
                beta=a["beta"],
            )
        )
    for m, i in zip(agents, range(2)):
        if m.q_spec.in_dim != env.q_dim(i):
            raise ValueError("checkpoint network shapes do not match this environment")
    return agents
