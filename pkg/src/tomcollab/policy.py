"""Action selection: soft-rational choice over belief-weighted Q-values.

An agent evaluates its Q-net once per partner-state hypothesis (the true
hypothesis is only fed in during centralized training; at execution the
whole space is enumerated), averages the value rows under its current
belief, and samples from a softmax sharpened by its rationality
coefficient beta. Greedy mode takes the argmax with lowest-index
tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approximator import MlpSpec, forward, init_params


@dataclass
class AgentModules:
    """The three learned components of one agent plus its rationality."""

    q_spec: MlpSpec
    q_params: np.ndarray
    q_target: np.ndarray  # stale copy used for bootstrap targets
    pi_spec: MlpSpec
    pi_params: np.ndarray
    f_spec: MlpSpec
    f_params: np.ndarray
    beta: float = 5.0

    def param_hash(self) -> tuple:
        h = lambda a: hash(a.tobytes())
        return (h(self.q_params), h(self.pi_params), h(self.f_params))


@dataclass
class AgentContext:
    """Everything agent i knows when choosing an action."""

    public: np.ndarray  # encoded public state (includes the step counter)
    own: int  # index of the agent's true private state
    belief: np.ndarray  # over the partner's private space
    bob: np.ndarray  # estimate of the partner's belief about the agent


@dataclass(frozen=True)
class ActMode:
    """How an agent picks actions during an episode."""

    mode: str = "sample"  # "sample" or "greedy"
    beta: float | None = None  # None: use the module's execution beta
    epsilon: float = 0.0  # uniform-mixing probability, learner-only


def make_agent(env, agent: int, hidden, activation: str, rng, beta: float) -> AgentModules:
    """Fresh modules sized from the environment's encodings."""
    hidden = tuple(hidden)
    q_spec = MlpSpec((env.q_dim(agent), *hidden, env.n_actions), activation, "linear")
    pi_spec = MlpSpec((env.pi_dim(agent), *hidden, env.n_actions), activation, "softmax")
    f_spec = MlpSpec(
        (env.f_dim(agent), *hidden, env.bob_dim(agent)), activation, env.f_head(agent)
    )
    q_params = init_params(q_spec, rng)
    return AgentModules(
        q_spec=q_spec,
        q_params=q_params,
        q_target=q_params.copy(),
        pi_spec=pi_spec,
        pi_params=init_params(pi_spec, rng),
        f_spec=f_spec,
        f_params=init_params(f_spec, rng),
        beta=beta,
    )


def q_values(modules: AgentModules, env, agent: int, ctx: AgentContext, hyp: int) -> np.ndarray:
    """Q row for one hypothesized partner private state."""
    row = env.q_row(agent, ctx.public, ctx.own, hyp, ctx.bob)
    return forward(modules.q_spec, modules.q_params, row)


def q_values_all(modules: AgentModules, env, agent: int, ctx: AgentContext) -> np.ndarray:
    """(hypotheses, actions) Q matrix in hypothesis order."""
    rows = env.q_rows(agent, ctx.public, ctx.own, ctx.bob)
    return forward(modules.q_spec, modules.q_params, rows)


def expected_q(modules: AgentModules, env, agent: int, ctx: AgentContext) -> np.ndarray:
    """Belief-weighted average of per-hypothesis Q rows."""
    return ctx.belief @ q_values_all(modules, env, agent, ctx)


def boltzmann(values: np.ndarray, beta: float) -> np.ndarray:
    """Softmax over beta-scaled values, max-subtracted for overflow safety."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    z = beta * values
    e = np.exp(z - z.max())
    return e / e.sum()


def sample_from(probs: np.ndarray, rng: np.random.Generator) -> int:
    idx = int(np.searchsorted(np.cumsum(probs), rng.random()))
    return min(idx, probs.size - 1)


def act(
    modules: AgentModules,
    env,
    agent: int,
    ctx: AgentContext,
    rng: np.random.Generator,
    mode: str = "sample",
    beta: float | None = None,
    epsilon: float = 0.0,
) -> int:
    """Choose an action index.

    mode "sample": Boltzmann draw at `beta` (default: the module's beta),
    optionally mixed with a uniform draw with probability `epsilon`.
    mode "greedy": argmax of the expected Q values, lowest index on ties.
    """
    if mode == "greedy":
        return int(np.argmax(expected_q(modules, env, agent, ctx)))
    if mode != "sample":
        raise ValueError(f"unknown act mode {mode!r}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(env.n_actions))
    b = modules.beta if beta is None else beta
    return sample_from(boltzmann(expected_q(modules, env, agent, ctx), b), rng)


def partner_policy(modules: AgentModules, env, agent: int, pub: np.ndarray, hyp: int) -> np.ndarray:
    """The agent's model of its partner's action distribution under one
    hypothesized partner private state."""
    return forward(modules.pi_spec, modules.pi_params, env.pi_row(agent, pub, hyp))
