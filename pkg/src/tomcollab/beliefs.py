"""Belief machinery: Bayesian updates over partner private states,
propagation of the estimated partner belief, and discretization.

An agent's belief is a probability vector over the partner's enumerated
private-state space. Observing a partner action multiplies the belief by
the likelihood of that action under each hypothesis (taken from the
agent's learned partner-policy model) and renormalizes; in the scheduling
game a hard consistency mask from the observed inform is applied first.
A posterior that loses all its mass is reported as degenerate and reset to
the least-committal uniform, never silently propagated.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .approximator import forward

DEGENERATE_EPS = 1e-12


def counterfactual_update(
    prior: np.ndarray, likelihoods: np.ndarray
) -> Optional[np.ndarray]:
    """Posterior from one observed action, or None if all mass vanished.

    Zero-prior hypotheses stay zero.
    """
    post = prior * likelihoods
    mass = post.sum()
    if mass < DEGENERATE_EPS:
        return None
    return post / mass


def apply_mask(belief: np.ndarray, mask: np.ndarray) -> Optional[np.ndarray]:
    """Zero out masked hypotheses and renormalize; None if nothing is left."""
    return counterfactual_update(belief, mask)


def brute_force_posterior(prior, likelihood) -> np.ndarray:
    """Exact Bayes by direct enumeration; the oracle the fast path is
    checked against. Deliberately plain python with fsum."""
    products = [float(p) * float(l) for p, l in zip(prior, likelihood)]
    mass = math.fsum(products)
    if mass < DEGENERATE_EPS:
        raise ZeroDivisionError("posterior mass vanished")
    return np.asarray([x / mass for x in products])


def uniform_over(mask: Optional[np.ndarray], n: int) -> np.ndarray:
    """Uniform distribution over mask support (or everything)."""
    if mask is not None and mask.sum() > 0:
        return mask / mask.sum()
    return np.full(n, 1.0 / n)


def action_likelihoods(env, agent: int, pi_spec, pi_params, pub, action: int) -> np.ndarray:
    """P(observed partner action | each partner hypothesis) under the
    agent's partner-policy model."""
    rows = env.pi_rows(agent, pub)
    return forward(pi_spec, pi_params, rows)[:, action]


def update_on_partner_action(
    env,
    agent: int,
    pi_spec,
    pi_params,
    belief: np.ndarray,
    pub: np.ndarray,
    action: int,
    mask: Optional[np.ndarray],
) -> tuple[np.ndarray, int]:
    """Mask (hard evidence) then Bayes (soft evidence); returns the new
    belief and how many degenerate resets occurred (0-2)."""
    resets = 0
    if mask is not None:
        masked = apply_mask(belief, mask)
        if masked is None:
            masked = uniform_over(mask, belief.size)
            resets += 1
        belief = masked
    lik = action_likelihoods(env, agent, pi_spec, pi_params, pub, action)
    post = counterfactual_update(belief, lik)
    if post is None:
        post = uniform_over(mask, belief.size)
        resets += 1
    return post, resets


def bob_update(env, agent: int, f_spec, f_params, pub, bob, action: int) -> np.ndarray:
    """Propagate the estimate of the partner's belief through one own
    action with the learned update function."""
    return forward(f_spec, f_params, env.f_row(agent, pub, bob, action))


def marginalize(belief: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Per-slot occupancy probabilities of a belief over schedules.

    bits is the (2^D, D) schedule matrix in hypothesis order.
    """
    return bits.T @ belief


def discretize_kitchen(belief: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One-hot sample from the belief (the message an assistant would send)."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(belief), u))
    idx = min(idx, belief.size - 1)
    out = np.zeros(belief.size)
    out[idx] = 1.0
    return out


def discretize_scheduling(marginals: np.ndarray) -> np.ndarray:
    """Round each slot probability to the 0.1 grid, half away from zero."""
    return np.clip(np.floor(marginals * 10.0 + 0.5) / 10.0, 0.0, 1.0)
