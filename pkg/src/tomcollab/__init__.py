"""Cooperative imperfect-information games with belief-tracking agents.

Two turn-based two-player games (kitchen collaboration, appointment
scheduling), agents that maintain a Bayesian belief over the partner's
private state plus a learned estimate of the partner's belief about their
own, and an alternating fixed-partner training loop that makes the
collaboration emerge.
"""

__version__ = "0.1.0"
