"""Closed-loop intent control toolkit.

Three cooperating pieces: a deterministic threshold interpreter working on
versioned optimization templates, a trust-region preference optimizer on
product simplices, and a distributed multi-objective Q-learning controller
with prioritized replay.
"""

__version__ = "0.1.0"
