"""Numerical laboratory for spacelike submanifolds in Lorentzian spacetimes.

Computes mean curvature vectors and their causal (trapped) classification,
checks divergence and integral identities on discretized compact
submanifolds, validates constraint initial data, analyzes Killing and
conformal symmetries, and solves prescribed-mean-curvature and Dirichlet
graph problems at desk scale.
"""

__version__ = "0.1.0"
