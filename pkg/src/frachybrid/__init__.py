"""Fractional-order hybrid systems: switching and reset control.

Models commensurate-order switching families and reset closed loops,
certifies stability through Lyapunov predicates and their
frequency-domain phase equivalents, and simulates hybrid trajectories
with a Grünwald-Letnikov integrator.
"""

__version__ = "0.1.0"
