"""Context-bounded liveness verification toolkit.

Decision procedures for non-termination, fair (progressive)
non-termination, and starvation of dynamic networks of concurrent
pushdown systems, via reductions to vector addition systems with
states, with and without balloons.
"""

__version__ = "0.1.0"
