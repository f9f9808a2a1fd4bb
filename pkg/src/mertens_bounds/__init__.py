"""Explicit bounds for sums of the Mobius function and for square-free counts.

Submodules: ``approximant``, ``zeta``, ``sieve``, ``explicit_formula``,
``squarefree``, ``tightness`` and the command-line front end ``cli``.
"""

__version__ = "0.1.0"
