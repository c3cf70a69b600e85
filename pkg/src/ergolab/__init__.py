"""ergolab: a desk-scale laboratory for non-singular symbolic dynamics.

Subpackages cover the shift-space foundation, Bernoulli and Markov measures
with their Radon-Nikodym cocycles, Poisson suspensions with an exact event
probability engine, ergodic/Hurewicz averaging, lattice actions, and a
config-driven experiment runner.
"""

__version__ = "0.1.0"

from .shift_core import Alphabet, Configuration, Cylinder  # noqa: F401
