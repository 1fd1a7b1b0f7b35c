"""Secrecy-rate analysis of regularized channel inversion in MISO broadcast channels.

Closed-form large-system formulas live in :mod:`rci_secrecy.rmt`, the finite-size
simulator in :mod:`rci_secrecy.montecarlo`, scalar optimizers in
:mod:`rci_secrecy.optimize` and figure presets in :mod:`rci_secrecy.experiments`.
"""

__version__ = "0.1.0"

from .errors import DomainError, EmptyDomain, IllConditioned, NoBracket, TooManySkipped

__all__ = ["__version__", "DomainError", "EmptyDomain", "IllConditioned", "NoBracket",
           "TooManySkipped"]
