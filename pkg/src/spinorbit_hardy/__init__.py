"""Hardy's paradox in the spin-orbit space of a single photon: predictions,
preparation, simulated photon counting, tomography and the non-contextual bound."""

__version__ = "0.1.0"
