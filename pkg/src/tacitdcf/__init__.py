"""Multi-layer correlation-filter tracking engine.

Learns discriminative correlation filters over a stack of feature layers in
the Fourier domain, regularized by a spatial mask, Gram-matrix style
consistency, temporal response coherence, and spatiotemporal style coherence,
with an adaptive per-layer weight cascade. Ships with a synthetic-scenario
evaluation harness and a CLI.
"""

from tacitdcf.errors import NumericError, StackFormatError

__version__ = "0.1.0"

__all__ = ["NumericError", "StackFormatError", "__version__"]
