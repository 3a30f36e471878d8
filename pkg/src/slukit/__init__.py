"""slukit: profile-aware joint intent detection and slot filling.

Training/evaluation pipeline for semantically ambiguous utterances whose
gold intent is only recoverable from supporting information (knowledge-graph
entities, user profile, context awareness), plus the deterministic synthetic
generator that produces such data.
"""

from .tape import Record, Tensor, backward, recording

__version__ = "0.1.0"

__all__ = ["Record", "Tensor", "backward", "recording", "__version__"]
