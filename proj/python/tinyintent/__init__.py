"""Intent classification with character-enriched word representations.

Thin wrapper over the C++ core: training, post-training int8 quantization,
and single-utterance inference against the compact binary model format.
"""

from tinyintent._tinyintent import Engine, evaluate, quantize, train

__all__ = ["Engine", "evaluate", "quantize", "train"]
