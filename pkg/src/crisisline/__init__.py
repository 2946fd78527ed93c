"""crisisline: online cross-stream crisis timeline engine.

Trains a small Q-network to keep or discard timestamped texts on the fly
(reward trades informativeness against redundancy with the already-kept
set), then assembles ranked daily fact timelines from the kept texts and
scores them with bigram F1 and an embedding-based semantic proxy.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND_NAME

__all__ = ["BACKEND_NAME", "__version__"]
