"""clickseg: interactive object selection from sparse clicks.

Clicks become truncated Euclidean distance channels, a small convolutional
backend predicts per-pixel object probability, and an exact grid min-cut
refines the mask. Includes a click simulator for benchmarking, a dataset
toolchain, a CLI, and an HTTP service for live use.
"""

from .kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
