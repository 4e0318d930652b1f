"""orion: a compiler and cleartext virtual machine for CKKS-style FHE inference.

The compiler lowers small neural networks to a flat FHE instruction stream
(rotations, SIMD multiplies/adds, rescales, bootstraps) using generalized
diagonal / baby-step giant-step linear algebra, single-shot multiplexed
Toeplitz convolutions, shortest-path bootstrap placement and errorless scale
management. The VM executes the stream under exact level/scale/slot semantics
and reports cost metrics.
"""

__version__ = "0.1.0"

from .params import CkksParams, ScaleDescriptor, load_params, validate

__all__ = ["CkksParams", "ScaleDescriptor", "load_params", "validate",
           "__version__"]
