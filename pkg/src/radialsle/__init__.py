"""Radial Loewner chains, conformal-radius moments, and random-cluster interfaces.

The package has three layers:

* exact combinatorics and special functions (``linkpat``, ``specfun``, ``bpz``),
* stochastic simulation of the angular hitting diffusion and of radial
  Loewner traces (``diffusion``, ``loewner``),
* finite random-cluster models with exact enumeration oracles (``rcm``).

Everything randomized is driven by counter-based streams from ``rng`` so that
results are reproducible and independent of batching.
"""

__version__ = "0.1.0"

from . import bpz, diffusion, linkpat, loewner, specfun  # noqa: F401
