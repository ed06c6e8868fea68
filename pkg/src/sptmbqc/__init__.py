"""Two-level simulator for measurement-based quantum computation on
symmetry-protected matrix-product wires: an exact channel engine on the bond
space, a Monte Carlo trajectory sampler, and a dense state-vector oracle."""

__version__ = "0.1.0"
