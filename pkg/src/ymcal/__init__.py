"""ymcal: lattice laboratory for SU(2) Yang-Mills flows on a periodic 3-torus."""

__version__ = "0.1.0"
