"""Parallax-aware simulation and reconstruction for angular-sensitive
powder diffraction tomography.

Subpackages cover the scan geometry and closed-form parallax expressions
(:mod:`~parallax_dxt.geometry`), diffraction-curve moment analysis
(:mod:`~parallax_dxt.curves`), voxelized sample slices
(:mod:`~parallax_dxt.phantom`), sinogram synthesis
(:mod:`~parallax_dxt.forward`), filtered back-projection and parallax
correction (:mod:`~parallax_dxt.recon`), and the command-line front end
(:mod:`~parallax_dxt.cli`).
"""

__version__ = "0.1.0"
