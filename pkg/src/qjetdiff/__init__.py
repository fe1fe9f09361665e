"""Quantum, hybrid and classical denoising diffusion for sparse jet images.

Subpackages and modules:

* ``qlinalg``   dense complex linear algebra (QR, Hermitian eigensolver, PSD sqrt)
* ``qsim``      statevector simulator and Haar sampling
* ``encoding``  pixel <-> 4-qubit angle encoding, 2x2 channel split
* ``diffusion`` Gaussian schedule and Haar scrambling forward processes
* ``denoiser``  classical / hybrid / fully quantum models and checkpoints
* ``training``  MSE + Adam training, generation, FID, prominence filter
* ``jetio``     QJET dataset files, synthetic jets, PGM output
* ``cli``       the ``qjetdiff`` command
"""
from ._accel import backend_name

__version__ = "0.1.0"

__all__ = ["__version__", "backend_name"]
