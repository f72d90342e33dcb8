"""Fractal renderer for the trainable/untrainable boundary of gradient descent.

Every pixel of a 2-D hyperparameter grid trains a small MLP to convergence
or divergence; the resulting boundary is extracted and its box-counting
dimension estimated.
"""

import os

# Renders are parallelized across pixels by multiprocessing; BLAS threads on
# top of that only thrash.  Must be set before numpy loads its BLAS.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

__version__ = "0.1.0"
