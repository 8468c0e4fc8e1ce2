"""Meshfree ALE solver for the Chu-reduced BGK equation."""

import os

# the bundled TBB is too old for numba; avoid the warning it triggers
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")
