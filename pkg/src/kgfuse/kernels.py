"""Kernel dispatch: prefer the compiled extension, fall back to numpy.

``BACKEND`` reports which implementation is active ("compiled" or
"python"). Both expose the same functions; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

try:
    from . import _kernels as _impl
except ImportError:  # no compiled extension in this install
    from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
power_iteration = _impl.power_iteration
jaro_winkler = _impl.jaro_winkler
