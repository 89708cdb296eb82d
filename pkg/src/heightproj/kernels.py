"""Hot-kernel backend selection.

``HEIGHTPROJ_BACKEND`` picks the implementation:

* ``numba`` - require the @njit kernels (ImportError if numba is absent)
* ``numpy`` - force the pure-numpy fallback
* ``auto`` (default) - numba when importable, else numpy

Both backends expose the same functions; see ``benchmarks/bench_kernels.py``
for a side-by-side timing comparison.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_ENV_VAR = "HEIGHTPROJ_BACKEND"


def _select():
    requested = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be auto, numba, or numpy (got {requested!r})")
    if requested == "numpy":
        return _kernels_numpy, "numpy"
    try:
        from . import _kernels_numba
        return _kernels_numba, "numba"
    except ImportError:
        if requested == "numba":
            raise
        return _kernels_numpy, "numpy"


_impl, BACKEND = _select()

point_voxel_indices = _impl.point_voxel_indices
occupancy_from_points = _impl.occupancy_from_points
collapse_top_index = _impl.collapse_top_index
replace_mask = _impl.replace_mask
ray_randoms = _impl.ray_randoms
raycast_rays = _impl.raycast_rays
ray_first_hit_batch = _impl.ray_first_hit_batch
bilinear_batch = _impl.bilinear_batch
aggregate_camera = _impl.aggregate_camera

# The visitation-order walker is diagnostic only; the plain implementation is
# always used.
ray_voxels = _kernels_numpy.ray_voxels


def set_threads(n: int) -> int:
    """Cap kernel parallelism at n threads (0 = leave the default).

    Returns the thread count in effect. Requests above the machine limit are
    clamped; the numpy backend is single-threaded and always reports 1.
    """
    if BACKEND != "numba":
        return 1
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    if n <= 0:
        return numba.get_num_threads()
    capped = max(1, min(n, limit))
    numba.set_num_threads(capped)
    return capped
