"""Kernel backend selection.

The compiled extension is preferred when present; setting the environment
variable SPECMESH_PURE_PYTHON to a non-empty value forces the numpy
fallback. Both backends expose the same functions and agree numerically.
"""

import os

from . import _dr_numpy

if os.environ.get("SPECMESH_PURE_PYTHON"):
    _backend = _dr_numpy
else:
    try:
        from . import _dr_fast as _backend
    except ImportError:
        _backend = _dr_numpy

BACKEND = _backend.NAME

accumulate_cross = _backend.accumulate_cross
accumulate_gram = _backend.accumulate_gram
polar_factors = _backend.polar_factors
log_rotations = _backend.log_rotations
exp_rotations = _backend.exp_rotations
encode_features = _backend.encode_features
features_to_matrices = _backend.features_to_matrices


def backend_name():
    """Name of the active kernel backend ('fast' or 'numpy')."""
    return BACKEND
