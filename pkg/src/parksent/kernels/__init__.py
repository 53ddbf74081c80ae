"""Hot-loop kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built at install time; setting
``PARKSENT_KERNELS=python`` forces the fallback. Both backends share one
calling convention, with contiguous float64/int64 arrays as inputs.

lisa_perm_counts(z, indptr, indices, weights, draws)
    Observed spatial lag per region and, for each region, how many
    conditional permutations give a local statistic ``>=`` the observed one.
gini_best_split(X, y, order, n_classes, min_leaf)
    Best Gini threshold split over the columns of ``X``.
mwu_null_counts(n_a, n_b)
    Null frequency of the Mann-Whitney U statistic, no ties.
sgd_hinge_epoch(...)
    One epoch of hinge-loss SGD over CSR rows.
"""
import importlib
import os

from . import _pykernels

NAMES = ("lisa_perm_counts", "gini_best_split", "mwu_null_counts", "sgd_hinge_epoch")


def _load_compiled():
    try:
        return importlib.import_module("._ckernels", __name__)
    except ImportError:
        return None


_compiled = _load_compiled()


def get_backend(name=None):
    """Return the kernel module for ``name`` ('compiled' or 'python')."""
    if name is None:
        name = os.environ.get("PARKSENT_KERNELS", "compiled" if _compiled else "python")
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; reinstall with a C toolchain")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


HAS_COMPILED = _compiled is not None
_active = get_backend()
BACKEND = "compiled" if _active is _compiled and _compiled is not None else "python"

lisa_perm_counts = _active.lisa_perm_counts
gini_best_split = _active.gini_best_split
mwu_null_counts = _active.mwu_null_counts
sgd_hinge_epoch = _active.sgd_hinge_epoch
