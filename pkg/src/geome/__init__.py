"""Geometric-algebra knowledge graph embeddings.

Multivector representations with the geometric product score triples as
phi(h, r, t) = sum_i Sc(M_h_i x M_r_i x conjugate(M_t_i)); the package
covers the algebra core, scoring, full-softmax training with cube-norm
regularization, filtered link-prediction evaluation, dataset handling,
and a command-line front end.

Submodules are imported lazily so the CLI can bound BLAS threads before
numpy loads.
"""

from importlib import import_module

__all__ = ["ga", "model", "train", "evaluation", "data", "cli"]

__version__ = "0.1.0"


def __getattr__(name):
    if name in __all__:
        return import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
