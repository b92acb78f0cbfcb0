"""Galerkin Navier-Stokes controllability kernels."""

import json

from ._core import (
    DomainError,
    __version__,
    delta_vector,
    interaction_coeffs,
    kbar,
    mode_set_K,
    norm,
    quadratic,
    simulate,
)
from . import _core


def verify_step(j, a="1", b="2", square_mode=False):
    return json.loads(_core.verify_step_json(j, a, b, square_mode))


def lie_rank(N, a, b, point):
    return json.loads(_core.lie_rank_json(N, a, b, point))


__all__ = [
    "DomainError",
    "__version__",
    "delta_vector",
    "interaction_coeffs",
    "kbar",
    "lie_rank",
    "mode_set_K",
    "norm",
    "quadratic",
    "simulate",
    "verify_step",
]
