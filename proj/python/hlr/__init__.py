"""Exact Huber-loss multi-view regression with adaptive threshold refinement.

Thin wrapper over the native module; everything public lives in ``_hlr``.
"""

from ._hlr import (
    DataError,
    Dataset,
    KernelSpec,
    Model,
    RidgeModel,
    SolverError,
    __version__,
    corrupt_sign_flip,
    dice,
    fit,
    flip_binary_labels,
    gen_linear_uniform,
    huber,
    huber_deriv,
    kernel_ridge,
    load_csv,
    mae,
    mre,
    mse,
    write_csv,
)

__all__ = [
    "DataError",
    "Dataset",
    "KernelSpec",
    "Model",
    "RidgeModel",
    "SolverError",
    "__version__",
    "corrupt_sign_flip",
    "dice",
    "fit",
    "flip_binary_labels",
    "gen_linear_uniform",
    "huber",
    "huber_deriv",
    "kernel_ridge",
    "load_csv",
    "mae",
    "mre",
    "mse",
    "write_csv",
]
