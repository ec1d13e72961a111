"""LSTM and E-LSTM character models with a pseudoinverse (ELM-style) gate."""

from ._core import (
    ElmModel,
    InputError,
    Model,
    NumericError,
    compare,
    elm_fit,
    gen_random_letters,
    gradcheck,
    load_checkpoint,
    matmul,
    pinv,
    ridge_solve,
    train,
)

__all__ = [
    "ElmModel",
    "InputError",
    "Model",
    "NumericError",
    "compare",
    "elm_fit",
    "gen_random_letters",
    "gradcheck",
    "load_checkpoint",
    "matmul",
    "pinv",
    "ridge_solve",
    "train",
]
