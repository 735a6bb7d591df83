"""Least-squares estimation of polynomial background-flow models."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InsufficientSamples, SingularDesign
from .model import (
    FlowModel,
    LinearFlowModel,
    NormTransform,
    QuadraticFlowModel,
    SamplePoint,
    linear_design,
    quadratic_design,
    sample_arrays,
)

# singular values below RANK_RTOL * largest count as zero
RANK_RTOL = 1e-10


def solve_lstsq(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``min ||A X - B||`` by SVD, raising on rank deficiency.

    Works on a single system (``A`` is ``(n, m)``) or a stack of them
    (``(..., n, m)``).  Both flow components share the factorization since
    they are the columns of ``B``.
    """
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if np.any(s[..., -1] <= RANK_RTOL * s[..., 0]):
        raise SingularDesign(f"design matrix is rank deficient (singular values {s})")
    UtB = np.swapaxes(U, -1, -2) @ B
    return np.swapaxes(Vt, -1, -2) @ (UtB / s[..., :, None])


def fit_arrays(x: np.ndarray, y: np.ndarray, flow: np.ndarray, norm: NormTransform,
               kind: str = "quadratic") -> FlowModel:
    """Fit a model of ``kind`` to flow observed at pixel coordinates ``(x, y)``."""
    xn, yn = norm.apply(x, y)
    if kind == "quadratic":
        cls, A = QuadraticFlowModel, quadratic_design(xn, yn)
    elif kind == "linear":
        cls, A = LinearFlowModel, linear_design(xn, yn)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    if A.shape[0] < cls.n_terms:
        raise InsufficientSamples(f"{kind} fit needs at least {cls.n_terms} samples, got {A.shape[0]}")
    coef = solve_lstsq(A, flow)
    return cls(coef.T, norm)


def lsre_fit(samples: Sequence[SamplePoint], domain: tuple[int, int]) -> QuadraticFlowModel:
    """Least-squares quadratic background model over an image of size ``domain = (width, height)``."""
    x, y, flow = sample_arrays(samples)
    return fit_arrays(x, y, flow, NormTransform.for_domain(*domain), "quadratic")


def lsre_fit_linear(samples: Sequence[SamplePoint], domain: tuple[int, int]) -> LinearFlowModel:
    x, y, flow = sample_arrays(samples)
    return fit_arrays(x, y, flow, NormTransform.for_domain(*domain), "linear")


def residual(model: FlowModel, sample: SamplePoint) -> float:
    """Euclidean distance between the model's prediction and the sample's flow."""
    u, v = model.evaluate(float(sample.coord[0]), float(sample.coord[1]))
    return float(np.hypot(float(u) - sample.flow[0], float(v) - sample.flow[1]))


def residuals(model: FlowModel, x: np.ndarray, y: np.ndarray, flow: np.ndarray) -> np.ndarray:
    u, v = model.evaluate(x, y)
    return np.hypot(u - flow[:, 0], v - flow[:, 1])


def sum_squared_residuals(model: FlowModel, samples: Sequence[SamplePoint]) -> float:
    x, y, flow = sample_arrays(samples)
    return float(np.sum(residuals(model, x, y, flow) ** 2))
