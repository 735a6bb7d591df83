"""Flow fields and polynomial background-flow models.

A background model maps pixel coordinates to the flow induced by camera
motion.  The quadratic model uses the monomial basis
``[x**2, y**2, x*y, x, y, 1]``; the linear model (kept for ablations) uses
``[x, y, 1]``.  Both are fit and evaluated in coordinates normalized to
[-1, 1] over the image domain, and the transform travels with the model so
callers only ever deal in pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import DimensionMismatch, NonFiniteValues, NonPositiveDims

QUADRATIC_TERMS = 6
LINEAR_TERMS = 3


class PixelCoord(NamedTuple):
    x: float
    y: float


class SamplePoint(NamedTuple):
    """A pixel location paired with the observed flow there."""

    coord: PixelCoord
    flow: tuple[float, float]


def sample_arrays(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unpack samples into ``x``, ``y`` and an ``(n, 2)`` flow array."""
    if not len(samples):
        return np.empty(0), np.empty(0), np.empty((0, 2))
    coords = np.array([s.coord for s in samples], dtype=np.float64)
    flow = np.array([s.flow for s in samples], dtype=np.float64)
    return coords[:, 0], coords[:, 1], flow


@dataclass(frozen=True, eq=False)
class FlowField:
    """Dense displacement field stored as separate ``u`` and ``v`` planes.

    Planes are float64 arrays of shape ``(height, width)``.  Construction
    validates shape and rejects NaN/Inf.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise DimensionMismatch(f"u/v planes must be equal 2-D shapes, got {u.shape} and {v.shape}")
        if u.shape[0] < 1 or u.shape[1] < 1:
            raise NonPositiveDims(f"empty flow field {u.shape}")
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise NonFiniteValues("flow field contains NaN or Inf")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    @classmethod
    def zeros(cls, width: int, height: int) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    def flow_at(self, x: int, y: int) -> tuple[float, float]:
        return float(self.u[y, x]), float(self.v[y, x])

    def __add__(self, other: "FlowField") -> "FlowField":
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot add fields of shape {self.shape} and {other.shape}")
        return FlowField(self.u + other.u, self.v + other.v)


@dataclass(frozen=True, eq=False)
class ForegroundMask:
    """Boolean image, ``True`` marks foreground; shape ``(height, width)``."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise NonPositiveDims(f"mask must be a non-empty 2-D array, got shape {bits.shape}")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @classmethod
    def empty(cls, width: int, height: int) -> "ForegroundMask":
        return cls(np.zeros((height, width), dtype=bool))

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ForegroundMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None


@dataclass(frozen=True)
class NormTransform:
    """Per-axis affine map ``n = scale * p + offset`` from pixels to [-1, 1]."""

    sx: float = 1.0
    ox: float = 0.0
    sy: float = 1.0
    oy: float = 0.0

    @classmethod
    def for_domain(cls, width: int, height: int) -> "NormTransform":
        # pixel centres 0 .. W-1 map onto -1 .. 1; a 1-pixel axis maps to 0
        sx = 2.0 / max(width - 1, 1)
        sy = 2.0 / max(height - 1, 1)
        return cls(sx, -(width - 1) * sx / 2.0, sy, -(height - 1) * sy / 2.0)

    def apply(self, x, y):
        return np.multiply(x, self.sx) + self.ox, np.multiply(y, self.sy) + self.oy


IDENTITY = NormTransform()


def monomial_vector(p: PixelCoord) -> np.ndarray:
    """Return ``[x**2, y**2, x*y, x, y, 1]`` for ``p`` (no normalization)."""
    x, y = float(p[0]), float(p[1])
    return np.array([x * x, y * y, x * y, x, y, 1.0])


def quadratic_design(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Stack monomial rows for coordinate arrays; shape ``(n, 6)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.stack([x * x, y * y, x * y, x, y, np.ones_like(x)], axis=-1)


def linear_design(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.stack([x, y, np.ones_like(x)], axis=-1)


@dataclass(frozen=True, eq=False)
class QuadraticFlowModel:
    """Background flow ``f(p) = H @ monomials(norm(p))`` with ``H`` of shape (2, 6).

    Row 0 of ``H`` predicts ``u``, row 1 predicts ``v``.
    """

    H: np.ndarray
    norm: NormTransform = IDENTITY

    kind = "quadratic"
    n_terms = QUADRATIC_TERMS

    def __post_init__(self) -> None:
        H = np.array(self.H, dtype=np.float64).reshape(2, self.n_terms)
        if not np.isfinite(H).all():
            raise NonFiniteValues("model coefficients must be finite")
        H.flags.writeable = False
        object.__setattr__(self, "H", H)

    @classmethod
    def zero(cls, width: int = 1, height: int = 1) -> "QuadraticFlowModel":
        return cls(np.zeros((2, cls.n_terms)), NormTransform.for_domain(width, height))

    def design(self, x, y) -> np.ndarray:
        xn, yn = self.norm.apply(x, y)
        return quadratic_design(xn, yn)

    def evaluate(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate at pixel coordinates (scalars or broadcastable arrays)."""
        flow = self.design(x, y) @ self.H.T
        return flow[..., 0], flow[..., 1]

    def evaluate_grid(self, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(u, v)`` planes of shape ``(height, width)``.

        Separable in x and y apart from the cross term, so this never builds
        the full per-pixel design matrix.
        """
        xn, yn = self.norm.apply(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
        planes = []
        for a, b, c, d, e, f in self.H:
            col = (b * yn + e) * yn + f
            row = (a * xn + d) * xn
            plane = np.add.outer(col, row)
            if c != 0.0:
                plane += np.multiply.outer(c * yn, xn)
            planes.append(plane)
        return planes[0], planes[1]


@dataclass(frozen=True, eq=False)
class LinearFlowModel:
    """Affine background flow over the basis ``[x, y, 1]``; ``H`` is (2, 3)."""

    H: np.ndarray
    norm: NormTransform = IDENTITY

    kind = "linear"
    n_terms = LINEAR_TERMS

    def __post_init__(self) -> None:
        H = np.array(self.H, dtype=np.float64).reshape(2, self.n_terms)
        if not np.isfinite(H).all():
            raise NonFiniteValues("model coefficients must be finite")
        H.flags.writeable = False
        object.__setattr__(self, "H", H)

    @property
    def H_lin(self) -> np.ndarray:
        return self.H

    def design(self, x, y) -> np.ndarray:
        xn, yn = self.norm.apply(x, y)
        return linear_design(xn, yn)

    def evaluate(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        flow = self.design(x, y) @ self.H.T
        return flow[..., 0], flow[..., 1]

    def evaluate_grid(self, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        xn, yn = self.norm.apply(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
        return tuple(np.add.outer(b * yn + c, a * xn) for a, b, c in self.H)


FlowModel = Union[QuadraticFlowModel, LinearFlowModel]


def evaluate_model(m: QuadraticFlowModel, p: PixelCoord) -> tuple[float, float]:
    u, v = m.evaluate(float(p[0]), float(p[1]))
    return float(u), float(v)


def evaluate_linear(m: LinearFlowModel, p: PixelCoord) -> tuple[float, float]:
    u, v = m.evaluate(float(p[0]), float(p[1]))
    return float(u), float(v)
