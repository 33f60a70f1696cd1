"""Kernels, Gram matrices, and the synthetic finite-rank construction.

Two kernel families are supported.  Gaussian kernels live on vectors in
R^p.  Finite-rank kernels live on the index support of a discrete
measure: k(i, j) = sum_t lambda_t psi_t(i) psi_t(j) for a basis of
functions orthonormal in the weighted inner product and orthogonal to
constants.  That construction makes every population quantity exactly
computable downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError, InvalidInput, NumericFailure
from .measures import DiscreteMeasure
from .rng import generator

__all__ = [
    "FunctionTable",
    "Kernel",
    "gaussian_kernel",
    "finite_rank_kernel",
    "make_finite_rank_kernel",
    "kernel_eval",
    "gram",
    "cross_gram",
    "center_gram",
]

_ORTHO_ATOL = 1e-10
_GS_BREAKDOWN = 1e-10
_GS_MAX_RETRIES = 100
_WEIGHT_SUM_ATOL = 1e-12


@dataclass(frozen=True)
class FunctionTable:
    """Values of T basis functions on the support of a discrete measure.

    values: shape (T, N); row t holds psi_t evaluated at atoms 0..N-1.
    Rows must be orthonormal in the measure-weighted inner product and
    orthogonal to the constant function, both within 1e-10.
    """

    measure: DiscreteMeasure
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.measure.size:
            raise InvalidInput(
                f"FunctionTable: values shape {values.shape} does not match "
                f"{self.measure.size} atoms"
            )
        w = self.measure.weights
        gram_w = (values * w) @ values.T
        if np.max(np.abs(gram_w - np.eye(values.shape[0]))) > _ORTHO_ATOL:
            raise InvalidInput("FunctionTable: rows are not weighted-orthonormal within 1e-10")
        if np.max(np.abs(values @ w)) > _ORTHO_ATOL:
            raise InvalidInput("FunctionTable: rows are not orthogonal to constants within 1e-10")
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class Kernel:
    """A positive-definite kernel of one of two kinds.

    kind "gaussian": needs bandwidth; points are vectors (or scalars).
    kind "finite_rank": needs table and strictly descending positive
    lambdas; points are integer atom positions.
    kappa is the exact supremum of k(x, x) over the kernel's domain.
    """

    kind: str
    kappa: float
    bandwidth: float | None = None
    table: FunctionTable | None = None
    lambdas: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind == "gaussian":
            if self.bandwidth is None or not self.bandwidth > 0:
                raise InvalidInput(f"Kernel: gaussian needs bandwidth > 0, got {self.bandwidth}")
        elif self.kind == "finite_rank":
            if self.table is None or self.lambdas is None:
                raise InvalidInput("Kernel: finite_rank needs a table and lambdas")
            lam = np.asarray(self.lambdas, dtype=float)
            if lam.ndim != 1 or lam.shape[0] != self.table.count:
                raise InvalidInput("Kernel: lambdas must match the table row count")
            if np.any(lam <= 0.0) or np.any(np.diff(lam) >= 0.0):
                raise InvalidInput("Kernel: lambdas must be positive and strictly descending")
            object.__setattr__(self, "lambdas", lam)
        else:
            raise InvalidInput(f"Kernel: unknown kind {self.kind!r}")


def gaussian_kernel(bandwidth: float) -> Kernel:
    """Gaussian kernel exp(-||x - y||^2 / (2 bandwidth^2)); k(x, x) = 1."""
    return Kernel(kind="gaussian", kappa=1.0, bandwidth=float(bandwidth))


def finite_rank_kernel(table: FunctionTable, lambdas: np.ndarray) -> Kernel:
    """Finite-rank kernel from an explicit basis table and eigenvalues."""
    lam = np.asarray(lambdas, dtype=float)
    diag = np.einsum("t,tj,tj->j", lam, table.values, table.values)
    return Kernel(kind="finite_rank", kappa=float(np.max(diag)), table=table, lambdas=lam)


def make_finite_rank_kernel(measure: DiscreteMeasure, lambdas: np.ndarray, seed: int) -> Kernel:
    """Seeded synthetic kernel whose population spectrum is exactly ``lambdas``.

    Basis rows come from Gram-Schmidt of standard normal draws against the
    constant function and all previous rows, in the measure-weighted inner
    product.  A draw whose residual norm falls below 1e-10 is redrawn, up
    to 100 times per row.
    """
    lam = np.asarray(lambdas, dtype=float)
    n_atoms = measure.size
    if lam.shape[0] > n_atoms - 1:
        raise CapacityError(
            f"make_finite_rank_kernel: {lam.shape[0]} components need at least "
            f"{lam.shape[0] + 1} atoms, measure has {n_atoms}"
        )
    w = measure.weights
    rng = generator(seed, "finite-rank-basis")
    rows = np.empty((lam.shape[0], n_atoms))
    # The constant function has weighted norm one already.
    ones = np.ones(n_atoms)
    for t in range(lam.shape[0]):
        for attempt in range(_GS_MAX_RETRIES + 1):
            v = rng.standard_normal(n_atoms)
            # Two Gram-Schmidt passes; the second mops up cancellation.
            for _ in range(2):
                v = v - (w @ v) * ones
                for s in range(t):
                    v = v - (w @ (v * rows[s])) * rows[s]
            norm = float(np.sqrt(w @ (v * v)))
            if norm >= _GS_BREAKDOWN:
                rows[t] = v / norm
                break
        else:
            raise NumericFailure(
                f"make_finite_rank_kernel: Gram-Schmidt broke down on row {t} "
                f"after {_GS_MAX_RETRIES} retries"
            )
    table = FunctionTable(measure=measure, values=rows)
    return finite_rank_kernel(table, lam)


def _as_index_points(kernel: Kernel, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    if pts.ndim != 1 or not np.issubdtype(pts.dtype, np.integer):
        raise DomainError(
            "finite-rank kernel points must be integer atom positions, got "
            f"dtype {pts.dtype} with shape {pts.shape}"
        )
    n_atoms = kernel.table.measure.size
    if pts.size and (pts.min() < 0 or pts.max() >= n_atoms):
        raise DomainError(
            f"finite-rank kernel point out of support: range [{pts.min()}, {pts.max()}] "
            f"vs {n_atoms} atoms"
        )
    return pts


def _as_vector_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        # A single flat vector is ambiguous; treat it as n scalar points
        # only when explicitly 2-d input is not given.  Callers pass (n, p).
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise DomainError(f"gaussian kernel points must be (n, p), got shape {pts.shape}")
    return pts


def kernel_eval(kernel: Kernel, x, y) -> float:
    """k(x, y) for a single pair of points."""
    if kernel.kind == "gaussian":
        xv = np.atleast_1d(np.asarray(x, dtype=float))
        yv = np.atleast_1d(np.asarray(y, dtype=float))
        d2 = float(np.sum((xv - yv) ** 2))
        return float(np.exp(-d2 / (2.0 * kernel.bandwidth**2)))
    xi = int(_as_index_points(kernel, np.asarray(x))[0])
    yi = int(_as_index_points(kernel, np.asarray(y))[0])
    lam = kernel.lambdas
    vals = kernel.table.values
    return float(np.sum(lam * vals[:, xi] * vals[:, yi]))


def gram(kernel: Kernel, points: np.ndarray) -> np.ndarray:
    """Symmetric PSD Gram matrix k(x_i, x_j) over a point list."""
    if kernel.kind == "gaussian":
        pts = _as_vector_points(points)
        if pts.shape[0] < 1:
            raise InvalidInput("gram: need at least one point")
        sq = np.sum(pts**2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
        np.maximum(d2, 0.0, out=d2)
        k = np.exp(-d2 / (2.0 * kernel.bandwidth**2))
    else:
        pts = _as_index_points(kernel, points)
        if pts.shape[0] < 1:
            raise InvalidInput("gram: need at least one point")
        b = np.sqrt(kernel.lambdas)[:, None] * kernel.table.values[:, pts]
        k = b.T @ b
    return (k + k.T) / 2.0


def cross_gram(kernel: Kernel, points_a: np.ndarray, points_b: np.ndarray) -> np.ndarray:
    """Rectangular kernel matrix k(a_i, b_j); shape (len(a), len(b))."""
    if kernel.kind == "gaussian":
        pa = _as_vector_points(points_a)
        pb = _as_vector_points(points_b)
        d2 = (
            np.sum(pa**2, axis=1)[:, None]
            + np.sum(pb**2, axis=1)[None, :]
            - 2.0 * (pa @ pb.T)
        )
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-d2 / (2.0 * kernel.bandwidth**2))
    pa = _as_index_points(kernel, points_a)
    pb = _as_index_points(kernel, points_b)
    vals = kernel.table.values
    return (vals[:, pa] * kernel.lambdas[:, None]).T @ vals[:, pb]


def center_gram(k: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Two-sided centering (I - 1 w') K (I - w 1') for probability weights."""
    k = np.asarray(k, dtype=float)
    w = np.asarray(weights, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or w.shape != (k.shape[0],):
        raise InvalidInput(f"center_gram: shapes {k.shape} and {w.shape} are incompatible")
    if k.size and np.max(np.abs(k - k.T)) > 1e-12:
        raise InvalidInput("center_gram: input matrix is not symmetric within 1e-12")
    if abs(w.sum() - 1.0) > _WEIGHT_SUM_ATOL:
        raise InvalidInput(f"center_gram: weights sum to {w.sum()!r}, not 1 within 1e-12")
    kw = k @ w
    www = float(w @ kw)
    out = k - kw[:, None] - kw[None, :] + www
    return (out + out.T) / 2.0
