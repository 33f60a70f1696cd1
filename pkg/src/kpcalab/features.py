"""Random feature maps whose inner products estimate a kernel.

Two samplers are provided.  ``sample_rff`` draws random Fourier features
for a gaussian kernel: with omega_i ~ N(0, bandwidth^-2 I),

    Phi(x) = m^-1/2 (cos<x, omega_1>, ..., sin<x, omega_m>)  in R^{2m},

so <Phi(x), Phi(y)> = (1/m) sum_i cos<x - y, omega_i>, an unbiased
estimate of the kernel with ||Phi(x)||^2 = 1 exactly.

``sample_finite_rank`` draws importance-sampled features of a finite-rank
kernel.  In the aligned family the features are the scaled basis
functions themselves (index t drawn with probability lambda_t / sum
lambda, feature sqrt(sum lambda) psi_t).  In the mixed family a seeded
orthogonal matrix first recombines the basis, and indices are drawn
uniformly; the estimator stays unbiased for the same kernel but the
feature functions are no longer eigenfunctions of anything, which is the
generic situation.  Both families admit a deterministic mode taking each
index exactly once with weight sqrt(prob); that quadrature reproduces
the kernel exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .kernels import Kernel
from .rng import generator

__all__ = [
    "FeatureSample",
    "sample_rff",
    "sample_finite_rank",
    "feature_matrix",
    "approx_kernel",
    "cos_form_kernel",
]


@dataclass(frozen=True)
class FeatureSample:
    """A frozen draw of random features for one kernel.

    kind: "rff" or "finite_rank".
    m: number of parameter draws (for deterministic finite-rank mode,
        the full index count).
    d: feature dimension; 2m for rff, m for finite-rank.
    seed: the seed the draw came from, for provenance.
    kappa_m: exact sup over the kernel's domain of ||Phi(x)||^2 (for rff,
        1 by construction; for finite-rank, the max over atoms, computed
        at construction).
    rff fields: omegas (m, p), bandwidth.
    finite-rank fields: kernel, indices (m,) into the feature family,
        probs (T,) sampling distribution, row_scale (m,) per-row weights,
        coeffs (T, T) mapping basis rows to feature functions.
    """

    kind: str
    m: int
    d: int
    seed: int
    kappa_m: float
    omegas: np.ndarray | None = None
    bandwidth: float | None = None
    kernel: Kernel | None = None
    indices: np.ndarray | None = None
    probs: np.ndarray | None = None
    row_scale: np.ndarray | None = None
    coeffs: np.ndarray | None = None


def sample_rff(bandwidth: float, point_dim: int, m: int, seed: int,
               forced_omegas: np.ndarray | None = None) -> FeatureSample:
    """Draw m Fourier frequencies for a gaussian kernel on R^point_dim.

    ``forced_omegas`` is a test hook that substitutes an explicit (m, p)
    frequency matrix for the random draw.
    """
    if m < 1:
        raise InvalidInput(f"sample_rff: need m >= 1, got {m}")
    if not bandwidth > 0:
        raise InvalidInput(f"sample_rff: bandwidth must be positive, got {bandwidth}")
    if forced_omegas is not None:
        omegas = np.asarray(forced_omegas, dtype=float)
        if omegas.shape != (m, point_dim):
            raise InvalidInput(
                f"sample_rff: forced omegas shape {omegas.shape} != ({m}, {point_dim})"
            )
    else:
        rng = generator(seed, "rff-omegas")
        omegas = rng.standard_normal((m, point_dim)) / bandwidth
    return FeatureSample(
        kind="rff", m=m, d=2 * m, seed=seed, kappa_m=1.0,
        omegas=omegas, bandwidth=float(bandwidth),
    )


def sample_finite_rank(kernel: Kernel, m: int, seed: int,
                       deterministic: bool = False, mixed: bool = False) -> FeatureSample:
    """Draw m feature indices for a finite-rank kernel.

    deterministic: take every index exactly once with weight sqrt(prob)
        instead of sampling; m must then equal the family size and the
        approximate kernel is exact.
    mixed: recombine the basis through a seeded orthogonal matrix and
        sample indices uniformly (see module docstring).
    """
    if kernel.kind != "finite_rank":
        raise InvalidInput(f"sample_finite_rank: kernel kind is {kernel.kind!r}")
    t_count = kernel.table.count
    lam = kernel.lambdas
    if mixed:
        rng = generator(seed, "feature-mix")
        raw = rng.standard_normal((t_count, t_count))
        q, r = np.linalg.qr(raw)
        q = q * np.sign(np.diag(r))
        coeffs = np.sqrt(t_count) * q * np.sqrt(lam)[None, :]
        probs = np.full(t_count, 1.0 / t_count)
    else:
        coeffs = np.sqrt(np.sum(lam)) * np.eye(t_count)
        probs = lam / np.sum(lam)
    if deterministic:
        if m != t_count:
            raise InvalidInput(
                f"sample_finite_rank: deterministic mode needs m == {t_count}, got {m}"
            )
        indices = np.arange(t_count)
        row_scale = np.sqrt(probs)
    else:
        if m < 1:
            raise InvalidInput(f"sample_finite_rank: need m >= 1, got {m}")
        rng = generator(seed, "feature-indices")
        indices = rng.choice(t_count, size=m, p=probs)
        row_scale = np.full(m, 1.0 / np.sqrt(m))
    sample = FeatureSample(
        kind="finite_rank", m=m, d=int(indices.shape[0]), seed=seed, kappa_m=0.0,
        kernel=kernel, indices=indices, probs=probs, row_scale=row_scale, coeffs=coeffs,
    )
    atoms = np.arange(kernel.table.measure.size)
    kappa_m = float(np.max(np.sum(feature_matrix(sample, atoms) ** 2, axis=1)))
    object.__setattr__(sample, "kappa_m", kappa_m)
    return sample


def feature_matrix(sample: FeatureSample, points: np.ndarray) -> np.ndarray:
    """Rows Phi(x_i) for each point; shape (n, d)."""
    if sample.kind == "rff":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        proj = pts @ sample.omegas.T
        scale = 1.0 / np.sqrt(sample.m)
        return scale * np.concatenate([np.cos(proj), np.sin(proj)], axis=1)
    pts = np.asarray(points)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    if not np.issubdtype(pts.dtype, np.integer):
        raise InvalidInput("feature_matrix: finite-rank features need integer atom positions")
    feat_tbl = sample.coeffs @ sample.kernel.table.values
    return (sample.row_scale[:, None] * feat_tbl[sample.indices][:, pts]).T


def approx_kernel(sample: FeatureSample, x, y) -> float:
    """<Phi(x), Phi(y)>, the feature-space estimate of k(x, y)."""
    fx = feature_matrix(sample, np.asarray([x]).reshape(1, -1) if sample.kind == "rff"
                        else np.asarray([x]))
    fy = feature_matrix(sample, np.asarray([y]).reshape(1, -1) if sample.kind == "rff"
                        else np.asarray([y]))
    return float(fx[0] @ fy[0])


def cos_form_kernel(sample: FeatureSample, x, y) -> float:
    """(1/m) sum_i cos<x - y, omega_i>; rff only."""
    if sample.kind != "rff":
        raise InvalidInput("cos_form_kernel: only defined for rff samples")
    diff = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(y, dtype=float))
    return float(np.mean(np.cos(sample.omegas @ diff)))
