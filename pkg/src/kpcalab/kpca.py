"""Exact and random-feature kernel PCA on empirical samples.

The exact route eigendecomposes the doubly centered Gram matrix H K H
and scales by 1/n, so the i-th empirical eigenvalue is eig_i(H K H) / n.
The dual vector gamma_i is the centered unit eigenvector rescaled so
that gamma_i' K gamma_i = n lambda_i, which makes the i-th empirical
eigenfunction

    f_i(z) = (n lambda_i)^-1/2 sum_j gamma_ij k(z, x_j)

exactly unit norm in the RKHS.  The random-feature route substitutes a
finite feature map and eigendecomposes the biased (V-statistic) sample
covariance of the features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateModel, InvalidInput, RankError
from .features import FeatureSample, feature_matrix
from .kernels import Kernel, center_gram, cross_gram, gram
from .linalg import Spectrum, fix_signs, sym_eig
from .measures import DiscreteMeasure

__all__ = [
    "KpcaModel",
    "RfKpcaModel",
    "fit_exact",
    "eigenfunction_eval",
    "embed_exact",
    "fit_rf",
    "embed_rf",
    "pop_rf_cov",
]

_RANK_RTOL = 1e-10
# Top eigenvalue below kappa times this means the centered Gram carries
# no signal at all (e.g. a constant kernel).
_DEGENERATE_RTOL = 1e-12


@dataclass
class KpcaModel:
    """Frozen result of an exact KPCA fit.

    train_points: the n training points (atom positions or vectors).
    kernel: the training kernel.
    eigvals: retained empirical eigenvalues, descending, length r <= n-1.
    dual_coeffs: shape (r, n); row i is gamma_i (centered, scaled so
        gamma_i' K gamma_i = n eigvals[i]).
    The Gram matrix is materialized lazily; large fits that never touch
    it stay cheap.
    """

    train_points: np.ndarray
    kernel: Kernel
    eigvals: np.ndarray
    dual_coeffs: np.ndarray
    _gram: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return int(self.train_points.shape[0])

    @property
    def rank(self) -> int:
        return int(self.eigvals.shape[0])

    @property
    def gram(self) -> np.ndarray:
        if self._gram is None:
            self._gram = gram(self.kernel, self.train_points)
        return self._gram


@dataclass
class RfKpcaModel:
    """Frozen result of a random-feature KPCA fit.

    features: the feature draw the model was fit with.
    train_points: the n training points.
    mean: shape (d,), sample mean of the feature vectors.
    eigvals: retained eigenvalues of the sample feature covariance.
    components: shape (d, r), orthonormal eigenvector columns.
    """

    features: FeatureSample
    train_points: np.ndarray
    mean: np.ndarray
    eigvals: np.ndarray
    components: np.ndarray

    @property
    def n(self) -> int:
        return int(self.train_points.shape[0])

    @property
    def rank(self) -> int:
        return int(self.eigvals.shape[0])


def _retained(vals: np.ndarray, scale_floor: float) -> int:
    if vals.size == 0 or vals[0] <= scale_floor:
        return 0
    return int(np.sum(vals > _RANK_RTOL * vals[0]))


def fit_exact(kernel: Kernel, samples: np.ndarray) -> KpcaModel:
    """Fit exact KPCA to a sample list.

    Finite-rank kernels take a factor route: with B the (T, n) matrix of
    sqrt(lambda)-scaled basis values at the samples and M its row-centered
    version, H K H = M'M, so the T x T matrix M M' carries the same
    nonzero spectrum and the n-dim eigenvectors are recovered as
    M' w / sqrt(sigma).  The result is identical to eigendecomposing
    H K H directly, within solver tolerance, at a fraction of the cost.
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n < 2:
        raise InvalidInput(f"fit_exact: need at least two samples, got {n}")
    gram_cache = None
    if kernel.kind == "finite_rank":
        b = np.sqrt(kernel.lambdas)[:, None] * kernel.table.values[:, samples]
        m_mat = b - b.mean(axis=1, keepdims=True)
        small = sym_eig(m_mat @ m_mat.T)
        sigma = small.eigenvalues
        lam_hat = sigma / n
        r = _retained(lam_hat, _DEGENERATE_RTOL * kernel.kappa)
        if r == 0:
            raise DegenerateModel("fit_exact: no component above the noise floor")
        r = min(r, n - 1)
        alphas = (m_mat.T @ small.eigenvectors[:, :r]) / np.sqrt(sigma[:r])[None, :]

        def k_quad(vec: np.ndarray) -> float:
            return float(np.sum((b @ vec) ** 2))

    else:
        gram_cache = gram(kernel, samples)
        centered = center_gram(gram_cache, np.full(n, 1.0 / n))
        spec = sym_eig(centered)
        lam_hat = spec.eigenvalues / n
        r = _retained(lam_hat, _DEGENERATE_RTOL * kernel.kappa)
        if r == 0:
            raise DegenerateModel("fit_exact: no component above the noise floor")
        r = min(r, n - 1)
        alphas = spec.eigenvectors[:, :r]
        k_full = gram_cache

        def k_quad(vec: np.ndarray) -> float:
            return float(vec @ (k_full @ vec))

    # Exact centering and unit scale before the K-quadratic rescale; both
    # are no-ops up to rounding but pin the documented normalization.
    alphas = alphas - alphas.mean(axis=0, keepdims=True)
    alphas = alphas / np.linalg.norm(alphas, axis=0, keepdims=True)
    alphas = fix_signs(alphas)
    lam_kept = lam_hat[:r].copy()
    gammas = np.empty((r, n))
    for i in range(r):
        quad = k_quad(alphas[:, i])
        gammas[i] = alphas[:, i] * np.sqrt(n * lam_kept[i] / quad)
    return KpcaModel(
        train_points=samples, kernel=kernel, eigvals=lam_kept,
        dual_coeffs=gammas, _gram=gram_cache,
    )


def _eigenfunction_matrix(model: KpcaModel, kernel: Kernel, points: np.ndarray,
                          count: int) -> np.ndarray:
    """Columns f_i(points) for i < count, via one rectangular kernel block."""
    kc = cross_gram(kernel, points, model.train_points)
    scale = 1.0 / np.sqrt(model.n * model.eigvals[:count])
    return (kc @ model.dual_coeffs[:count].T) * scale[None, :]


def eigenfunction_eval(model: KpcaModel, kernel: Kernel, i: int,
                       points: np.ndarray) -> np.ndarray:
    """Evaluate the i-th empirical eigenfunction at a list of points.

    Points follow the kernel's convention: a 1-d integer array of atom
    positions for finite-rank kernels, an (n, p) array for gaussian ones.
    Returns a vector of length n.
    """
    if not 0 <= i < model.rank:
        raise RankError(f"eigenfunction_eval: index {i} outside retained rank {model.rank}")
    pts = np.atleast_1d(np.asarray(points))
    return _eigenfunction_matrix(model, kernel, pts, i + 1)[:, i]


def embed_exact(model: KpcaModel, kernel: Kernel, points: np.ndarray,
                ell: int) -> np.ndarray:
    """Score matrix (n_points, ell) of the first ell eigenfunctions."""
    if ell < 0 or ell > model.rank:
        raise RankError(f"embed_exact: ell={ell} outside [0, {model.rank}]")
    points = np.atleast_1d(np.asarray(points))
    if ell == 0:
        return np.empty((points.shape[0], 0))
    return _eigenfunction_matrix(model, kernel, points, ell)


def fit_rf(features: FeatureSample, samples: np.ndarray) -> RfKpcaModel:
    """Fit KPCA in a random feature space.

    Eigendecomposes the V-statistic sample covariance
    (1/n) sum Phi(x_j) Phi(x_j)' - mean mean'.
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n < 2:
        raise InvalidInput(f"fit_rf: need at least two samples, got {n}")
    f = feature_matrix(features, samples)
    mean = f.mean(axis=0)
    cov = f.T @ f / n - np.outer(mean, mean)
    cov = (cov + cov.T) / 2.0
    spec = sym_eig(cov)
    lam = spec.eigenvalues
    r = _retained(lam, _DEGENERATE_RTOL * features.kappa_m)
    if r == 0:
        raise DegenerateModel("fit_rf: no component above the noise floor")
    r = min(r, n - 1)
    return RfKpcaModel(
        features=features, train_points=samples, mean=mean,
        eigvals=lam[:r].copy(), components=spec.eigenvectors[:, :r].copy(),
    )


def embed_rf(model: RfKpcaModel, points: np.ndarray, ell: int,
             centered: bool = False) -> np.ndarray:
    """Scores <Phi(x), w_i> for i < ell; shape (n_points, ell).

    The default leaves the feature vector uncentered.  With
    ``centered=True`` the training mean is subtracted first, making the
    per-component training variance equal the model eigenvalue.
    """
    if ell < 0 or ell > model.rank:
        raise RankError(f"embed_rf: ell={ell} outside [0, {model.rank}]")
    points = np.atleast_1d(np.asarray(points))
    if ell == 0:
        return np.empty((points.shape[0], 0))
    f = feature_matrix(model.features, points)
    if centered:
        f = f - model.mean[None, :]
    return f @ model.components[:, :ell]


def pop_rf_cov(features: FeatureSample, measure: DiscreteMeasure) -> np.ndarray:
    """Population feature covariance under a finitely supported measure."""
    f = feature_matrix(features, measure.atoms)
    w = measure.weights
    mean = w @ f
    cov = (f * w[:, None]).T @ f - np.outer(mean, mean)
    return (cov + cov.T) / 2.0
