"""Exact population quantities for kernels on finitely supported measures.

With a measure of N atoms, every population operator of interest is an
N x N symmetric matrix in weight-symmetrized coordinates u = W^1/2 f:

  * covariance-side operator:  S_J = W^1/2 (I - 1 w') K (I - w 1') W^1/2,
    sharing its nonzero spectrum with the population covariance;
  * feature-side operator:     S_A = W^1/2 Fbar Fbar' W^1/2 for a feature
    matrix F on the atoms, Fbar = (I - 1 w') F, sharing its nonzero
    spectrum with the population feature covariance.

Projectors onto leading eigenspaces, reconstruction errors, and operator
distances are then exact finite-dimensional computations, which is what
makes convergence-rate measurements against ground truth possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, RankError
from .features import FeatureSample, feature_matrix
from .kernels import Kernel, center_gram, gram
from .kpca import KpcaModel, RfKpcaModel, _eigenfunction_matrix
from .linalg import Spectrum, matrix_norm, spectral_projector, sym_eig
from .measures import DiscreteMeasure, discrete_measure, draw_samples, uniform_measure

__all__ = [
    "PopOperator",
    "ProjectionLike",
    "op_jj",
    "op_aa",
    "tail_energy",
    "proj_pop",
    "proj_hat",
    "proj_hat_rf",
    "recon_error",
    "proj_distance",
    "oracle_snapshot",
    "DiscreteMeasure",
    "discrete_measure",
    "uniform_measure",
    "draw_samples",
]

_PROJECTOR_ATOL = 1e-8


@dataclass(frozen=True)
class PopOperator:
    """A population operator in symmetrized coordinates, with its spectrum."""

    kind: str
    matrix: np.ndarray
    spectrum: Spectrum

    @property
    def hs_norm(self) -> float:
        return float(np.sqrt(np.sum(self.spectrum.eigenvalues**2)))


@dataclass(frozen=True)
class ProjectionLike:
    """A symmetric matrix standing in for a spectral projector.

    Orthogonal ones (from population spectra) satisfy P = P' = P^2 and
    trace P = rank, checked at construction.  Empirical plug-ins are
    symmetric but only approximately idempotent, so they skip the check.
    """

    matrix: np.ndarray
    orthogonal: bool

    def __post_init__(self) -> None:
        p = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", p)
        if self.orthogonal:
            if np.max(np.abs(p - p.T)) > _PROJECTOR_ATOL:
                raise InvalidInput("ProjectionLike: orthogonal projector is not symmetric")
            if np.max(np.abs(p @ p - p)) > _PROJECTOR_ATOL:
                raise InvalidInput("ProjectionLike: orthogonal projector is not idempotent")
            if abs(np.trace(p) - round(np.trace(p))) > _PROJECTOR_ATOL:
                raise InvalidInput("ProjectionLike: orthogonal projector trace is not integral")


def op_jj(kernel: Kernel, measure: DiscreteMeasure) -> PopOperator:
    """Covariance-side population operator S_J for a kernel and measure."""
    k = gram(kernel, measure.atoms)
    centered = center_gram(k, measure.weights)
    root_w = np.sqrt(measure.weights)
    s = root_w[:, None] * centered * root_w[None, :]
    s = (s + s.T) / 2.0
    return PopOperator(kind="jj", matrix=s, spectrum=sym_eig(s))


def op_aa(features: FeatureSample, measure: DiscreteMeasure) -> PopOperator:
    """Feature-side population operator S_A for a feature draw and measure."""
    f = feature_matrix(features, measure.atoms)
    fbar = f - measure.weights @ f
    b = np.sqrt(measure.weights)[:, None] * fbar
    s = b @ b.T
    s = (s + s.T) / 2.0
    return PopOperator(kind="aa", matrix=s, spectrum=sym_eig(s))


def tail_energy(spectrum: Spectrum, ell: int) -> float:
    """Sum of squared eigenvalues beyond the leading ell (the exact bias)."""
    if ell < 0:
        raise InvalidInput(f"tail_energy: ell must be >= 0, got {ell}")
    vals = np.maximum(spectrum.eigenvalues, 0.0)
    return float(np.sum(vals[ell:] ** 2))


def proj_pop(op: PopOperator, ell: int) -> ProjectionLike:
    """Orthogonal projector onto the leading ell eigenvectors of S."""
    return ProjectionLike(matrix=spectral_projector(op.spectrum, ell), orthogonal=True)


def proj_hat(model: KpcaModel, kernel: Kernel, measure: DiscreteMeasure,
             ell: int) -> ProjectionLike:
    """Plug-in projector of exact KPCA, embedded against the measure.

    Each empirical eigenfunction is evaluated on the atoms, centered
    under the measure, weight-symmetrized, and divided by its empirical
    eigenvalue: P = sum_i u_i u_i' / lambda_i.  Components are already
    restricted to the retained rank, so the eigenvalue divisions are safe.
    """
    if ell < 1 or ell > model.rank:
        raise RankError(f"proj_hat: ell={ell} outside retained rank {model.rank}")
    v = _eigenfunction_matrix(model, kernel, measure.atoms, ell)
    vbar = v - measure.weights @ v
    u = np.sqrt(measure.weights)[:, None] * vbar
    p = (u / model.eigvals[:ell]) @ u.T
    return ProjectionLike(matrix=(p + p.T) / 2.0, orthogonal=False)


def proj_hat_rf(model: RfKpcaModel, measure: DiscreteMeasure, ell: int) -> ProjectionLike:
    """Plug-in projector of random-feature KPCA against the measure."""
    if ell < 1 or ell > model.rank:
        raise RankError(f"proj_hat_rf: ell={ell} outside retained rank {model.rank}")
    f = feature_matrix(model.features, measure.atoms)
    fbar = f - measure.weights @ f
    b = (np.sqrt(measure.weights)[:, None] * fbar) @ model.components[:, :ell]
    p = (b / model.eigvals[:ell]) @ b.T
    return ProjectionLike(matrix=(p + p.T) / 2.0, orthogonal=False)


def recon_error(pop: PopOperator, proj: ProjectionLike) -> float:
    """Squared Hilbert-Schmidt reconstruction error ||(I - Q) S||_HS^2."""
    s = pop.matrix
    resid = s - proj.matrix @ s
    return float(np.sum(resid**2))


def proj_distance(p: ProjectionLike, q: ProjectionLike) -> float:
    """Operator-norm distance between two projector-like matrices."""
    return matrix_norm(p.matrix - q.matrix, "operator")


def oracle_snapshot(kernel: Kernel, measure: DiscreteMeasure, seed: int | None = None) -> dict:
    """JSON-ready description of an oracle: measure, kernel, exact spectrum."""
    pop = op_jj(kernel, measure)
    snap: dict = {
        "atoms": np.asarray(measure.atoms).tolist(),
        "weights": measure.weights.tolist(),
        "population_spectrum": pop.spectrum.eigenvalues.tolist(),
    }
    if kernel.kind == "gaussian":
        snap["kernel"] = {"kind": "gaussian", "bandwidth": kernel.bandwidth,
                          "kappa": kernel.kappa}
    else:
        snap["kernel"] = {
            "kind": "finite_rank",
            "lambdas": kernel.lambdas.tolist(),
            "kappa": kernel.kappa,
            "basis_values": kernel.table.values.tolist(),
        }
    if seed is not None:
        snap["seed"] = int(seed)
    return snap
