"""Classical and quantum Fisher information matrices and the scalar
objectives built from them.

The classical matrix is assembled from outcome probabilities and their
parameter derivatives; the quantum matrix from the state and its parameter
derivatives via symmetric logarithmic derivatives in the state's eigenbasis.
``tr_inv`` is the total-variance precision limit and treats a singular matrix
as genuinely divergent (+inf), not as an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, SingularContribution
from .operators import dag, validate_density_matrix, validate_hermitian

__all__ = [
    "EPS_P",
    "FisherMatrix",
    "cfim",
    "objective_f0",
    "objective_fcle",
    "qfim",
    "tr_inv",
]

# Outcomes with probability at or below this are excluded from classical
# Fisher sums; a simultaneous non-negligible derivative is flagged instead of
# silently dropped (0/0 contributions occur at symmetry points).
EPS_P = 1e-12


@dataclass(frozen=True)
class FisherMatrix:
    """Real symmetric PSD information matrix, classical or quantum."""

    matrix: np.ndarray
    kind: str = "classical"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"information matrix must be square, got {mat.shape}")
        if self.kind not in ("classical", "quantum"):
            raise InvariantViolation(f"unknown kind {self.kind!r}")
        if np.max(np.abs(mat - mat.T)) > 1e-10:
            raise InvariantViolation("information matrix is not symmetric")
        if mat.shape[0] and np.min(np.linalg.eigvalsh(mat)) < -1e-8:
            raise InvariantViolation("information matrix is not PSD within tolerance")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _as_matrix(f) -> np.ndarray:
    return f.matrix if isinstance(f, FisherMatrix) else np.asarray(f, dtype=float)


def cfim(p: np.ndarray, dp: np.ndarray) -> FisherMatrix:
    """Classical Fisher information matrix from probabilities and derivatives.

    Parameters
    ----------
    p : (n_outcomes,) array
        Outcome probabilities (clamped, summing to one).
    dp : (n_params, n_outcomes) array
        ``dp[a, y]`` is the derivative of ``p[y]`` w.r.t. parameter a.
    """
    p = np.asarray(p, dtype=float)
    dp = np.atleast_2d(np.asarray(dp, dtype=float))
    if dp.shape[1] != p.shape[0]:
        raise DimensionMismatch("dp columns must match the number of outcomes")
    if np.min(p) < -EPS_P or np.max(p) > 1 + 1e-12:
        raise InvariantViolation("probabilities outside [0, 1]")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvariantViolation(f"probabilities sum to {p.sum():.12f}, not 1")

    n_par = dp.shape[0]
    f = np.zeros((n_par, n_par))
    for y in range(p.shape[0]):
        if p[y] > EPS_P:
            f += np.outer(dp[:, y], dp[:, y]) / p[y]
        elif np.max(np.abs(dp[:, y])) > math.sqrt(EPS_P):
            raise SingularContribution(
                f"outcome {y} has probability {p[y]:.3e} but derivative "
                f"{np.max(np.abs(dp[:, y])):.3e}; its Fisher contribution diverges"
            )
    return FisherMatrix(0.5 * (f + f.T), "classical")


def qfim(rho: np.ndarray, drho) -> FisherMatrix:
    """Quantum Fisher information matrix via symmetric logarithmic derivatives.

    In the eigenbasis of ``rho``, ``(L_a)_{mn} = 2 (drho_a)_{mn} /
    (lam_m + lam_n)`` on the support (eigenvalue-pair sums above
    ``1e-10 * Tr rho``), zero elsewhere; then ``F_ab = Re Tr(rho (L_a L_b
    + L_b L_a)) / 2``.
    """
    rho = validate_density_matrix(rho, name="state")
    drho = [validate_hermitian(dr, atol=1e-8, name="state derivative") for dr in drho]
    for dr in drho:
        if abs(np.trace(dr)) > 1e-8:
            raise InvariantViolation("state derivative is not traceless")

    lam, v = np.linalg.eigh(rho)
    eps_lam = 1e-10 * np.trace(rho).real
    pair_sums = lam[:, None] + lam[None, :]
    support = pair_sums > eps_lam

    slds = []
    for dr in drho:
        dr_eig = dag(v) @ dr @ v
        l_eig = np.where(support, 2.0 * dr_eig / np.where(support, pair_sums, 1.0), 0.0)
        slds.append(l_eig)

    n_par = len(slds)
    f = np.zeros((n_par, n_par))
    for a in range(n_par):
        for b in range(a, n_par):
            anti = slds[a] @ slds[b] + slds[b] @ slds[a]
            f[a, b] = f[b, a] = 0.5 * np.sum(lam * anti.diagonal()).real
    return FisherMatrix(f, "quantum")


def _eig_floor(values: np.ndarray) -> float:
    return max(1e-10 * float(np.max(values, initial=0.0)), 1e-14)


def tr_inv(f) -> float:
    """Total-variance precision limit ``Tr F^{-1}``; +inf when F is singular."""
    mat = _as_matrix(f)
    if np.max(np.abs(mat - mat.T)) > 1e-10:
        raise InvariantViolation("tr_inv needs a symmetric matrix")
    evals = np.linalg.eigvalsh(mat)
    if np.min(evals) < _eig_floor(evals):
        return math.inf
    return float(np.sum(1.0 / evals))


def objective_f0(f) -> float:
    """Harmonic combination of the diagonal: ``(sum_a 1/F_aa)^{-1}``.

    Returns 0 when any diagonal entry is (numerically) zero.
    """
    diag = np.diag(_as_matrix(f))
    if np.min(diag) < -1e-8:
        raise InvariantViolation("negative diagonal entry in information matrix")
    if np.min(diag) <= _eig_floor(diag):
        return 0.0
    return float(1.0 / np.sum(1.0 / diag))


def objective_fcle(f) -> float:
    """Two-parameter objective ``det F / Tr F`` (0 when the trace vanishes)."""
    mat = _as_matrix(f)
    if mat.shape != (2, 2):
        raise DimensionMismatch("det/trace objective is defined for 2x2 matrices only")
    tr = mat[0, 0] + mat[1, 1]
    if tr <= _eig_floor(np.diag(mat)):
        return 0.0
    return float((mat[0, 0] * mat[1, 1] - mat[0, 1] ** 2) / tr)
