"""Diagnostics of eigenfunctions: rigidity, external mixing, entropy, equilibrium.

Mixing probabilities are taken over the eigenbasis of the diagonal part
``H0`` of the Hamiltonian, which for a diagonal matrix is the standard basis.
Each eigenstate ``i`` gets its own distribution ``p[i, k] = |b_ik|^2 / sum_k |b_ik|^2``
with ``b_ik`` the ``k``-th component of the unit-normalised ``phi_i``.

The expansion ``phi_i = (1/N) sum_k phi_k^0 <phi_k^0|phi_i>`` carries a
``1/N`` prefactor; the stored ``b`` are the raw components (the completeness
reading) and ``b / N`` gives the scaled reading. Probabilities are the same
for both because they are scale-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import DivergingEM, DomainError
from .model import HamiltonianMatrix
from .spectral import SO_TOL, EigenSystem


def phase_rigidity(phi) -> float:
    """``|phi^T phi| / <phi|phi>``: 1 for real-like vectors, 0 at an EP."""
    phi = np.asarray(phi, dtype=np.complex128)
    den = np.vdot(phi, phi).real
    if not den > 0:
        raise DomainError("phase rigidity of a zero vector")
    return float(abs(phi @ phi) / den)


def em_norm(phi, so_tol: float = SO_TOL) -> float:
    """``<phi|phi>`` after scaling ``phi^T phi = 1``; equals ``1 / r``.

    Diverges as the state approaches an exceptional point, where it raises
    :class:`DivergingEM`.
    """
    phi = np.asarray(phi, dtype=np.complex128)
    den = np.vdot(phi, phi).real
    if not den > 0:
        raise DomainError("EM norm of a zero vector")
    q = abs(phi @ phi)
    if q < so_tol * den:
        raise DivergingEM("vector is self-orthogonal; EM norm diverges (EP proximity)")
    return float(den / q)


def rigidities(V) -> np.ndarray:
    """Phase rigidity of every column; works on stacks ``(..., N, N)``."""
    V = np.asarray(V)
    return np.abs(np.sum(V * V, axis=-2)) / np.sum(np.abs(V) ** 2, axis=-2)


def shannon_entropy(p) -> float:
    """``-sum p log2 p`` in bits, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def entropies(p) -> np.ndarray:
    """Row entropies of probability matrices (no validation; vectorised)."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1) + 0.0


def mixing_probabilities(V) -> np.ndarray:
    """``p[..., i, k]`` from eigenvector columns ``V[..., k, i]``."""
    A = np.abs(np.swapaxes(np.asarray(V), -1, -2)) ** 2
    return A / A.sum(axis=-1, keepdims=True)


def _unit_columns(V):
    return V / np.linalg.norm(V, axis=-2, keepdims=True)


def gram_defects(V) -> np.ndarray:
    """Largest normalised off-diagonal ``|<phi_i|phi_j>|``; works on stacks."""
    U = _unit_columns(np.asarray(V, dtype=np.complex128))
    G = np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U)
    n = G.shape[-1]
    G[..., np.arange(n), np.arange(n)] = 0.0
    return G.max(axis=(-2, -1))


def gram_defect(es) -> float:
    """Orthogonality defect of an eigen-system (or a matrix of columns)."""
    V = es.right_vectors if isinstance(es, EigenSystem) else np.asarray(es)
    if V.shape[1] < 2:
        return 0.0
    return float(gram_defects(V))


def min_gaps(w) -> np.ndarray:
    """Smallest pairwise eigenvalue separation; works on stacks ``(..., N)``."""
    w = np.asarray(w)
    D = np.abs(w[..., :, None] - w[..., None, :])
    n = w.shape[-1]
    D[..., np.arange(n), np.arange(n)] = np.inf
    return D.min(axis=(-2, -1))


def level_spacings(H) -> np.ndarray:
    """Mean level spacing estimated from the traceless part of ``H``.

    For a normal matrix with ``N`` equally spaced levels ``s`` apart,
    ``||H - (tr H / N) I||_F^2 = s^2 N (N^2 - 1) / 12``; the estimate inverts
    that relation. Unlike eigenvalue differences it stays finite when two
    eigenvalues coalesce, so it can serve as the yardstick for EP proximity.
    """
    H = np.asarray(H, dtype=np.complex128)
    n = H.shape[-1]
    c = np.trace(H, axis1=-2, axis2=-1) / n
    X = H - c[..., None, None] * np.eye(n)
    return np.linalg.norm(X, axis=(-2, -1)) * np.sqrt(12.0 / (n * (n * n - 1)))


@dataclass(frozen=True)
class MixingReport:
    b: np.ndarray
    p: np.ndarray
    entropies: np.ndarray
    max_entropy: float
    h0_levels: np.ndarray | None = None
    convention: str = "b_ik = component k of unit-normalised phi_i; the 1/N-scaled reading is b/N"


def mixing_coefficients(es: EigenSystem, h0) -> MixingReport:
    """External-mixing coefficients of ``es`` over the eigenbasis of ``h0``."""
    H0 = h0.entries if isinstance(h0, HamiltonianMatrix) else np.asarray(h0)
    off = H0 - np.diag(np.diag(H0))
    if np.any(off != 0):
        raise DomainError("h0 must be diagonal")
    if H0.shape[0] != es.n:
        raise DomainError("h0 and eigen-system dimensions differ")
    U = _unit_columns(np.asarray(es.right_vectors, dtype=np.complex128))
    b = U.T.copy()
    p = mixing_probabilities(U)
    return MixingReport(b, p, entropies(p), float(np.log2(es.n)), np.diag(H0).copy())


@dataclass(frozen=True)
class Thresholds:
    t_orth: float = 1e-3
    t_prob: float = 0.05
    t_ent: float = 0.05
    t_gap: float | None = None
    gap_factor: float = 0.1

    def gap_threshold(self, spacing: float) -> float:
        return self.t_gap if self.t_gap is not None else self.gap_factor * spacing

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EquilibriumVerdict:
    orthogonality_defect: float
    prob_deviation: float
    entropy_gap: float
    min_gap: float
    passed: bool
    thresholds: dict
    conditions: dict

    def as_dict(self):
        return asdict(self)


def equilibrium_from_measures(defect, prob_dev, ent_gap, min_gap, spacing, thresholds=None):
    """Apply the four equilibrium conditions to already-measured margins."""
    th = thresholds or Thresholds()
    t_gap = th.gap_threshold(spacing)
    cond = {
        "orthogonal": bool(defect <= th.t_orth),
        "uniform_mixing": bool(prob_dev <= th.t_prob),
        "max_entropy": bool(ent_gap <= th.t_ent),
        "far_from_ep": bool(min_gap >= t_gap and min_gap > 0),
    }
    used = {"t_orth": th.t_orth, "t_prob": th.t_prob, "t_ent": th.t_ent, "t_gap": float(t_gap)}
    return EquilibriumVerdict(
        float(defect), float(prob_dev), float(ent_gap), float(min_gap),
        all(cond.values()), used, cond,
    )


def detect_equilibrium(
    es: EigenSystem,
    report: MixingReport,
    min_gap: float | None = None,
    level_spacing: float | None = None,
    thresholds: Thresholds | None = None,
) -> EquilibriumVerdict:
    """Equilibrium verdict: orthogonal eigenfunctions, uniform mixing,
    maximal entropy and sufficient distance from any EP.

    ``min_gap`` defaults to the smallest eigenvalue separation of ``es`` and
    ``level_spacing`` to the traceless-norm estimate of ``es.matrix``.
    """
    n = es.n
    if min_gap is None:
        min_gap = float(min_gaps(es.values))
    if level_spacing is None:
        level_spacing = float(level_spacings(es.matrix)) if es.matrix is not None else 0.0
    defect = gram_defect(es)
    dev = float(np.abs(report.p - 1.0 / n).max())
    ent_gap = float((report.max_entropy - report.entropies).max())
    return equilibrium_from_measures(defect, dev, ent_gap, min_gap, level_spacing, thresholds)
