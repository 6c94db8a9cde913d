"""Eigen-systems of complex symmetric Hamiltonians.

For ``H = H^T`` the left eigenvectors are the unconjugated transposes of the
right ones, so the natural pairing is the bilinear form ``x^T y``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import NumericalFailure
from .model import Conventions, HamiltonianMatrix

MAX_N = 64
RESIDUAL_TOL = 1e-10
SO_TOL = 1e-10

NORMALIZATIONS = ("biorthogonal", "unit", "unnormalized")


@dataclass(frozen=True)
class EigenvalueRecord:
    value: complex
    energy: float
    width: float
    lifetime: float

    @classmethod
    def from_value(cls, value, conventions: Conventions | None = None):
        conventions = conventions or Conventions()
        value = complex(value)
        width = conventions.gamma_factor * value.imag + 0.0
        lifetime = float("inf") if width == 0 else 1.0 / abs(width)
        return cls(value, value.real, width, lifetime)


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: tuple
    right_vectors: np.ndarray
    normalization: str = "unit"
    self_orthogonal_flags: tuple = ()
    residuals: tuple = ()
    matrix: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.eigenvalues], dtype=np.complex128)

    @property
    def n(self) -> int:
        return self.right_vectors.shape[0]

    @classmethod
    def from_pairs(cls, values, vectors, conventions=None, matrix=None):
        """Assemble an eigen-system from given eigenvalues and vector columns.

        When ``matrix`` is omitted it is reconstructed as ``V diag(w) V^-1``.
        """
        values = np.asarray(values, dtype=np.complex128)
        V = np.asarray(vectors, dtype=np.complex128)
        if matrix is None:
            matrix = V @ np.diag(values) @ np.linalg.inv(V)
        res = np.linalg.norm(matrix @ V - V * values, axis=0) / np.linalg.norm(V, axis=0)
        recs = tuple(EigenvalueRecord.from_value(v, conventions) for v in values)
        return cls(recs, V, "unnormalized", (False,) * len(values), tuple(res), matrix)


def _as_array(H):
    return H.entries if isinstance(H, HamiltonianMatrix) else np.asarray(H, np.complex128)


def residual_norms(H: np.ndarray, w: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``||H v_i - w_i v_i||_2`` per column; works on stacks."""
    R = H @ V - V * w[..., None, :]
    return np.linalg.norm(R, axis=-2)


def check_residuals(H, w, V, index=None):
    fro = np.linalg.norm(H, axis=(-2, -1))
    res = residual_norms(H, w, V)
    limit = RESIDUAL_TOL * np.maximum(fro, np.finfo(float).tiny)
    bad = res > limit[..., None]
    if np.any(bad) or not np.all(np.isfinite(res)):
        worst = float(np.nanmax(res / limit[..., None]) * RESIDUAL_TOL) if res.size else np.nan
        where = "" if index is None else f" at point {index}"
        raise NumericalFailure(f"eigen residual contract violated{where}", worst, index)
    return res


def eigendecompose(H, conventions: Conventions | None = None) -> EigenSystem:
    """All eigenpairs of a small dense complex matrix, unit-normalised.

    ``N = 2`` uses the closed form, larger matrices the Hessenberg/QR kernel
    (or LAPACK when numba is disabled). Raises :class:`NumericalFailure` if a
    residual exceeds ``1e-10 * ||H||_F``.
    """
    A = _as_array(H)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("square matrix required")
    if n > MAX_N:
        raise ValueError(f"N = {n} exceeds the dense-solver cap {MAX_N}")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("non-finite matrix entries")
    w, V, info = _kernels.eig_batch(A[None])
    w, V = w[0], V[0]
    if info[0]:
        raise NumericalFailure("QR iteration did not converge")
    res = check_residuals(A, w, V)
    recs = tuple(EigenvalueRecord.from_value(x, conventions) for x in w)
    return EigenSystem(recs, V, "unit", (False,) * n, tuple(float(r) for r in res), A)


def _bilinear_clusters(values, gap_tol):
    n = len(values)
    seen = np.zeros(n, bool)
    groups = []
    for i in range(n):
        if seen[i]:
            continue
        grp = [j for j in range(n) if not seen[j] and abs(values[j] - values[i]) <= gap_tol]
        for j in grp:
            seen[j] = True
        groups.append(grp)
    return groups


def biorthonormalize(es: EigenSystem, gap_tol: float | None = None, so_tol: float = SO_TOL) -> EigenSystem:
    """Scale eigenvectors so that ``phi_i^T phi_j = delta_ij``.

    Vectors with ``|phi^T phi| < so_tol`` at unit norm are self-orthogonal:
    they are flagged and left at unit norm. Eigenvalues closer than
    ``gap_tol`` are treated as one cluster and orthogonalised against each
    other in the bilinear form.
    """
    V = np.array(es.right_vectors, dtype=np.complex128)
    n = V.shape[1]
    values = es.values
    if gap_tol is None:
        fro = np.linalg.norm(es.matrix) if es.matrix is not None else np.abs(values).max()
        gap_tol = 1e-8 * fro
    V /= np.linalg.norm(V, axis=0)
    flags = [False] * n
    for grp in _bilinear_clusters(values, gap_tol):
        done = []
        for i in grp:
            v = V[:, i]
            for j in done:
                v = v - (V[:, j] @ v) * V[:, j]
            nrm = np.linalg.norm(v)
            if nrm < so_tol:
                flags[i] = True
                continue
            u = v / nrm
            q = u @ u
            if abs(q) < so_tol:
                V[:, i] = V[:, i] / np.linalg.norm(V[:, i])
                flags[i] = True
                continue
            V[:, i] = u / np.sqrt(q)
            done.append(i)
    return replace(es, right_vectors=V, normalization="biorthogonal", self_orthogonal_flags=tuple(flags))


def unit_vectors(es: EigenSystem) -> np.ndarray:
    V = np.asarray(es.right_vectors)
    return V / np.linalg.norm(V, axis=0)


def self_orthogonality(V: np.ndarray) -> np.ndarray:
    """``|v^T v| / ||v||^2`` per column (the phase rigidity of each vector)."""
    V = np.asarray(V)
    num = np.abs(np.sum(V * V, axis=-2))
    den = np.sum(np.abs(V) ** 2, axis=-2)
    return num / den


def eigendecompose_stack(Hs: np.ndarray, parallel=False, workers=None):
    """Batch decomposition with the residual contract checked per matrix.

    Returns ``(w, V, residuals)``; raises :class:`NumericalFailure` naming
    the first failing index.
    """
    Hs = np.asarray(Hs, dtype=np.complex128)
    if Hs.shape[-1] > MAX_N:
        raise ValueError(f"N = {Hs.shape[-1]} exceeds the dense-solver cap {MAX_N}")
    finite = np.isfinite(Hs).all(axis=(-2, -1))
    if not finite.all():
        k = int(np.flatnonzero(~finite)[0])
        raise NumericalFailure(f"non-finite matrix entries at point {k}", index=k)
    w, V, info = _kernels.eig_batch(Hs, parallel=parallel, workers=workers)
    if np.any(info):
        k = int(np.flatnonzero(info)[0])
        raise NumericalFailure(f"QR iteration did not converge at point {k}", index=k)
    fro = np.linalg.norm(Hs, axis=(-2, -1))
    res = residual_norms(Hs, w, V)
    bad = ~(res <= RESIDUAL_TOL * np.maximum(fro, np.finfo(float).tiny)[:, None])
    if np.any(bad):
        k = int(np.flatnonzero(bad.any(axis=1))[0])
        raise NumericalFailure(
            f"eigen residual contract violated at point {k}", float(res[k].max()), k
        )
    return w, V, res
