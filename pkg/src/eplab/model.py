"""Effective non-Hermitian Hamiltonians of N states coupled to C channels.

The matrix built here is

    H(a, omega) = diag(eps_k(a)) - (i/2) * sum_c omega_c * W_c W_c^T

with ``eps_k(a) = e0_k + e1_k * a -/+ (i/2) * gamma0_k``. The channel term
uses the plain transpose, so ``H`` is complex symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SpecificationError

WIDTH_SIGNS = ("physical_minus", "paper_plus")


@dataclass(frozen=True)
class Level:
    e0: float
    e1: float = 0.0
    gamma0: float = 0.0


@dataclass(frozen=True)
class Channel:
    w: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(complex(x) for x in self.w))


@dataclass(frozen=True)
class Conventions:
    width_sign: str = "physical_minus"

    @property
    def gamma_factor(self) -> float:
        """Multiplier turning ``Im E`` into a reported width."""
        return 2.0 if self.width_sign == "paper_plus" else -2.0


@dataclass(frozen=True)
class SystemSpec:
    n_states: int
    diag_energies: tuple
    channels: tuple
    conventions: Conventions = field(default_factory=Conventions)

    def __post_init__(self):
        object.__setattr__(self, "diag_energies", tuple(self.diag_energies))
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def channel_matrix(self) -> np.ndarray:
        """Channel vectors stacked as a ``(C, N)`` complex array."""
        return np.array([ch.w for ch in self.channels], dtype=np.complex128).reshape(
            self.n_channels, self.n_states
        )


@dataclass(frozen=True)
class ParameterPoint:
    a: float
    omegas: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "omegas", tuple(complex(x) for x in self.omegas))

    def lerp(self, other: "ParameterPoint", t: float) -> "ParameterPoint":
        return ParameterPoint(
            self.a + t * (other.a - self.a),
            tuple(x + t * (y - x) for x, y in zip(self.omegas, other.omegas)),
        )


@dataclass(frozen=True)
class ParameterPath:
    points: tuple
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < 2:
            raise SpecificationError("path needs at least 2 points")
        if self.closed:
            p, q = self.points[0], self.points[-1]
            gaps = [abs(p.a - q.a)] + [abs(x - y) for x, y in zip(p.omegas, q.omegas)]
            if max(gaps) > 1e-12:
                raise SpecificationError("closed path: first and last points differ")

    def __len__(self):
        return len(self.points)

    @classmethod
    def linear(cls, start: ParameterPoint, stop: ParameterPoint, num: int) -> "ParameterPath":
        ts = np.linspace(0.0, 1.0, num)
        return cls(tuple(start.lerp(stop, t) for t in ts))

    def point_at(self, t: float) -> ParameterPoint:
        """Piecewise-linear interpolation; ``t`` in ``[0, len - 1]``."""
        k = min(int(np.floor(t)), len(self.points) - 2)
        return self.points[k].lerp(self.points[k + 1], t - k)

    def arrays(self):
        """``(a, omegas)`` as arrays of shape ``(P,)`` and ``(P, C)``."""
        a = np.array([p.a for p in self.points], dtype=float)
        om = np.array([p.omegas for p in self.points], dtype=np.complex128)
        return a, om.reshape(len(self.points), -1)


@dataclass(frozen=True)
class HamiltonianMatrix:
    entries: np.ndarray
    point: ParameterPoint | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def validate_spec(spec: SystemSpec) -> list[str]:
    """Return the list of violated invariants (empty when ``spec`` is valid)."""
    out = []
    n = spec.n_states
    if not isinstance(n, (int, np.integer)) or n < 2:
        out.append("n_states must be ≥ 2")
        n = None
    if n is not None and len(spec.diag_energies) != n:
        out.append(f"diag_energies: {len(spec.diag_energies)} entries ≠ n_states")
    for k, lev in enumerate(spec.diag_energies):
        vals = (lev.e0, lev.e1, lev.gamma0)
        if not all(np.isfinite(v) for v in vals):
            out.append(f"diag_energies {k}: non-finite value")
        elif lev.gamma0 < 0:
            out.append(f"diag_energies {k}: gamma0 must be ≥ 0")
    if len(spec.channels) < 1:
        out.append("channels: at least one channel required")
    any_nonzero = False
    for c, ch in enumerate(spec.channels):
        if n is not None and len(ch.w) != n:
            out.append(f"channel {c}: w length ≠ N")
        if not all(np.isfinite(x.real) and np.isfinite(x.imag) for x in ch.w):
            out.append(f"channel {c}: non-finite entry")
        any_nonzero = any_nonzero or any(x != 0 for x in ch.w)
    if spec.channels and not any_nonzero:
        out.append("channels: every w is zero")
    if spec.conventions.width_sign not in WIDTH_SIGNS:
        out.append(f"conventions.width_sign must be one of {WIDTH_SIGNS}")
    return out


def check_spec(spec: SystemSpec) -> None:
    problems = validate_spec(spec)
    if problems:
        raise SpecificationError(problems)


def diagonal_energies(spec: SystemSpec, a) -> np.ndarray:
    """Complex diagonal energies for scalar or array ``a`` (last axis = state)."""
    e0 = np.array([lev.e0 for lev in spec.diag_energies], dtype=float)
    e1 = np.array([lev.e1 for lev in spec.diag_energies], dtype=float)
    g0 = np.array([lev.gamma0 for lev in spec.diag_energies], dtype=float)
    sign = 1.0 if spec.conventions.width_sign == "paper_plus" else -1.0
    a = np.asarray(a, dtype=float)[..., None]
    return (e0 + e1 * a) + 1j * (0.5 * sign) * g0


def channel_outer(spec: SystemSpec) -> np.ndarray:
    """``W_c W_c^T`` for every channel, shape ``(C, N, N)``; exactly symmetric."""
    W = spec.channel_matrix()
    with np.errstate(over="ignore", invalid="ignore"):  # the solver rejects non-finite entries
        out = W[:, :, None] * W[:, None, :]
    lo = np.tril_indices(W.shape[1], -1)
    out[:, lo[0], lo[1]] = out[:, lo[1], lo[0]]
    return out


def hamiltonian_stack(spec: SystemSpec, a, omegas) -> np.ndarray:
    """Vectorised builder: ``a`` shape ``(P,)``, ``omegas`` shape ``(P, C)``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    omegas = np.asarray(omegas, dtype=np.complex128).reshape(a.shape[0], -1)
    if omegas.shape[1] != spec.n_channels:
        raise SpecificationError(
            f"omegas has {omegas.shape[1]} entries, spec has {spec.n_channels} channels"
        )
    n = spec.n_states
    H = np.zeros((a.shape[0], n, n), dtype=np.complex128)
    idx = np.arange(n)
    H[:, idx, idx] = diagonal_energies(spec, a)
    outer = channel_outer(spec)
    coef = -0.5j * omegas
    with np.errstate(over="ignore", invalid="ignore"):
        for c in range(spec.n_channels):
            H += coef[:, c, None, None] * outer[c]
    # vectorised complex products may round mirrored entries differently
    lo = np.tril_indices(n, -1)
    H[:, lo[0], lo[1]] = H[:, lo[1], lo[0]]
    return H


def build_hamiltonian(spec: SystemSpec, point: ParameterPoint) -> HamiltonianMatrix:
    check_spec(spec)
    if len(point.omegas) != spec.n_channels:
        raise SpecificationError(
            f"point has {len(point.omegas)} couplings, spec has {spec.n_channels} channels"
        )
    H = hamiltonian_stack(spec, [point.a], [point.omegas])[0]
    return HamiltonianMatrix(H, point)


def build_h0(spec: SystemSpec, point: ParameterPoint) -> HamiltonianMatrix:
    """The full Hamiltonian with every off-diagonal element removed.

    Diagonal channel contributions ``-(i/2) omega_c W_ck^2`` are kept.
    """
    H = build_hamiltonian(spec, point).entries
    return HamiltonianMatrix(np.diag(np.diag(H)).astype(np.complex128), point)


def spec_from_arrays(
    e0: Sequence[float],
    channels: Sequence[Sequence[complex]],
    e1: Sequence[float] | None = None,
    gamma0: Sequence[float] | None = None,
    width_sign: str = "physical_minus",
) -> SystemSpec:
    """Convenience constructor from plain sequences."""
    n = len(e0)
    e1 = [0.0] * n if e1 is None else e1
    gamma0 = [0.0] * n if gamma0 is None else gamma0
    levels = tuple(Level(float(x), float(y), float(z)) for x, y, z in zip(e0, e1, gamma0))
    chans = tuple(Channel(tuple(w), f"c{c}") for c, w in enumerate(channels))
    return SystemSpec(n, levels, chans, Conventions(width_sign))


def fixture_spec() -> SystemSpec:
    """Two-state, one-channel spec whose H at ``a=0, omega=i`` is [[0, 1/2], [1/2, i]]."""
    return spec_from_arrays(
        e0=[-0.5, -0.5], channels=[[1.0, 1.0]], gamma0=[0.0, 2.0], width_sign="paper_plus"
    )


FIXTURE_POINT = ParameterPoint(0.0, (1j,))
