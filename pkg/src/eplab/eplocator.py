"""Location and verification of exceptional points.

An EP is codimension two, so every search runs over exactly two real
unknowns. A *family* maps those unknowns to a matrix: either a bare 2x2
matrix ``[[eps1, omega], [omega, eps2]]`` (:class:`Direct2x2`) or a
:class:`~eplab.model.SystemSpec` with two designated fields (:class:`SpecFamily`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import EncirclingError, EpNotFound, NoConvergence, SpecificationError, TrackingError
from .model import ParameterPoint, SystemSpec, check_spec, hamiltonian_stack
from .observables import rigidities
from .spectral import eigendecompose_stack
from .tracking import TrajectorySet, track_family

EP_GAP_TOL = 1e-7
EP_SO_TOL = 1e-6


def discriminant_2x2(eps1: complex, eps2: complex, omega: complex) -> complex:
    """``(eps1 - eps2)^2 + 4 omega^2``; zero iff ``[[eps1, omega], [omega, eps2]]``
    has a double eigenvalue. Eigenvalues are ``(eps1 + eps2)/2 ± sqrt(D)/2``.
    """
    d = complex(eps1) - complex(eps2)
    return d * d + 4.0 * complex(omega) ** 2


def matrix_discriminant(H) -> complex:
    H = np.asarray(H)
    return discriminant_2x2(H[0, 0], H[1, 1], H[0, 1])


class Direct2x2:
    """The bare two-level matrix with two of its six real parts unknown."""

    FIELDS = ("eps1", "eps2", "omega")

    def __init__(self, eps1=0.0, eps2=1j, omega=0.5, unknowns=("eps2.re", "eps2.im")):
        self.base = {"eps1": complex(eps1), "eps2": complex(eps2), "omega": complex(omega)}
        self.unknowns = tuple(unknowns)
        if len(self.unknowns) != 2 or len(set(self.unknowns)) != 2:
            raise SpecificationError("exactly two distinct unknowns required")
        self._slots = []
        for name in self.unknowns:
            m = re.fullmatch(r"(eps1|eps2|omega)\.(re|im)", name)
            if not m:
                raise SpecificationError(f"unknown parameter {name!r}")
            self._slots.append((m.group(1), 1.0 if m.group(2) == "re" else 1j))
        self.n = 2

    def seed(self):
        return np.array(
            [self.base[f].real if u == 1.0 else self.base[f].imag for f, u in self._slots]
        )

    def params(self, x):
        p = dict(self.base)
        for (f, unit), xi in zip(self._slots, x):
            cur = p[f]
            p[f] = complex(xi, cur.imag) if unit == 1.0 else complex(cur.real, xi)
        return p

    def matrix(self, x):
        p = self.params(x)
        return np.array([[p["eps1"], p["omega"]], [p["omega"], p["eps2"]]], dtype=np.complex128)

    def dmatrix(self, x):
        out = []
        for f, unit in self._slots:
            d = np.zeros((2, 2), dtype=np.complex128)
            if f == "eps1":
                d[0, 0] = unit
            elif f == "eps2":
                d[1, 1] = unit
            else:
                d[0, 1] = d[1, 0] = unit
            out.append(d)
        return out

    def point(self, x):
        return None

    def detuning(self, x):
        p = self.params(x)
        return p["eps1"] - p["eps2"]


_SPEC_UNKNOWN = re.compile(r"a|omega(?:\[(\d+)\])?\.(re|im)|(e0|e1|gamma0)\[(\d+)\]")


class SpecFamily:
    """A system spec evaluated at ``base`` with two fields replaced by unknowns.

    Unknown names: ``a``, ``omega[c].re``, ``omega[c].im`` (``omega.re`` means
    channel 0), ``e0[k]``, ``e1[k]``, ``gamma0[k]``.
    """

    def __init__(self, spec: SystemSpec, base: ParameterPoint, unknowns=("a", "omega[0].re")):
        check_spec(spec)
        if len(base.omegas) != spec.n_channels:
            raise SpecificationError("base point has the wrong number of couplings")
        self.spec = spec
        self.base = base
        self.unknowns = tuple(unknowns)
        if len(self.unknowns) != 2 or len(set(self.unknowns)) != 2:
            raise SpecificationError("exactly two distinct unknowns required")
        self._slots = []
        for name in self.unknowns:
            m = _SPEC_UNKNOWN.fullmatch(name)
            if not m:
                raise SpecificationError(f"unknown parameter {name!r}")
            if name == "a":
                self._slots.append(("a", None, None))
            elif m.group(2):
                c = int(m.group(1) or 0)
                if c >= spec.n_channels:
                    raise SpecificationError(f"{name}: no channel {c}")
                self._slots.append(("omega", c, m.group(2)))
            else:
                k = int(m.group(4))
                if k >= spec.n_states:
                    raise SpecificationError(f"{name}: no state {k}")
                self._slots.append((m.group(3), k, None))
        self.n = spec.n_states
        self._outer = None

    def seed(self):
        out = []
        for kind, idx, part in self._slots:
            if kind == "a":
                out.append(self.base.a)
            elif kind == "omega":
                w = self.base.omegas[idx]
                out.append(w.real if part == "re" else w.imag)
            else:
                out.append(getattr(self.spec.diag_energies[idx], kind))
        return np.array(out, dtype=float)

    def spec_and_point(self, x):
        spec, a, om = self.spec, self.base.a, list(self.base.omegas)
        levels = list(spec.diag_energies)
        for (kind, idx, part), xi in zip(self._slots, x):
            xi = float(xi)
            if kind == "a":
                a = xi
            elif kind == "omega":
                om[idx] = complex(xi, om[idx].imag) if part == "re" else complex(om[idx].real, xi)
            else:
                levels[idx] = replace(levels[idx], **{kind: xi})
        if levels != list(spec.diag_energies):
            spec = replace(spec, diag_energies=tuple(levels))
        return spec, ParameterPoint(a, tuple(om))

    def point(self, x):
        return self.spec_and_point(x)[1]

    def matrix(self, x):
        spec, p = self.spec_and_point(x)
        return hamiltonian_stack(spec, [p.a], [p.omegas])[0]

    def dmatrix(self, x):
        spec, p = self.spec_and_point(x)
        n = self.n
        W = spec.channel_matrix()
        sign = 1.0 if spec.conventions.width_sign == "paper_plus" else -1.0
        out = []
        for kind, idx, part in self._slots:
            d = np.zeros((n, n), dtype=np.complex128)
            if kind == "a":
                d[np.arange(n), np.arange(n)] = [lev.e1 for lev in spec.diag_energies]
            elif kind == "omega":
                unit = 1.0 if part == "re" else 1j
                d = -0.5j * unit * (W[idx][:, None] * W[idx][None, :])
            elif kind == "e0":
                d[idx, idx] = 1.0
            elif kind == "e1":
                d[idx, idx] = p.a
            else:
                d[idx, idx] = 0.5j * sign
            out.append(d)
        return out

    def detuning(self, x):
        return None


@dataclass
class EpCandidate:
    x: tuple
    unknowns: tuple
    point: ParameterPoint | None
    min_gap: float
    self_orth: float
    verified: bool
    detuning: complex | None = None
    eigenvalue: complex | None = None
    discriminant: complex | None = None
    iterations: int = 0
    permutation: tuple | None = None
    pair: tuple | None = None
    notes: list = field(default_factory=list)

    def as_dict(self):
        def cplx(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]

        return {
            "unknowns": list(self.unknowns),
            "x": [float(v) for v in self.x],
            "a": None if self.point is None else self.point.a,
            "omegas": None if self.point is None else [cplx(w) for w in self.point.omegas],
            "detuning": cplx(self.detuning),
            "eigenvalue": cplx(self.eigenvalue),
            "discriminant_abs": None if self.discriminant is None else abs(self.discriminant),
            "min_gap": self.min_gap,
            "self_orth": self.self_orth,
            "verified": self.verified,
            "iterations": self.iterations,
            "permutation": None if self.permutation is None else list(self.permutation),
            "pair": None if self.pair is None else list(self.pair),
            "notes": list(self.notes),
        }


@dataclass
class EncircleResult:
    permutation: tuple
    trajectories: TrajectorySet
    loop: np.ndarray
    pair: tuple | None = None

    @property
    def swaps_pair(self) -> bool:
        return is_pair_transposition(self.permutation, self.pair)


def is_pair_transposition(perm, pair):
    if pair is None:
        return False
    i, j = pair
    rest = all(perm[k] == k for k in range(len(perm)) if k not in (i, j))
    return perm[i] == j and perm[j] == i and rest


def _xy(center):
    if isinstance(center, EpCandidate):
        return np.asarray(center.x, dtype=float)
    return np.asarray(center, dtype=float)


def encircle(family, center, radius: float, steps: int = 400, turns: int = 1, pair=None) -> EncircleResult:
    """Track all eigenvalues around a circle in the plane of the two unknowns.

    Returns the net label permutation after ``turns`` loops. ``pair`` (solver
    indices at the loop start) defaults to the two eigenvalues closest to
    each other there.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if steps < 16:
        raise ValueError("steps must be at least 16")
    c = _xy(center)
    total = steps * turns

    def xy(t):
        th = 2.0 * np.pi * t / steps
        return c + radius * np.array([np.cos(th), np.sin(th)])

    ts = np.arange(total + 1, dtype=float)
    loop = np.array([xy(t) for t in ts])
    Hs = np.stack([family.matrix(p) for p in loop])
    try:
        w, V, _ = eigendecompose_stack(Hs)
        traj = track_family(lambda t: family.matrix(xy(t)), ts, (w, V), closed=True)
    except TrackingError as exc:
        raise EncirclingError(
            f"tracking failed on the loop ({exc}); try a larger radius, more steps, "
            "or a centre farther from other EPs"
        ) from exc
    if pair is None and family.n >= 2:
        v0 = traj.values[:, 0]
        D = np.abs(v0[:, None] - v0[None, :])
        D[np.arange(len(v0)), np.arange(len(v0))] = np.inf
        i, j = np.unravel_index(np.argmin(D), D.shape)
        pair = (int(min(i, j)), int(max(i, j)))
    return EncircleResult(traj.net_permutation(), traj, loop, pair)


def _scale(H):
    f = np.linalg.norm(H)
    return f if f > 0 else 1.0


def _pair_diagnostics(H, pair_ref=None):
    w, V, _ = eigendecompose_stack(H[None])
    w, V = w[0], V[0]
    n = len(w)
    if pair_ref is None:
        D = np.abs(w[:, None] - w[None, :])
        D[np.arange(n), np.arange(n)] = np.inf
        i, j = np.unravel_index(np.argmin(D), D.shape)
    else:
        i, j = _pair_near(w, pair_ref)
    r = rigidities(V[:, [i, j]])
    return w, (int(i), int(j)), float(abs(w[i] - w[j])), float(r.max())


def _verify(cand, family, radius, steps, gap_tol, so_tol, fro):
    ok_local = cand.min_gap <= gap_tol * fro and cand.self_orth <= so_tol
    if not ok_local:
        cand.notes.append("gap or self-orthogonality above tolerance")
    try:
        res = encircle(family, cand.x, radius, steps)
        cand.permutation = res.permutation
        w0 = res.trajectories.values[:, 0]
        pair = _pair_near(w0, cand.eigenvalue)
        cand.pair = pair
        swapped = is_pair_transposition(res.permutation, pair)
        if not swapped:
            cand.notes.append("encircling did not exchange the coalescing pair")
    except EncirclingError as exc:
        cand.notes.append(str(exc))
        swapped = False
    cand.verified = bool(ok_local and swapped)
    return cand


def _pair_near(w, target):
    d = np.abs(np.asarray(w) - target)
    i, j = np.argsort(d, kind="stable")[:2]
    return (int(min(i, j)), int(max(i, j)))


def find_ep_2x2(
    family,
    seed=None,
    max_iter: int = 50,
    tol: float = 1e-12,
    verify: bool = True,
    radius: float | None = None,
    steps: int = 64,
    gap_tol: float = EP_GAP_TOL,
    so_tol: float = EP_SO_TOL,
) -> EpCandidate:
    """Newton iteration on ``D = (H00 - H11)^2 + 4 H01^2 = 0`` over two real unknowns.

    Converged when ``|D| <= tol * ||H||_F^2``; a few extra iterations polish
    the root while ``|D|`` keeps decreasing. Raises :class:`NoConvergence` on a
    singular Jacobian or after ``max_iter`` iterations.
    """
    if family.n != 2:
        raise SpecificationError("find_ep_2x2 needs a two-level family")
    x = family.seed() if seed is None else np.asarray(seed, dtype=float).copy()
    it = 0
    converged_at = None
    best = (np.inf, x.copy())
    while True:
        H = family.matrix(x)
        D = matrix_discriminant(H)
        scale = _scale(H) ** 2
        aD = abs(D)
        if not np.isfinite(aD):
            raise NoConvergence("discriminant became non-finite", last=best[1])
        if aD < best[0]:
            best = (aD, x.copy())
        if converged_at is None and aD <= tol * scale:
            converged_at = it
        if converged_at is not None and (aD == 0.0 or it - converged_at >= 3 or aD > best[0]):
            x = best[1]
            break
        if it >= max_iter:
            raise NoConvergence(f"no convergence in {max_iter} Newton steps (|D| = {aD:.3e})", last=x)
        dH = family.dmatrix(x)
        g = [2.0 * (H[0, 0] - H[1, 1]) * (d[0, 0] - d[1, 1]) + 8.0 * H[0, 1] * d[0, 1] for d in dH]
        J = np.array([[g[0].real, g[1].real], [g[0].imag, g[1].imag]])
        det = np.linalg.det(J)
        if not np.isfinite(det) or abs(det) <= 1e-14 * max(np.abs(J).max() ** 2, 1e-300):
            if converged_at is not None:
                x = best[1]
                break
            raise NoConvergence("Jacobian of the discriminant is singular", last=x)
        x = x + np.linalg.solve(J, [-D.real, -D.imag])
        it += 1
    H = family.matrix(x)
    fro = _scale(H)
    w, pair, gap, so = _pair_diagnostics(H)
    cand = EpCandidate(
        tuple(float(v) for v in x), family.unknowns, family.point(x), gap, so, False,
        detuning=family.detuning(x), eigenvalue=complex(w.mean()),
        discriminant=matrix_discriminant(H), iterations=converged_at, pair=pair,
    )
    if verify:
        r = radius if radius is not None else 1e-2 * max(1.0, float(np.abs(x).max()))
        _verify(cand, family, r, steps, gap_tol, so_tol, fro)
    return cand


def _pair_discriminant(family, x, ref):
    w, _, _ = eigendecompose_stack(family.matrix(x)[None])
    i, j = _pair_near(w[0], ref)
    d = w[0][i] - w[0][j]
    return d * d, 0.5 * (w[0][i] + w[0][j])


def find_ep_nd(
    family,
    seed=None,
    pair_hint=None,
    restarts: int = 6,
    initial_step: float = 0.1,
    newton_iter: int = 30,
    verify: bool = True,
    radius: float | None = None,
    steps: int = 64,
    gap_tol: float = EP_GAP_TOL,
    so_tol: float = EP_SO_TOL,
) -> EpCandidate:
    """EP of an N-level family: simplex minimisation of the pair gap, then Newton.

    The squared gap ``g(x) = |E_i - E_j|^2`` has a cusp at the EP, so it is
    first minimised derivative-free (Nelder-Mead, restarted with a shrinking
    simplex). The estimate is polished by Newton on the pair discriminant
    ``(E_i - E_j)^2``, which is smooth through the EP. ``pair_hint`` indexes
    the eigenvalues at the seed sorted by real part; by default the closest
    pair is used. Raises :class:`EpNotFound` if the gap stays above
    ``gap_tol * ||H||_F``.
    """
    x0 = family.seed() if seed is None else np.asarray(seed, dtype=float).copy()
    w0, _, _ = eigendecompose_stack(family.matrix(x0)[None])
    w0 = w0[0]
    if pair_hint is None:
        _, (i, j), _, _ = _pair_diagnostics(family.matrix(x0))
    else:
        order = np.argsort(w0.real, kind="stable")
        i, j = order[pair_hint[0]], order[pair_hint[1]]
    ref = 0.5 * (w0[i] + w0[j])

    def g(x):
        D, _ = _pair_discriminant(family, x, ref)
        return abs(D)

    best_x, best_g = x0, g(x0)
    step = initial_step * max(1.0, float(np.abs(x0).max()))
    for _ in range(restarts):
        simplex = np.array([best_x, best_x + [step, 0.0], best_x + [0.0, step]])
        res = minimize(
            g, best_x, method="Nelder-Mead",
            options={"initial_simplex": simplex, "xatol": 1e-13, "fatol": 1e-30, "maxfev": 2000},
        )
        if res.fun <= best_g:
            best_x, best_g = np.asarray(res.x), float(res.fun)
            ref = _pair_discriminant(family, best_x, ref)[1]
        step *= 0.1

    # Newton polish on the (smooth) pair discriminant
    x = best_x.copy()
    hist = []
    for _ in range(newton_iter):
        D, ref = _pair_discriminant(family, x, ref)
        hist.append((abs(D), x.copy()))
        h = 1e-6 * max(1.0, float(np.abs(x).max()))
        cols = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            Dp, _ = _pair_discriminant(family, x + e, ref)
            Dm, _ = _pair_discriminant(family, x - e, ref)
            cols.append((Dp - Dm) / (2 * h))
        J = np.array([[cols[0].real, cols[1].real], [cols[0].imag, cols[1].imag]])
        if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) < 1e-300:
            break
        dx = np.linalg.solve(J, [-D.real, -D.imag])
        if not np.all(np.isfinite(dx)):
            break
        x = x + dx
        if np.abs(dx).max() < 1e-15 * max(1.0, float(np.abs(x).max())):
            D, ref = _pair_discriminant(family, x, ref)
            hist.append((abs(D), x.copy()))
            break
    x = min(hist, key=lambda t: t[0])[1]

    H = family.matrix(x)
    fro = _scale(H)
    w, pair, gap, so = _pair_diagnostics(H, ref)
    if gap > gap_tol * fro:
        raise EpNotFound(f"pair gap stagnated at {gap:.3e} > {gap_tol * fro:.3e}", last=x)
    cand = EpCandidate(
        tuple(float(v) for v in x), family.unknowns, family.point(x), gap, so, False,
        detuning=family.detuning(x), eigenvalue=complex(0.5 * (w[pair[0]] + w[pair[1]])),
        discriminant=(w[pair[0]] - w[pair[1]]) ** 2, iterations=len(hist), pair=pair,
    )
    if verify:
        r = radius if radius is not None else 1e-3 * max(1.0, float(np.abs(x).max()))
        _verify(cand, family, r, steps, gap_tol, so_tol, fro)
    return cand
