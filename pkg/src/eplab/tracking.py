"""Continuation of eigenvalue labels along parameter paths.

Labels are carried from one path point to the next by an optimal bipartite
matching on ``|E_prev - E_new|``. Near-ties fall back to eigenvector overlap;
if that is inconclusive too, the step is bisected.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import TrackingError
from .model import ParameterPath, SystemSpec, hamiltonian_stack, check_spec
from .spectral import eigendecompose_stack

MATCH_TOL = 1.0
OVERLAP_MARGIN = 0.1
MAX_REFINE = 12

_PERMS = {n: np.array(list(itertools.permutations(range(n)))) for n in range(1, 6)}


@dataclass
class TrajectorySet:
    """Labelled eigenvalue and eigenvector paths.

    ``labels[k, i]`` is the solver column that carries label ``i`` at point
    ``k``; ``values[i, k]`` and ``vectors[i, k]`` are already in label order.
    """

    ts: np.ndarray
    labels: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    ambiguous_steps: tuple = ()
    coalescent_steps: tuple = ()
    closed: bool = False
    path: ParameterPath | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_labels(self) -> int:
        return self.values.shape[0]

    def net_permutation(self) -> tuple:
        """Label ``i`` ends where label ``perm[i]`` started (closed paths)."""
        start = self.values[:, 0]
        end = self.values[:, -1]
        C = np.abs(end[:, None] - start[None, :])
        _, cols = linear_sum_assignment(C)
        return tuple(int(c) for c in cols)


def _second_best(C, sigma, best, thr=np.inf):
    """Cost and permutation of the runner-up assignment.

    For ``N > 5`` a cheap lower bound is tried first; if it already exceeds
    ``best + thr`` the exact runner-up is not computed.
    """
    n = C.shape[0]
    if n == 1:
        return np.inf, sigma
    if n in _PERMS:
        perms = _PERMS[n]
        costs = C[np.arange(n), perms].sum(axis=1)
        order = np.argsort(costs, kind="stable")
        for idx in order:
            if not np.array_equal(perms[idx], sigma):
                return costs[idx], perms[idx]
    # any other assignment changes at least two rows
    rows = np.arange(n)
    masked = C.copy()
    masked[rows, sigma] = np.inf
    margins = masked.min(axis=1) - C[rows, sigma]
    srt = np.sort(margins)
    lower = srt[:2].sum() + srt[2:][srt[2:] < 0].sum()
    if lower > thr:
        return best + lower, sigma
    # Murty: the runner-up avoids at least one edge of sigma
    big = C.max() * (n + 1) + 1.0
    out_cost, out_perm = np.inf, sigma
    for i in range(n):
        Ci = C.copy()
        Ci[i, sigma[i]] = big
        r, c = linear_sum_assignment(Ci)
        cost = C[r, c].sum()
        if cost < out_cost and not np.array_equal(c, sigma):
            out_cost, out_perm = cost, c
    return out_cost, out_perm


def assign(v0, V0, v1, V1, match_tol=MATCH_TOL, overlap_margin=OVERLAP_MARGIN):
    """Match labelled ``(v0, V0)`` to solver output ``(v1, V1)``.

    Returns ``(sigma, status)`` with ``sigma[i]`` the new column for label
    ``i`` and status ``"ok"``, ``"overlap"`` (decided by eigenvector overlap)
    or ``"ambiguous"``.
    """
    C = np.abs(v0[:, None] - v1[None, :])
    _, sigma = linear_sum_assignment(C)
    n = len(v0)
    best = C[np.arange(n), sigma].sum()
    scale = np.abs(v0).max() + np.abs(v1).max() + 1e-300
    floor = 64 * np.finfo(float).eps * scale * n
    thr = match_tol * best + floor
    second, sigma2 = _second_best(C, sigma, best, thr)
    if second - best > thr:
        return sigma, "ok"
    O = np.abs(V0.T @ V1)
    s1 = O[np.arange(n), sigma].sum()
    s2 = O[np.arange(n), sigma2].sum()
    if abs(s1 - s2) > overlap_margin * max(s1, s2, 1e-300):
        return (sigma if s1 > s2 else np.asarray(sigma2)), "overlap"
    return sigma, "ambiguous"


def _unit(V):
    return V / np.linalg.norm(V, axis=-2, keepdims=True)


def track_family(
    matrix_at: Callable[[float], np.ndarray],
    ts,
    solved=None,
    closed=False,
    match_tol=MATCH_TOL,
    max_refine=MAX_REFINE,
    on_coalescence="raise",
    overlap_margin=OVERLAP_MARGIN,
) -> TrajectorySet:
    """Track the eigenpairs of ``matrix_at(t)`` over the grid ``ts``.

    ``solved`` may carry precomputed solver output ``(w, V)`` on the grid;
    refinement points are always computed on demand. With
    ``on_coalescence="record"`` a step that stays ambiguous after
    ``max_refine`` bisections is accepted and recorded instead of raising.
    """
    ts = np.asarray(ts, dtype=float)
    if solved is None:
        Hs = np.stack([matrix_at(t) for t in ts])
        w_all, V_all, _ = eigendecompose_stack(Hs)
    else:
        w_all, V_all = solved
    P, n = w_all.shape
    labels = np.empty((P, n), dtype=np.int64)
    labels[0] = np.arange(n)
    values = np.empty((n, P), dtype=np.complex128)
    vectors = np.empty((n, P, n), dtype=np.complex128)
    cur_v = np.array(w_all[0])
    cur_V = _unit(np.array(V_all[0]))
    values[:, 0] = cur_v
    vectors[:, 0] = cur_V.T
    ambiguous, coalescent = [], []

    # Steps whose row-wise nearest neighbours already form a permutation with
    # a runner-up margin above the tie threshold need no per-step work; the
    # test is invariant under relabelling, so it runs on solver order.
    fast = np.zeros(max(P - 1, 0), dtype=bool)
    nearest = np.zeros((max(P - 1, 0), n), dtype=np.int64)
    if P > 1 and n == 1:
        fast[:] = True
    elif P > 1:
        wa = np.asarray(w_all)
        C = np.abs(wa[:-1, :, None] - wa[1:, None, :])
        nearest = C.argmin(axis=-1)
        part = np.partition(C, 1, axis=-1)
        margins = np.sort(part[..., 1] - part[..., 0], axis=-1)
        best = part[..., 0].sum(axis=-1)
        scale = np.abs(wa[:-1]).max(axis=-1) + np.abs(wa[1:]).max(axis=-1) + 1e-300
        thr = match_tol * best + 64 * np.finfo(float).eps * scale * n
        is_perm = (np.sort(nearest, axis=-1) == np.arange(n)).all(axis=-1)
        fast = is_perm & (margins[:, :2].sum(axis=-1) > thr)

    def solve(t):
        w, V, _ = eigendecompose_stack(matrix_at(t)[None])
        return w[0], _unit(V[0])

    def advance(v0, V0, v1, V1, t0, t1, depth, step):
        sigma, status = assign(v0, V0, v1, V1, match_tol, overlap_margin)
        if status != "ambiguous":
            return sigma
        if depth == 0:
            ambiguous.append(step)
        # identical end points: bisection cannot separate the labels
        stalled = np.array_equal(v0, v1) or np.abs(v0[:, None] - v0[None, :])[np.triu_indices(len(v0), 1)].min() == 0
        if depth >= max_refine or stalled:
            if on_coalescence == "record":
                if not coalescent or coalescent[-1] != step:
                    coalescent.append(step)
                return sigma
            raise TrackingError(
                f"labels stay ambiguous at step {step} after {max_refine} bisections "
                f"(t = {t0:.12g} .. {t1:.12g}); the path likely passes through an EP",
                step,
            )
        tm = 0.5 * (t0 + t1)
        vm, Vm = solve(tm)
        sm = advance(v0, V0, vm, Vm, t0, tm, depth + 1, step)
        vm, Vm = vm[sm], Vm[:, sm]
        return advance(vm, Vm, v1, V1, tm, t1, depth + 1, step)

    for k in range(1, P):
        v1 = np.asarray(w_all[k])
        V1 = _unit(np.asarray(V_all[k]))
        if fast[k - 1]:
            sigma = nearest[k - 1][labels[k - 1]]
        else:
            sigma = advance(cur_v, cur_V, v1, V1, ts[k - 1], ts[k], 0, k)
        labels[k] = sigma
        cur_v = v1[sigma]
        cur_V = V1[:, sigma]
        values[:, k] = cur_v
        vectors[:, k] = cur_V.T
    return TrajectorySet(
        ts, labels, values, vectors, tuple(ambiguous), tuple(coalescent), closed
    )


def spec_matrix_fn(spec: SystemSpec, path: ParameterPath):
    def matrix_at(t):
        p = path.point_at(t)
        return hamiltonian_stack(spec, [p.a], [p.omegas])[0]

    return matrix_at


def track(spec: SystemSpec, path: ParameterPath, solved=None, **opts) -> TrajectorySet:
    """Track all N eigenvalue labels of ``spec`` along ``path``."""
    check_spec(spec)
    ts = np.arange(len(path), dtype=float)
    if solved is None:
        a, om = path.arrays()
        w, V, _ = eigendecompose_stack(hamiltonian_stack(spec, a, om))
        solved = (w, V)
    out = track_family(spec_matrix_fn(spec, path), ts, solved, closed=path.closed, **opts)
    out.path = path
    return out


def compose(p, q):
    """Permutation ``p`` followed by ``q`` (tuples of images)."""
    return tuple(q[p[i]] for i in range(len(p)))


def power(p, k):
    out = tuple(range(len(p)))
    for _ in range(k):
        out = compose(out, p)
    return out


def cycle_notation(p) -> str:
    """1-based cycle notation, ``"()"`` for the identity."""
    seen, parts = set(), []
    for i in range(len(p)):
        if i in seen or p[i] == i:
            seen.add(i)
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j + 1)
            j = p[j]
        parts.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(parts) or "()"


class Crossing(enum.Enum):
    ENERGY_EXCHANGE = "ENERGY_EXCHANGE"
    WIDTH_EXCHANGE = "WIDTH_EXCHANGE"
    FULL_EXCHANGE_EP = "FULL_EXCHANGE_EP"
    AVOIDED = "AVOIDED"


@dataclass(frozen=True)
class CrossingReport:
    kind: Crossing
    index: int
    min_gap: float
    margin: float
    real_swapped: bool
    imag_swapped: bool


def crossing_report(ts: TrajectorySet, label_pair, w_steps=5, approach_tol=None, coalesce_tol=None):
    i, j = label_pair
    if ts.closed:
        raise ValueError("classification needs an open path")
    diff = ts.values[i] - ts.values[j]
    gap = np.abs(diff)
    k = int(np.argmin(gap))
    if approach_tol is not None and gap[k] > approach_tol:
        return CrossingReport(Crossing.AVOIDED, k, float(gap[k]), float("inf"), False, False)
    if coalesce_tol is None:
        coalesce_tol = 1e-9 * (np.abs(ts.values).max() + 1.0)
    lo, hi = max(0, k - w_steps), min(len(gap) - 1, k + w_steps)
    re_swap = bool(diff[lo].real * diff[hi].real < 0)
    im_swap = bool(diff[lo].imag * diff[hi].imag < 0)
    margin = float(min(abs(diff[lo].real), abs(diff[hi].real), abs(diff[lo].imag), abs(diff[hi].imag)))
    near_coalescence = any(lo <= s <= hi + 1 for s in ts.coalescent_steps)
    if near_coalescence or gap[k] <= coalesce_tol or (re_swap and im_swap):
        kind = Crossing.FULL_EXCHANGE_EP
    elif re_swap:
        kind = Crossing.ENERGY_EXCHANGE
    elif im_swap:
        kind = Crossing.WIDTH_EXCHANGE
    else:
        kind = Crossing.AVOIDED
    return CrossingReport(kind, k, float(gap[k]), margin, re_swap, im_swap)


def classify_crossing(ts: TrajectorySet, label_pair, w_steps=5, approach_tol=None) -> Crossing:
    """Which eigenvalue components trade order at the pair's closest approach.

    ``ENERGY_EXCHANGE``: real parts swap, imaginary parts repel;
    ``WIDTH_EXCHANGE``: the reverse; ``FULL_EXCHANGE_EP``: the pair coalesces
    (or both swap); ``AVOIDED``: neither.
    """
    return crossing_report(ts, label_pair, w_steps, approach_tol).kind
