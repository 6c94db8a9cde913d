"""Parameter sweeps, entropy plateaus and the search for equilibrium points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ParameterPath, ParameterPoint, SystemSpec, check_spec, hamiltonian_stack
from .observables import (
    EquilibriumVerdict,
    Thresholds,
    entropies,
    equilibrium_from_measures,
    gram_defects,
    level_spacings,
    min_gaps,
    mixing_probabilities,
    rigidities,
)
from .spectral import EigenvalueRecord, eigendecompose_stack
from .tracking import TrajectorySet, track


@dataclass(frozen=True)
class SweepRow:
    index: int
    point: ParameterPoint
    eigenvalues: tuple
    rigidities: tuple
    entropies: tuple
    defect: float
    min_gap: float
    equilibrium: bool
    verdict: EquilibriumVerdict | None = None


@dataclass
class SweepData:
    """Column-oriented sweep results; ``rows()`` gives the row view."""

    spec: SystemSpec
    path: ParameterPath
    thresholds: Thresholds
    trajectories: TrajectorySet
    values: np.ndarray  # (P, N) label order
    rigidity: np.ndarray  # (P, N)
    probabilities: np.ndarray  # (P, N, N)
    entropy: np.ndarray  # (P, N)
    defect: np.ndarray
    min_gap: np.ndarray
    spacing: np.ndarray
    prob_deviation: np.ndarray
    entropy_gap: np.ndarray
    verdicts: list

    @property
    def equilibrium(self) -> np.ndarray:
        return np.array([v.passed for v in self.verdicts], dtype=bool)

    def rows(self) -> list[SweepRow]:
        conv = self.spec.conventions
        out = []
        for k, pt in enumerate(self.path.points):
            recs = tuple(EigenvalueRecord.from_value(z, conv) for z in self.values[k])
            out.append(
                SweepRow(
                    k, pt, recs,
                    tuple(float(x) for x in self.rigidity[k]),
                    tuple(float(x) for x in self.entropy[k]),
                    float(self.defect[k]), float(self.min_gap[k]),
                    self.verdicts[k].passed, self.verdicts[k],
                )
            )
        return out


def compute_sweep(
    spec: SystemSpec,
    path: ParameterPath,
    thresholds: Thresholds | None = None,
    parallel: bool = False,
    workers: int | None = None,
    **track_opts,
) -> SweepData:
    """Decompose every path point (optionally in parallel), track labels, and
    evaluate all per-point observables in label order."""
    check_spec(spec)
    thresholds = thresholds or Thresholds()
    a, om = path.arrays()
    Hs = hamiltonian_stack(spec, a, om)
    w, V, _ = eigendecompose_stack(Hs, parallel=parallel, workers=workers)
    track_opts.setdefault("on_coalescence", "record")
    traj = track(spec, path, solved=(w, V), **track_opts)
    return sweep_from_tracks(spec, path, traj, Hs, thresholds)


def sweep_from_tracks(spec, path, traj, Hs, thresholds=None) -> SweepData:
    """Observables along already tracked eigenpairs of the matrices ``Hs``."""
    thresholds = thresholds or Thresholds()
    values = traj.values.T.copy()
    V_lab = np.transpose(traj.vectors, (1, 2, 0))
    n = spec.n_states
    rig = rigidities(V_lab)
    p = mixing_probabilities(V_lab)
    ent = entropies(p)
    defect = gram_defects(V_lab)
    mgap = min_gaps(values)
    spacing = level_spacings(Hs)
    dev = np.abs(p - 1.0 / n).max(axis=(-2, -1))
    egap = (np.log2(n) - ent).max(axis=-1)
    verdicts = [
        equilibrium_from_measures(defect[k], dev[k], egap[k], mgap[k], spacing[k], thresholds)
        for k in range(len(values))
    ]
    return SweepData(
        spec, path, thresholds, traj, values, rig, p, ent, defect, mgap, spacing, dev, egap, verdicts
    )


def evaluate_point(spec: SystemSpec, point: ParameterPoint, thresholds: Thresholds | None = None) -> SweepRow:
    """All row observables at a single parameter point (solver order)."""
    check_spec(spec)
    H = hamiltonian_stack(spec, [point.a], [point.omegas])
    w, V, _ = eigendecompose_stack(H)
    n = spec.n_states
    p = mixing_probabilities(V)
    ent = entropies(p)[0]
    defect = float(gram_defects(V)[0])
    mgap = float(min_gaps(w)[0])
    verdict = equilibrium_from_measures(
        defect,
        float(np.abs(p[0] - 1.0 / n).max()),
        float((np.log2(n) - ent).max()),
        mgap,
        float(level_spacings(H)[0]),
        thresholds,
    )
    recs = tuple(EigenvalueRecord.from_value(z, spec.conventions) for z in w[0])
    return SweepRow(
        0, point, recs,
        tuple(float(x) for x in rigidities(V)[0]),
        tuple(float(x) for x in ent),
        defect, mgap, verdict.passed, verdict,
    )


def run_sweep(spec, path, thresholds=None, parallel=False, workers=None) -> list[SweepRow]:
    """One :class:`SweepRow` per path point, in path order with tracked labels."""
    return compute_sweep(spec, path, thresholds, parallel, workers).rows()


@dataclass(frozen=True)
class PlateauReport:
    window: int
    delta: float
    start_index: int | None
    saturated_value: float | None

    def as_dict(self):
        return {
            "window": self.window,
            "delta": self.delta,
            "start_index": self.start_index,
            "saturated_value": self.saturated_value,
        }


def detect_plateau(series, window: int, delta: float) -> PlateauReport:
    """Earliest index from which every length-``window`` slice varies by at most ``delta``."""
    x = np.asarray(series, dtype=float)
    if window < 2:
        raise ValueError("window must be at least 2")
    if len(x) < window:
        raise ValueError("series shorter than window")
    slices = np.lib.stride_tricks.sliding_window_view(x, window)
    ok = (slices.max(axis=1) - slices.min(axis=1)) <= delta
    if not ok[-1]:
        return PlateauReport(window, delta, None, None)
    bad = np.flatnonzero(~ok)
    start = int(bad[-1] + 1) if bad.size else 0
    return PlateauReport(window, delta, start, float(x[start:].mean()))


@dataclass
class EquilibriumSearch:
    row: SweepRow | None
    plateau: PlateauReport
    data: SweepData

    @property
    def found(self) -> bool:
        return self.row is not None


def find_equilibrium(
    spec, path, thresholds=None, window: int = 10, delta: float = 0.01, parallel=False, workers=None
) -> EquilibriumSearch:
    """First passing sweep row (or ``None``) plus the plateau of the mean entropy."""
    data = compute_sweep(spec, path, thresholds, parallel, workers)
    passing = np.flatnonzero(data.equilibrium)
    row = data.rows()[int(passing[0])] if passing.size else None
    mean_entropy = data.entropy.mean(axis=1)
    plateau = detect_plateau(mean_entropy, min(window, len(mean_entropy)), delta)
    return EquilibriumSearch(row, plateau, data)
