from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eplab.errors import DivergingEM, DomainError
from eplab.observables import (
    Thresholds,
    detect_equilibrium,
    em_norm,
    entropies,
    gram_defect,
    level_spacings,
    mixing_coefficients,
    mixing_probabilities,
    phase_rigidity,
    rigidities,
    shannon_entropy,
)
from eplab.spectral import EigenSystem, biorthonormalize, eigendecompose

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
FIXTURE = np.array([[0, 0.5], [0.5, 1j]])


def dft(n):
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(2j * np.pi * j * k / n) / np.sqrt(n)


finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def vectors(draw, n_min=2, n_max=8):
    n = draw(st.integers(n_min, n_max))
    re = draw(st.lists(finite, min_size=n, max_size=n))
    im = draw(st.lists(finite, min_size=n, max_size=n))
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        v[0] += 1.0
    return v


@st.composite
def bases(draw, n_min=2, n_max=6):
    n = draw(st.integers(n_min, n_max))
    cols = [draw(vectors(n, n)) for _ in range(n)]
    return np.stack(cols, axis=1)


def test_rigidity_examples():
    assert phase_rigidity([1, 0]) == 1.0
    assert phase_rigidity(np.array([1, 1j]) / np.sqrt(2)) == 0.0
    assert phase_rigidity([1, 0.5j]) == pytest.approx(0.6, abs=1e-15)
    with pytest.raises(DomainError):
        phase_rigidity([0, 0])


def test_em_norm_examples():
    assert em_norm([1, 0]) == 1.0
    assert em_norm([1, 0.5j]) == pytest.approx(5 / 3, abs=1e-14)
    with pytest.raises(DivergingEM):
        em_norm([1, 1j])


def test_em_grows_at_halved_distances():
    ems = []
    for n in range(9):
        es = biorthonormalize(eigendecompose(FIXTURE + np.diag([0, 0.2 * 2.0 ** -n])))
        ems.append(em_norm(es.right_vectors[:, 0]))
    assert all(b > a for a, b in zip(ems, ems[1:]))


def test_entropy_examples_and_errors():
    assert shannon_entropy([1, 0]) == 0
    assert shannon_entropy([0.5, 0.5]) == 1
    assert shannon_entropy([0.25] * 4) == 2
    with pytest.raises(DomainError):
        shannon_entropy([0.5, 0.6])
    with pytest.raises(DomainError):
        shannon_entropy([1.5, -0.5])


def test_mixing_decoupled():
    es = eigendecompose(np.diag([0.0, 1.0, 2.5]))
    rep = mixing_coefficients(es, np.diag([0.0, 1.0, 2.5]))
    assert np.array_equal(np.abs(rep.b), np.eye(3))
    assert np.array_equal(rep.p, np.eye(3))
    assert np.array_equal(rep.entropies, np.zeros(3))
    assert rep.max_entropy == pytest.approx(np.log2(3))


def test_mixing_hadamard_and_dft():
    es = EigenSystem.from_pairs([1.0, 2.0], HADAMARD)
    rep = mixing_coefficients(es, np.diag([0.0, 1.0]))
    assert np.abs(rep.p - 0.5).max() < 1e-15
    assert np.abs(rep.entropies - 1).max() < 1e-12
    es4 = EigenSystem.from_pairs([1, 2, 3, 4], dft(4))
    rep4 = mixing_coefficients(es4, np.diag([0.0, 1, 2, 3]))
    assert np.abs(rep4.p - 0.25).max() < 1e-15
    assert np.abs(rep4.entropies - 2).max() < 1e-12


def test_mixing_requires_diagonal_h0():
    es = EigenSystem.from_pairs([1.0, 2.0], HADAMARD)
    with pytest.raises(DomainError):
        mixing_coefficients(es, np.array([[0, 1], [1, 0]]))


def test_gram_defect_examples():
    assert gram_defect(np.eye(3)) == 0
    assert gram_defect(HADAMARD) < 1e-15
    assert gram_defect(np.array([[1, 1], [0, 1]]) / np.array([1, np.sqrt(2)])) == pytest.approx(2 ** -0.5)


def test_detector_dft_passes():
    es = EigenSystem.from_pairs([1, 2, 3, 4], dft(4))
    v = detect_equilibrium(es, mixing_coefficients(es, np.diag([0.0, 1, 2, 3])))
    assert v.passed
    assert v.orthogonality_defect < 1e-15 and v.prob_deviation < 1e-15
    assert all(v.conditions.values())


def test_detector_perturbed_row_fails():
    es = EigenSystem.from_pairs([1, 2, 3, 4], dft(4))
    rep = mixing_coefficients(es, np.diag([0.0, 1, 2, 3]))
    p = rep.p.copy()
    p[0] = [0.35, 0.15, 0.25, 0.25]
    bad = replace(rep, p=p, entropies=entropies(p))
    v = detect_equilibrium(es, bad)
    assert not v.passed
    assert v.prob_deviation == pytest.approx(0.10, abs=1e-12)
    assert not v.conditions["uniform_mixing"]


def test_detector_gap_veto_next_to_ep():
    es = eigendecompose(FIXTURE + np.diag([0, 1e-6]))
    rep = mixing_coefficients(es, np.diag(np.diag(FIXTURE)))
    v = detect_equilibrium(es, rep)
    assert not v.passed and not v.conditions["far_from_ep"]
    # the veto holds whatever the other margins are
    lax = Thresholds(t_orth=10, t_prob=10, t_ent=10)
    v = detect_equilibrium(es, rep, thresholds=lax)
    assert not v.passed and [k for k, ok in v.conditions.items() if not ok] == ["far_from_ep"]


def test_explicit_gap_threshold():
    es = EigenSystem.from_pairs([1, 2, 3, 4], dft(4))
    rep = mixing_coefficients(es, np.diag([0.0, 1, 2, 3]))
    assert not detect_equilibrium(es, rep, thresholds=Thresholds(t_gap=2.0)).passed
    assert detect_equilibrium(es, rep, thresholds=Thresholds(t_gap=1.0)).passed


def test_level_spacing_of_equidistant_normal_matrix():
    assert level_spacings(np.diag([0.0, 1.0, 2.0, 3.0])) == pytest.approx(1.0)
    assert level_spacings(np.diag([5.0, 5.5])) == pytest.approx(0.5)
    # finite at the EP, where the eigenvalue spacing vanishes
    assert level_spacings(FIXTURE) > 0.5


@given(bases())
@settings(max_examples=80, deadline=None)
def test_probability_rows_and_entropy_bounds(V):
    p = mixing_probabilities(V)
    n = V.shape[0]
    assert np.abs(p.sum(axis=1) - 1).max() <= 1e-12
    assert p.min() >= 0 and p.max() <= 1
    H = entropies(p)
    assert H.min() >= 0 and H.max() <= np.log2(n) + 1e-12
    for row, h in zip(p, H):
        uniform = np.abs(row - 1 / n).max() <= 1e-12
        assert (abs(h - np.log2(n)) <= 1e-9) or not uniform
        if abs(h - np.log2(n)) <= 1e-12:
            assert np.abs(row - 1 / n).max() <= 1e-4


@given(bases(), st.lists(st.floats(0, 2 * np.pi), min_size=6, max_size=6))
@settings(max_examples=80, deadline=None)
def test_phase_invariance(V, phases):
    n = V.shape[1]
    W = V * np.exp(1j * np.array(phases[:n]))
    assert np.abs(rigidities(V) - rigidities(W)).max() <= 1e-12
    assert np.abs(mixing_probabilities(V) - mixing_probabilities(W)).max() <= 1e-12
    assert np.abs(entropies(mixing_probabilities(V)) - entropies(mixing_probabilities(W))).max() <= 1e-12
    assert abs(gram_defect(V) - gram_defect(W)) <= 1e-12


@given(vectors())
@settings(max_examples=80, deadline=None)
def test_rigidity_times_em_norm_is_one(v):
    q = abs(v @ v) / np.vdot(v, v).real
    if q < 1e-6:
        return
    phi = v / np.sqrt(v @ v)  # phi^T phi = 1
    assert abs(phase_rigidity(phi) * np.vdot(phi, phi).real - 1) <= 1e-10
    assert abs(phase_rigidity(phi) * em_norm(phi) - 1) <= 1e-10
