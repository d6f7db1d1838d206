import math

import numpy as np
import pytest

from builders import problem, random_media
from maxwell_dilation import (
    KrausDilation,
    LorentzPole,
    MediumSpec,
    StructureViolation,
    TwoLevelRotation,
    build_kraus_pair,
    build_udiss_kraus,
    decompose_two_level,
    kraus_gate_counts,
    synthesize_gates,
)
from maxwell_dilation.gates import apply_gates, equal_up_to_phase


def lossy_pair(rng, cells, dt, n_e=1, n_m=0):
    media = random_media(rng, cells, n_e, n_m)
    _, lay, gen = problem(media)
    return lay, build_kraus_pair(gen, dt)


def product(rotations, dim):
    u = np.eye(dim, dtype=complex)
    for r in rotations:
        u = r.to_dense(dim) @ u
    return u


def test_zero_step_dilation_is_identity():
    rng = np.random.default_rng(0)
    _, pair = lossy_pair(rng, 4, 0.0)
    u = build_udiss_kraus(pair).to_dense()
    assert np.array_equal(u, np.eye(2 * pair.d))
    assert synthesize_gates(build_udiss_kraus(pair).rotations, 5).gates == []


def test_single_coordinate_is_y_rotation():
    spec = MediumSpec.normalized([LorentzPole(1.0, 0.0, 0.35)])
    media = [spec, MediumSpec.normalized([LorentzPole(1.0, 0.0, 0.0)])]
    _, lay, gen = problem(media)
    pair = build_kraus_pair(gen, 0.9)
    dil = build_udiss_kraus(pair)
    u = dil.to_dense()
    a, b = pair.dissipative[0], pair.d + pair.k1_targets[0]
    g = math.exp(-0.7 * 0.9)
    s = math.sqrt(1 - g * g)
    assert np.max(np.abs(u[np.ix_([a, b], [a, b])] - [[g, -s], [s, g]])) < 1e-15
    # the lossless cell's rate coordinate has a zero angle
    assert dil.rotations[1].angle == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_dense_blocks(seed):
    rng = np.random.default_rng(seed)
    lay, pair = lossy_pair(rng, 4, float(rng.uniform(0.05, 2)), n_e=1, n_m=1)
    assert 2 * lay.d == 64
    u = build_udiss_kraus(pair).to_dense()
    d = pair.d
    assert np.max(np.abs(u.conj().T @ u - np.eye(2 * d))) < 1e-12
    assert np.max(np.abs(u[:d, :d] - pair.k0_dense())) < 1e-13
    assert np.max(np.abs(u[d:, :d] - pair.k1_dense())) < 1e-13


def test_decompose_empty_and_single():
    spec = MediumSpec.normalized()
    _, lay, gen = problem([spec] * 4)
    assert decompose_two_level(build_udiss_kraus(build_kraus_pair(gen, 0.3))) == []
    rot = TwoLevelRotation(2, 9, 0.8)
    found = decompose_two_level(rot.to_dense(16))
    assert len(found) == 1
    assert (found[0].a, found[0].b) == (2, 9)
    assert found[0].angle == pytest.approx(0.8, abs=1e-15)


def test_decompose_six_rotations_dense():
    rng = np.random.default_rng(7)
    lay, pair = lossy_pair(rng, 6, 0.4)
    dil = build_udiss_kraus(pair)
    assert len(dil.rotations) == 6
    u = dil.to_dense()
    parsed = decompose_two_level(u)
    assert np.max(np.abs(product(parsed, u.shape[0]) - u)) < 1e-13
    assert [(r.a, r.b) for r in parsed] == [(r.a, r.b) for r in dil.rotations]


def test_decompose_rejects_unstructured():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    with pytest.raises(StructureViolation):
        decompose_two_level(q)
    u = TwoLevelRotation(0, 3, 0.5).to_dense(8)
    u[0, 3] *= 1j
    with pytest.raises(StructureViolation):
        decompose_two_level(u)


def test_rotations_commute():
    rng = np.random.default_rng(2)
    lay, pair = lossy_pair(rng, 8, 0.6)
    rots = list(build_udiss_kraus(pair).rotations)
    pairs = {k for r in rots for k in (r.a, r.b)}
    assert len(pairs) == 2 * len(rots)
    base = product(rots, 2 * pair.d)
    for _ in range(3):
        perm = [rots[i] for i in rng.permutation(len(rots))]
        assert np.max(np.abs(product(perm, 2 * pair.d) - base)) < 1e-15


def test_one_bit_pair_uses_single_controlled_rotation():
    circ = synthesize_gates([TwoLevelRotation(4, 5, 0.9)], 4)
    assert [g.name for g in circ.gates] == ["mcry"]
    ref = TwoLevelRotation(4, 5, 0.9).to_dense(16)
    assert equal_up_to_phase(apply_gates(np.eye(16, dtype=complex), circ), ref) < 1e-12


def test_three_bit_pair_is_conjugated_by_cnots():
    rot = TwoLevelRotation(0b0001, 0b1100, 1.1)  # differ in 3 bits
    circ = synthesize_gates([rot], 4)
    names = [g.name for g in circ.gates]
    assert names == ["cx", "cx", "mcry", "cx", "cx"]
    got = apply_gates(np.eye(16, dtype=complex), circ)
    assert equal_up_to_phase(got, rot.to_dense(16)) < 1e-10


def test_tiny_angles_are_elided():
    circ = synthesize_gates([TwoLevelRotation(1, 2, 1e-16), TwoLevelRotation(3, 4, 0.2)], 3)
    assert len([g for g in circ.gates if g.name == "mcry"]) == 1


def test_synthesis_reproduces_dilation():
    rng = np.random.default_rng(4)
    lay, pair = lossy_pair(rng, 4, 0.3, n_e=1, n_m=1)
    dil = build_udiss_kraus(pair)
    circ = synthesize_gates(dil.rotations, dil.qubits)
    assert equal_up_to_phase(apply_gates(np.eye(2 * pair.d, dtype=complex), circ), dil.to_dense()) < 1e-10


def test_counts_non_decreasing_in_r():
    # fixed register of n = 5; grow the number of damped cells
    totals = []
    for damped in range(0, 9):
        media = [MediumSpec.normalized([LorentzPole(1.0, 1.0, 0.3 if q < damped else 0.0)]) for q in range(8)]
        _, lay, gen = problem(media)
        assert lay.n == 5
        totals.append(sum(kraus_gate_counts(build_kraus_pair(gen, 0.2)).values()))
    assert totals[0] == 0
    assert all(b >= a for a, b in zip(totals, totals[1:]))


def test_structured_apply_matches_dense_on_batch():
    rng = np.random.default_rng(9)
    lay, pair = lossy_pair(rng, 4, 0.5)
    dil = build_udiss_kraus(pair)
    x = rng.normal(size=(2 * pair.d, 3)) + 1j * rng.normal(size=(2 * pair.d, 3))
    assert np.max(np.abs(dil.apply(x) - dil.to_dense() @ x)) < 1e-14
    assert isinstance(dil, KrausDilation) and dil.qubits == lay.n + 1
