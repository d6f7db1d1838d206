import math

import numpy as np
import pytest
import scipy.linalg as sla

from builders import problem, random_media, random_problem, random_state
from maxwell_dilation import build_kraus_pair, build_lcu_dilation, build_udiss_kraus, synthesize_gates
from maxwell_dilation.circuit import (
    DilatedState,
    DimensionMismatch,
    NonUnitaryBlock,
    ZeroProbabilityBranch,
    apply_program,
    controlled_lossless_step,
    init_dilated,
    lossless_step_operator,
    measure_ancilla,
)
from maxwell_dilation.operators import StateVector


def setup(seed, cells=4, n_e=1, n_m=1, dt=0.3):
    rng = np.random.default_rng(seed)
    media = random_media(rng, cells, n_e, n_m)
    grid, lay, gen = problem(media)
    psi = random_state(rng, lay)
    return rng, lay, gen, build_kraus_pair(gen, dt), psi


def test_lossless_step_against_expm():
    rng = np.random.default_rng(0)
    for _ in range(10):
        media, grid, lay, gen = random_problem(rng, max_cells=6, max_poles=2)
        dt = float(rng.uniform(0.01, 1.0))
        step = lossless_step_operator(gen, dt)
        oracle = sla.expm(-1j * dt * gen.d0_dense())
        assert np.max(np.abs(step.matrix - oracle)) < 1e-10
        assert step.residual < 1e-12


def test_padding_is_identity_under_lossless_step():
    rng, lay, gen, pair, psi = setup(1, cells=3, n_e=1, n_m=0)
    assert lay.d > lay.d_physical
    u = lossless_step_operator(gen, 0.5).matrix
    pad = lay.padding_slice
    assert np.array_equal(u[pad, pad], np.eye(pad.stop - pad.start))
    assert not u[pad, : lay.d_physical].any()


def test_branches_are_kraus_images():
    rng, lay, gen, pair, psi = setup(2)
    for prog in (build_udiss_kraus(pair), build_lcu_dilation(pair)):
        st = apply_program(init_dilated(psi), prog)
        assert np.max(np.abs(st.top - pair.apply_k0(psi.amplitudes))) < 1e-14
        assert st.norm == pytest.approx(1.0, abs=1e-14)
    st = apply_program(init_dilated(psi), build_udiss_kraus(pair))
    assert np.max(np.abs(st.bottom - pair.apply_k1(psi.amplitudes))) < 1e-14


def test_rotation_list_program_matches_structured():
    rng, lay, gen, pair, psi = setup(3)
    dil = build_udiss_kraus(pair)
    a = apply_program(init_dilated(psi), dil).amplitudes
    b = apply_program(init_dilated(psi), list(dil.rotations)).amplitudes
    assert np.max(np.abs(a - b)) < 1e-15


def test_synthesized_program_matches_structured():
    rng, lay, gen, pair, psi = setup(4)
    for prog in (build_udiss_kraus(pair), build_lcu_dilation(pair)):
        circ = synthesize_gates(prog.rotations, prog.qubits) if hasattr(prog, "rotations") else prog.program()
        a = apply_program(init_dilated(psi), prog).amplitudes
        b = apply_program(init_dilated(psi), circ).amplitudes
        assert np.max(np.abs(a - b)) < 1e-10


def test_controlled_step_leaves_ancilla_one_branch():
    rng, lay, gen, pair, psi = setup(5)
    st = apply_program(init_dilated(psi), build_udiss_kraus(pair))
    step = lossless_step_operator(gen, 0.3)
    out = controlled_lossless_step(st, step)
    assert np.array_equal(out.bottom, st.bottom)
    assert np.max(np.abs(out.top - step.matrix @ st.top)) < 1e-15
    assert out.norm == pytest.approx(st.norm, abs=1e-14)


def test_postselect_renormalizes():
    rng, lay, gen, pair, psi = setup(6)
    st = apply_program(init_dilated(psi), build_udiss_kraus(pair))
    rec = measure_ancilla(st, norm_scale=3.0)
    k0psi = pair.apply_k0(psi.amplitudes)
    assert rec.p0 == pytest.approx(np.linalg.norm(k0psi) ** 2, abs=1e-14)
    assert np.max(np.abs(rec.post_state.amplitudes - k0psi / math.sqrt(rec.p0))) < 1e-14
    assert rec.post_state.norm_scale == 3.0 and rec.outcome == "post-selected-0"


def test_sampling_is_reproducible():
    rng, lay, gen, pair, psi = setup(7, dt=2.0)
    st = apply_program(init_dilated(psi), build_udiss_kraus(pair))
    a = [measure_ancilla(st, "sample", seed=s).outcome for s in range(50)]
    b = [measure_ancilla(st, "sample", seed=s).outcome for s in range(50)]
    assert a == b and set(a) == {0, 1}
    rec = measure_ancilla(st, "sample", seed=int(np.argmax(a)))
    assert rec.outcome == 1
    assert np.max(np.abs(rec.post_state.amplitudes - st.bottom / math.sqrt(1 - rec.p0))) < 1e-14


def test_sample_frequency_tracks_p0():
    rng, lay, gen, pair, psi = setup(8, dt=1.0)
    st = apply_program(init_dilated(psi), build_udiss_kraus(pair))
    p0 = measure_ancilla(st).p0
    gen_rng = np.random.default_rng(0)
    n = 4000
    zeros = sum(measure_ancilla(st, "sample", seed=gen_rng).outcome == 0 for _ in range(n))
    assert abs(zeros / n - p0) < 4 * math.sqrt(p0 * (1 - p0) / n)


def test_zero_probability_branch():
    st = DilatedState(np.array([0, 0, 1, 0], complex))
    with pytest.raises(ZeroProbabilityBranch):
        measure_ancilla(st)
    with pytest.raises(ValueError):
        measure_ancilla(DilatedState(np.array([1, 0, 0, 0], complex)), mode="weak")


def test_dimension_and_unitarity_errors():
    rng, lay, gen, pair, psi = setup(9)
    st = init_dilated(psi)
    with pytest.raises(DimensionMismatch):
        controlled_lossless_step(st, np.eye(lay.d // 2))
    with pytest.raises(NonUnitaryBlock):
        controlled_lossless_step(st, 1.01 * np.eye(lay.d))
    small = StateVector(np.ones(4) / 2, 1.0)
    with pytest.raises(DimensionMismatch):
        apply_program(init_dilated(small), build_udiss_kraus(pair))
    with pytest.raises(TypeError):
        apply_program(st, [1, 2])
    with pytest.raises(TypeError):
        apply_program(st, "x")
