import math

import numpy as np
import pytest
import scipy.linalg as sla
from scipy import constants

from builders import problem, random_media, random_problem
from maxwell_dilation import (
    VACUUM,
    GridSpec,
    LayoutMismatch,
    LorentzPole,
    MediumSpec,
    StateVector,
    ZeroField,
    build_generators,
    build_layout,
    encode_initial_state,
    observables,
    response_at,
)
from maxwell_dilation.operators import curl_difference


def test_vacuum_layout():
    lay = build_layout(GridSpec(4), VACUUM)
    assert (lay.d_physical, lay.d, lay.n, lay.r) == (8, 8, 3, 0)


def test_single_lorentz_layout():
    spec = MediumSpec.normalized([LorentzPole(1.0, 1.0, 0.1)])
    lay = build_layout(GridSpec(4), spec)
    assert (lay.d_physical, lay.d, lay.n, lay.r) == (16, 16, 4, 4)
    assert lay.dissipative_slice == slice(12, 16)


def test_drude_layout_is_padded():
    spec = MediumSpec.normalized([LorentzPole(1.0, 0.0, 0.1)])
    lay = build_layout(GridSpec(3), spec)
    assert (lay.d_physical, lay.d, lay.n, lay.r) == (9, 16, 4, 3)
    assert lay.padding_slice == slice(9, 16)
    assert lay.aux_blocks == ()


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1)
    with pytest.raises(ValueError):
        GridSpec(4, 0.0)


def test_layout_index_bounds():
    lay = build_layout(GridSpec(4), MediumSpec.normalized([LorentzPole(1, 1)]))
    assert lay.index("rate", 3, "electric", 0) == 15
    with pytest.raises(IndexError):
        lay.index("u", 4)


def test_curl_difference_antisymmetric():
    dx = curl_difference(9, 0.3).toarray()
    assert np.array_equal(dx.T, -dx)


def test_vacuum_spectrum_matches_toeplitz_closed_form():
    nx, dx = 16, 0.5
    grid = GridSpec(nx, dx)
    lay = build_layout(grid, VACUUM)
    gen = build_generators(lay, grid, VACUUM)
    eig = np.sort(np.linalg.eigvalsh(gen.d0_dense()))
    j = np.arange(1, nx + 1)
    c = constants.c
    mags = c * np.cos(j * np.pi / (nx + 1)) / dx
    expected = np.sort(np.concatenate([mags, -mags]))
    assert np.max(np.abs(eig - expected)) < 1e-6 * c / dx
    assert not gen.ddiss.any()


@pytest.mark.parametrize("branch", ["electric", "magnetic"])
def test_schur_complement_reproduces_response(branch):
    # eliminating pole coordinates of one cell (no curl) gives nu*(1 - eps(nu)/eps0) = Sigma(nu)
    rng = np.random.default_rng(3)
    poles = [LorentzPole(1.3, 0.7, 0.2), LorentzPole(0.6, 0.0, 0.4), LorentzPole(0.9, 2.1, 0.05)]
    spec = MediumSpec.normalized(poles if branch == "electric" else (),
                                 poles if branch == "magnetic" else ())
    grid, lay, gen = problem([spec] * 2)
    g = gen.full_generator()
    f = lay.index("u", 0, branch)
    rest = [lay.index(kind, 0, branch, l) for kind, l in
            [("rate", 0), ("rate", 1), ("rate", 2), ("aux", 0), ("aux", 2)]]
    for nu in rng.uniform(0.1, 3.0, 5):
        g_rr = g[np.ix_(rest, rest)]
        sigma = g[f, rest] @ np.linalg.solve(nu * np.eye(len(rest)) - g_rr, g[rest, f])
        assert abs((1 - sigma / nu) - response_at(spec, nu, branch)) < 1e-12


def test_hermiticity_and_padding_randomized():
    rng = np.random.default_rng(11)
    for _ in range(40):
        media, grid, lay, gen = random_problem(rng, max_cells=64, max_poles=2)
        h = gen.d0
        scale = abs(h).max() if h.nnz else 1.0
        assert abs(h - h.conj().T).max() <= 1e-12 * scale if h.nnz else True
        assert np.all(gen.ddiss >= 0)
        outside = np.ones(lay.d, bool)
        outside[lay.dissipative_slice] = False
        assert not gen.ddiss[outside].any()
        if lay.d > lay.d_physical:
            pad = lay.padding_slice
            assert abs(h[pad, :]).max() == 0 and abs(h[:, pad]).max() == 0


def test_lossless_pole_couplings():
    spec = MediumSpec.normalized([LorentzPole(1.5, 0.8, 0.0)])
    grid, lay, gen = problem([spec] * 3)
    d0 = gen.d0_dense()
    e, a, v = lay.index("u", 1), lay.index("aux", 1, "electric", 0), lay.index("rate", 1, "electric", 0)
    assert d0[e, v] == -1.5j and d0[v, e] == 1.5j
    assert d0[a, v] == 0.8j and d0[v, a] == -0.8j
    assert not gen.ddiss.any()


def test_ddiss_is_twice_physical_damping():
    spec = MediumSpec.normalized([LorentzPole(1.0, 1.0, 0.05)])
    grid, lay, gen = problem([spec] * 4)
    assert np.allclose(gen.ddiss[lay.dissipative_slice], 0.1, rtol=0, atol=1e-16)
    assert np.allclose(gen.rates, 0.1, rtol=0, atol=1e-16)


def test_mixed_pole_types_rejected():
    a = MediumSpec.normalized([LorentzPole(1, 1, 0.1)])
    b = MediumSpec.normalized([LorentzPole(1, 0, 0.1)])
    grid = GridSpec(2)
    with pytest.raises(LayoutMismatch):
        build_generators(build_layout(grid, [a, b]), grid, [a, b])
    with pytest.raises(LayoutMismatch):
        build_layout(grid, [a])


def test_encode_delta():
    lay = build_layout(GridSpec(4, 0.25), MediumSpec.normalized())
    psi = encode_initial_state([1, 0, 0, 0], [0, 0, 0, 0], lay, MediumSpec.normalized())
    expected = np.zeros(lay.d)
    expected[0] = 1
    assert np.array_equal(psi.amplitudes, expected)
    assert psi.norm_scale == 0.25


def test_encode_gaussian_has_empty_auxiliary_block():
    spec = MediumSpec(electric_poles=[LorentzPole(1e9, 1e9, 1e7)])
    lay = build_layout(GridSpec(8, 1e-3), spec)
    x = np.arange(8)
    g = np.exp(-((x - 4) / 2) ** 2)
    psi = encode_initial_state(g, 0.5 * g, lay, spec)
    assert not psi.amplitudes[2 * 8:].any()
    assert psi.norm == pytest.approx(1.0, abs=1e-15)
    expected_e0 = 1e-3 * np.sum(spec.eps0 * g**2 + spec.mu0 * (0.5 * g) ** 2)
    assert psi.norm_scale == pytest.approx(expected_e0, rel=1e-14)


def test_encode_zero_field():
    lay = build_layout(GridSpec(3), VACUUM)
    with pytest.raises(ZeroField):
        encode_initial_state(np.zeros(3), np.zeros(3), lay, VACUUM)


def test_fresh_observables():
    spec = MediumSpec.normalized([LorentzPole(1, 1, 0.2)], [LorentzPole(1, 2, 0.1)])
    lay = build_layout(GridSpec(5), spec)
    psi = encode_initial_state(np.ones(5), np.arange(5.0), lay, spec)
    obs = observables(psi, lay, spec)
    assert obs["E_el"] == pytest.approx(obs["E_total"], rel=1e-15)
    assert obs["E_total"] == pytest.approx(0.5 * psi.norm_scale, rel=1e-14)
    assert not obs["P"].any() and not obs["M"].any()


def test_rate_only_state_has_no_field_energy():
    spec = MediumSpec.normalized([LorentzPole(1, 1, 0.2)])
    lay = build_layout(GridSpec(4), spec)
    a = np.zeros(lay.d, complex)
    a[lay.dissipative_slice] = 0.5
    obs = observables(StateVector(a, 2.0), lay, spec)
    assert obs["E_el"] == 0 and obs["E_total"] == pytest.approx(0.5 * 2.0 * 1.0)


def test_static_polarization_matches_static_susceptibility():
    # the stationary local state has aux amplitude (Omega/omega) * e; P must equal (eps(0) - eps0) E
    spec = MediumSpec(electric_poles=[LorentzPole(2.0e9, 3.0e9, 1.0e8)])
    grid, lay, gen = problem([spec] * 2, spacing=1e-3)
    e_field = 7.0
    e_amp = math.sqrt(spec.eps0) * e_field
    a = np.zeros(lay.d, complex)
    a[lay.index("u", 0)] = e_amp
    a[lay.index("aux", 0, "electric", 0)] = (2.0 / 3.0) * e_amp
    # local stationarity (curl aside): G restricted to the cell annihilates it
    local = gen.full_generator() @ a
    assert abs(local[lay.index("rate", 0, "electric", 0)]) < 1e-6 * 2e9 * e_amp
    psi = StateVector(a, norm_scale=lay.spacing)
    p = observables(psi, lay, spec)["P"][0]
    chi0 = (response_at(spec, 0.0) - spec.eps0).real
    assert p == pytest.approx(chi0 * e_field, rel=1e-12)


def test_energy_split_and_lossless_conservation():
    rng = np.random.default_rng(5)
    media = random_media(rng, 6, 1, 1, lossless=True)
    grid, lay, gen = problem(media)
    psi = encode_initial_state(rng.normal(size=6), rng.normal(size=6), lay, media)
    e_start = observables(psi, lay, media)["E_total"]
    u = sla.expm(-1j * 3.7 * gen.d0_dense())
    later = StateVector(u @ psi.amplitudes, psi.norm_scale)
    obs = observables(later, lay, media)
    assert obs["E_total"] == pytest.approx(e_start, rel=1e-9)
    assert obs["E_el"] < obs["E_total"]
