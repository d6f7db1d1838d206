"""
1D transverse Maxwell system with auxiliary polarization fields.

The physical fields are ``E_y(x)`` and ``H_z(x)`` on ``cells`` collocated grid
points.  Every pole adds a displacement-type coordinate (skipped for Drude
poles) and a current-type coordinate per cell.  After the Dyson weighting the
lossless generator ``d0`` is Hermitian and the losses sit on a diagonal
``ddiss`` supported on the trailing block of current-type coordinates.

Coordinate order inside the ``2**n`` register::

    [ E | H | P_l for each Lorentz pole | P_{l,t} for each pole | padding ]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .medium import MediumSpec, validate_medium

BRANCHES = ("electric", "magnetic")


class LayoutMismatch(ValueError):
    """Per-cell media cannot share one coordinate layout."""


class ZeroField(ValueError):
    """An all-zero field cannot be normalized into a state."""


@dataclass(frozen=True)
class GridSpec:
    cells: int
    spacing: float = 1.0

    def __post_init__(self):
        if int(self.cells) != self.cells or self.cells < 2:
            raise ValueError(f"grid needs at least 2 cells, got {self.cells}")
        if not self.spacing > 0:
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")

    @property
    def length(self) -> float:
        return self.cells * self.spacing


@dataclass(frozen=True)
class StateLayout:
    """
    Index map from physical blocks to the padded register.

    ``block_index`` maps ``(kind, branch, pole)`` to the first coordinate of a
    length-``cells`` block, where ``kind`` is ``"u"`` (``branch`` picks E or H,
    ``pole`` is ``None``), ``"aux"`` for the displacement-type auxiliary field
    or ``"rate"`` for its time derivative.
    """

    cells: int
    spacing: float
    field_dim: int
    d_physical: int
    d: int
    n: int
    r: int
    block_index: dict = field(compare=False)
    aux_blocks: tuple = ()
    rate_blocks: tuple = ()

    def index(self, kind: str, q: int, branch: str = "electric", pole=None) -> int:
        if not 0 <= q < self.cells:
            raise IndexError(f"cell {q} outside [0, {self.cells})")
        return self.block_index[(kind, branch, pole)] + q

    @property
    def u_slice(self) -> slice:
        return slice(0, 2 * self.cells)

    @property
    def dissipative_slice(self) -> slice:
        return slice(self.d_physical - self.r, self.d_physical)

    @property
    def padding_slice(self) -> slice:
        return slice(self.d_physical, self.d)


@dataclass(frozen=True)
class GeneratorPair:
    """Hermitian lossless generator ``d0`` and diagonal dissipator ``ddiss``."""

    d0: sp.csr_matrix
    ddiss: np.ndarray
    layout: StateLayout

    @property
    def d(self) -> int:
        return self.layout.d

    def d0_dense(self) -> np.ndarray:
        return self.d0.toarray()

    def full_generator(self) -> np.ndarray:
        """Dense non-Hermitian generator ``d0 - i*ddiss``."""
        return self.d0_dense() - 1j * np.diag(self.ddiss)

    @property
    def rates(self) -> np.ndarray:
        """Substituted damping rates on the dissipative coordinates."""
        return self.ddiss[self.layout.dissipative_slice]


@dataclass
class StateVector:
    """Register amplitudes plus the energy scale removed by normalization."""

    amplitudes: np.ndarray
    norm_scale: float = 1.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


MediumInput = Union[MediumSpec, Sequence[MediumSpec]]


def _per_cell(medium: MediumInput, cells: int) -> list[MediumSpec]:
    if isinstance(medium, MediumSpec):
        return [medium] * cells
    media = list(medium)
    if len(media) != cells:
        raise LayoutMismatch(f"expected {cells} per-cell media, got {len(media)}")
    return media


def build_layout(grid: GridSpec, medium: MediumInput) -> StateLayout:
    """Lay out ``[u | aux | rate | padding]`` for ``grid`` cells."""
    media = _per_cell(medium, grid.cells)
    ref = media[0]
    validate_medium(ref)
    nx = grid.cells

    index = {("u", "electric", None): 0, ("u", "magnetic", None): nx}
    pos = 2 * nx
    aux = []
    for branch in BRANCHES:
        for l, pole in enumerate(ref.poles(branch)):
            if not pole.is_drude:
                index[("aux", branch, l)] = pos
                aux.append((branch, l))
                pos += nx
    rate = []
    r_start = pos
    for branch in BRANCHES:
        for l, _ in enumerate(ref.poles(branch)):
            index[("rate", branch, l)] = pos
            rate.append((branch, l))
            pos += nx

    d_physical = pos
    n = max(1, math.ceil(math.log2(d_physical)))
    return StateLayout(
        cells=nx,
        spacing=grid.spacing,
        field_dim=d_physical // nx,
        d_physical=d_physical,
        d=2**n,
        n=n,
        r=d_physical - r_start,
        block_index=index,
        aux_blocks=tuple(aux),
        rate_blocks=tuple(rate),
    )


def _check_uniform(media: list[MediumSpec]) -> None:
    ref = media[0]
    for q, m in enumerate(media):
        validate_medium(m)
        if (m.eps0, m.mu0) != (ref.eps0, ref.mu0):
            raise LayoutMismatch(f"cell {q}: eps0/mu0 differ from cell 0")
        for branch in BRANCHES:
            a, b = ref.poles(branch), m.poles(branch)
            if len(a) != len(b):
                raise LayoutMismatch(f"cell {q}: {branch} pole count {len(b)} != {len(a)}")
            for l, (pa, pb) in enumerate(zip(a, b)):
                if pa.is_drude != pb.is_drude:
                    raise LayoutMismatch(
                        f"cell {q}: {branch} pole {l} Drude/Lorentz type differs from cell 0"
                    )


def curl_difference(cells: int, spacing: float) -> sp.csr_matrix:
    """Centered first difference with zero ghost values; exactly antisymmetric."""
    off = np.full(cells - 1, 1.0 / (2.0 * spacing))
    return sp.diags([off, -off], [1, -1], shape=(cells, cells), format="csr")


def build_generators(
    layout: StateLayout, grid: GridSpec, medium_per_cell: MediumInput
) -> GeneratorPair:
    """
    Assemble the Dyson-weighted lossless generator and the dissipator.

    The curl block is ``-i*Dx/sqrt(eps0*mu0)`` in both off-diagonal positions
    of the ``(E, H)`` sub-block, which reproduces ``dE/dt = -dH/dx / eps0`` and
    ``dH/dt = -dE/dx / mu0``.  Each pole ``l`` in cell ``q`` couples the field
    to its rate coordinate with ``-+i*Omega`` and the rate to its auxiliary
    coordinate with ``+-i*omega``.  The dissipator carries ``2*gamma`` on the
    rate coordinates.
    """
    media = _per_cell(medium_per_cell, grid.cells)
    _check_uniform(media)
    if grid.cells != layout.cells:
        raise LayoutMismatch(f"grid has {grid.cells} cells, layout {layout.cells}")
    ref = media[0]
    nx, d = layout.cells, layout.d

    rows, cols, vals = [], [], []

    def put(i, j, v):
        # hermitian pair (i, j) = v, (j, i) = conj(v)
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((v, np.conj(v)))

    dx = curl_difference(nx, grid.spacing).tocoo()
    c_curl = 1.0 / math.sqrt(ref.eps0 * ref.mu0)
    e0 = layout.index("u", 0, "electric")
    h0 = layout.index("u", 0, "magnetic")
    for i, j, v in zip(dx.row, dx.col, dx.data):
        # only the (E, H) entries are put; the (H, E) mirror comes from hermiticity
        put(e0 + i, h0 + j, -1j * c_curl * v)

    ddiss = np.zeros(d)
    for branch, l in layout.rate_blocks:
        field0 = layout.index("u", 0, branch)
        rate0 = layout.index("rate", 0, branch, l)
        aux0 = layout.block_index.get(("aux", branch, l))
        for q, m in enumerate(media):
            pole = m.poles(branch)[l]
            put(field0 + q, rate0 + q, -1j * pole.big_omega)
            if aux0 is not None:
                put(aux0 + q, rate0 + q, 1j * pole.resonance)
            ddiss[rate0 + q] = 2.0 * pole.damping

    d0 = sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(d, d)
    )
    d0.sum_duplicates()
    return GeneratorPair(d0=d0, ddiss=ddiss, layout=layout)


def encode_initial_state(
    e_field, h_field, layout: StateLayout, medium: MediumInput
) -> StateVector:
    """
    Dyson-weight ``(E, H)`` into a unit-norm register state.

    Auxiliary and padding amplitudes are zero.  ``norm_scale`` is the initial
    energy ``spacing * sum(eps0*E**2 + mu0*H**2)``.
    """
    ref = _per_cell(medium, layout.cells)[0]
    e = np.asarray(e_field, dtype=float)
    h = np.asarray(h_field, dtype=float)
    if e.shape != (layout.cells,) or h.shape != (layout.cells,):
        raise ValueError(f"field arrays must have length {layout.cells}")

    psi = np.zeros(layout.d, dtype=complex)
    nx = layout.cells
    e0, h0 = layout.index("u", 0, "electric"), layout.index("u", 0, "magnetic")
    psi[e0 : e0 + nx] = math.sqrt(ref.eps0) * e
    psi[h0 : h0 + nx] = math.sqrt(ref.mu0) * h
    density = float(np.vdot(psi, psi).real)
    if density == 0.0:
        raise ZeroField("initial E and H are identically zero")
    return StateVector(psi / math.sqrt(density), norm_scale=density * layout.spacing)


def observables(psi: StateVector, layout: StateLayout, medium: MediumInput) -> dict:
    """
    Energies and polarization/magnetization of a (possibly unnormalized) state.

    Returns ``E_total``, ``E_el`` (J per unit transverse area in the 1D
    reduction) and per-cell arrays ``P``, ``M``.  Drude poles carry no
    displacement coordinate, so they do not contribute to ``P``/``M``.
    """
    media = _per_cell(medium, layout.cells)
    a = np.asarray(psi.amplitudes)
    scale = psi.norm_scale
    e_total = 0.5 * scale * float(np.vdot(a, a).real)
    u = a[layout.u_slice]
    e_el = 0.5 * scale * float(np.vdot(u, u).real)

    # amplitude -> physical field: multiply by sqrt(energy density), undo weight
    field_scale = math.sqrt(scale / layout.spacing)
    out = {"electric": np.zeros(layout.cells), "magnetic": np.zeros(layout.cells)}
    for branch, l in layout.aux_blocks:
        start = layout.index("aux", 0, branch, l)
        amp = a[start : start + layout.cells]
        for q, m in enumerate(media):
            base = m.eps0 if branch == "electric" else m.mu0
            pole = m.poles(branch)[l]
            weight = math.sqrt(base) * pole.big_omega * pole.resonance
            aux_field = (amp[q] * field_scale / weight).real
            out[branch][q] += base * pole.big_omega**2 * aux_field
    return {"E_total": e_total, "E_el": e_el, "P": out["electric"], "M": out["magnetic"]}
