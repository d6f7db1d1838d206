"""
Single-ancilla unitary dilation of ``K0``.

The dilation is a product of commuting two-level y-rotations: dissipative
coordinate ``a`` (ancilla 0) is rotated against its ``K1`` target ``b``
(ancilla 1) by ``theta`` with ``cos(theta/2) = Gamma``.  Everything else is
the identity, so the ancilla-0 block is ``K0`` and the lower-left block is
``K1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gates import DilationCircuit, Gate, bits_of, structural_counts
from .kraus import KrausPair

ELIDE_ANGLE = 1e-15


class StructureViolation(ValueError):
    """Matrix is not a product of disjoint two-level y-rotations."""


@dataclass(frozen=True)
class TwoLevelRotation:
    """``[[cos, -sin], [sin, cos]]`` of half-angle ``angle/2`` on coordinates ``(a, b)``."""

    a: int
    b: int
    angle: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got ({self.a}, {self.b})")

    def to_dense(self, dim: int) -> np.ndarray:
        u = np.eye(dim, dtype=complex)
        c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
        u[self.a, self.a] = u[self.b, self.b] = c
        u[self.a, self.b] = -s
        u[self.b, self.a] = s
        return u


@dataclass(frozen=True)
class KrausDilation:
    """Structured ``2d x 2d`` dilation; applied pairwise, never stored densely."""

    d: int
    rotations: tuple

    @property
    def dim(self) -> int:
        return 2 * self.d

    @property
    def qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    def apply(self, state: np.ndarray) -> np.ndarray:
        out = np.array(state, dtype=complex)
        return apply_rotations(out, self.rotations)

    def to_dense(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=complex)
        return apply_rotations(u, self.rotations)


def apply_rotations(state: np.ndarray, rotations: Sequence[TwoLevelRotation]) -> np.ndarray:
    """In-place pairwise update; ``state`` may carry a trailing batch axis."""
    if not rotations:
        return state
    a = np.fromiter((r.a for r in rotations), dtype=np.int64, count=len(rotations))
    b = np.fromiter((r.b for r in rotations), dtype=np.int64, count=len(rotations))
    th = np.fromiter((r.angle for r in rotations), dtype=float, count=len(rotations))
    c, s = np.cos(th / 2), np.sin(th / 2)
    if state.ndim == 2:
        c, s = c[:, None], s[:, None]
    xa, xb = state[a].copy(), state[b].copy()
    state[a] = c * xa - s * xb
    state[b] = s * xa + c * xb
    return state


def build_udiss_kraus(pair: KrausPair) -> KrausDilation:
    d = pair.d
    rots = tuple(
        TwoLevelRotation(int(a), d + int(b), float(th))
        for a, b, th in zip(pair.dissipative, pair.k1_targets, pair.thetas)
    )
    return KrausDilation(d=d, rotations=rots)


def decompose_two_level(u, atol: float = 1e-12) -> list:
    """
    Split a dilation into its two-level rotations.

    A :class:`KrausDilation` yields its ``r`` rotations directly.  A dense
    matrix is parsed: every off-diagonal pair must form a real rotation block
    on disjoint coordinates, with the identity elsewhere.
    """
    if isinstance(u, KrausDilation):
        return list(u.rotations)
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise StructureViolation("expected a square matrix")
    dim = u.shape[0]
    off = np.abs(u - np.diag(np.diag(u))) > atol
    rows, cols = np.nonzero(off)
    partner: dict = {}
    for i, j in zip(rows, cols):
        if partner.setdefault(int(j), int(i)) != i:
            raise StructureViolation(f"column {j} couples to more than one coordinate")
    rots = []
    seen = set()
    for j, i in partner.items():
        if partner.get(i) != j:
            raise StructureViolation(f"coupling {i}<->{j} is not symmetric in support")
        a, b = min(i, j), max(i, j)
        if (a, b) in seen:
            continue
        seen.add((a, b))
        block = u[np.ix_([a, b], [a, b])]
        c, s = block[0, 0].real, block[1, 0].real
        expect = np.array([[c, -s], [s, c]])
        if np.max(np.abs(block - expect)) > atol or abs(c * c + s * s - 1) > atol:
            raise StructureViolation(f"block ({a}, {b}) is not a real y-rotation")
        rots.append(TwoLevelRotation(a, b, 2.0 * math.atan2(s, c)))
    touched = {k for r in rots for k in (r.a, r.b)}
    for k in range(dim):
        if k not in touched and abs(u[k, k] - 1) > atol:
            raise StructureViolation(f"diagonal entry {k} is not 1")
    rots.sort(key=lambda r: r.a)
    return rots


def synthesize_gates(rotations: Sequence[TwoLevelRotation], qubits: int) -> DilationCircuit:
    """
    Gate program for a product of two-level y-rotations.

    For a pair ``(a, b)`` let ``p`` be the most significant differing bit.
    CNOTs controlled on ``p`` and targeting every other differing bit map
    ``b`` next to ``a``; a y-rotation on ``p`` controlled on all remaining
    qubits (open where ``a`` has a 0) then acts on the pair only, and the
    CNOTs are undone.  Rotations with ``|angle| < 1e-15`` are dropped.
    """
    circ = DilationCircuit(qubits)
    dim = 2**qubits
    for rot in rotations:
        if not (0 <= rot.a < rot.b < dim):
            raise ValueError(f"rotation ({rot.a}, {rot.b}) outside {qubits} qubits")
        if abs(rot.angle) < ELIDE_ANGLE:
            continue
        bits_a = bits_of(rot.a, qubits)
        bits_b = bits_of(rot.b, qubits)
        differ = [q for q in range(qubits) if bits_a[q] != bits_b[q]]
        pivot, relays = differ[0], differ[1:]
        # a < b, so a has 0 on the pivot and b has 1
        for q in relays:
            circ.append(Gate("cx", (pivot, q)))
        controls = [q for q in range(qubits) if q != pivot]
        ctrl_state = "".join(str(bits_a[q]) for q in controls)
        circ.append(Gate("mcry", tuple(controls) + (pivot,), rot.angle, ctrl_state))
        for q in reversed(relays):
            circ.append(Gate("cx", (pivot, q)))
    return circ


def kraus_gate_counts(pair: KrausPair) -> dict:
    """Elementary counts of the synthesized Kraus dilation, by structure."""
    dil = build_udiss_kraus(pair)
    return structural_counts(synthesize_gates(dil.rotations, dil.qubits))
