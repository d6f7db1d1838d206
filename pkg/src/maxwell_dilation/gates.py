"""
Gate programs on ``nq`` qubits and their expansion into CNOT + one-qubit gates.

Qubit 0 is the most significant bit of a register coordinate, so the ancilla
of a dilation is qubit 0.  Programs may hold composite gates (``mcx``,
``mcry``, ``ccx``) and dense fallback blocks (``unitary``); ``expand`` lowers
composites to the elementary alphabet ``{x, h, rx, ry, rz, cx}``.

Multi-controlled expansions (ancilla-free, standard constructions):

* ``ccx``: 6 CNOTs, 2 Hadamards and 7 ``rz(+-pi/4)``; the ``T = e^{i pi/8} Rz(pi/4)``
  phases are accumulated in ``global_phase``.
* ``mcx`` with ``m`` controls: direct for ``m <= 2``; with ``m - 2`` borrowed
  (dirty) qubits a V-chain of ``4(m - 2)`` Toffolis; with a single borrowed
  qubit the controls are split in two halves and four V-chains are used.
* ``mcry`` with ``k`` controls and no free qubit: since ``Ry`` is in SU(2),
  ``C^k Ry(t) = C Ry(t/2) . C^{k-1}X . C Ry(-t/2) . C^{k-1}X`` where the single
  control is the last one and is borrowed by the ``C^{k-1}X`` ladders, giving
  a cost linear in ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

SINGLE = frozenset({"x", "h", "rx", "ry", "rz"})
ELEMENTARY = SINGLE | {"cx"}


class Gate(NamedTuple):
    """
    One instruction.

    ``qubits`` lists controls first and the target last for controlled gates.
    ``ctrl_state`` is a bit string over the controls (``"1"`` = ordinary
    control, ``"0"`` = open control); ``None`` means all ones.  For
    ``unitary`` blocks ``matrix`` holds the dense operator on ``qubits``.
    """

    name: str
    qubits: tuple
    angle: float = 0.0
    ctrl_state: Optional[str] = None
    matrix: Optional[np.ndarray] = None


@dataclass
class DilationCircuit:
    """Ordered gate program; ``global_phase`` makes the product exact."""

    qubits: int
    gates: list = field(default_factory=list)
    global_phase: float = 0.0

    def append(self, gate: Gate) -> None:
        self.gates.append(gate)

    def extend(self, other: "DilationCircuit") -> None:
        if other.qubits != self.qubits:
            raise ValueError("qubit counts differ")
        self.gates.extend(other.gates)
        self.global_phase += other.global_phase

    def expand(self) -> "DilationCircuit":
        out = _Emitter(self.qubits)
        out.phase = self.global_phase
        for g in self.gates:
            out.lower(g)
        return DilationCircuit(self.qubits, out.gates, out.phase)

    @property
    def counts(self) -> dict:
        """Elementary gate counts after expansion."""
        circ = self if all(g.name in ELEMENTARY for g in self.gates) else self.expand()
        cnot = sum(1 for g in circ.gates if g.name == "cx")
        return {"cnot_count": cnot, "rotation_count": len(circ.gates) - cnot}

    def to_matrix(self) -> np.ndarray:
        """Dense product of the program (small ``qubits`` only)."""
        dim = 2**self.qubits
        return apply_gates(np.eye(dim, dtype=complex), self)

    def export_text(self) -> str:
        """Line listing: gate name, qubits, angle with 17 significant digits."""
        circ = self if all(g.name in ELEMENTARY for g in self.gates) else self.expand()
        lines = [f"qubits {circ.qubits}", f"global_phase {circ.global_phase:.17g}"]
        for g in circ.gates:
            if g.name == "unitary":
                raise ValueError("dense blocks have no text form")
            qs = " ".join(str(q) for q in g.qubits)
            if g.name in {"rx", "ry", "rz"}:
                lines.append(f"{g.name} {qs} {g.angle:.17g}")
            else:
                lines.append(f"{g.name} {qs}")
        return "\n".join(lines) + "\n"


def parse_circuit_text(text: str) -> DilationCircuit:
    """Inverse of :meth:`DilationCircuit.export_text`."""
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    nq = int(rows[0][1])
    circ = DilationCircuit(nq, global_phase=float(rows[1][1]))
    for row in rows[2:]:
        name = row[0]
        if name in {"rx", "ry", "rz"}:
            circ.append(Gate(name, (int(row[1]),), float(row[2])))
        else:
            circ.append(Gate(name, tuple(int(q) for q in row[1:])))
    return circ


# --- one-qubit matrices ---------------------------------------------------

def gate_matrix(name: str, angle: float = 0.0) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if name == "x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if name == "h":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if name == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if name == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    raise ValueError(f"not a one-qubit gate: {name}")


# --- expansion ------------------------------------------------------------

class _Emitter:
    """Collects (or only tallies) elementary gates during expansion."""

    def __init__(self, nq: int, count_only: bool = False):
        self.nq = nq
        self.count_only = count_only
        self.gates: list = []
        self.n_cx = 0
        self.n_1q = 0
        self.phase = 0.0

    def emit(self, name, qubits, angle=0.0):
        if name == "cx":
            self.n_cx += 1
        else:
            self.n_1q += 1
        if not self.count_only:
            self.gates.append(Gate(name, tuple(qubits), float(angle)))

    def lower(self, g: Gate) -> None:
        if g.name in ELEMENTARY:
            self.emit(g.name, g.qubits, g.angle)
        elif g.name == "ccx":
            self.toffoli(*g.qubits)
        elif g.name in {"mcx", "mcry"}:
            *controls, target = g.qubits
            flips = _open_controls(controls, g.ctrl_state)
            for q in flips:
                self.emit("x", (q,))
            if g.name == "mcx":
                free = [q for q in range(self.nq) if q not in g.qubits]
                self.mcx(list(controls), target, free)
            else:
                self.mc_ry(list(controls), target, g.angle)
            for q in flips:
                self.emit("x", (q,))
        elif g.name == "unitary":
            if self.count_only:
                raise ValueError("dense blocks have no elementary count")
            self.gates.append(g)
        else:
            raise ValueError(f"unknown gate {g.name}")

    def toffoli(self, c1, c2, t):
        e = self.emit
        e("h", (t,))
        e("cx", (c2, t)); e("rz", (t,), -math.pi / 4)
        e("cx", (c1, t)); e("rz", (t,), math.pi / 4)
        e("cx", (c2, t)); e("rz", (t,), -math.pi / 4)
        e("cx", (c1, t)); e("rz", (c2,), math.pi / 4); e("rz", (t,), math.pi / 4)
        e("h", (t,))
        e("cx", (c1, c2)); e("rz", (c1,), math.pi / 4); e("rz", (c2,), -math.pi / 4)
        e("cx", (c1, c2))
        # four T and three T^dag, each T = e^{i pi/8} rz(pi/4)
        self.phase += math.pi / 8

    def mcx(self, controls: list, target: int, free: list) -> None:
        m = len(controls)
        if m == 0:
            self.emit("x", (target,))
        elif m == 1:
            self.emit("cx", (controls[0], target))
        elif m == 2:
            self.toffoli(controls[0], controls[1], target)
        elif len(free) >= m - 2:
            self._vchain(controls, free[: m - 2], target)
        elif free:
            spare, rest = free[0], free[1:]
            m1 = (m + 1) // 2
            a, b = controls[:m1], controls[m1:]
            for _ in range(2):
                self.mcx(a, spare, b + [target] + rest)
                self.mcx(b + [spare], target, a + rest)
        else:
            raise ValueError(f"{m}-controlled X on {self.nq} qubits needs a free qubit")

    def _vchain(self, c: list, a: list, t: int) -> None:
        # borrowed qubits a[i] end in their initial state
        m = len(c)
        tof = self.toffoli
        middle_down = [(c[i + 1], a[i - 1], a[i]) for i in range(m - 3, 0, -1)]
        middle_up = middle_down[::-1]
        first = (c[0], c[1], a[0])
        tof(c[m - 1], a[m - 3], t)
        for args in middle_down:
            tof(*args)
        tof(*first)
        for args in middle_up:
            tof(*args)
        tof(c[m - 1], a[m - 3], t)
        for args in middle_down:
            tof(*args)
        tof(*first)
        for args in middle_up:
            tof(*args)

    def c_ry(self, control, target, theta):
        self.emit("ry", (target,), theta / 2)
        self.emit("cx", (control, target))
        self.emit("ry", (target,), -theta / 2)
        self.emit("cx", (control, target))

    def mc_ry(self, controls: list, target: int, theta: float) -> None:
        k = len(controls)
        if k == 0:
            self.emit("ry", (target,), theta)
            return
        if k == 1:
            self.c_ry(controls[0], target, theta)
            return
        # Ry is in SU(2): Ry(t/2) X Ry(-t/2) X = Ry(t), so only the last
        # control gates the half rotations and it is free for the X ladders
        head, last = controls[:-1], controls[-1]
        free = [q for q in range(self.nq) if q not in controls and q != target] + [last]
        self.mcx(head, target, free)
        self.c_ry(last, target, -theta / 2)
        self.mcx(head, target, free)
        self.c_ry(last, target, theta / 2)

def _open_controls(controls, ctrl_state) -> list:
    if ctrl_state is None:
        return []
    if len(ctrl_state) != len(controls):
        raise ValueError("ctrl_state length must match the number of controls")
    return [q for q, bit in zip(controls, ctrl_state) if bit == "0"]


@lru_cache(maxsize=None)
def composite_counts(name: str, n_controls: int, nq: int) -> tuple[int, int]:
    """``(cnot, one_qubit)`` counts of an all-ones composite, by structure only."""
    em = _Emitter(nq, count_only=True)
    controls = list(range(n_controls))
    target = n_controls
    if name == "mcry":
        em.mc_ry(controls, target, 1.0)
    elif name == "mcx":
        em.mcx(controls, target, list(range(n_controls + 1, nq)))
    else:
        raise ValueError(name)
    return em.n_cx, em.n_1q


def structural_counts(circ: DilationCircuit) -> dict:
    """Counts without materializing the expansion (composites are cached)."""
    cnot = one = 0
    for g in circ.gates:
        if g.name == "cx":
            cnot += 1
        elif g.name in SINGLE:
            one += 1
        elif g.name == "ccx":
            cnot += 6
            one += 9
        elif g.name in {"mcx", "mcry"}:
            nc = len(g.qubits) - 1
            c, o = composite_counts(g.name, nc, circ.qubits)
            cnot += c
            one += o + 2 * len(_open_controls(g.qubits[:-1], g.ctrl_state))
        else:
            raise ValueError(f"no structural count for {g.name}")
    return {"cnot_count": cnot, "rotation_count": one}


# --- application ----------------------------------------------------------

def _as_tensor(state: np.ndarray, nq: int) -> np.ndarray:
    return state.reshape((2,) * nq + (-1,))


def apply_gate(state: np.ndarray, gate: Gate, nq: int) -> np.ndarray:
    """Apply ``gate`` in place to ``state`` of shape ``(2**nq, batch)``."""
    t = _as_tensor(state, nq)
    if gate.name in SINGLE:
        q = gate.qubits[0]
        u = gate_matrix(gate.name, gate.angle)
        view = state.reshape(2**q, 2, -1)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
        view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
        return state
    if gate.name == "cx":
        c, tq = gate.qubits
        i0 = [slice(None)] * nq
        i1 = [slice(None)] * nq
        i0[c] = i1[c] = 1
        i0[tq], i1[tq] = 0, 1
        i0, i1 = tuple(i0), tuple(i1)
        tmp = t[i0].copy()
        t[i0] = t[i1]
        t[i1] = tmp
        return state
    if gate.name == "unitary":
        qs = list(gate.qubits)
        k = len(qs)
        rest = [q for q in range(nq) if q not in qs]
        perm = qs + rest + [nq]
        moved = np.transpose(t, perm).reshape(2**k, -1)
        moved = gate.matrix @ moved
        back = moved.reshape((2,) * nq + (t.shape[-1],))
        t[...] = np.transpose(back, np.argsort(perm))
        return state
    raise ValueError(f"expand {gate.name} before applying it")


def apply_gates(state: np.ndarray, circ: DilationCircuit) -> np.ndarray:
    """Return ``e^{i phase} * program @ state`` (input is not modified)."""
    vec = state.ndim == 1
    out = np.array(state, dtype=complex).reshape(2**circ.qubits, -1)
    prog = circ if all(g.name in ELEMENTARY | {"unitary"} for g in circ.gates) else circ.expand()
    for g in prog.gates:
        apply_gate(out, g, circ.qubits)
    out *= np.exp(1j * prog.global_phase)
    return out.reshape(-1) if vec else out


def equal_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise error after aligning the global phase of ``a`` to ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[k]) == 0:
        return float(np.max(np.abs(a - b)))
    phase = b[k] / a[k]
    phase /= abs(phase)
    return float(np.max(np.abs(a * phase - b)))


def bits_of(index: int, nq: int) -> list:
    """Bits of a coordinate, qubit 0 first (most significant)."""
    return [(index >> (nq - 1 - q)) & 1 for q in range(nq)]
