"""
LCU dilation of ``K0 = (K0z + K0z^dag) / 2``.

``K0z`` is diagonal with ``exp(-i theta_l / 2)`` on the dissipative
coordinates.  The select operator ``diag(K0z, K0z^dag)`` is sandwiched
between Hadamards on the ancilla; its phases are synthesized as a product of
parity rotations ``exp(i alpha_S Z_S)``, one ``rz`` per nonzero Walsh
coefficient, with the CNOT ladders for each target qubit ordered along a Gray
code so that consecutive parities differ by one CNOT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gates import DilationCircuit, Gate
from .kraus import KrausPair

ELIDE_ANGLE = 1e-15


@dataclass
class LcuCircuit:
    """Prepare (H), select (diagonal phases), unprepare (H) on ``qubits``."""

    k0z_diag: np.ndarray
    select_diag: np.ndarray
    qubits: int
    _synth: Optional[DilationCircuit] = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return len(self.k0z_diag)

    @property
    def synthesized(self) -> DilationCircuit:
        """Gate program of the diagonal select operator alone."""
        if self._synth is None:
            self._synth = synthesize_diagonal(self.select_diag)
        return self._synth

    def program(self) -> DilationCircuit:
        """Full ``H . select . H`` program; empty when select is trivial."""
        sel = self.synthesized
        circ = DilationCircuit(self.qubits, global_phase=sel.global_phase)
        if not sel.gates:
            # H . (phase * I) . H is the same global phase
            return circ
        circ.append(Gate("h", (0,)))
        circ.gates.extend(sel.gates)
        circ.append(Gate("h", (0,)))
        return circ

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Structured action: Hadamard, diagonal multiply, Hadamard."""
        d = self.d
        out = np.array(state, dtype=complex)
        sel = self.select_diag if out.ndim == 1 else self.select_diag[:, None]
        _hadamard_ancilla(out, d)
        out *= sel
        _hadamard_ancilla(out, d)
        return out

    def to_dense(self) -> np.ndarray:
        return self.apply(np.eye(2 * self.d, dtype=complex))


def _hadamard_ancilla(x: np.ndarray, d: int) -> None:
    top = x[:d].copy()
    bot = x[d:]
    x[:d] = (top + bot) / math.sqrt(2)
    x[d:] = (top - bot) / math.sqrt(2)


def build_lcu_dilation(pair: KrausPair) -> LcuCircuit:
    d = pair.d
    k0z = np.ones(d, dtype=complex)
    k0z[pair.dissipative] = np.exp(-0.5j * pair.thetas)
    select = np.concatenate([k0z, k0z.conj()])
    qubits = int(round(math.log2(2 * d)))
    return LcuCircuit(k0z_diag=k0z, select_diag=select, qubits=qubits)


def walsh_coefficients(phases: np.ndarray) -> np.ndarray:
    """``alpha[S] = mean_x phases[x] * (-1)**popcount(x & S)``."""
    a = np.array(phases, dtype=float)
    n = len(a)
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(-1)
        h *= 2
    return a / n


def synthesize_diagonal(select_diag, elide: float = ELIDE_ANGLE) -> DilationCircuit:
    """
    CNOT/``rz`` program equal to ``diag(select_diag)`` including global phase.

    Rotations with ``|angle| < elide`` are dropped and the CNOTs between two
    kept rotations on the same target are reduced modulo 2 (they commute).
    """
    diag = np.asarray(select_diag, dtype=complex)
    dim = len(diag)
    nq = int(round(math.log2(dim)))
    if 2**nq != dim:
        raise ValueError("diagonal length must be a power of two")
    mags = np.abs(diag)
    if np.max(np.abs(mags - 1)) > 1e-12:
        raise ValueError("select diagonal must have unit-modulus entries")

    alpha = walsh_coefficients(np.angle(diag))
    circ = DilationCircuit(nq, global_phase=float(alpha[0]))

    def mask(q):
        return 1 << (nq - 1 - q)

    for t in range(nq):
        k = t  # controls are the more significant qubits 0..t-1
        pending: set = set()
        gray = [i ^ (i >> 1) for i in range(2**k)]
        for i, g in enumerate(gray):
            subset = mask(t)
            for j in range(k):
                if g >> j & 1:
                    subset |= mask(j)
            theta = -2.0 * alpha[subset]
            if abs(theta) >= elide:
                for c in sorted(pending):
                    circ.append(Gate("cx", (c, t)))
                pending.clear()
                circ.append(Gate("rz", (t,), float(theta)))
            if k:
                flip = (g ^ gray[(i + 1) % len(gray)]).bit_length() - 1
                pending ^= {flip}
        for c in sorted(pending):
            circ.append(Gate("cx", (c, t)))
    return circ
