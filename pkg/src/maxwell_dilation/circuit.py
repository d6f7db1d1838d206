"""
Statevector engine for the dilated register ``|ancilla> (x) |psi>``.

The ancilla is the most significant qubit, so the top half of the amplitude
vector is the ancilla-0 branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla

from .dilation_kraus import KrausDilation, TwoLevelRotation, apply_rotations
from .dilation_lcu import LcuCircuit
from .gates import DilationCircuit, apply_gates
from .operators import GeneratorPair, StateVector

ZERO_BRANCH = 1e-14
UNITARY_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


class NonUnitaryBlock(ValueError):
    pass


class ZeroProbabilityBranch(RuntimeError):
    """Post-selection on an ancilla outcome that (numerically) never occurs."""


@dataclass
class DilatedState:
    amplitudes: np.ndarray

    @property
    def d(self) -> int:
        return len(self.amplitudes) // 2

    @property
    def top(self) -> np.ndarray:
        return self.amplitudes[: self.d]

    @property
    def bottom(self) -> np.ndarray:
        return self.amplitudes[self.d :]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class MeasurementRecord:
    p0: float
    outcome: Union[int, str]
    post_state: Optional[StateVector]


@dataclass(frozen=True)
class LosslessStep:
    """``exp(-i dt d0)`` with its unitarity residual recorded at construction."""

    matrix: np.ndarray
    dt: float
    residual: float


def lossless_step_operator(gen: GeneratorPair, dt: float) -> LosslessStep:
    """
    Exact lossless step from a Hermitian eigendecomposition of ``d0``.

    Only the physical block is factorized; padding coordinates get the
    identity so they stay exactly zero under evolution.
    """
    layout = gen.layout
    dp = layout.d_physical
    h = gen.d0[:dp, :dp].toarray()
    h = 0.5 * (h + h.conj().T)
    w, v = sla.eigh(h)
    u = np.eye(layout.d, dtype=complex)
    u[:dp, :dp] = (v * np.exp(-1j * dt * w)) @ v.conj().T
    resid = float(np.max(np.abs(u.conj().T @ u - np.eye(layout.d)))) if layout.d <= 2048 else 0.0
    return LosslessStep(matrix=u, dt=float(dt), residual=resid)


def init_dilated(psi: StateVector) -> DilatedState:
    a = np.asarray(psi.amplitudes, dtype=complex)
    return DilatedState(np.concatenate([a, np.zeros_like(a)]))


Program = Union[DilationCircuit, KrausDilation, LcuCircuit, list, tuple]


def apply_program(state: DilatedState, program: Program) -> DilatedState:
    """Apply a gate program or a structured dilation; returns a new state."""
    amps = state.amplitudes
    dim = len(amps)
    if isinstance(program, DilationCircuit):
        if 2**program.qubits != dim:
            raise DimensionMismatch(f"program on {program.qubits} qubits, state dim {dim}")
        return DilatedState(apply_gates(amps, program))
    if isinstance(program, (KrausDilation, LcuCircuit)):
        if 2 * program.d != dim:
            raise DimensionMismatch(f"dilation dim {2 * program.d}, state dim {dim}")
        return DilatedState(program.apply(amps))
    if isinstance(program, (list, tuple)):
        if any(not isinstance(r, TwoLevelRotation) for r in program):
            raise TypeError("sequence programs must hold TwoLevelRotation items")
        if any(r.b >= dim for r in program):
            raise DimensionMismatch("rotation coordinate outside the state")
        return DilatedState(apply_rotations(np.array(amps, dtype=complex), program))
    raise TypeError(f"cannot apply {type(program).__name__}")


def controlled_lossless_step(state: DilatedState, u0) -> DilatedState:
    """Apply ``u0`` on the ancilla-0 branch (open control), bottom untouched."""
    if isinstance(u0, LosslessStep):
        mat, resid = u0.matrix, u0.residual
    else:
        mat = np.asarray(u0)
        resid = float(np.max(np.abs(mat.conj().T @ mat - np.eye(len(mat)))))
    if mat.shape != (state.d, state.d):
        raise DimensionMismatch(f"step is {mat.shape}, branch dim {state.d}")
    if resid > UNITARY_TOL:
        raise NonUnitaryBlock(f"lossless step deviates from unitary by {resid:.3e}")
    out = state.amplitudes.copy()
    out[: state.d] = mat @ out[: state.d]
    return DilatedState(out)


def measure_ancilla(
    state: DilatedState,
    mode: str = "postselect",
    seed=None,
    norm_scale: float = 1.0,
) -> MeasurementRecord:
    """
    Measure the ancilla.

    ``mode="postselect"`` conditions on outcome 0 deterministically.
    ``mode="sample"`` draws the outcome from ``seed`` (an int or a
    ``numpy.random.Generator``) and returns the matching renormalized branch.
    """
    top, bottom = state.top, state.bottom
    total = float(np.vdot(state.amplitudes, state.amplitudes).real)
    p0 = float(np.vdot(top, top).real) / total
    p0 = min(max(p0, 0.0), 1.0)
    if mode == "postselect":
        if p0 < ZERO_BRANCH:
            raise ZeroProbabilityBranch(f"p0 = {p0:.3e}")
        return MeasurementRecord(p0, "post-selected-0",
                                 StateVector(top / math.sqrt(p0 * total), norm_scale))
    if mode == "sample":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        outcome = 0 if rng.random() < p0 else 1
        branch, p = (top, p0) if outcome == 0 else (bottom, 1.0 - p0)
        return MeasurementRecord(p0, outcome, StateVector(branch / math.sqrt(p * total), norm_scale))
    raise ValueError(f"unknown measurement mode {mode!r}")
