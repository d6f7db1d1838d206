"""
Full runs: exact reference propagation and Trotterized dilated stepping.

Rates called ``gamma`` here are the entries of ``ddiss``, i.e. twice the
physical pole damping, so that ``K0**2 = exp(-2 * gamma * dt)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .circuit import (
    apply_program,
    controlled_lossless_step,
    init_dilated,
    lossless_step_operator,
    measure_ancilla,
)
from .dilation_kraus import build_udiss_kraus, kraus_gate_counts, synthesize_gates
from .dilation_lcu import build_lcu_dilation
from .gates import structural_counts
from .kraus import DimensionTooLarge, build_kraus_pair
from .operators import GeneratorPair, StateVector, observables

log = logging.getLogger(__name__)

METHODS = ("kraus", "lcu", "exact", "lossless-exact")
STEPPED = ("kraus", "lcu")
EXACT_LIMIT = 4096
BOUND_SLACK = 1e-12
TROTTER_CHECK_TOL = 1e-9


class NonPositiveRate(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionPlan:
    dt: float
    steps: int
    method: str = "kraus"
    gate_level: bool = False
    measurement: str = "postselect"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.measurement == "sample" and self.seed is None:
            raise ValueError("sampled measurement needs an explicit seed")

    @property
    def t_total(self) -> float:
        return self.steps * self.dt


@dataclass(frozen=True)
class ProbabilityBounds:
    p0min: float
    p0max: float
    gamma_min: float
    gamma_max: float
    dissipative_weight: float

    def contains(self, p0: float, slack: float = BOUND_SLACK) -> bool:
        return self.p0min - slack <= p0 <= self.p0max + slack


@dataclass
class StepRecord:
    step: int
    t: float
    E_total: float
    E_el: float
    P: np.ndarray
    M: np.ndarray
    p0: float
    cumulative_p0: float
    p0min: float = 1.0
    p0max: float = 1.0


@dataclass
class SimulationReport:
    plan: EvolutionPlan
    records: list = field(default_factory=list)
    final_state: Optional[np.ndarray] = None
    cumulative_p0: float = 1.0
    success: bool = True
    failed_at_step: Optional[int] = None
    fidelity: Optional[float] = None
    state_error: Optional[float] = None
    trotter_norm: Optional[float] = None
    trotter_state_error: Optional[float] = None
    gate_counts: Optional[dict] = None
    error_estimate: Optional[dict] = None
    checks: list = field(default_factory=list)

    def add_check(self, name: str, passed: bool, value=None) -> None:
        self.checks.append({"name": name, "passed": bool(passed), "value": value})

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def exact_propagator(gen: GeneratorPair, t: float) -> np.ndarray:
    """Dense ``exp(-i t (d0 - i ddiss))`` by scaling and squaring (Pade)."""
    if gen.d > EXACT_LIMIT:
        raise DimensionTooLarge(f"exact propagator limited to d <= {EXACT_LIMIT}, got {gen.d}")
    return sla.expm(-1j * t * gen.full_generator())


def trotter_step_matrix(gen: GeneratorPair, dt: float) -> np.ndarray:
    """Dense ``exp(-i dt d0) K0`` built independently of the circuit path."""
    if gen.d > EXACT_LIMIT:
        raise DimensionTooLarge(f"dense Trotter step limited to d <= {EXACT_LIMIT}")
    u0 = sla.expm(-1j * dt * gen.d0_dense())
    return u0 * np.exp(-dt * gen.ddiss)[None, :]


def probability_bounds(psi0: StateVector, gen: GeneratorPair, dt: float) -> ProbabilityBounds:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    a = np.asarray(psi0.amplitudes)
    sl = gen.layout.dissipative_slice
    total = float(np.vdot(a, a).real)
    w = float(np.vdot(a[sl], a[sl]).real) / total if total > 0 else 0.0
    rates = gen.rates
    gmin = float(rates.min()) if rates.size else 0.0
    gmax = float(rates.max()) if rates.size else 0.0
    return ProbabilityBounds(
        p0min=1.0 + math.expm1(-2.0 * gmax * dt) * w,
        p0max=1.0 + math.expm1(-2.0 * gmin * dt) * w,
        gamma_min=gmin,
        gamma_max=gmax,
        dissipative_weight=w,
    )


def optimal_dt(gamma_min: float, gamma_max: float, c: float = 0.1) -> float:
    """
    Step maximizing the gap between the success-probability bounds.

    For equal rates the gap vanishes and ``c / (2 gamma)`` is returned with a
    user-chosen fraction ``c``.
    """
    if not (gamma_min > 0 and gamma_max > 0):
        raise NonPositiveRate(f"rates must be positive, got {gamma_min}, {gamma_max}")
    if gamma_min > gamma_max:
        raise ValueError("gamma_min must not exceed gamma_max")
    if gamma_min == gamma_max:
        if not 0 < c < 1:
            raise ValueError(f"fraction c must lie in (0, 1), got {c}")
        return c / (2.0 * gamma_min)
    return gap_maximizer(gamma_min, gamma_max)


def gap_maximizer(gamma_min: float, gamma_max: float) -> float:
    """``ln(gmin/gmax) / (2 (gmin - gmax))`` evaluated without cancellation."""
    diff = gamma_max - gamma_min
    return math.log1p(diff / gamma_min) / (2.0 * diff)


def measured_error(gen: GeneratorPair, dt: float, steps: int) -> float:
    """Operator 2-norm ``||U(t) - (exp(-i dt d0) K0)**steps||``."""
    exact = exact_propagator(gen, dt * steps)
    trot = np.linalg.matrix_power(trotter_step_matrix(gen, dt), steps)
    return float(np.linalg.norm(exact - trot, 2))


def error_estimate(
    plan: EvolutionPlan,
    gamma_min: float,
    gamma_max: float,
    gen: Optional[GeneratorPair] = None,
) -> dict:
    """
    Analytic error scale and, when ``gen`` is dense-tractable, the measured one.

    With distinct rates the analytic value is ``t_total * dt_opt``; with equal
    rates it is the bound ``t_total / (2 gamma)``.  Both are order estimates
    without a known constant.
    """
    if not (gamma_min > 0 and gamma_max > 0):
        raise NonPositiveRate(f"rates must be positive, got {gamma_min}, {gamma_max}")
    if gamma_min == gamma_max:
        out = {"form": "homogeneous", "analytic": plan.t_total / (2.0 * gamma_max)}
    else:
        out = {"form": "distinct", "analytic": plan.t_total * gap_maximizer(gamma_min, gamma_max)}
    out["norm"] = "operator 2-norm"
    out["measured"] = None
    if gen is not None and gen.d <= EXACT_LIMIT:
        out["measured"] = measured_error(gen, plan.dt, plan.steps)
    return out


def build_step_program(gen: GeneratorPair, plan: EvolutionPlan):
    """Dilation program for one step of ``plan`` plus the lossless step."""
    pair = build_kraus_pair(gen, plan.dt)
    if plan.method == "kraus":
        dil = build_udiss_kraus(pair)
        program = synthesize_gates(dil.rotations, dil.qubits) if plan.gate_level else dil
        counts = kraus_gate_counts(pair)
    elif plan.method == "lcu":
        dil = build_lcu_dilation(pair)
        prog = dil.program()
        program = prog if plan.gate_level else dil
        counts = structural_counts(prog)
    else:
        raise ValueError(f"{plan.method} is not a stepped method")
    return pair, program, counts


def _snapshot(step, t, amps, scale, cum, p0, bounds, layout, medium) -> StepRecord:
    unnorm = StateVector(amps * math.sqrt(cum), scale)
    obs = observables(unnorm, layout, medium) if medium is not None else {
        "E_total": 0.5 * scale * cum,
        "E_el": 0.5 * scale * cum * float(np.vdot(amps[layout.u_slice], amps[layout.u_slice]).real),
        "P": np.zeros(layout.cells),
        "M": np.zeros(layout.cells),
    }
    return StepRecord(step, t, obs["E_total"], obs["E_el"], obs["P"], obs["M"], p0, cum,
                      bounds.p0min if bounds else 1.0, bounds.p0max if bounds else 1.0)


def trotter_run(
    psi0: StateVector,
    plan: EvolutionPlan,
    gen: GeneratorPair,
    medium=None,
    program=None,
    oracle: bool = True,
) -> SimulationReport:
    """
    Step ``psi0`` through ``plan.steps`` Trotter steps.

    Stepped methods apply the dilation, then the ancilla-0-controlled lossless
    step, then measure the ancilla.  ``exact`` applies the dense propagator of
    the full generator per step and ``lossless-exact`` only ``exp(-i dt d0)``.
    ``medium`` enables the polarization/magnetization columns.
    """
    layout = gen.layout
    report = SimulationReport(plan=plan)
    amps = np.asarray(psi0.amplitudes, dtype=complex)
    amps = amps / np.linalg.norm(amps)
    scale = psi0.norm_scale
    cum = 1.0
    report.records.append(_snapshot(0, 0.0, amps, scale, cum, 1.0, None, layout, medium))
    u0 = lossless_step_operator(gen, plan.dt)
    report.add_check("lossless step unitary", u0.residual < 1e-12, u0.residual)

    if plan.method in STEPPED:
        pair, prog, counts = build_step_program(gen, plan)
        if program is not None:
            prog = program
        report.gate_counts = counts
        rng = np.random.default_rng(plan.seed) if plan.measurement == "sample" else None
        bounds_ok = True
        for k in range(1, plan.steps + 1):
            bounds = probability_bounds(StateVector(amps), gen, plan.dt)
            state = apply_program(init_dilated(StateVector(amps)), prog)
            state = controlled_lossless_step(state, u0)
            rec = measure_ancilla(state, plan.measurement, seed=rng)
            bounds_ok &= bounds.contains(rec.p0)
            if rec.outcome == 1:
                report.success = False
                report.failed_at_step = k
                log.info("ancilla measured 1 at step %d, trajectory discarded", k)
                break
            amps = rec.post_state.amplitudes
            cum *= rec.p0
            report.records.append(
                _snapshot(k, k * plan.dt, amps, scale, cum, rec.p0, bounds, layout, medium)
            )
        report.add_check("p0 within bounds", bounds_ok)
    else:
        if plan.method == "exact":
            step = exact_propagator(gen, plan.dt)
        else:
            step = u0.matrix
        for k in range(1, plan.steps + 1):
            nxt = step @ amps
            p0 = float(np.vdot(nxt, nxt).real)
            amps = nxt / math.sqrt(p0)
            cum *= p0
            report.records.append(_snapshot(k, k * plan.dt, amps, scale, cum, p0, None, layout, medium))

    cums = [r.cumulative_p0 for r in report.records]
    report.add_check("cumulative p0 non-increasing",
                     all(b <= a * (1 + 1e-12) for a, b in zip(cums, cums[1:])))
    pad = layout.padding_slice
    leak = float(np.max(np.abs(amps[pad]))) if layout.d > layout.d_physical else 0.0
    report.add_check("padding amplitudes zero", leak == 0.0, leak)
    report.final_state = amps
    report.cumulative_p0 = cum

    if oracle and report.success and gen.d <= EXACT_LIMIT and plan.method != "lossless-exact":
        _compare_with_oracle(report, psi0, gen, plan)
    return report


def _compare_with_oracle(report, psi0, gen, plan) -> None:
    start = np.asarray(psi0.amplitudes, dtype=complex)
    start = start / np.linalg.norm(start)
    steps_done = len(report.records) - 1
    exact = exact_propagator(gen, steps_done * plan.dt) @ start
    exact_n = exact / np.linalg.norm(exact)
    final = report.final_state
    report.fidelity = float(abs(np.vdot(exact_n, final)) ** 2)
    report.state_error = float(np.linalg.norm(final - exact_n))

    if plan.method in STEPPED:
        trot = np.linalg.matrix_power(trotter_step_matrix(gen, plan.dt), steps_done) @ start
        report.trotter_norm = float(np.vdot(trot, trot).real)
        trot_n = trot / math.sqrt(report.trotter_norm)
        report.trotter_state_error = float(np.linalg.norm(final - trot_n))
        rel = abs(report.cumulative_p0 - report.trotter_norm) / max(report.trotter_norm, 1e-300)
        report.add_check("cumulative p0 matches Trotter product norm", rel < TROTTER_CHECK_TOL, rel)
        report.add_check("state matches Trotter product", report.trotter_state_error < TROTTER_CHECK_TOL,
                         report.trotter_state_error)
