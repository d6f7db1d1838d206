"""Scenario execution behind the command line: run, verify, sweep, resources."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import (
    apply_program,
    controlled_lossless_step,
    init_dilated,
    lossless_step_operator,
    measure_ancilla,
)
from .config import RunConfig, ValidationError
from .dilation_kraus import build_udiss_kraus, kraus_gate_counts, synthesize_gates
from .dilation_lcu import build_lcu_dilation
from .evolution import (
    EXACT_LIMIT,
    EvolutionPlan,
    NonPositiveRate,
    error_estimate,
    measured_error,
    trotter_run,
    trotter_step_matrix,
)
from .gates import structural_counts
from .kraus import DimensionTooLarge, build_kraus_pair
from .medium import MediumSpec
from .operators import GridSpec, StateVector, build_generators, build_layout, encode_initial_state
from .report import record_rows, report_to_dict, write_atomic, write_json, write_table

log = logging.getLogger(__name__)

MEASURED_LIMIT = 1024
DENSE_VERIFY_LIMIT = 256
MAX_RESOURCE_QUBITS = 12


@dataclass
class Problem:
    grid: GridSpec
    media: list
    layout: object
    gen: object
    psi0: StateVector


def build_problem(config: RunConfig) -> Problem:
    media = config.media()
    layout = build_layout(config.grid, media)
    gen = build_generators(layout, config.grid, media)
    psi0 = encode_initial_state(config.e_field, config.h_field, layout, media)
    return Problem(config.grid, media, layout, gen, psi0)


def _estimate(gen, plan: EvolutionPlan):
    rates = gen.rates
    if rates.size == 0 or rates.min() <= 0:
        return None
    return error_estimate(plan, float(rates.min()), float(rates.max()),
                          gen if gen.d <= MEASURED_LIMIT else None)


def run_scenario(config: RunConfig, write: bool = True):
    """Run the configured plan, write the configured outputs, return the report."""
    prob = build_problem(config)
    plan = config.plan
    log.info("running %s: d=%d, n=%d, r=%d, dt=%.6g, steps=%d",
             plan.method, prob.layout.d, prob.layout.n, prob.layout.r, plan.dt, plan.steps)
    report = trotter_run(prob.psi0, plan, prob.gen, prob.media)
    report.error_estimate = _estimate(prob.gen, plan)

    e0 = report.records[0].E_total
    if plan.method == "lossless-exact" or prob.layout.r == 0 or not prob.gen.rates.any():
        drift = max(abs(r.E_total - e0) for r in report.records) / e0
        report.add_check("energy conserved without loss", drift < 1e-9, drift)
    else:
        worst = max(r.E_el for r in report.records)
        report.add_check("E_el never exceeds initial total energy", worst <= e0 * (1 + 1e-12), worst / e0)

    if write:
        extra = {
            "layout": {"cells": prob.layout.cells, "d_physical": prob.layout.d_physical,
                       "d": prob.layout.d, "n": prob.layout.n, "r": prob.layout.r},
            "dt_auto": config.dt_auto,
        }
        if config.outputs.report:
            write_json(config.outputs.report, report_to_dict(report, extra))
        if config.outputs.table:
            write_table(config.outputs.table, record_rows(report))
        if config.outputs.circuit and plan.method in ("kraus", "lcu"):
            write_circuit(prob.gen, plan, config.outputs.circuit)
    return report


def write_circuit(gen, plan: EvolutionPlan, path) -> None:
    pair = build_kraus_pair(gen, plan.dt)
    if plan.method == "kraus":
        dil = build_udiss_kraus(pair)
        circ = synthesize_gates(dil.rotations, dil.qubits)
    else:
        circ = build_lcu_dilation(pair).program()
    write_atomic(path, circ.export_text())


def verify_invariants(config: RunConfig, seed: int = 0) -> list:
    """Invariant suite for the configured problem; returns check dicts."""
    prob = build_problem(config)
    gen, layout, dt = prob.gen, prob.layout, config.plan.dt
    checks = []

    def add(name, passed, value=None):
        checks.append({"name": name, "passed": bool(passed), "value": value})

    h = gen.d0
    herm = abs(h - h.conj().T).max() if h.nnz else 0.0
    add("d0 Hermitian", herm == 0.0, float(herm))
    add("ddiss non-negative", bool(np.all(gen.ddiss >= 0)))
    pad = layout.padding_slice
    add("padding rows of generator zero",
        abs(h[pad, :]).max() == 0 if layout.d > layout.d_physical and h.nnz else True)

    pair = build_kraus_pair(gen, dt)
    # K0^dag K0 + K1^dag K1 is diagonal; its dissipative entries are Gamma^2 + sin^2
    comp = pair.k0_diag.astype(float) ** 2
    comp[pair.dissipative] += pair.k1_values**2
    add("Kraus completeness", np.max(np.abs(comp - 1)) < 1e-12, float(np.max(np.abs(comp - 1))))

    u0 = lossless_step_operator(gen, dt)
    add("lossless step unitary", u0.residual < 1e-12, u0.residual)

    dil = build_udiss_kraus(pair)
    lcu = build_lcu_dilation(pair)
    d = layout.d
    if d <= DENSE_VERIFY_LIMIT:
        u = dil.to_dense()
        add("Kraus dilation unitary", np.max(np.abs(u.conj().T @ u - np.eye(2 * d))) < 1e-12)
        add("Kraus dilation top-left block is K0",
            np.max(np.abs(u[:d, :d] - np.diag(pair.k0_diag))) < 1e-13)
        ul = lcu.to_dense()
        add("LCU top-left block is K0", np.max(np.abs(ul[:d, :d] - np.diag(pair.k0_diag))) < 1e-13)

    if d <= EXACT_LIMIT:
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi[layout.d_physical :] = 0
        psi /= np.linalg.norm(psi)
        ref = trotter_step_matrix(gen, dt) @ psi
        ref /= np.linalg.norm(ref)
        worst = 0.0
        for prog in (dil, lcu):
            st = controlled_lossless_step(apply_program(init_dilated(StateVector(psi)), prog), u0)
            post = measure_ancilla(st).post_state.amplitudes
            worst = max(worst, float(np.max(np.abs(post - ref))))
        add("one step matches exp(-i dt d0) K0 (normalized)", worst < 1e-10, worst)
    return checks


@dataclass
class ConvergenceTable:
    rows: list
    slope: float | None
    monotone: bool
    t_total: float


def _ladder_row(gen, dt, t_total):
    steps = int(round(t_total / dt))
    if steps < 1 or abs(steps * dt - t_total) > 1e-9 * max(1.0, t_total):
        raise ValidationError("dt_ladder", f"dt = {dt} does not divide t_total = {t_total}")
    plan = EvolutionPlan(dt=dt, steps=steps)
    eps = measured_error(gen, dt, steps)
    est = _estimate_analytic(gen, plan)
    return {"dt": dt, "steps": steps, "measured": eps, "analytic": est}


def _estimate_analytic(gen, plan):
    rates = gen.rates
    if rates.size == 0 or rates.min() <= 0:
        return None
    try:
        return error_estimate(plan, float(rates.min()), float(rates.max()))["analytic"]
    except NonPositiveRate:
        return None


def sweep_convergence(config: RunConfig, dt_ladder, workers: int | None = None) -> ConvergenceTable:
    """Measured operator-norm error against ``dt`` at the configured ``t_total``."""
    ladder = sorted({float(x) for x in dt_ladder}, reverse=True)
    if len(ladder) < 2:
        raise ValueError("a convergence slope needs at least two distinct dt values")
    if any(not x > 0 for x in ladder):
        raise ValueError("dt values must be positive")
    prob = build_problem(config)
    if prob.gen.d > EXACT_LIMIT:
        raise DimensionTooLarge(f"sweep needs d <= {EXACT_LIMIT}, got {prob.gen.d}")
    t_total = config.plan.t_total
    with ThreadPoolExecutor(max_workers=workers or config.workers) as pool:
        rows = list(pool.map(lambda dt: _ladder_row(prob.gen, dt, t_total), ladder))
    eps = np.array([r["measured"] for r in rows])
    slope = None
    # without loss the split is exact and eps is pure roundoff
    if np.all(eps > 1e-10):
        slope = float(np.polyfit(np.log(ladder), np.log(eps), 1)[0])
    monotone = bool(np.all(np.diff(eps) <= 0)) if slope is not None else True
    return ConvergenceTable(rows=rows, slope=slope, monotone=monotone, t_total=t_total)


def coordinates_per_cell(medium: MediumSpec) -> int:
    lorentz = sum(1 for b in ("electric", "magnetic") for p in medium.poles(b) if not p.is_drude)
    return 2 + lorentz + medium.n_electric + medium.n_magnetic


def scaled_problem(pattern: list, n: int) -> tuple:
    """Grid filling ``2**n`` coordinates with media cycled from ``pattern``."""
    per = coordinates_per_cell(pattern[0])
    cells = 2**n // per
    if cells < 2:
        raise ValueError(f"n = {n} leaves fewer than 2 cells ({per} coordinates per cell)")
    media = [pattern[q % len(pattern)] for q in range(cells)]
    grid = GridSpec(cells, 1.0)
    layout = build_layout(grid, media)
    return grid, media, layout, build_generators(layout, grid, media)


def resource_counts(gen, dt: float) -> dict:
    pair = build_kraus_pair(gen, dt)
    k = kraus_gate_counts(pair)
    lc = structural_counts(build_lcu_dilation(pair).program())
    return {"kraus": k, "lcu": lc}


def resource_report(config: RunConfig, n_range) -> list:
    """Gate counts per method for registers of ``2**n`` coordinates."""
    pattern = config.media()
    rows = []
    for n in n_range:
        if n + 1 > MAX_RESOURCE_QUBITS:
            raise ValueError(f"n + 1 = {n + 1} exceeds {MAX_RESOURCE_QUBITS} qubits")
        grid, media, layout, gen = scaled_problem(pattern, n)
        if layout.n != n:
            raise ValueError(f"layout for n = {n} came out with n = {layout.n}")
        counts = resource_counts(gen, config.plan.dt)
        k_total = sum(counts["kraus"].values())
        l_total = sum(counts["lcu"].values())
        for method in ("kraus", "lcu"):
            c = counts[method]
            rows.append({
                "n": n,
                "cells": grid.cells,
                "r": layout.r,
                "method": method,
                "cnot_count": c["cnot_count"],
                "rotation_count": c["rotation_count"],
                "total": c["cnot_count"] + c["rotation_count"],
                "lcu_le_kraus": (l_total <= k_total) if n >= 5 else None,
            })
    return rows


def log_fit(counts, model) -> tuple:
    """Fit ``counts = c * model`` in log space; returns ``(c, R^2)``."""
    y = np.log(np.asarray(counts, dtype=float))
    x = np.log(np.asarray(model, dtype=float))
    logc = float(np.mean(y - x))
    res = y - x - logc
    tot = float(np.sum((y - y.mean()) ** 2))
    return math.exp(logc), (1.0 - float(np.sum(res**2)) / tot) if tot > 0 else float("nan")
