"""
Kraus pair of the dissipative Trotter factor.

``K0 = exp(-dt * ddiss)`` is diagonal.  Its completion ``K1`` moves the
amplitude lost on dissipative coordinate ``d_phys - r + j`` to coordinate
``j`` with weight ``sqrt(1 - Gamma_j**2)``, so that
``K0^dag K0 + K1^dag K1 = I`` (a multi-mode amplitude-damping channel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import GeneratorPair

CHANNEL_LIMIT = 64
DENSE_LIMIT = 256


class NegativeTimeStep(ValueError):
    pass


class DimensionTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class KrausPair:
    """
    Diagonal ``K0`` and the implicit off-diagonal ``K1``.

    ``dissipative`` holds the ``r`` coordinates where ``K0`` may differ from
    one; ``k1_targets[j]`` is where ``K1`` sends ``dissipative[j]``.
    ``thetas`` satisfy ``cos(theta/2) = gamma_diag`` with ``theta`` in
    ``[0, pi]``.
    """

    k0_diag: np.ndarray
    dissipative: np.ndarray
    gamma_diag: np.ndarray
    k1_values: np.ndarray
    k1_targets: np.ndarray
    thetas: np.ndarray
    dt: float

    @property
    def d(self) -> int:
        return len(self.k0_diag)

    @property
    def r(self) -> int:
        return len(self.dissipative)

    def k0_dense(self) -> np.ndarray:
        return np.diag(self.k0_diag).astype(complex)

    def k1_dense(self) -> np.ndarray:
        _check_dense(self.d)
        k1 = np.zeros((self.d, self.d), dtype=complex)
        k1[self.k1_targets, self.dissipative] = self.k1_values
        return k1

    def apply_k0(self, psi: np.ndarray) -> np.ndarray:
        return self.k0_diag * psi

    def apply_k1(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi, dtype=complex)
        out[self.k1_targets] = self.k1_values * psi[self.dissipative]
        return out


def _check_dense(d: int, limit: int = DENSE_LIMIT) -> None:
    if d > limit:
        raise DimensionTooLarge(f"dense Kraus operators limited to d <= {limit}, got {d}")


def build_kraus_pair(gen: GeneratorPair, dt: float) -> KrausPair:
    if dt < 0:
        raise NegativeTimeStep(f"time step must be >= 0, got {dt}")
    layout = gen.layout
    diss = np.arange(layout.d_physical - layout.r, layout.d_physical)
    x = dt * gen.ddiss[diss]
    gamma = np.exp(-x)
    # 1 - Gamma^2 via expm1 keeps small angles accurate
    sines = np.sqrt(-np.expm1(-2.0 * x))
    k0 = np.ones(layout.d)
    k0[diss] = gamma
    return KrausPair(
        k0_diag=k0,
        dissipative=diss,
        gamma_diag=gamma,
        k1_values=sines,
        k1_targets=np.arange(layout.r),
        thetas=2.0 * np.arctan2(sines, gamma),
        dt=float(dt),
    )


def apply_channel_density(rho: np.ndarray, pair: KrausPair) -> np.ndarray:
    """``K0 rho K0^dag + K1 rho K1^dag`` for verification-scale ``rho``."""
    _check_dense(pair.d, CHANNEL_LIMIT)
    rho = np.asarray(rho)
    if rho.shape != (pair.d, pair.d):
        raise ValueError(f"rho must be {pair.d}x{pair.d}")
    k0 = pair.k0_diag
    k1 = pair.k1_dense()
    return (k0[:, None] * rho * k0[None, :]) + k1 @ rho @ k1.conj().T
