"""
Scalar Lorentz/Drude medium model.

A medium is a set of electric and magnetic poles on top of the vacuum response
``diag(eps0, mu0)``.  Each pole contributes

    Omega**2 / (omega_l**2 - 2j*gamma*omega - omega**2)

to the relative permittivity (electric branch) or permeability (magnetic
branch).  The damping stored here is the physical ``gamma``; the doubled rate
that enters the dissipator is applied when operators are built.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import constants


class InvalidMedium(ValueError):
    """Base class for physically inadmissible medium parameters."""


class NegativeDamping(InvalidMedium):
    pass


class NonPositiveCoupling(InvalidMedium):
    pass


class PoleSingularity(ValueError):
    """Response evaluated exactly on an undamped resonance."""


class MediumClass(str, enum.Enum):
    VACUUM = "vacuum"
    LOSSLESS_LORENTZ = "lossless-lorentz"
    DRUDE = "drude"
    LOSSY_LORENTZ = "lossy-lorentz"


@dataclass(frozen=True)
class LorentzPole:
    """
    One resonant term of the constitutive relation.

    Parameters
    ----------
    big_omega : float
        Coupling strength (rad/s), must be positive.
    resonance : float
        Resonance frequency (rad/s); ``0`` makes this a Drude pole.
    damping : float
        Physical damping rate (rad/s), non-negative.
    """

    big_omega: float
    resonance: float
    damping: float = 0.0

    @property
    def is_drude(self) -> bool:
        return self.resonance == 0.0


@dataclass(frozen=True)
class MediumSpec:
    """Electric and magnetic pole lists plus the high-frequency response."""

    electric_poles: tuple[LorentzPole, ...] = ()
    magnetic_poles: tuple[LorentzPole, ...] = ()
    eps0: float = constants.epsilon_0
    mu0: float = constants.mu_0

    def __post_init__(self):
        # accept lists from callers, keep the frozen value hashable
        object.__setattr__(self, "electric_poles", tuple(self.electric_poles))
        object.__setattr__(self, "magnetic_poles", tuple(self.magnetic_poles))

    @classmethod
    def normalized(
        cls,
        electric_poles: Sequence[LorentzPole] = (),
        magnetic_poles: Sequence[LorentzPole] = (),
    ) -> "MediumSpec":
        """Medium in units where ``eps0 = mu0 = 1``."""
        return cls(tuple(electric_poles), tuple(magnetic_poles), eps0=1.0, mu0=1.0)

    @property
    def n_electric(self) -> int:
        return len(self.electric_poles)

    @property
    def n_magnetic(self) -> int:
        return len(self.magnetic_poles)

    @property
    def n_poles(self) -> int:
        """``N = max(N_e, N_m)``."""
        return max(self.n_electric, self.n_magnetic)

    def poles(self, branch: str) -> tuple[LorentzPole, ...]:
        if branch == "electric":
            return self.electric_poles
        if branch == "magnetic":
            return self.magnetic_poles
        raise ValueError(f"unknown branch {branch!r}")

    def with_damping_scaled(self, factor: float) -> "MediumSpec":
        scale = lambda ps: tuple(
            LorentzPole(p.big_omega, p.resonance, p.damping * factor) for p in ps
        )
        return MediumSpec(scale(self.electric_poles), scale(self.magnetic_poles),
                          self.eps0, self.mu0)


VACUUM = MediumSpec()


def validate_medium(spec: MediumSpec) -> MediumClass:
    """
    Check sign constraints and classify the medium.

    Raises
    ------
    NegativeDamping
        Some pole has ``damping < 0`` (an active medium).
    NonPositiveCoupling
        Some included pole has ``big_omega <= 0``.
    InvalidMedium
        Negative resonance or non-positive vacuum constants.
    """
    if not (spec.eps0 > 0 and spec.mu0 > 0):
        raise InvalidMedium(f"eps0 and mu0 must be positive, got {spec.eps0}, {spec.mu0}")
    poles = spec.electric_poles + spec.magnetic_poles
    for branch in ("electric", "magnetic"):
        for l, p in enumerate(spec.poles(branch)):
            where = f"{branch} pole {l}"
            if not np.isfinite([p.big_omega, p.resonance, p.damping]).all():
                raise InvalidMedium(f"{where}: non-finite parameter")
            if p.damping < 0:
                raise NegativeDamping(f"{where}: damping {p.damping} < 0")
            if p.big_omega <= 0:
                raise NonPositiveCoupling(f"{where}: coupling {p.big_omega} <= 0")
            if p.resonance < 0:
                raise InvalidMedium(f"{where}: resonance {p.resonance} < 0")

    if not poles:
        return MediumClass.VACUUM
    if any(p.is_drude for p in poles):
        return MediumClass.DRUDE
    if all(p.damping == 0 for p in poles):
        return MediumClass.LOSSLESS_LORENTZ
    return MediumClass.LOSSY_LORENTZ


def response_at(spec: MediumSpec, omega, branch: str = "electric"):
    """
    Complex permittivity (``branch="electric"``) or permeability at ``omega``.

    ``omega`` may be a scalar or an array of real angular frequencies.
    """
    omega = np.asarray(omega, dtype=float)
    base = spec.eps0 if branch == "electric" else spec.mu0
    total = np.ones_like(omega, dtype=complex)
    for p in spec.poles(branch):
        denom = p.resonance**2 - 2j * p.damping * omega - omega**2
        if np.any(denom == 0):
            raise PoleSingularity(
                f"{branch} pole at resonance {p.resonance} is undamped and "
                f"evaluated on resonance"
            )
        total = total + p.big_omega**2 / denom
    out = base * total
    return complex(out) if out.ndim == 0 else out
