"""Closed-form analytic layer: coefficients, energies, critical points.

The model is a massless two-dimensional Dirac particle carrying three
couplings: a linear-in-position oscillator term of strength ``k1``, a
spin-orbit term of strength ``lam`` entering with an imaginary coefficient
(which makes the problem non-Hermitian), and a transverse magnetic field
``b0`` in symmetric gauge.  Factoring the first-order problem on the complex
plane leaves four block coefficients (a_coef, b_coef, c1, c2) and one number
that controls the whole spectrum:

    k_coef = hbar * (2*(v_f**2 - lam**2)*b0*e/c - 4*k1*v_f**2)

Level energies are ``sqrt((n+1)*k_coef)`` on branch I and
``sqrt(-(n+1)*k_coef)`` on branch II, so the sign of ``k_coef`` decides which
branch has a real spectrum.  The sign change is the phase transition; its
numerical twin (an exceptional point of the truncated matrices) lives in
``spectral``.

Everything here is a pure function, generic over ``float`` and
``fractions.Fraction`` field values.  The Fraction path feeds the
exact-arithmetic checks in ``opalg``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple, Union

Real = Union[float, Fraction]


class Branch(Enum):
    """Which Gaussian envelope closes the factored first-order system."""

    I = "I"
    II = "II"


class Valley(Enum):
    """Primary sector, or the one generated from it by time reversal."""

    PRIMARY = "primary"
    TIME_REVERSED = "time_reversed"


class PhaseVerdict(Enum):
    UNBROKEN = "unbroken"
    BROKEN = "broken"
    CRITICAL = "critical"


class Vary(Enum):
    """Parameter direction along which a transition is searched."""

    LAMBDA = "lambda"
    B0 = "b0"


class DegenerateCoefficientsError(ValueError):
    """A block coefficient 2*(v_f -+ lam) vanished; the factorization degenerates."""


@dataclass(frozen=True)
class PhysParams:
    """Physical inputs in natural units (e = 1, hbar = 1, c = 137 by default).

    ``lam`` is the spin-orbit strength (the name avoids the Python keyword).
    All fields must be finite; v_f, e, c and hbar must be positive.
    """

    v_f: Real
    lam: Real
    k1: Real
    b0: Real
    e: Real = 1.0
    c: Real = 137.0
    hbar: Real = 1.0

    def __post_init__(self) -> None:
        for name in ("v_f", "lam", "k1", "b0", "e", "c", "hbar"):
            value = getattr(self, name)
            if not math.isfinite(float(value)):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if not self.v_f > 0:
            raise ValueError("v_f must be positive")
        for name in ("e", "c", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DerivedCoeffs:
    """Block coefficients of the factored Hamiltonian plus both envelope exponents.

    d1_branch_i and d1_branch_ii are None when the corresponding block
    coefficient vanishes (v_f = lam, respectively v_f = -lam); every other
    field still evaluates there.
    """

    a_coef: Real
    b_coef: Real
    c1: Real
    c2: Real
    k_coef: Real
    d1_branch_i: Optional[Real]
    d1_branch_ii: Optional[Real]
    hbar: Real

    def d1(self, branch: Branch) -> Optional[Real]:
        return self.d1_branch_i if branch is Branch.I else self.d1_branch_ii

    def swapped(self) -> "DerivedCoeffs":
        """Relabeling a_coef <-> b_coef, c1 <-> c2.

        This is the map that turns the primary-valley operator blocks into
        the time-reversed ones; it negates k_coef and exchanges the two
        envelope exponents.
        """
        return DerivedCoeffs(
            a_coef=self.b_coef,
            b_coef=self.a_coef,
            c1=self.c2,
            c2=self.c1,
            k_coef=-self.k_coef,
            d1_branch_i=self.d1_branch_ii,
            d1_branch_ii=self.d1_branch_i,
            hbar=self.hbar,
        )


def derive_coeffs(p: PhysParams) -> DerivedCoeffs:
    """Evaluate the block coefficients from the physical inputs.

    The shared subexpression b0*e/(2c) is deliberate: with it, the float
    identities c1(-lam) == -c2(lam) and c2(-lam) == -c1(lam) hold bitwise,
    which the operator-adjoint tests rely on.
    """
    half_field = p.b0 * p.e / (2 * p.c)
    a_coef = 2 * (p.v_f - p.lam)
    b_coef = 2 * (p.v_f + p.lam)
    c1 = p.k1 * p.v_f - (p.v_f - p.lam) * half_field
    c2 = (p.v_f + p.lam) * half_field - p.k1 * p.v_f
    k_coef = (a_coef * c2 - b_coef * c1) * p.hbar
    d1_i = None if a_coef == 0 else c1 / (a_coef * p.hbar)
    d1_ii = None if b_coef == 0 else c2 / (b_coef * p.hbar)
    return DerivedCoeffs(a_coef, b_coef, c1, c2, k_coef, d1_i, d1_ii, p.hbar)


def level_energy(p: PhysParams, n: int, branch: Branch) -> Tuple[complex, complex]:
    """Energies (+E, -E) of level n.

    Branch I: E = sqrt((n+1)*k_coef); branch II: E = sqrt(-(n+1)*k_coef).
    Principal square root, so the member with positive real part (or, for a
    negative radicand, +i times a positive number) is listed first.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError("level index must be a nonnegative integer")
    k = derive_coeffs(p).k_coef
    radicand = (n + 1) * k if branch is Branch.I else -((n + 1) * k)
    plus = cmath.sqrt(complex(radicand))
    return (plus, -plus)


def mass_gap(p: PhysParams) -> complex:
    """The n = 0 spectral gap on branch I: sqrt(k_coef) as principal root."""
    return level_energy(p, 0, Branch.I)[0]


def critical_point(p: PhysParams, vary: Vary) -> Optional[Real]:
    """Parameter value where k_coef crosses zero along the chosen direction.

    Vary.LAMBDA: returns v_f*sqrt(1 - 2*k1*c/(b0*e)), or None when the
    radicand is negative (no real critical coupling).  Requires b0*e > 0.

    Vary.B0: returns 2*k1*v_f**2*c/((v_f**2 - lam**2)*e); raises
    DegenerateCoefficientsError when v_f**2 == lam**2.
    """
    if vary is Vary.LAMBDA:
        drive = p.b0 * p.e
        if not drive > 0:
            raise ValueError("critical coupling needs b0*e > 0")
        radicand = 1 - 2 * p.k1 * p.c / drive
        if radicand < 0:
            return None
        return p.v_f * math.sqrt(radicand)
    denom = (p.v_f - p.lam) * (p.v_f + p.lam) * p.e
    if denom == 0:
        raise DegenerateCoefficientsError(
            "v_f**2 == lam**2: critical field undefined"
        )
    return 2 * p.k1 * p.v_f**2 * p.c / denom


def default_critical_tol(p: PhysParams) -> float:
    """Width of the default critical band: 1e-12 times the natural size of k_coef.

    The scale is the sum of magnitudes of the terms whose cancellation
    produces k_coef, so a k_coef that is zero only through round-off falls
    inside the band.
    """
    v2 = float(p.v_f) ** 2
    field = float(p.b0) * float(p.e) / float(p.c)
    scale = float(p.hbar) * (
        abs(2 * v2 * field)
        + abs(2 * float(p.lam) ** 2 * field)
        + abs(4 * float(p.k1) * v2)
    )
    return 1e-12 * scale


def classify_phase(
    p: PhysParams, branch: Branch, tol: Optional[float] = None
) -> PhaseVerdict:
    """Sign test on k_coef with a critical band of half-width tol around zero.

    Branch I is unbroken for k_coef > tol and broken for k_coef < -tol;
    branch II is the mirror image.  tol defaults to default_critical_tol(p).
    """
    if tol is None:
        tol = default_critical_tol(p)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    k = derive_coeffs(p).k_coef
    if branch is Branch.II:
        k = -k
    if k > tol:
        return PhaseVerdict.UNBROKEN
    if k < -tol:
        return PhaseVerdict.BROKEN
    return PhaseVerdict.CRITICAL


def normalizability(p: PhysParams, branch: Branch) -> bool:
    """True when the branch's Gaussian envelope decays at infinity (d1 < 0).

    A vanishing exponent (constant envelope) is not square-integrable and
    reports False.  Raises DegenerateCoefficientsError when the envelope is
    undefined (v_f = -+lam).
    """
    d1 = derive_coeffs(p).d1(branch)
    if d1 is None:
        raise DegenerateCoefficientsError(
            f"envelope for branch {branch.value} undefined at these parameters"
        )
    return d1 < 0
