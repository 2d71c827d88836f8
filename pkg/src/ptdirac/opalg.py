"""Operator algebra on polynomial-times-Gaussian spinor functions.

Functions are finite sums of monomials z^m zbar^n multiplying a shared
Gaussian envelope exp(d*z*zbar).  That space is closed under the four
primitive operations the model needs (d/dz, d/dzbar, multiply by z, multiply
by zbar), so everything an operator does to such a function is computed
without discretization error: in float mode the only error is coefficient
round-off, and with Fraction/ComplexRational coefficients there is none at
all.  The literal-zero assertions in the test suite run on the exact path.

Operators are sums of (scalar coefficient) x (2x2 spin matrix) x (word of
primitives); composition concatenates words, so commutators, adjoints and
similarity under antilinear symmetries are all finite bookkeeping.

Layout:
  - WeightedPolynomial / SpinorFunction: the function space, with a text
    serialization for golden files.
  - OperatorExpr: linear operators, composition, formal adjoint, collected
    canonical form.
  - build_hamiltonian / block_operators: the model's first-order blocks for
    either valley.
  - AntilinearOp and the PT machinery: transforms, eigenfactors, commutator
    residuals, time-reversal conjugation.
  - analytic_state / eigen_residual: closed-form level states and their
    defect under the full first-order eigen-equation.
  - lll_state / ladder_raise / jc_verify: zero modes, the pseudo-bosonic
    ladder and the spin-ladder factorization check.
"""

from __future__ import annotations

import cmath
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exact import ComplexRational, exact_sqrt
from .params import (
    Branch,
    DegenerateCoefficientsError,
    DerivedCoeffs,
    Valley,
)

Coeff = Union[int, float, complex, Fraction, ComplexRational]
Monomial = Tuple[int, int]

_EXACT_TYPES = (int, Fraction, ComplexRational)


def _times_i(x: Coeff) -> Coeff:
    """i*x without leaving the operand's arithmetic."""
    if isinstance(x, ComplexRational):
        return ComplexRational(-x.im, x.re)
    if isinstance(x, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(x, (int, Fraction)):
        return ComplexRational(Fraction(0), Fraction(x))
    return 1j * x


def _is_exact_scalar(x: object) -> bool:
    return isinstance(x, _EXACT_TYPES) and not isinstance(x, bool)


def _acc(table: Dict, key, value) -> None:
    # Seeding with a typed zero would force a mixed-mode addition; avoid it.
    prev = table.get(key)
    table[key] = value if prev is None else prev + value


# ---------------------------------------------------------------------------
# function space
# ---------------------------------------------------------------------------


class WeightedPolynomial:
    """Finite sum of z^m zbar^n monomials times an envelope exp(d*z*zbar).

    Coefficients are complex numbers or ComplexRational; d is real (float or
    Fraction).  Exact zeros are pruned on construction, so round-off that is
    merely tiny survives and can be measured.
    """

    __slots__ = ("coeffs", "d")

    def __init__(self, coeffs: Dict[Monomial, Coeff], d: Union[float, Fraction]):
        clean: Dict[Monomial, Coeff] = {}
        for (m, n), c in coeffs.items():
            if m < 0 or n < 0:
                raise ValueError("monomial exponents must be nonnegative")
            if c:
                clean[(m, n)] = c
        self.coeffs = clean
        self.d = d

    @classmethod
    def zero(cls, d) -> "WeightedPolynomial":
        return cls({}, d)

    @classmethod
    def monomial(cls, m: int, n: int, coeff: Coeff = 1, d=0.0) -> "WeightedPolynomial":
        return cls({(m, n): coeff}, d)

    def is_zero(self) -> bool:
        return not self.coeffs

    def sorted_items(self):
        return sorted(self.coeffs.items())

    def _require_same_d(self, other: "WeightedPolynomial") -> None:
        if not self.d == other.d:
            raise ValueError("envelope exponents differ")

    def add(self, other: "WeightedPolynomial") -> "WeightedPolynomial":
        self._require_same_d(other)
        out = dict(self.coeffs)
        for mono, c in other.sorted_items():
            _acc(out, mono, c)
        return WeightedPolynomial(out, self.d)

    def sub(self, other: "WeightedPolynomial") -> "WeightedPolynomial":
        return self.add(other.neg())

    def neg(self) -> "WeightedPolynomial":
        return WeightedPolynomial({k: -c for k, c in self.coeffs.items()}, self.d)

    def scaled(self, value: Coeff) -> "WeightedPolynomial":
        return WeightedPolynomial({k: value * c for k, c in self.coeffs.items()}, self.d)

    def conjugated(self) -> "WeightedPolynomial":
        # d is real, so the envelope is invariant under conjugation.
        return WeightedPolynomial(
            {k: c.conjugate() for k, c in self.coeffs.items()}, self.d
        )

    def with_parity_signs(self) -> "WeightedPolynomial":
        """Coefficient sign (-1)**(m+n): the pullback under z -> -z."""
        return WeightedPolynomial(
            {k: (-c if (k[0] + k[1]) % 2 else c) for k, c in self.coeffs.items()},
            self.d,
        )

    def swapped_exponents(self) -> "WeightedPolynomial":
        """The pullback under z <-> zbar (the envelope is symmetric)."""
        return WeightedPolynomial(
            {(n, m): c for (m, n), c in self.coeffs.items()}, self.d
        )

    def diff_z(self) -> "WeightedPolynomial":
        out: Dict[Monomial, Coeff] = {}
        for (m, n), c in self.sorted_items():
            if m > 0:
                _acc(out, (m - 1, n), m * c)
            if self.d:
                _acc(out, (m, n + 1), self.d * c)
        return WeightedPolynomial(out, self.d)

    def diff_zbar(self) -> "WeightedPolynomial":
        out: Dict[Monomial, Coeff] = {}
        for (m, n), c in self.sorted_items():
            if n > 0:
                _acc(out, (m, n - 1), n * c)
            if self.d:
                _acc(out, (m + 1, n), self.d * c)
        return WeightedPolynomial(out, self.d)

    def shift_z(self) -> "WeightedPolynomial":
        return WeightedPolynomial(
            {(m + 1, n): c for (m, n), c in self.coeffs.items()}, self.d
        )

    def shift_zbar(self) -> "WeightedPolynomial":
        return WeightedPolynomial(
            {(m, n + 1): c for (m, n), c in self.coeffs.items()}, self.d
        )

    def max_abs_coeff(self) -> float:
        return max((float(abs(c)) for c in self.coeffs.values()), default=0.0)

    def is_exact(self) -> bool:
        return _is_exact_scalar(self.d) and all(
            _is_exact_scalar(c) for c in self.coeffs.values()
        )

    def to_complex(self) -> "WeightedPolynomial":
        return WeightedPolynomial(
            {k: complex(c) for k, c in self.coeffs.items()}, float(self.d)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedPolynomial):
            return NotImplemented
        return self.d == other.d and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.d, tuple(self.sorted_items())))

    def __repr__(self) -> str:
        return f"WeightedPolynomial({self.coeffs!r}, d={self.d!r})"

    def to_text(self) -> str:
        """Canonical text form: a 'd <value>' header, then 'm n re im' lines."""
        lines = [f"d {float(self.d)!r}"]
        for (m, n), c in self.sorted_items():
            z = complex(c)
            lines.append(f"{m} {n} {z.real!r} {z.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightedPolynomial":
        d: Optional[float] = None
        coeffs: Dict[Monomial, Coeff] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "d":
                if len(parts) != 2:
                    raise ValueError(f"malformed envelope line: {raw!r}")
                d = float(parts[1])
                continue
            if len(parts) != 4:
                raise ValueError(f"malformed monomial line: {raw!r}")
            key = (int(parts[0]), int(parts[1]))
            coeffs[key] = complex(float(parts[2]), float(parts[3]))
        if d is None:
            raise ValueError("missing 'd <value>' header")
        return cls(coeffs, d)


class SpinorFunction:
    """Two WeightedPolynomial components sharing one envelope.

    energy is optional stationary-state metadata (the time phase is implied,
    never stored); arithmetic that would invalidate it drops it.
    """

    __slots__ = ("upper", "lower", "energy")

    def __init__(
        self,
        upper: WeightedPolynomial,
        lower: WeightedPolynomial,
        energy: Optional[Coeff] = None,
    ):
        if not upper.d == lower.d:
            raise ValueError("component envelopes differ")
        self.upper = upper
        self.lower = lower
        self.energy = energy

    @property
    def d(self):
        return self.upper.d

    def is_zero(self) -> bool:
        return self.upper.is_zero() and self.lower.is_zero()

    def add(self, other: "SpinorFunction") -> "SpinorFunction":
        return SpinorFunction(self.upper.add(other.upper), self.lower.add(other.lower))

    def sub(self, other: "SpinorFunction") -> "SpinorFunction":
        return SpinorFunction(self.upper.sub(other.upper), self.lower.sub(other.lower))

    def scaled(self, value: Coeff) -> "SpinorFunction":
        return SpinorFunction(
            self.upper.scaled(value), self.lower.scaled(value), self.energy
        )

    def max_abs_coeff(self) -> float:
        return max(self.upper.max_abs_coeff(), self.lower.max_abs_coeff())

    def is_exact(self) -> bool:
        ok = self.upper.is_exact() and self.lower.is_exact()
        if self.energy is not None:
            ok = ok and _is_exact_scalar(self.energy)
        return ok

    def to_complex(self) -> "SpinorFunction":
        energy = None if self.energy is None else complex(self.energy)
        return SpinorFunction(self.upper.to_complex(), self.lower.to_complex(), energy)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinorFunction):
            return NotImplemented
        return (
            self.upper == other.upper
            and self.lower == other.lower
            and (
                (self.energy is None and other.energy is None)
                or (
                    self.energy is not None
                    and other.energy is not None
                    and self.energy == other.energy
                )
            )
        )

    def __hash__(self):
        return hash((self.upper, self.lower))

    def __repr__(self) -> str:
        return (
            f"SpinorFunction(upper={self.upper!r}, lower={self.lower!r}, "
            f"energy={self.energy!r})"
        )

    def to_text(self) -> str:
        lines = [f"d {float(self.d)!r}"]
        if self.energy is not None:
            z = complex(self.energy)
            lines.append(f"E {z.real!r} {z.imag!r}")
        for tag, comp in (("upper", self.upper), ("lower", self.lower)):
            lines.append(tag)
            for (m, n), c in comp.sorted_items():
                z = complex(c)
                lines.append(f"{m} {n} {z.real!r} {z.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpinorFunction":
        d: Optional[float] = None
        energy: Optional[complex] = None
        parts: Dict[str, Dict[Monomial, Coeff]] = {"upper": {}, "lower": {}}
        current: Optional[str] = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            if tokens[0] == "d":
                d = float(tokens[1])
            elif tokens[0] == "E":
                energy = complex(float(tokens[1]), float(tokens[2]))
            elif tokens[0] in parts:
                current = tokens[0]
            else:
                if current is None or len(tokens) != 4:
                    raise ValueError(f"malformed spinor line: {raw!r}")
                key = (int(tokens[0]), int(tokens[1]))
                parts[current][key] = complex(float(tokens[2]), float(tokens[3]))
        if d is None:
            raise ValueError("missing 'd <value>' header")
        return cls(
            WeightedPolynomial(parts["upper"], d),
            WeightedPolynomial(parts["lower"], d),
            energy,
        )


def standard_probes(
    d=-0.25, *, max_degree: int = 6, random_count: int = 50, seed: int = 1234
) -> List[SpinorFunction]:
    """Deterministic probe set: every monomial of total degree <= max_degree
    in each spin component, plus seeded random-coefficient spinors."""
    probes: List[SpinorFunction] = []
    zero = WeightedPolynomial.zero(d)
    for total in range(max_degree + 1):
        for m in range(total + 1):
            mono = WeightedPolynomial.monomial(m, total - m, 1.0, d)
            probes.append(SpinorFunction(mono, zero))
            probes.append(SpinorFunction(zero, mono))
    rng = random.Random(seed)
    exponents = [
        (m, n) for m in range(max_degree + 1) for n in range(max_degree + 1 - m)
    ]
    for _ in range(random_count):
        comps = []
        for _component in range(2):
            coeffs: Dict[Monomial, Coeff] = {}
            for key in rng.sample(exponents, 6):
                coeffs[key] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            comps.append(WeightedPolynomial(coeffs, d))
        probes.append(SpinorFunction(comps[0], comps[1]))
    return probes


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


class Prim(Enum):
    DZ = "dz"
    DZBAR = "dzbar"
    MUL_Z = "z"
    MUL_ZBAR = "zbar"


_ADJOINT_MAP = {
    Prim.DZ: (Prim.DZBAR, -1),
    Prim.DZBAR: (Prim.DZ, -1),
    Prim.MUL_Z: (Prim.MUL_ZBAR, 1),
    Prim.MUL_ZBAR: (Prim.MUL_Z, 1),
}

_TIME_REVERSAL_MAP = {
    Prim.DZ: Prim.DZBAR,
    Prim.DZBAR: Prim.DZ,
    Prim.MUL_Z: Prim.MUL_ZBAR,
    Prim.MUL_ZBAR: Prim.MUL_Z,
}


def _apply_prim(prim: Prim, wp: WeightedPolynomial) -> WeightedPolynomial:
    if prim is Prim.DZ:
        return wp.diff_z()
    if prim is Prim.DZBAR:
        return wp.diff_zbar()
    if prim is Prim.MUL_Z:
        return wp.shift_z()
    return wp.shift_zbar()


Matrix = Tuple[Tuple[Coeff, Coeff], Tuple[Coeff, Coeff]]

IDENTITY2: Matrix = ((1, 0), (0, 1))
E01: Matrix = ((0, 1), (0, 0))
E10: Matrix = ((0, 0), (1, 0))


def _mat_mul(m1: Matrix, m2: Matrix) -> Matrix:
    return tuple(
        tuple(
            m1[i][0] * m2[0][j] + m1[i][1] * m2[1][j] for j in (0, 1)
        )
        for i in (0, 1)
    )  # type: ignore[return-value]


def _mat_conj(m: Matrix) -> Matrix:
    return tuple(tuple(e.conjugate() for e in row) for row in m)  # type: ignore[return-value]


def _mat_conj_t(m: Matrix) -> Matrix:
    return (
        (m[0][0].conjugate(), m[1][0].conjugate()),
        (m[0][1].conjugate(), m[1][1].conjugate()),
    )


@dataclass(frozen=True)
class OperatorTerm:
    coeff: Coeff
    matrix: Matrix
    word: Tuple[Prim, ...]


class OperatorExpr:
    """Finite sum of scalar x (2x2 matrix) x (word of primitives) terms.

    Words act on the function space and are applied right to left; the
    matrix mixes spin components; the scalar multiplies everything.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[OperatorTerm]):
        self.terms = tuple(t for t in terms if t.coeff)

    # -- constructors -------------------------------------------------

    @classmethod
    def from_word(cls, coeff: Coeff, matrix: Matrix, word) -> "OperatorExpr":
        return cls([OperatorTerm(coeff, matrix, tuple(word))])

    @classmethod
    def identity(cls) -> "OperatorExpr":
        return cls.from_word(1, IDENTITY2, ())

    @classmethod
    def scalar(cls, c: Coeff) -> "OperatorExpr":
        return cls.from_word(c, IDENTITY2, ())

    @classmethod
    def spin(cls, matrix: Matrix) -> "OperatorExpr":
        return cls.from_word(1, matrix, ())

    @classmethod
    def dz(cls) -> "OperatorExpr":
        return cls.from_word(1, IDENTITY2, (Prim.DZ,))

    @classmethod
    def dzbar(cls) -> "OperatorExpr":
        return cls.from_word(1, IDENTITY2, (Prim.DZBAR,))

    @classmethod
    def mul_z(cls) -> "OperatorExpr":
        return cls.from_word(1, IDENTITY2, (Prim.MUL_Z,))

    @classmethod
    def mul_zbar(cls) -> "OperatorExpr":
        return cls.from_word(1, IDENTITY2, (Prim.MUL_ZBAR,))

    @classmethod
    def pi_z(cls, hbar) -> "OperatorExpr":
        """Kinetic momentum -i*hbar*d/dz."""
        return cls.from_word(_times_i(-hbar), IDENTITY2, (Prim.DZ,))

    @classmethod
    def pi_zbar(cls, hbar) -> "OperatorExpr":
        return cls.from_word(_times_i(-hbar), IDENTITY2, (Prim.DZBAR,))

    # -- algebra --------------------------------------------------------

    def __add__(self, other: "OperatorExpr") -> "OperatorExpr":
        return OperatorExpr(self.terms + other.terms)

    def __neg__(self) -> "OperatorExpr":
        return self.scaled(-1)

    def __sub__(self, other: "OperatorExpr") -> "OperatorExpr":
        return self + (-other)

    def scaled(self, c: Coeff) -> "OperatorExpr":
        return OperatorExpr(
            [OperatorTerm(c * t.coeff, t.matrix, t.word) for t in self.terms]
        )

    def __matmul__(self, other: "OperatorExpr") -> "OperatorExpr":
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                out.append(
                    OperatorTerm(
                        t1.coeff * t2.coeff,
                        _mat_mul(t1.matrix, t2.matrix),
                        t1.word + t2.word,
                    )
                )
        return OperatorExpr(out)

    # -- application ----------------------------------------------------

    def apply(self, s: SpinorFunction) -> SpinorFunction:
        d = s.d
        upper_acc: Dict[Monomial, Coeff] = {}
        lower_acc: Dict[Monomial, Coeff] = {}
        for term in self.terms:
            (m00, m01), (m10, m11) = term.matrix
            tu = tl = None
            if m00 or m10:
                tu = s.upper
                for prim in reversed(term.word):
                    tu = _apply_prim(prim, tu)
            if m01 or m11:
                tl = s.lower
                for prim in reversed(term.word):
                    tl = _apply_prim(prim, tl)
            for acc, e_u, e_l in ((upper_acc, m00, m01), (lower_acc, m10, m11)):
                for entry, comp in ((e_u, tu), (e_l, tl)):
                    if not entry or comp is None:
                        continue
                    factor = term.coeff * entry
                    for mono, c in comp.sorted_items():
                        _acc(acc, mono, factor * c)
        return SpinorFunction(
            WeightedPolynomial(upper_acc, d), WeightedPolynomial(lower_acc, d)
        )

    def apply_poly(self, wp: WeightedPolynomial) -> WeightedPolynomial:
        """Apply a spin-scalar operator to a single component."""
        acc: Dict[Monomial, Coeff] = {}
        for term in self.terms:
            (m00, m01), (m10, m11) = term.matrix
            if m01 or m10 or not m00 == m11:
                raise ValueError(
                    "operator mixes spin components; apply it to a SpinorFunction"
                )
            if not m00:
                continue
            tw = wp
            for prim in reversed(term.word):
                tw = _apply_prim(prim, tw)
            factor = term.coeff * m00
            for mono, c in tw.sorted_items():
                _acc(acc, mono, factor * c)
        return WeightedPolynomial(acc, wp.d)

    # -- structural maps -------------------------------------------------

    def adjoint(self) -> "OperatorExpr":
        """Formal adjoint under the flat inner product: (d/dz)* = -d/dzbar,
        (z.)* = (zbar.), matrices go to conjugate transpose."""
        out = []
        for t in self.terms:
            sign = 1
            word = []
            for prim in reversed(t.word):
                mapped, s = _ADJOINT_MAP[prim]
                word.append(mapped)
                sign *= s
            coeff = t.coeff.conjugate()
            if sign < 0:
                coeff = -coeff
            out.append(OperatorTerm(coeff, _mat_conj_t(t.matrix), tuple(word)))
        return OperatorExpr(out)

    def collected(self) -> Dict[Tuple[int, int, Tuple[Prim, ...]], Coeff]:
        """Canonical form: coefficient per (matrix position, word)."""
        table: Dict[Tuple[int, int, Tuple[Prim, ...]], Coeff] = {}
        for t in self.terms:
            for i in (0, 1):
                for j in (0, 1):
                    entry = t.matrix[i][j]
                    if not entry:
                        continue
                    _acc(table, (i, j, t.word), t.coeff * entry)
        return {k: v for k, v in table.items() if v}

    def max_collected_diff(self, other: "OperatorExpr") -> float:
        a = self.collected()
        b = other.collected()
        worst = 0.0
        for key in set(a) | set(b):
            va = a.get(key)
            vb = b.get(key)
            if va is None:
                diff = abs(vb)
            elif vb is None:
                diff = abs(va)
            else:
                diff = abs(va - vb)
            worst = max(worst, float(diff))
        return worst

    def is_exact(self) -> bool:
        return all(
            _is_exact_scalar(t.coeff)
            and all(_is_exact_scalar(e) for row in t.matrix for e in row)
            for t in self.terms
        )

    def to_complex(self) -> "OperatorExpr":
        return OperatorExpr(
            [
                OperatorTerm(
                    complex(t.coeff),
                    tuple(tuple(complex(e) for e in row) for row in t.matrix),
                    t.word,
                )
                for t in self.terms
            ]
        )

    def __repr__(self) -> str:
        return f"OperatorExpr({len(self.terms)} terms)"


# ---------------------------------------------------------------------------
# the model Hamiltonian
# ---------------------------------------------------------------------------


def block_operators(
    coeffs: DerivedCoeffs, valley: Valley = Valley.PRIMARY
) -> Tuple[OperatorExpr, OperatorExpr]:
    """The two spin-scalar first-order blocks (upper-right, lower-left).

    Primary valley: (a*Pi_z + i*c1*zbar, b*Pi_zbar + i*c2*z).  The
    time-reversed valley swaps a <-> b and c1 <-> c2 inside the same pattern.
    """
    hbar = coeffs.hbar
    if valley is Valley.PRIMARY:
        first, second = (coeffs.a_coef, coeffs.c1), (coeffs.b_coef, coeffs.c2)
    else:
        first, second = (coeffs.b_coef, coeffs.c2), (coeffs.a_coef, coeffs.c1)
    ur = OperatorExpr.pi_z(hbar).scaled(first[0]) + OperatorExpr.mul_zbar().scaled(
        _times_i(first[1])
    )
    ll = OperatorExpr.pi_zbar(hbar).scaled(second[0]) + OperatorExpr.mul_z().scaled(
        _times_i(second[1])
    )
    return ur, ll


def build_hamiltonian(
    coeffs: DerivedCoeffs, valley: Valley = Valley.PRIMARY
) -> OperatorExpr:
    """Off-diagonal first-order Hamiltonian: spin-raising times the
    upper-right block plus spin-lowering times the lower-left block."""
    ur, ll = block_operators(coeffs, valley)
    return OperatorExpr.spin(E01) @ ur + OperatorExpr.spin(E10) @ ll


def time_reversal_conjugate(expr: OperatorExpr) -> OperatorExpr:
    """T expr T^{-1} with T = (i sigma_y) K: conjugate scalars, swap z with
    zbar (hence d/dz with d/dzbar), sandwich the matrix."""
    s = ((0, 1), (-1, 0))
    s_inv = ((0, -1), (1, 0))
    out = []
    for t in expr.terms:
        word = tuple(_TIME_REVERSAL_MAP[p] for p in t.word)
        matrix = _mat_mul(s, _mat_mul(_mat_conj(t.matrix), s_inv))
        out.append(OperatorTerm(t.coeff.conjugate(), matrix, word))
    return OperatorExpr(out)


def operator_residual_on_probes(
    x: OperatorExpr, y: OperatorExpr, probes: Sequence[SpinorFunction]
) -> float:
    """Worst relative coefficient defect of (x - y) over the probes."""
    worst = 0.0
    for s in probes:
        xi = x.apply(s)
        yi = y.apply(s)
        diff = xi.sub(yi)
        scale = max(1.0, xi.max_abs_coeff(), yi.max_abs_coeff())
        worst = max(worst, diff.max_abs_coeff() / scale)
    return worst


# ---------------------------------------------------------------------------
# antilinear symmetries
# ---------------------------------------------------------------------------


class CoordMap(Enum):
    NEGATE = "negate"  # z -> -z (and zbar -> -zbar)
    FIX = "fix"
    SWAP = "swap"  # z <-> zbar


@dataclass(frozen=True)
class AntilinearOp:
    """Spin matrix times a coordinate map times complex conjugation."""

    name: str
    matrix: Matrix
    coord_map: CoordMap
    conjugates: bool = True


P1T = AntilinearOp("P1T", ((1j, 0), (0, 1j)), CoordMap.NEGATE)
P2T = AntilinearOp("P2T", ((-1, 0), (0, 1)), CoordMap.FIX)
TIME_REVERSAL = AntilinearOp("T", ((0, 1), (-1, 0)), CoordMap.SWAP)


def _scale_entry(entry, value):
    """entry * value where entry is drawn from {0, +-1, +-i}; exactness of
    the operand is preserved for those entries."""
    if entry == 0:
        return None
    if entry == 1:
        return value
    if entry == -1:
        return -value
    if entry == 1j:
        return _times_i(value)
    if entry == -1j:
        return -_times_i(value)
    return entry * value


def _mix(
    e1, w1: WeightedPolynomial, e2, w2: WeightedPolynomial
) -> WeightedPolynomial:
    acc: Dict[Monomial, Coeff] = {}
    for entry, wp in ((e1, w1), (e2, w2)):
        for mono, c in wp.sorted_items():
            v = _scale_entry(entry, c)
            if v is not None:
                _acc(acc, mono, v)
    return WeightedPolynomial(acc, w1.d)


def pt_transform(op: AntilinearOp, s: SpinorFunction) -> SpinorFunction:
    """Apply an antilinear symmetry to a spinor function.

    Energy metadata maps to its conjugate (the implied time phase reverses).
    """
    comps = []
    for comp in (s.upper, s.lower):
        wp = comp.conjugated() if op.conjugates else comp
        if op.coord_map is CoordMap.NEGATE:
            wp = wp.with_parity_signs()
        elif op.coord_map is CoordMap.SWAP:
            wp = wp.swapped_exponents()
        comps.append(wp)
    u, l = comps
    (m00, m01), (m10, m11) = op.matrix
    energy = None
    if s.energy is not None:
        energy = s.energy.conjugate() if op.conjugates else s.energy
    return SpinorFunction(_mix(m00, u, m01, l), _mix(m10, u, m11, l), energy)


def pt_eigenfactor(
    op: AntilinearOp, s: SpinorFunction, rel_tol: float = 1e-10
) -> Optional[complex]:
    """The scalar c with op(s) == c*s on the spatial form, or None.

    Every monomial of both components is compared; energy metadata is
    ignored (failure of the spatial eigenrelation is exactly what
    distinguishes the broken phase).  Raises on the zero spinor.
    """
    if s.is_zero():
        raise ValueError("zero spinor has no eigenfactor")
    t = pt_transform(op, s)
    ref_comp = ref_key = None
    ref_mag = 0.0
    for idx, comp in enumerate((s.upper, s.lower)):
        for mono, c in comp.sorted_items():
            mag = float(abs(c))
            if mag > ref_mag:
                ref_comp, ref_key, ref_mag = idx, mono, mag
    s_parts = (s.upper, s.lower)
    t_parts = (t.upper, t.lower)
    t_ref = t_parts[ref_comp].coeffs.get(ref_key)
    if t_ref is None:
        return None
    factor = complex(t_ref) / complex(s_parts[ref_comp].coeffs[ref_key])
    worst = 0.0
    scale = 0.0
    for sc, tc in zip(s_parts, t_parts):
        for key in set(sc.coeffs) | set(tc.coeffs):
            sv = complex(sc.coeffs.get(key, 0))
            tv = complex(tc.coeffs.get(key, 0))
            worst = max(worst, abs(tv - factor * sv))
            scale = max(scale, abs(sv), abs(tv))
    if worst <= rel_tol * scale:
        return factor
    return None


def pt_commutator_residual(
    h: OperatorExpr, op: AntilinearOp, probes: Sequence[SpinorFunction]
) -> float:
    """Worst relative coefficient norm of (op o H - H o op) over the probes."""
    if not probes:
        raise ValueError("at least one probe is required")
    worst = 0.0
    for s in probes:
        left = pt_transform(op, h.apply(s))
        right = h.apply(pt_transform(op, s))
        diff = left.sub(right)
        scale = max(1.0, left.max_abs_coeff(), right.max_abs_coeff())
        worst = max(worst, diff.max_abs_coeff() / scale)
    return worst


# ---------------------------------------------------------------------------
# closed-form states
# ---------------------------------------------------------------------------


def _exact_principal_sqrt(radicand: Fraction) -> Optional[ComplexRational]:
    """Principal square root as a ComplexRational, or None if irrational."""
    if radicand >= 0:
        root = exact_sqrt(radicand)
        return None if root is None else ComplexRational(root, Fraction(0))
    root = exact_sqrt(-radicand)
    return None if root is None else ComplexRational(Fraction(0), root)


def level_energy_from_coeffs(coeffs: DerivedCoeffs, n: int, branch: Branch) -> Coeff:
    """Positive-root level energy from already-derived coefficients.

    Fraction k_coef with a perfect-square radicand gives an exact
    ComplexRational; anything else falls back to a complex float.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError("level index must be a nonnegative integer")
    k = coeffs.k_coef
    radicand = (n + 1) * k if branch is Branch.I else -((n + 1) * k)
    if isinstance(radicand, Fraction):
        exact = _exact_principal_sqrt(radicand)
        if exact is not None:
            return exact
    elif isinstance(radicand, int):
        exact = _exact_principal_sqrt(Fraction(radicand))
        if exact is not None:
            return exact
    return cmath.sqrt(complex(radicand))


def analytic_state(
    branch: Branch,
    valley: Valley,
    n: int,
    coeffs: DerivedCoeffs,
    a_n: Coeff = 1,
) -> SpinorFunction:
    """Closed-form level-n bound state for the requested branch and valley.

    The two components carry a fixed relative weight, energy over
    (n+1) times the block coefficient; with that weight the state solves the
    full first-order eigen-equation, not only the squared one.  At
    k_coef = 0 the weight vanishes and the single-component zero-energy
    state survives.

    Branch I states in the primary valley are holomorphic-type
    (z-monomials); the other branch or valley flips to zbar-monomials.  The
    stored energy is the positive principal root.  With Fraction
    coefficients and a perfect-square radicand the state is exact; otherwise
    it is built in floats.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError("level index must be a nonnegative integer")
    d = coeffs.d1(branch)
    if d is None:
        raise DegenerateCoefficientsError(
            f"envelope for branch {branch.value} undefined at these coefficients"
        )
    block_coef = coeffs.a_coef if branch is Branch.I else coeffs.b_coef
    energy = level_energy_from_coeffs(coeffs, n, branch)
    denom = (n + 1) * block_coef * coeffs.hbar
    exact_ok = (
        isinstance(energy, ComplexRational)
        and _is_exact_scalar(denom)
        and _is_exact_scalar(d)
        and _is_exact_scalar(a_n)
    )
    if not exact_ok:
        # irrational energy (or any float input) forces the state into floats
        energy = complex(energy)
        denom = complex(denom)
        d = float(d)
        a_n = complex(a_n)
    ratio = energy / denom
    holo = (branch is Branch.I) == (valley is Valley.PRIMARY)
    if holo:
        upper = WeightedPolynomial({(n, 0): a_n}, d)
        lower = WeightedPolynomial({(n + 1, 0): _times_i(a_n * ratio)}, d)
    else:
        upper = WeightedPolynomial({(0, n + 1): -(a_n * ratio)}, d)
        lower = WeightedPolynomial({(0, n): _times_i(a_n)}, d)
    return SpinorFunction(upper, lower, energy)


def eigen_residual(h: OperatorExpr, s: SpinorFunction, energy: Coeff) -> float:
    """Relative coefficient norm of H s - E s.

    Zero (literally, on the exact path) for the analytic states with their
    own energies; order one for a wrong energy.
    """
    if not (h.is_exact() and s.is_exact() and _is_exact_scalar(energy)):
        h = h.to_complex()
        s = s.to_complex()
        energy = complex(energy)
    image = h.apply(s)
    shifted = s.scaled(energy)
    diff = image.sub(shifted)
    scale = max(1.0, image.max_abs_coeff(), shifted.max_abs_coeff())
    return diff.max_abs_coeff() / scale


# ---------------------------------------------------------------------------
# zero modes and the ladder
# ---------------------------------------------------------------------------


def lll_state(
    l: int, coeffs: DerivedCoeffs, valley: Valley = Valley.PRIMARY
) -> WeightedPolynomial:
    """Degree-l member of the infinitely degenerate zero-mode family.

    Primary valley: zbar^l exp((c1/(a hbar)) z zbar); the time-reversed
    valley carries the other envelope.  Each is annihilated by the
    upper-right block of its valley Hamiltonian.
    """
    if not isinstance(l, int) or isinstance(l, bool) or l < 0:
        raise ValueError("degree must be a nonnegative integer")
    d = coeffs.d1_branch_i if valley is Valley.PRIMARY else coeffs.d1_branch_ii
    if d is None:
        raise DegenerateCoefficientsError(
            "zero-mode envelope undefined at these coefficients"
        )
    return WeightedPolynomial.monomial(0, l, 1, d)


def lll_annihilation_residual(
    wp: WeightedPolynomial, coeffs: DerivedCoeffs, valley: Valley = Valley.PRIMARY
) -> float:
    """Size of (annihilating block applied to wp), relative to wp's scale."""
    ur, _ = block_operators(coeffs, valley)
    image = ur.apply_poly(wp)
    return image.max_abs_coeff() / max(1.0, wp.max_abs_coeff())


def ladder_raise(
    wp: WeightedPolynomial, k: int, coeffs: DerivedCoeffs
) -> WeightedPolynomial:
    """Apply the normalized raising block (lower-left over sqrt(k_coef)) k times."""
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError("k must be a positive integer")
    if not coeffs.k_coef:
        raise ValueError("k_coef = 0: ladder normalization undefined")
    sqrt_k = cmath.sqrt(complex(coeffs.k_coef))
    _, ll = block_operators(coeffs, Valley.PRIMARY)
    op = ll.to_complex().scaled(1 / sqrt_k)
    out = wp.to_complex()
    for _ in range(k):
        out = op.apply_poly(out)
    return out


@dataclass(frozen=True)
class JCReport:
    commutator_residual: float
    factorization_residual: float


def jc_verify(coeffs: DerivedCoeffs, degree: int = 30) -> JCReport:
    """Check the pseudo-bosonic pair and the spin-ladder form of H.

    With Q1 = (upper-right block)/sqrt(k_coef) and Q2dag = (lower-left
    block)/sqrt(k_coef), the commutator [Q1, Q2dag] must be the identity and
    H must equal sqrt(k_coef) * (sigma_plus Q1 + sigma_minus Q2dag), where
    sigma_plus/sigma_minus are the matrix units ((0,1),(0,0)) and
    ((0,0),(1,0)).  That normalization (half of sigma_x +- i sigma_y) is
    fixed by matching the lowest-level matrix element; the 1/sqrt(2)
    convention would leave a factor sqrt(2) behind.

    Residuals are worst-case over all monomial probes of total degree at
    most ``degree``.  On the exact path the square roots cancel symbolically
    and both residuals are literal zeros.
    """
    if not isinstance(degree, int) or degree < 2:
        raise ValueError("degree must be an integer >= 2")
    if not coeffs.k_coef:
        raise ValueError("k_coef = 0: ladder normalization undefined")
    lower_b, raise_b = block_operators(coeffs, Valley.PRIMARY)
    exact = isinstance(coeffs.k_coef, (int, Fraction)) and not isinstance(
        coeffs.k_coef, bool
    )
    if exact:
        inv_k = Fraction(1) / Fraction(coeffs.k_coef)
        comm = (lower_b @ raise_b - raise_b @ lower_b).scaled(
            inv_k
        ) - OperatorExpr.identity()
        fact = build_hamiltonian(coeffs, Valley.PRIMARY) - (
            OperatorExpr.spin(E01) @ lower_b + OperatorExpr.spin(E10) @ raise_b
        )
        d_env = coeffs.d1_branch_i
        if d_env is None:
            d_env = coeffs.d1_branch_ii
        if d_env is None:
            d_env = Fraction(0)
    else:
        sqrt_k = cmath.sqrt(complex(coeffs.k_coef))
        q1 = lower_b.to_complex().scaled(1 / sqrt_k)
        q2d = raise_b.to_complex().scaled(1 / sqrt_k)
        comm = q1 @ q2d - q2d @ q1 - OperatorExpr.identity().to_complex()
        fact = build_hamiltonian(coeffs, Valley.PRIMARY).to_complex() - (
            OperatorExpr.spin(E01).to_complex() @ q1
            + OperatorExpr.spin(E10).to_complex() @ q2d
        ).scaled(sqrt_k)
        d_env = coeffs.d1_branch_i
        if d_env is None:
            d_env = coeffs.d1_branch_ii
        if d_env is None:
            d_env = -0.25
    comm_res = 0.0
    fact_res = 0.0
    for m in range(degree + 1):
        for n in range(degree + 1 - m):
            probe = WeightedPolynomial.monomial(m, n, 1, d_env)
            comm_res = max(comm_res, comm.apply_poly(probe).max_abs_coeff())
            zero = WeightedPolynomial.zero(d_env)
            for s in (SpinorFunction(probe, zero), SpinorFunction(zero, probe)):
                fact_res = max(fact_res, fact.apply(s).max_abs_coeff())
    return JCReport(comm_res, fact_res)
