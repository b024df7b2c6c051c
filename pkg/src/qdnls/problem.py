"""Exact algebra of the system parameters and its null structure.

Masses and coefficient-tensor entries are kept as exact rationals
(every binary float converts losslessly), so the null-condition check,
the gauge/strong-form decomposition and its inverse are exact identities
rather than tolerance tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence


class NotNullError(ValueError):
    """Decomposition was requested for a tensor violating the null condition."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact: binary floats are rationals
    raise TypeError(f"cannot represent {x!r} exactly as a rational")


@dataclass(frozen=True)
class ExactComplex:
    """Complex number with exact rational real and imaginary parts."""

    re: Fraction
    im: Fraction

    @classmethod
    def of(cls, z) -> "ExactComplex":
        if isinstance(z, ExactComplex):
            return z
        if isinstance(z, complex):
            return cls(_frac(z.real), _frac(z.imag))
        return cls(_frac(z), Fraction(0))

    @classmethod
    def zero(cls) -> "ExactComplex":
        return cls(Fraction(0), Fraction(0))

    def __add__(self, other: "ExactComplex") -> "ExactComplex":
        return ExactComplex(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ExactComplex") -> "ExactComplex":
        return ExactComplex(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "ExactComplex":
        return ExactComplex(-self.re, -self.im)

    def __mul__(self, other) -> "ExactComplex":
        if isinstance(other, ExactComplex):
            return ExactComplex(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        f = _frac(other)
        return ExactComplex(self.re * f, self.im * f)

    __rmul__ = __mul__

    def times_i(self, scale: Fraction = Fraction(1)) -> "ExactComplex":
        """Multiply by i*scale (scale real)."""
        return ExactComplex(-self.im * scale, self.re * scale)

    def over(self, denom: Fraction) -> "ExactComplex":
        return ExactComplex(self.re / denom, self.im / denom)

    def conjugate(self) -> "ExactComplex":
        return ExactComplex(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


_ZERO = ExactComplex.zero()


@dataclass(frozen=True)
class MassTriple:
    """The three nonzero dispersion coefficients of the system."""

    m1: Fraction
    m2: Fraction
    m3: Fraction

    def __post_init__(self):
        for name in ("m1", "m2", "m3"):
            value = _frac(getattr(self, name))
            if value == 0:
                raise ValueError(f"mass {name} must be nonzero")
            object.__setattr__(self, name, value)

    def resonant(self) -> bool:
        """True iff m3 equals m1 + m2 exactly."""
        return self.m3 == self.m1 + self.m2

    def mass(self, j: int) -> Fraction:
        return (self.m1, self.m2, self.m3)[j - 1]

    def as_floats(self) -> tuple[float, float, float]:
        return (float(self.m1), float(self.m2), float(self.m3))


def check_resonance(masses: MassTriple) -> bool:
    """Exact test of the resonance relation m3 = m1 + m2."""
    return masses.resonant()


def _pairs(dim: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(1, dim + 1), 2))


class CoefficientTensor:
    """Complex constants C[k][alpha][beta] of the quadratic nonlinearity.

    Index 0 in a derivative slot means "no derivative"; index a in 1..dim
    means the derivative along axis a.  The conjugation pattern is
    structural: equation 1 conjugates its first factor, equation 2 its
    second, equation 3 none of them.
    """

    __slots__ = ("dim", "_entries")

    def __init__(self, dim: int, entries=None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        n = dim + 1
        if entries is None:
            entries = tuple(
                tuple(tuple(_ZERO for _ in range(n)) for _ in range(n))
                for _ in range(3)
            )
        self._entries = entries

    @classmethod
    def zeros(cls, dim: int) -> "CoefficientTensor":
        return cls(dim)

    @classmethod
    def from_entries(
        cls, dim: int, items: Iterable[tuple[int, int, int, object]]
    ) -> "CoefficientTensor":
        """Build from (equation, alpha, beta, value) items; omitted entries are zero."""
        n = dim + 1
        grid = [[[_ZERO for _ in range(n)] for _ in range(n)] for _ in range(3)]
        for eq, alpha, beta, value in items:
            if eq not in (1, 2, 3):
                raise ValueError(f"equation index {eq} not in 1..3")
            if not (0 <= alpha <= dim and 0 <= beta <= dim):
                raise ValueError(f"derivative slot ({alpha},{beta}) out of 0..{dim}")
            grid[eq - 1][alpha][beta] = grid[eq - 1][alpha][beta] + ExactComplex.of(value)
        return cls(dim, tuple(tuple(tuple(row) for row in eq) for eq in grid))

    def coeff(self, eq: int, alpha: int, beta: int) -> ExactComplex:
        return self._entries[eq - 1][alpha][beta]

    def nonzero_entries(self) -> Iterator[tuple[int, int, int, ExactComplex]]:
        for eq in (1, 2, 3):
            for alpha in range(self.dim + 1):
                for beta in range(self.dim + 1):
                    c = self.coeff(eq, alpha, beta)
                    if not c.is_zero():
                        yield eq, alpha, beta, c

    def is_zero(self) -> bool:
        return next(self.nonzero_entries(), None) is None

    def scaled(self, factor) -> "CoefficientTensor":
        lam = ExactComplex.of(factor)
        return CoefficientTensor.from_entries(
            self.dim,
            ((eq, a, b, c * lam) for eq, a, b, c in self.nonzero_entries()),
        )

    def as_array(self):
        import numpy as np

        out = np.zeros((3, self.dim + 1, self.dim + 1), dtype=complex)
        for eq, a, b, c in self.nonzero_entries():
            out[eq - 1, a, b] = complex(c)
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CoefficientTensor)
            and self.dim == other.dim
            and self._entries == other._entries
        )

    def __hash__(self) -> int:
        return hash((self.dim, self._entries))

    def __repr__(self) -> str:
        items = ", ".join(
            f"C[{eq}][{a}][{b}]={c!r}" for eq, a, b, c in self.nonzero_entries()
        )
        return f"CoefficientTensor(dim={self.dim}, {items or 'zero'})"


@dataclass(frozen=True)
class NullPolynomial:
    """Degree-<=2 polynomial in the frequency variable, exact coefficients.

    quad[a-1][b-1] holds the coefficient of xi_a*xi_b under the a<=b
    convention; slots below the diagonal stay zero.
    """

    dim: int
    const_term: ExactComplex
    linear: tuple[ExactComplex, ...]
    quad: tuple[tuple[ExactComplex, ...], ...]

    def evaluate(self, xi: Sequence) -> ExactComplex:
        if len(xi) != self.dim:
            raise ValueError("xi has wrong dimension")
        x = [_frac(v) for v in xi]
        acc = self.const_term
        for a in range(self.dim):
            acc = acc + self.linear[a] * x[a]
        for a in range(self.dim):
            for b in range(a, self.dim):
                acc = acc + self.quad[a][b] * (x[a] * x[b])
        return acc

    def coefficients(self) -> Iterator[tuple[tuple[int, ...], ExactComplex]]:
        """Yield (powers, coefficient) for every monomial, zero or not."""
        zero_pow = (0,) * self.dim
        yield zero_pow, self.const_term
        for a in range(self.dim):
            pow_a = tuple(1 if i == a else 0 for i in range(self.dim))
            yield pow_a, self.linear[a]
        for a in range(self.dim):
            for b in range(a, self.dim):
                powers = [0] * self.dim
                powers[a] += 1
                powers[b] += 1
                yield tuple(powers), self.quad[a][b]

    def nonzero_monomials(self) -> list[tuple[tuple[int, ...], ExactComplex]]:
        return [(p, c) for p, c in self.coefficients() if not c.is_zero()]

    def is_zero(self) -> bool:
        return not self.nonzero_monomials()


# Per equation: sign and mass entering each derivative factor.  A
# conjugated factor contributes (-i m xi_a), a plain one (+i m xi_a).
def _factor_signs(masses: MassTriple, eq: int) -> tuple[Fraction, Fraction]:
    if eq == 1:
        return -masses.m2, masses.m3
    if eq == 2:
        return masses.m3, -masses.m1
    if eq == 3:
        return masses.m1, masses.m2
    raise ValueError(f"equation index {eq} not in 1..3")


def null_polynomial(tensor: CoefficientTensor, masses: MassTriple, eq: int) -> NullPolynomial:
    """Exact symbol polynomial of one equation's nonlinearity."""
    d = tensor.dim
    sa, sb = _factor_signs(masses, eq)
    const = tensor.coeff(eq, 0, 0)
    linear = []
    for a in range(1, d + 1):
        # (i*sa) C[a][0] + (i*sb) C[0][a]
        linear.append(
            tensor.coeff(eq, a, 0).times_i(sa) + tensor.coeff(eq, 0, a).times_i(sb)
        )
    quad_rows = []
    for a in range(1, d + 1):
        row = []
        for b in range(1, d + 1):
            if b < a:
                row.append(_ZERO)
            elif b == a:
                # (i sa)(i sb) = -sa*sb
                row.append(tensor.coeff(eq, a, a) * (-sa * sb))
            else:
                folded = tensor.coeff(eq, a, b) + tensor.coeff(eq, b, a)
                row.append(folded * (-sa * sb))
        quad_rows.append(tuple(row))
    return NullPolynomial(d, const, tuple(linear), tuple(quad_rows))


def is_null(tensor: CoefficientTensor, masses: MassTriple) -> bool:
    """True iff all three symbol polynomials vanish identically (exact)."""
    return all(null_polynomial(tensor, masses, eq).is_zero() for eq in (1, 2, 3))


@dataclass(frozen=True)
class NullDecomposition:
    """Gauge-form and strong-form weights certifying the null condition.

    gauge[j-1][a-1] multiplies the gauge form of equation j along axis a;
    strong[j-1][p] multiplies the antisymmetric gradient form for the
    p-th axis pair (a, b), a < b, in lexicographic order.
    """

    dim: int
    gauge: tuple[tuple[ExactComplex, ...], ...]
    strong: tuple[tuple[ExactComplex, ...], ...]

    @classmethod
    def zeros(cls, dim: int) -> "NullDecomposition":
        npairs = len(_pairs(dim))
        return cls(
            dim,
            tuple(tuple(_ZERO for _ in range(dim)) for _ in range(3)),
            tuple(tuple(_ZERO for _ in range(npairs)) for _ in range(3)),
        )

    @classmethod
    def from_weights(cls, dim: int, gauge=(), strong=()) -> "NullDecomposition":
        """Build from (eq, axis, value) gauge and (eq, a, b, value) strong items."""
        pairs = _pairs(dim)
        g = [[_ZERO for _ in range(dim)] for _ in range(3)]
        s = [[_ZERO for _ in range(len(pairs))] for _ in range(3)]
        for eq, axis, value in gauge:
            g[eq - 1][axis - 1] = g[eq - 1][axis - 1] + ExactComplex.of(value)
        for eq, a, b, value in strong:
            v = ExactComplex.of(value)
            if a == b:
                raise ValueError("strong-form pair needs distinct axes")
            if a > b:
                a, b, v = b, a, -v
            s[eq - 1][pairs.index((a, b))] = s[eq - 1][pairs.index((a, b))] + v
        return cls(dim, tuple(tuple(r) for r in g), tuple(tuple(r) for r in s))

    def axis_pairs(self) -> list[tuple[int, int]]:
        return _pairs(self.dim)

    def gauge_weight(self, eq: int, axis: int) -> ExactComplex:
        return self.gauge[eq - 1][axis - 1]

    def strong_weight(self, eq: int, a: int, b: int) -> ExactComplex:
        pairs = _pairs(self.dim)
        if a < b:
            return self.strong[eq - 1][pairs.index((a, b))]
        if b < a:
            return -self.strong[eq - 1][pairs.index((b, a))]
        raise ValueError("strong-form pair needs distinct axes")

    def is_zero(self) -> bool:
        return all(c.is_zero() for row in self.gauge for c in row) and all(
            c.is_zero() for row in self.strong for c in row
        )


# Tensor slots hit by the gauge form of each equation: the first entry
# weights C[eq][0][a], the second C[eq][a][0].
def _gauge_slots(masses: MassTriple, eq: int) -> tuple[Fraction, Fraction]:
    if eq == 1:
        return masses.m2, masses.m3
    if eq == 2:
        return masses.m3, masses.m1
    if eq == 3:
        return masses.m1, -masses.m2
    raise ValueError(f"equation index {eq} not in 1..3")


def decompose(tensor: CoefficientTensor, masses: MassTriple) -> NullDecomposition:
    """Extract the gauge/strong weights of a null tensor.

    Raises NotNullError naming the first violated coefficient condition.
    """
    d = tensor.dim
    pairs = _pairs(d)
    gauge = []
    strong = []
    for eq in (1, 2, 3):
        if not tensor.coeff(eq, 0, 0).is_zero():
            raise NotNullError(f"equation {eq}: constant term C[{eq}][0][0] is nonzero")
        w0a, wa0 = _gauge_slots(masses, eq)
        row = []
        for a in range(1, d + 1):
            cand = tensor.coeff(eq, 0, a).over(w0a)
            other = tensor.coeff(eq, a, 0).over(wa0)
            if cand != other:
                raise NotNullError(
                    f"equation {eq}, axis {a}: gauge slots C[{eq}][0][{a}], "
                    f"C[{eq}][{a}][0] are inconsistent"
                )
            row.append(cand)
        gauge.append(tuple(row))
        srow = []
        for a, b in pairs:
            if not (tensor.coeff(eq, a, b) + tensor.coeff(eq, b, a)).is_zero():
                raise NotNullError(
                    f"equation {eq}: off-diagonal quadratic slots ({a},{b}) "
                    "are not antisymmetric"
                )
            srow.append(tensor.coeff(eq, a, b))
        for a in range(1, d + 1):
            if not tensor.coeff(eq, a, a).is_zero():
                raise NotNullError(
                    f"equation {eq}: diagonal quadratic slot ({a},{a}) is nonzero"
                )
        strong.append(tuple(srow))
    return NullDecomposition(d, tuple(gauge), tuple(strong))


def expand(decomposition: NullDecomposition, masses: MassTriple) -> CoefficientTensor:
    """Rebuild the coefficient tensor of a gauge/strong combination."""
    d = decomposition.dim
    items: list[tuple[int, int, int, ExactComplex]] = []
    for eq in (1, 2, 3):
        w0a, wa0 = _gauge_slots(masses, eq)
        for a in range(1, d + 1):
            weight = decomposition.gauge[eq - 1][a - 1]
            if weight.is_zero():
                continue
            items.append((eq, 0, a, weight * w0a))
            items.append((eq, a, 0, weight * wa0))
        for (a, b), weight in zip(_pairs(d), decomposition.strong[eq - 1]):
            if weight.is_zero():
                continue
            items.append((eq, a, b, weight))
            items.append((eq, b, a, -weight))
    return CoefficientTensor.from_entries(d, items)
