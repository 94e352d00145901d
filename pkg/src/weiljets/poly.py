"""Truncated multivariate polynomials with exact rational coefficients.

A polynomial is a sparse mapping from exponent tuples to ``Fraction``
coefficients together with a degree bound; every operation discards
monomials beyond the bound of the result.  Coefficients are never floats,
so equality of polynomials (and of everything built on top of them) is
exact.

The text syntax accepted by :func:`parse_polynomial` covers terms like
``3/2 x1^2 x3 - y``: rationals written ``p/q``, variables ``x1 .. xn`` with
the aliases ``x, y, z`` available when there are at most three variables,
and ``^`` (or ``**``) for powers.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DimensionMismatchError
from .monomials import Exponent, monomial_sort_key, window, window_index

Scalar = Fraction | int

_ZERO = Fraction(0)


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings; floats are rejected."""
    if isinstance(value, float):
        raise TypeError("floating-point input is not allowed; pass 'p/q' strings")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


class TruncatedPolynomial:
    """Polynomial of bounded degree; immutable by convention."""

    __slots__ = ("variable_count", "degree_bound", "coefficients")

    def __init__(
        self,
        variable_count: int,
        degree_bound: int,
        coefficients: Mapping[Exponent, Scalar] | None = None,
    ):
        if variable_count < 0 or degree_bound < 0:
            raise ValueError("variable count and degree bound must be non-negative")
        clean: dict[Exponent, Fraction] = {}
        for exp, raw in (coefficients or {}).items():
            if len(exp) != variable_count:
                raise DimensionMismatchError(
                    f"exponent {exp} does not have {variable_count} entries"
                )
            if sum(exp) > degree_bound:
                continue
            c = as_fraction(raw)
            if c:
                clean[exp] = c
        self.variable_count = variable_count
        self.degree_bound = degree_bound
        self.coefficients = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, variable_count: int, degree_bound: int) -> "TruncatedPolynomial":
        return cls(variable_count, degree_bound, {})

    @classmethod
    def constant(
        cls, variable_count: int, degree_bound: int, value: Scalar
    ) -> "TruncatedPolynomial":
        return cls(variable_count, degree_bound, {(0,) * variable_count: value})

    @classmethod
    def variable(
        cls, variable_count: int, degree_bound: int, index: int
    ) -> "TruncatedPolynomial":
        if not 0 <= index < variable_count:
            raise DimensionMismatchError(
                f"variable index {index} out of range for {variable_count} variables"
            )
        exp = [0] * variable_count
        exp[index] = 1
        return cls(variable_count, degree_bound, {tuple(exp): 1})

    @classmethod
    def monomial(
        cls, variable_count: int, degree_bound: int, exponent: Exponent, value: Scalar = 1
    ) -> "TruncatedPolynomial":
        return cls(variable_count, degree_bound, {tuple(exponent): value})

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coefficients

    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        if not self.coefficients:
            return 0
        return max(sum(e) for e in self.coefficients)

    def constant_term(self) -> Fraction:
        return self.coefficients.get((0,) * self.variable_count, _ZERO)

    def terms(self) -> list[tuple[Exponent, Fraction]]:
        """Terms in the canonical layout order."""
        return sorted(self.coefficients.items(), key=lambda t: monomial_sort_key(t[0]))

    def coefficient(self, exponent: Exponent) -> Fraction:
        return self.coefficients.get(tuple(exponent), _ZERO)

    # -- arithmetic ---------------------------------------------------------

    def _check_compatible(self, other: "TruncatedPolynomial") -> None:
        if self.variable_count != other.variable_count:
            raise DimensionMismatchError(
                f"variable counts differ: {self.variable_count} vs {other.variable_count}"
            )

    def __add__(self, other: "TruncatedPolynomial") -> "TruncatedPolynomial":
        self._check_compatible(other)
        bound = min(self.degree_bound, other.degree_bound)
        out = dict(self.coefficients)
        for exp, c in other.coefficients.items():
            out[exp] = out.get(exp, _ZERO) + c
        return TruncatedPolynomial(self.variable_count, bound, out)

    def __sub__(self, other: "TruncatedPolynomial") -> "TruncatedPolynomial":
        return self + (-other)

    def __neg__(self) -> "TruncatedPolynomial":
        return TruncatedPolynomial(
            self.variable_count,
            self.degree_bound,
            {e: -c for e, c in self.coefficients.items()},
        )

    def scale(self, value: Scalar) -> "TruncatedPolynomial":
        c = as_fraction(value)
        return TruncatedPolynomial(
            self.variable_count,
            self.degree_bound,
            {e: c * v for e, v in self.coefficients.items()},
        )

    def __mul__(self, other):
        if isinstance(other, TruncatedPolynomial):
            return truncated_product(
                self, other, min(self.degree_bound, other.degree_bound)
            )
        return self.scale(other)

    __rmul__ = __mul__

    def truncate(self, bound: int) -> "TruncatedPolynomial":
        return TruncatedPolynomial(self.variable_count, bound, self.coefficients)

    def with_bound(self, bound: int) -> "TruncatedPolynomial":
        """Same terms under a (possibly larger) bound."""
        if bound < self.degree():
            raise ValueError("with_bound would drop terms; use truncate")
        return TruncatedPolynomial(self.variable_count, bound, self.coefficients)

    def derivative(self, index: int) -> "TruncatedPolynomial":
        """Partial derivative with respect to variable ``index``."""
        out: dict[Exponent, Fraction] = {}
        for exp, c in self.coefficients.items():
            k = exp[index]
            if k == 0:
                continue
            lowered = list(exp)
            lowered[index] -= 1
            out[tuple(lowered)] = c * k
        return TruncatedPolynomial(self.variable_count, self.degree_bound, out)

    def evaluate(self, values: Sequence[Scalar]) -> Fraction:
        """Exact value at a rational point."""
        if len(values) != self.variable_count:
            raise DimensionMismatchError("wrong number of coordinates")
        vals = [as_fraction(v) for v in values]
        total = _ZERO
        for exp, c in self.coefficients.items():
            term = c
            for v, k in zip(vals, exp):
                if k:
                    term *= v**k
            total += term
        return total

    def shift(self, point: Sequence[Scalar]) -> "TruncatedPolynomial":
        """f(x + point), computed exactly (the degree does not grow)."""
        images = [
            TruncatedPolynomial(
                self.variable_count,
                self.degree_bound,
                {
                    _unit(self.variable_count, i): 1,
                    (0,) * self.variable_count: as_fraction(point[i]),
                },
            )
            for i in range(self.variable_count)
        ]
        return truncated_substitute(self, images, self.degree_bound)

    # -- coordinate vectors --------------------------------------------------

    def to_vector(self, bound: int | None = None) -> tuple[Fraction, ...]:
        """Dense coefficient vector over the window layout (truncating)."""
        b = self.degree_bound if bound is None else bound
        idx = window_index(self.variable_count, b)
        vec = [_ZERO] * len(idx)
        for exp, c in self.coefficients.items():
            if sum(exp) <= b:
                vec[idx[exp]] = c
        return tuple(vec)

    @classmethod
    def from_vector(
        cls, variable_count: int, bound: int, vector: Sequence[Scalar]
    ) -> "TruncatedPolynomial":
        exps = window(variable_count, bound)
        if len(vector) != len(exps):
            raise DimensionMismatchError(
                f"vector length {len(vector)} does not match window size {len(exps)}"
            )
        return cls(
            variable_count, bound, {e: v for e, v in zip(exps, vector) if v}
        )

    # -- equality / display ---------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruncatedPolynomial)
            and self.variable_count == other.variable_count
            and self.coefficients == other.coefficients
        )

    def __hash__(self) -> int:
        return hash((self.variable_count, frozenset(self.coefficients.items())))

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        return f"TruncatedPolynomial({format_polynomial(self)!r})"


def _unit(n: int, i: int) -> Exponent:
    exp = [0] * n
    exp[i] = 1
    return tuple(exp)


def truncated_product(
    f: TruncatedPolynomial, g: TruncatedPolynomial, bound: int
) -> TruncatedPolynomial:
    """f * g with every monomial of degree > bound discarded."""
    if f.variable_count != g.variable_count:
        raise DimensionMismatchError("cannot multiply polynomials in different rings")
    out: dict[Exponent, Fraction] = {}
    for ea, ca in f.coefficients.items():
        da = sum(ea)
        if da > bound:
            continue
        for eb, cb in g.coefficients.items():
            if da + sum(eb) > bound:
                continue
            exp = tuple(a + b for a, b in zip(ea, eb))
            prev = out.get(exp)
            out[exp] = ca * cb if prev is None else prev + ca * cb
    return TruncatedPolynomial(f.variable_count, bound, out)


def truncated_substitute(
    f: TruncatedPolynomial,
    images: Sequence[TruncatedPolynomial],
    bound: int,
    coordinate_change: bool = False,
) -> TruncatedPolynomial:
    """f(images[0], ..., images[n-1]) truncated at the given degree bound.

    With ``coordinate_change=True`` the images must all have zero constant
    term (a substitution meant as a local change of coordinates).
    """
    if len(images) != f.variable_count:
        raise DimensionMismatchError(
            f"need {f.variable_count} substitution images, got {len(images)}"
        )
    target_vars = images[0].variable_count if images else 0
    for img in images:
        if img.variable_count != target_vars:
            raise DimensionMismatchError("substitution images disagree on variables")
        if coordinate_change and img.constant_term():
            raise ValueError(
                "coordinate change requires images with zero constant term"
            )
    one = TruncatedPolynomial.constant(target_vars, bound, 1)
    # Cache powers of each image as they are needed.
    powers: list[list[TruncatedPolynomial]] = [[one] for _ in images]
    total = TruncatedPolynomial.zero(target_vars, bound)
    for exp, c in f.terms():
        term = one.scale(c)
        for i, k in enumerate(exp):
            if k == 0:
                continue
            cache = powers[i]
            while len(cache) <= k:
                cache.append(
                    truncated_product(cache[-1], images[i].truncate(bound), bound)
                )
            term = truncated_product(term, cache[k], bound)
        total = total + term
    return total


# -- text syntax --------------------------------------------------------------


def variable_names(variable_count: int) -> list[str]:
    """Display names: x, y, z for up to three variables, else x1..xn."""
    if variable_count <= 3:
        return ["x", "y", "z"][:variable_count]
    return [f"x{i + 1}" for i in range(variable_count)]


def _name_table(variable_count: int) -> dict[str, int]:
    names = {f"x{i + 1}": i for i in range(variable_count)}
    if variable_count <= 3:
        for i, alias in enumerate(["x", "y", "z"][:variable_count]):
            names[alias] = i
    return names


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>[a-zA-Z]\w*)|(?P<pow>\^|\*\*)|(?P<mul>\*)|(?P<sign>[+-]))"
)


def parse_polynomial(
    text: str, variable_count: int, degree_bound: int | None = None
) -> TruncatedPolynomial:
    """Parse the documented term syntax; the bound defaults to the exact degree."""
    names = _name_table(variable_count)
    coeffs: dict[Exponent, Fraction] = {}

    pos = 0
    sign = Fraction(1)
    pending: tuple[Fraction, list[int]] | None = None  # (coefficient, exponents)

    def flush():
        nonlocal pending
        if pending is None:
            return
        coeff, exps = pending
        exp = tuple(exps)
        coeffs[exp] = coeffs.get(exp, _ZERO) + coeff
        pending = None

    text = text.strip()
    if not text:
        raise ValueError("empty polynomial text")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse polynomial near {text[pos:pos + 12]!r}")
        pos = m.end()
        if m.group("sign"):
            flush()
            sign = Fraction(1) if m.group("sign") == "+" else Fraction(-1)
            continue
        if m.group("mul"):
            if pending is None:
                raise ValueError("unexpected '*'")
            continue
        if m.group("pow"):
            raise ValueError("unexpected exponent operator")
        if m.group("num"):
            value = Fraction(m.group("num"))
            if pending is None:
                pending = (sign * value, [0] * variable_count)
                sign = Fraction(1)
            else:
                pending = (pending[0] * value, pending[1])
            continue
        name = m.group("name")
        if name not in names:
            raise ValueError(f"unknown variable {name!r} for {variable_count} variables")
        power = 1
        pm = _TOKEN.match(text, pos)
        if pm and pm.group("pow"):
            pos = pm.end()
            em = _TOKEN.match(text, pos)
            if not em or not em.group("num") or "/" in em.group("num"):
                raise ValueError("exponent must be a non-negative integer")
            power = int(em.group("num"))
            pos = em.end()
        if pending is None:
            pending = (sign, [0] * variable_count)
            sign = Fraction(1)
        pending[1][names[name]] += power
    flush()

    bound = degree_bound
    if bound is None:
        bound = max((sum(e) for e in coeffs), default=0)
    return TruncatedPolynomial(variable_count, bound, coeffs)


def format_rational(value: Fraction) -> str:
    return str(value)


def format_polynomial(f: TruncatedPolynomial) -> str:
    """Canonical text form, terms in the layout order."""
    if f.is_zero():
        return "0"
    names = variable_names(f.variable_count)
    pieces: list[str] = []
    for exp, c in f.terms():
        factors = []
        for name, k in zip(names, exp):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{k}")
        mag = abs(c)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = " ".join(factors)
        else:
            body = f"{mag} " + " ".join(factors)
        if not pieces:
            pieces.append(body if c > 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(pieces)
