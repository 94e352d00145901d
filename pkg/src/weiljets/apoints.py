"""Algebra-valued points of R^n: evaluation, prolongation, group lifting.

An A-point assigns to each ambient coordinate an element of a Weil algebra;
evaluating a polynomial at the point is the finite Taylor expansion around
the underlying real point, carried out with the algebra's multiplication
table.  Real components (the coordinates of a value over the basis
monomials) are what turn A-points into honest coordinates: prolongation of
ideals and the lifted group operations all happen through them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DimensionMismatchError
from .jets import Jet, _jet_from_origin
from .monomials import Exponent, window, window_size
from .poly import (
    TruncatedPolynomial,
    as_fraction,
    format_polynomial,
    truncated_product,
    variable_names,
)
from .subspace import canonical_basis, invert_matrix, mat_vec, nullspace
from .weil import AlgebraElement, WeilAlgebra, tensor_product

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class APoint:
    """A morphism from the polynomial coordinate ring into a Weil algebra."""

    algebra: WeilAlgebra
    images: tuple[AlgebraElement, ...]

    def __post_init__(self):
        for img in self.images:
            if img.algebra != self.algebra:
                raise DimensionMismatchError("image lives in the wrong algebra")

    @property
    def ambient_dimension(self) -> int:
        return len(self.images)

    @property
    def base_point(self) -> tuple[Fraction, ...]:
        return tuple(img.augmentation() for img in self.images)

    def __repr__(self) -> str:
        return f"APoint(n={self.ambient_dimension}, algebra={self.algebra!r})"


def apoint(algebra: WeilAlgebra, images: Sequence) -> APoint:
    """Convenience constructor accepting coordinate tuples for the images."""
    elems = []
    for img in images:
        elems.append(
            img if isinstance(img, AlgebraElement) else algebra.element(img)
        )
    return APoint(algebra, tuple(elems))


def evaluate(f: TruncatedPolynomial, point: APoint) -> AlgebraElement:
    """f(p^A) by the finite Taylor expansion at the underlying real point.

    The coordinates of the result over the basis monomials are the real
    components of f at the point.
    """
    if f.variable_count != point.ambient_dimension:
        raise DimensionMismatchError(
            f"polynomial in {f.variable_count} variables evaluated at a point "
            f"of R^{point.ambient_dimension}"
        )
    algebra = point.algebra
    base = point.base_point
    shifted = f.shift(base) if any(base) else f
    nil = [img.nilpotent_part().coordinates for img in point.images]
    order = algebra.order

    cache: dict[Exponent, tuple[Fraction, ...]] = {}

    def power_product(exp: Exponent) -> tuple[Fraction, ...]:
        if exp in cache:
            return cache[exp]
        if sum(exp) == 0:
            out = algebra.one().coordinates
        else:
            i = next(k for k, e in enumerate(exp) if e)
            lowered = list(exp)
            lowered[i] -= 1
            out = algebra.mult_coords(power_product(tuple(lowered)), nil[i])
        cache[exp] = out
        return out

    total = [_ZERO] * algebra.dimension
    for exp, c in shifted.coefficients.items():
        if sum(exp) > order:
            continue  # nilpotent parts of degree past the order vanish
        term = power_product(exp)
        for g, v in enumerate(term):
            if v:
                total[g] += c * v
    return algebra.element(total)


def regularity_and_kernel(point: APoint) -> tuple[bool, Jet]:
    """Surjectivity of the evaluation plus its kernel jet at the base point."""
    algebra = point.algebra
    d = algebra.dimension
    vecs = list(algebra.maximal_power(2).basis)
    vecs += [img.nilpotent_part().coordinates for img in point.images]
    regular = canonical_basis(vecs, d) == algebra.maximal_ideal

    n = point.ambient_dimension
    bound = algebra.order + 1
    exps = window(n, bound)
    shifted_point = APoint(
        algebra, tuple(img.nilpotent_part() for img in point.images)
    )
    columns = [
        evaluate(TruncatedPolynomial.monomial(n, bound, e), shifted_point).coordinates
        for e in exps
    ]
    rows = [[columns[c][out] for c in range(len(exps))] for out in range(d)]
    kernel = nullspace(rows, len(exps))
    gens = tuple(
        TruncatedPolynomial.from_vector(n, bound, r) for r in kernel.basis
    )
    jet = _jet_from_origin(n, point.base_point, gens, algebra.order)
    return regular, jet


def cartesian_product(p: APoint, q: APoint) -> APoint:
    """The unique point on the product splitting back into p and q."""
    if p.algebra != q.algebra:
        raise DimensionMismatchError("cartesian product needs a shared algebra")
    return APoint(p.algebra, p.images + q.images)


# -- generic points and prolongation of ideals -----------------------------------


def component_names(algebra: WeilAlgebra, n: int) -> list[str]:
    """Names of the real-component coordinates x^i_alpha, layout order."""
    base = variable_names(n)
    return [f"{base[i]}{alpha}" for i in range(n) for alpha in range(algebra.dimension)]


def _generic_images(
    algebra: WeilAlgebra, n: int, bound: int
) -> list[list[TruncatedPolynomial]]:
    """The images of the ambient coordinates at the generic A-point.

    Elements of the coefficient ring tensored with A are stored as one
    polynomial (in the n*dim component variables) per basis monomial.
    """
    d = algebra.dimension
    total = n * d
    out = []
    for i in range(n):
        comp = []
        for alpha in range(d):
            comp.append(TruncatedPolynomial.variable(total, bound, i * d + alpha))
        out.append(comp)
    return out


def _tensor_mult(
    algebra: WeilAlgebra,
    u: Sequence[TruncatedPolynomial],
    v: Sequence[TruncatedPolynomial],
    bound: int,
) -> list[TruncatedPolynomial]:
    d = algebra.dimension
    total = u[0].variable_count
    out = [TruncatedPolynomial.zero(total, bound) for _ in range(d)]
    for a in range(d):
        if u[a].is_zero():
            continue
        row = algebra._mult[a]
        for b in range(d):
            if v[b].is_zero():
                continue
            prod = truncated_product(u[a], v[b], bound)
            for g, c in row[b]:
                out[g] = out[g] + prod.scale(c)
    return out


def prolong_polynomial(
    f: TruncatedPolynomial, algebra: WeilAlgebra
) -> list[TruncatedPolynomial]:
    """Real components of f at the generic A-point, as exact polynomials."""
    n = f.variable_count
    d = algebra.dimension
    bound = max(f.degree(), 1)
    total = n * d
    images = _generic_images(algebra, n, bound)

    cache: dict[Exponent, list[TruncatedPolynomial]] = {}

    def power_product(exp: Exponent) -> list[TruncatedPolynomial]:
        if exp in cache:
            return cache[exp]
        if sum(exp) == 0:
            out = [
                TruncatedPolynomial.constant(total, bound, 1 if g == 0 else 0)
                for g in range(d)
            ]
        else:
            i = next(k for k, e in enumerate(exp) if e)
            lowered = list(exp)
            lowered[i] -= 1
            out = _tensor_mult(algebra, power_product(tuple(lowered)), images[i], bound)
        cache[exp] = out
        return out

    total_comps = [TruncatedPolynomial.zero(total, bound) for _ in range(d)]
    for exp, c in f.coefficients.items():
        term = power_product(exp)
        for g in range(d):
            if not term[g].is_zero():
                total_comps[g] = total_comps[g] + term[g].scale(c)
    return total_comps


def prolong_ideal(
    generators: Sequence[TruncatedPolynomial], algebra: WeilAlgebra
) -> list[list[TruncatedPolynomial]]:
    """Per generator, the list of its real-component polynomials.

    The components live on the n*dim(A) coordinates of the A-point space; a
    concrete A-point kills all of them exactly when every generator
    evaluates to zero there.
    """
    return [prolong_polynomial(f, algebra) for f in generators]


def components_at(
    components: Sequence[TruncatedPolynomial], point: APoint
) -> list[Fraction]:
    """Evaluate component polynomials at the real components of a point."""
    coords: list[Fraction] = []
    for img in point.images:
        coords.extend(img.coordinates)
    return [f.evaluate(coords) for f in components]


# -- Weil's theorem check -----------------------------------------------------------


@dataclass(frozen=True)
class WeilCheckReport:
    """Outcome of the two-route real-component comparison."""

    equal: bool
    tensor_algebra: WeilAlgebra
    direct: tuple[tuple[Fraction, ...], ...]     # [alpha][beta]
    two_stage: tuple[tuple[Fraction, ...], ...]  # [alpha][beta]


def weil_iso_check(
    f: TruncatedPolynomial,
    a: WeilAlgebra,
    b: WeilAlgebra,
    point_matrices: Sequence[Sequence[Sequence]],
) -> WeilCheckReport:
    """Compare (f_alpha)_beta against the paired components over the tensor.

    ``point_matrices[i][alpha][beta]`` gives the coordinate of the i-th
    ambient image over the basis pair (alpha, beta).
    """
    n = f.variable_count
    if len(point_matrices) != n:
        raise DimensionMismatchError("need one coefficient matrix per coordinate")
    da, db = a.dimension, b.dimension
    mats = [
        [[as_fraction(v) for v in row] for row in m] for m in point_matrices
    ]
    for m in mats:
        if len(m) != da or any(len(row) != db for row in m):
            raise DimensionMismatchError("coefficient matrix has the wrong shape")

    tensor = tensor_product(a, b)
    if tensor.dimension != da * db:
        raise DimensionMismatchError("tensor basis does not split into pairs")
    pair_cols = []
    for alpha in range(da):
        for beta in range(db):
            exp = a.basis_monomials[alpha] + b.basis_monomials[beta]
            pair_cols.append(tensor.monomial_class(exp))
    pair_matrix = [
        [pair_cols[k][i] for k in range(da * db)] for i in range(tensor.dimension)
    ]
    pair_inverse = invert_matrix([tuple(r) for r in pair_matrix])
    if pair_inverse is None:
        raise DimensionMismatchError("tensor pairing is degenerate")

    # Route 1: evaluate directly over A (x) B and convert to pair coordinates.
    images = []
    for i in range(n):
        coords = [_ZERO] * tensor.dimension
        for alpha in range(da):
            for beta in range(db):
                c = mats[i][alpha][beta]
                if c:
                    col = pair_cols[alpha * db + beta]
                    for g, v in enumerate(col):
                        if v:
                            coords[g] += c * v
        images.append(tensor.element(coords))
    direct_t = evaluate(f, APoint(tensor, tuple(images))).coordinates
    direct_pairs = mat_vec(pair_inverse, direct_t)
    direct = tuple(
        tuple(direct_pairs[alpha * db + beta] for beta in range(db))
        for alpha in range(da)
    )

    # Route 2: components over A, then components of those over B.
    comps = prolong_polynomial(f, a)
    b_images = []
    for i in range(n):
        for alpha in range(da):
            b_images.append(b.element(mats[i][alpha]))
    stage_point = APoint(b, tuple(b_images))
    two_stage = tuple(
        tuple(evaluate(comps[alpha], stage_point).coordinates)
        for alpha in range(da)
    )

    return WeilCheckReport(direct == two_stage, tensor, direct, two_stage)


# -- Lie group prolongation -----------------------------------------------------------


@dataclass(frozen=True)
class GroupLaw:
    """Polynomial group law on R^n, validated on construction."""

    dimension: int
    law: tuple[TruncatedPolynomial, ...]       # n polynomials in 2n variables
    identity: tuple[Fraction, ...]
    inverse: tuple[TruncatedPolynomial, ...]   # n polynomials in n variables

    def __post_init__(self):
        n = self.dimension
        if len(self.law) != n or len(self.inverse) != n:
            raise DimensionMismatchError("group law needs n components")
        for f in self.law:
            if f.variable_count != 2 * n:
                raise DimensionMismatchError("law components take 2n variables")
        for f in self.inverse:
            if f.variable_count != n:
                raise DimensionMismatchError("inverse components take n variables")
        bound = max(
            [f.degree() for f in self.law]
            + [f.degree() for f in self.inverse]
        )
        bound = max(bound * bound, 1)
        xs = [TruncatedPolynomial.variable(n, bound, i) for i in range(n)]
        e = [TruncatedPolynomial.constant(n, bound, c) for c in self.identity]
        from .poly import truncated_substitute

        left = [truncated_substitute(f, e + xs, bound) for f in self.law]
        if left != xs:
            raise ValueError("identity is not left-neutral for the law")
        right = [truncated_substitute(f, xs + e, bound) for f in self.law]
        if right != xs:
            raise ValueError("identity is not right-neutral for the law")
        inv = [f.with_bound(bound) for f in self.inverse]
        prod = [truncated_substitute(f, xs + inv, bound) for f in self.law]
        expected = [
            TruncatedPolynomial.constant(n, bound, c) for c in self.identity
        ]
        if prod != expected:
            raise ValueError("inverse map does not invert the law")

    def multiply_points(self, p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
        vals = [as_fraction(v) for v in list(p) + list(q)]
        return [f.evaluate(vals) for f in self.law]

    def invert_point(self, p: Sequence[Fraction]) -> list[Fraction]:
        vals = [as_fraction(v) for v in p]
        return [f.evaluate(vals) for f in self.inverse]


def group_law(
    dimension: int,
    law: Sequence[TruncatedPolynomial],
    identity: Sequence,
    inverse: Sequence[TruncatedPolynomial],
) -> GroupLaw:
    return GroupLaw(
        dimension,
        tuple(law),
        tuple(as_fraction(c) for c in identity),
        tuple(inverse),
    )


@dataclass(frozen=True)
class ProlongedGroup:
    """The group of A-points of a polynomial group law."""

    law: GroupLaw
    algebra: WeilAlgebra

    def product(self, p: APoint, q: APoint) -> APoint:
        self._check(p)
        self._check(q)
        joint = cartesian_product(p, q)
        return APoint(
            self.algebra,
            tuple(evaluate(f, joint) for f in self.law.law),
        )

    def identity(self) -> APoint:
        e = []
        for c in self.law.identity:
            coords = [_ZERO] * self.algebra.dimension
            coords[0] = c
            e.append(self.algebra.element(coords))
        return APoint(self.algebra, tuple(e))

    def inverse(self, p: APoint) -> APoint:
        self._check(p)
        return APoint(
            self.algebra,
            tuple(evaluate(f, p) for f in self.law.inverse),
        )

    def _check(self, p: APoint) -> None:
        if p.algebra != self.algebra:
            raise DimensionMismatchError("point does not live over the group algebra")
        if p.ambient_dimension != self.law.dimension:
            raise DimensionMismatchError("point has the wrong ambient dimension")

    def verify_axioms(self, points: Sequence[APoint]) -> bool:
        """Exact associativity, identity and inverse laws on the given points."""
        e = self.identity()
        for p in points:
            if self.product(p, e).images != p.images:
                return False
            if self.product(e, p).images != p.images:
                return False
            if self.product(p, self.inverse(p)).images != e.images:
                return False
        for p in points:
            for q in points:
                for s in points:
                    lhs = self.product(self.product(p, q), s)
                    rhs = self.product(p, self.product(q, s))
                    if lhs.images != rhs.images:
                        return False
        return True


def prolong_group(law: GroupLaw, algebra: WeilAlgebra) -> ProlongedGroup:
    """Lift the group operations to the algebra-valued points."""
    return ProlongedGroup(law, algebra)


# -- tangent correspondence ------------------------------------------------------------


def tangent_correspondence_check(
    f: TruncatedPolynomial,
    point: APoint,
    field_coefficients: Sequence[TruncatedPolynomial],
) -> bool:
    """(Df)(p^A) versus the induced derivative of the real components.

    The induced tangent vector on the component coordinates x^i_alpha has
    entries (a_i(p^A))_alpha; applying it to the component polynomials of f
    must reproduce the components of (Df)(p^A), exactly.
    """
    n = point.ambient_dimension
    algebra = point.algebra
    d = algebra.dimension
    if len(field_coefficients) != n:
        raise DimensionMismatchError("need one field coefficient per coordinate")

    bound = max(
        [f.degree()] + [a.degree() + max(f.degree() - 1, 0) for a in field_coefficients]
    )
    bound = max(bound, 1)
    df = TruncatedPolynomial.zero(n, bound)
    for i, a in enumerate(field_coefficients):
        term = truncated_product(a.with_bound(bound), f.derivative(i).with_bound(bound), bound)
        df = df + term
    route_one = evaluate(df, point).coordinates

    comps = prolong_polynomial(f, algebra)
    coords: list[Fraction] = []
    for img in point.images:
        coords.extend(img.coordinates)
    induced = [evaluate(a, point).coordinates for a in field_coefficients]
    route_two = []
    for alpha in range(d):
        total = _ZERO
        for i in range(n):
            for beta in range(d):
                v = induced[i][beta]
                if v:
                    partial = comps[alpha].derivative(i * d + beta)
                    if not partial.is_zero():
                        total += v * partial.evaluate(coords)
        route_two.append(total)
    return list(route_one) == route_two
