"""Finite-dimensional local rational algebras presented as truncated quotients.

An algebra here is R[x1..xn]/J where J contains every monomial of degree
order+1; it is stored through the window (n, order+1) as a canonical
subspace together with a monomial basis of the quotient and an exact
multiplication table.  Orders and widths come out of the maximal-ideal
filtration, so every invariant reported by this module is decidable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .errors import (
    DimensionMismatchError,
    EmptyQuotientError,
    NotAnIdealError,
    NotEpimorphismError,
    NotWellDefinedError,
)
from .monomials import (
    Exponent,
    degrees,
    monomials_of_degree,
    shift_tables,
    window,
    window_index,
    window_size,
)
from .poly import TruncatedPolynomial, as_fraction, format_polynomial, truncated_substitute
from .subspace import (
    Subspace,
    canonical_basis,
    invert_matrix,
    mat_vec,
    rref_insert,
    solve_columns,
    zero_subspace,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _saturate_rows(
    n: int, bound: int, rows: Iterable[Sequence[Fraction]]
) -> tuple[list[list[Fraction]], list[int]]:
    """Close a span under multiplication by every variable, in RREF form."""
    tables = shift_tables(n, bound)
    size = window_size(n, bound)
    basis: list[list[Fraction]] = []
    pivots: list[int] = []
    queue: list[list[Fraction]] = [list(r) for r in rows]
    while queue:
        row = queue.pop()
        if not rref_insert(basis, pivots, row):
            continue
        # The span of everything inserted so far is closed once each inserted
        # row has had all its variable shifts queued.
        for table in tables:
            shifted = [_ZERO] * size
            nonzero = False
            for j, c in enumerate(row):
                if c:
                    t = table[j]
                    if t is not None:
                        shifted[t] = c
                        nonzero = True
            if nonzero:
                queue.append(shifted)
    return basis, pivots


class WeilAlgebra:
    """Local rational quotient with an explicit monomial basis.

    Instances are built by :func:`quotient_algebra` (or :func:`tensor_product`)
    and treated as immutable afterwards.
    """

    def __init__(
        self,
        n: int,
        bound: int,
        ideal_basis: list[list[Fraction]],
        ideal_pivots: list[int],
        generator_rows: list[tuple[Fraction, ...]],
    ):
        self.n = n
        self.window_bound = bound
        size = window_size(n, bound)
        self.window_dimension = size
        degs = degrees(n, bound)
        if 0 in ideal_pivots:
            raise EmptyQuotientError("the defining ideal contains a unit")
        self.defining_ideal = Subspace(
            size, tuple(tuple(r) for r in ideal_basis), tuple(ideal_pivots)
        )
        self.ideal_generators = tuple(generator_rows)
        pivot_set = set(ideal_pivots)
        self.basis_columns: tuple[int, ...] = tuple(
            c for c in range(size) if c not in pivot_set
        )
        exps = window(n, bound)
        self.basis_monomials: tuple[Exponent, ...] = tuple(
            exps[c] for c in self.basis_columns
        )
        self.dimension = len(self.basis_columns)
        self._column_of = {c: i for i, c in enumerate(self.basis_columns)}

        # Class of each window monomial in quotient coordinates.
        reduce_table: list[tuple[Fraction, ...]] = []
        row_at_pivot = {p: row for p, row in zip(ideal_pivots, ideal_basis)}
        for c in range(size):
            if c in pivot_set:
                row = row_at_pivot[c]
                reduce_table.append(
                    tuple(-row[b] for b in self.basis_columns)
                )
            else:
                coords = [_ZERO] * self.dimension
                coords[self._column_of[c]] = _ONE
                reduce_table.append(tuple(coords))
        self._monomial_class = reduce_table

        # Maximal-ideal filtration: m^k = span of classes of monomials of
        # degree >= k; strictly decreasing until it vanishes.
        filtration: list[Subspace] = []
        k = 1
        while True:
            vecs = [
                reduce_table[c]
                for c in range(size)
                if degs[c] >= k and any(reduce_table[c])
            ]
            sub = canonical_basis(vecs, self.dimension)
            filtration.append(sub)
            if sub.dimension == 0:
                break
            k += 1
        self.order = len(filtration) - 1
        self.maximal_ideal = filtration[0]
        second = filtration[1] if len(filtration) > 1 else zero_subspace(self.dimension)
        self.width = filtration[0].dimension - second.dimension
        self._filtration = filtration
        self.filtration_dimensions = tuple(s.dimension for s in filtration)

        # Sparse multiplication table over the basis monomials.
        idx = window_index(n, bound)
        table: list[list[tuple[tuple[int, Fraction], ...]]] = []
        for a in self.basis_monomials:
            row_entries = []
            for b in self.basis_monomials:
                prod = tuple(x + y for x, y in zip(a, b))
                if sum(prod) > bound:
                    row_entries.append(())
                    continue
                coords = reduce_table[idx[prod]]
                row_entries.append(
                    tuple((g, c) for g, c in enumerate(coords) if c)
                )
            table.append(row_entries)
        self._mult = table
        self._derivations: "DerivationSpace | None" = None

    # -- identity ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeilAlgebra)
            and self.n == other.n
            and self.window_bound == other.window_bound
            and self.defining_ideal == other.defining_ideal
        )

    def __hash__(self) -> int:
        return hash((self.n, self.window_bound, self.defining_ideal.basis))

    def __repr__(self) -> str:
        return (
            f"WeilAlgebra(vars={self.n}, dim={self.dimension}, "
            f"order={self.order}, width={self.width})"
        )

    # -- elements --------------------------------------------------------------

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, (_ZERO,) * self.dimension)

    def one(self) -> "AlgebraElement":
        coords = [_ZERO] * self.dimension
        coords[0] = _ONE
        return AlgebraElement(self, tuple(coords))

    def generator(self, i: int) -> "AlgebraElement":
        """Class of the variable x_i."""
        exp = [0] * self.n
        exp[i] = 1
        return self.monomial_element(tuple(exp))

    def monomial_element(self, exponent: Exponent) -> "AlgebraElement":
        return AlgebraElement(self, self.monomial_class(exponent))

    def monomial_class(self, exponent: Exponent) -> tuple[Fraction, ...]:
        if sum(exponent) > self.window_bound:
            return (_ZERO,) * self.dimension
        idx = window_index(self.n, self.window_bound)[tuple(exponent)]
        return self._monomial_class[idx]

    def element(self, coordinates: Sequence) -> "AlgebraElement":
        coords = tuple(as_fraction(c) for c in coordinates)
        if len(coords) != self.dimension:
            raise DimensionMismatchError(
                f"need {self.dimension} coordinates, got {len(coords)}"
            )
        return AlgebraElement(self, coords)

    def project_vector(self, vector: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Window coefficient vector -> quotient coordinates."""
        coords = [_ZERO] * self.dimension
        for c, v in enumerate(vector):
            if v:
                cls = self._monomial_class[c]
                for g, w in enumerate(cls):
                    if w:
                        coords[g] += v * w
        return tuple(coords)

    def project_polynomial(self, f: TruncatedPolynomial) -> "AlgebraElement":
        if f.variable_count != self.n:
            raise DimensionMismatchError("polynomial has the wrong variable count")
        coords = [_ZERO] * self.dimension
        idx = window_index(self.n, self.window_bound)
        for exp, v in f.coefficients.items():
            if sum(exp) <= self.window_bound:
                cls = self._monomial_class[idx[exp]]
                for g, w in enumerate(cls):
                    if w:
                        coords[g] += v * w
        return AlgebraElement(self, tuple(coords))

    # -- arithmetic on raw coordinate tuples ------------------------------------

    def mult_coords(
        self, u: Sequence[Fraction], v: Sequence[Fraction]
    ) -> tuple[Fraction, ...]:
        out = [_ZERO] * self.dimension
        mult = self._mult
        for a, ua in enumerate(u):
            if not ua:
                continue
            row = mult[a]
            for b, vb in enumerate(v):
                if not vb:
                    continue
                w = ua * vb
                for g, c in row[b]:
                    out[g] += w * c
        return tuple(out)

    def power_coords(self, u: Sequence[Fraction], k: int) -> tuple[Fraction, ...]:
        result = self.one().coordinates
        base = tuple(u)
        for _ in range(k):
            result = self.mult_coords(result, base)
        return result

    def left_mult_rows(self, w: Sequence[Fraction]) -> list[list[Fraction]]:
        """Matrix of v -> w*v in quotient coordinates."""
        rows = [[_ZERO] * self.dimension for _ in range(self.dimension)]
        for a, wa in enumerate(w):
            if not wa:
                continue
            row = self._mult[a]
            for b in range(self.dimension):
                for g, c in row[b]:
                    rows[g][b] += wa * c
        return rows

    def maximal_power(self, k: int) -> Subspace:
        """m_A^k as a subspace of the quotient coordinate space."""
        if k <= 0:
            vecs = [self.one().coordinates] + [
                s for s in self._filtration[0].basis
            ]
            return canonical_basis(vecs, self.dimension)
        if k - 1 < len(self._filtration):
            return self._filtration[k - 1]
        return zero_subspace(self.dimension)

    def structure_constants(self):
        """Sparse (alpha, beta, gamma, c) with a^alpha a^beta = c a^gamma + ..."""
        for a in range(self.dimension):
            for b in range(self.dimension):
                for g, c in self._mult[a][b]:
                    yield (a, b, g, c)

    def basis_polynomial(self, index: int) -> TruncatedPolynomial:
        return TruncatedPolynomial.monomial(
            self.n, self.window_bound, self.basis_monomials[index]
        )

    def element_polynomial(self, coords: Sequence[Fraction]) -> TruncatedPolynomial:
        """A representative polynomial built from basis monomials."""
        terms = {
            self.basis_monomials[i]: c for i, c in enumerate(coords) if c
        }
        return TruncatedPolynomial(self.n, self.window_bound, terms)


@dataclass(frozen=True)
class AlgebraElement:
    """An element in quotient coordinates over the basis monomials."""

    algebra: WeilAlgebra
    coordinates: tuple[Fraction, ...]

    def _check(self, other: "AlgebraElement") -> None:
        if self.algebra != other.algebra:
            raise DimensionMismatchError("elements live in different algebras")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(
            self.algebra,
            tuple(a + b for a, b in zip(self.coordinates, other.coordinates)),
        )

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(
            self.algebra,
            tuple(a - b for a, b in zip(self.coordinates, other.coordinates)),
        )

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(-a for a in self.coordinates))

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(
                self.algebra,
                self.algebra.mult_coords(self.coordinates, other.coordinates),
            )
        c = as_fraction(other)
        return AlgebraElement(self.algebra, tuple(c * a for a in self.coordinates))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "AlgebraElement":
        return AlgebraElement(self.algebra, self.algebra.power_coords(self.coordinates, k))

    def is_zero(self) -> bool:
        return not any(self.coordinates)

    def augmentation(self) -> Fraction:
        """Constant term: the image in A/m_A = R."""
        return self.coordinates[0]

    def nilpotent_part(self) -> "AlgebraElement":
        coords = list(self.coordinates)
        coords[0] = _ZERO
        return AlgebraElement(self.algebra, tuple(coords))

    def __repr__(self) -> str:
        return f"AlgebraElement({format_polynomial(self.algebra.element_polynomial(self.coordinates))})"


def quotient_algebra(
    n: int,
    bound: int,
    generators: Sequence[TruncatedPolynomial] = (),
) -> WeilAlgebra:
    """Quotient of the degree-<=bound window by the ideal the generators span.

    The generators must have zero constant term.  The result is re-windowed so
    that its stored bound is order+1; in particular the defining ideal always
    contains every monomial of top degree.
    """
    rows = []
    for g in generators:
        if g.variable_count != n:
            raise DimensionMismatchError("generator has the wrong variable count")
        if g.constant_term():
            raise EmptyQuotientError(
                f"generator {format_polynomial(g)} has a nonzero constant term"
            )
        vec = list(g.truncate(bound).to_vector(bound))
        if any(vec):
            rows.append(vec)
    basis, pivots = _saturate_rows(n, bound, rows)
    return _rewindow(n, bound, basis, pivots, rows)


def _rewindow(
    n: int,
    bound: int,
    ideal_basis: list[list[Fraction]],
    ideal_pivots: list[int],
    generator_rows: list[list[Fraction]],
) -> WeilAlgebra:
    """Detect the order and restate the presentation in the order+1 window."""
    degs = degrees(n, bound)
    size = window_size(n, bound)
    sub = Subspace(
        size, tuple(tuple(r) for r in ideal_basis), tuple(ideal_pivots)
    )
    # Order = first k with every monomial of degree > k inside the ideal
    # (equivalently: the classes of degree >= k+1 monomials all vanish).
    order = 0
    for k in range(bound, 0, -1):
        # Is every monomial of degree exactly k in the ideal?
        cols = [c for c in range(size) if degs[c] == k]
        all_in = True
        for c in cols:
            e = [_ZERO] * size
            e[c] = _ONE
            if not sub.contains_vector(e):
                all_in = False
                break
        if not all_in:
            order = k
            break
    new_bound = order + 1
    old_index = window(n, bound)
    new_size = window_size(n, new_bound)
    new_idx = window_index(n, new_bound)

    def convert(row: Sequence[Fraction]) -> list[Fraction]:
        out = [_ZERO] * new_size
        for c, v in enumerate(row):
            if v:
                exp = old_index[c]
                if sum(exp) <= new_bound:
                    out[new_idx[exp]] += v
        return out

    top_rows = []
    for exp in monomials_of_degree(n, new_bound):
        row = [_ZERO] * new_size
        row[new_idx[exp]] = _ONE
        top_rows.append(row)

    converted = [convert(r) for r in ideal_basis]
    nb: list[list[Fraction]] = []
    np_: list[int] = []
    for row in converted + top_rows:
        rref_insert(nb, np_, row)
    gen_rows = [tuple(convert(r)) for r in generator_rows if any(convert(r))]
    gen_rows += [tuple(r) for r in top_rows]
    return WeilAlgebra(n, new_bound, nb, np_, gen_rows)


def order_and_width(algebra: WeilAlgebra) -> tuple[int, int]:
    """(first k with m^{k+1} = 0, dim m/m^2)."""
    return algebra.order, algebra.width


def free_truncated_algebra(m: int, order: int) -> WeilAlgebra:
    """The full truncated polynomial algebra in m variables at the given order."""
    return quotient_algebra(m, order, [])


def invariants_agree(a: WeilAlgebra, b: WeilAlgebra) -> bool:
    """Compare dimension, order, width, filtration and derivation dimension.

    Agreement certifies only that the computable invariants coincide; a full
    isomorphism search is deliberately not attempted.
    """
    return (
        a.dimension == b.dimension
        and a.order == b.order
        and a.width == b.width
        and a.filtration_dimensions == b.filtration_dimensions
        and derivation_space(a).dimension == derivation_space(b).dimension
    )


def is_free_truncated(algebra: WeilAlgebra) -> bool:
    return algebra.dimension == comb(algebra.n + algebra.order, algebra.order)


def tensor_product(a: WeilAlgebra, b: WeilAlgebra) -> WeilAlgebra:
    """Quotient on disjoint variables whose ideal joins both defining ideals."""
    n = a.n + b.n
    bound = a.order + b.order + 1
    gens: list[TruncatedPolynomial] = []
    for row in a.defining_ideal.basis:
        f = TruncatedPolynomial.from_vector(a.n, a.window_bound, row)
        gens.append(
            TruncatedPolynomial(
                n, bound, {exp + (0,) * b.n: c for exp, c in f.coefficients.items()}
            )
        )
    for row in b.defining_ideal.basis:
        f = TruncatedPolynomial.from_vector(b.n, b.window_bound, row)
        gens.append(
            TruncatedPolynomial(
                n, bound, {(0,) * a.n + exp: c for exp, c in f.coefficients.items()}
            )
        )
    result = quotient_algebra(n, bound, gens)
    result.basis_pairs = tuple(
        (exp[: a.n], exp[a.n :]) for exp in result.basis_monomials
    )
    return result


@dataclass(frozen=True)
class DerivationSpace:
    """Basis of Der(A, A): linear maps satisfying Leibniz on the quotient."""

    algebra: WeilAlgebra
    generator_images: tuple[tuple[tuple[Fraction, ...], ...], ...]
    matrices: tuple[tuple[tuple[Fraction, ...], ...], ...]

    @property
    def dimension(self) -> int:
        return len(self.generator_images)

    def relations_in_ambient(self) -> Subspace:
        """Images delta -> (delta[x^1], ..., delta[x^n]) flattened into A^n."""
        d = self.algebra.dimension
        rows = []
        for images in self.generator_images:
            row: list[Fraction] = []
            for img in images:
                row.extend(img)
            rows.append(row)
        return canonical_basis(rows, self.algebra.n * d)


def derivation_space(algebra: WeilAlgebra) -> DerivationSpace:
    """Solve the Leibniz system: derivations are fixed by generator images.

    A tuple (v_1, ..., v_n) in A^n defines a derivation exactly when
    sum_i [d g / d x_i] * v_i = 0 for every defining-ideal generator g;
    checking a generating set suffices since the rule is multiplicative.
    """
    if algebra._derivations is not None:
        return algebra._derivations
    n, d = algebra.n, algebra.dimension
    unknowns = n * d
    rows: list[list[Fraction]] = []
    basis: list[list[Fraction]] = []
    pivots: list[int] = []
    for gen in algebra.ideal_generators:
        f = TruncatedPolynomial.from_vector(algebra.n, algebra.window_bound, gen)
        blocks = []
        nontrivial = False
        for i in range(n):
            w = algebra.project_polynomial(f.derivative(i)).coordinates
            if any(w):
                nontrivial = True
            blocks.append(algebra.left_mult_rows(w))
        if not nontrivial:
            continue
        for out in range(d):
            row: list[Fraction] = []
            for i in range(n):
                row.extend(blocks[i][out])
            rref_insert(basis, pivots, row)
    # Kernel of the accumulated constraint rows, read off the RREF directly.
    free = [c for c in range(unknowns) if c not in set(pivots)]
    vectors = []
    for c in free:
        vec = [_ZERO] * unknowns
        vec[c] = _ONE
        for row, p in zip(basis, pivots):
            if row[c]:
                vec[p] = -row[c]
        vectors.append(vec)
    solution = canonical_basis(vectors, unknowns)

    gen_images = []
    matrices = []
    for vec in solution.basis:
        images = tuple(
            tuple(vec[i * d : (i + 1) * d]) for i in range(n)
        )
        gen_images.append(images)
        matrices.append(_derivation_matrix(algebra, images))
    space = DerivationSpace(algebra, tuple(gen_images), tuple(matrices))
    algebra._derivations = space
    return space


def _derivation_matrix(
    algebra: WeilAlgebra, images: Sequence[Sequence[Fraction]]
) -> tuple[tuple[Fraction, ...], ...]:
    """Matrix of the derivation on basis classes via the Leibniz expansion."""
    d = algebra.dimension
    cols: list[tuple[Fraction, ...]] = []
    for exp in algebra.basis_monomials:
        total = [_ZERO] * d
        for i, k in enumerate(exp):
            if not k:
                continue
            lowered = list(exp)
            lowered[i] -= 1
            cls = algebra.monomial_class(tuple(lowered))
            contrib = algebra.mult_coords(cls, images[i])
            for g, c in enumerate(contrib):
                if c:
                    total[g] += k * c
        cols.append(tuple(total))
    return tuple(
        tuple(cols[b][g] for b in range(d)) for g in range(d)
    )


@dataclass(frozen=True)
class AlgebraMorphism:
    """Unital algebra morphism fixed by its generator images."""

    source: WeilAlgebra
    target: WeilAlgebra
    images: tuple[AlgebraElement, ...]
    matrix: tuple[tuple[Fraction, ...], ...]  # target-coords rows over source basis
    is_epimorphism: bool

    def apply(self, element: AlgebraElement) -> AlgebraElement:
        if element.algebra != self.source:
            raise DimensionMismatchError("element does not live in the source algebra")
        return AlgebraElement(
            self.target, tuple(mat_vec(self.matrix, element.coordinates))
        )

    def apply_polynomial(self, f: TruncatedPolynomial) -> AlgebraElement:
        return self.apply(self.source.project_polynomial(f))

    def compose(self, inner: "AlgebraMorphism") -> "AlgebraMorphism":
        """self o inner (inner first)."""
        if inner.target != self.source:
            raise DimensionMismatchError("morphisms do not compose")
        return algebra_morphism(
            inner.source, self.target, [self.apply(img) for img in inner.images]
        )

    def is_identity(self) -> bool:
        if self.source != self.target:
            return False
        d = self.source.dimension
        return all(
            self.matrix[i][j] == (1 if i == j else 0)
            for i in range(d)
            for j in range(d)
        )

    def linear_part(self) -> list[list[Fraction]]:
        """n x n matrix of degree-1 coefficients of the generator images."""
        n = self.source.n
        rows = []
        for i in range(n):
            img = self.images[i]
            poly = self.target.element_polynomial(img.coordinates)
            row = []
            for j in range(self.target.n):
                exp = [0] * self.target.n
                exp[j] = 1
                row.append(poly.coefficient(tuple(exp)))
            rows.append(row)
        return rows


def algebra_morphism(
    source: WeilAlgebra,
    target: WeilAlgebra,
    images: Sequence[AlgebraElement | Sequence],
) -> AlgebraMorphism:
    """Validated morphism sending the class of x_i to images[i].

    Raises :class:`NotWellDefinedError` with a witness generator when some
    defining relation of the source has a nonzero image.
    """
    if len(images) != source.n:
        raise DimensionMismatchError(
            f"need one image per generator: {source.n} expected, {len(images)} given"
        )
    elems: list[AlgebraElement] = []
    for img in images:
        if isinstance(img, AlgebraElement):
            if img.algebra != target:
                raise DimensionMismatchError("image lives in the wrong algebra")
            elems.append(img)
        else:
            elems.append(target.element(img))

    # Image of every window monomial, built multiplicatively with caching.
    cache: dict[Exponent, tuple[Fraction, ...]] = {}

    def image_of(exp: Exponent) -> tuple[Fraction, ...]:
        if exp in cache:
            return cache[exp]
        if sum(exp) == 0:
            out = target.one().coordinates
        else:
            i = next(k for k, e in enumerate(exp) if e)
            lowered = list(exp)
            lowered[i] -= 1
            out = target.mult_coords(image_of(tuple(lowered)), elems[i].coordinates)
        cache[exp] = out
        return out

    # Well-definedness on a generating set of the ideal.
    for gen in source.ideal_generators:
        f = TruncatedPolynomial.from_vector(source.n, source.window_bound, gen)
        acc = [_ZERO] * target.dimension
        for exp, c in f.coefficients.items():
            img = image_of(exp)
            for g, v in enumerate(img):
                if v:
                    acc[g] += c * v
        if any(acc):
            raise NotWellDefinedError(format_polynomial(f))

    exps = window(source.n, source.window_bound)
    cols = [image_of(exps[c]) for c in source.basis_columns]
    matrix = tuple(
        tuple(cols[b][g] for b in range(source.dimension))
        for g in range(target.dimension)
    )

    # Epimorphism test: images must span m_B / m_B^2.
    vecs = list(target.maximal_power(2).basis)
    vecs += [e.nilpotent_part().coordinates for e in elems]
    epi = canonical_basis(vecs, target.dimension) == target.maximal_ideal

    return AlgebraMorphism(source, target, tuple(elems), matrix, epi)


def identity_morphism(algebra: WeilAlgebra) -> AlgebraMorphism:
    return algebra_morphism(
        algebra, algebra, [algebra.generator(i) for i in range(algebra.n)]
    )


def _monomial_images(
    algebra: WeilAlgebra, values: Sequence[AlgebraElement], bound: int, m: int
) -> list[tuple[Exponent, tuple[Fraction, ...]]]:
    """Classes of z^delta evaluated at the values, for 1 <= |delta| <= bound."""
    out = []
    for exp in window(m, bound):
        if sum(exp) == 0:
            continue
        acc = algebra.one().coordinates
        for i, k in enumerate(exp):
            for _ in range(k):
                acc = algebra.mult_coords(acc, values[i].coordinates)
        out.append((exp, acc))
    return out


def _express_in_generators(
    algebra: WeilAlgebra,
    values: Sequence[AlgebraElement],
    target: AlgebraElement,
    m: int,
) -> TruncatedPolynomial:
    """A zero-constant polynomial P with P(values) = target, in m variables."""
    bound = algebra.order if algebra.order > 0 else 1
    monos = _monomial_images(algebra, values, bound, m)
    columns = [list(coords) for _, coords in monos]
    solution = solve_columns(columns, list(target.coordinates))
    if solution is None:
        raise NotEpimorphismError(
            "images do not generate the target algebra"
        )
    coeffs = {
        exp: c for (exp, _), c in zip(monos, solution) if c
    }
    return TruncatedPolynomial(m, bound, coeffs)


def factor_epimorphism(
    alpha: AlgebraMorphism, beta: AlgebraMorphism
) -> AlgebraMorphism:
    """An automorphism g of the free source with beta = alpha o g.

    Both arguments must be epimorphisms from the same full truncated algebra.
    The construction straightens each epimorphism to a standard form (selected
    generators map to a distinguished generating set, the rest to zero) and
    splices the two straightenings; the identity beta = alpha o g is checked
    exactly before returning.
    """
    source = alpha.source
    if beta.source != source:
        raise DimensionMismatchError("epimorphisms must share their source")
    if alpha.target != beta.target:
        raise DimensionMismatchError("epimorphisms must share their target")
    if not is_free_truncated(source):
        raise NotEpimorphismError(
            "factorization requires the full truncated algebra as source"
        )
    if not alpha.is_epimorphism:
        raise NotEpimorphismError("first morphism is not an epimorphism")
    if not beta.is_epimorphism:
        raise NotEpimorphismError("second morphism is not an epimorphism")
    if source.order == 0:
        # A one-dimensional target forces alpha = beta = augmentation.
        return identity_morphism(source)

    n = source.n
    target = alpha.target

    def straighten(phi: AlgebraMorphism) -> tuple[list[int], AlgebraMorphism]:
        """Pivot indices S and automorphism h with (phi o h)(x_j)=0 off S."""
        classes = []
        for i in range(n):
            img = phi.images[i]
            red = target.maximal_power(2).reduce(img.nilpotent_part().coordinates)
            classes.append(red)
        pivot_rows: list[list[Fraction]] = []
        pivot_cols: list[int] = []
        selected: list[int] = []
        for i, cls in enumerate(classes):
            if rref_insert(pivot_rows, pivot_cols, list(cls)):
                selected.append(i)
        values = [phi.images[i] for i in selected]
        images = []
        for j in range(n):
            if j in selected:
                images.append(source.generator(j))
            else:
                correction = _express_in_generators(
                    target, values, phi.images[j], len(selected)
                )
                # Substitute the selected source variables for the formal ones.
                full = TruncatedPolynomial(
                    n,
                    source.window_bound,
                    {
                        _spread(exp, selected, n): c
                        for exp, c in correction.coefficients.items()
                    },
                )
                images.append(source.generator(j) - source.project_polynomial(full))
        h = algebra_morphism(source, source, images)
        return selected, h

    sel_a, h_a = straighten(alpha)
    sel_b, h_b = straighten(beta)
    std_a = alpha.compose(h_a)
    std_b = beta.compose(h_b)

    # Express the second distinguished generating set through the first.
    values_a = [std_a.images[i] for i in sel_a]
    w_images: list[AlgebraElement | None] = [None] * n
    for k, j in enumerate(sel_b):
        formal = _express_in_generators(
            target, values_a, std_b.images[j], len(sel_a)
        )
        full = TruncatedPolynomial(
            n,
            source.window_bound,
            {
                _spread(exp, sel_a, n): c
                for exp, c in formal.coefficients.items()
            },
        )
        w_images[j] = source.project_polynomial(full)
    rest_a = [j for j in range(n) if j not in sel_a]
    rest_b = [j for j in range(n) if j not in sel_b]
    for jb, ja in zip(rest_b, rest_a):
        w_images[jb] = source.generator(ja)
    w = algebra_morphism(source, source, [img for img in w_images])

    h_b_inv = invert_substitution(h_b)
    g = h_a.compose(w).compose(h_b_inv)

    # Exact verification of the factorization and of invertibility.
    composite = alpha.compose(g)
    for got, want in zip(composite.images, beta.images):
        if got.coordinates != want.coordinates:
            raise NotEpimorphismError("internal factorization check failed")
    if invert_matrix([tuple(r) for r in g.linear_part()]) is None:
        raise NotEpimorphismError("constructed substitution is not invertible")
    return g


def _spread(exp: Exponent, positions: Sequence[int], n: int) -> Exponent:
    """Re-embed an exponent on selected variables into n variables."""
    out = [0] * n
    for k, e in enumerate(exp):
        if e:
            out[positions[k]] = e
    return tuple(out)


def invert_substitution(phi: AlgebraMorphism) -> AlgebraMorphism:
    """Inverse of an automorphism of a free truncated algebra.

    Fixed-point iteration tau <- Lin^{-1} (id - N o tau) where phi = Lin + N
    splits off the linear part; each pass fixes one more degree.
    """
    source = phi.source
    if phi.target != source or not is_free_truncated(source):
        raise NotEpimorphismError("can only invert automorphisms of the free algebra")
    n = source.n
    bound = source.order
    lin = phi.linear_part()
    lin_inv = invert_matrix([tuple(r) for r in lin])
    if lin_inv is None:
        raise NotEpimorphismError("linear part is singular")

    phi_polys = [
        source.element_polynomial(phi.images[i].coordinates) for i in range(n)
    ]
    nonlinear = []
    for i in range(n):
        f = phi_polys[i]
        terms = {e: c for e, c in f.coefficients.items() if sum(e) >= 2}
        nonlinear.append(TruncatedPolynomial(n, bound, terms))

    def lin_inv_apply(polys: list[TruncatedPolynomial]) -> list[TruncatedPolynomial]:
        out = []
        for i in range(n):
            acc = TruncatedPolynomial.zero(n, bound)
            for j in range(n):
                if lin_inv[i][j]:
                    acc = acc + polys[j].scale(lin_inv[i][j])
            out.append(acc)
        return out

    identity = [
        TruncatedPolynomial.variable(n, bound, i) for i in range(n)
    ]
    tau = lin_inv_apply(identity)
    for _ in range(max(bound, 1)):
        n_of_tau = [
            truncated_substitute(nonlinear[i], tau, bound) for i in range(n)
        ]
        tau = lin_inv_apply(
            [identity[i] - n_of_tau[i] for i in range(n)]
        )
    return algebra_morphism(
        source, source, [source.project_polynomial(t) for t in tau]
    )


@dataclass(frozen=True)
class IdealStabilityReport:
    """Outcome of the derivation-level (and optional group-level) checks."""

    algebra: WeilAlgebra
    ideal: Subspace
    der_stable: bool
    witness: tuple[int, tuple[Fraction, ...]] | None
    automorphism_stable: tuple[bool, ...]
    projected_derivations: tuple[tuple[tuple[Fraction, ...], ...], ...] | None
    note: str = (
        "derivation stability is the infinitesimal criterion; it matches the "
        "full automorphism-group condition only up to the connected component"
    )


def ideal_stability(
    algebra: WeilAlgebra,
    ideal: Subspace,
    automorphisms: Sequence[AlgebraMorphism] = (),
) -> IdealStabilityReport:
    """Check delta(I) <= I for all derivations, plus supplied automorphisms."""
    if ideal.ambient_dimension != algebra.dimension:
        raise DimensionMismatchError("ideal must live in the quotient coordinates")
    for row in ideal.basis:
        for i in range(algebra.n):
            product = algebra.mult_coords(algebra.generator(i).coordinates, row)
            if not ideal.contains_vector(product):
                raise NotAnIdealError(
                    f"not closed under multiplication by generator {i}"
                )
    ders = derivation_space(algebra)
    der_stable = True
    witness = None
    for k, matrix in enumerate(ders.matrices):
        for row in ideal.basis:
            img = mat_vec(matrix, row)
            if not ideal.contains_vector(img):
                der_stable = False
                witness = (k, tuple(img))
                break
        if not der_stable:
            break
    auto_results = []
    for g in automorphisms:
        if g.source != algebra or g.target != algebra:
            raise DimensionMismatchError("automorphism must act on the algebra")
        image_rows = [mat_vec(g.matrix, row) for row in ideal.basis]
        auto_results.append(canonical_basis(image_rows, algebra.dimension) == ideal)

    projected = None
    if der_stable:
        complement = ideal.free_columns()
        proj = []
        for matrix in ders.matrices:
            rows = []
            for c_out in complement:
                row = []
                for c_in in complement:
                    unit = [_ZERO] * algebra.dimension
                    unit[c_in] = _ONE
                    img = ideal.reduce(mat_vec(matrix, unit))
                    row.append(img[c_out])
                rows.append(tuple(row))
            proj.append(tuple(rows))
        projected = tuple(proj)
    return IdealStabilityReport(
        algebra, ideal, der_stable, witness, tuple(auto_results), projected
    )
