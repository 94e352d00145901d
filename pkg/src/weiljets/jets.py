"""Jets of the local model at a point: ideals with Weil-algebra quotients.

A jet in n variables is stored through the window (n, order+1) as the
canonical subspace of the coefficients of its ideal; the quotient algebra,
order and width ride along.  Base points are recorded but every internal
computation happens at the origin after an exact translation.

The derived jet is produced twice over: through the adapted normal form
(y^1..y^r) + m^{l+1} + (Q^h(x)) and, independently, by applying the finite
family of graph-tangent fields and saturating.  Their agreement is one of
the package's standing checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Sequence

from .errors import (
    ClassicalityError,
    DimensionMismatchError,
    EmptyQuotientError,
    HintTooSmallError,
    InternalCheckError,
    NotInIdealError,
)
from .monomials import (
    Exponent,
    monomials_of_degree,
    window,
    window_index,
    window_size,
)
from .poly import (
    TruncatedPolynomial,
    as_fraction,
    format_polynomial,
    truncated_product,
    truncated_substitute,
)
from .subspace import (
    Subspace,
    canonical_basis,
    mat_vec,
    nullspace,
    rref_insert,
    subspace_intersection,
    zero_subspace,
)
from .weil import (
    AlgebraElement,
    DerivationSpace,
    WeilAlgebra,
    derivation_space,
    quotient_algebra,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Jet:
    """An ideal of the local model at a point, in canonical form."""

    def __init__(
        self,
        quotient: WeilAlgebra,
        base_point: tuple[Fraction, ...],
        generators: tuple[TruncatedPolynomial, ...],
        classical: bool = False,
    ):
        self.quotient = quotient
        self.n = quotient.n
        self.base_point = base_point
        self.order = quotient.order
        self.width = quotient.width
        self.window_bound = quotient.window_bound
        self.ideal = quotient.defining_ideal
        self.generators = generators
        self.classical = classical
        self._normal_form: "NormalForm | None" = None
        self._derived: "Jet | None" = None
        self._fields: Subspace | None = None
        self._tangent: "TangentModule | None" = None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Jet)
            and self.n == other.n
            and self.base_point == other.base_point
            and self.window_bound == other.window_bound
            and self.ideal == other.ideal
        )

    def __hash__(self) -> int:
        return hash((self.n, self.base_point, self.window_bound, self.ideal.basis))

    def __repr__(self) -> str:
        return (
            f"Jet(vars={self.n}, order={self.order}, width={self.width}, "
            f"dim={self.quotient.dimension})"
        )

    # -- membership ------------------------------------------------------------

    def contains_polynomial(self, f: TruncatedPolynomial) -> bool:
        """Membership of a polynomial written in coordinates at the base point."""
        shifted = f.shift(self.base_point) if any(self.base_point) else f
        return self.ideal.contains_vector(
            shifted.truncate(self.window_bound).to_vector(self.window_bound)
        )

    def embedded_ideal(self, bound: int) -> Subspace:
        """The ideal as a subspace of a larger window (origin coordinates)."""
        if bound < self.window_bound:
            raise DimensionMismatchError("embedding window is too small")
        if bound == self.window_bound:
            return self.ideal
        size = window_size(self.n, bound)
        idx = window_index(self.n, bound)
        exps = window(self.n, self.window_bound)
        rows = []
        for r in self.ideal.basis:
            row = [_ZERO] * size
            for c, v in enumerate(r):
                if v:
                    row[idx[exps[c]]] = v
            rows.append(row)
        for k in range(self.window_bound + 1, bound + 1):
            for exp in monomials_of_degree(self.n, k):
                row = [_ZERO] * size
                row[idx[exp]] = _ONE
                rows.append(row)
        return canonical_basis(rows, size)

    def contains_jet(self, other: "Jet") -> bool:
        """Ideal inclusion other <= self, compared in a common window."""
        if self.n != other.n or self.base_point != other.base_point:
            raise DimensionMismatchError("jets live at different points")
        bound = max(self.window_bound, other.window_bound)
        return self.embedded_ideal(bound).contains_subspace(
            other.embedded_ideal(bound)
        )

    def ideal_polynomials(self) -> list[TruncatedPolynomial]:
        """Canonical basis of the ideal as polynomials (origin coordinates)."""
        return [
            TruncatedPolynomial.from_vector(self.n, self.window_bound, r)
            for r in self.ideal.basis
        ]

    def classical_invariants_match(self) -> bool:
        """Whether (dimension, order, width) agree with the graph model."""
        model = free_model(self.width, self.order)
        return (
            self.quotient.dimension == model.dimension
            and self.order == model.order
            and self.width == model.width
        )


@lru_cache(maxsize=None)
def free_model(m: int, order: int) -> WeilAlgebra:
    """The full truncated algebra on m variables, cached for comparisons."""
    return quotient_algebra(m, order, [])


def _jet_from_origin(
    n: int,
    base_point: tuple[Fraction, ...],
    generators: Sequence[TruncatedPolynomial],
    order_hint: int,
    strict_hint: bool = False,
    classical: bool = False,
) -> Jet:
    if order_hint < 0:
        raise HintTooSmallError("the order hint must be non-negative")
    algebra = quotient_algebra(n, order_hint, list(generators))
    if strict_hint and algebra.order == order_hint:
        raise HintTooSmallError(
            f"detected order {algebra.order} reached the hint; the truncation "
            "may be cutting the ideal, retry with a larger hint"
        )
    return Jet(algebra, base_point, tuple(generators), classical)


def jet_from_ideal(
    n: int,
    base_point: Sequence,
    generators: Sequence[TruncatedPolynomial],
    order_hint: int,
    strict_hint: bool = False,
) -> Jet:
    """The jet of the given order of the ideal the generators span.

    The result is (generators) + m^{order_hint+1} at the base point; the true
    order of that ideal is detected and the stored window shrunk accordingly.
    With ``strict_hint`` the call refuses results whose detected order equals
    the hint, since then the truncation itself may be what bounded the order.
    """
    base = tuple(as_fraction(b) for b in base_point)
    if len(base) != n:
        raise DimensionMismatchError("base point has the wrong length")
    shifted = []
    for g in generators:
        if g.variable_count != n:
            raise DimensionMismatchError("generator has the wrong variable count")
        moved = g.shift(base) if any(base) else g
        if moved.constant_term():
            raise EmptyQuotientError(
                f"generator {format_polynomial(g)} does not vanish at the base point"
            )
        shifted.append(moved)
    return _jet_from_origin(n, base, shifted, order_hint, strict_hint)


def power_jet(n: int, k: int, base_point: Sequence = None) -> Jet:
    """The jet m^k at the base point (k >= 1)."""
    if k < 1:
        raise ValueError("power_jet needs k >= 1")
    base = tuple(as_fraction(b) for b in (base_point or [0] * n))
    return jet_from_ideal(n, base, [], k - 1)


def classical_jet(
    n: int,
    base_point: Sequence,
    graph: dict[int, TruncatedPolynomial],
    order: int,
) -> Jet:
    """Jet of order ``order`` of the graph y^j = f^j(x).

    ``graph`` maps the dependent variable indices to polynomials in the
    remaining coordinates; the quotient invariants are checked against the
    full truncated model and a mismatch is an internal error.
    """
    base = tuple(as_fraction(b) for b in base_point)
    dependent = sorted(graph)
    free = [i for i in range(n) if i not in set(dependent)]
    gens = []
    for j in dependent:
        f = graph[j]
        if f.variable_count != n:
            raise DimensionMismatchError("graph polynomial has the wrong variable count")
        for exp in f.coefficients:
            if any(exp[k] for k in dependent):
                raise DimensionMismatchError(
                    "graph polynomials may only involve the independent variables"
                )
        bound = max(order, f.degree(), 1)
        gens.append(TruncatedPolynomial.variable(n, bound, j) - f.with_bound(bound))
    jet = jet_from_ideal(n, base, gens, order)
    model = free_model(len(free), order)
    ok = (
        jet.quotient.dimension == model.dimension
        and jet.order == model.order
        and jet.width == model.width
    )
    if not ok:
        raise ClassicalityError(
            f"graph jet missed the model invariants: got dim {jet.quotient.dimension},"
            f" order {jet.order}, width {jet.width}"
        )
    jet.classical = True
    return jet


# -- hat ideal and cotangent ---------------------------------------------------


def hat_ideal(p: Jet) -> Jet:
    """{f in p : every first partial of f stays in p}, as a jet.

    Computed one window above the jet's own so the raised order is visible;
    the inclusions p^2 <= hat(p) <= p are verified before returning.
    """
    n, ell = p.n, p.order
    bound = ell + 2
    size = window_size(n, bound)
    exps = window(n, bound)
    idx = window_index(n, bound)
    embedded = p.embedded_ideal(bound)
    memb = embedded.membership_rows()

    rows: list[list[Fraction]] = []
    pivots: list[int] = []
    for r in memb:
        rref_insert(rows, pivots, list(r))
    for i in range(n):
        # Condition rows of (membership o d/dx_i).
        for r in memb:
            row = [_ZERO] * size
            for c, exp in enumerate(exps):
                k = exp[i]
                if k:
                    lowered = list(exp)
                    lowered[i] -= 1
                    v = r[idx[tuple(lowered)]]
                    if v:
                        row[c] = k * v
            rref_insert(rows, pivots, row)
    free = [c for c in range(size) if c not in set(pivots)]
    vectors = []
    for c in free:
        vec = [_ZERO] * size
        vec[c] = _ONE
        for row, piv in zip(rows, pivots):
            if row[c]:
                vec[piv] = -row[c]
        vectors.append(vec)
    hat = canonical_basis(vectors, size)

    if not embedded.contains_subspace(hat):
        raise InternalCheckError("hat ideal escaped the jet")
    gen_polys = [
        TruncatedPolynomial.from_vector(p.n, p.window_bound, g)
        for g in p.quotient.ideal_generators
    ]
    for a in range(len(gen_polys)):
        for b in range(a, len(gen_polys)):
            prod = truncated_product(gen_polys[a], gen_polys[b], bound)
            if not hat.contains_vector(prod.to_vector(bound)):
                raise InternalCheckError("p^2 is not inside the hat ideal")

    gens = [TruncatedPolynomial.from_vector(n, bound, r) for r in hat.basis]
    return _jet_from_origin(n, p.base_point, tuple(gens), ell + 1)


@dataclass(frozen=True)
class CotangentModule:
    """p/hat(p) together with the evaluation of differentials."""

    jet: Jet
    hat: Jet
    dimension: int
    basis: tuple[TruncatedPolynomial, ...]
    _differential: Callable = field(repr=False, compare=False, default=None)

    def differential(self, f: TruncatedPolynomial, tangent_coords: Sequence[Fraction]) -> AlgebraElement:
        """d_p f evaluated on an ambient tangent representative."""
        return self._differential(f, tangent_coords)


def cotangent_module(p: Jet) -> CotangentModule:
    """Basis of p/hat(p) plus the differential evaluator d_p f."""
    hat = hat_ideal(p)
    bound = max(p.window_bound, hat.window_bound)
    p_emb = p.embedded_ideal(bound)
    hat_emb = hat.embedded_ideal(bound)
    reps: list[TruncatedPolynomial] = []
    picked: list[list[Fraction]] = []
    piv: list[int] = []
    for r in hat_emb.basis:
        rref_insert(picked, piv, list(r))
    for r in p_emb.basis:
        if rref_insert(picked, piv, list(r)):
            reps.append(TruncatedPolynomial.from_vector(p.n, bound, r))
    dim = p_emb.dimension - hat_emb.dimension
    algebra = p.quotient

    def differential(f: TruncatedPolynomial, coords: Sequence[Fraction]) -> AlgebraElement:
        if not p.contains_polynomial(f):
            raise NotInIdealError(
                f"{format_polynomial(f)} is not in the ideal at the base point"
            )
        shifted = f.shift(p.base_point) if any(p.base_point) else f
        d = algebra.dimension
        coords = [as_fraction(c) for c in coords]
        if len(coords) != p.n * d:
            raise DimensionMismatchError("tangent representative has the wrong length")
        total = [_ZERO] * d
        for i in range(p.n):
            w = algebra.project_polynomial(shifted.derivative(i)).coordinates
            block = coords[i * d : (i + 1) * d]
            contrib = algebra.mult_coords(block, w)
            for g, c in enumerate(contrib):
                total[g] += c
        return algebra.element(total)

    return CotangentModule(p, hat, dim, tuple(reps), differential)


# -- tangent module --------------------------------------------------------------


@dataclass(frozen=True)
class TangentModule:
    """T_p presented as A^n modulo the images of the algebra derivations."""

    jet: Jet
    ambient_dimension: int
    relations: Subspace
    dimension: int

    def value_of_field(self, coefficients: Sequence[TruncatedPolynomial]) -> tuple[Fraction, ...]:
        """Ambient tuple of a field given by n polynomial coefficients."""
        algebra = self.jet.quotient
        if len(coefficients) != self.jet.n:
            raise DimensionMismatchError("need one coefficient per coordinate")
        out: list[Fraction] = []
        for f in coefficients:
            out.extend(algebra.project_polynomial(f).coordinates)
        return tuple(out)

    def same_class(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> bool:
        diff = [a - b for a, b in zip(u, v)]
        return self.relations.contains_vector(diff)

    def is_zero_class(self, u: Sequence[Fraction]) -> bool:
        return self.relations.contains_vector(list(u))


def tangent_module(p: Jet) -> TangentModule:
    if p._tangent is not None:
        return p._tangent
    ders = derivation_space(p.quotient)
    relations = ders.relations_in_ambient()
    ambient = p.n * p.quotient.dimension
    module = TangentModule(p, ambient, relations, ambient - relations.dimension)
    p._tangent = module
    return module


def jet_fields(p: Jet) -> Subspace:
    """Fields (window-order polynomial coefficients) mapping the ideal into itself."""
    if p._fields is not None:
        return p._fields
    n, ell = p.n, p.order
    w = window_size(n, ell)
    unknowns = n * w
    coeff_exps = window(n, ell)
    target_bound = p.window_bound
    memb = p.ideal.membership_rows()
    tgt_idx = window_index(n, target_bound)

    rows: list[list[Fraction]] = []
    pivots: list[int] = []
    for gen in p.quotient.ideal_generators:
        g = TruncatedPolynomial.from_vector(n, target_bound, gen)
        derivs = [g.derivative(i) for i in range(n)]
        # Column (i, c): coefficient vector of x^c * dg/dx_i, truncated.
        cols: list[tuple[int, list[Fraction]]] = []
        for i in range(n):
            if derivs[i].is_zero():
                continue
            for c, cexp in enumerate(coeff_exps):
                prod = {}
                for exp, v in derivs[i].coefficients.items():
                    tot = tuple(a + b for a, b in zip(exp, cexp))
                    if sum(tot) <= target_bound:
                        prod[tot] = prod.get(tot, _ZERO) + v
                if prod:
                    vec = [_ZERO] * window_size(n, target_bound)
                    for exp, v in prod.items():
                        vec[tgt_idx[exp]] = v
                    cols.append((i * w + c, vec))
        if not cols:
            continue
        for r in memb:
            row = [_ZERO] * unknowns
            hit = False
            for col, vec in cols:
                s = _ZERO
                for a, b in zip(r, vec):
                    if a and b:
                        s += a * b
                if s:
                    row[col] = s
                    hit = True
            if hit:
                rref_insert(rows, pivots, row)
    free = [c for c in range(unknowns) if c not in set(pivots)]
    vectors = []
    for c in free:
        vec = [_ZERO] * unknowns
        vec[c] = _ONE
        for row, piv in zip(rows, pivots):
            if row[c]:
                vec[piv] = -row[c]
        vectors.append(vec)
    result = canonical_basis(vectors, unknowns)
    p._fields = result
    return result


# -- normal form -----------------------------------------------------------------


@dataclass(frozen=True)
class NormalForm:
    """Adapted coordinates where the ideal is (y pivots) + m^{l+1} + (Q(x))."""

    jet: Jet
    pivot_variables: tuple[int, ...]
    free_variables: tuple[int, ...]
    r: int
    sigma: tuple[TruncatedPolynomial, ...]
    sigma_inverse: tuple[TruncatedPolynomial, ...]
    q_list: tuple[TruncatedPolynomial, ...]
    transformed_ideal: Subspace


def _identity_substitution(n: int, bound: int) -> list[TruncatedPolynomial]:
    return [TruncatedPolynomial.variable(n, bound, i) for i in range(n)]


def _compose_substitutions(
    outer: Sequence[TruncatedPolynomial],
    inner: Sequence[TruncatedPolynomial],
    bound: int,
) -> list[TruncatedPolynomial]:
    """Formulas of outer o inner (apply inner first as functions of x)."""
    return [truncated_substitute(f, list(inner), bound) for f in outer]


def _invert_substitution_polys(
    sigma: Sequence[TruncatedPolynomial], bound: int
) -> list[TruncatedPolynomial]:
    """Exact truncated inverse of a substitution with invertible linear part."""
    from .subspace import invert_matrix

    n = len(sigma)
    lin = []
    for f in sigma:
        row = []
        for j in range(n):
            exp = [0] * n
            exp[j] = 1
            row.append(f.coefficient(tuple(exp)))
        lin.append(row)
    lin_inv = invert_matrix([tuple(r) for r in lin])
    if lin_inv is None:
        raise InternalCheckError("substitution has a singular linear part")
    nonlinear = [
        TruncatedPolynomial(
            n, bound, {e: c for e, c in f.coefficients.items() if sum(e) >= 2}
        )
        for f in sigma
    ]

    def lin_inv_apply(polys: Sequence[TruncatedPolynomial]) -> list[TruncatedPolynomial]:
        out = []
        for i in range(n):
            acc = TruncatedPolynomial.zero(n, bound)
            for j in range(n):
                if lin_inv[i][j]:
                    acc = acc + polys[j].scale(lin_inv[i][j])
            out.append(acc)
        return out

    identity = _identity_substitution(n, bound)
    tau = lin_inv_apply(identity)
    for _ in range(max(bound, 1)):
        n_tau = [truncated_substitute(f, tau, bound) for f in nonlinear]
        tau = lin_inv_apply([identity[i] - n_tau[i] for i in range(n)])
    return tau


def _substituted_ideal(
    p_rows: Sequence[Sequence[Fraction]],
    n: int,
    bound: int,
    subst: Sequence[TruncatedPolynomial],
) -> Subspace:
    rows = []
    for r in p_rows:
        f = TruncatedPolynomial.from_vector(n, bound, r)
        g = truncated_substitute(f, list(subst), bound)
        rows.append(g.to_vector(bound))
    return canonical_basis(rows, window_size(n, bound))


def normal_form(p: Jet) -> NormalForm:
    """Straighten the jet to (y^1..y^r) + m^{l+1} + (Q^h(x)).

    Pivot variables come from the reduced echelon form of the degree-1 part;
    the substitution absorbs the higher-order tails of the pivot rows degree
    by degree.  The resulting identity is verified exactly.
    """
    if p._normal_form is not None:
        return p._normal_form
    n, ell = p.n, p.order
    bound = p.window_bound
    sub_bound = max(ell, 1)

    # Rows whose pivot sits in the degree-1 block carry the linear part.
    deg1_cols = {}
    exps = window(n, bound)
    for c, exp in enumerate(exps):
        if sum(exp) == 1:
            deg1_cols[c] = next(i for i, e in enumerate(exp) if e)
    pivot_vars: list[int] = []
    carried: list[TruncatedPolynomial] = []
    for row, piv in zip(p.ideal.basis, p.ideal.pivots):
        if piv in deg1_cols:
            pivot_vars.append(deg1_cols[piv])
            carried.append(TruncatedPolynomial.from_vector(n, bound, row))
    free_vars = [i for i in range(n) if i not in set(pivot_vars)]
    r = len(pivot_vars)
    if r != n - p.width:
        raise InternalCheckError("degree-1 rank disagrees with the width")

    sigma = _identity_substitution(n, sub_bound)
    current = p.ideal

    for d in range(1, ell + 1):
        stage = _identity_substitution(n, sub_bound)
        changed = False
        for j, g in zip(pivot_vars, carried):
            tail = {e: c for e, c in g.coefficients.items() if sum(e) == d}
            unit = [0] * n
            unit[j] = 1
            tail.pop(tuple(unit), None)
            if not tail:
                continue
            changed = True
            stage[j] = stage[j] - TruncatedPolynomial(n, sub_bound, tail)
        if not changed:
            continue
        sigma = _compose_substitutions(sigma, stage, sub_bound)
        current = _substituted_ideal(current.basis, n, bound, stage)
        carried = [
            truncated_substitute(g, stage, bound) for g in carried
        ]

    # After absorption each carried element is the pure pivot variable mod m^{l+1}.
    for j, g in zip(pivot_vars, carried):
        unit = [0] * n
        unit[j] = 1
        residue = g - TruncatedPolynomial.variable(n, bound, j)
        if any(sum(e) <= ell for e in residue.coefficients):
            raise InternalCheckError("straightening left a low-degree tail")
        if not current.contains_vector(
            TruncatedPolynomial.variable(n, bound, j).to_vector(bound)
        ):
            raise InternalCheckError("pivot variable missing from the transformed ideal")

    # Q list: the x-only part in degrees 2..l, pruned of redundant rows.
    x_cols = []
    for c, exp in enumerate(exps):
        deg = sum(exp)
        if 2 <= deg <= ell and all(exp[j] == 0 for j in pivot_vars):
            x_cols.append(c)
    size = window_size(n, bound)
    coord_rows = []
    for c in x_cols:
        row = [_ZERO] * size
        row[c] = _ONE
        coord_rows.append(row)
    x_part = subspace_intersection(current, canonical_basis(coord_rows, size))

    base_gens = [
        TruncatedPolynomial.variable(n, bound, j) for j in pivot_vars
    ] + [
        TruncatedPolynomial.monomial(n, bound, e)
        for e in monomials_of_degree(n, ell + 1)
    ]
    from .weil import _saturate_rows

    gen_rows = [g.to_vector(bound) for g in base_gens]
    basis_acc, pivots_acc = _saturate_rows(n, bound, gen_rows)
    q_list: list[TruncatedPolynomial] = []
    for row in x_part.basis:
        probe = list(row)
        test = Subspace(size, tuple(tuple(x) for x in basis_acc), tuple(pivots_acc))
        if test.contains_vector(probe):
            continue
        q_list.append(TruncatedPolynomial.from_vector(n, bound, row))
        basis_acc, pivots_acc = _saturate_rows(
            n, bound, [tuple(x) for x in basis_acc] + [probe]
        )
    rebuilt = Subspace(size, tuple(tuple(x) for x in basis_acc), tuple(pivots_acc))
    if rebuilt != current:
        raise InternalCheckError("normal form identity failed to verify")

    tau = _invert_substitution_polys(sigma, sub_bound)
    # sigma o tau must be the identity substitution.
    for i, f in enumerate(_compose_substitutions(sigma, tau, sub_bound)):
        if f != TruncatedPolynomial.variable(n, sub_bound, i):
            raise InternalCheckError("substitution inverse failed to verify")

    result = NormalForm(
        p,
        tuple(pivot_vars),
        tuple(free_vars),
        r,
        tuple(sigma),
        tuple(tau),
        tuple(q_list),
        current,
    )
    p._normal_form = result
    return result


# -- derived jet: closed form and generation oracle ------------------------------


def derived_jet(p: Jet, verify: bool = False) -> Jet:
    """p + (derivatives of p along the Cartan directions), via the normal form.

    With ``verify`` the independent field-generation oracle is run and exact
    agreement is required.
    """
    if p._derived is not None and not verify:
        return p._derived
    result = _derived_via_normal_form(p)
    if verify:
        oracle = cartan_generation_oracle(p)
        if oracle != result:
            raise InternalCheckError(
                "derived jet disagrees with the generation oracle"
            )
    p._derived = result
    return result


def _derived_via_normal_form(p: Jet) -> Jet:
    n, ell = p.n, p.order
    if ell == 0:
        return p
    nf = normal_form(p)
    bound = p.window_bound
    gens: list[TruncatedPolynomial] = [
        TruncatedPolynomial.variable(n, bound, j) for j in nf.pivot_variables
    ]
    gens += [
        TruncatedPolynomial.monomial(n, bound, e)
        for e in monomials_of_degree(n, ell)
    ]
    for q in nf.q_list:
        gens.append(q)
        for a in nf.free_variables:
            dq = q.derivative(a)
            if not dq.is_zero():
                gens.append(dq)
    return _pullback_jet(p, gens, ell - 1, nf)


def _pullback_jet(
    p: Jet, gens_new_coords: Sequence[TruncatedPolynomial], hint: int, nf: NormalForm
) -> Jet:
    """Move generators written in normal coordinates back through sigma."""
    n = p.n
    work_bound = hint + 1
    pulled = []
    for g in gens_new_coords:
        moved = truncated_substitute(
            g.truncate(work_bound) if g.degree() > work_bound else g,
            list(nf.sigma_inverse),
            work_bound,
        )
        if not moved.is_zero():
            pulled.append(moved)
    return _jet_from_origin(n, p.base_point, tuple(pulled), hint)


def cartan_generation_oracle(p: Jet) -> Jet:
    """Independent derived jet: apply the finite graph-tangent field family.

    In adapted coordinates the family consists of the coordinate fields of the
    base graph, corrections by gradients of top-degree forms, and corrections
    by gradients of elements of the x-part ideal; the ideal generated by the
    jet together with all their derivatives is the derived jet.
    """
    n, ell = p.n, p.order
    if ell == 0:
        return p
    nf = normal_form(p)
    bound = p.window_bound
    xs = nf.free_variables
    ys = nf.pivot_variables

    ideal_gens: list[TruncatedPolynomial] = [
        TruncatedPolynomial.variable(n, bound, j) for j in ys
    ]
    x_top = [
        e
        for e in monomials_of_degree(n, ell + 1)
        if all(e[j] == 0 for j in ys)
    ]
    ideal_gens += [TruncatedPolynomial.monomial(n, bound, e) for e in x_top]
    ideal_gens += list(nf.q_list)

    # x-part of the transformed ideal (all degrees) for the H-family.
    exps = window(n, bound)
    size = window_size(n, bound)
    x_cols = [
        c
        for c, e in enumerate(exps)
        if sum(e) >= 2 and all(e[j] == 0 for j in ys)
    ]
    coord_rows = []
    for c in x_cols:
        row = [_ZERO] * size
        row[c] = _ONE
        coord_rows.append(row)
    h_basis = subspace_intersection(
        nf.transformed_ideal, canonical_basis(coord_rows, size)
    )
    h_polys = [TruncatedPolynomial.from_vector(n, bound, r) for r in h_basis.basis]

    # Fields: n-tuples of polynomial coefficients, applied to the ideal gens.
    derived_rows: set[TruncatedPolynomial] = set()

    def apply_field(coeff: dict[int, TruncatedPolynomial]):
        for g in ideal_gens:
            total = TruncatedPolynomial.zero(n, bound)
            for i, a in coeff.items():
                dg = g.derivative(i)
                if dg.is_zero():
                    continue
                total = total + truncated_product(a, dg, bound)
            if not total.is_zero():
                derived_rows.add(total)

    one = TruncatedPolynomial.constant(n, bound, 1)
    for a in xs:
        apply_field({a: one})
    forms = [
        TruncatedPolynomial.monomial(n, bound, e) for e in x_top
    ] + h_polys
    for F in forms:
        for a in xs:
            dF = F.derivative(a)
            if dF.is_zero():
                continue
            for j in ys:
                apply_field({a: one, j: dF})

    # Saturate with the jet's own cap only: the drop to order l-1 (in
    # particular m^l itself) has to come out of the field derivatives.
    all_gens = ideal_gens + sorted(
        derived_rows, key=lambda f: tuple(f.to_vector(bound))
    )
    return _pullback_jet(p, all_gens, ell, nf)


# -- contact system ----------------------------------------------------------------


@dataclass(frozen=True)
class ContactData:
    """Contact and Cartan systems of a jet, both routes retained."""

    jet: Jet
    derived: Jet
    quotient_map: tuple[tuple[Fraction, ...], ...]
    omega: Subspace
    omega_rank: int
    cartan: Subspace
    cartan_generated: Subspace
    tangent_dimension: int
    cartan_tangent_dimension: int
    kernel_inside_cartan: bool


def _quotient_map_rows(p: Jet, p2: Jet) -> list[list[Fraction]]:
    """Matrix of A -> A' on quotient coordinates (p <= p2 assumed)."""
    a, b = p.quotient, p2.quotient
    cols = [b.monomial_class(exp) for exp in a.basis_monomials]
    return [
        [cols[j][i] for j in range(a.dimension)] for i in range(b.dimension)
    ]


def _block_diagonal(rows: Sequence[Sequence[Fraction]], blocks: int) -> list[list[Fraction]]:
    out_dim = len(rows)
    in_dim = len(rows[0]) if rows else 0
    big = []
    for k in range(blocks):
        for r in rows:
            row = [_ZERO] * (blocks * in_dim)
            row[k * in_dim : (k + 1) * in_dim] = list(r)
            big.append(row)
    return big


def _differential_matrix(
    p: Jet, quotient_rows: Sequence[Sequence[Fraction]], f: TruncatedPolynomial, out_dim: int
) -> list[list[Fraction]]:
    """Matrix of the map (ambient tangent tuple) -> class of Df in A'."""
    algebra = p.quotient
    d = algebra.dimension
    n = p.n
    block_rows: list[list[list[Fraction]]] = []
    for i in range(n):
        w = algebra.project_polynomial(f.derivative(i)).coordinates
        if any(w):
            left = algebra.left_mult_rows(w)
            block = [
                mat_vec(quotient_rows, [left[g][b] for g in range(d)])
                for b in range(d)
            ]
            # block[b] is the image column for basis vector b; transpose below.
            block_rows.append(block)
        else:
            block_rows.append(None)
    rows = []
    for out in range(out_dim):
        row: list[Fraction] = []
        for i in range(n):
            block = block_rows[i]
            if block is None:
                row.extend([_ZERO] * d)
            else:
                row.extend(block[b][out] for b in range(d))
        rows.append(row)
    return rows


def contact_and_cartan(p: Jet) -> ContactData:
    """Omega as a span of maps into A/p', Cartan as its exact annihilator.

    The Cartan system is additionally rebuilt from the finite generating
    family of graph-tangent fields (transported back from the adapted
    coordinates) so the two routes can be compared exactly.
    """
    derived = derived_jet(p)
    algebra = p.quotient
    d = algebra.dimension
    n = p.n
    dprime = derived.quotient.dimension
    qrows = _quotient_map_rows(p, derived)
    tangent = tangent_module(p)

    flat: list[list[Fraction]] = []
    matrices: list[list[list[Fraction]]] = []
    for row in p.ideal.basis:
        f = TruncatedPolynomial.from_vector(n, p.window_bound, row)
        m = _differential_matrix(p, qrows, f, dprime)
        matrices.append(m)
        flat.append([v for r in m for v in r])
    omega = canonical_basis(flat, dprime * n * d)

    # Representatives differing by an algebra derivation must evaluate to zero.
    for m in matrices:
        for rel in tangent.relations.basis:
            if any(mat_vec(m, rel)):
                raise InternalCheckError("contact map is not constant on classes")

    constraint_rows: list[Sequence[Fraction]] = []
    for vec in omega.basis:
        for out in range(dprime):
            constraint_rows.append(
                vec[out * n * d : (out + 1) * n * d]
            )
    cartan = nullspace(constraint_rows, n * d)
    if not cartan.contains_subspace(tangent.relations):
        raise InternalCheckError("annihilator lost the derivation relations")

    cartan_generated = _cartan_by_generation(p, derived)

    # Kernel of the tangent projection must sit inside the Cartan system.
    pi_blocks = _block_diagonal(qrows, n)
    from .subspace import preimage

    rel_prime = tangent_module(derived).relations
    kernel = preimage(pi_blocks, rel_prime, n * d)
    kernel_ok = cartan.contains_subspace(kernel)

    return ContactData(
        jet=p,
        derived=derived,
        quotient_map=tuple(tuple(r) for r in qrows),
        omega=omega,
        omega_rank=omega.dimension,
        cartan=cartan,
        cartan_generated=cartan_generated,
        tangent_dimension=tangent.dimension,
        cartan_tangent_dimension=cartan.dimension - tangent.relations.dimension,
        kernel_inside_cartan=kernel_ok,
    )


def _cartan_by_generation(p: Jet, derived: Jet) -> Subspace:
    """Cartan system as the span of values of the graph-tangent field family."""
    n, ell = p.n, p.order
    algebra = p.quotient
    d = algebra.dimension
    tangent = tangent_module(p)
    if ell == 0:
        return tangent.relations

    nf = normal_form(p)
    bound = p.window_bound
    xs, ys = nf.free_variables, nf.pivot_variables

    # The transformed jet and the iso back to p's presentation.
    q_jet = _jet_from_origin(
        n,
        p.base_point,
        tuple(
            TruncatedPolynomial.from_vector(n, bound, r)
            for r in nf.transformed_ideal.basis
        ),
        ell,
    )
    if q_jet.quotient.dimension != d:
        raise InternalCheckError("transformed jet changed dimension")
    bq = q_jet.quotient

    # Psi: [g]_q -> [g o tau]_p on quotient coordinates.
    psi_cols = []
    for exp in bq.basis_monomials:
        g = TruncatedPolynomial.monomial(n, bound, exp)
        moved = truncated_substitute(g, list(nf.sigma_inverse), bound)
        psi_cols.append(algebra.project_polynomial(moved).coordinates)
    psi = [[psi_cols[j][i] for j in range(d)] for i in range(d)]

    # Jacobian classes [d sigma^i / d x_k]_q, as left-multiplication blocks.
    jac_left = []
    for i in range(n):
        row_blocks = []
        for k in range(n):
            entry = bq.project_polynomial(nf.sigma[i].derivative(k)).coordinates
            row_blocks.append(bq.left_mult_rows(entry) if any(entry) else None)
        jac_left.append(row_blocks)

    def transport(components_q: list[tuple[Fraction, ...]]) -> list[Fraction]:
        out: list[Fraction] = []
        for i in range(n):
            acc = [_ZERO] * d
            for k in range(n):
                block = jac_left[i][k]
                if block is None:
                    continue
                contrib = mat_vec(block, components_q[k])
                for g, c in enumerate(contrib):
                    acc[g] += c
            out.extend(mat_vec(psi, acc))
        return out

    # Family values at the transformed jet.
    values: list[list[Fraction]] = []
    one = TruncatedPolynomial.constant(n, bound, 1)
    zero_el = (_ZERO,) * d

    def field_value(coeff: dict[int, TruncatedPolynomial]) -> list[Fraction]:
        comps = []
        for k in range(n):
            f = coeff.get(k)
            comps.append(
                bq.project_polynomial(f).coordinates if f is not None else zero_el
            )
        return transport(comps)

    for a in xs:
        values.append(field_value({a: one}))
    exps_top = [
        e
        for e in monomials_of_degree(n, ell + 1)
        if all(e[j] == 0 for j in ys)
    ]
    size = window_size(n, bound)
    exps = window(n, bound)
    x_cols = [
        c
        for c, e in enumerate(exps)
        if sum(e) >= 2 and all(e[j] == 0 for j in ys)
    ]
    coord_rows = []
    for c in x_cols:
        row = [_ZERO] * size
        row[c] = _ONE
        coord_rows.append(row)
    h_basis = subspace_intersection(
        nf.transformed_ideal, canonical_basis(coord_rows, size)
    )
    forms = [TruncatedPolynomial.monomial(n, bound, e) for e in exps_top] + [
        TruncatedPolynomial.from_vector(n, bound, r) for r in h_basis.basis
    ]
    for F in forms:
        for a in xs:
            dF = F.derivative(a)
            if dF.is_zero():
                continue
            for j in ys:
                values.append(field_value({a: one, j: dF}))

    # The Cartan system is the submodule the values generate: a field tangent
    # to X stays tangent under any coefficient, so close under the action of
    # the algebra generators componentwise.
    rows: list[list[Fraction]] = []
    pivots: list[int] = []
    for v in tangent.relations.basis:
        rref_insert(rows, pivots, list(v))
    gen_classes = [algebra.generator(i).coordinates for i in range(n)]
    queue = [list(v) for v in values]
    while queue:
        v = queue.pop()
        if not rref_insert(rows, pivots, v):
            continue
        for cls in gen_classes:
            shifted: list[Fraction] = []
            for i in range(n):
                block = v[i * d : (i + 1) * d]
                shifted.extend(algebra.mult_coords(cls, block))
            if any(shifted):
                queue.append(shifted)
    return Subspace(n * d, tuple(tuple(r) for r in rows), tuple(pivots))


# -- Taylor map ---------------------------------------------------------------------


@dataclass(frozen=True)
class TaylorData:
    """Projection of the Cartan system into the derived jet's tangent module."""

    jet: Jet
    derived: Jet
    pi_star_cartan: Subspace
    taylor_condition: bool
    cartan_projects: bool | None


def taylor_map(p: Jet, contact: ContactData | None = None) -> TaylorData:
    """pi_* C_p inside T_{p'} plus the injectivity hypothesis hat(p') <= p.

    The projection exists because every field tangent to p is tangent to p';
    that inclusion is asserted computationally before projecting.
    """
    contact = contact or contact_and_cartan(p)
    derived = contact.derived
    n = p.n

    _assert_fields_project(p, derived)

    qrows = _quotient_map_rows(p, derived)
    pi_blocks = _block_diagonal(qrows, n)
    rel_prime = tangent_module(derived).relations
    pushed = [mat_vec(pi_blocks, v) for v in contact.cartan.basis]
    image = canonical_basis(list(rel_prime.basis) + pushed, n * derived.quotient.dimension)

    hat_prime = hat_ideal(derived)
    taylor_condition = p.contains_jet(hat_prime)

    cartan_projects: bool | None = None
    if derived.width == p.width:
        prime_contact = contact_and_cartan(derived)
        cartan_projects = prime_contact.cartan.contains_subspace(image)

    return TaylorData(p, derived, image, taylor_condition, cartan_projects)


def _assert_fields_project(p: Jet, derived: Jet) -> None:
    """Every field tangent to p maps the derived ideal into itself."""
    fields = jet_fields(p)
    n, ell = p.n, p.order
    w = window_size(n, ell)
    bound = derived.window_bound
    prime_polys = [
        TruncatedPolynomial.from_vector(n, bound, r) for r in derived.ideal.basis
    ]
    for coeffs in fields.basis:
        comp = [
            TruncatedPolynomial.from_vector(n, ell, coeffs[i * w : (i + 1) * w])
            for i in range(n)
        ]
        for f in prime_polys:
            total = TruncatedPolynomial.zero(n, bound)
            for i in range(n):
                df = f.derivative(i)
                if df.is_zero() or comp[i].is_zero():
                    continue
                total = total + truncated_product(comp[i], df, bound)
            if not total.is_zero() and not derived.ideal.contains_vector(
                total.to_vector(bound)
            ):
                raise InternalCheckError(
                    "a field tangent to the jet is not tangent to its derived jet"
                )


# -- functorial maps -----------------------------------------------------------------


def pushforward(p: Jet, phi: Sequence[TruncatedPolynomial]) -> Jet:
    """Image jet under a polynomial map: the kernel of composition mod p."""
    n, ell = p.n, p.order
    target_n = len(phi)
    for f in phi:
        if f.variable_count != n:
            raise DimensionMismatchError("map component has the wrong variable count")
    base_target = tuple(f.evaluate(p.base_point) for f in phi)
    psi = []
    for f in phi:
        moved = f.shift(p.base_point) if any(p.base_point) else f
        psi.append(moved - TruncatedPolynomial.constant(n, f.degree_bound, moved.constant_term()))

    algebra = p.quotient
    d = algebra.dimension
    bound = ell + 1
    exps = window(target_n, bound)

    cache: dict[Exponent, tuple[Fraction, ...]] = {}

    def compose_class(exp: Exponent) -> tuple[Fraction, ...]:
        if exp in cache:
            return cache[exp]
        if sum(exp) == 0:
            out = algebra.one().coordinates
        else:
            i = next(k for k, e in enumerate(exp) if e)
            lowered = list(exp)
            lowered[i] -= 1
            prev = compose_class(tuple(lowered))
            img = algebra.project_polynomial(psi[i].truncate(p.window_bound))
            out = algebra.mult_coords(prev, img.coordinates)
        cache[exp] = out
        return out

    columns = [compose_class(e) for e in exps]
    rows = [
        [columns[c][out] for c in range(len(exps))] for out in range(d)
    ]
    kernel = nullspace(rows, len(exps))
    gens = [
        TruncatedPolynomial.from_vector(target_n, bound, r) for r in kernel.basis
    ]
    return _jet_from_origin(target_n, base_target, tuple(gens), ell)


@dataclass(frozen=True)
class TangentMap:
    """Existence data and the induced map between tangent presentations."""

    jet: Jet
    image_jet: Jet
    exists: bool
    is_regular_for_subalgebra: bool
    matrix: tuple[tuple[Fraction, ...], ...] | None


def tangent_map(p: Jet, phi: Sequence[TruncatedPolynomial]) -> TangentMap:
    """Tangent map along a polynomial map, when derivatives stay in phi*B + p.

    The subalgebra generated by the coordinate images is closed by span
    saturation; existence asks every first partial of every image to lie in
    it, and regularity asks it to be the full quotient.
    """
    n = p.n
    target_n = len(phi)
    algebra = p.quotient
    d = algebra.dimension
    image_jet = pushforward(p, phi)
    b = image_jet.quotient
    psi = []
    for f in phi:
        moved = f.shift(p.base_point) if any(p.base_point) else f
        psi.append(
            moved - TruncatedPolynomial.constant(n, f.degree_bound, moved.constant_term())
        )
    images = [algebra.project_polynomial(f.truncate(p.window_bound)) for f in psi]

    rows: list[list[Fraction]] = []
    pivots: list[int] = []
    rref_insert(rows, pivots, list(algebra.one().coordinates))
    frontier = [algebra.one().coordinates]
    while frontier:
        nxt = []
        for u in frontier:
            for img in images:
                prod = algebra.mult_coords(u, img.coordinates)
                if rref_insert(rows, pivots, list(prod)):
                    nxt.append(prod)
        frontier = nxt
    subalgebra = Subspace(d, tuple(tuple(r) for r in rows), tuple(pivots))

    exists = True
    for j in range(target_n):
        for i in range(n):
            cls = algebra.project_polynomial(psi[j].derivative(i).truncate(p.window_bound))
            if not subalgebra.contains_vector(cls.coordinates):
                exists = False
                break
        if not exists:
            break
    regular = subalgebra.dimension == d

    matrix = None
    if exists:
        iota_cols = []
        cache: dict[Exponent, tuple[Fraction, ...]] = {}

        def compose_class(exp: Exponent) -> tuple[Fraction, ...]:
            if exp in cache:
                return cache[exp]
            if sum(exp) == 0:
                out = algebra.one().coordinates
            else:
                i2 = next(k for k, e in enumerate(exp) if e)
                lowered = list(exp)
                lowered[i2] -= 1
                out = algebra.mult_coords(
                    compose_class(tuple(lowered)), images[i2].coordinates
                )
            cache[exp] = out
            return out

        for exp in b.basis_monomials:
            iota_cols.append(list(compose_class(exp)))
        from .subspace import solve_columns

        db = b.dimension
        out_rows: list[list[Fraction]] = [
            [_ZERO] * (n * d) for _ in range(target_n * db)
        ]
        for j in range(target_n):
            partial_classes = [
                algebra.project_polynomial(psi[j].derivative(i).truncate(p.window_bound)).coordinates
                for i in range(n)
            ]
            lefts = [algebra.left_mult_rows(w) if any(w) else None for w in partial_classes]
            for i in range(n):
                left = lefts[i]
                if left is None:
                    continue
                for beta in range(d):
                    value = [left[g][beta] for g in range(d)]
                    w_coords = solve_columns(iota_cols, value)
                    if w_coords is None:
                        raise InternalCheckError(
                            "tangent value escaped the image subalgebra"
                        )
                    col = i * d + beta
                    for out_coord in range(db):
                        out_rows[j * db + out_coord][col] = w_coords[out_coord]
        matrix = tuple(tuple(r) for r in out_rows)

        rel = tangent_module(p).relations
        rel_image = tangent_module(image_jet).relations
        for v in rel.basis:
            if not rel_image.contains_vector(mat_vec(matrix, v)):
                raise InternalCheckError("induced map is not constant on classes")

    return TangentMap(p, image_jet, exists, regular, matrix)
