"""Canonical linear subspaces over the rationals.

A :class:`Subspace` stores the reduced row-echelon basis of a span.  Because
the representation is canonical, two subspaces are equal as sets exactly when
their stored bases are equal component-wise, which is what makes ideal
equality (and every acceptance check built on it) decidable.

All solvers here are exact: no pivot thresholds, no floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DimensionMismatchError
from .poly import as_fraction

Vector = tuple[Fraction, ...]
Matrix = tuple[Vector, ...]  # rows index the output coordinates

_ZERO = Fraction(0)


def _coerce_vector(vector: Sequence, ambient: int) -> list[Fraction]:
    if len(vector) != ambient:
        raise DimensionMismatchError(
            f"vector of length {len(vector)} in ambient dimension {ambient}"
        )
    return [as_fraction(v) for v in vector]


def rref_insert(
    basis: list[list[Fraction]], pivots: list[int], row: list[Fraction]
) -> bool:
    """Insert a row into an RREF basis, keeping it reduced; False if dependent."""
    # Reduce the candidate against existing pivots.
    for b, p in zip(basis, pivots):
        c = row[p]
        if c:
            row = [a - c * bb for a, bb in zip(row, b)]
    pivot = next((i for i, a in enumerate(row) if a), None)
    if pivot is None:
        return False
    inv = row[pivot]
    if inv != 1:
        row = [a / inv for a in row]
    # Eliminate the new pivot column from existing rows.
    for k, b in enumerate(basis):
        c = b[pivot]
        if c:
            basis[k] = [a - c * r for a, r in zip(b, row)]
    at = next((k for k, p in enumerate(pivots) if p > pivot), len(pivots))
    basis.insert(at, row)
    pivots.insert(at, pivot)
    return True


def rref(rows: Iterable[Sequence], ambient: int) -> tuple[list[list[Fraction]], list[int]]:
    basis: list[list[Fraction]] = []
    pivots: list[int] = []
    for row in rows:
        rref_insert(basis, pivots, _coerce_vector(row, ambient))
    return basis, pivots


@dataclass(frozen=True)
class Subspace:
    """A linear subspace in canonical (reduced row-echelon) form."""

    ambient_dimension: int
    basis: Matrix
    pivots: tuple[int, ...] = field(default=())

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def reduce(self, vector: Sequence) -> list[Fraction]:
        """Remainder of a vector after elimination against the basis."""
        row = _coerce_vector(vector, self.ambient_dimension)
        for b, p in zip(self.basis, self.pivots):
            c = row[p]
            if c:
                row = [a - c * bb for a, bb in zip(row, b)]
        return row

    def contains_vector(self, vector: Sequence) -> bool:
        return not any(self.reduce(vector))

    def contains_subspace(self, other: "Subspace") -> bool:
        self._check_ambient(other)
        return all(self.contains_vector(r) for r in other.basis)

    def _check_ambient(self, other: "Subspace") -> None:
        if self.ambient_dimension != other.ambient_dimension:
            raise DimensionMismatchError(
                f"ambient dimensions differ: {self.ambient_dimension} vs "
                f"{other.ambient_dimension}"
            )

    def free_columns(self) -> tuple[int, ...]:
        """Columns without a pivot; they index a complement basis."""
        taken = set(self.pivots)
        return tuple(c for c in range(self.ambient_dimension) if c not in taken)

    def membership_rows(self) -> Matrix:
        """Functionals whose common kernel is exactly this subspace.

        Row for free column c: e_c - sum_j basis[j][c] e_{pivot_j}; a vector w
        lies in the subspace iff every row pairs to zero with w.
        """
        rows = []
        for c in self.free_columns():
            row = [_ZERO] * self.ambient_dimension
            row[c] = Fraction(1)
            for b, p in zip(self.basis, self.pivots):
                if b[c]:
                    row[p] = -b[c]
            rows.append(tuple(row))
        return tuple(rows)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dimension}, ambient={self.ambient_dimension})"


def canonical_basis(vectors: Iterable[Sequence], ambient_dimension: int) -> Subspace:
    """Reduced row-echelon basis of the span of the given vectors."""
    basis, pivots = rref(vectors, ambient_dimension)
    return Subspace(
        ambient_dimension,
        tuple(tuple(r) for r in basis),
        tuple(pivots),
    )


def zero_subspace(ambient_dimension: int) -> Subspace:
    return Subspace(ambient_dimension, (), ())


def full_subspace(ambient_dimension: int) -> Subspace:
    rows = []
    for i in range(ambient_dimension):
        row = [_ZERO] * ambient_dimension
        row[i] = Fraction(1)
        rows.append(tuple(row))
    return Subspace(ambient_dimension, tuple(rows), tuple(range(ambient_dimension)))


def subspace_sum(u: Subspace, v: Subspace) -> Subspace:
    u._check_ambient(v)
    return canonical_basis(list(u.basis) + list(v.basis), u.ambient_dimension)


def subspace_intersection(u: Subspace, v: Subspace) -> Subspace:
    """Intersection via the kernel of the stacked-basis map.

    Solve sum_i a_i u_i + sum_j b_j v_j = 0; each kernel element yields the
    intersection vector sum_i a_i u_i.
    """
    u._check_ambient(v)
    nu, nv = u.dimension, v.dimension
    if nu == 0 or nv == 0:
        return zero_subspace(u.ambient_dimension)
    stacked = []
    for col in range(u.ambient_dimension):
        stacked.append(
            tuple(r[col] for r in u.basis) + tuple(r[col] for r in v.basis)
        )
    kernel = nullspace(stacked, nu + nv)
    vectors = []
    for k in kernel.basis:
        vec = [_ZERO] * u.ambient_dimension
        for a, row in zip(k[:nu], u.basis):
            if a:
                vec = [x + a * y for x, y in zip(vec, row)]
        vectors.append(vec)
    return canonical_basis(vectors, u.ambient_dimension)


def quotient_dimension(u: Subspace, v: Subspace) -> int:
    """dim U - dim V, demanding V <= U."""
    if not u.contains_subspace(v):
        raise DimensionMismatchError("quotient_dimension requires V contained in U")
    return u.dimension - v.dimension


def subspace_query(kind: str, u: Subspace, other=None):
    """Single entry point mirroring the documented query surface."""
    if kind == "sum":
        return subspace_sum(u, other)
    if kind == "intersection":
        return subspace_intersection(u, other)
    if kind == "contains_vector":
        return u.contains_vector(other)
    if kind == "contains_subspace":
        return u.contains_subspace(other)
    if kind == "quotient_dimension":
        return quotient_dimension(u, other)
    raise ValueError(f"unknown subspace query {kind!r}")


# -- linear maps as row matrices ----------------------------------------------


def mat_vec(rows: Sequence[Sequence[Fraction]], vector: Sequence[Fraction]) -> list[Fraction]:
    out = []
    for row in rows:
        s = _ZERO
        for a, b in zip(row, vector):
            if a and b:
                s += a * b
        out.append(s)
    return out


def mat_mul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Rows of a compose with rows of b: (a @ b)[i][j] = sum_k a[i][k] b[k][j]."""
    if not a:
        return []
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [_ZERO] * cols
        for k, coeff in enumerate(row):
            if coeff:
                brow = b[k]
                for j, val in enumerate(brow):
                    if val:
                        acc[j] += coeff * val
        out.append(acc)
    return out


def nullspace(rows: Iterable[Sequence], ambient: int) -> Subspace:
    """Solution space of (row . x) = 0 for every row."""
    basis, pivots = rref(rows, ambient)
    free = [c for c in range(ambient) if c not in set(pivots)]
    vectors = []
    for c in free:
        vec = [_ZERO] * ambient
        vec[c] = Fraction(1)
        for row, p in zip(basis, pivots):
            if row[c]:
                vec[p] = -row[c]
        vectors.append(vec)
    return canonical_basis(vectors, ambient)


def preimage(matrix: Sequence[Sequence[Fraction]], target: Subspace, domain_dimension: int) -> Subspace:
    """{v : M v in target} for a row matrix M."""
    rows = []
    for functional in target.membership_rows():
        # functional . (M v) = (functional @ M) . v
        composed = [_ZERO] * domain_dimension
        for out_coord, c in enumerate(functional):
            if c:
                mrow = matrix[out_coord]
                for j, val in enumerate(mrow):
                    if val:
                        composed[j] += c * val
        rows.append(composed)
    return nullspace(rows, domain_dimension)


def image(matrix: Sequence[Sequence[Fraction]], vectors: Iterable[Sequence[Fraction]], out_dimension: int) -> Subspace:
    return canonical_basis([mat_vec(matrix, v) for v in vectors], out_dimension)


def solve_columns(
    columns: Sequence[Sequence[Fraction]], target: Sequence[Fraction]
) -> list[Fraction] | None:
    """One exact solution u of sum_k u_k columns[k] = target, or None.

    Free unknowns are set to zero, so the answer is deterministic.
    """
    ncols = len(columns)
    height = len(target)
    rows = []
    for i in range(height):
        rows.append([col[i] for col in columns] + [target[i]])
    basis, pivots = rref(rows, ncols + 1)
    solution = [_ZERO] * ncols
    for row, p in zip(basis, pivots):
        if p == ncols:
            return None  # inconsistent system
        # Row: x_p + sum_{free c>p} row[c] x_c = row[-1]; free unknowns are 0.
        solution[p] = row[ncols]
    # Cheap insurance: the zero-free-variable answer must solve the system.
    check = [_ZERO] * height
    for k, u in enumerate(solution):
        if u:
            for i in range(height):
                check[i] += u * columns[k][i]
    if any(a != b for a, b in zip(check, [as_fraction(t) for t in target])):
        return None
    return solution


def invert_matrix(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]] | None:
    """Exact inverse of a square row matrix, or None if singular."""
    n = len(rows)
    aug = []
    for i, row in enumerate(rows):
        if len(row) != n:
            raise DimensionMismatchError("invert_matrix needs a square matrix")
        ext = list(row) + [_ZERO] * n
        ext[n + i] = Fraction(1)
        aug.append(ext)
    basis, pivots = rref(aug, 2 * n)
    if list(pivots[:n]) != list(range(n)) or len(pivots) < n:
        return None
    return [list(basis[i][n:]) for i in range(n)]
