"""Real Clifford algebras Cl(1), Cl(2), Cl(3) with a fixed blade layout.

The algebra over n orthonormal generators follows two rules:

    (a) e_i e_i = +1
    (b) e_i e_j = -e_j e_i   for i != j

which make the multivector space 2^n-dimensional.  Blade coefficients are
stored in the order

    n=1: [1, e1]
    n=2: [1, e1, e2, e1e2]
    n=3: [1, e1, e2, e3, e1e2, e2e3, e1e3, e1e2e3]

and every operation in this module (geometric product, the three
involutions, norms, matrix forms) is derived from rules (a)/(b) alone.
The multiplication table is built once per grade and cached; all array
operations are vectorized over leading axes with blades on the last axis.

Multivectors are immutable values and every function here is pure, so the
module is safe to use from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

SUPPORTED_GRADES = (1, 2, 3)

_BLADE_MASKS = {
    1: (0b0, 0b1),
    2: (0b00, 0b01, 0b10, 0b11),
    3: (0b000, 0b001, 0b010, 0b100, 0b011, 0b110, 0b101, 0b111),
}

_BLADE_NAMES = {
    1: ("1", "e1"),
    2: ("1", "e1", "e2", "e1e2"),
    3: ("1", "e1", "e2", "e3", "e1e2", "e2e3", "e1e3", "e1e2e3"),
}

GROUP_NAMES = ("scalar", "vector", "bivector", "trivector")


def _reordering_sign(a: int, b: int) -> int:
    """Sign from sorting the concatenation of two basis blades.

    Blades are bitmasks over generators; each transposition of adjacent
    distinct generators contributes a factor -1, and e_i e_i contracts
    to +1.
    """
    a >>= 1
    swaps = 0
    while a:
        swaps += (a & b).bit_count()
        a >>= 1
    return -1 if swaps & 1 else 1


class Algebra:
    """Multiplication structure of the n-generator algebra.

    Attributes:
        grade: number of generators n.
        dim: 2^n blade slots.
        blade_names: canonical blade labels, index-aligned with coefficients.
        blade_grades: grade of each blade (number of generators in it).
        structure: (dim, dim, dim) sign tensor C with
            (a x b)[k] = sum_ij C[i, j, k] a[i] b[j].
        conjugation_signs / reversion_signs / space_inversion_signs:
            per-blade signs of the three involutions.
        tail_signs: per-blade signs sigma with
            Sc(a x conjugate(b)) = sum_i sigma[i] a[i] b[i];
            the contraction used by the scoring kernels.
        sign_mask: +1 everywhere except -1 at the grade-1 (vector) blades.
    """

    def __init__(self, grade: int):
        if grade not in SUPPORTED_GRADES:
            raise ValueError(f"unsupported grade {grade}; expected one of {SUPPORTED_GRADES}")
        masks = _BLADE_MASKS[grade]
        position = {m: i for i, m in enumerate(masks)}
        dim = len(masks)

        self.grade = grade
        self.dim = dim
        self.blade_names = _BLADE_NAMES[grade]
        self.blade_grades = np.array([m.bit_count() for m in masks])

        structure = np.zeros((dim, dim, dim))
        for i, mi in enumerate(masks):
            for j, mj in enumerate(masks):
                structure[i, j, position[mi ^ mj]] = _reordering_sign(mi, mj)
        structure.setflags(write=False)
        self.structure = structure

        g = self.blade_grades
        self.space_inversion_signs = _frozen((-1.0) ** g)
        self.reversion_signs = _frozen((-1.0) ** (g * (g - 1) // 2))
        self.conjugation_signs = _frozen(self.space_inversion_signs * self.reversion_signs)
        # e_I e_I = reversion sign of e_I under the Euclidean rules
        self.blade_squares = _frozen(np.einsum("iik->ik", structure.copy())[:, 0])
        self.tail_signs = _frozen(self.conjugation_signs * self.blade_squares)
        self.sign_mask = _frozen(np.where(g == 1, -1.0, 1.0))

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Geometric product, elementwise over leading axes."""
        return np.einsum("ijk,...i,...j->...k", self.structure, a, b, optimize=True)

    def conjugate(self, m: np.ndarray) -> np.ndarray:
        return m * self.conjugation_signs

    def reverse(self, m: np.ndarray) -> np.ndarray:
        return m * self.reversion_signs

    def space_invert(self, m: np.ndarray) -> np.ndarray:
        return m * self.space_inversion_signs

    def norm(self, m: np.ndarray) -> np.ndarray:
        """Root of the squared sum of all blade coefficients (last axis)."""
        return np.sqrt(np.sum(np.square(m), axis=-1))

    def matrices(self, m: np.ndarray) -> np.ndarray:
        """Matrix form Mat(m) with Mat(m) @ coeffs(b) == coeffs(m x b)."""
        return np.einsum("ijk,...i->...kj", self.structure, m, optimize=True)

    def __repr__(self) -> str:
        return f"Algebra(grade={self.grade})"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def algebra(grade: int) -> Algebra:
    """Cached algebra instance for a supported grade."""
    return Algebra(grade)


class Multivector:
    """One element of the n-generator algebra: 2^n real blade coefficients."""

    __slots__ = ("grade", "coeffs")

    def __init__(self, grade: int, coeffs):
        alg = algebra(grade)
        arr = np.array(coeffs, dtype=np.float64)
        if arr.shape != (alg.dim,):
            raise ValueError(
                f"grade-{grade} multivector needs {alg.dim} coefficients, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        self.grade = grade
        self.coeffs = arr

    @classmethod
    def zero(cls, grade: int) -> "Multivector":
        return cls(grade, np.zeros(algebra(grade).dim))

    @classmethod
    def scalar(cls, grade: int, value: float) -> "Multivector":
        c = np.zeros(algebra(grade).dim)
        c[0] = value
        return cls(grade, c)

    @classmethod
    def basis(cls, grade: int, name: str) -> "Multivector":
        alg = algebra(grade)
        if name not in alg.blade_names:
            raise ValueError(f"unknown blade {name!r} for grade {grade}")
        c = np.zeros(alg.dim)
        c[alg.blade_names.index(name)] = 1.0
        return cls(grade, c)

    def __repr__(self) -> str:
        alg = algebra(self.grade)
        terms = " + ".join(f"{c:g}*{n}" for c, n in zip(self.coeffs, alg.blade_names))
        return f"Multivector({terms})"


class Involutions(NamedTuple):
    space_inversion: Multivector
    reversion: Multivector
    conjugation: Multivector


@dataclass(frozen=True)
class MatrixForm:
    """Matrix-vector form of left multiplication by a fixed multivector."""

    grade: int
    mat: np.ndarray
    sign_mask: np.ndarray


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    """Geometric product a x b under basis rules (a)/(b)."""
    if a.grade != b.grade:
        raise ValueError(f"grade mismatch: {a.grade} vs {b.grade}")
    alg = algebra(a.grade)
    return Multivector(a.grade, alg.product(a.coeffs, b.coeffs))


def involutions(m: Multivector) -> Involutions:
    """Space inversion, reversion, and their composition (conjugation).

    Space inversion flips the sign of each generator, so odd-grade blades
    are negated.  Reversion reverses the order of generators inside each
    blade.  Clifford conjugation is reversion composed with space
    inversion and negates the vector and bivector blades.
    """
    alg = algebra(m.grade)
    return Involutions(
        space_inversion=Multivector(m.grade, alg.space_invert(m.coeffs)),
        reversion=Multivector(m.grade, alg.reverse(m.coeffs)),
        conjugation=Multivector(m.grade, alg.conjugate(m.coeffs)),
    )


def conjugate(m: Multivector) -> Multivector:
    alg = algebra(m.grade)
    return Multivector(m.grade, alg.conjugate(m.coeffs))


def norm(m: Multivector) -> float:
    """Root of the square sum of the blade coefficients."""
    return float(algebra(m.grade).norm(m.coeffs))


def matrix_form(m: Multivector) -> MatrixForm:
    """Left-multiplication matrix: mat @ coeffs(b) == coeffs(m x b)."""
    alg = algebra(m.grade)
    return MatrixForm(grade=m.grade, mat=alg.matrices(m.coeffs), sign_mask=alg.sign_mask.copy())


def scalar_split(m: Multivector) -> tuple[float, float]:
    """Scalar blade of m and the Euclidean norm of every other blade."""
    scalar = float(m.coeffs[0])
    rest = float(np.sqrt(np.sum(np.square(m.coeffs[1:]))))
    return scalar, rest
