"""Algebra core: products, involutions, norms, matrix forms."""

import itertools

import numpy as np
import pytest

from geome import ga

from oracles import CONJ_SIGNS, PRODUCTS

GRADES = (1, 2, 3)


def random_mv(rng, grade, size=None):
    dim = 2 ** grade
    shape = (dim,) if size is None else (size, dim)
    return rng.normal(size=shape)


class TestGeometricProduct:
    def test_scalar_identity(self):
        one = ga.Multivector(2, [1, 0, 0, 0])
        m = ga.Multivector(2, [5, 6, 7, 8])
        np.testing.assert_array_equal(ga.geometric_product(one, m).coeffs, m.coeffs)
        np.testing.assert_array_equal(ga.geometric_product(m, one).coeffs, m.coeffs)

    def test_generator_rules(self):
        # e_i e_i = 1 and e_i e_j = -e_j e_i for every generator pair
        for grade in GRADES:
            alg = ga.algebra(grade)
            gens = [n for n in alg.blade_names if n.startswith("e") and len(n) == 2]
            for a in gens:
                ea = ga.Multivector.basis(grade, a)
                self_sq = ga.geometric_product(ea, ea).coeffs
                expected = np.zeros(alg.dim)
                expected[0] = 1.0
                np.testing.assert_array_equal(self_sq, expected)
                for b in gens:
                    if a == b:
                        continue
                    eb = ga.Multivector.basis(grade, b)
                    ab = ga.geometric_product(ea, eb).coeffs
                    ba = ga.geometric_product(eb, ea).coeffs
                    np.testing.assert_array_equal(ab, -ba)

    def test_e1_e2_orientation(self):
        e1 = ga.Multivector.basis(2, "e1")
        e2 = ga.Multivector.basis(2, "e2")
        np.testing.assert_array_equal(ga.geometric_product(e1, e2).coeffs, [0, 0, 0, 1])
        np.testing.assert_array_equal(ga.geometric_product(e2, e1).coeffs, [0, 0, 0, -1])

    def test_worked_grade2_product(self):
        a = ga.Multivector(2, [1, 2, 3, 4])
        b = ga.Multivector(2, [5, 6, 7, 8])
        np.testing.assert_allclose(ga.geometric_product(a, b).coeffs, [6, 20, 14, 24],
                                   atol=0)

    def test_grade1_product(self):
        a = ga.Multivector(1, [2, 3])
        b = ga.Multivector(1, [5, 7])
        # (s + v e1)(s' + v' e1) = ss' + vv' + (sv' + vs') e1
        np.testing.assert_array_equal(ga.geometric_product(a, b).coeffs,
                                      [2 * 5 + 3 * 7, 2 * 7 + 3 * 5])

    @pytest.mark.parametrize("grade", GRADES)
    def test_matches_written_out_expansion(self, grade):
        rng = np.random.default_rng(11 + grade)
        ref = PRODUCTS[grade]
        for _ in range(300):
            a, b = random_mv(rng, grade), random_mv(rng, grade)
            got = ga.algebra(grade).product(a, b)
            np.testing.assert_allclose(got, ref(a, b), rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("grade", GRADES)
    def test_exhaustive_blade_pairs(self, grade):
        alg = ga.algebra(grade)
        ref = PRODUCTS[grade]
        for i, j in itertools.product(range(alg.dim), repeat=2):
            a = np.zeros(alg.dim)
            b = np.zeros(alg.dim)
            a[i] = 1.0
            b[j] = 1.0
            np.testing.assert_array_equal(alg.product(a, b), ref(a, b))

    @pytest.mark.parametrize("grade", GRADES)
    def test_associative(self, grade):
        rng = np.random.default_rng(7)
        alg = ga.algebra(grade)
        a = random_mv(rng, grade, 1000)
        b = random_mv(rng, grade, 1000)
        c = random_mv(rng, grade, 1000)
        lhs = alg.product(alg.product(a, b), c)
        rhs = alg.product(a, alg.product(b, c))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("grade", GRADES)
    def test_bilinear(self, grade):
        rng = np.random.default_rng(13)
        alg = ga.algebra(grade)
        a, b, c = (random_mv(rng, grade, 100) for _ in range(3))
        s = 1.7
        np.testing.assert_allclose(
            alg.product(a, b + c), alg.product(a, b) + alg.product(a, c),
            rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(
            alg.product(s * a, b), s * alg.product(a, b), rtol=1e-12, atol=1e-12)

    def test_grade_mismatch(self):
        with pytest.raises(ValueError, match="grade mismatch"):
            ga.geometric_product(ga.Multivector.zero(2), ga.Multivector.zero(3))

    @pytest.mark.parametrize("grade", GRADES)
    def test_finite_on_finite_inputs(self, grade):
        rng = np.random.default_rng(5)
        alg = ga.algebra(grade)
        a = random_mv(rng, grade, 500) * 1e150
        b = random_mv(rng, grade, 500) * 1e-150
        assert np.isfinite(alg.product(a, b)).all()


class TestInvolutions:
    def test_grade2_conjugation(self):
        m = ga.Multivector(2, [1, 2, 3, 4])
        np.testing.assert_array_equal(ga.involutions(m).conjugation.coeffs,
                                      [1, -2, -3, -4])

    def test_scalar_fixed_point(self):
        for grade in GRADES:
            m = ga.Multivector.scalar(grade, 4.5)
            inv = ga.involutions(m)
            for out in inv:
                np.testing.assert_array_equal(out.coeffs, m.coeffs)

    def test_grade3_conjugation(self):
        m = ga.Multivector(3, np.ones(8))
        np.testing.assert_array_equal(ga.involutions(m).conjugation.coeffs,
                                      [1, -1, -1, -1, -1, -1, -1, 1])

    def test_grade3_space_inversion_and_reversion(self):
        m = ga.Multivector(3, np.ones(8))
        inv = ga.involutions(m)
        # odd blades flip under space inversion
        np.testing.assert_array_equal(inv.space_inversion.coeffs,
                                      [1, -1, -1, -1, 1, 1, 1, -1])
        # order reversal flips bivectors and the trivector
        np.testing.assert_array_equal(inv.reversion.coeffs,
                                      [1, 1, 1, 1, -1, -1, -1, -1])

    @pytest.mark.parametrize("grade", GRADES)
    def test_conjugation_is_involution(self, grade):
        rng = np.random.default_rng(3)
        alg = ga.algebra(grade)
        m = random_mv(rng, grade, 200)
        np.testing.assert_array_equal(alg.conjugate(alg.conjugate(m)), m)

    @pytest.mark.parametrize("grade", GRADES)
    def test_conjugation_antiautomorphism(self, grade):
        rng = np.random.default_rng(17)
        alg = ga.algebra(grade)
        a = random_mv(rng, grade, 300)
        b = random_mv(rng, grade, 300)
        lhs = alg.conjugate(alg.product(a, b))
        rhs = alg.product(alg.conjugate(b), alg.conjugate(a))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("grade", GRADES)
    def test_composition(self, grade):
        rng = np.random.default_rng(23)
        alg = ga.algebra(grade)
        m = random_mv(rng, grade, 100)
        np.testing.assert_array_equal(alg.conjugate(m),
                                      alg.reverse(alg.space_invert(m)))


class TestNorm:
    def test_zero(self):
        assert ga.norm(ga.Multivector.zero(3)) == 0.0

    def test_values(self):
        assert ga.norm(ga.Multivector(2, [1, 2, 3, 4])) == pytest.approx(np.sqrt(30), rel=1e-15)
        assert ga.norm(ga.Multivector(2, [3, 0, 0, 4])) == 5.0


class TestMatrixForm:
    def test_scalar_gives_identity(self):
        mf = ga.matrix_form(ga.Multivector.scalar(2, 1.0))
        np.testing.assert_array_equal(mf.mat, np.eye(4))

    def test_first_column(self):
        mf = ga.matrix_form(ga.Multivector(2, [1, 2, 3, 4]))
        np.testing.assert_array_equal(mf.mat @ np.array([1.0, 0, 0, 0]), [1, 2, 3, 4])

    def test_full_grade2_layout(self):
        a0, a1, a2, a12 = 1.0, 2.0, 3.0, 4.0
        mf = ga.matrix_form(ga.Multivector(2, [a0, a1, a2, a12]))
        expected = np.array([
            [a0, a1, a2, -a12],
            [a1, a0, a12, -a2],
            [a2, -a12, a0, a1],
            [a12, -a2, a1, a0],
        ])
        np.testing.assert_array_equal(mf.mat, expected)

    @pytest.mark.parametrize("grade", GRADES)
    def test_matrix_reproduces_product(self, grade):
        rng = np.random.default_rng(29)
        alg = ga.algebra(grade)
        for _ in range(200):
            a, b = random_mv(rng, grade), random_mv(rng, grade)
            np.testing.assert_allclose(alg.matrices(a) @ b, alg.product(a, b),
                                       rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("grade", GRADES)
    def test_sign_mask_negates_vector_blades(self, grade):
        mf = ga.matrix_form(ga.Multivector.zero(grade))
        alg = ga.algebra(grade)
        np.testing.assert_array_equal(mf.sign_mask,
                                      np.where(alg.blade_grades == 1, -1.0, 1.0))


class TestScalarSplit:
    def test_pure_scalar(self):
        assert ga.scalar_split(ga.Multivector(2, [4, 0, 0, 0])) == (4.0, 0.0)

    def test_grade2_self_conjugate_product_is_scalar(self):
        rng = np.random.default_rng(31)
        for _ in range(500):
            c = rng.normal(size=4)
            m = ga.Multivector(2, c)
            prod = ga.geometric_product(m, ga.involutions(m).conjugation)
            scalar, rest = ga.scalar_split(prod)
            assert rest == pytest.approx(0.0, abs=1e-13)
            expected = c[0] ** 2 - c[1] ** 2 - c[2] ** 2 + c[3] ** 2
            assert scalar == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_grade3_self_conjugate_product_blades(self):
        # scalar and trivector only; vector and bivector blades vanish
        rng = np.random.default_rng(37)
        for _ in range(500):
            m = ga.Multivector(3, rng.normal(size=8))
            prod = ga.geometric_product(m, ga.involutions(m).conjugation)
            np.testing.assert_allclose(prod.coeffs[1:7], 0.0, atol=1e-12)

    def test_hand_value(self):
        m = ga.Multivector(2, [1, 2, 3, 4])
        prod = ga.geometric_product(m, ga.involutions(m).conjugation)
        assert ga.scalar_split(prod) == (4.0, 0.0)


class TestIsomorphisms:
    def test_quaternion_embedding(self):
        from oracles import QUATERNION_SLOTS, hamilton_product

        rng = np.random.default_rng(41)
        alg = ga.algebra(3)
        for _ in range(1000):
            p, q = rng.normal(size=4), rng.normal(size=4)
            mp = np.zeros(8)
            mq = np.zeros(8)
            mp[QUATERNION_SLOTS] = p
            mq[QUATERNION_SLOTS] = q
            prod = alg.product(mp, mq)
            np.testing.assert_allclose(prod[QUATERNION_SLOTS], hamilton_product(p, q),
                                       rtol=1e-12, atol=1e-12)
            rest = np.delete(prod, QUATERNION_SLOTS)
            np.testing.assert_array_equal(rest, 0.0)

    def test_complex_embedding(self):
        rng = np.random.default_rng(43)
        alg = ga.algebra(2)
        for _ in range(1000):
            za, zb = rng.normal(size=2) @ [1, 1j], rng.normal(size=2) @ [1, 1j]
            ma = np.array([za.real, 0.0, 0.0, za.imag])
            mb = np.array([zb.real, 0.0, 0.0, zb.imag])
            prod = alg.product(ma, mb)
            zc = za * zb
            np.testing.assert_allclose(prod, [zc.real, 0.0, 0.0, zc.imag],
                                       rtol=1e-12, atol=1e-12)


class TestMultivectorType:
    def test_wrong_length(self):
        with pytest.raises(ValueError, match="coefficients"):
            ga.Multivector(2, [1, 2, 3])

    def test_unsupported_grade(self):
        with pytest.raises(ValueError, match="unsupported grade"):
            ga.Multivector(4, np.zeros(16))

    def test_coeffs_read_only(self):
        m = ga.Multivector(2, [1, 2, 3, 4])
        with pytest.raises(ValueError):
            m.coeffs[0] = 9.0

    def test_basis_constructor(self):
        e13 = ga.Multivector.basis(3, "e1e3")
        assert e13.coeffs[6] == 1.0 and np.sum(np.abs(e13.coeffs)) == 1.0
