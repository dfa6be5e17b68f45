"""Independent reference implementations used as test oracles.

Everything here is written out term by term, without touching the
package's multiplication tables, so agreement is meaningful.
"""

import numpy as np


def product_g1(a, b):
    a0, a1 = a
    b0, b1 = b
    return np.array([a0 * b0 + a1 * b1, a0 * b1 + a1 * b0])


def product_g2(a, b):
    a0, a1, a2, a12 = a
    b0, b1, b2, b12 = b
    return np.array([
        a0 * b0 + a1 * b1 + a2 * b2 - a12 * b12,
        a0 * b1 + a1 * b0 - a2 * b12 + a12 * b2,
        a0 * b2 + a1 * b12 + a2 * b0 - a12 * b1,
        a0 * b12 + a1 * b2 - a2 * b1 + a12 * b0,
    ])


def product_g3(a, b):
    a0, a1, a2, a3, a12, a23, a13, a123 = a
    b0, b1, b2, b3, b12, b23, b13, b123 = b
    return np.array([
        a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3
        - a12 * b12 - a23 * b23 - a13 * b13 - a123 * b123,
        a0 * b1 + a1 * b0 - a2 * b12 + a12 * b2
        - a3 * b13 + a13 * b3 - a23 * b123 - a123 * b23,
        a0 * b2 + a2 * b0 + a1 * b12 - a12 * b1
        - a3 * b23 + a23 * b3 + a13 * b123 + a123 * b13,
        a0 * b3 + a3 * b0 + a1 * b13 - a13 * b1
        + a2 * b23 - a23 * b2 - a12 * b123 - a123 * b12,
        a0 * b12 + a12 * b0 + a1 * b2 - a2 * b1
        - a13 * b23 + a23 * b13 + a3 * b123 + a123 * b3,
        a0 * b23 + a23 * b0 + a1 * b123 + a123 * b1
        + a2 * b3 - a3 * b2 - a12 * b13 + a13 * b12,
        a0 * b13 + a13 * b0 + a1 * b3 - a3 * b1
        - a2 * b123 - a123 * b2 + a12 * b23 - a23 * b12,
        a0 * b123 + a123 * b0 + a1 * b23 + a23 * b1
        - a2 * b13 - a13 * b2 + a3 * b12 + a12 * b3,
    ])


PRODUCTS = {1: product_g1, 2: product_g2, 3: product_g3}

CONJ_SIGNS = {
    1: np.array([1.0, -1.0]),
    2: np.array([1.0, -1.0, -1.0, -1.0]),
    3: np.array([1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 1.0]),
}


def reference_score(grade, h, r, t):
    """Sc(h x r x conjugate(t)) per multivector component, summed over k.

    h, r, t have shape (k, 2^grade).
    """
    prod = PRODUCTS[grade]
    total = 0.0
    for hi, ri, ti in zip(h, r, t):
        total += prod(prod(hi, ri), CONJ_SIGNS[grade] * ti)[0]
    return total


def hamilton_product(p, q):
    """i^2 = j^2 = k^2 = ijk = -1."""
    p0, p1, p2, p3 = p
    q0, q1, q2, q3 = q
    return np.array([
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
        p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
        p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
    ])


# quaternion units map onto bivector blade slots: i -> e1e2, j -> e2e3, k -> e1e3
QUATERNION_SLOTS = [0, 4, 5, 6]


def quaternion_score(h, r, t):
    """Re(H * R * conjugate(T)) summed over components; (k, 4) inputs."""
    total = 0.0
    for hi, ri, ti in zip(h, r, t):
        ti_conj = np.array([ti[0], -ti[1], -ti[2], -ti[3]])
        total += hamilton_product(hamilton_product(hi, ri), ti_conj)[0]
    return total


def complex_score(h, r, t):
    """Re(sum_i h_i r_i conj(t_i)) for complex component arrays."""
    return float(np.sum(h * r * np.conj(t)).real)


def protate_distance(h, r, t):
    """|| h o r - t || over complex components."""
    return float(np.sqrt(np.sum(np.abs(h * r - t) ** 2)))
