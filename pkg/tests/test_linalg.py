"""Exact linear algebra helpers against independent oracles."""

from fractions import Fraction
import random

import pytest

from slopelab import linalg as la

from oracles import box_short_vectors, cofactor_det, random_spd_matrix, random_unimodular


def rand_matrix(rng, m, n, bound=6):
    return [
        [Fraction(rng.randrange(-bound, bound + 1), rng.randrange(1, 4)) for _ in range(n)]
        for _ in range(m)
    ]


def test_det_against_cofactor_oracle():
    rng = random.Random(41)
    for n in (1, 2, 3, 4, 5):
        for _ in range(20):
            M = rand_matrix(rng, n, n)
            assert la.det(M) == cofactor_det(M)
    assert la.det([]) == 1


def test_inverse_and_solve():
    rng = random.Random(43)
    for _ in range(40):
        n = rng.randrange(1, 5)
        M = rand_matrix(rng, n, n)
        if la.det(M) == 0:
            continue
        assert la.mat_eq(la.mat_mul(M, la.inverse(M)), la.identity(n))
        b = [Fraction(rng.randrange(-9, 10)) for _ in range(n)]
        x = la.solve_square(M, b)
        assert la.mat_vec(M, x) == b
    with pytest.raises(la.SingularMatrixError):
        la.inverse([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]])


def test_rref_canonical_under_row_ops():
    rng = random.Random(47)
    for _ in range(40):
        m, n = rng.randrange(1, 5), rng.randrange(1, 6)
        M = rand_matrix(rng, m, n)
        R1, p1 = la.rref(M)
        scrambled = [row[:] for row in M]
        rng.shuffle(scrambled)
        factors = [Fraction(rng.randrange(1, 5)) for _ in scrambled]
        scrambled = [[x * f for x in row] for row, f in zip(scrambled, factors)]
        coeffs = [Fraction(rng.randrange(-2, 3)) for _ in range(m)]
        scrambled.append(
            [sum(coeffs[i] * M[i][c] for i in range(m)) for c in range(n)]
        )
        R2, p2 = la.rref(scrambled)
        assert R1 == R2 and p1 == p2
    assert la.rref([]) == ([], [])


def test_kernel_and_rank():
    rng = random.Random(53)
    for _ in range(40):
        m, n = rng.randrange(1, 5), rng.randrange(1, 6)
        M = rand_matrix(rng, m, n)
        K = la.kernel(M, n)
        assert len(K) == n - la.rank(M)
        for v in K:
            assert all(x == 0 for x in la.mat_vec(M, v))


def test_sum_and_intersection_dimension_formula():
    rng = random.Random(59)
    for _ in range(60):
        n = rng.randrange(1, 6)
        A = la.rref(rand_matrix(rng, rng.randrange(1, 4), n))[0]
        B = la.rref(rand_matrix(rng, rng.randrange(1, 4), n))[0]
        S = la.sum_row_spaces(A, B)
        I = la.intersect_row_spaces(A, B)
        assert len(S) + len(I) == len(A) + len(B)
        RA, pA = la.rref(A)
        RB, pB = la.rref(B)
        for v in I:
            assert la.row_space_contains(RA, pA, v)
            assert la.row_space_contains(RB, pB, v)


def test_kron_action():
    rng = random.Random(61)
    for _ in range(20):
        A = rand_matrix(rng, 2, 2)
        B = rand_matrix(rng, 3, 3)
        x = [Fraction(rng.randrange(-4, 5)) for _ in range(2)]
        y = [Fraction(rng.randrange(-4, 5)) for _ in range(3)]
        xy = [a * b for a in x for b in y]
        lhs = la.mat_vec(la.kron(A, B), xy)
        Ax, By = la.mat_vec(A, x), la.mat_vec(B, y)
        rhs = [a * b for a in Ax for b in By]
        assert lhs == rhs


def test_compound_multiplicative():
    # Cauchy-Binet: C_k(AB) = C_k(A) C_k(B)
    rng = random.Random(67)
    for k in (1, 2, 3):
        for _ in range(10):
            A = rand_matrix(rng, 4, 4, 3)
            B = rand_matrix(rng, 4, 4, 3)
            lhs = la.compound_matrix(la.mat_mul(A, B), k)
            rhs = la.mat_mul(la.compound_matrix(A, k), la.compound_matrix(B, k))
            assert la.mat_eq(lhs, rhs)
    G = rand_matrix(rng, 3, 3)
    assert la.mat_eq(la.compound_matrix(G, 1), G)


def test_wedge_norm_identity():
    # |b_1 /\ ... /\ b_k|^2 under the compound Gram equals det(B^T G B)
    rng = random.Random(71)
    for _ in range(30):
        r = rng.randrange(2, 5)
        k = rng.randrange(1, r + 1)
        G = random_spd_matrix(rng, r, 4)
        B = [[Fraction(rng.randrange(-3, 4)) for _ in range(k)] for _ in range(r)]
        w = la.wedge_of_columns(B, k)
        C = la.compound_matrix(G, k)
        lhs = la.vec_dot(w, la.mat_vec(C, w))
        BtGB = la.mat_mul(la.transpose(B), la.mat_mul(G, B))
        assert lhs == la.det(BtGB)


def test_hnf_rows_canonical():
    rng = random.Random(73)
    for _ in range(50):
        m, n = rng.randrange(1, 5), rng.randrange(1, 5)
        A = [[rng.randrange(-9, 10) for _ in range(n)] for _ in range(m)]
        H = la.hnf_rows(A)
        # same row lattice: mutual integer membership via rational rref
        assert la.rref(A)[0] == la.rref(H)[0] if H else la.rank(A) == 0
        assert la.hnf_rows(H) == H
        U = random_unimodular(rng, m)
        UA = la.mat_mul(U, A)
        assert la.hnf_rows(la.int_rows(UA)) == H


def test_hnf_pivot_normalization():
    H = la.hnf_rows([[2, 4], [0, 3]])
    # pivots positive, entry above pivot reduced into [0, pivot)
    assert H == [[2, 1], [0, 3]]


def test_int_diagonalize_properties():
    rng = random.Random(79)
    for _ in range(50):
        r = rng.randrange(1, 5)
        k = rng.randrange(1, r + 1)
        B = [[rng.randrange(-6, 7) for _ in range(k)] for _ in range(r)]
        Uinv, d = la.int_diagonalize(B)
        assert abs(la.det(Uinv)) == 1
        assert all(x > 0 for x in d)
        assert len(d) == la.rank(B)
        # Q-column span of B equals span of the first len(d) columns of Uinv
        first = [[Fraction(Uinv[i][j]) for j in range(len(d))] for i in range(r)]
        assert la.rref(la.transpose(B))[0] == la.rref(la.transpose(first))[0]


def test_ldl():
    rng = random.Random(83)
    for _ in range(30):
        n = rng.randrange(1, 6)
        G = random_spd_matrix(rng, n)
        L, d = la.ldl(G)
        D = [[d[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)]
        assert la.mat_eq(la.mat_mul(L, la.mat_mul(D, la.transpose(L))), G)
        assert all(x > 0 for x in d)
    with pytest.raises(la.SingularMatrixError):
        la.ldl([[Fraction(0)]])


def test_positive_definite_check():
    assert la.is_positive_definite([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(1)]])
    assert not la.is_positive_definite([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(1)]])
    assert not la.is_positive_definite([[Fraction(1), Fraction(0)], [Fraction(1), Fraction(1)]])


def test_gram_lll_invariants():
    rng = random.Random(89)
    for _ in range(25):
        n = rng.randrange(1, 6)
        G = random_spd_matrix(rng, n)
        Gred, U = la.gram_lll(G)
        assert abs(la.det([[Fraction(x) for x in row] for row in U])) == 1
        assert la.mat_eq(
            Gred, la.mat_mul(la.transpose(U), la.mat_mul(G, U))
        )
        assert la.det(Gred) == la.det(G)
        # verify the reduction conditions on the output
        L, d = la.ldl(Gred)
        for i in range(n):
            for j in range(i):
                assert abs(L[i][j]) <= Fraction(1, 2)
        for kk in range(1, n):
            lhs = d[kk]
            rhs = (Fraction(3, 4) - L[kk][kk - 1] ** 2) * d[kk - 1]
            assert lhs >= rhs


def test_short_vectors_against_box_oracle():
    rng = random.Random(97)
    for _ in range(25):
        n = rng.randrange(1, 4)
        G = random_spd_matrix(rng, n, 3)
        bound = Fraction(rng.randrange(1, 40))
        got = {v: norm for v, norm in la.short_vectors_gram(G, bound)}
        want = box_short_vectors(G, bound)
        assert got == want


def test_short_vectors_diag_frozen():
    G = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(4)]]
    out = la.short_vectors_gram(G, Fraction(4))
    assert out == [
        ((1, 0), Fraction(1)),
        ((0, 1), Fraction(4)),
        ((2, 0), Fraction(4)),
    ]


def test_primitive_vector():
    assert la.primitive_vector([-2, 4, -6]) == [1, -2, 3]
    assert la.primitive_vector([0, 0]) == [0, 0]
    assert la.primitive_vector([0, -5]) == [0, 1]
