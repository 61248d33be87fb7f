import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaact.errors import DimensionError, EmptyReductionError, GeometryError, NumericDomainError
from adaact.tensor import col2im, conv_geometry, elementwise, im2col, matmul, reduce_mean


def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(matmul(np.eye(2), a), a)
    np.testing.assert_array_equal(matmul(a, np.eye(2)), a)


def test_matmul_hand_value():
    out = matmul([[1, 2], [3, 4]], [[5], [6]])
    np.testing.assert_array_equal(out, [[17.0], [39.0]])


def test_matmul_shape_error_names_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.zeros((2, 3)), np.zeros((2, 3)))


@pytest.mark.parametrize("op,arg,x,expected", [
    ("sqrt", None, [4.0, 1.0, 0.25], [2.0, 1.0, 0.5]),
    ("pow", 1.0, [4.0, 9.0], [4.0, 9.0]),
    ("square", None, [-3.0, 2.0], [9.0, 4.0]),
    ("add", 1.5, [1.0, -1.0], [2.5, 0.5]),
    ("mul", -2.0, [1.0, 3.0], [-2.0, -6.0]),
    ("reciprocal", None, [2.0, 4.0], [0.5, 0.25]),
])
def test_elementwise(op, arg, x, expected):
    np.testing.assert_array_equal(elementwise(np.array(x), op, arg), expected)


def test_reciprocal_domain_error_reports_index():
    with pytest.raises(NumericDomainError) as info:
        elementwise(np.array([0.0, 1.0]), "reciprocal")
    assert info.value.index == (0,)


def test_sqrt_negative():
    with pytest.raises(NumericDomainError) as info:
        elementwise(np.array([[1.0, 2.0], [-1.0, 0.0]]), "sqrt")
    assert info.value.index == (1, 0)


def test_reduce_mean_both_axes():
    t = np.array([[1.0, 3.0], [3.0, 5.0]])
    np.testing.assert_array_equal(reduce_mean(t, "rows"), [2.0, 4.0])
    np.testing.assert_array_equal(reduce_mean(t, "cols"), [2.0, 4.0])


def test_reduce_mean_empty():
    with pytest.raises(EmptyReductionError):
        reduce_mean(np.zeros((0, 3)), "rows")


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_square_then_mean_matches_direct(m, n, seed):
    x = np.random.default_rng(seed).standard_normal((m, n))
    direct = np.array([sum(x[i, j] ** 2 for i in range(m)) / m for j in range(n)])
    got = reduce_mean(elementwise(x, "square"), "rows")
    np.testing.assert_allclose(got, direct, rtol=0, atol=1e-12)


def test_im2col_identity_unfolding():
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    np.testing.assert_array_equal(im2col(x, 1), [[1.0], [2.0], [3.0], [4.0]])


def test_im2col_3x3_kernel2():
    x = np.arange(1.0, 10.0).reshape(1, 1, 3, 3)
    cols = im2col(x, 2)
    assert cols.shape == (4, 4)
    np.testing.assert_array_equal(cols[0], [1, 2, 4, 5])
    np.testing.assert_array_equal(cols[3], [5, 6, 8, 9])


def test_im2col_single_patch():
    x = np.array([[[[11.0, 12.0], [21.0, 22.0]]]])
    np.testing.assert_array_equal(im2col(x, 2, stride=2), [[11, 12, 21, 22]])


def test_im2col_channel_major_and_padding():
    x = np.stack([np.ones((2, 2)), 2 * np.ones((2, 2))])[None]
    cols = im2col(x, 3, padding=1)
    # first location (0, 0): 3x3 window centred on the top-left pixel
    first = cols[0].reshape(2, 3, 3)
    np.testing.assert_array_equal(first[0], [[0, 0, 0], [0, 1, 1], [0, 1, 1]])
    np.testing.assert_array_equal(first[1], [[0, 0, 0], [0, 2, 2], [0, 2, 2]])


def test_im2col_rejects_non_integer_extent():
    with pytest.raises(GeometryError):
        im2col(np.zeros((1, 1, 4, 4)), 3, stride=2)


def test_col2im_inverts_1x1():
    x = np.random.default_rng(0).standard_normal((2, 3, 4, 5))
    g = conv_geometry(3, 4, 5, 1)
    np.testing.assert_array_equal(col2im(im2col(x, 1), g), x)


def test_col2im_counts_overlaps():
    g = conv_geometry(1, 3, 3, 2)
    counts = col2im(np.ones((4, 4)), g)[0, 0]
    np.testing.assert_array_equal(counts, [[1, 2, 1], [2, 4, 2], [1, 2, 1]])


def test_col2im_bad_shape():
    with pytest.raises(GeometryError):
        col2im(np.ones((5, 4)), conv_geometry(1, 3, 3, 2))


def test_adjoint_fixed_case():
    r = np.random.default_rng(1)
    x = r.standard_normal((1, 1, 4, 4))
    g = conv_geometry(1, 4, 4, 2)
    c = r.standard_normal((g.out_h * g.out_w, g.patch_size))
    lhs = float(np.sum(im2col(x, 2) * c))
    rhs = float(np.sum(x * col2im(c, g)))
    assert abs(lhs - rhs) < 1e-12


@given(
    b=st.integers(1, 2), c=st.integers(1, 3), h=st.integers(1, 7), w=st.integers(1, 7),
    k=st.integers(1, 3), s=st.integers(1, 3), p=st.integers(0, 2), seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=80, deadline=None)
def test_adjoint_property(b, c, h, w, k, s, p, seed):
    try:
        g = conv_geometry(c, h, w, k, s, p)
    except GeometryError:
        return
    r = np.random.default_rng(seed)
    x = r.standard_normal((b, c, h, w))
    cols = r.standard_normal((b * g.out_h * g.out_w, g.patch_size))
    lhs = float(np.sum(im2col(x, k, s, p) * cols))
    rhs = float(np.sum(x * col2im(cols, g)))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_deterministic_bit_identical():
    r = np.random.default_rng(3)
    a, b = r.standard_normal((7, 5)), r.standard_normal((5, 3))
    assert matmul(a, b).tobytes() == matmul(a.copy(), b.copy()).tobytes()
    x = r.standard_normal((2, 2, 5, 5))
    assert im2col(x, 3, 1, 1).tobytes() == im2col(x.copy(), 3, 1, 1).tobytes()
