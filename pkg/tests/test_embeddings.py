import math

import numpy as np
import pytest
from scipy.special import erf

from symbq.config import parse_measure_tag
from symbq.embeddings import (
    BoxLebesgue,
    GaussianIso,
    build_embedding_table,
    inverse_det_factor,
    kernel_mean_base,
    kernel_mean_rows,
    kernel_mean_transformed,
    prior_variance_base,
    prior_variance_transformed,
)
from symbq.embeddings import _phi
from symbq.errors import InvalidInputError
from symbq.groups import full_flip_group, identity_group, point_symmetry_group
from symbq.kernels import RbfParams
from symbq.quadrature import adaptive_quad, nested_quad_2d, tensor_gauss_legendre

UNIT = RbfParams(variance=1.0, lengthscale=1.0)


def gauss_pdf(t, mean, var):
    return np.exp(-((t - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


# ---------------------------------------------------------------- measures

def test_box_validation():
    with pytest.raises(InvalidInputError):
        BoxLebesgue(lower=(0.0,), upper=(0.0,))
    with pytest.raises(InvalidInputError):
        BoxLebesgue(lower=(0.0, 1.0), upper=(1.0,))
    m = BoxLebesgue(lower=(-3.0, -2.0), upper=(3.0, 2.0))
    assert m.volume == pytest.approx(24.0)
    assert m.contains(np.array([0.0, 0.0]))
    assert not m.contains(np.array([0.0, 5.0]))


def test_gaussian_validation():
    with pytest.raises(InvalidInputError):
        GaussianIso(mean=(0.0,), variance=0.0)
    m = GaussianIso(mean=(1.0, 1.0), variance=2.0)
    assert m.dim == 2
    assert m.contains(np.array([100.0, -100.0]))


def test_measure_tags_round_trip():
    box = BoxLebesgue(lower=(-3.0, -1.5), upper=(3.0, 2.5))
    assert parse_measure_tag(box.tag, 2) == box
    gauss = GaussianIso(mean=(1.0, 1.0), variance=1.0)
    assert parse_measure_tag(gauss.tag, 2) == gauss


def test_sampling_stays_in_support():
    rng = np.random.default_rng(0)
    box = BoxLebesgue(lower=(-1.0, 0.0), upper=(1.0, 2.0))
    X = box.sample(rng, 100)
    assert np.all(X >= box.lower_array) and np.all(X <= box.upper_array)


# ------------------------------------------------------------- kernel mean

def test_kernel_mean_box_closed_form_at_center():
    m = BoxLebesgue(lower=(-3.0,), upper=(3.0,))
    val = kernel_mean_base(m, UNIT, np.array([0.0]))
    expected = math.sqrt(math.pi / 2.0) * 2.0 * erf(3.0 / math.sqrt(2.0))
    assert val == pytest.approx(expected, rel=1e-14)
    oracle = adaptive_quad(lambda t: np.exp(-(t**2) / 2.0), -3.0, 3.0, rtol=1e-12)
    assert val == pytest.approx(oracle, rel=1e-10)


def test_kernel_mean_gaussian_point_mass_limit():
    m = GaussianIso(mean=(0.7,), variance=1e-12)
    val = kernel_mean_base(m, RbfParams(variance=2.0, lengthscale=1.0), np.array([0.7]))
    assert val == pytest.approx(2.0, rel=1e-9)


def test_kernel_mean_vanishes_with_box_width():
    p = RbfParams(variance=1.0, lengthscale=0.5)
    for w in (1e-3, 1e-6):
        m = BoxLebesgue(lower=(-w,), upper=(w,))
        assert kernel_mean_base(m, p, np.array([0.0])) == pytest.approx(2.0 * w, rel=1e-3)


def test_kernel_mean_monotone_in_box_width():
    p = RbfParams(variance=1.3, lengthscale=0.8)
    widths = [0.5, 1.0, 2.0, 4.0]
    vals = [kernel_mean_base(BoxLebesgue(lower=(-w,), upper=(w,)), p, np.array([0.3]))
            for w in widths]
    assert all(a < b for a, b in zip(vals, vals[1:]))


# ------------------------------------------------------------ prior variance

def test_phi_second_derivative_recovers_kernel_profile():
    # finite differences of the antiderivative must reproduce exp(-z^2/(2 l^2))
    ls = 0.9
    h = 1e-4
    for z in np.linspace(-4.0, 4.0, 20):
        second = (_phi(z + h, ls) - 2.0 * _phi(z, ls) + _phi(z - h, ls)) / h**2
        assert second == pytest.approx(math.exp(-(z**2) / (2.0 * ls**2)), abs=1e-6)


def test_prior_variance_positive():
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = RbfParams(variance=float(rng.uniform(0.1, 3.0)),
                      lengthscale=float(rng.uniform(0.2, 2.0)))
        lo = float(rng.uniform(-2, 0))
        hi = lo + float(rng.uniform(0.5, 3))
        assert prior_variance_base(BoxLebesgue(lower=(lo,), upper=(hi,)), p) > 0
        assert prior_variance_base(GaussianIso(mean=(0.5,), variance=1.2), p) > 0


def test_prior_variance_2d_box_vs_quadrature():
    m = BoxLebesgue(lower=(-3.0, -3.0), upper=(3.0, 3.0))
    val = prior_variance_base(m, UNIT)
    per_dim = nested_quad_2d(lambda s, t: np.exp(-((s - t) ** 2) / 2.0), (-3.0, 3.0),
                             (-3.0, 3.0), rtol=1e-9)
    assert val == pytest.approx(per_dim**2, rel=1e-6)


def test_prior_variance_2d_vs_tensor_gl_4d():
    # full 4-D cross-check that does not rely on per-dimension factorization
    m = BoxLebesgue(lower=(-1.5, -1.0), upper=(1.0, 2.0))
    p = RbfParams(variance=1.4, lengthscale=0.9)

    def f(P):
        s, t = P[:, :2], P[:, 2:]
        return p.variance * np.exp(-np.sum((s - t) ** 2, axis=1) / (2.0 * p.lengthscale**2))

    bounds = [(-1.5, 1.0), (-1.0, 2.0), (-1.5, 1.0), (-1.0, 2.0)]
    oracle = tensor_gauss_legendre(f, bounds, n=40)
    assert prior_variance_base(m, p) == pytest.approx(oracle, rel=1e-10)


def test_prior_variance_gaussian_vs_quadrature():
    m = GaussianIso(mean=(0.4,), variance=0.8)
    p = RbfParams(variance=1.2, lengthscale=0.7)

    def f(s, t):
        k = p.variance * np.exp(-((s - t) ** 2) / (2.0 * p.lengthscale**2))
        return k * gauss_pdf(s, 0.4, 0.8) * gauss_pdf(t, 0.4, 0.8)

    oracle = nested_quad_2d(f, (-9.0, 9.8), (-9.0, 9.8), rtol=1e-10)
    assert prior_variance_base(m, p) == pytest.approx(oracle, rel=1e-8)


# --------------------------------------------------------- transformed forms

def test_transformed_mean_identity_pair_is_base():
    m = BoxLebesgue(lower=(0.0, -1.0), upper=(1.0, 2.0))
    g = point_symmetry_group(2)
    x = np.array([0.3, 0.5])
    for i in range(g.size):
        assert kernel_mean_transformed(m, UNIT, g, i, i, x) == \
            pytest.approx(kernel_mean_base(m, UNIT, x), rel=1e-15)


def test_transformed_mean_is_base_at_flipped_point():
    m = BoxLebesgue(lower=(-3.0, -3.0), upper=(3.0, 3.0))
    g = full_flip_group(2)
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.uniform(-2, 2, size=2)
        for i in range(g.size):
            for j in range(g.size):
                c = np.asarray(g.elements[g.composition_index[i, j]], dtype=float)
                assert kernel_mean_transformed(m, UNIT, g, i, j, x) == \
                    pytest.approx(kernel_mean_base(m, UNIT, c * x), rel=1e-15)


def test_transformed_mean_asymmetric_box_oracle():
    m = BoxLebesgue(lower=(0.0,), upper=(1.0,))
    p = RbfParams(variance=1.0, lengthscale=0.7)
    g = point_symmetry_group(1)
    flip_i, flip_j = 0, 1  # composes to the flip
    val = kernel_mean_transformed(m, p, g, flip_i, flip_j, np.array([0.3]))
    oracle = adaptive_quad(lambda t: np.exp(-((-0.3 - t) ** 2) / (2.0 * 0.49)), 0.0, 1.0,
                           rtol=1e-12)
    assert val == pytest.approx(oracle, rel=1e-10)
    assert val != pytest.approx(kernel_mean_base(m, p, np.array([0.3])), rel=1e-3)


def test_transformed_variance_symmetric_box_equals_base():
    m = BoxLebesgue(lower=(-3.0, -3.0), upper=(3.0, 3.0))
    g = full_flip_group(2)
    base = prior_variance_base(m, UNIT)
    for i in range(g.size):
        for j in range(g.size):
            assert prior_variance_transformed(m, UNIT, g, i, j) == pytest.approx(base, rel=1e-13)


def test_transformed_variance_gaussian_shift():
    # flipped Gaussian mean enters through ||c*b - b||^2 = 4*d for the point flip at b=1
    m = GaussianIso(mean=(1.0, 1.0), variance=1.0)
    p = RbfParams(variance=1.0, lengthscale=1.0)
    g = point_symmetry_group(2)
    i, j = 0, 1
    denom = p.lengthscale**2 + 2.0 * m.variance
    expected = (p.lengthscale**2 / denom) * math.exp(-8.0 / (2.0 * denom))
    assert prior_variance_transformed(m, p, g, i, j) == pytest.approx(expected, rel=1e-13)

    def f(s, t):
        k = np.exp(-np.abs(-s - t) ** 2 / 2.0)
        return k * gauss_pdf(s, 1.0, 1.0) * gauss_pdf(t, 1.0, 1.0)

    oracle_1d_shift = nested_quad_2d(f, (-9.0, 11.0), (-9.0, 11.0), rtol=1e-10)
    val_1d = prior_variance_transformed(GaussianIso(mean=(1.0,), variance=1.0), p,
                                        point_symmetry_group(1), 0, 1)
    assert val_1d == pytest.approx(oracle_1d_shift, rel=1e-8)


def test_transformed_variance_asymmetric_box_oracle():
    m = BoxLebesgue(lower=(0.0,), upper=(1.0,))
    p = RbfParams(variance=1.0, lengthscale=0.7)
    g = point_symmetry_group(1)
    val = prior_variance_transformed(m, p, g, 0, 1)
    oracle = nested_quad_2d(lambda s, t: np.exp(-((-s - t) ** 2) / (2.0 * 0.49)),
                            (0.0, 1.0), (0.0, 1.0), rtol=1e-10)
    assert val == pytest.approx(oracle, rel=1e-8)


def test_inverse_det_factor_pinned_to_one():
    for group in (identity_group(2), point_symmetry_group(2), full_flip_group(3)):
        for i in range(group.size):
            for j in range(group.size):
                assert inverse_det_factor(group, i, j) == 1.0


def test_index_out_of_range():
    g = point_symmetry_group(1)
    m = BoxLebesgue(lower=(-1.0,), upper=(1.0,))
    with pytest.raises(InvalidInputError):
        kernel_mean_transformed(m, UNIT, g, 0, 5, np.array([0.0]))
    with pytest.raises(InvalidInputError):
        prior_variance_transformed(m, UNIT, g, -1, 0)


# ----------------------------------------------------------------- tables

def test_identity_table_is_base():
    m = BoxLebesgue(lower=(-2.0,), upper=(2.0,))
    table = build_embedding_table(m, UNIT, identity_group(1))
    assert table.qkq.shape == (1, 1)
    assert table.qkq[0, 0] == pytest.approx(prior_variance_base(m, UNIT), rel=1e-15)
    x = np.array([0.4])
    assert table.qk_pair(0, 0, x) == pytest.approx(kernel_mean_base(m, UNIT, x), rel=1e-15)


def test_symmetric_box_table_entries_all_equal():
    m = BoxLebesgue(lower=(-3.0, -3.0), upper=(3.0, 3.0))
    table = build_embedding_table(m, UNIT, point_symmetry_group(2))
    assert np.allclose(table.qkq, table.qkq[0, 0], rtol=1e-13)


def test_table_symmetry_over_random_configs():
    rng = np.random.default_rng(3)
    for trial in range(8):
        p = RbfParams(variance=float(rng.uniform(0.2, 2.0)),
                      lengthscale=float(rng.uniform(0.3, 1.5)))
        if trial % 2 == 0:
            lo = rng.uniform(-2, 0, size=2)
            hi = lo + rng.uniform(0.5, 3, size=2)
            m = BoxLebesgue(lower=tuple(lo), upper=tuple(hi))
        else:
            m = GaussianIso(mean=tuple(rng.normal(size=2)), variance=float(rng.uniform(0.4, 2)))
        table = build_embedding_table(m, p, full_flip_group(2))
        np.testing.assert_allclose(table.qkq, table.qkq.T, rtol=0, atol=1e-12 * abs(table.qkq).max())
        assert table.total_prior_variance >= 0.0


def test_equal_composed_elements_give_equal_entries():
    # entries of both tables depend on (i, j) only through elements[i]*elements[j]
    m = BoxLebesgue(lower=(0.0, -2.0), upper=(1.0, 1.0))
    p = RbfParams(variance=1.2, lengthscale=0.6)
    group = full_flip_group(2)
    table = build_embedding_table(m, p, group)
    comp = group.composition_index
    x = np.array([0.4, -0.7])
    for i in range(group.size):
        for j in range(group.size):
            for k in range(group.size):
                for l in range(group.size):
                    if comp[i, j] == comp[k, l]:
                        assert table.qkq[i, j] == pytest.approx(table.qkq[k, l], rel=1e-14)
                        assert table.qk_pair(i, j, x) == pytest.approx(
                            table.qk_pair(k, l, x), rel=1e-14)


def test_flip_summed_mean_matches_pair_sum():
    m = BoxLebesgue(lower=(0.0, -1.0), upper=(2.0, 1.0))
    p = RbfParams(variance=0.9, lengthscale=0.8)
    group = full_flip_group(2)
    table = build_embedding_table(m, p, group)
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, size=(3, 2))
    summed = table.flip_summed_mean(X)
    for n in range(3):
        brute = sum(table.qk_pair(i, j, X[n])
                    for i in range(group.size) for j in range(group.size))
        assert summed[n] == pytest.approx(brute, rel=1e-12)


def test_table_measure_dim_mismatch():
    with pytest.raises(InvalidInputError):
        build_embedding_table(BoxLebesgue(lower=(-1.0,), upper=(1.0,)), UNIT,
                              point_symmetry_group(2))


def test_kernel_mean_rows_batch_matches_scalar():
    m = GaussianIso(mean=(0.5, -0.5), variance=1.5)
    p = RbfParams(variance=1.1, lengthscale=0.9)
    rng = np.random.default_rng(5)
    X = rng.normal(size=(4, 2))
    rows = kernel_mean_rows(m, p, X)
    for n in range(4):
        assert rows[n] == pytest.approx(kernel_mean_base(m, p, X[n]), rel=1e-15)
