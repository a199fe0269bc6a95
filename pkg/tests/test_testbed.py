import math

import numpy as np
import pytest
from scipy.special import j1

from symbq.embeddings import BoxLebesgue, GaussianIso
from symbq.errors import InvalidInputError
from symbq.groups import apply_sign
from symbq.testbed import (
    FUNCTIONS,
    TestFunctionDescriptor,
    airy_psf,
    circular_gaussian,
    get_function,
    hennig1d,
    hennig2d,
    make_integrand,
    reference_integral,
    sombrero2d,
)

# Frozen 10-digit references on the default [-3, 3]^d box, produced by
# reference_integral at rtol=1e-11 and stable at 1e-10 across tolerances.
FROZEN_REFERENCES = {
    "hennig1d": 1.143328777718,
    "hennig2d": 3.525721820078,
    "circular_gaussian": 22.139515429174,
    "sombrero2d": 0.852250264274,
    "airy_psf": 1.852377948588,
}


def test_hennig1d_values():
    assert hennig1d(0.0) == pytest.approx(1.0)
    xs = np.linspace(-3, 3, 17)
    np.testing.assert_allclose(hennig1d(xs), hennig1d(-xs), rtol=1e-15)


def test_hennig2d_values():
    assert hennig2d(np.array([0.0, 0.0])) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    X = rng.uniform(-3, 3, size=(50, 2))
    np.testing.assert_allclose(hennig2d(X), hennig2d(-X), rtol=1e-14)


def test_hennig2d_single_axis_flip_is_not_an_invariance():
    rng = np.random.default_rng(1)
    X = rng.uniform(-3, 3, size=(200, 2))
    flipped = X.copy()
    flipped[:, 0] *= -1
    diffs = np.abs(hennig2d(X) - hennig2d(flipped))
    assert diffs.max() > 0.1
    assert get_function("hennig2d").generators == ((-1, -1),)


def test_circular_gaussian_values():
    assert circular_gaussian(np.array([0.0, 0.0])) == pytest.approx(0.0)
    rng = np.random.default_rng(2)
    X = rng.uniform(-3, 3, size=(20, 2))
    for g in ((-1, 1), (1, -1), (-1, -1)):
        np.testing.assert_allclose(circular_gaussian(X),
                                   circular_gaussian(X * np.asarray(g, dtype=float)),
                                   rtol=1e-14)
    assert get_function("circular_gaussian").declared_group.size == 4
    with pytest.raises(InvalidInputError):
        circular_gaussian(np.array([1.0, 1.0]), sigma=0.0)


def test_sombrero_values():
    assert sombrero2d(np.array([0.0, 0.0])) == pytest.approx(1.0)
    c = FUNCTIONS["sombrero2d"].parameters["c"]
    on_ring = np.array([1.0 / c, 0.0])
    assert sombrero2d(on_ring, c=c) == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(3)
    X = rng.uniform(-3, 3, size=(20, 2))
    np.testing.assert_allclose(sombrero2d(X), sombrero2d(np.abs(X)), rtol=1e-14)


def test_airy_center_and_dark_ring():
    assert airy_psf(np.array([0.0, 0.0])) == pytest.approx(1.0)
    # first positive root of J1, found by bisection on the implementation
    lo, hi = 3.0, 4.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if j1(lo) * j1(mid) <= 0:
            hi = mid
        else:
            lo = mid
    root = 0.5 * (lo + hi)
    assert root == pytest.approx(3.8317059702, abs=1e-9)
    scale = FUNCTIONS["airy_psf"].parameters["scale"]
    r = root / scale
    assert airy_psf(np.array([r, 0.0]), scale=scale) < 1e-8


def test_airy_j1_accuracy_contract():
    # spot-check the Bessel implementation against mpmath on [0, 50]
    mpmath = pytest.importorskip("mpmath")
    vs = np.linspace(0.1, 50.0, 23)
    for v in vs:
        exact = float(mpmath.besselj(1, float(v)))
        assert j1(v) == pytest.approx(exact, rel=1e-8, abs=1e-14)


def test_declared_invariances_hold():
    rng = np.random.default_rng(4)
    for descriptor in FUNCTIONS.values():
        X = rng.uniform(-3, 3, size=(1000, descriptor.dim))
        fx = descriptor.batch_fn(X)
        for g in descriptor.generators:
            fgx = descriptor.batch_fn(apply_sign(g, X))
            assert np.all(np.abs(fx - fgx) <= 1e-12 * (1.0 + np.abs(fx)))


def test_reference_integrals_match_frozen_constants():
    for name, frozen in FROZEN_REFERENCES.items():
        descriptor = get_function(name)
        value = reference_integral(descriptor, descriptor.default_domain, rtol=1e-10)
        assert value == pytest.approx(frozen, abs=5e-10 * abs(frozen))


def test_reference_constant_function_is_volume():
    const = TestFunctionDescriptor(
        name="one", dim=2, generators=(), parameters={},
        default_domain=BoxLebesgue(lower=(-3.0, -3.0), upper=(3.0, 3.0)),
        fn=lambda x: 1.0, batch_fn=lambda X: np.ones(np.atleast_2d(X).shape[0]))
    assert reference_integral(const, const.default_domain) == pytest.approx(36.0, abs=1e-10)


def test_reference_odd_function_is_zero():
    odd = TestFunctionDescriptor(
        name="odd", dim=1, generators=(), parameters={},
        default_domain=BoxLebesgue(lower=(-3.0,), upper=(3.0,)),
        fn=lambda x: float(x[0]), batch_fn=lambda X: np.atleast_2d(X)[:, 0])
    assert abs(reference_integral(odd, odd.default_domain)) < 1e-12


def test_reference_consistent_with_uniform_expectation():
    from symbq.engine import mc_estimate
    descriptor = get_function("hennig1d")
    box = descriptor.default_domain
    ref = reference_integral(descriptor, box)
    est, se = mc_estimate(make_integrand(descriptor), box, n=200_000, seed=11)
    assert ref == pytest.approx(est, abs=5 * se)


def test_reference_under_gaussian_measure():
    # E[f] under N(0, 1) for f(x) = x^2 is exactly 1
    sq = TestFunctionDescriptor(
        name="sq", dim=1, generators=(), parameters={},
        default_domain=BoxLebesgue(lower=(-1.0,), upper=(1.0,)),
        fn=lambda x: float(x[0] ** 2), batch_fn=lambda X: np.atleast_2d(X)[:, 0] ** 2)
    value = reference_integral(sq, GaussianIso(mean=(0.0,), variance=1.0), rtol=1e-11)
    assert value == pytest.approx(1.0, rel=1e-10)


def test_reference_rejects_high_dimensions():
    fake = TestFunctionDescriptor(
        name="threed", dim=3, generators=(), parameters={},
        default_domain=BoxLebesgue(lower=(-1.0,) * 3, upper=(1.0,) * 3),
        fn=lambda x: 1.0, batch_fn=lambda X: np.ones(np.atleast_2d(X).shape[0]))
    with pytest.raises(InvalidInputError):
        reference_integral(fake, fake.default_domain)


def test_unknown_function_name():
    with pytest.raises(InvalidInputError):
        get_function("nope")


def test_make_integrand_scalar_and_batch_agree():
    descriptor = get_function("hennig2d")
    f = make_integrand(descriptor)
    rng = np.random.default_rng(5)
    X = rng.uniform(-2, 2, size=(5, 2))
    batch = f.batch(X)
    for i in range(5):
        assert f.evaluate(X[i]) == pytest.approx(batch[i], rel=1e-15)
