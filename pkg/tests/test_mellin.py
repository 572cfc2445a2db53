import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mellin_deconv.errors import (DomainError, ParamError, QuadratureError, SingularSampleError,
                                  StripError, TailError, UnknownCatalogTag)
from mellin_deconv.mellin import (MellinFunction, SampleSet, abs_observation_mellin,
                                  analytic_mellin, catalog_density, empirical_mellin,
                                  empirical_mellin_line, line_rule, mellin_inverse_regularized,
                                  multiplicative_convolution, smoothness_norm)
from mellin_deconv.quadrature import QuadratureConfig
from mellin_deconv.simulate import (derive_seed, observation_model, sample_observations,
                                    sample_times, time_distribution)

GAMMA2 = analytic_mellin("gamma_density", alpha=2)

sample_arrays = st.lists(st.floats(0.01, 100), min_size=1, max_size=30).map(np.array)
admissible = st.builds(complex, st.floats(0.55, 3), st.floats(-20, 20))


def mellin_by_quadrature(pdf, z):
    # int_0^inf x^(z-1) pdf(x) dx on the log axis
    f = lambda s, part: getattr(np.exp(z * s) * pdf(np.exp(s)), part)
    re = integrate.quad(f, -50, 50, args=("real",), limit=400)[0]
    im = integrate.quad(f, -50, 50, args=("imag",), limit=400)[0]
    return re + 1j * im


# -- empirical transform ---------------------------------------------------

def test_empirical_trivial_examples():
    assert empirical_mellin(SampleSet([1.0, 1.0, 1.0]), 1.7 + 2j) == pytest.approx(1.0)
    assert empirical_mellin(SampleSet([2.0, 8.0]), 2.0) == pytest.approx(5.0)
    assert empirical_mellin(SampleSet([0.3, 5.0, -2.0]), 1.0) == 1.0


def test_empirical_domain_errors():
    s = SampleSet([1.0, 2.0])
    with pytest.raises(DomainError):
        empirical_mellin(s, 0.5)
    with pytest.raises(SingularSampleError):
        empirical_mellin(SampleSet([0.0, 1.0]), 0.9)
    # zero samples contribute 0 once Re z > 1
    assert empirical_mellin(SampleSet([0.0, 2.0]), 2.0) == pytest.approx(1.0)


def test_sampleset_validation():
    with pytest.raises(ParamError):
        SampleSet([])
    with pytest.raises(ParamError):
        SampleSet([1.0, np.nan])


@settings(max_examples=100, deadline=None)
@given(sample_arrays, admissible)
def test_empirical_normalisation_and_symmetry(x, z):
    s = SampleSet(x)
    assert empirical_mellin(s, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert empirical_mellin(s, np.conj(z)) == pytest.approx(np.conj(empirical_mellin(s, z)),
                                                            rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(sample_arrays, admissible, st.floats(0.1, 10))
def test_empirical_scaling_covariance(x, z, c):
    lhs = empirical_mellin(SampleSet(c * x), z)
    rhs = c ** (z - 1) * empirical_mellin(SampleSet(x), z)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_line_fast_path_matches_direct():
    rng = np.random.default_rng(3)
    x = rng.gamma(2.0, size=700) * rng.standard_normal(700)
    v, _ = line_rule(6.0)
    fast = empirical_mellin_line(SampleSet(x), 0.6, 2.0, 6.0, chunk=256)
    direct = empirical_mellin(SampleSet(x), 0.6 + 2j * v)
    assert np.max(np.abs(fast - direct)) < 1e-13


def test_empirical_unbiased():
    # mean over 200 sample sets of |B_T|, T ~ Gamma(2), at z = 2 gamma - 1 = 0.6
    dist = time_distribution("gamma", alpha=2.0)
    model = observation_model("subordinated_bm")
    est = []
    for rep in range(200):
        t = sample_times(dist, 400, derive_seed(11, 400, rep, 0))
        x = sample_observations(t, model, derive_seed(11, 400, rep, 1))
        est.append(empirical_mellin(x, 0.6).real)
    target = abs_observation_mellin(GAMMA2)(0.6).real
    se = np.std(est, ddof=1) / math.sqrt(len(est))
    assert abs(np.mean(est) - target) < 3 * se


# -- catalog ----------------------------------------------------------------

def test_catalog_examples():
    assert GAMMA2(2.0) == pytest.approx(2.0, rel=1e-13)
    assert GAMMA2(1.5) == pytest.approx(1.32934038817913702, rel=1e-12)
    assert analytic_mellin("heavy_tail_q", q=2)(1.0) == pytest.approx(1.0, rel=1e-14)
    assert analytic_mellin("log_tail_q", nu=2)(1.0) == pytest.approx(1.0)


@pytest.mark.parametrize("name, params, z", [
    ("gamma_density", {"alpha": 2.0}, 1.5 + 0.7j),
    ("gamma_density", {"alpha": 0.7}, 0.8 - 1.1j),
    ("heavy_tail_q", {"q": 2.0}, 1.3 + 0.4j),
    ("heavy_tail_q", {"q": 3.5}, 2.1 - 2.0j),
    ("log_tail_q", {"nu": 2.0}, 1.4 + 1.5j),
    ("log_tail_q", {"nu": 3.0}, 0.6 + 0.2j),
])
def test_catalog_matches_density(name, params, z):
    m = analytic_mellin(name, **params)
    pdf = catalog_density(name, **params)
    assert m(z) == pytest.approx(mellin_by_quadrature(pdf, z), rel=1e-7)


def test_catalog_errors():
    with pytest.raises(UnknownCatalogTag):
        analytic_mellin("cauchy")
    with pytest.raises(ParamError):
        analytic_mellin("gamma_density", alpha=-1)
    with pytest.raises(ParamError):
        analytic_mellin("heavy_tail_q", q=1.5)
    with pytest.raises(ParamError):
        analytic_mellin("log_tail_q", nu=1.0)
    with pytest.raises(ParamError):
        MellinFunction(lambda z: z, 1.0, 1.0)


def test_abs_observation_mellin_by_quadrature():
    # |sqrt(T) N| with T ~ Gamma(2): compare against direct double integral
    m = abs_observation_mellin(GAMMA2)
    w = 1.4 + 0.5j
    # E|X|^(w-1) = E T^((w-1)/2) E|N|^(w-1)
    et = GAMMA2((w + 1) / 2)
    en = mellin_by_quadrature(lambda y: 2 * np.exp(-y * y / 2) / math.sqrt(2 * math.pi), w)
    assert m(w) == pytest.approx(et * en, rel=1e-8)


# -- inversion ----------------------------------------------------------------

def test_inversion_gamma_example():
    out = mellin_inverse_regularized(GAMMA2, 1.2, 40.0, [1.0])
    assert abs(out[0] - math.exp(-1)) < 1e-3


def test_inversion_zero_cutoff_and_linearity():
    x = np.array([0.5, 1.0, 3.0])
    assert np.all(mellin_inverse_regularized(GAMMA2, 1.2, 0.0, x) == 0)
    a = mellin_inverse_regularized(GAMMA2, 1.2, 15.0, x)
    b = mellin_inverse_regularized(GAMMA2.scaled(2.0), 1.2, 15.0, x)
    assert np.allclose(b, 2 * a, rtol=1e-14)


def test_inversion_errors():
    with pytest.raises(StripError):
        mellin_inverse_regularized(GAMMA2, -1.5, 10.0, [1.0])
    with pytest.raises(DomainError):
        mellin_inverse_regularized(GAMMA2, 1.2, 10.0, [0.0, 1.0])
    # a non-Hermitian transform leaves an imaginary residue
    skew = MellinFunction(lambda z: 1j * GAMMA2(z), -1.0, np.inf)
    with pytest.raises(QuadratureError):
        mellin_inverse_regularized(skew, 1.2, 10.0, [1.0])


def test_inversion_converges_with_cutoff():
    x = np.array([0.3, 0.7, 1.5, 2.0, 4.0])
    m = analytic_mellin("log_tail_q", nu=3)
    truth = catalog_density("log_tail_q", nu=3)(x)
    errs = np.array([np.abs(mellin_inverse_regularized(m, 1.0, c, x) - truth)
                     for c in (10, 20, 40, 80)])
    assert np.all(np.diff(errs, axis=0) < 0)
    # Gamma(2) reaches rounding level by cutoff 40
    truth = x * np.exp(-x)
    errs = [np.max(np.abs(mellin_inverse_regularized(GAMMA2, 1.2, c, x) - truth))
            for c in (10, 20, 40)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-14


# -- convolution ------------------------------------------------------------

def test_convolution_zero_kernel():
    f = catalog_density("gamma_density", alpha=2)
    for x in (0.1, 1.0, 7.0):
        assert multiplicative_convolution(f, lambda u: 0.0 * u, x) == 0.0


def test_convolution_gamma_gamma_oracle():
    f = catalog_density("gamma_density", alpha=2)
    # mpmath quadrature of int t e^-t (1/t) e^(-1/t) dt / t
    assert multiplicative_convolution(f, f, 1.0) == pytest.approx(0.227787745499066871, rel=1e-10)


def test_convolution_mellin_factorises():
    f = catalog_density("gamma_density", alpha=2)
    g = catalog_density("heavy_tail_q", q=2)
    cfg = QuadratureConfig(tol=1e-9)
    h = lambda s: math.exp(1.3 * s) * multiplicative_convolution(f, g, math.exp(s), cfg)
    lhs = integrate.quad(h, -40, 40, limit=200, epsabs=1e-10)[0]
    rhs = (GAMMA2(1.3) * analytic_mellin("heavy_tail_q", q=2)(1.3)).real
    assert lhs == pytest.approx(rhs, rel=1e-5)


def test_convolution_errors():
    f = catalog_density("gamma_density", alpha=2)
    with pytest.raises(DomainError):
        multiplicative_convolution(f, f, 0.0)
    # constant factors: the integrand does not vanish at the ends
    with pytest.raises(QuadratureError):
        multiplicative_convolution(np.ones_like, np.ones_like, 1.0)


# -- smoothness norms -------------------------------------------------------

def test_norm_examples():
    val = smoothness_norm(GAMMA2, 1.0, 1.2, "C")
    assert math.isfinite(val) and val > 0
    with pytest.raises(TailError):
        smoothness_norm(analytic_mellin("heavy_tail_q", q=2), 2.0, 1.0, "C")
    zero = MellinFunction(lambda z: 0 * np.asarray(z, complex), 0.0, 2.0)
    assert smoothness_norm(zero, 1.0, 1.0, "C") == 0.0


def test_norm_mode_d():
    m = analytic_mellin("log_tail_q", nu=4)
    assert smoothness_norm(m, 1.0, 1.0, "D", cutoff=400.0, tail_fraction=0.05) > 0
    with pytest.raises(TailError):
        smoothness_norm(analytic_mellin("log_tail_q", nu=2), 1.5, 1.0, "D")


def test_norm_errors():
    with pytest.raises(StripError):
        smoothness_norm(GAMMA2, 1.0, -2.0, "C")
    with pytest.raises(ParamError):
        smoothness_norm(GAMMA2, 1.0, 1.2, "E")
