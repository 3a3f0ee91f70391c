import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, signal, stats

from qmac.circuit import OPA, AddVacuum, BeamSplitter, Loss, MacScenario, mac_output_state, run_circuit, tmsv
from qmac.exceptions import PhysicalityError, ResourceError, ValidationError
from qmac.gaussian import GaussianState
from qmac.statistics import (
    DiffGaussianModel,
    JointCountDistribution,
    conditional_shannon_mi,
    count_model,
    joint_counts_from_state,
    joint_counts_gaussian,
    number_moments,
    total_counts_over_copies,
    two_mode_constants,
    wick_diff_model,
)


@st.composite
def two_mode_params(draw, max_n=0.5):
    n1 = draw(st.floats(0.0, max_n))
    n2 = draw(st.floats(0.0, max_n))
    frac = draw(st.floats(0.0, 1.0))
    # any |c|^2 <= n1 (n2 + 1) and n2 (n1 + 1) is reachable by PS correlations
    c2 = frac * min(n1 * (n2 + 1), n2 * (n1 + 1))
    return 2 * n1 + 1, 2 * n2 + 1, 2 * math.sqrt(c2)


@given(two_mode_params())
def test_recurrence_matches_series(params):
    e, s, c = params
    a = joint_counts_gaussian(e, s, c, tail=1e-9)
    b = joint_counts_gaussian(e, s, c, tail=1e-9, method="series")
    np.testing.assert_allclose(a.probs, b.probs, atol=1e-13)


@given(two_mode_params(max_n=3.0))
def test_distribution_normalised_with_exact_moments(params):
    e, s, c = params
    d = joint_counts_gaussian(e, s, c)
    assert d.total == pytest.approx(1.0, abs=1e-9)
    assert d.mass_deficit <= 1e-9
    n1, n2, cc = (e - 1) / 2, (s - 1) / 2, (c / 2) ** 2
    np.testing.assert_allclose(d.mean(), [n1, n2], atol=1e-7)
    cov = d.cov()
    assert cov[0, 0] == pytest.approx(n1 * (n1 + 1), abs=1e-6)
    assert cov[0, 1] == pytest.approx(cc, abs=1e-6)


def test_uncorrelated_is_product_of_geometrics():
    n1, n2 = 0.4, 1.3
    d = joint_counts_gaussian(2 * n1 + 1, 2 * n2 + 1, 0.0)
    i, j = np.indices(d.probs.shape)
    ref = n1**i / (1 + n1) ** (i + 1) * n2**j / (1 + n2) ** (j + 1)
    np.testing.assert_allclose(d.probs, ref, atol=1e-15)


def test_tmsv_counts_are_perfectly_correlated():
    n = 0.3
    d = joint_counts_from_state(tmsv(n), (0, 1))
    off = d.probs - np.diag(np.diag(d.probs))
    assert np.abs(off).max() < 1e-14
    k = np.arange(d.probs.shape[0])
    np.testing.assert_allclose(np.diag(d.probs), n**k / (1 + n) ** (k + 1), atol=1e-15)


@given(st.floats(0.01, 0.5), st.floats(1.0, 1.5), st.floats(0.0, 1.0))
def test_phase_sensitive_and_insensitive_agree_on_abs_c(n, gain, t):
    # the same |c| realised once through <a b> and once through <a b^dag>
    ps = run_circuit([OPA(gain, 0, 1)], GaussianState.thermal([n, n]))
    e, s, c = two_mode_constants(ps)
    pi_state = GaussianState(
        np.zeros(4),
        np.block([[e * np.eye(2), c * np.eye(2)], [c * np.eye(2), s * np.eye(2)]]),
    )
    d_ps = joint_counts_from_state(ps)
    d_pi = joint_counts_from_state(pi_state)
    np.testing.assert_allclose(d_ps.probs, d_pi.probs, atol=1e-14)


def test_parameter_validation():
    with pytest.raises(PhysicalityError):
        joint_counts_gaussian(0.5, 1.0, 0.0)
    with pytest.raises(ValidationError):
        joint_counts_gaussian(math.inf, 1.0, 0.0)
    with pytest.raises(PhysicalityError):
        joint_counts_gaussian(1.2, 1.2, 5.0)
    with pytest.raises(ValidationError):
        joint_counts_gaussian(1.2, 1.2, 0.1, method="magic")
    with pytest.raises(ResourceError):
        joint_counts_gaussian(2e5, 2e5, 0.0, tail=1e-12)
    with pytest.raises(ValidationError):
        two_mode_constants(GaussianState(np.array([1.0, 0, 0, 0]), np.eye(4)))


def test_mixed_correlations_rejected():
    st_ = run_circuit([OPA(1.2, 0, 1), AddVacuum(), BeamSplitter(0.5, 1, 2), OPA(1.1, 0, 2), BeamSplitter(0.5, 0, 1)], GaussianState.vacuum(2))
    with pytest.raises(ValidationError):
        two_mode_constants(st_, (0, 1))


def _small_dist():
    return joint_counts_gaussian(1.6, 1.4, 0.5, tail=1e-14)


def test_total_counts_single_copy_is_identity():
    d = _small_dist()
    assert total_counts_over_copies(d, 1) is d


@pytest.mark.parametrize("n_r", [2, 3, 5])
def test_total_counts_match_direct_convolution(n_r):
    d = _small_dist()
    ref = d.probs
    for _ in range(n_r - 1):
        ref = signal.convolve(ref, d.probs, method="direct")
    t = total_counts_over_copies(d, n_r)
    full = np.zeros((max(ref.shape[0], t.offset[0] + t.probs.shape[0]), max(ref.shape[1], t.offset[1] + t.probs.shape[1])))
    full[t.offset[0] : t.offset[0] + t.probs.shape[0], t.offset[1] : t.offset[1] + t.probs.shape[1]] = t.probs
    padded = np.zeros_like(full)
    padded[: ref.shape[0], : ref.shape[1]] = ref[: full.shape[0], : full.shape[1]]
    assert 0.5 * np.abs(full - padded / padded.sum()).sum() < 1e-10


@given(st.integers(10, 400))
def test_total_count_moments_scale(n_r):
    d = _small_dist()
    t = total_counts_over_copies(d, n_r)
    assert t.total == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(t.mean(), n_r * d.mean(), rtol=1e-8)
    np.testing.assert_allclose(t.cov(), n_r * d.cov(), rtol=1e-6, atol=1e-9)
    assert t.mass_deficit == pytest.approx(1 - (1 - d.mass_deficit) ** n_r, abs=1e-15)


def test_total_counts_validation():
    with pytest.raises(ValidationError):
        total_counts_over_copies(_small_dist(), 0)
    with pytest.raises(ResourceError):
        total_counts_over_copies(_small_dist(), 10_000_000, max_cells=1000)


def test_distribution_rejects_negative():
    with pytest.raises(ValidationError):
        JointCountDistribution(np.array([[0.5, -0.1]]))


def test_wick_moments_match_counts():
    state = run_circuit([OPA(1.1, 0, 1), Loss(0.6, 0.1, 0)], GaussianState.vacuum(2))
    mean, cov = number_moments(state)
    d = joint_counts_from_state(state)
    np.testing.assert_allclose(d.mean(), mean, atol=1e-9)
    np.testing.assert_allclose(d.cov(), cov, atol=1e-8)


def test_wick_diff_model_and_count_model():
    state = run_circuit([OPA(1.1, 0, 1), Loss(0.6, 0.1, 0)], GaussianState.vacuum(2))
    mean, cov = number_moments(state)
    diff = wick_diff_model(state, [(0, 1)], 7)
    assert diff.mean[0] == pytest.approx(mean[0] - mean[1])
    assert diff.cov[0, 0] == pytest.approx(cov[0, 0] + cov[1, 1] - 2 * cov[0, 1])
    assert diff.scaled_cov[0, 0] == pytest.approx(diff.cov[0, 0] / 7)
    cm = count_model(state, [1], 3)
    assert cm.mean[0] == pytest.approx(mean[1])
    with pytest.raises(ValidationError):
        wick_diff_model(state, [(0, 0)], 1)


def test_model_validation():
    with pytest.raises(PhysicalityError):
        DiffGaussianModel(np.zeros(2), np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(ValidationError):
        DiffGaussianModel(np.zeros(2), np.eye(3))
    with pytest.raises(ValidationError):
        DiffGaussianModel(np.zeros(1), np.eye(1), copies=0)


def _det_family(s):
    """Outcome reveals every bit: a point mass at the message itself."""
    fam = {}
    for bits in itertools.product((0, 1), repeat=s):
        p = np.zeros((2,) * s)
        p[bits] = 1.0
        fam[bits] = JointCountDistribution(p, (0,) * s, 0.0, bits)
    return fam


def test_mi_of_revealing_channel():
    fam = _det_family(2)
    assert conditional_shannon_mi(fam, [0]) == pytest.approx(1.0)
    assert conditional_shannon_mi(fam, [0, 1]) == pytest.approx(2.0)
    assert conditional_shannon_mi(fam, [0], priors=[0.1, 0.5]) == pytest.approx(
        -(0.1 * math.log2(0.1) + 0.9 * math.log2(0.9))
    )


def test_mi_of_identical_outcomes_is_zero():
    d = _small_dist()
    fam = {b: d for b in itertools.product((0, 1), repeat=2)}
    assert conditional_shannon_mi(fam, [0, 1]) == 0.0
    gm = DiffGaussianModel(np.zeros(1), np.eye(1))
    assert conditional_shannon_mi({(0,): gm, (1,): gm}, [0]) == 0.0


def _mixture_mi_quad(mu0, mu1, sd):
    def mix(y):
        return 0.5 * (stats.norm.pdf(y, mu0, sd) + stats.norm.pdf(y, mu1, sd))

    def integrand(y):
        p = mix(y)
        return -p * math.log2(p) if p > 0 else 0.0

    lo, hi = min(mu0, mu1) - 12 * sd, max(mu0, mu1) + 12 * sd
    h_mix = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    h_comp = 0.5 * math.log2(2 * math.pi * math.e * sd * sd)
    return h_mix - h_comp


@given(st.floats(0.0, 6.0), st.floats(0.2, 3.0))
def test_gaussian_mixture_mi_matches_quadrature(delta, sd):
    fam = {
        (0,): DiffGaussianModel(np.array([0.0]), np.array([[sd * sd]])),
        (1,): DiffGaussianModel(np.array([delta]), np.array([[sd * sd]])),
    }
    assert conditional_shannon_mi(fam, [0]) == pytest.approx(_mixture_mi_quad(0.0, delta, sd), abs=1e-7)


@given(st.floats(0.0, 0.3), st.floats(0.0, 0.3), st.floats(0.001, 0.2))
def test_mi_nonnegative_and_chain_rule(m1, m2, sd):
    # additive two-bit Gaussian channel
    fam = {
        b: DiffGaussianModel(np.array([m1 * b[0] + m2 * b[1], m1 * b[0] - m2 * b[1]]), sd * sd * np.eye(2))
        for b in itertools.product((0, 1), repeat=2)
    }
    i1 = conditional_shannon_mi(fam, [0])
    i2 = conditional_shannon_mi(fam, [1])
    i12 = conditional_shannon_mi(fam, [0, 1])
    assert min(i1, i2, i12) >= 0
    assert i12 <= 2.0 + 1e-9
    assert i12 >= max(i1, i2) - 1e-7


def test_mi_input_validation():
    fam = _det_family(2)
    with pytest.raises(ValidationError):
        conditional_shannon_mi({}, [0])
    with pytest.raises(ValidationError):
        conditional_shannon_mi({(0, 0): fam[(0, 0)]}, [0])
    with pytest.raises(ValidationError):
        conditional_shannon_mi(fam, [2])
    with pytest.raises(ValidationError):
        conditional_shannon_mi(fam, [0], priors=[1.5, 0.5])
    mixed = dict(fam)
    mixed[(1, 1)] = DiffGaussianModel(np.zeros(2), np.eye(2))
    with pytest.raises(ValidationError):
        conditional_shannon_mi(mixed, [0])


def test_receiver_front_end_counts_have_pure_correlation_type():
    scn = MacScenario((1.0,), 0.5, 0.1, (0.05,))
    state = run_circuit([OPA(1.05, 0, 1)], mac_output_state(scn))
    e, s, c = two_mode_constants(state, (0, 1))
    assert e > 1 and s > 1 and c > 0
