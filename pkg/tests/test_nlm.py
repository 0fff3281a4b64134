"""Filter engine: kernels, weights, oracle equivalence, estimators, pipelines."""

import numpy as np
import pytest

from rician_nlm import (
    DegenerateWeightsError,
    Domain,
    Image,
    MeasureKind,
    NlmParams,
    PipelineName,
    SimilarityMeasure,
    binomial_kernel,
    denoise,
    estimate_a1,
    estimate_a2,
    get_pipeline,
    nlm_filter,
    nlm_weights,
    patch_log_similarity,
    rician_mean,
    snl4,
    snl4_gauss_approx,
)
from rician_nlm.phantom import PhantomKind, PhantomSpec, add_rician_noise, generate_phantom

from naive_reference import naive_nlm_filter, naive_patch_log_similarity


def _measure(kind, sigma=None):
    return SimilarityMeasure(kind, sigma)


def _random_image(rng, shape, domain, lo=0.05, hi=6.0):
    return Image(rng.uniform(lo, hi, size=shape), domain)


ALL_KINDS = [
    (MeasureKind.GAUSS, Domain.MAGNITUDE_M, 1.0),
    (MeasureKind.SNL1_SUBTRACTIVE_NCCS, Domain.SQUARED_G, None),
    (MeasureKind.SNL2_RATIONAL_RICE, Domain.MAGNITUDE_M, 1.0),
    (MeasureKind.SNL3_CSM_NCCS, Domain.SQUARED_G, None),
    (MeasureKind.SNL4_CSM_RICE, Domain.MAGNITUDE_M, 1.0),
]


class TestBinomialKernel:
    def test_radius_two_exact_values(self):
        k = binomial_kernel(2)
        assert k.shape == (5, 5)
        assert k[2, 2] == (6.0 / 16.0) ** 2 == 0.140625
        assert k[0, 0] == (1.0 / 16.0) ** 2
        assert k[0, 0] == pytest.approx(0.00390625)

    def test_radius_zero(self):
        np.testing.assert_array_equal(binomial_kernel(0), [[1.0]])

    def test_normalization(self):
        for r in range(0, 6):
            assert abs(binomial_kernel(r).sum() - 1.0) <= 1e-15

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            binomial_kernel(-1)


class TestNlmParams:
    def test_defaults(self):
        p = NlmParams()
        assert p.patch_radius == 2 and p.search_radius == 5 and p.h == 0.4
        np.testing.assert_array_equal(p.beta, binomial_kernel(2))

    def test_beta_must_sum_to_one(self):
        bad = np.full((5, 5), 0.05)
        with pytest.raises(ValueError):
            NlmParams(beta=bad)

    def test_beta_must_be_symmetric(self):
        beta = binomial_kernel(2).copy()
        beta[0, 0] += 1e-3
        beta[4, 4] -= 1e-3
        with pytest.raises(ValueError):
            NlmParams(beta=beta)

    def test_h_positive(self):
        with pytest.raises(ValueError):
            NlmParams(h=0.0)


class TestPatchLogSimilarity:
    def test_constant_image_csm_is_zero(self):
        img = Image(np.full((9, 9), 3.0), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        assert patch_log_similarity(img, (4, 4), (2, 7), p) == 0.0

    def test_self_is_zero_for_csm(self):
        rng = np.random.default_rng(0)
        img = _random_image(rng, (9, 9), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        assert patch_log_similarity(img, (4, 4), (4, 4), p) == 0.0

    def test_matches_bruteforce_patch_walk(self):
        # 3x3 toy image: fully exercised mirror padding
        rng = np.random.default_rng(1)
        img = _random_image(rng, (3, 3), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        for s in [(0, 0), (1, 1), (2, 0)]:
            for t in [(0, 2), (1, 0), (2, 2)]:
                got = patch_log_similarity(img, s, t, p)
                want = naive_patch_log_similarity(img, s, t, p)
                assert got == want

    def test_domain_mismatch_rejected(self):
        img = Image(np.ones((5, 5)), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        with pytest.raises(ValueError):
            patch_log_similarity(img, (0, 0), (1, 1), p)

    def test_out_of_bounds_rejected(self):
        img = Image(np.ones((5, 5)), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        with pytest.raises(ValueError):
            patch_log_similarity(img, (0, 0), (5, 0), p)


class TestNlmWeights:
    def test_constant_image_uniform_weights(self):
        img = Image(np.full((12, 12), 2.0), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        wf = nlm_weights(img, (6, 6), p)
        assert len(wf.weights) == 11 * 11
        assert all(w == 1.0 for w in wf.weights.values())
        norm = wf.normalized()
        assert all(v == pytest.approx(1.0 / 121.0) for v in norm.values())

    def test_clipped_window_at_corner(self):
        img = Image(np.full((12, 12), 2.0), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        wf = nlm_weights(img, (0, 0), p)
        assert len(wf.weights) == 6 * 6

    def test_self_weight_is_one_for_csm(self):
        rng = np.random.default_rng(2)
        img = _random_image(rng, (12, 12), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        wf = nlm_weights(img, (5, 7), p)
        assert wf.weights[(5, 7)] == 1.0

    def test_normalized_sums_to_one(self):
        rng = np.random.default_rng(3)
        img = _random_image(rng, (12, 12), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL1_SUBTRACTIVE_NCCS))
        for s in [(0, 0), (3, 11), (6, 6)]:
            total = sum(nlm_weights(img, s, p).normalized().values())
            assert abs(total - 1.0) <= 1e-10

    def test_impulse_image_discounts_bright_target(self):
        data = np.full((11, 11), 10.0)
        data[5, 5] = 13.0  # bright impulse in a flat field
        img = Image(data, Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        wf = nlm_weights(img, (2, 2), p)
        # the impulse sits at the center of (5,5)'s patch but only at an
        # off-center offset of (5,4)'s, so it is discounted more strongly
        assert 0.0 < wf.weights[(5, 5)] < wf.weights[(5, 4)]

    def test_all_weights_nonnegative(self):
        rng = np.random.default_rng(4)
        img = _random_image(rng, (10, 10), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL2_RATIONAL_RICE, 1.0))
        wf = nlm_weights(img, (5, 5), p)
        assert all(w >= 0.0 for w in wf.weights.values())
        assert wf.normalizer > 0.0


class TestNlmFilter:
    def test_constant_image_fixed_point(self):
        img = Image(np.full((10, 10), 4.0), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        out = nlm_filter(img, p)
        np.testing.assert_array_equal(out.data, img.data)

    @pytest.mark.parametrize("kind,domain,sigma", ALL_KINDS, ids=lambda v: str(v))
    def test_matches_naive_reference_bitwise(self, kind, domain, sigma):
        rng = np.random.default_rng(hash(kind.name) % 2**32)
        img = _random_image(rng, (8, 8), domain)
        p = NlmParams(measure=_measure(kind, sigma))
        engine = nlm_filter(img, p)
        reference = naive_nlm_filter(img, p)
        np.testing.assert_array_equal(engine.data, reference.data)

    def test_output_in_window_hull(self):
        rng = np.random.default_rng(6)
        img = _random_image(rng, (16, 16), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        out = nlm_filter(img, p)
        rs = p.search_radius
        for i in range(16):
            for j in range(16):
                win = img.data[
                    max(0, i - rs) : i + rs + 1, max(0, j - rs) : j + rs + 1
                ]
                assert win.min() - 1e-12 <= out.data[i, j] <= win.max() + 1e-12

    def test_thread_count_invariance(self):
        rng = np.random.default_rng(7)
        img = _random_image(rng, (32, 24), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        single = nlm_filter(img, p, threads=1)
        for t in (4, 16):
            np.testing.assert_array_equal(single.data, nlm_filter(img, p, threads=t).data)

    def test_engine_weightfield_consistency(self):
        # assembling the filter output from per-pixel weight fields
        rng = np.random.default_rng(8)
        img = _random_image(rng, (9, 9), Domain.SQUARED_G)
        p = NlmParams(measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        out = nlm_filter(img, p)
        for s in [(0, 0), (4, 4), (8, 2)]:
            wf = nlm_weights(img, s, p)
            num = np.float64(0.0)
            den = np.float64(0.0)
            for (ti, tj), w in wf.weights.items():
                num = num + np.float64(w) * img.data[ti, tj]
                den = den + np.float64(w)
            assert out.data[s] == num / den

    def test_flat_weights_limit_large_h(self):
        # h -> inf: weights tend to uniform, output to the box average
        rng = np.random.default_rng(9)
        img = _random_image(rng, (16, 16), Domain.SQUARED_G, lo=0.0, hi=1.0)
        p = NlmParams(h=1e3, measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        out = nlm_filter(img, p)
        rs = p.search_radius
        box = np.empty_like(img.data)
        for i in range(16):
            for j in range(16):
                box[i, j] = img.data[
                    max(0, i - rs) : i + rs + 1, max(0, j - rs) : j + rs + 1
                ].mean()
        rng_span = img.data.max() - img.data.min()
        assert np.max(np.abs(out.data - box)) <= 1e-3 * rng_span

    def test_identity_limit_small_h(self):
        # h -> 0 with a CSM measure: the self pixel dominates (G values at a
        # realistic scale, where unequal patches have O(1) log-dissimilarity)
        rng = np.random.default_rng(10)
        img = _random_image(rng, (16, 16), Domain.SQUARED_G, lo=0.0, hi=20.0)
        p = NlmParams(h=1e-3, measure=_measure(MeasureKind.SNL3_CSM_NCCS))
        out = nlm_filter(img, p)
        rng_span = img.data.max() - img.data.min()
        assert np.max(np.abs(out.data - img.data)) <= 1e-3 * rng_span

    def test_gauss_approximates_snl4_weights_at_high_snr(self):
        # per-weight agreement within 2 percent relative on a high-SNR image
        rng = np.random.default_rng(11)
        img = Image(rng.uniform(10.0, 13.0, size=(12, 12)), Domain.MAGNITUDE_M)
        p4 = NlmParams(measure=_measure(MeasureKind.SNL4_CSM_RICE, 1.0))
        pg = NlmParams(measure=_measure(MeasureKind.GAUSS, 1.0))
        for s in [(6, 6), (0, 0), (11, 3)]:
            w4 = nlm_weights(img, s, p4).weights
            wg = nlm_weights(img, s, pg).weights
            for t, w in w4.items():
                assert wg[t] == pytest.approx(w, rel=0.02)

    def test_degenerate_weights_for_snl2_on_zero_image(self):
        img = Image(np.zeros((8, 8)), Domain.MAGNITUDE_M)
        p = NlmParams(measure=_measure(MeasureKind.SNL2_RATIONAL_RICE, 1.0))
        with pytest.raises(DegenerateWeightsError):
            nlm_filter(img, p)

    def test_measure_required(self):
        img = Image(np.ones((8, 8)), Domain.MAGNITUDE_M)
        with pytest.raises(ValueError):
            nlm_filter(img, NlmParams())


class TestEstimators:
    def test_a1_clamp_boundary(self):
        assert estimate_a1(2.0, 1.0) == 0.0
        assert estimate_a1(1.5, 1.0) == 0.0

    def test_a1_arithmetic(self):
        assert estimate_a1(6.0, 2.0) == 4.0

    def test_a2_values(self):
        assert estimate_a2(0.0, 1.0) == 0.0
        assert estimate_a2(np.sqrt(2.0), 1.0) == 0.0
        assert estimate_a2(3.0, 1.0) == pytest.approx(np.sqrt(7.0), rel=1e-15)

    def test_monotone_nondecreasing(self):
        g = np.linspace(0.0, 30.0, 400)
        v1 = estimate_a1(g, 1.3)
        assert np.all(np.diff(v1) >= 0.0) and np.all(v1 >= 0.0)
        m = np.linspace(0.0, 30.0, 400)
        v2 = estimate_a2(m, 1.3)
        assert np.all(np.diff(v2) >= 0.0) and np.all(v2 >= 0.0)


class TestDenoisePipelines:
    def test_pipeline_bindings(self):
        from rician_nlm import Estimator

        nlms = get_pipeline("nlms")
        assert nlms.measure_kind is MeasureKind.SNL3_CSM_NCCS
        assert nlms.input_domain is Domain.SQUARED_G
        assert nlms.estimator is Estimator.A1_SQUARED_DOMAIN
        nlmr = get_pipeline(PipelineName.NLMR)
        assert nlmr.measure_kind is MeasureKind.SNL4_CSM_RICE
        assert nlmr.estimator is Estimator.A2_MAGNITUDE_DOMAIN
        gnlm = get_pipeline("gnlm")
        assert gnlm.measure_kind is MeasureKind.GAUSS
        assert gnlm.input_domain is Domain.MAGNITUDE_M

    def test_zero_image_maps_to_zero(self):
        img = Image(np.zeros((12, 12)), Domain.MAGNITUDE_M)
        for method in ["nlms", "nlmr", "gnlm"]:
            out = denoise(img, method, sigma=1.0)
            assert out.domain is Domain.AMPLITUDE_A
            np.testing.assert_array_equal(out.data, 0.0)

    def test_flat_phantom_recovery(self):
        # noisy flat field at high SNR: estimates stay near the true level
        spec = PhantomSpec(PhantomKind.FLAT, 24, intensity_max=100.0)
        truth = generate_phantom(spec)
        c = 100.0
        means = []
        for seed in range(3):
            noisy, sigma = add_rician_noise(truth, 0.05, seed=seed)
            out = denoise(noisy, "nlmr", sigma)
            assert np.all(out.data >= c - 3.0 * sigma)
            assert np.all(out.data <= c + 3.0 * sigma)
            means.append(out.data.mean())
        assert abs(np.mean(means) - c) < 0.5 * 5.0  # sigma = 5

    def test_requires_magnitude_domain(self):
        img = Image(np.ones((8, 8)), Domain.AMPLITUDE_A)
        with pytest.raises(ValueError):
            denoise(img, "nlmr", 1.0)

    def test_output_nonnegative(self):
        rng = np.random.default_rng(12)
        img = Image(rng.uniform(0.0, 3.0, (10, 10)), Domain.MAGNITUDE_M)
        for method in ["nlms", "nlmr", "gnlm"]:
            out = denoise(img, method, sigma=1.0)
            assert np.all(out.data >= 0.0)

    def test_deterministic_across_threads(self):
        rng = np.random.default_rng(13)
        img = Image(rng.uniform(0.0, 30.0, (20, 20)), Domain.MAGNITUDE_M)
        base = denoise(img, "nlms", sigma=2.0, threads=1)
        np.testing.assert_array_equal(
            base.data, denoise(img, "nlms", sigma=2.0, threads=4).data
        )


class TestGnlmCalibration:
    def test_gauss_measure_matches_snl4_values_at_high_snr(self):
        # the sigma-calibrated Gaussian equals the snl4 limit formula
        m = SimilarityMeasure(MeasureKind.GAUSS, 2.0)
        assert m.value(25.0, 27.0) == snl4_gauss_approx(25.0, 27.0, 2.0)
        assert abs(float(m.value(25.0, 27.0)) - float(snl4(25.0, 27.0, 2.0))) < 0.01

    def test_flat_region_mean_near_rician_mean(self):
        # sanity: averaging a flat noisy field approaches the Rician mean
        spec = PhantomSpec(PhantomKind.FLAT, 16, intensity_max=100.0)
        truth = generate_phantom(spec)
        noisy, sigma = add_rician_noise(truth, 0.1, seed=3)
        p = NlmParams(measure=_measure(MeasureKind.GAUSS, sigma))
        out = nlm_filter(noisy, p)
        assert out.data.mean() == pytest.approx(rician_mean(100.0, sigma), rel=0.02)
