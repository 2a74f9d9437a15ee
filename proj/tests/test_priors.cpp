#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "carsinfer/pipeline.hpp"
#include "carsinfer/priors.hpp"
#include "support/oracles.hpp"

using namespace carsinfer;

TEST_CASE("segmentation of a single Gaussian bump integrates its moments") {
    WavenumberGrid grid(0.0, 0.5, 512);
    const double center = 130.0, sg = 3.0;
    std::vector<double> x(512);
    for (std::size_t k = 0; k < 512; ++k)
        x[k] = oracles::gaussian_pdf(grid.wavenumber(k) - center, sg);
    const auto segs = segment_peaks(x, grid);
    REQUIRE(segs.size() == 1);
    REQUIRE(segs[0].area == Catch::Approx(1.0).epsilon(0.02));
    REQUIRE(std::abs(segs[0].mean - center) <= grid.step());
    REQUIRE(segs[0].variance == Catch::Approx(sg * sg).epsilon(0.10));
}

TEST_CASE("disjoint bumps split into segments with their own areas") {
    WavenumberGrid grid(0.0, 0.5, 512);
    std::vector<double> x(512, 0.0);
    for (std::size_t k = 0; k < 512; ++k) {
        x[k] += 2.0 * oracles::gaussian_pdf(grid.wavenumber(k) - 80.0, 2.0);
        x[k] += 0.7 * oracles::gaussian_pdf(grid.wavenumber(k) - 190.0, 3.0);
    }
    const auto segs = segment_peaks(x, grid);
    REQUIRE(segs.size() == 2);
    REQUIRE(segs[0].area == Catch::Approx(2.0).epsilon(0.02));
    REQUIRE(segs[1].area == Catch::Approx(0.7).epsilon(0.02));
}

TEST_CASE("a symmetric bump centers on its apex") {
    WavenumberGrid grid(0.0, 0.5, 256);
    const double center = grid.wavenumber(128); // on-sample apex
    std::vector<double> x(256);
    for (std::size_t k = 0; k < 256; ++k)
        x[k] = oracles::gaussian_pdf(grid.wavenumber(k) - center, 4.0);
    const auto segs = segment_peaks(x, grid);
    REQUIRE(segs.size() == 1);
    REQUIRE(std::abs(segs[0].mean - center) <= grid.step() / 2.0);
}

TEST_CASE("touching peaks split at the prominent valley") {
    WavenumberGrid grid(0.0, 0.5, 512);
    std::vector<double> x(512, 0.0);
    for (std::size_t k = 0; k < 512; ++k) {
        x[k] += oracles::gaussian_pdf(grid.wavenumber(k) - 100.0, 4.0);
        x[k] += oracles::gaussian_pdf(grid.wavenumber(k) - 130.0, 4.0);
    }
    const auto segs = segment_peaks(x, grid);
    REQUIRE(segs.size() == 2);
    REQUIRE(std::abs(segs[0].mean - 100.0) < 3.0);
    REQUIRE(std::abs(segs[1].mean - 130.0) < 3.0);
}

TEST_CASE("segment areas partition the clipped spectrum") {
    WavenumberGrid grid(0.0, 0.5, 512);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(0.0, 0.003);
    std::vector<double> x(512, 0.0);
    for (std::size_t k = 0; k < 512; ++k) {
        x[k] += oracles::gaussian_pdf(grid.wavenumber(k) - 90.0, 3.0);
        x[k] += 0.5 * oracles::gaussian_pdf(grid.wavenumber(k) - 170.0, 2.0);
        x[k] += nd(rng);
    }
    SegmentationConfig cfg;
    const auto segs = segment_peaks(x, grid, cfg);
    double total = 0.0;
    for (const auto& s : segs) total += s.area;

    // independent replication of the clip-and-clamp preprocessing
    double mx = 0.0;
    for (double v : x) mx = std::max(mx, v);
    double want = 0.0;
    for (double v : x) {
        if (std::abs(v) < cfg.clip_fraction * mx) v = 0.0;
        want += std::max(v, 0.0);
    }
    want *= grid.step();
    REQUIRE(total == Catch::Approx(want).margin(1e-9));
}

TEST_CASE("manual boundaries force a split") {
    WavenumberGrid grid(0.0, 0.5, 256);
    std::vector<double> x(256);
    for (std::size_t k = 0; k < 256; ++k)
        x[k] = oracles::gaussian_pdf(grid.wavenumber(k) - 64.0, 8.0);
    SegmentationConfig cfg;
    cfg.manual_boundaries = {64.0};
    const auto segs = segment_peaks(x, grid, cfg);
    REQUIRE(segs.size() == 2);
}

TEST_CASE("segmenting an all-negative spectrum fails") {
    WavenumberGrid grid(0.0, 0.5, 64);
    REQUIRE_THROWS_AS(segment_peaks(std::vector<double>(64, -1.0), grid), std::invalid_argument);
}

TEST_CASE("prior construction from segments and the selected width set") {
    std::vector<PeakSegment> segs{{10, 40, 4.0, 105.0, 9.0}, {60, 90, 1.5, 155.0, 4.0}};

    SECTION("geometric mean of the widths sets the log-gamma mean") {
        const auto spec = build_priors(segs, {2.0, 8.0}, 8);
        REQUIRE(spec.log_gamma.mean == Catch::Approx(std::log(4.0)).epsilon(1e-12));
        REQUIRE_FALSE(spec.width_fallback_used);
    }

    SECTION("degenerate width set falls back to the configured variance") {
        const auto spec = build_priors(segs, {3.0, 3.0, 3.0}, 8);
        REQUIRE(spec.width_fallback_used);
        REQUIRE(spec.log_gamma.variance == Catch::Approx(0.25));
        const auto single = build_priors(segs, {3.0}, 8);
        REQUIRE(single.width_fallback_used);
    }

    SECTION("amplitude prior is N(area, (area/4)^2)") {
        const auto spec = build_priors(segs, {2.0, 8.0}, 8);
        REQUIRE(spec.amplitude_means[0] == 4.0); // sd follows as mean/4 = 1
        REQUIRE(spec.amplitude_means[1] == 1.5);
    }

    SECTION("FWHM coupling between the two width priors is exact") {
        const auto spec = build_priors(segs, {2.0, 5.0, 11.0}, 8);
        const double fwhm_gauss = std::exp(spec.log_sigma.mean) * 2.0 * std::sqrt(2.0 * std::log(2.0));
        const double fwhm_lorentz = std::exp(spec.log_gamma.mean) * 2.0;
        REQUIRE(fwhm_gauss == Catch::Approx(fwhm_lorentz).epsilon(1e-12));
        REQUIRE(spec.log_sigma.variance == spec.log_gamma.variance);
    }

    SECTION("background prior covers [min, J]") {
        const auto spec = build_priors(segs, {2.0, 8.0}, 8);
        REQUIRE(spec.background_min == 1.0);
        REQUIRE(spec.background_max == 8.0);
    }
}

TEST_CASE("noise variance estimation from the smooth Raman model") {
    WavenumberGrid grid(0.0, 0.5, 1024);
    std::vector<VoigtLine> lines{{1.0, 150.0, 0.0, 4.0}, {0.8, 320.0, 0.0, 3.0}};
    const double aj = 0.6;
    auto smooth = raman_signal(grid, lines);

    // the engine built from the flat log-measurement keeps eps == 1
    auto make_measured = [&](double sd, unsigned seed) {
        auto hv = hilbert_transform(smooth);
        std::vector<double> f(grid.count());
        const double chinr = std::exp(0.5 * aj);
        for (std::size_t k = 0; k < grid.count(); ++k) {
            const double re = chinr - hv[k];
            f[k] = re * re + smooth[k] * smooth[k];
        }
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, sd);
        for (auto& v : f) v += sd > 0 ? nd(rng) : 0.0;
        return MeasuredSpectrum(grid, f, 1.0, aj);
    };
    ErrorFunctionEngine engine(grid, std::vector<double>(grid.count(), 0.0), 8, 6);

    SECTION("recovers the injected variance within 20 percent") {
        auto meas = make_measured(0.01, 5);
        const double est = estimate_noise_variance(meas, smooth, 3.0, engine);
        REQUIRE(est == Catch::Approx(1e-4).epsilon(0.20));
    }

    SECTION("exact data hits the configured floor") {
        auto meas = make_measured(0.0, 5);
        REQUIRE(estimate_noise_variance(meas, smooth, 3.0, engine) == 1e-12);
    }

    SECTION("doubling the noise sd quadruples the estimate") {
        const double v1 = estimate_noise_variance(make_measured(0.01, 6), smooth, 3.0, engine);
        const double v2 = estimate_noise_variance(make_measured(0.02, 6), smooth, 3.0, engine);
        REQUIRE(v2 / v1 == Catch::Approx(4.0).epsilon(0.25));
    }

    SECTION("too few usable channels is an error") {
        WavenumberGrid tiny(0.0, 0.5, 16);
        MeasuredSpectrum meas(tiny, std::vector<double>(16, 1.0), 1.0, aj);
        ErrorFunctionEngine eng(tiny, std::vector<double>(16, 0.0), 2, 2);
        REQUIRE_THROWS_AS(
            estimate_noise_variance(meas, std::vector<double>(16, 0.0), 1.5, eng, 16),
            std::invalid_argument);
    }
}

namespace {

PriorSpec demo_spec() {
    PriorSpec spec;
    spec.locations = {{100.0, 4.0}, {160.0, 9.0}};
    spec.amplitude_means = {2.0, 0.8};
    spec.log_gamma = {std::log(3.0), 0.09};
    spec.log_sigma = {std::log(3.0) - std::log(std::sqrt(2.0 * std::log(2.0))), 0.09};
    spec.background_min = 1.0;
    spec.background_max = 7.0;
    return spec;
}

} // namespace

TEST_CASE("prior draws satisfy the model invariants and match their moments") {
    const auto spec = demo_spec();
    std::mt19937_64 rng(31);
    const std::size_t n = 100000;
    double sum_nu0 = 0.0, sum_logg = 0.0, sum_a0 = 0.0, sum_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto params = sample_prior(spec, rng);
        params.validate();
        REQUIRE(params.lines.size() == 2);
        REQUIRE(params.lines_sorted());
        sum_nu0 += params.lines[0].location;
        sum_logg += std::log(params.lines[0].gamma);
        sum_a0 += params.lines[0].amplitude;
        sum_p += params.background_level;
    }
    const double inv = 1.0 / double(n);
    // 3 standard errors; the amplitude mean carries the truncation shift
    REQUIRE(sum_nu0 * inv == Catch::Approx(100.0).margin(3.0 * 2.0 / std::sqrt(double(n))));
    REQUIRE(sum_logg * inv == Catch::Approx(std::log(3.0)).margin(3.0 * 0.3 / std::sqrt(double(n))));
    const double mu = 2.0, sd = 0.5;
    const double z = mu / sd;
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double trunc_mean = mu + sd * phi / standard_normal_cdf(z);
    REQUIRE(sum_a0 * inv == Catch::Approx(trunc_mean).margin(3.0 * sd / std::sqrt(double(n))));
    REQUIRE(sum_p * inv == Catch::Approx(4.0).margin(3.0 * 6.0 / std::sqrt(12.0 * double(n))));
}

TEST_CASE("log prior density") {
    const auto spec = demo_spec();
    std::mt19937_64 rng(32);
    ModelParams params = sample_prior(spec, rng);

    SECTION("background outside the window has zero density") {
        ModelParams bad = params;
        bad.background_level = 0.5;
        REQUIRE(log_prior_density(spec, bad) == -std::numeric_limits<double>::infinity());
        bad.background_level = 7.5;
        REQUIRE(log_prior_density(spec, bad) == -std::numeric_limits<double>::infinity());
    }

    SECTION("marginals integrate to one against their closed forms") {
        const double base = log_prior_density(spec, params);
        // location: integrate the density ratio over a wide window
        auto integrate = [&](auto setter, double lo, double hi, std::size_t n) {
            double acc = 0.0;
            const double h = (hi - lo) / double(n);
            for (std::size_t i = 0; i <= n; ++i) {
                ModelParams probe = params;
                setter(probe, lo + double(i) * h);
                const double lp = log_prior_density(spec, probe);
                const double w = (i == 0 || i == n) ? 0.5 : 1.0;
                if (std::isfinite(lp)) acc += w * std::exp(lp - base) * h;
            }
            return acc;
        };
        // each ratio integral equals 1 / (marginal pdf at the base point)
        {
            const double integral = integrate(
                [](ModelParams& p, double v) { p.lines[0].location = v; }, 60.0, 140.0, 4000);
            const double pdf = std::exp(
                normal_log_pdf(params.lines[0].location, spec.locations[0].mean, spec.locations[0].variance));
            REQUIRE(integral * pdf == Catch::Approx(1.0).margin(1e-3));
        }
        {
            const double integral = integrate(
                [](ModelParams& p, double v) { p.lines[0].gamma = v; }, 1e-4, 30.0, 40000);
            const double g = params.lines[0].gamma;
            const double pdf =
                std::exp(normal_log_pdf(std::log(g), spec.log_gamma.mean, spec.log_gamma.variance)) / g;
            REQUIRE(integral * pdf == Catch::Approx(1.0).margin(1e-3));
        }
        {
            const double integral = integrate(
                [](ModelParams& p, double v) { p.lines[0].amplitude = v; }, 1e-6, 8.0, 40000);
            const double a = params.lines[0].amplitude;
            const double mu = spec.amplitude_means[0], sd = mu / 4.0;
            const double pdf = std::exp(normal_log_pdf(a, mu, sd * sd)) / standard_normal_cdf(mu / sd);
            REQUIRE(integral * pdf == Catch::Approx(1.0).margin(1e-3));
        }
        {
            const double integral = integrate(
                [](ModelParams& p, double v) { p.background_level = v; }, 1.0, 7.0, 4000);
            REQUIRE(integral * (1.0 / 6.0) == Catch::Approx(1.0).margin(1e-3));
        }
    }
}

TEST_CASE("raman bootstrap recovers the imaginary part for a synthetic spectrum") {
    // artefact-free spectrum with an identity modulating engine, so the test
    // isolates the phase-retrieval step itself
    WavenumberGrid grid(700.0, 0.5, 1024);
    std::vector<VoigtLine> lines{{1.0, 830.0, 1.0, 3.0}, {0.6, 950.0, 0.8, 2.0}};
    const double aj = 1.0;
    const auto s = cars_signal(grid, lines, aj);
    ErrorFunctionEngine engine(grid, std::vector<double>(grid.count(), 0.0), 34, 8);
    MeasuredSpectrum meas(grid, s, 1e-6, aj);
    const auto est = extract_raman_estimate(meas, 4.5, engine);
    const auto truth = raman_signal(grid, lines);
    for (const auto& l : lines) {
        const std::size_t i0 =
            static_cast<std::size_t>(std::llround((l.location - grid.start()) / grid.step()));
        REQUIRE(est[i0] == Catch::Approx(truth[i0]).epsilon(0.15));
    }
}
