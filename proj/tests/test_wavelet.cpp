#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "carsinfer/wavelet.hpp"

using namespace carsinfer;

namespace {

std::vector<double> random_signal(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> x(n);
    for (auto& v : x) v = nd(rng);
    return x;
}

} // namespace

TEST_CASE("symlet filters are orthonormal with unit DC gain") {
    for (int order : wavelets::symlet_orders()) {
        auto h = wavelets::symlet_scaling_filter(order);
        REQUIRE(h.size() == static_cast<std::size_t>(2 * order));
        double sum = 0.0, sumsq = 0.0;
        for (double v : h) {
            sum += v;
            sumsq += v * v;
        }
        REQUIRE(sum == Catch::Approx(std::numbers::sqrt2).margin(1e-10));
        REQUIRE(sumsq == Catch::Approx(1.0).margin(1e-10));
        // shift orthogonality
        for (std::size_t m = 1; m < h.size() / 2; ++m) {
            double dot = 0.0;
            for (std::size_t k = 0; k + 2 * m < h.size(); ++k) dot += h[k] * h[k + 2 * m];
            REQUIRE(dot == Catch::Approx(0.0).margin(1e-10));
        }
    }
    REQUIRE_THROWS_AS(wavelets::symlet_scaling_filter(11), std::invalid_argument);
}

TEST_CASE("vanishing moments kill polynomial details away from the wrap") {
    for (int order : {4, 8}) {
        const std::size_t n = 1024;
        for (int deg = 0; deg < order; ++deg) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k)
                x[k] = std::pow((double(k) - 512.0) / 256.0, deg);
            auto dec = dwt_multilevel(x, order, 1, BoundaryMode::periodic);
            const std::size_t L = 2 * static_cast<std::size_t>(order);
            double worst = 0.0;
            // interior coefficients: filter support clear of the boundary
            for (std::size_t i = L; i < dec.details[0].size() - L; ++i)
                worst = std::max(worst, std::abs(dec.details[0][i]));
            REQUIRE(worst < 1e-6);
        }
    }
}

TEST_CASE("constant signals have vanishing details") {
    auto dec = dwt_multilevel(std::vector<double>(256, 3.7), 8, 5, BoundaryMode::periodic);
    for (const auto& d : dec.details)
        for (double v : d) REQUIRE(std::abs(v) < 1e-12);
}

TEST_CASE("perfect reconstruction") {
    for (auto mode : {BoundaryMode::periodic, BoundaryMode::symmetric}) {
        for (std::size_t n : {256u, 300u}) { // non-pow2 exercises the padding
            const auto x = random_signal(n, 21 + n);
            auto dec = dwt_multilevel(x, 8, 4, mode);
            const auto back = idwt_multilevel(dec);
            REQUIRE(back.size() == n);
            double worst = 0.0;
            for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(back[k] - x[k]));
            REQUIRE(worst < 1e-10);
        }
    }
}

TEST_CASE("parseval under the periodic boundary") {
    const auto x = random_signal(1024, 99);
    for (int order : {8, 34}) {
        auto dec = dwt_multilevel(x, order, 6, BoundaryMode::periodic);
        double ex = 0.0;
        for (double v : x) ex += v * v;
        const double ec = dec.detail_energy() + dec.approx_energy();
        REQUIRE(ec == Catch::Approx(ex).epsilon(1e-8));
    }
}

TEST_CASE("detail reconstructions are additive and energy-faithful") {
    const auto x = random_signal(512, 7);
    auto dec = dwt_multilevel(x, 8, 5, BoundaryMode::periodic);
    const auto details = detail_reconstructions(dec);
    const auto approx = approximation_reconstruction(dec);
    REQUIRE(details.size() == 5);

    SECTION("approximation plus all details reproduces the signal") {
        for (std::size_t k = 0; k < x.size(); ++k) {
            double sum = approx[k];
            for (const auto& d : details) sum += d[k];
            REQUIRE(sum == Catch::Approx(x[k]).margin(1e-10));
        }
    }

    SECTION("each band reconstruction carries its coefficient energy") {
        for (std::size_t j = 0; j < details.size(); ++j) {
            double er = 0.0;
            for (double v : details[j]) er += v * v;
            double ecoef = 0.0;
            for (double v : dec.details[j]) ecoef += v * v;
            REQUIRE(er == Catch::Approx(ecoef).epsilon(1e-8));
        }
    }

    SECTION("zeroed details reconstruct to zero") {
        WaveletDecomposition z = dec;
        for (auto& d : z.details) d.assign(d.size(), 0.0);
        z.approx.assign(z.approx.size(), 0.0);
        for (const auto& band : detail_reconstructions(z))
            for (double v : band) REQUIRE(v == 0.0);
    }
}

TEST_CASE("energy concentration") {
    SECTION("constant signal concentrates in the approximation") {
        REQUIRE(energy_concentration(std::vector<double>(256, 1.0), 8) < 1e-12);
    }
    SECTION("all-zero signal is an error") {
        REQUIRE_THROWS_AS(energy_concentration(std::vector<double>(256, 0.0), 8),
                          std::invalid_argument);
    }
    SECTION("spike value reproduced by an independent decomposition") {
        std::vector<double> x(256, 0.0);
        x[100] = 1.0;
        const double got = energy_concentration(x, 8);
        auto dec = dwt_multilevel(x, 8, max_decomposition_levels(256), BoundaryMode::periodic);
        const double want = dec.detail_energy() / (dec.detail_energy() + dec.approx_energy());
        REQUIRE(got == Catch::Approx(want).margin(1e-8));
        REQUIRE(got > 0.9); // a spike is detail-dominated
    }
    SECTION("finest-scale atom concentrates fully in the details") {
        WaveletDecomposition dec;
        dec.order = 8;
        dec.mode = BoundaryMode::periodic;
        dec.original_length = 256;
        dec.transform_length = 256;
        dec.details.assign(1, std::vector<double>(128, 0.0));
        dec.details[0][40] = 1.0;
        dec.approx.assign(128, 0.0);
        const auto atom = idwt_multilevel(dec);
        REQUIRE(energy_concentration(atom, 8) == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("modulating error function") {
    WavenumberGrid grid(0.0, 1.0, 256);
    std::vector<double> logy(256);
    for (std::size_t k = 0; k < 256; ++k)
        logy[k] = 0.3 * std::sin(2.0 * std::numbers::pi * double(k) / 256.0) +
                  0.05 * std::sin(2.0 * std::numbers::pi * 17.0 * double(k) / 256.0);
    const std::size_t J = 6;
    ErrorFunctionEngine engine(grid, logy, 34, J);

    SECTION("reconstruction identity") {
        const auto& details = engine.details();
        const auto& approx = engine.approximation();
        for (std::size_t k = 0; k < 256; ++k) {
            double sum = approx[k];
            for (const auto& d : details) sum += d[k];
            REQUIRE(sum == Catch::Approx(logy[k]).margin(1e-10));
        }
    }

    SECTION("flat input gives eps == 1 for every p") {
        ErrorFunctionEngine flat(grid, std::vector<double>(256, 0.42), 34, J);
        for (double p : {1.0, 1.5, 3.25, double(J)})
            for (double v : flat.modulating_error(p)) REQUIRE(v == Catch::Approx(1.0).margin(1e-12));
    }

    SECTION("integer p equals suffix sums of detail reconstructions") {
        for (std::size_t p = 1; p <= J; ++p) {
            std::vector<double> want(256, 0.0);
            for (std::size_t j = p; j <= J; ++j)
                for (std::size_t k = 0; k < 256; ++k) want[k] += engine.details()[j - 1][k];
            std::vector<double> got;
            engine.log_modulating_error(double(p), got);
            for (std::size_t k = 0; k < 256; ++k)
                REQUIRE(got[k] == Catch::Approx(want[k]).margin(1e-12));
        }
    }

    SECTION("half-integer p is the exact mean of the neighbors in log space") {
        for (std::size_t p = 1; p < J; ++p) {
            std::vector<double> lo, hi, mid;
            engine.log_modulating_error(double(p), lo);
            engine.log_modulating_error(double(p + 1), hi);
            engine.log_modulating_error(double(p) + 0.5, mid);
            for (std::size_t k = 0; k < 256; ++k)
                REQUIRE(mid[k] == Catch::Approx(0.5 * (lo[k] + hi[k])).margin(1e-12));
        }
    }

    SECTION("continuity in p") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> unif(1.0, double(J));
        std::vector<double> a, b;
        for (int rep = 0; rep < 1000; ++rep) {
            const double p = std::min(unif(rng), double(J) - 2e-6);
            engine.log_modulating_error(p, a);
            engine.log_modulating_error(p + 1e-6, b);
            for (std::size_t k = 0; k < 256; k += 17)
                REQUIRE(std::abs(a[k] - b[k]) < 1e-4);
        }
    }

    SECTION("eps is positive everywhere") {
        for (double p : {1.0, 2.7, 4.2, 6.0})
            for (double v : engine.modulating_error(p)) REQUIRE(v > 0.0);
    }

    SECTION("p out of range throws") {
        std::vector<double> buf;
        REQUIRE_THROWS_AS(engine.log_modulating_error(0.5, buf), std::invalid_argument);
        REQUIRE_THROWS_AS(engine.log_modulating_error(double(J) + 0.1, buf), std::invalid_argument);
    }

    SECTION("the verbatim ceiling form agrees at integers and differs between them") {
        ErrorFunctionEngine ceil_engine(grid, logy, 34, J, ErrorInterpolation::ceil_based);
        std::vector<double> a, b;
        for (std::size_t p = 1; p <= J; ++p) {
            engine.log_modulating_error(double(p), a);
            ceil_engine.log_modulating_error(double(p), b);
            for (std::size_t k = 0; k < 256; ++k) REQUIRE(a[k] == Catch::Approx(b[k]).margin(1e-12));
        }
    }
}

TEST_CASE("dwt input validation") {
    REQUIRE_THROWS_AS(dwt_multilevel(std::vector<double>(8, 1.0), 8, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(dwt_multilevel(random_signal(64, 1), 8, 12), std::invalid_argument);
}
