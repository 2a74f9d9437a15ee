#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "carsinfer/fft.hpp"
#include "support/oracles.hpp"

using namespace carsinfer;

TEST_CASE("forward transform matches the naive DFT") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (std::size_t n : {8u, 64u, 256u}) {
        std::vector<fft::cdouble> x(n);
        for (auto& v : x) v = {nd(rng), nd(rng)};
        const auto got = fft::forward(x);
        const auto want = oracles::naive_dft(x);
        for (std::size_t j = 0; j < n; ++j)
            REQUIRE(std::abs(got[j] - want[j]) < 1e-9 * std::sqrt(double(n)));
    }
}

TEST_CASE("inverse undoes forward") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    std::vector<fft::cdouble> x(512);
    for (auto& v : x) v = {nd(rng), nd(rng)};
    const auto back = fft::inverse(fft::forward(x));
    for (std::size_t j = 0; j < x.size(); ++j) REQUIRE(std::abs(back[j] - x[j]) < 1e-12);
}

TEST_CASE("rfft agrees with the complex transform of real input") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> nd;
    std::vector<double> x(256);
    for (auto& v : x) v = nd(rng);
    std::vector<fft::cdouble> xc(x.begin(), x.end());
    const auto full = fft::forward(xc);
    const auto half = fft::rfft(x);
    REQUIRE(half.size() == 129);
    for (std::size_t j = 0; j <= 128; ++j) REQUIRE(std::abs(half[j] - full[j]) < 1e-10);
}

TEST_CASE("irfft undoes rfft") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> nd;
    std::vector<double> x(1024);
    for (auto& v : x) v = nd(rng);
    const auto back = fft::irfft(fft::rfft(x), x.size());
    for (std::size_t j = 0; j < x.size(); ++j) REQUIRE(back[j] == Catch::Approx(x[j]).margin(1e-12));
}

TEST_CASE("non-power-of-two lengths are rejected") {
    std::vector<fft::cdouble> x(12);
    REQUIRE_THROWS_AS(fft::transform(x, false), std::invalid_argument);
}
