#pragma once

// Independent reference computations used by the test suites. Everything in
// here deliberately avoids the library's evaluation paths: convolutions are
// direct quadrature or O(n^2) sums, transforms are naive DFTs.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracles {

inline double gaussian_pdf(double x, double sigma) {
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double lorentzian_pdf(double x, double gamma) {
    return gamma / (std::numbers::pi * (x * x + gamma * gamma));
}

/// Voigt value by Simpson quadrature of the defining convolution integral.
/// Integrates the Gaussian factor over +-40 of its width at the given step.
inline double voigt_by_quadrature(double x, double sigma, double gamma, double step = 5e-4) {
    const double halfwidth = 40.0 * sigma;
    const std::size_t n0 = static_cast<std::size_t>(std::ceil(2.0 * halfwidth / step));
    const std::size_t n = n0 + (n0 % 2); // Simpson needs an even interval count
    const double h = 2.0 * halfwidth / static_cast<double>(n);
    auto f = [&](double u) { return gaussian_pdf(u, sigma) * lorentzian_pdf(x - u, gamma); };
    double acc = f(-halfwidth) + f(halfwidth);
    for (std::size_t i = 1; i < n; ++i) {
        const double u = -halfwidth + static_cast<double>(i) * h;
        acc += f(u) * ((i % 2) ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

/// Analytic Hilbert conjugate of a unit-area Lorentzian (H{cos} = sin sign).
inline double lorentzian_conjugate(double x, double gamma) {
    return x / (std::numbers::pi * (x * x + gamma * gamma));
}

/// Resonant susceptibility of one Lorentzian line under the same convention:
/// i a L - H{a L} = -(a/pi) / ((nu - nu0) + i gamma).
inline std::complex<double> lorentzian_susceptibility(double x, double amplitude, double gamma) {
    return -(amplitude / std::numbers::pi) / std::complex<double>(x, gamma);
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::complex<double> acc(0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(j) *
                               static_cast<double>(k) / static_cast<double>(n);
            acc += x[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[j] = acc;
    }
    return out;
}

/// Direct O(K^2) sampled-kernel Lorentzian convolution (matches the model's
/// definition of the reconvolution operator).
inline std::vector<double> direct_lorentz_convolve(const std::vector<double>& u, double step,
                                                   double gamma) {
    const std::size_t n = u.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = (static_cast<double>(k) - static_cast<double>(i)) * step;
            acc += u[i] * lorentzian_pdf(x, gamma);
        }
        out[k] = acc * step;
    }
    return out;
}

inline double naive_gaussian_loglike(const std::vector<double>& y, const std::vector<double>& f,
                                     double variance) {
    double ll = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double r = y[k] - f[k];
        ll += -0.5 * std::log(2.0 * std::numbers::pi * variance) - r * r / (2.0 * variance);
    }
    return ll;
}

} // namespace oracles
