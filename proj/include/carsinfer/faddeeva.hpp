#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace carsinfer {

namespace detail {

// Weideman rational approximation, N = 40 (SIAM J. Numer. Anal. 31, 1994).
// Coefficients are the cosine-series weights for L = sqrt(N/sqrt(2));
// c[0] multiplies Z^(N-1).
inline constexpr double kWeidemanL = 5.3182958969449885;
inline constexpr std::array<double, 40> kWeidemanCoeff = {
    -1.7356980998791865e-15, 1.201674910759281e-15,  1.1519170220749485e-14,
    -5.231716366324404e-15,  -7.071088022159408e-14, 1.3778224047664046e-14,
    4.5341448909434655e-13,  1.203330952919568e-13,  -2.90771851041427e-12,
    -2.7277735625830245e-12, 1.771418567386718e-11,  3.4727420938907015e-11,
    -9.055138860958323e-11,  -3.5632350403602684e-10, 2.1085990731251058e-10,
    3.017780425551564e-09,   3.249746582945079e-09,  -1.8315616834296834e-08,
    -6.351773483015411e-08,  1.419864237295343e-08,  5.912136953029057e-07,
    1.4835661133172014e-06,  -1.066013898416273e-06, -1.8007447144723407e-05,
    -5.5913092642348794e-05, -3.939363145483805e-05, 4.39807015986967e-04,
    2.705405633073729e-03,   1.0048186242783535e-02, 2.920291647124188e-02,
    7.182361779074328e-02,   1.5504263802479504e-01, 2.998943799615006e-01,
    5.266528988277086e-01,   8.472174576593815e-01,  1.2563815675765133e+00,
    1.7253830848179779e+00,  2.201513794878312e+00,  2.6160541527618597e+00,
    2.899624509389705e+00,
};

inline std::complex<double> faddeeva_weideman(std::complex<double> z) {
    const double L = kWeidemanL;
    const std::complex<double> iz(-z.imag(), z.real());
    const std::complex<double> lmiz = L - iz;
    const std::complex<double> Z = (L + iz) / lmiz;
    std::complex<double> p(kWeidemanCoeff[0], 0.0);
    for (std::size_t k = 1; k < kWeidemanCoeff.size(); ++k) p = p * Z + kWeidemanCoeff[k];
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    return 2.0 * p / (lmiz * lmiz) + inv_sqrt_pi / lmiz;
}

// Three-term asymptotic series; relative error below 6e-8 for |z| >= 25.
inline std::complex<double> faddeeva_asymptotic(std::complex<double> z) {
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    const std::complex<double> t = 1.0 / z;
    const std::complex<double> u = t * t;
    return std::complex<double>(0.0, inv_sqrt_pi) * t * (1.0 + u * (0.5 + 0.75 * u));
}

} // namespace detail

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im(z) >= 0.
/// Relative accuracy better than 1e-7 in both parts over the closed upper
/// half-plane (away from the underflow region of Re w on the real axis,
/// which is handled by a first-order expansion off the axis).
inline std::complex<double> faddeeva_w(std::complex<double> z) {
    const double x = z.real();
    const double y = z.imag();
    if (x * x + y * y > 625.0) return detail::faddeeva_asymptotic(z);
    if (y < 1e-7) {
        // Re w underflows like exp(-x^2); rebuild it from the exact real-axis
        // value plus the O(y) term, keeping Im w from the rational fit.
        const std::complex<double> w0 = detail::faddeeva_weideman({x, 0.0});
        const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
        const double re = std::exp(-x * x) + y * (2.0 * x * w0.imag() - two_over_sqrt_pi);
        return {re, w0.imag()};
    }
    return detail::faddeeva_weideman(z);
}

} // namespace carsinfer
