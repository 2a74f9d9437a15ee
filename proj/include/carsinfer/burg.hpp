#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace carsinfer {

/// Order-recursive Burg estimate for complex data. coeffs[m-1] holds the
/// order-m prediction coefficients a_1..a_m with the convention
///     x[t] ~ -(a_1 x[t-1] + ... + a_m x[t-m]).
/// All reflection coefficients satisfy |k| <= 1, which is the Schur-Cohn
/// stability condition on the prediction polynomial.
struct BurgModel {
    std::vector<std::vector<std::complex<double>>> coeffs;
    std::vector<std::complex<double>> reflection;

    std::size_t max_order() const { return coeffs.size(); }
};

inline BurgModel burg_estimate(const std::vector<std::complex<double>>& x, std::size_t max_order) {
    using cd = std::complex<double>;
    const std::size_t n = x.size();
    BurgModel model;
    if (n < 2 || max_order == 0) return model;
    if (max_order > n - 1) max_order = n - 1;

    std::vector<cd> f(x), b(x);
    std::vector<cd> a(max_order + 1, cd(0.0));
    a[0] = cd(1.0);
    model.coeffs.reserve(max_order);
    model.reflection.reserve(max_order);

    for (std::size_t m = 1; m <= max_order; ++m) {
        cd num(0.0);
        double den = 0.0;
        for (std::size_t t = m; t < n; ++t) {
            num += f[t] * std::conj(b[t - 1]);
            den += std::norm(f[t]) + std::norm(b[t - 1]);
        }
        if (den == 0.0) break;
        const cd k = -2.0 * num / den;
        model.reflection.push_back(k);

        std::vector<cd> a_next(a);
        for (std::size_t i = 1; i <= m; ++i) a_next[i] = a[i] + k * std::conj(a[m - i]);
        a = std::move(a_next);

        for (std::size_t t = n - 1; t >= m; --t) {
            const cd ft = f[t];
            f[t] = ft + k * b[t - 1];
            b[t] = b[t - 1] + std::conj(k) * ft;
            if (t == m) break;
        }
        model.coeffs.emplace_back(a.begin() + 1, a.begin() + 1 + static_cast<std::ptrdiff_t>(m));
    }
    return model;
}

/// Extends `x` in place by `count` samples using the order-m filter.
inline void burg_extrapolate(std::vector<std::complex<double>>& x,
                             const std::vector<std::complex<double>>& coeffs, std::size_t count) {
    const std::size_t m = coeffs.size();
    for (std::size_t c = 0; c < count; ++c) {
        std::complex<double> acc(0.0);
        const std::size_t t = x.size();
        for (std::size_t i = 0; i < m; ++i) acc += coeffs[i] * x[t - 1 - i];
        x.push_back(-acc);
    }
}

} // namespace carsinfer
