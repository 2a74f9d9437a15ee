#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#ifdef CARSINFER_USE_FFTW
#include <fftw3.h>

#include <mutex>
#endif

namespace carsinfer::fft {

using cdouble = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

// Twiddle tables cached per size, one cache per thread.
inline const std::vector<cdouble>& twiddles(std::size_t n) {
    thread_local std::map<std::size_t, std::vector<cdouble>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cdouble> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        w[k] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(w)).first->second;
}

// e^{-2 pi i j / n} for j = 0..n/2, used by the real-transform untangling.
inline const std::vector<cdouble>& half_twiddles(std::size_t n) {
    thread_local std::map<std::size_t, std::vector<cdouble>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cdouble> w(n / 2 + 1);
    for (std::size_t j = 0; j <= n / 2; ++j) {
        double ang = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        w[j] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(w)).first->second;
}

} // namespace detail

/// In-place iterative radix-2 transform. Forward uses e^{-2*pi*i*jk/n};
/// inverse conjugates and scales by 1/n.
inline void transform(std::vector<cdouble>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0) return;
    if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const auto& w = detail::twiddles(n);
    const double conj_sign = inverse ? -1.0 : 1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cdouble& t = w[k * stride];
                const double tr = t.real();
                const double ti = conj_sign * t.imag();
                const cdouble& b = a[i + k + len / 2];
                const cdouble v(b.real() * tr - b.imag() * ti, b.real() * ti + b.imag() * tr);
                const cdouble u = a[i + k];
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

inline std::vector<cdouble> forward(std::vector<cdouble> a) {
    transform(a, false);
    return a;
}

inline std::vector<cdouble> inverse(std::vector<cdouble> a) {
    transform(a, true);
    return a;
}

#ifdef CARSINFER_USE_FFTW

namespace detail {

// FFTW half-complex plans cached per size. Plan creation is serialized; the
// new-array execute interface is thread-safe. FFTW_ESTIMATE keeps planning
// deterministic.
struct FftwPlans {
    std::mutex mutex;
    std::map<std::size_t, fftw_plan> r2c, c2r;

    fftw_plan get(std::size_t n, bool forward) {
        std::lock_guard<std::mutex> lock(mutex);
        auto& table = forward ? r2c : c2r;
        auto it = table.find(n);
        if (it != table.end()) return it->second;
        double* re = fftw_alloc_real(n);
        fftw_complex* cx = fftw_alloc_complex(n / 2 + 1);
        fftw_plan plan =
            forward ? fftw_plan_dft_r2c_1d(static_cast<int>(n), re, cx, FFTW_ESTIMATE)
                    : fftw_plan_dft_c2r_1d(static_cast<int>(n), cx, re, FFTW_ESTIMATE);
        fftw_free(re);
        fftw_free(cx);
        return table.emplace(n, plan).first->second;
    }
};

inline FftwPlans& fftw_plans() {
    static FftwPlans plans;
    return plans;
}

// per-thread aligned buffers
struct FftwBuffers {
    std::size_t capacity = 0;
    double* real = nullptr;
    fftw_complex* cx = nullptr;

    void ensure(std::size_t n) {
        if (capacity >= n) return;
        if (real) fftw_free(real);
        if (cx) fftw_free(cx);
        real = fftw_alloc_real(n);
        cx = fftw_alloc_complex(n / 2 + 1);
        capacity = n;
    }
    ~FftwBuffers() {
        if (real) fftw_free(real);
        if (cx) fftw_free(cx);
    }
};

inline FftwBuffers& fftw_buffers() {
    thread_local FftwBuffers buffers;
    return buffers;
}

} // namespace detail

inline std::vector<cdouble> rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (!is_pow2(n) || n < 2) throw std::invalid_argument("rfft: length must be a power of two >= 2");
    auto plan = detail::fftw_plans().get(n, true);
    auto& buf = detail::fftw_buffers();
    buf.ensure(n);
    std::copy(x.begin(), x.end(), buf.real);
    fftw_execute_dft_r2c(plan, buf.real, buf.cx);
    std::vector<cdouble> out(n / 2 + 1);
    for (std::size_t j = 0; j <= n / 2; ++j) out[j] = {buf.cx[j][0], buf.cx[j][1]};
    return out;
}

inline std::vector<double> irfft(const std::vector<cdouble>& half, std::size_t n) {
    if (!is_pow2(n) || n < 2) throw std::invalid_argument("irfft: length must be a power of two >= 2");
    if (half.size() != n / 2 + 1) throw std::invalid_argument("irfft: expected n/2+1 bins");
    auto plan = detail::fftw_plans().get(n, false);
    auto& buf = detail::fftw_buffers();
    buf.ensure(n);
    for (std::size_t j = 0; j <= n / 2; ++j) {
        buf.cx[j][0] = half[j].real();
        buf.cx[j][1] = half[j].imag();
    }
    fftw_execute_dft_c2r(plan, buf.cx, buf.real);
    std::vector<double> x(n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = buf.real[k] * inv;
    return x;
}

#else

/// Real-input transform: returns the n/2+1 nonnegative-frequency bins of a
/// length-n real signal via one n/2 complex transform.
inline std::vector<cdouble> rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (!is_pow2(n) || n < 2) throw std::invalid_argument("rfft: length must be a power of two >= 2");
    const std::size_t m = n / 2;
    std::vector<cdouble> z(m);
    for (std::size_t k = 0; k < m; ++k) z[k] = {x[2 * k], x[2 * k + 1]};
    transform(z, false);
    std::vector<cdouble> out(m + 1);
    const auto& tw = detail::half_twiddles(n);
    for (std::size_t j = 0; j <= m; ++j) {
        const cdouble zj = z[j % m];
        const cdouble zm = std::conj(z[(m - j) % m]);
        const cdouble even = 0.5 * (zj + zm);
        const cdouble odd = cdouble(0, -0.5) * (zj - zm);
        out[j] = even + tw[j] * odd;
    }
    out[0] = {out[0].real(), 0.0};
    out[m] = {out[m].real(), 0.0};
    return out;
}

/// Inverse of rfft: n/2+1 Hermitian half-spectrum -> length-n real signal.
inline std::vector<double> irfft(const std::vector<cdouble>& half, std::size_t n) {
    if (!is_pow2(n) || n < 2) throw std::invalid_argument("irfft: length must be a power of two >= 2");
    const std::size_t m = n / 2;
    if (half.size() != m + 1) throw std::invalid_argument("irfft: expected n/2+1 bins");
    std::vector<cdouble> z(m);
    const auto& tw = detail::half_twiddles(n);
    for (std::size_t j = 0; j < m; ++j) {
        const cdouble xj = half[j];
        const cdouble xm = std::conj(half[m - j]);
        const cdouble even = 0.5 * (xj + xm);
        const cdouble odd = 0.5 * (xj - xm) * std::conj(tw[j]);
        z[j] = even + cdouble(0, 1) * odd;
    }
    transform(z, true);
    std::vector<double> x(n);
    for (std::size_t k = 0; k < m; ++k) {
        x[2 * k] = z[k].real();
        x[2 * k + 1] = z[k].imag();
    }
    return x;
}

#endif // CARSINFER_USE_FFTW

} // namespace carsinfer::fft
