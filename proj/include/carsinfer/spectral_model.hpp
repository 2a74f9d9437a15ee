#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "carsinfer/faddeeva.hpp"
#include "carsinfer/fft.hpp"
#include "carsinfer/grid.hpp"
#include "carsinfer/model_types.hpp"
#include "carsinfer/wavelet.hpp"

namespace carsinfer {

/// Unit-area Voigt profile at offset x from the line center. Degenerate
/// widths use the exact Gaussian/Lorentzian formulas.
inline double voigt_value(double x, double sigma, double gamma) {
    if (sigma == 0.0 && gamma == 0.0)
        throw std::invalid_argument("voigt_value: sigma and gamma cannot both be zero");
    if (sigma == 0.0) {
        return gamma / (std::numbers::pi * (x * x + gamma * gamma));
    }
    if (gamma == 0.0) {
        const double u = x / sigma;
        return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    const double inv = 1.0 / (sigma * std::numbers::sqrt2);
    const std::complex<double> z(x * inv, gamma * inv);
    return faddeeva_w(z).real() / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

namespace detail {

/// Batched profile accumulation: the far tail (|z| > 25) uses the real-only
/// asymptotic series, the core runs the Weideman recurrence point-parallel.
inline void add_voigt_batch(const WavenumberGrid& grid, const VoigtLine& line,
                            std::vector<double>& acc) {
    const std::size_t n = grid.count();
    const double inv = 1.0 / (line.sigma * std::numbers::sqrt2);
    const double y = line.gamma * inv;
    const double norm = line.amplitude / (line.sigma * std::sqrt(2.0 * std::numbers::pi));
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);

    // |z|^2 = (x^2 + gamma^2) inv^2 <= 625 defines the core window
    const double core_x2 = 625.0 / (inv * inv) - line.gamma * line.gamma;
    std::size_t k0 = n, k1 = n; // core index range [k0, k1)
    if (core_x2 > 0.0) {
        const double half_w = std::sqrt(core_x2);
        const double lo = (line.location - half_w - grid.start()) / grid.step();
        const double hi = (line.location + half_w - grid.start()) / grid.step();
        k0 = (lo <= 0.0) ? 0 : std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(lo)));
        k1 = (hi < 0.0) ? 0 : std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(hi)) + 1);
        if (k1 < k0) k1 = k0;
    }

    auto tail = [&](std::size_t a, std::size_t b) {
        for (std::size_t k = a; k < b; ++k) {
            const double zr = (grid.wavenumber(k) - line.location) * inv;
            const double r2 = zr * zr + y * y;
            const double tr = zr / r2, ti = -y / r2;
            const double t2r = tr * tr - ti * ti, t2i = 2.0 * tr * ti;
            const double t3i = t2r * ti + t2i * tr;
            const double t5i = t2r * t3i + t2i * (t2r * tr - t2i * ti);
            acc[k] += norm * (-inv_sqrt_pi) * (ti + 0.5 * t3i + 0.75 * t5i);
        }
    };
    tail(0, k0);
    tail(k1, n);

    if (k0 >= k1) return;
    if (y < 1e-7) {
        for (std::size_t k = k0; k < k1; ++k) {
            const double x = (grid.wavenumber(k) - line.location) * inv;
            acc[k] += norm * faddeeva_w({x, y}).real();
        }
        return;
    }
    const std::size_t m = k1 - k0;
    thread_local std::vector<double> ur, ui, pr, pi;
    ur.resize(m);
    ui.resize(m);
    pr.assign(m, detail::kWeidemanCoeff[0]);
    pi.assign(m, 0.0);
    const double L = detail::kWeidemanL;
    thread_local std::vector<double> zzr, zzi;
    zzr.resize(m);
    zzi.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double zr = (grid.wavenumber(k0 + i) - line.location) * inv;
        // u = 1/(L - iz), Z = (L + iz) u
        const double dr = L + y, di = -zr;
        const double inv_d2 = 1.0 / (dr * dr + di * di);
        const double u_r = dr * inv_d2, u_i = -di * inv_d2;
        ur[i] = u_r;
        ui[i] = u_i;
        const double nr = L - y, ni = zr;
        zzr[i] = nr * u_r - ni * u_i;
        zzi[i] = nr * u_i + ni * u_r;
    }
    for (std::size_t c = 1; c < detail::kWeidemanCoeff.size(); ++c) {
        const double cc = detail::kWeidemanCoeff[c];
        for (std::size_t i = 0; i < m; ++i) {
            const double npr = pr[i] * zzr[i] - pi[i] * zzi[i] + cc;
            pi[i] = pr[i] * zzi[i] + pi[i] * zzr[i];
            pr[i] = npr;
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        // w = u (2 p u + 1/sqrt(pi)); accumulate Re w
        const double qr = 2.0 * (pr[i] * ur[i] - pi[i] * ui[i]) + inv_sqrt_pi;
        const double qi = 2.0 * (pr[i] * ui[i] + pi[i] * ur[i]);
        acc[k0 + i] += norm * (ur[i] * qr - ui[i] * qi);
    }
}

} // namespace detail

inline void add_voigt_profile(const WavenumberGrid& grid, const VoigtLine& line,
                              std::vector<double>& acc) {
    line.validate();
    if (line.sigma == 0.0) {
        const double g2 = line.gamma * line.gamma;
        const double scale = line.amplitude * line.gamma / std::numbers::pi;
        for (std::size_t k = 0; k < grid.count(); ++k) {
            const double x = grid.wavenumber(k) - line.location;
            acc[k] += scale / (x * x + g2);
        }
        return;
    }
    if (line.gamma == 0.0) {
        const double norm = line.amplitude / (line.sigma * std::sqrt(2.0 * std::numbers::pi));
        const double inv2 = 0.5 / (line.sigma * line.sigma);
        for (std::size_t k = 0; k < grid.count(); ++k) {
            const double x = grid.wavenumber(k) - line.location;
            acc[k] += norm * std::exp(-x * x * inv2);
        }
        return;
    }
    detail::add_voigt_batch(grid, line, acc);
}

/// a_n * V(nu_k - nu_n; sigma_n, gamma_n) over the grid.
inline std::vector<double> voigt_profile(const WavenumberGrid& grid, const VoigtLine& line) {
    std::vector<double> out(grid.count(), 0.0);
    add_voigt_profile(grid, line, out);
    return out;
}

/// V_N(nu; theta) = sum of the line profiles. An empty line list yields the
/// zero signal (used by the no-resonance test path of cars_signal).
inline std::vector<double> raman_signal(const WavenumberGrid& grid,
                                        const std::vector<VoigtLine>& lines) {
    std::vector<double> out(grid.count(), 0.0);
    for (const auto& l : lines) add_voigt_profile(grid, l, out);
    return out;
}

inline std::vector<double> raman_signal(const WavenumberGrid& grid, const ModelParams& params) {
    params.validate();
    return raman_signal(grid, params.lines);
}

enum class HilbertMode {
    zero_padded, // zero-pad to 4x length (rounded up to a power of two), then crop
    periodic,    // circular transform on the given length (must be a power of two)
};

/// Discrete Hilbert transform with the H{cos} = sin sign convention.
inline std::vector<double> hilbert_transform(const std::vector<double>& signal,
                                             HilbertMode mode = HilbertMode::zero_padded) {
    const std::size_t n = signal.size();
    if (n < 8) throw std::invalid_argument("hilbert_transform: need at least 8 samples");
    for (double v : signal)
        if (!std::isfinite(v)) throw std::invalid_argument("hilbert_transform: non-finite input");

    std::size_t p;
    if (mode == HilbertMode::periodic) {
        if (!fft::is_pow2(n))
            throw std::invalid_argument("hilbert_transform: periodic mode needs a power-of-two length");
        p = n;
    } else {
        p = fft::next_pow2(4 * n);
    }
    std::vector<double> ext(p, 0.0);
    std::copy(signal.begin(), signal.end(), ext.begin());

    auto spec = fft::rfft(ext);
    const std::size_t m = p / 2;
    // multiply by -i sgn(f); DC and Nyquist vanish
    spec[0] = {0.0, 0.0};
    spec[m] = {0.0, 0.0};
    for (std::size_t j = 1; j < m; ++j) spec[j] = {spec[j].imag(), -spec[j].real()};
    auto h = fft::irfft(spec, p);
    h.resize(n);
    return h;
}

/// S(nu; theta) = (exp(A_J/2) - H{V_N})^2 + V_N^2, the squared modulus of the
/// non-resonant plus resonant susceptibilities.
inline std::vector<double> cars_signal(const WavenumberGrid& grid,
                                       const std::vector<VoigtLine>& lines, double nr_level,
                                       HilbertMode mode = HilbertMode::zero_padded) {
    if (!std::isfinite(nr_level)) throw std::invalid_argument("cars_signal: non-finite A_J");
    const double chi_nr = std::exp(0.5 * nr_level);
    std::vector<double> v = raman_signal(grid, lines);
    bool all_zero = true;
    for (double x : v)
        if (x != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) {
        return std::vector<double>(grid.count(), chi_nr * chi_nr);
    }
    std::vector<double> hv = hilbert_transform(v, mode);
    std::vector<double> s(grid.count());
    for (std::size_t k = 0; k < grid.count(); ++k) {
        const double re = chi_nr - hv[k];
        s[k] = re * re + v[k] * v[k];
    }
    return s;
}

inline std::vector<double> cars_signal(const WavenumberGrid& grid, const ModelParams& params,
                                       double nr_level,
                                       HilbertMode mode = HilbertMode::zero_padded) {
    params.validate();
    return cars_signal(grid, params.lines, nr_level, mode);
}

/// f(nu; p, theta) = eps_m(nu; p) * S(nu; theta).
inline std::vector<double> forward_model(const MeasuredSpectrum& measured,
                                         const ModelParams& params,
                                         const ErrorFunctionEngine& errfun) {
    if (!(errfun.grid() == measured.grid))
        throw std::invalid_argument("forward_model: error-function grid mismatch");
    std::vector<double> f = cars_signal(measured.grid, params, measured.nr_level);
    std::vector<double> logeps;
    errfun.log_modulating_error(params.background_level, logeps);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] *= std::exp(logeps[k]);
    return f;
}

/// Gaussian log-likelihood over the non-masked channels; `edge_mask` channels
/// at each end are excluded from the sum. Scratch buffers are reused per
/// thread, so repeated evaluation allocates nothing.
inline double log_likelihood(const MeasuredSpectrum& measured, const ModelParams& params,
                             const ErrorFunctionEngine& errfun, std::size_t edge_mask = 0) {
    if (!(errfun.grid() == measured.grid))
        throw std::invalid_argument("log_likelihood: error-function grid mismatch");
    const std::size_t n = measured.values.size();
    if (2 * edge_mask >= n)
        throw std::invalid_argument("log_likelihood: mask excludes every channel");
    params.validate();

    thread_local std::vector<double> v, hv, logeps;
    v.assign(n, 0.0);
    for (const auto& line : params.lines) add_voigt_profile(measured.grid, line, v);
    hv = hilbert_transform(v);
    errfun.log_modulating_error(params.background_level, logeps);

    const double chi_nr = std::exp(0.5 * measured.nr_level);
    const double inv2v = 0.5 / measured.noise_variance;
    const double lognorm = -0.5 * std::log(2.0 * std::numbers::pi * measured.noise_variance);
    double ll = 0.0;
    for (std::size_t k = edge_mask; k < n - edge_mask; ++k) {
        const double re = chi_nr - hv[k];
        const double f = std::exp(logeps[k]) * (re * re + v[k] * v[k]);
        const double r = measured.values[k] - f;
        ll += lognorm - r * r * inv2v;
    }
    return ll;
}

} // namespace carsinfer
