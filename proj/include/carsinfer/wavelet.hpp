#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "carsinfer/fft.hpp"
#include "carsinfer/grid.hpp"
#include "carsinfer/symlet_filters.hpp"

namespace carsinfer {

enum class BoundaryMode {
    periodic,  // circular on the (pow2-padded) signal; orthonormal, exact Parseval
    symmetric, // even reflection to twice the padded length, then circular
};

namespace detail {

inline std::vector<double> qmf_highpass(std::span<const double> lo) {
    const std::size_t L = lo.size();
    std::vector<double> hi(L);
    for (std::size_t k = 0; k < L; ++k) {
        double v = lo[L - 1 - k];
        hi[k] = (k % 2 == 0) ? v : -v;
    }
    return hi;
}

// One circular analysis step: y_a[i] = sum_k lo[k] x[(2i+1-k) mod n], same for hi.
inline void dwt_step(const std::vector<double>& x, std::span<const double> lo,
                     const std::vector<double>& hi, std::vector<double>& ca,
                     std::vector<double>& cd) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    const std::size_t L = lo.size();
    ca.assign(half, 0.0);
    cd.assign(half, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        double sa = 0.0, sd = 0.0;
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(2 * i + 1);
        for (std::size_t k = 0; k < L; ++k) {
            std::ptrdiff_t idx = base - static_cast<std::ptrdiff_t>(k);
            idx %= static_cast<std::ptrdiff_t>(n);
            if (idx < 0) idx += static_cast<std::ptrdiff_t>(n);
            sa += lo[k] * x[static_cast<std::size_t>(idx)];
            sd += hi[k] * x[static_cast<std::size_t>(idx)];
        }
        ca[i] = sa;
        cd[i] = sd;
    }
}

// Transpose of dwt_step (orthonormal synthesis).
inline std::vector<double> idwt_step(const std::vector<double>& ca, const std::vector<double>& cd,
                                     std::span<const double> lo, const std::vector<double>& hi) {
    const std::size_t half = ca.size();
    const std::size_t n = 2 * half;
    const std::size_t L = lo.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(2 * i + 1);
        for (std::size_t k = 0; k < L; ++k) {
            std::ptrdiff_t idx = base - static_cast<std::ptrdiff_t>(k);
            idx %= static_cast<std::ptrdiff_t>(n);
            if (idx < 0) idx += static_cast<std::ptrdiff_t>(n);
            x[static_cast<std::size_t>(idx)] += lo[k] * ca[i] + hi[k] * cd[i];
        }
    }
    return x;
}

// Reflect-pad (half-point symmetry) to the next power of two.
inline std::vector<double> reflect_pad_pow2(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t p = fft::next_pow2(n);
    std::vector<double> out(x);
    out.reserve(p);
    std::size_t i = 0;
    std::ptrdiff_t dir = -1;
    std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(n) - 1;
    while (out.size() < p) {
        pos += dir;
        if (pos < 0) {
            pos = 0;
            dir = 1;
        } else if (pos >= static_cast<std::ptrdiff_t>(n)) {
            pos = static_cast<std::ptrdiff_t>(n) - 1;
            dir = -1;
        }
        out.push_back(x[static_cast<std::size_t>(pos)]);
        (void)i;
    }
    return out;
}

} // namespace detail

/// Multilevel decomposition. details[j-1] holds the level-j coefficients
/// (level 1 = finest); approx holds the level-J scaling coefficients.
struct WaveletDecomposition {
    int order = 0;
    BoundaryMode mode = BoundaryMode::periodic;
    std::size_t original_length = 0;
    std::size_t transform_length = 0;
    std::vector<double> approx;
    std::vector<std::vector<double>> details;

    std::size_t levels() const { return details.size(); }

    double detail_energy() const {
        double e = 0.0;
        for (const auto& d : details)
            for (double v : d) e += v * v;
        return e;
    }
    double approx_energy() const {
        double e = 0.0;
        for (double v : approx) e += v * v;
        return e;
    }
};

inline std::size_t max_decomposition_levels(std::size_t length) {
    std::size_t p = fft::next_pow2(length);
    std::size_t j = 0;
    while (p > 1) {
        p >>= 1;
        ++j;
    }
    return j;
}

/// Pyramidal analysis of `signal` to `levels` levels with the symlet of the
/// given order. Signals are reflect-padded to a power of two; symmetric mode
/// additionally mirrors the padded signal so the circular extension is even.
inline WaveletDecomposition dwt_multilevel(const std::vector<double>& signal, int order,
                                           std::size_t levels,
                                           BoundaryMode mode = BoundaryMode::periodic) {
    auto lo = wavelets::symlet_scaling_filter(order);
    if (signal.size() < lo.size())
        throw std::invalid_argument("dwt_multilevel: signal shorter than filter");
    for (double v : signal)
        if (!std::isfinite(v)) throw std::invalid_argument("dwt_multilevel: non-finite input");

    std::vector<double> work = detail::reflect_pad_pow2(signal);
    if (mode == BoundaryMode::symmetric) {
        const std::size_t p = work.size();
        work.reserve(2 * p);
        for (std::size_t i = 0; i < p; ++i) work.push_back(work[p - 1 - i]);
    }
    const std::size_t n = work.size();
    if (levels == 0 || levels > max_decomposition_levels(n))
        throw std::invalid_argument("dwt_multilevel: invalid level count for signal length");

    WaveletDecomposition dec;
    dec.order = order;
    dec.mode = mode;
    dec.original_length = signal.size();
    dec.transform_length = n;
    dec.details.resize(levels);

    const std::vector<double> hi = detail::qmf_highpass(lo);
    std::vector<double> a = std::move(work);
    std::vector<double> ca, cd;
    for (std::size_t j = 0; j < levels; ++j) {
        detail::dwt_step(a, lo, hi, ca, cd);
        dec.details[j] = cd;
        a = ca;
    }
    dec.approx = std::move(a);
    return dec;
}

/// Inverse transform, cropped to the original length.
inline std::vector<double> idwt_multilevel(const WaveletDecomposition& dec) {
    auto lo = wavelets::symlet_scaling_filter(dec.order);
    const std::vector<double> hi = detail::qmf_highpass(lo);
    std::vector<double> a = dec.approx;
    for (std::size_t j = dec.levels(); j-- > 0;) {
        a = detail::idwt_step(a, dec.details[j], lo, hi);
    }
    a.resize(dec.original_length);
    return a;
}

/// D_j for j = 1..J: inverse transform keeping only the level-j detail
/// coefficients. result[j-1] = D_j on the original support.
inline std::vector<std::vector<double>> detail_reconstructions(const WaveletDecomposition& dec) {
    std::vector<std::vector<double>> out(dec.levels());
    for (std::size_t j = 0; j < dec.levels(); ++j) {
        WaveletDecomposition one = dec;
        one.approx.assign(one.approx.size(), 0.0);
        for (std::size_t i = 0; i < one.details.size(); ++i)
            if (i != j) one.details[i].assign(one.details[i].size(), 0.0);
        out[j] = idwt_multilevel(one);
    }
    return out;
}

/// Inverse transform keeping only the approximation coefficients.
inline std::vector<double> approximation_reconstruction(const WaveletDecomposition& dec) {
    WaveletDecomposition one = dec;
    for (auto& d : one.details) d.assign(d.size(), 0.0);
    return idwt_multilevel(one);
}

/// Fraction of signal energy carried by detail coefficients under a
/// full-depth periodic decomposition.
inline double energy_concentration(const std::vector<double>& signal, int order) {
    auto lo = wavelets::symlet_scaling_filter(order);
    if (signal.size() < lo.size())
        throw std::invalid_argument("energy_concentration: signal shorter than filter");
    double total = 0.0;
    for (double v : signal) total += v * v;
    if (total == 0.0) throw std::invalid_argument("energy_concentration: all-zero signal");
    const auto dec = dwt_multilevel(signal, order, max_decomposition_levels(signal.size()),
                                    BoundaryMode::periodic);
    const double ed = dec.detail_energy();
    const double ea = dec.approx_energy();
    return ed / (ed + ea);
}

enum class ErrorInterpolation {
    floor_based, // continuous at integer p; default
    ceil_based,  // verbatim printed form, kept for comparison
};

/// Precomputed detail reconstructions of a (log-domain) signal plus the
/// interpolated modulating error function eps_m(nu; p).
class ErrorFunctionEngine {
public:
    ErrorFunctionEngine(const WavenumberGrid& grid, const std::vector<double>& log_signal,
                        int order, std::size_t levels,
                        ErrorInterpolation interp = ErrorInterpolation::floor_based)
        : grid_(grid), levels_(levels), interp_(interp) {
        if (log_signal.size() != grid.count())
            throw std::invalid_argument("ErrorFunctionEngine: signal/grid length mismatch");
        auto dec = dwt_multilevel(log_signal, order, levels, BoundaryMode::symmetric);
        details_ = detail_reconstructions(dec);
        approx_ = approximation_reconstruction(dec);
        // suffix sums T_j = sum_{i=j..J} D_i; T_{J+1} = 0
        suffix_.assign(levels + 2, std::vector<double>(grid.count(), 0.0));
        for (std::size_t j = levels; j >= 1; --j) {
            for (std::size_t k = 0; k < grid.count(); ++k)
                suffix_[j][k] = suffix_[j + 1][k] + details_[j - 1][k];
        }
    }

    const WavenumberGrid& grid() const { return grid_; }
    std::size_t levels() const { return levels_; }
    const std::vector<std::vector<double>>& details() const { return details_; }
    const std::vector<double>& approximation() const { return approx_; }
    ErrorInterpolation interpolation() const { return interp_; }

    /// log eps_m(nu; p) written into `out`.
    void log_modulating_error(double p, std::vector<double>& out) const {
        const double J = static_cast<double>(levels_);
        if (!(p >= 1.0 && p <= J))
            throw std::invalid_argument("modulating_error: p outside [1, J]");
        out.assign(grid_.count(), 0.0);
        if (interp_ == ErrorInterpolation::floor_based) {
            std::size_t fl = static_cast<std::size_t>(std::floor(p));
            double beta = p - std::floor(p);
            if (fl >= levels_) {
                fl = levels_;
                beta = 0.0;
            }
            const auto& tail = suffix_[fl + 1];
            const auto& dfl = details_[fl - 1];
            for (std::size_t k = 0; k < out.size(); ++k)
                out[k] = tail[k] + (1.0 - beta) * dfl[k];
        } else {
            // log eps = sum_{j=ceil(p+1)}^{J} D_j + (1-beta) D_{ceil(p)}, beta = p - floor(p)
            const double beta = p - std::floor(p);
            std::size_t cp = static_cast<std::size_t>(std::ceil(p));
            if (cp > levels_) cp = levels_;
            std::size_t cp1 = static_cast<std::size_t>(std::ceil(p + 1.0));
            const auto& tail = (cp1 <= levels_) ? suffix_[cp1] : suffix_[levels_ + 1];
            const auto& dcp = details_[cp - 1];
            for (std::size_t k = 0; k < out.size(); ++k)
                out[k] = tail[k] + (1.0 - beta) * dcp[k];
        }
    }

    /// eps_m(nu; p) > 0.
    std::vector<double> modulating_error(double p) const {
        std::vector<double> out;
        log_modulating_error(p, out);
        for (auto& v : out) v = std::exp(v);
        return out;
    }

private:
    WavenumberGrid grid_;
    std::size_t levels_;
    ErrorInterpolation interp_;
    std::vector<std::vector<double>> details_;
    std::vector<double> approx_;
    std::vector<std::vector<double>> suffix_;
};

} // namespace carsinfer
