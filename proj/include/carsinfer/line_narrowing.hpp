#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "carsinfer/burg.hpp"
#include "carsinfer/fft.hpp"
#include "carsinfer/grid.hpp"
#include "carsinfer/wavelet.hpp"

namespace carsinfer {

struct NarrowingConfig {
    std::vector<double> width_grid;     // gamma_m, strictly positive, sorted
    std::size_t max_filter_length = 150; // N_FIR sweep upper bound
    std::size_t extrapolation_length = 0; // 0 = number of measurement points
    double energy_percentage = 0.5;      // p_we
    double criterion_percentage = 0.025; // p_fc
    double criterion_increment = 0.025;  // p_fc step when the intersection is short
    std::size_t min_intersection = 50;   // M~ lower bound
    double smoothing_fwhm = 0.0;         // cm^-1; 0 = auto (multiple of the grid step)
    double smoothing_fwhm_channels = 4.0; // auto kernel width in units of h
    int cwe_order = 8;                   // symlet order for C_we
    double divisor_floor = 1e-3;         // keep deconvolved samples with divisor >= floor*peak
    double lp_seed_floor = 0.1;          // prediction overwrites samples past divisor < this level
    double noise_window_snr = 3.0;       // LP window also capped where |X| < snr * noise floor; 0 disables
    std::size_t edge_baseline_channels = 16; // channels per side defining the pad level

    static std::vector<double> linspace(double lo, double hi, std::size_t n) {
        std::vector<double> g(n);
        if (n == 1) {
            g[0] = lo;
            return g;
        }
        for (std::size_t i = 0; i < n; ++i)
            g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        return g;
    }

    void validate() const {
        if (width_grid.empty()) throw std::invalid_argument("NarrowingConfig: empty width grid");
        double prev = 0.0;
        for (double g : width_grid) {
            if (!(g > 0.0)) throw std::invalid_argument("NarrowingConfig: widths must be > 0");
            if (!(g > prev)) throw std::invalid_argument("NarrowingConfig: widths must be sorted ascending");
            prev = g;
        }
        if (max_filter_length < 2) throw std::invalid_argument("NarrowingConfig: N_FIR must be >= 2");
        if (!(energy_percentage > 0.0 && energy_percentage <= 1.0))
            throw std::invalid_argument("NarrowingConfig: p_we outside (0, 1]");
        if (!(criterion_percentage > 0.0 && criterion_percentage <= 1.0))
            throw std::invalid_argument("NarrowingConfig: p_fc outside (0, 1]");
    }
};

/// One (gamma_m, N_FIR) sweep entry with its deconvolution result and scores.
struct CandidateSolution {
    double gamma = 0.0;
    std::size_t n_fir = 0;
    std::vector<double> delta_approx;  // D_A on the measurement grid
    double residual = 0.0;             // d
    double constrained_residual = 0.0; // d_C
    double normalization = 1.0;        // c_n
    double energy_concentration = 0.0; // C_we
    double filter_criterion = 0.0;     // f_c = d + d_C
};

struct NarrowedSpectrum {
    std::vector<double> narrowed;       // average of smoothed D_A over the chosen M
    std::vector<double> smooth_model;   // average of L(gamma_m) * D_A (the Eq-20 model)
    std::vector<double> residual;       // input - smooth_model
    double residual_norm = 0.0;         // d_M at the chosen prefix size
    std::size_t chosen_m = 0;           // M
    std::size_t intersection_size = 0;  // M~
    std::size_t swept = 0;              // candidate pairs evaluated
    bool warning = false;               // selection fell back to the best-d singleton
    std::vector<CandidateSolution> selected; // the chosen M candidates, d-ascending
};

namespace narrowing_detail {

/// Linear convolution with the grid-sampled unit-area Lorentzian, via FFT.
inline std::vector<fft::cdouble> lorentz_kernel_spectrum(std::size_t count, double step,
                                                         double gamma, std::size_t pad) {
    std::vector<double> kern(pad, 0.0);
    // kernel index j corresponds to offset (j - (count-1)) * step
    for (std::size_t j = 0; j < 2 * count - 1; ++j) {
        const double x = (static_cast<double>(j) - static_cast<double>(count - 1)) * step;
        kern[j] = (gamma / std::numbers::pi) / (x * x + gamma * gamma);
    }
    return fft::rfft(kern);
}

inline std::vector<double> convolve_with_kernel(const std::vector<double>& u,
                                                const std::vector<fft::cdouble>& kernel_spec,
                                                std::size_t count, double step, std::size_t pad) {
    std::vector<double> up(pad, 0.0);
    std::copy(u.begin(), u.end(), up.begin());
    auto uspec = fft::rfft(up);
    for (std::size_t j = 0; j < uspec.size(); ++j) uspec[j] *= kernel_spec[j];
    auto full = fft::irfft(uspec, pad);
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = full[k + count - 1] * step;
    return out;
}

inline std::vector<double> gaussian_kernel(double step, double fwhm) {
    const double sg = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const std::size_t halfw = static_cast<std::size_t>(std::ceil(6.0 * sg / step));
    std::vector<double> k(2 * halfw + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double x = (static_cast<double>(i) - static_cast<double>(halfw)) * step;
        k[i] = std::exp(-x * x / (2.0 * sg * sg));
        sum += k[i];
    }
    for (auto& v : k) v /= sum * step;
    return k;
}

inline std::vector<double> smooth(const std::vector<double>& u, const std::vector<double>& kern,
                                  double step) {
    const std::size_t n = u.size();
    const std::size_t halfw = kern.size() / 2;
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < kern.size(); ++i) {
            const std::ptrdiff_t idx =
                static_cast<std::ptrdiff_t>(k) + static_cast<std::ptrdiff_t>(i) -
                static_cast<std::ptrdiff_t>(halfw);
            if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n))
                acc += kern[i] * u[static_cast<std::size_t>(idx)];
        }
        out[k] = acc * step;
    }
    return out;
}

} // namespace narrowing_detail

/// Shared state for the Fourier self-deconvolution sweep: the padded FFT of
/// the spectrum, the LP training-window bound, and per-gamma Burg models.
class FsdWorkspace {
public:
    FsdWorkspace(const std::vector<double>& spectrum, const WavenumberGrid& grid,
                 const NarrowingConfig& cfg)
        : grid_(grid), count_(spectrum.size()), cfg_(cfg) {
        if (spectrum.size() != grid.count())
            throw std::invalid_argument("FsdWorkspace: spectrum/grid length mismatch");
        for (double v : spectrum)
            if (!std::isfinite(v)) throw std::invalid_argument("FsdWorkspace: non-finite input");
        pad_len_ = fft::next_pow2(2 * count_);
        // pad with the mean of the edge regions so the circular extension has
        // no step at the spectrum boundary
        const std::size_t eb = std::min(cfg.edge_baseline_channels, count_ / 2);
        double lead = 0.0, tail = 0.0;
        for (std::size_t i = 0; i < eb; ++i) {
            lead += spectrum[i];
            tail += spectrum[count_ - 1 - i];
        }
        const double padval = (eb > 0) ? 0.5 * (lead + tail) / static_cast<double>(eb) : 0.0;
        std::vector<double> padded(pad_len_, padval);
        std::copy(spectrum.begin(), spectrum.end(), padded.begin());
        spectrum_fft_ = fft::rfft(padded);
        half_ = pad_len_ / 2;

        noise_cap_ = half_ + 1;
        if (cfg.noise_window_snr > 0.0) {
            std::vector<double> mag;
            mag.reserve(half_ - half_ / 2);
            for (std::size_t j = half_ / 2; j < half_; ++j) mag.push_back(std::abs(spectrum_fft_[j]));
            std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(mag.size() / 2),
                             mag.end());
            const double noise_level = mag[mag.size() / 2];
            std::size_t last = 0;
            for (std::size_t j = 0; j <= half_; ++j)
                if (std::abs(spectrum_fft_[j]) >= cfg.noise_window_snr * noise_level) last = j;
            noise_cap_ = std::max<std::size_t>(last + 1, 16);
        }
    }

    const WavenumberGrid& grid() const { return grid_; }
    std::size_t swept_pairs() const { return cfg_.width_grid.size() * cfg_.max_filter_length; }

    std::size_t divisor_window(double gamma, double floor_level) const {
        // divisor exp(-2*pi*gamma*t) >= floor, t_j = j / (pad_len * h)
        const double tmax = std::log(1.0 / floor_level) / (2.0 * std::numbers::pi * gamma);
        const double jmax = tmax * static_cast<double>(pad_len_) * grid_.step();
        if (jmax >= static_cast<double>(half_)) return half_ + 1;
        return static_cast<std::size_t>(std::floor(jmax)) + 1;
    }

    std::size_t keep_length(double gamma) const {
        return std::min(divisor_window(gamma, cfg_.divisor_floor), noise_cap_);
    }

    /// D_A for one candidate, or nullopt when the prediction is rejected
    /// (window too short for the given order, |reflection| > 1, blow-up).
    std::optional<std::vector<double>> delta_approximation(double gamma, std::size_t n_fir,
                                                           const BurgModel* shared_model = nullptr) const {
        const std::size_t keep = keep_length(gamma);
        std::vector<fft::cdouble> buf(half_ + 1);
        const double scale = 2.0 * std::numbers::pi * gamma / (static_cast<double>(pad_len_) * grid_.step());
        if (keep >= half_ + 1) {
            // divisor never falls below the floor: plain deconvolution
            for (std::size_t j = 0; j <= half_; ++j)
                buf[j] = spectrum_fft_[j] * std::exp(scale * static_cast<double>(j));
        } else {
            const std::size_t order = n_fir - 1;
            if (order < 1 || order + 1 >= keep) return std::nullopt;
            buf.resize(keep);
            bool all_zero = true;
            for (std::size_t j = 0; j < keep; ++j) {
                buf[j] = spectrum_fft_[j] * std::exp(scale * static_cast<double>(j));
                all_zero = all_zero && buf[j] == fft::cdouble(0.0);
            }
            if (all_zero) return std::vector<double>(count_, 0.0);
            BurgModel local;
            const BurgModel* model = shared_model;
            if (model == nullptr) {
                local = burg_estimate(std::vector<fft::cdouble>(buf.begin(), buf.end()),
                                      std::min(cfg_.max_filter_length - 1, keep - 2));
                model = &local;
            }
            if (model->max_order() < order) return std::nullopt;
            for (std::size_t i = 0; i < order; ++i)
                if (std::abs(model->reflection[i]) > 1.0 + 1e-10) return std::nullopt;

            double peak = 0.0;
            for (const auto& v : buf) peak = std::max(peak, std::abs(v));
            // the prediction takes over where the division starts amplifying
            // noise appreciably, not at the end of the training window
            std::size_t anchor = keep;
            if (cfg_.lp_seed_floor > cfg_.divisor_floor) {
                anchor = std::min(keep, std::max(divisor_window(gamma, cfg_.lp_seed_floor),
                                                 order + 1));
            }
            buf.resize(anchor);
            const std::size_t want =
                (cfg_.extrapolation_length > 0) ? cfg_.extrapolation_length : count_;
            const std::size_t ext = std::min(want + (keep - anchor), half_ + 1 - anchor);
            buf.reserve(anchor + ext);
            burg_extrapolate(buf, model->coeffs[order - 1], ext);
            buf.resize(half_ + 1, fft::cdouble(0.0));
            for (std::size_t j = anchor; j <= half_; ++j) {
                if (!std::isfinite(buf[j].real()) || !std::isfinite(buf[j].imag()) ||
                    std::abs(buf[j]) > 1e8 * (peak + 1e-300))
                    return std::nullopt;
            }
        }
        buf[0] = {buf[0].real(), 0.0};
        buf[half_] = {buf[half_].real(), 0.0};
        auto da = fft::irfft(buf, pad_len_);
        da.resize(count_);
        return da;
    }

    BurgModel burg_model(double gamma) const {
        const std::size_t keep = keep_length(gamma);
        if (keep >= half_ + 1) return BurgModel{};
        std::vector<fft::cdouble> x(keep);
        const double scale = 2.0 * std::numbers::pi * gamma / (static_cast<double>(pad_len_) * grid_.step());
        for (std::size_t j = 0; j < keep; ++j)
            x[j] = spectrum_fft_[j] * std::exp(scale * static_cast<double>(j));
        return burg_estimate(x, std::min(cfg_.max_filter_length - 1, keep - 2));
    }

private:
    WavenumberGrid grid_;
    std::size_t count_;
    NarrowingConfig cfg_;
    std::size_t pad_len_ = 0;
    std::size_t half_ = 0;
    std::size_t noise_cap_ = 0;
    std::vector<fft::cdouble> spectrum_fft_;
};

/// Standalone FSD + linear prediction for one candidate.
inline std::optional<std::vector<double>> fsd_linear_predict(const std::vector<double>& spectrum,
                                                             const WavenumberGrid& grid,
                                                             double gamma, std::size_t n_fir,
                                                             std::size_t extrap_len,
                                                             const NarrowingConfig& cfg_in = {}) {
    NarrowingConfig cfg = cfg_in;
    if (cfg.width_grid.empty()) cfg.width_grid = {gamma};
    cfg.extrapolation_length = extrap_len;
    if (!(gamma > 0.0)) throw std::invalid_argument("fsd_linear_predict: gamma must be > 0");
    FsdWorkspace ws(spectrum, grid, cfg);
    return ws.delta_approximation(gamma, n_fir);
}

/// d, d_C, c_n, C_we, f_c for one candidate. Throws when the positive part of
/// D_A carries no mass (c_n undefined).
inline CandidateSolution score_candidate(const std::vector<double>& spectrum,
                                         const WavenumberGrid& grid,
                                         const std::vector<double>& delta_approx, double gamma,
                                         std::size_t n_fir, int cwe_order) {
    const std::size_t n = spectrum.size();
    if (delta_approx.size() != n)
        throw std::invalid_argument("score_candidate: length mismatch");
    for (double v : delta_approx)
        if (!std::isfinite(v)) throw std::invalid_argument("score_candidate: non-finite D_A");

    const std::size_t pad = fft::next_pow2(3 * n);
    const auto kspec = narrowing_detail::lorentz_kernel_spectrum(n, grid.step(), gamma, pad);

    CandidateSolution c;
    c.gamma = gamma;
    c.n_fir = n_fir;
    c.delta_approx = delta_approx;

    const auto recon = narrowing_detail::convolve_with_kernel(delta_approx, kspec, n, grid.step(), pad);
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = spectrum[k] - recon[k];
        d += r * r;
    }
    c.residual = d;

    std::vector<double> pos(n, 0.0);
    double sum_all = 0.0, sum_pos = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum_all += delta_approx[k];
        if (delta_approx[k] > 0.0) {
            pos[k] = delta_approx[k];
            sum_pos += delta_approx[k];
        }
    }
    if (!(sum_pos > 0.0))
        throw std::invalid_argument("score_candidate: positive part of D_A carries no mass");
    c.normalization = sum_all / sum_pos;
    for (auto& v : pos) v *= c.normalization;
    const auto recon_c = narrowing_detail::convolve_with_kernel(pos, kspec, n, grid.step(), pad);
    double dc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = spectrum[k] - recon_c[k];
        dc += r * r;
    }
    c.constrained_residual = dc;
    c.energy_concentration = energy_concentration(delta_approx, cwe_order);
    c.filter_criterion = c.residual + c.constrained_residual;
    return c;
}

/// Intersection filtering, d-sorting, and the Eq-20 prefix scan.
inline NarrowedSpectrum select_and_average(const std::vector<CandidateSolution>& candidates,
                                           const NarrowingConfig& cfg,
                                           const std::vector<double>& spectrum,
                                           const WavenumberGrid& grid) {
    if (candidates.empty())
        throw std::invalid_argument("select_and_average: empty candidate list");
    const std::size_t n = candidates.size();
    const std::size_t K = spectrum.size();

    auto lex_less = [&](std::size_t a, std::size_t b) {
        if (candidates[a].gamma != candidates[b].gamma) return candidates[a].gamma < candidates[b].gamma;
        return candidates[a].n_fir < candidates[b].n_fir;
    };

    std::vector<std::size_t> by_we(n), by_fc(n);
    std::iota(by_we.begin(), by_we.end(), 0);
    std::iota(by_fc.begin(), by_fc.end(), 0);
    std::sort(by_we.begin(), by_we.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].energy_concentration != candidates[b].energy_concentration)
            return candidates[a].energy_concentration > candidates[b].energy_concentration;
        return lex_less(a, b);
    });
    std::sort(by_fc.begin(), by_fc.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].filter_criterion != candidates[b].filter_criterion)
            return candidates[a].filter_criterion < candidates[b].filter_criterion;
        return lex_less(a, b);
    });

    const std::size_t n_we = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(cfg.energy_percentage * static_cast<double>(n))));
    std::vector<bool> in_we(n, false);
    for (std::size_t i = 0; i < n_we; ++i) in_we[by_we[i]] = true;

    double p_fc = cfg.criterion_percentage;
    std::vector<std::size_t> inter;
    bool warning = false;
    for (;;) {
        const std::size_t n_fc = std::min<std::size_t>(
            n, static_cast<std::size_t>(std::ceil(p_fc * static_cast<double>(n))));
        inter.clear();
        for (std::size_t i = 0; i < n_fc; ++i)
            if (in_we[by_fc[i]]) inter.push_back(by_fc[i]);
        if (inter.size() >= cfg.min_intersection || p_fc >= 1.0) break;
        p_fc += cfg.criterion_increment;
    }
    if (inter.size() < cfg.min_intersection) {
        // p_fc exhausted at 100%: fall back to the single best candidate by d
        warning = true;
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (candidates[i].residual < candidates[best].residual ||
                (candidates[i].residual == candidates[best].residual && lex_less(i, best)))
                best = i;
        inter.assign(1, best);
    }

    std::sort(inter.begin(), inter.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].residual != candidates[b].residual)
            return candidates[a].residual < candidates[b].residual;
        return lex_less(a, b);
    });

    // prefix scan of d_M with running reconstruction sums
    const std::size_t pad = fft::next_pow2(3 * K);
    std::vector<double> run(K, 0.0);
    double best_dm = 0.0;
    std::size_t best_m = 0;
    std::vector<std::vector<double>> recons;
    recons.reserve(inter.size());
    for (std::size_t m = 0; m < inter.size(); ++m) {
        const auto& c = candidates[inter[m]];
        const auto kspec = narrowing_detail::lorentz_kernel_spectrum(K, grid.step(), c.gamma, pad);
        auto recon = narrowing_detail::convolve_with_kernel(c.delta_approx, kspec, K, grid.step(), pad);
        for (std::size_t k = 0; k < K; ++k) run[k] += recon[k];
        recons.push_back(std::move(recon));
        double dm = 0.0;
        const double inv = 1.0 / static_cast<double>(m + 1);
        for (std::size_t k = 0; k < K; ++k) {
            const double r = spectrum[k] - run[k] * inv;
            dm += r * r;
        }
        if (m == 0 || dm < best_dm) {
            best_dm = dm;
            best_m = m + 1;
        }
    }

    NarrowedSpectrum out;
    out.chosen_m = best_m;
    out.intersection_size = inter.size();
    out.residual_norm = best_dm;
    out.warning = warning;

    const double fwhm = (cfg.smoothing_fwhm > 0.0) ? cfg.smoothing_fwhm
                                                   : cfg.smoothing_fwhm_channels * grid.step();
    const auto gk = narrowing_detail::gaussian_kernel(grid.step(), fwhm);
    out.narrowed.assign(K, 0.0);
    out.smooth_model.assign(K, 0.0);
    const double inv_m = 1.0 / static_cast<double>(best_m);
    for (std::size_t m = 0; m < best_m; ++m) {
        const auto& c = candidates[inter[m]];
        const auto sm = narrowing_detail::smooth(c.delta_approx, gk, grid.step());
        for (std::size_t k = 0; k < K; ++k) {
            out.narrowed[k] += sm[k] * inv_m;
            out.smooth_model[k] += recons[m][k] * inv_m;
        }
        out.selected.push_back(c);
    }
    out.residual.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.residual[k] = spectrum[k] - out.smooth_model[k];
    return out;
}

/// Full Algorithm-2 sweep over all (gamma_m, N_FIR) pairs, then selection,
/// averaging, and smoothing. `threads` > 1 parallelizes over gamma values;
/// results are identical for any thread count.
inline NarrowedSpectrum narrow(const std::vector<double>& spectrum, const WavenumberGrid& grid,
                               const NarrowingConfig& cfg, std::size_t threads = 1) {
    cfg.validate();
    FsdWorkspace ws(spectrum, grid, cfg);
    const std::size_t ng = cfg.width_grid.size();
    const std::size_t nf = cfg.max_filter_length;

    std::vector<std::vector<std::optional<CandidateSolution>>> slots(
        ng, std::vector<std::optional<CandidateSolution>>(nf));

    auto sweep_gamma = [&](std::size_t gi) {
        const double gamma = cfg.width_grid[gi];
        const BurgModel model = ws.burg_model(gamma);
        const std::size_t pad = fft::next_pow2(3 * spectrum.size());
        const auto kspec =
            narrowing_detail::lorentz_kernel_spectrum(spectrum.size(), grid.step(), gamma, pad);
        for (std::size_t f = 1; f <= nf; ++f) {
            auto da = ws.delta_approximation(gamma, f, &model);
            if (!da) continue;
            CandidateSolution c;
            c.gamma = gamma;
            c.n_fir = f;
            c.delta_approx = std::move(*da);

            const auto recon = narrowing_detail::convolve_with_kernel(c.delta_approx, kspec,
                                                                      spectrum.size(), grid.step(), pad);
            double d = 0.0;
            for (std::size_t k = 0; k < spectrum.size(); ++k) {
                const double r = spectrum[k] - recon[k];
                d += r * r;
            }
            c.residual = d;
            std::vector<double> pos(spectrum.size(), 0.0);
            double sum_all = 0.0, sum_pos = 0.0;
            for (std::size_t k = 0; k < spectrum.size(); ++k) {
                sum_all += c.delta_approx[k];
                if (c.delta_approx[k] > 0.0) {
                    pos[k] = c.delta_approx[k];
                    sum_pos += c.delta_approx[k];
                }
            }
            if (!(sum_pos > 0.0)) continue; // c_n undefined: rejected
            c.normalization = sum_all / sum_pos;
            for (auto& v : pos) v *= c.normalization;
            const auto recon_c = narrowing_detail::convolve_with_kernel(pos, kspec, spectrum.size(),
                                                                        grid.step(), pad);
            double dc = 0.0;
            for (std::size_t k = 0; k < spectrum.size(); ++k) {
                const double r = spectrum[k] - recon_c[k];
                dc += r * r;
            }
            c.constrained_residual = dc;
            c.energy_concentration = energy_concentration(c.delta_approx, cfg.cwe_order);
            c.filter_criterion = c.residual + c.constrained_residual;
            slots[gi][f - 1] = std::move(c);
        }
    };

    if (threads <= 1 || ng <= 1) {
        for (std::size_t gi = 0; gi < ng; ++gi) sweep_gamma(gi);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const std::size_t nt = std::min(threads, ng);
        pool.reserve(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t gi = next.fetch_add(1);
                    if (gi >= ng) return;
                    sweep_gamma(gi);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<CandidateSolution> cands;
    cands.reserve(ng * nf);
    for (auto& row : slots)
        for (auto& c : row)
            if (c) cands.push_back(std::move(*c));

    if (cands.empty()) {
        NarrowedSpectrum out;
        out.warning = true;
        out.swept = ws.swept_pairs();
        out.narrowed.assign(spectrum.size(), 0.0);
        out.smooth_model.assign(spectrum.size(), 0.0);
        out.residual = spectrum;
        return out;
    }
    NarrowedSpectrum out = select_and_average(cands, cfg, spectrum, grid);
    out.swept = ws.swept_pairs();
    return out;
}

} // namespace carsinfer
