#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "carsinfer/grid.hpp"
#include "carsinfer/model_types.hpp"
#include "carsinfer/spectral_model.hpp"

namespace carsinfer {

struct PeakSegment {
    std::size_t first = 0;    // inclusive channel range
    std::size_t last = 0;     // inclusive
    double area = 0.0;        // h * sum over the segment
    double mean = 0.0;        // intensity-weighted first moment (cm^-1)
    double variance = 0.0;    // second central moment (cm^-2)
    double peak_height = 0.0; // max clipped intensity inside the segment
};

struct SegmentationConfig {
    double prominence = 0.02;          // relative to the global maximum
    std::size_t min_width = 3;         // channels
    double clip_fraction = 1e-3;       // |x| below this * max is zeroed
    std::vector<double> manual_boundaries; // optional split locations (cm^-1)
};

/// Splits a line-narrowed spectrum into per-peak segments and integrates
/// moments. Values with |x| < clip*max are zeroed first; remaining negatives
/// carry no peak mass and are clamped.
inline std::vector<PeakSegment> segment_peaks(const std::vector<double>& narrowed,
                                              const WavenumberGrid& grid,
                                              const SegmentationConfig& cfg = {}) {
    if (narrowed.size() != grid.count())
        throw std::invalid_argument("segment_peaks: length mismatch");
    const std::size_t n = narrowed.size();
    double mx = 0.0;
    for (double v : narrowed) mx = std::max(mx, v);
    if (!(mx > 0.0)) throw std::invalid_argument("segment_peaks: no positive signal");

    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = narrowed[k];
        if (std::abs(v) < cfg.clip_fraction * mx) v = 0.0;
        x[k] = std::max(v, 0.0);
    }

    // segment boundaries: zero gaps always split; inside a positive run,
    // split at prominent local minima between accepted peaks
    std::vector<std::size_t> cuts; // index of first channel of a new segment
    const double prom = cfg.prominence * mx;

    std::size_t run_start = 0;
    bool in_run = false;
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t k = 0; k < n; ++k) {
        if (x[k] > 0.0 && !in_run) {
            in_run = true;
            run_start = k;
        } else if (x[k] == 0.0 && in_run) {
            in_run = false;
            runs.emplace_back(run_start, k - 1);
        }
    }
    if (in_run) runs.emplace_back(run_start, n - 1);
    if (runs.empty()) throw std::invalid_argument("segment_peaks: no segment found");

    std::vector<PeakSegment> segments;
    for (auto [a, b] : runs) {
        // local maxima with height >= prom inside [a, b]
        std::vector<std::size_t> peaks;
        for (std::size_t k = a; k <= b; ++k) {
            const double left = (k > a) ? x[k - 1] : 0.0;
            const double right = (k < b) ? x[k + 1] : 0.0;
            if (x[k] >= prom && x[k] >= left && x[k] > right) peaks.push_back(k);
        }
        std::vector<std::size_t> splits;
        for (std::size_t pi = 1; pi < peaks.size(); ++pi) {
            std::size_t lo = peaks[pi - 1], hi = peaks[pi];
            std::size_t vmin = lo;
            for (std::size_t k = lo; k <= hi; ++k)
                if (x[k] < x[vmin]) vmin = k;
            const double side = std::min(x[peaks[pi - 1]], x[peaks[pi]]);
            if (side - x[vmin] >= prom) splits.push_back(vmin);
        }
        std::vector<std::size_t> starts{a};
        for (std::size_t s : splits) starts.push_back(s + 1);
        starts.push_back(b + 1);
        for (std::size_t si = 0; si + 1 < starts.size(); ++si) {
            PeakSegment seg;
            seg.first = starts[si];
            seg.last = starts[si + 1] - 1;
            segments.push_back(seg);
        }
    }

    // manual boundary overrides: split any segment containing a boundary
    for (double bnu : cfg.manual_boundaries) {
        const double pos = (bnu - grid.start()) / grid.step();
        if (pos <= 0 || pos >= static_cast<double>(n - 1)) continue;
        const std::size_t cut = static_cast<std::size_t>(std::llround(pos));
        std::vector<PeakSegment> out;
        for (auto& seg : segments) {
            if (cut > seg.first && cut <= seg.last) {
                PeakSegment a = seg, b = seg;
                a.last = cut - 1;
                b.first = cut;
                out.push_back(a);
                out.push_back(b);
            } else {
                out.push_back(seg);
            }
        }
        segments = std::move(out);
    }

    // merge undersized segments into a contiguous neighbor (same positive
    // run); isolated undersized runs stay, so the segmentation remains a
    // partition of the positive support
    for (;;) {
        bool merged = false;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (segments[i].last - segments[i].first + 1 >= cfg.min_width) continue;
            const bool left_touches = i > 0 && segments[i - 1].last + 1 == segments[i].first;
            const bool right_touches =
                i + 1 < segments.size() && segments[i].last + 1 == segments[i + 1].first;
            if (!left_touches && !right_touches) continue;
            std::size_t j;
            if (left_touches && right_touches)
                j = (x[segments[i - 1].last] >= x[segments[i + 1].first]) ? i - 1 : i + 1;
            else
                j = left_touches ? i - 1 : i + 1;
            const std::size_t lo = std::min(i, j), hi = std::max(i, j);
            segments[lo].last = segments[hi].last;
            segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(hi));
            merged = true;
            break;
        }
        if (!merged) break;
    }

    // moments
    const double h = grid.step();
    std::vector<PeakSegment> out;
    for (auto& seg : segments) {
        double s0 = 0.0, s1 = 0.0, height = 0.0;
        for (std::size_t k = seg.first; k <= seg.last; ++k) {
            s0 += x[k];
            s1 += x[k] * grid.wavenumber(k);
            height = std::max(height, x[k]);
        }
        if (!(s0 > 0.0)) continue;
        seg.area = s0 * h;
        seg.mean = s1 / s0;
        seg.peak_height = height;
        double s2 = 0.0;
        for (std::size_t k = seg.first; k <= seg.last; ++k) {
            const double d = grid.wavenumber(k) - seg.mean;
            s2 += x[k] * d * d;
        }
        seg.variance = s2 / s0;
        out.push_back(seg);
    }
    if (out.empty()) throw std::invalid_argument("segment_peaks: no segment found");
    return out;
}

struct NormalMoments {
    double mean = 0.0;
    double variance = 1.0;
};

/// pi_0(p, theta): per-line location and amplitude priors, shared log-normal
/// width priors, uniform background prior.
struct PriorSpec {
    std::vector<NormalMoments> locations;  // per line
    std::vector<double> amplitude_means;   // per line; sd = mean/4, truncated to a > 0
    NormalMoments log_gamma;               // shared
    NormalMoments log_sigma;               // shared
    double background_min = 1.0;
    double background_max = 1.0;
    bool width_fallback_used = false;

    std::size_t line_count() const { return locations.size(); }

    void validate() const {
        if (locations.empty() || locations.size() != amplitude_means.size())
            throw std::invalid_argument("PriorSpec: inconsistent line priors");
        for (const auto& l : locations)
            if (!(l.variance > 0.0)) throw std::invalid_argument("PriorSpec: location variance <= 0");
        for (double a : amplitude_means)
            if (!(a > 0.0)) throw std::invalid_argument("PriorSpec: amplitude mean <= 0");
        if (!(log_gamma.variance > 0.0) || !(log_sigma.variance > 0.0))
            throw std::invalid_argument("PriorSpec: width variance <= 0");
        if (!(background_min >= 1.0) || !(background_max > background_min))
            throw std::invalid_argument("PriorSpec: invalid background range");
    }
};

struct PriorBuildConfig {
    double fallback_log_width_variance = 0.25; // used when the width set degenerates
    double background_min = 1.0;
    double background_max = 0.0;          // 0 = use J
    double perceivable_fraction = 0.33;   // segments below this fraction of the
                                          // largest segment area carry no prior line
    double min_location_variance = 0.25;  // floor for near-delta segments (cm^-2)
    double merge_distance_factor = 1.0;   // segments closer than this times the
                                          // typical width collapse into one line
};

/// Width priors from the gamma values of the selected candidates, locations
/// and amplitudes from the perceivable peak segments. The log-sigma prior
/// shares the log-gamma variance with the mean shifted so the two FWHM
/// priors coincide. Segments closer together than the typical selected width
/// cannot be distinct lines at the narrowing resolution and are merged.
inline PriorSpec build_priors(const std::vector<PeakSegment>& segments,
                              const std::vector<double>& selected_gammas, std::size_t levels,
                              const PriorBuildConfig& cfg = {}) {
    if (segments.empty()) throw std::invalid_argument("build_priors: no segments");
    if (selected_gammas.empty()) throw std::invalid_argument("build_priors: empty candidate set");

    double mu = 0.0;
    for (double g : selected_gammas) mu += std::log(g);
    mu /= static_cast<double>(selected_gammas.size());
    double var = 0.0;
    if (selected_gammas.size() >= 2) {
        for (double g : selected_gammas) {
            const double d = std::log(g) - mu;
            var += d * d;
        }
        var /= static_cast<double>(selected_gammas.size() - 1);
    }

    double largest = 0.0;
    for (const auto& seg : segments) largest = std::max(largest, seg.area);
    std::vector<PeakSegment> kept;
    for (const auto& seg : segments)
        if (seg.area >= cfg.perceivable_fraction * largest) kept.push_back(seg);
    if (kept.empty()) throw std::invalid_argument("build_priors: no perceivable segment");
    std::sort(kept.begin(), kept.end(),
              [](const PeakSegment& a, const PeakSegment& b) { return a.mean < b.mean; });

    const double merge_dist = cfg.merge_distance_factor * std::exp(mu);
    std::vector<PeakSegment> merged;
    for (const auto& seg : kept) {
        if (!merged.empty() && seg.mean - merged.back().mean < merge_dist) {
            PeakSegment& prev = merged.back();
            const double wa = prev.area, wb = seg.area;
            const double mean = (wa * prev.mean + wb * seg.mean) / (wa + wb);
            const double second = wa * (prev.variance + prev.mean * prev.mean) +
                                  wb * (seg.variance + seg.mean * seg.mean);
            prev.variance = second / (wa + wb) - mean * mean;
            prev.mean = mean;
            prev.area = wa + wb;
            prev.last = seg.last;
            prev.peak_height = std::max(prev.peak_height, seg.peak_height);
        } else {
            merged.push_back(seg);
        }
    }

    PriorSpec spec;
    for (const auto& seg : merged) {
        spec.locations.push_back({seg.mean, std::max(seg.variance, cfg.min_location_variance)});
        spec.amplitude_means.push_back(seg.area);
    }
    if (!(var > 0.0)) {
        var = cfg.fallback_log_width_variance;
        spec.width_fallback_used = true;
    }
    spec.log_gamma = {mu, var};
    // FWHM_Gauss = 2 sqrt(2 log 2) sigma, FWHM_Lorentz = 2 gamma
    spec.log_sigma = {mu - std::log(std::sqrt(2.0 * std::log(2.0))), var};

    spec.background_min = cfg.background_min;
    spec.background_max = (cfg.background_max > 0.0) ? cfg.background_max
                                                     : static_cast<double>(levels);
    spec.validate();
    return spec;
}

/// Maps a smooth Raman estimate through the CARS model and returns the
/// sample variance of the residuals over the non-masked channels.
inline double estimate_noise_variance(const MeasuredSpectrum& measured,
                                      const std::vector<double>& smooth_raman, double p_hat,
                                      const ErrorFunctionEngine& errfun, std::size_t edge_mask = 16,
                                      double variance_floor = 1e-12) {
    if (smooth_raman.size() != measured.grid.count())
        throw std::invalid_argument("estimate_noise_variance: length mismatch");
    const std::size_t n = measured.grid.count();
    if (n < 2 * edge_mask + 16)
        throw std::invalid_argument("estimate_noise_variance: fewer than 16 usable channels");

    std::vector<double> hv = hilbert_transform(smooth_raman);
    const double chi_nr = std::exp(0.5 * measured.nr_level);
    std::vector<double> eps = errfun.modulating_error(p_hat);
    double sum = 0.0, sum2 = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = edge_mask; k < n - edge_mask; ++k) {
        const double re = chi_nr - hv[k];
        const double s = re * re + smooth_raman[k] * smooth_raman[k];
        const double r = measured.values[k] - eps[k] * s;
        sum += r;
        sum2 += r * r;
        ++cnt;
    }
    const double mean = sum / static_cast<double>(cnt);
    double var = (sum2 - static_cast<double>(cnt) * mean * mean) / static_cast<double>(cnt - 1);
    return std::max(var, variance_floor);
}

inline double normal_log_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Independent draw from the prior; widths are sampled in log-space and
/// amplitudes rejection-sampled to a > 0. Lines come out sorted by location.
template <class Rng>
ModelParams sample_prior(const PriorSpec& spec, Rng& rng) {
    spec.validate();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(spec.background_min, spec.background_max);
    ModelParams params;
    for (std::size_t i = 0; i < spec.line_count(); ++i) {
        VoigtLine line;
        line.location = spec.locations[i].mean + std::sqrt(spec.locations[i].variance) * gauss(rng);
        line.gamma = std::exp(spec.log_gamma.mean + std::sqrt(spec.log_gamma.variance) * gauss(rng));
        line.sigma = std::exp(spec.log_sigma.mean + std::sqrt(spec.log_sigma.variance) * gauss(rng));
        const double mu = spec.amplitude_means[i];
        const double sd = mu / 4.0;
        double a = mu + sd * gauss(rng);
        while (!(a > 0.0)) a = mu + sd * gauss(rng);
        line.amplitude = a;
        params.lines.push_back(line);
    }
    params.background_level = unif(rng);
    params.sort_lines();
    return params;
}

/// Sum of component log-densities; -inf outside the support.
inline double log_prior_density(const PriorSpec& spec, const ModelParams& params) {
    spec.validate();
    if (params.lines.size() != spec.line_count())
        return -std::numeric_limits<double>::infinity();
    const double p = params.background_level;
    if (!(p > spec.background_min && p < spec.background_max))
        return -std::numeric_limits<double>::infinity();
    double lp = -std::log(spec.background_max - spec.background_min);
    for (std::size_t i = 0; i < spec.line_count(); ++i) {
        const auto& line = params.lines[i];
        if (!(line.amplitude > 0.0 && line.sigma > 0.0 && line.gamma > 0.0))
            return -std::numeric_limits<double>::infinity();
        lp += normal_log_pdf(line.location, spec.locations[i].mean, spec.locations[i].variance);
        // log-normal densities include the 1/x Jacobian
        lp += normal_log_pdf(std::log(line.gamma), spec.log_gamma.mean, spec.log_gamma.variance) -
              std::log(line.gamma);
        lp += normal_log_pdf(std::log(line.sigma), spec.log_sigma.mean, spec.log_sigma.variance) -
              std::log(line.sigma);
        const double mu = spec.amplitude_means[i];
        const double sd = mu / 4.0;
        lp += normal_log_pdf(line.amplitude, mu, sd * sd) - std::log(standard_normal_cdf(mu / sd));
    }
    return lp;
}

/// Bootstrap Raman estimate: flatten the measurement with eps_m(p_hat), then
/// recover the imaginary part of the resonant susceptibility through the
/// Hilbert phase of the error-corrected modulus.
inline std::vector<double> extract_raman_estimate(const MeasuredSpectrum& measured, double p_hat,
                                                  const ErrorFunctionEngine& errfun) {
    const std::size_t n = measured.grid.count();
    std::vector<double> eps = errfun.modulating_error(p_hat);
    std::vector<double> s_hat(n);
    double mx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        s_hat[k] = measured.values[k] / eps[k];
        mx = std::max(mx, s_hat[k]);
    }
    if (!(mx > 0.0)) throw std::invalid_argument("extract_raman_estimate: non-positive spectrum");
    const double floor_v = 1e-12 * mx;
    std::vector<double> halflog(n);
    for (std::size_t k = 0; k < n; ++k) halflog[k] = 0.5 * std::log(std::max(s_hat[k], floor_v));
    // center on the baseline (log of the non-resonant amplitude) so the
    // padded transform sees a signal that decays at the window edges
    std::vector<double> sorted(halflog);
    std::sort(sorted.begin(), sorted.end());
    const double baseline = sorted[sorted.size() / 2];
    for (auto& v : halflog) v -= baseline;
    std::vector<double> phase = hilbert_transform(halflog);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = std::sqrt(std::max(s_hat[k], floor_v)) * std::sin(phase[k]);
    return out;
}

} // namespace carsinfer
