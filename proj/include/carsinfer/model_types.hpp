#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "carsinfer/grid.hpp"

namespace carsinfer {

/// One Voigt component: unit-area Gaussian(sigma) convolved with
/// unit-area Lorentzian(gamma), scaled by the area parameter `amplitude`.
struct VoigtLine {
    double amplitude = 0.0; // integrated area, > 0
    double location = 0.0;  // line center, cm^-1
    double sigma = 0.0;     // Gaussian scale, >= 0
    double gamma = 0.0;     // Lorentzian half-width, >= 0

    void validate() const {
        if (!(std::isfinite(amplitude) && std::isfinite(location) && std::isfinite(sigma) &&
              std::isfinite(gamma)))
            throw std::invalid_argument("VoigtLine: non-finite parameter");
        if (!(amplitude > 0.0)) throw std::invalid_argument("VoigtLine: amplitude must be > 0");
        if (sigma < 0.0 || gamma < 0.0)
            throw std::invalid_argument("VoigtLine: negative width");
        if (sigma == 0.0 && gamma == 0.0)
            throw std::invalid_argument("VoigtLine: sigma and gamma cannot both be zero");
    }
};

/// Full inference state: N lines plus the background interpolation level p.
/// Lines are kept sorted by location for identifiability; dimension is 4N+1.
struct ModelParams {
    std::vector<VoigtLine> lines;
    double background_level = 1.0; // p in [1, J]

    std::size_t dimension() const { return 4 * lines.size() + 1; }

    void sort_lines() {
        std::sort(lines.begin(), lines.end(),
                  [](const VoigtLine& a, const VoigtLine& b) { return a.location < b.location; });
    }

    bool lines_sorted() const {
        return std::is_sorted(lines.begin(), lines.end(), [](const VoigtLine& a, const VoigtLine& b) {
            return a.location < b.location;
        });
    }

    void validate() const {
        if (lines.empty()) throw std::invalid_argument("ModelParams: need at least one line");
        for (const auto& l : lines) l.validate();
        if (!std::isfinite(background_level))
            throw std::invalid_argument("ModelParams: non-finite background level");
    }
};

/// Observed spectrum with known homoscedastic noise variance and the
/// constant non-resonant log-level A_J.
struct MeasuredSpectrum {
    WavenumberGrid grid;
    std::vector<double> values;   // y_k, length grid.count()
    double noise_variance = 0.0;  // sigma_eps^2 > 0
    double nr_level = 0.0;        // A_J

    MeasuredSpectrum(WavenumberGrid g, std::vector<double> y, double sigma2, double a_j)
        : grid(g), values(std::move(y)), noise_variance(sigma2), nr_level(a_j) {
        if (values.size() != grid.count())
            throw std::invalid_argument("MeasuredSpectrum: value/grid length mismatch");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("MeasuredSpectrum: non-finite value");
        if (!(noise_variance > 0.0))
            throw std::invalid_argument("MeasuredSpectrum: noise variance must be > 0");
        if (!std::isfinite(nr_level))
            throw std::invalid_argument("MeasuredSpectrum: non-finite A_J");
    }
};

} // namespace carsinfer
