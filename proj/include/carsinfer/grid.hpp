#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace carsinfer {

/// Uniform wavenumber axis nu_k = start + k*h, k = 0..count-1.
class WavenumberGrid {
public:
    WavenumberGrid(double start, double step, std::size_t count)
        : start_(start), step_(step), count_(count) {
        if (!(std::isfinite(start) && std::isfinite(step)))
            throw std::invalid_argument("WavenumberGrid: non-finite start/step");
        if (!(step > 0.0))
            throw std::invalid_argument("WavenumberGrid: step must be > 0");
        if (count < 8)
            throw std::invalid_argument("WavenumberGrid: need at least 8 channels");
    }

    double start() const { return start_; }
    double step() const { return step_; }
    std::size_t count() const { return count_; }
    double wavenumber(std::size_t k) const { return start_ + static_cast<double>(k) * step_; }
    double span() const { return step_ * static_cast<double>(count_ - 1); }

    std::vector<double> axis() const {
        std::vector<double> nu(count_);
        for (std::size_t k = 0; k < count_; ++k) nu[k] = wavenumber(k);
        return nu;
    }

    friend bool operator==(const WavenumberGrid& a, const WavenumberGrid& b) {
        return a.start_ == b.start_ && a.step_ == b.step_ && a.count_ == b.count_;
    }

private:
    double start_;
    double step_;
    std::size_t count_;
};

} // namespace carsinfer
