#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "carsinfer/grid.hpp"
#include "carsinfer/model_types.hpp"
#include "carsinfer/smc.hpp"

namespace carsinfer::io {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: doubles round-trip losslessly through text.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct SpectrumFile {
    std::vector<double> wavenumbers;
    std::vector<double> intensities;

    WavenumberGrid grid() const {
        if (wavenumbers.size() < 8) throw FormatError("spectrum: fewer than 8 channels");
        const double h = wavenumbers[1] - wavenumbers[0];
        if (!(h > 0.0)) throw FormatError("spectrum: wavenumbers not increasing");
        for (std::size_t k = 1; k < wavenumbers.size(); ++k) {
            const double d = wavenumbers[k] - wavenumbers[k - 1];
            if (std::abs(d - h) > 1e-6 * h)
                throw FormatError("spectrum: wavenumber axis is not uniform");
        }
        return WavenumberGrid(wavenumbers[0], h, wavenumbers.size());
    }
};

inline void write_spectrum_csv(const std::string& path, const WavenumberGrid& grid,
                               const std::vector<double>& values) {
    if (values.size() != grid.count()) throw FormatError("write_spectrum_csv: length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "wavenumber_cm-1,intensity\n";
    for (std::size_t k = 0; k < grid.count(); ++k)
        out << format_double(grid.wavenumber(k)) << ',' << format_double(values[k]) << '\n';
    if (!out) throw FormatError("write failed: " + path);
}

inline SpectrumFile read_spectrum_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty spectrum file: " + path);
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "wavenumber_cm-1,intensity")
        throw FormatError("bad spectrum header in " + path + ": \"" + line + "\"");
    SpectrumFile f;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected two columns");
        try {
            std::size_t used = 0;
            const double nu = std::stod(line.substr(0, comma), &used);
            const double y = std::stod(line.substr(comma + 1), &used);
            f.wavenumbers.push_back(nu);
            f.intensities.push_back(y);
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    if (f.wavenumbers.empty()) throw FormatError("no samples in " + path);
    return f;
}

/// One row per draw, columns p,a_1,nu_1,sigma_1,gamma_1,...
inline void write_posterior_csv(const std::string& path, const std::vector<ModelParams>& draws) {
    if (draws.empty()) throw FormatError("write_posterior_csv: no draws");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << 'p';
    for (std::size_t l = 1; l <= draws.front().lines.size(); ++l)
        out << ",a_" << l << ",nu_" << l << ",sigma_" << l << ",gamma_" << l;
    out << '\n';
    for (const auto& d : draws) {
        out << format_double(d.background_level);
        for (const auto& line : d.lines)
            out << ',' << format_double(line.amplitude) << ',' << format_double(line.location)
                << ',' << format_double(line.sigma) << ',' << format_double(line.gamma);
        out << '\n';
    }
    if (!out) throw FormatError("write failed: " + path);
}

inline std::vector<ModelParams> read_posterior_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty posterior file: " + path);
    if (line.size() && line.back() == '\r') line.pop_back();
    std::size_t cols = 1;
    for (char c : line)
        if (c == ',') ++cols;
    if (cols < 5 || (cols - 1) % 4 != 0) throw FormatError("bad posterior header in " + path);
    const std::size_t nlines = (cols - 1) / 4;
    std::vector<ModelParams> draws;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
            }
        }
        if (vals.size() != cols)
            throw FormatError(path + ":" + std::to_string(lineno) + ": wrong column count");
        ModelParams p;
        p.background_level = vals[0];
        for (std::size_t l = 0; l < nlines; ++l) {
            VoigtLine v;
            v.amplitude = vals[1 + 4 * l];
            v.location = vals[2 + 4 * l];
            v.sigma = vals[3 + 4 * l];
            v.gamma = vals[4 + 4 * l];
            p.lines.push_back(v);
        }
        draws.push_back(std::move(p));
    }
    if (draws.empty()) throw FormatError("no draws in " + path);
    return draws;
}

/// Long-format bands: wavenumber,lower,median,upper,series with series in
/// {y, f, S, eps_m, V_N, line_01, ...}.
inline void write_bands_csv(const std::string& path, const WavenumberGrid& grid,
                            const PosteriorSummary& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "wavenumber,lower,median,upper,series\n";
    auto emit = [&](const Band& band, const std::string& name) {
        for (std::size_t k = 0; k < grid.count(); ++k)
            out << format_double(grid.wavenumber(k)) << ',' << format_double(band.lower[k]) << ','
                << format_double(band.median[k]) << ',' << format_double(band.upper[k]) << ','
                << name << '\n';
    };
    emit(summary.y, "y");
    emit(summary.f, "f");
    emit(summary.s, "S");
    emit(summary.eps_m, "eps_m");
    emit(summary.v_n, "V_N");
    for (std::size_t l = 0; l < summary.lines.size(); ++l) {
        char name[16];
        std::snprintf(name, sizeof(name), "line_%02zu", l + 1);
        emit(summary.lines[l], name);
    }
    if (!out) throw FormatError("write failed: " + path);
}

} // namespace carsinfer::io
