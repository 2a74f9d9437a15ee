#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "carsinfer/config.hpp"
#include "carsinfer/pipeline.hpp"

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string input_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool quiet = false;
};

carsinfer::PipelineConfig resolve_config(const GlobalOptions& opts) {
    carsinfer::PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = carsinfer::load_config(opts.config_path);
    if (const char* env = std::getenv("CARS_INFER_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v > 0) cfg.threads = static_cast<std::size_t>(v);
    }
    if (opts.seed) cfg.seed = *opts.seed;       // flag beats config
    if (opts.threads) cfg.threads = *opts.threads; // flag beats environment
    return cfg;
}

void stage_log(const GlobalOptions& opts, const std::string& msg) {
    if (!opts.quiet) std::cout << msg << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian quantitative analysis of CARS spectra"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "JSON configuration file");
    app.add_option("--seed", opts.seed, "random seed (overrides config)");
    app.add_option("--threads", opts.threads, "worker thread count (overrides env and config)");
    app.add_option("--out", opts.out_dir, "output directory shared by all stages");
    app.add_flag("--quiet", opts.quiet, "suppress progress messages");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic spectrum with its truth record");
    auto* nar = app.add_subcommand("narrow", "line-narrow the spectrum in the output directory");
    nar->add_option("--input", opts.input_path, "spectrum CSV to copy into the output directory");
    auto* pri = app.add_subcommand("priors", "build priors from the narrowing artifacts");
    auto* fit = app.add_subcommand("fit", "run the sequential Monte Carlo sampler");
    auto* pre = app.add_subcommand("predict", "recompute predictive bands from posterior draws");
    auto* pip = app.add_subcommand("pipeline", "run every stage in order");
    pip->add_option("--input", opts.input_path,
                    "measured spectrum CSV; skips the simulate stage when given");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    namespace fs = std::filesystem;
    try {
        const carsinfer::PipelineConfig cfg = resolve_config(opts);
        const fs::path out_dir = opts.out_dir;
        fs::create_directories(out_dir);

        if (!opts.input_path.empty()) {
            if (!fs::exists(opts.input_path))
                throw carsinfer::io::FormatError("input spectrum not found: " + opts.input_path);
            fs::copy_file(opts.input_path, out_dir / "spectrum.csv",
                          fs::copy_options::overwrite_existing);
        }

        if (sim->parsed()) {
            carsinfer::pipeline::stage_simulate(cfg, out_dir);
            stage_log(opts, "simulate: wrote spectrum.csv and truth.json");
        } else if (nar->parsed()) {
            carsinfer::pipeline::stage_narrow(cfg, out_dir);
            stage_log(opts, "narrow: wrote narrowed.csv, smooth_model.csv, selected.csv");
        } else if (pri->parsed()) {
            carsinfer::pipeline::stage_priors(cfg, out_dir);
            stage_log(opts, "priors: wrote priors.json");
        } else if (fit->parsed()) {
            carsinfer::pipeline::stage_fit(cfg, out_dir);
            stage_log(opts, "fit: wrote posterior.csv, bands.csv, diagnostics.json");
        } else if (pre->parsed()) {
            carsinfer::pipeline::stage_predict(cfg, out_dir);
            stage_log(opts, "predict: wrote bands.csv");
        } else if (pip->parsed()) {
            if (opts.input_path.empty()) {
                carsinfer::pipeline::stage_simulate(cfg, out_dir);
                stage_log(opts, "pipeline: simulated synthetic spectrum");
            }
            carsinfer::pipeline::stage_narrow(cfg, out_dir);
            stage_log(opts, "pipeline: narrowing done");
            carsinfer::pipeline::stage_priors(cfg, out_dir);
            stage_log(opts, "pipeline: priors done");
            carsinfer::pipeline::stage_fit(cfg, out_dir);
            stage_log(opts, "pipeline: fit done");
            carsinfer::pipeline::stage_predict(cfg, out_dir);
            stage_log(opts, "pipeline: bands written");
        }
        return 0;
    } catch (const carsinfer::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const carsinfer::io::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
