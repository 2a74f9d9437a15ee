#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "carsinfer/config.hpp"
#include "carsinfer/io.hpp"
#include "carsinfer/pipeline.hpp"

using namespace carsinfer;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("carsinfer_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("empty config resolves to the reference defaults") {
    const auto cfg = parse_config(nlohmann::json::object());
    REQUIRE(cfg.smc.particles == 2000);
    REQUIRE(cfg.smc.resample_threshold == 1000);
    REQUIRE(cfg.smc.learning_rate == 0.9);
    REQUIRE(cfg.smc.mcmc_moves == 200);
    REQUIRE(cfg.smc.target_acceptance == 0.23);
    REQUIRE(cfg.model.error_function_order == 34);
    REQUIRE(cfg.narrowing.cwe_order == 8);
    REQUIRE(cfg.narrowing.gamma_min == 1.0);
    REQUIRE(cfg.narrowing.gamma_max == 35.0);
    REQUIRE(cfg.narrowing.gamma_count == 33);
    REQUIRE(cfg.narrowing.max_filter_length == 150);
    REQUIRE(cfg.narrowing.energy_percentage == 0.5);
    REQUIRE(cfg.narrowing.criterion_percentage == 0.025);
    REQUIRE(cfg.narrowing.criterion_increment == 0.025);
    REQUIRE(cfg.narrowing.min_intersection == 50);
    REQUIRE_FALSE(cfg.model.nr_level.has_value());
    REQUIRE_FALSE(cfg.noise.variance.has_value());
}

TEST_CASE("unknown keys are rejected everywhere") {
    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(R"({"bogus": 1})")), ConfigError);
    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(R"({"smc": {"particle": 10}})")),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(R"({"narrowing": {"gamma_mni": 1}})")),
                      ConfigError);
}

TEST_CASE("type errors and bad values are rejected") {
    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(R"({"smc": {"particles": "many"}})")),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(R"({"schema_version": 9})")), ConfigError);
    REQUIRE_THROWS_AS(
        parse_config(nlohmann::json::parse(
            R"({"model": {"error_function_interpolation": "diagonal"}})")),
        ConfigError);
}

TEST_CASE("config overrides land in the right fields") {
    const auto cfg = parse_config(nlohmann::json::parse(R"({
        "seed": 42,
        "threads": 3,
        "smc": {"particles": 500, "mcmc_moves": 50},
        "model": {"nr_level": 1.25, "error_function_interpolation": "ceil"},
        "noise": {"variance": 1e-4},
        "synthetic": {"lines": [{"amplitude": 2.0, "location": 800.0, "gamma": 3.0}]}
    })"));
    REQUIRE(cfg.seed == 42);
    REQUIRE(cfg.threads == 3);
    REQUIRE(cfg.smc.particles == 500);
    REQUIRE(cfg.smc.mcmc_moves == 50);
    REQUIRE(cfg.model.nr_level == 1.25);
    REQUIRE(cfg.model.interpolation == ErrorInterpolation::ceil_based);
    REQUIRE(cfg.noise.variance == 1e-4);
    REQUIRE(cfg.synthetic.lines.size() == 1);
    REQUIRE(cfg.synthetic.lines[0].location == 800.0);
}

TEST_CASE("spectrum CSV round-trips losslessly") {
    TempDir tmp;
    WavenumberGrid grid(712.345678901234, 0.4321, 64);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(1.0, 0.3);
    std::vector<double> y(64);
    for (auto& v : y) v = nd(rng);
    const auto path = (tmp.path / "s.csv").string();
    io::write_spectrum_csv(path, grid, y);
    const auto loaded = io::read_spectrum_csv(path);
    REQUIRE(loaded.intensities.size() == 64);
    for (std::size_t k = 0; k < 64; ++k) {
        REQUIRE(loaded.intensities[k] == y[k]);
        REQUIRE(loaded.wavenumbers[k] == grid.wavenumber(k));
    }
    const auto g2 = loaded.grid();
    REQUIRE(g2.count() == 64);
    REQUIRE(g2.start() == grid.start());
}

TEST_CASE("spectrum CSV rejects malformed input") {
    TempDir tmp;
    const auto path = (tmp.path / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "wrong,header\n1,2\n";
    }
    REQUIRE_THROWS_AS(io::read_spectrum_csv(path), io::FormatError);
    {
        std::ofstream out(path);
        out << "wavenumber_cm-1,intensity\n1.0,notanumber\n";
    }
    REQUIRE_THROWS_AS(io::read_spectrum_csv(path), io::FormatError);
    REQUIRE_THROWS_AS(io::read_spectrum_csv((tmp.path / "absent.csv").string()), io::FormatError);
}

TEST_CASE("posterior CSV round-trips losslessly") {
    TempDir tmp;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(0.1, 5.0);
    std::vector<ModelParams> draws;
    for (int i = 0; i < 20; ++i) {
        ModelParams p;
        p.background_level = unif(rng);
        for (int l = 0; l < 3; ++l)
            p.lines.push_back({unif(rng), 100.0 * (l + 1) + unif(rng), unif(rng), unif(rng)});
        draws.push_back(p);
    }
    const auto path = (tmp.path / "post.csv").string();
    io::write_posterior_csv(path, draws);
    const auto loaded = io::read_posterior_csv(path);
    REQUIRE(loaded.size() == draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        REQUIRE(loaded[i].background_level == draws[i].background_level);
        for (std::size_t l = 0; l < 3; ++l) {
            REQUIRE(loaded[i].lines[l].amplitude == draws[i].lines[l].amplitude);
            REQUIRE(loaded[i].lines[l].location == draws[i].lines[l].location);
            REQUIRE(loaded[i].lines[l].sigma == draws[i].lines[l].sigma);
            REQUIRE(loaded[i].lines[l].gamma == draws[i].lines[l].gamma);
        }
    }
}

TEST_CASE("prior spec JSON round-trips") {
    PriorSpec spec;
    spec.locations = {{101.5, 3.25}, {220.0, 8.5}};
    spec.amplitude_means = {2.5, 0.75};
    spec.log_gamma = {1.1, 0.21};
    spec.log_sigma = {0.8, 0.21};
    spec.background_min = 1.0;
    spec.background_max = 8.0;
    const auto j = prior_spec_to_json(spec, 3.5e-4, 1.2);
    const auto loaded = prior_spec_from_json(j);
    REQUIRE(loaded.spec.locations.size() == 2);
    REQUIRE(loaded.spec.locations[1].mean == 220.0);
    REQUIRE(loaded.spec.log_gamma.variance == 0.21);
    REQUIRE(loaded.noise_variance == 3.5e-4);
    REQUIRE(loaded.nr_level == 1.2);
    REQUIRE_THROWS_AS(prior_spec_from_json(nlohmann::json::object()), ConfigError);
}

TEST_CASE("simulation writes identical bytes for identical seeds") {
    TempDir tmp;
    PipelineConfig cfg;
    cfg.seed = 99;
    cfg.synthetic.grid_count = 256;
    pipeline::stage_simulate(cfg, tmp.path / "a");
    pipeline::stage_simulate(cfg, tmp.path / "b");
    std::ifstream a(tmp.path / "a" / "spectrum.csv", std::ios::binary);
    std::ifstream b(tmp.path / "b" / "spectrum.csv", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    REQUIRE(sa == sb);
    REQUIRE(sa.find("wavenumber_cm-1,intensity\n") == 0);
}

TEST_CASE("simulation noise statistics and noise-free exactness") {
    PipelineConfig cfg;
    cfg.synthetic.grid_count = 4096;
    cfg.synthetic.noise_sd = 0.05;
    const auto truth = pipeline::make_truth(cfg.synthetic);
    const auto sim = pipeline::simulate(truth, 7);
    double acc = 0.0;
    for (std::size_t k = 0; k < 4096; ++k) {
        const double r = sim.measured.values[k] - sim.noiseless[k];
        acc += r * r;
    }
    const double est = acc / 4096.0;
    REQUIRE(est == Catch::Approx(0.0025).epsilon(0.10));

    cfg.synthetic.noise_sd = 0.0;
    const auto truth0 = pipeline::make_truth(cfg.synthetic);
    const auto sim0 = pipeline::simulate(truth0, 7);
    for (std::size_t k = 0; k < 4096; ++k)
        REQUIRE(sim0.measured.values[k] == sim0.noiseless[k]);
}

TEST_CASE("band CSV lists every series") {
    TempDir tmp;
    WavenumberGrid grid(0.0, 1.0, 8);
    PosteriorSummary summary;
    auto fill = [&](Band& b, double v) {
        b.lower.assign(8, v - 1);
        b.median.assign(8, v);
        b.upper.assign(8, v + 1);
    };
    fill(summary.y, 1);
    fill(summary.f, 2);
    fill(summary.s, 3);
    fill(summary.eps_m, 4);
    fill(summary.v_n, 5);
    summary.lines.resize(2);
    fill(summary.lines[0], 6);
    fill(summary.lines[1], 7);
    const auto path = (tmp.path / "bands.csv").string();
    io::write_bands_csv(path, grid, summary);
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const char* name : {",y\n", ",f\n", ",S\n", ",eps_m\n", ",V_N\n", ",line_01\n", ",line_02\n"})
        REQUIRE(all.find(name) != std::string::npos);
    REQUIRE(all.rfind("wavenumber,lower,median,upper,series\n", 0) == 0);
}
