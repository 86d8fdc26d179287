// Command-line front end: run / validate / pmf / profile.
// Exit codes: 0 success, 1 validation failure, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dppfl/dpp.hpp"
#include "dppfl/experiment.hpp"
#include "dppfl/profiling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dppfl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw std::runtime_error("cannot write " + path.string());
}

linalg::Matrix read_kernel(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel " + path.string());
    const auto rows = json::parse(in).get<std::vector<std::vector<double>>>();
    const std::size_t n = rows.size();
    linalg::Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw std::runtime_error(path.string() + ": kernel must be square");
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& out_override) {
    auto cfg = exp::load_config(config_path);
    if (out_override) cfg.output_dir = *out_override;
    const auto bundle = exp::run_experiment(cfg);
    exp::write_bundle(bundle, cfg.output_dir);

    for (const auto& s : bundle.summary["strategies"]) {
        std::cout << s["strategy"].get<std::string>() << ":";
        for (const auto& [thr, v] : s["rounds_to_accuracy"].items())
            std::cout << "  median rounds to " << thr << " = " << v["median"].dump();
        std::cout << "\n";
        for (const auto& w : s["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
    }
    std::cout << "results written to " << cfg.output_dir.string() << "\n";
    return kExitOk;
}

int cmd_validate(const fs::path& config_path) {
    exp::load_config(config_path);
    std::cout << config_path.string() << ": ok\n";
    return kExitOk;
}

int cmd_pmf(const std::optional<fs::path>& kernel_path, std::size_t random_n, std::uint64_t seed, std::size_t k) {
    const linalg::Matrix l = kernel_path ? read_kernel(*kernel_path) : dpp::random_psd_kernel(random_n, seed);
    json out = json::array();
    for (const auto& [subset, p] : dpp::kdpp_pmf_bruteforce(l, k)) out.push_back({{"subset", subset}, {"p", p}});
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_profile(const fs::path& config_path, const std::optional<std::string>& init, std::size_t trial,
                const std::optional<fs::path>& out_override) {
    auto cfg = exp::load_config(config_path);
    if (init) cfg.init_scheme = nn::parse_init_scheme(*init);
    const fs::path dir = out_override ? *out_override : cfg.output_dir / "profile";
    const auto setup = exp::make_trial(cfg, trial);
    const auto profiles =
        exp::compute_profiles(setup.initial, *setup.partition, *setup.train, cfg.strategy_options.signal);
    const auto sim = profiling::similarity_matrix(profiles, cfg.strategy_options.similarity);
    const auto kernel = profiling::kernel_matrix(sim);

    fs::create_directories(dir);
    write_text(dir / "profiles.json", profiling::profiles_to_json(profiles).dump(2) + "\n");
    const auto blob = profiling::profiles_to_blob(profiles);
    write_text(dir / "profiles.bin", std::string(blob.begin(), blob.end()));
    json sj{{"init_scheme", std::string(nn::to_string(cfg.init_scheme))},
            {"similarity", profiling::matrix_to_json(sim.s)},
            {"distance", profiling::matrix_to_json(sim.raw)},
            {"kernel", profiling::matrix_to_json(kernel.l)}};
    write_text(dir / "similarity.json", sj.dump(2) + "\n");
    std::cout << profiles.size() << " profiles written to " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Client-selection simulator for federated learning"};
    app.require_subcommand(1);

    fs::path config;
    std::optional<fs::path> out_dir;

    auto* run = app.add_subcommand("run", "Run every trial and strategy of an experiment config");
    run->add_option("config", config, "Experiment config (JSON)")->required();
    run->add_option("--output-dir", out_dir, "Override output_dir from the config");

    auto* validate = app.add_subcommand("validate", "Check a config and list every violation");
    validate->add_option("config", config, "Experiment config (JSON)")->required();

    std::optional<fs::path> kernel_path;
    std::size_t random_n = 0, k = 0;
    std::uint64_t seed = 0;
    auto* pmf = app.add_subcommand("pmf", "Brute-force k-DPP probabilities of a small kernel");
    auto* kopt = pmf->add_option("--kernel", kernel_path, "Kernel as a JSON array of rows");
    auto* ropt = pmf->add_option("--random", random_n, "Use a random PSD kernel of this size");
    kopt->excludes(ropt);
    pmf->add_option("--seed", seed, "Seed for --random");
    pmf->add_option("--k", k, "Subset size")->required();

    std::optional<std::string> init;
    std::size_t trial = 0;
    auto* profile = app.add_subcommand("profile", "Write client profiles and the similarity matrix for a config");
    profile->add_option("config", config, "Experiment config (JSON)")->required();
    profile->add_option("--init", init, "Override the init scheme");
    profile->add_option("--trial", trial, "Trial whose data and model to use");
    profile->add_option("--output-dir", out_dir, "Directory (default <output_dir>/profile)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInvalid;  // --help exits 0
    }

    try {
        if (*run) return cmd_run(config, out_dir);
        if (*validate) return cmd_validate(config);
        if (*pmf) {
            if (!kernel_path && random_n == 0) {
                std::cerr << "pmf: give --kernel or --random\n";
                return kExitInvalid;
            }
            return cmd_pmf(kernel_path, random_n, seed, k);
        }
        if (*profile) return cmd_profile(config, init, trial, out_dir);
    } catch (const exp::ConfigError& e) {
        std::cerr << e.what();
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
