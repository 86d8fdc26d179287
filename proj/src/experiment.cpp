#include "dppfl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "dppfl/error.hpp"
#include "dppfl/rng.hpp"

namespace dppfl::exp {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "dataset",    "samples",        "classes",     "images",           "labels",       "subset",
    "clients",    "clients_per_round", "rounds",   "local_epochs",     "eta",          "skew",
    "strategy",   "signal",         "normalize_offdiag_only",          "kmeans_max_iterations",
    "init_scheme", "seed",          "trials",      "heldout_fraction", "output_dir",   "thresholds",
    "conv1_channels", "conv1_kernel", "conv2_channels", "conv2_kernel", "fc1_units",  "local_batch",
    "stop_at_accuracy"};

// Shortest decimal text that reads back as the same double.
std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Reader {
public:
    Reader(const json& doc, ValidationReport& report) : doc_(doc), report_(report) {}

    template <class F>
    void with(const char* key, F&& f) {
        if (!doc_.contains(key)) return;
        try {
            f(doc_.at(key));
        } catch (const std::exception& e) {
            report_.errors.push_back(std::string(key) + ": " + e.what());
        }
    }

    void size(const char* key, std::size_t& out) {
        with(key, [&](const json& v) {
            if (!v.is_number_integer() || v.get<long long>() < 0) throw ValueError("expected a non-negative integer");
            out = v.get<std::size_t>();
        });
    }
    void real(const char* key, double& out) {
        with(key, [&](const json& v) {
            if (!v.is_number()) throw ValueError("expected a number");
            out = v.get<double>();
        });
    }
    void text(const char* key, std::string& out) {
        with(key, [&](const json& v) {
            if (!v.is_string()) throw ValueError("expected a string");
            out = v.get<std::string>();
        });
    }

private:
    const json& doc_;
    ValidationReport& report_;
};

std::shared_ptr<const data::LabeledDataset> share(data::LabeledDataset ds) {
    return std::make_shared<const data::LabeledDataset>(std::move(ds));
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

std::string ValidationReport::to_string() const {
    std::string out;
    for (const auto& e : errors) out += "  - " + e + "\n";
    return out;
}

ConfigError::ConfigError(ValidationReport report)
    : std::invalid_argument("invalid experiment config:\n" + report.to_string()), report_(std::move(report)) {}

ExperimentConfig config_from_json(const json& doc, ValidationReport& report) {
    ExperimentConfig cfg;
    if (!doc.is_object()) {
        report.errors.push_back("config must be a JSON object");
        return cfg;
    }
    for (const auto& [key, _] : doc.items())
        if (!kKnownKeys.contains(key)) report.errors.push_back("unknown key '" + key + "'");

    Reader r(doc, report);
    r.with("dataset", [&](const json& v) {
        const auto name = v.get<std::string>();
        if (name == "synthetic") cfg.dataset.kind = DatasetSpec::Kind::synthetic;
        else if (name == "idx") cfg.dataset.kind = DatasetSpec::Kind::idx;
        else throw ValueError("expected \"synthetic\" or \"idx\", got \"" + name + "\"");
    });
    r.size("samples", cfg.dataset.samples);
    r.size("classes", cfg.dataset.classes);
    std::string images, labels;
    r.text("images", images);
    r.text("labels", labels);
    cfg.dataset.images = images;
    cfg.dataset.labels = labels;
    r.size("subset", cfg.dataset.subset);

    r.size("clients", cfg.clients);
    r.size("clients_per_round", cfg.clients_per_round);
    r.size("rounds", cfg.rounds);
    r.size("local_epochs", cfg.local_epochs);
    r.real("eta", cfg.eta);
    r.with("skew", [&](const json& v) {
        cfg.skew = v.is_number() ? data::SkewSpec::fraction(v.get<double>())
                                 : data::SkewSpec::parse(v.get<std::string>());
    });
    r.with("strategy", [&](const json& v) {
        cfg.strategies.clear();
        if (v.is_string()) {
            cfg.strategies.push_back(fl::parse_strategy(v.get<std::string>()));
        } else {
            for (const auto& s : v) cfg.strategies.push_back(fl::parse_strategy(s.get<std::string>()));
        }
    });
    r.with("signal", [&](const json& v) { cfg.strategy_options.signal = fl::parse_profile_signal(v.get<std::string>()); });
    r.with("normalize_offdiag_only",
           [&](const json& v) { cfg.strategy_options.similarity.normalize_offdiag_only = v.get<bool>(); });
    r.size("kmeans_max_iterations", cfg.strategy_options.kmeans_max_iterations);
    r.with("init_scheme", [&](const json& v) { cfg.init_scheme = nn::parse_init_scheme(v.get<std::string>()); });
    r.with("seed", [&](const json& v) {
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
            throw ValueError("expected a non-negative integer");
        cfg.seed = v.get<std::uint64_t>();
    });
    r.size("trials", cfg.trials);
    r.real("heldout_fraction", cfg.heldout_fraction);
    std::string out_dir = cfg.output_dir.string();
    r.text("output_dir", out_dir);
    cfg.output_dir = out_dir;
    r.with("thresholds", [&](const json& v) { cfg.thresholds = v.get<std::vector<double>>(); });
    r.size("conv1_channels", cfg.arch.conv1_channels);
    r.size("conv1_kernel", cfg.arch.conv1_kernel);
    r.size("conv2_channels", cfg.arch.conv2_channels);
    r.size("conv2_kernel", cfg.arch.conv2_kernel);
    r.size("fc1_units", cfg.arch.fc1_units);
    r.size("local_batch", cfg.local_batch);
    r.with("stop_at_accuracy", [&](const json& v) {
        if (!v.is_null()) cfg.stop_at_accuracy = v.get<double>();
    });
    return cfg;
}

ValidationReport validate(const ExperimentConfig& c) {
    ValidationReport rep;
    auto fail = [&](std::string msg) { rep.errors.push_back(std::move(msg)); };

    if (c.dataset.kind == DatasetSpec::Kind::synthetic) {
        if (c.dataset.classes < 2) fail("classes: need at least 2");
        if (c.dataset.samples < c.dataset.classes) fail("samples: fewer samples than classes");
    } else {
        if (c.dataset.images.empty()) fail("images: required for idx datasets");
        if (c.dataset.labels.empty()) fail("labels: required for idx datasets");
    }
    if (c.clients == 0) fail("clients: must be >= 1");
    if (c.clients_per_round == 0 || c.clients_per_round > c.clients) {
        fail("clients_per_round: must be in [1, clients] (got " + std::to_string(c.clients_per_round) + ", clients " +
             std::to_string(c.clients) + ")");
    }
    if (c.rounds == 0) fail("rounds: must be >= 1");
    if (c.local_epochs == 0) fail("local_epochs: must be >= 1");
    if (!(c.eta > 0.0) || !std::isfinite(c.eta)) fail("eta: must be a finite value > 0");
    if (c.trials == 0) fail("trials: must be >= 1");
    if (!(c.heldout_fraction >= 0.0 && c.heldout_fraction < 1.0)) fail("heldout_fraction: must be in [0, 1)");
    try {
        c.skew.validate();
    } catch (const std::exception& e) {
        fail(std::string("skew: ") + e.what());
    }
    if (c.strategies.empty()) fail("strategy: at least one strategy is required");
    for (std::size_t i = 0; i < c.strategies.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (c.strategies[i] == c.strategies[j])
                fail("strategy: '" + std::string(fl::to_string(c.strategies[i])) + "' listed twice");
    for (double t : c.thresholds)
        if (!(t > 0.0 && t <= 1.0)) fail("thresholds: " + shortest(t) + " outside (0, 1]");
    if (c.stop_at_accuracy && !(*c.stop_at_accuracy > 0.0 && *c.stop_at_accuracy <= 1.0))
        fail("stop_at_accuracy: must be in (0, 1]");
    if (c.strategy_options.kmeans_max_iterations == 0) fail("kmeans_max_iterations: must be >= 1");
    if (c.output_dir.empty()) fail("output_dir: must not be empty");

    nn::Architecture arch = c.arch;
    if (c.dataset.kind == DatasetSpec::Kind::synthetic) arch.classes = c.dataset.classes;
    if (arch.conv1_kernel > arch.width || arch.conv1_kernel > arch.height) {
        fail("conv1_kernel: larger than the input");
    } else {
        try {
            arch.validate();
        } catch (const std::exception& e) {
            fail(std::string("architecture: ") + e.what());
        }
    }
    return rep;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    ValidationReport rep;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        rep.errors.push_back(path.string() + ": " + e.what());
        throw ConfigError(std::move(rep));
    }
    ExperimentConfig cfg = config_from_json(doc, rep);
    const auto base = path.parent_path();
    if (!cfg.dataset.images.empty() && cfg.dataset.images.is_relative()) cfg.dataset.images = base / cfg.dataset.images;
    if (!cfg.dataset.labels.empty() && cfg.dataset.labels.is_relative()) cfg.dataset.labels = base / cfg.dataset.labels;
    auto more = validate(cfg);
    rep.errors.insert(rep.errors.end(), more.errors.begin(), more.errors.end());
    if (!rep.ok()) throw ConfigError(std::move(rep));
    return cfg;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    if (c.dataset.kind == DatasetSpec::Kind::synthetic) {
        j["dataset"] = "synthetic";
        j["samples"] = c.dataset.samples;
        j["classes"] = c.dataset.classes;
    } else {
        j["dataset"] = "idx";
        j["images"] = c.dataset.images.string();
        j["labels"] = c.dataset.labels.string();
        j["subset"] = c.dataset.subset;
    }
    j["clients"] = c.clients;
    j["clients_per_round"] = c.clients_per_round;
    j["rounds"] = c.rounds;
    j["local_epochs"] = c.local_epochs;
    j["eta"] = c.eta;
    j["skew"] = c.skew.to_string();
    json strategies = json::array();
    for (auto s : c.strategies) strategies.push_back(std::string(fl::to_string(s)));
    j["strategy"] = strategies;
    j["signal"] = std::string(fl::to_string(c.strategy_options.signal));
    j["normalize_offdiag_only"] = c.strategy_options.similarity.normalize_offdiag_only;
    j["kmeans_max_iterations"] = c.strategy_options.kmeans_max_iterations;
    j["init_scheme"] = std::string(nn::to_string(c.init_scheme));
    j["seed"] = c.seed;
    j["trials"] = c.trials;
    j["heldout_fraction"] = c.heldout_fraction;
    j["output_dir"] = c.output_dir.string();
    j["thresholds"] = c.thresholds;
    j["conv1_channels"] = c.arch.conv1_channels;
    j["conv1_kernel"] = c.arch.conv1_kernel;
    j["conv2_channels"] = c.arch.conv2_channels;
    j["conv2_kernel"] = c.arch.conv2_kernel;
    j["fc1_units"] = c.arch.fc1_units;
    j["local_batch"] = c.local_batch;
    j["stop_at_accuracy"] = c.stop_at_accuracy ? json(*c.stop_at_accuracy) : json(nullptr);
    return j;
}

std::shared_ptr<const data::LabeledDataset> load_source(const ExperimentConfig& config) {
    if (config.dataset.kind != DatasetSpec::Kind::idx) return nullptr;
    return share(data::load_idx(config.dataset.images, config.dataset.labels));
}

TrialSetup make_trial(const ExperimentConfig& config, std::size_t trial,
                      const std::shared_ptr<const data::LabeledDataset>& source) {
    TrialSetup t;
    t.trial = trial;
    t.seed = config.seed + trial;

    data::LabeledDataset full;
    if (config.dataset.kind == DatasetSpec::Kind::synthetic) {
        full = data::synth_dataset(config.dataset.samples, config.dataset.classes, t.seed);
    } else {
        auto src = source ? source : load_source(config);
        if (config.dataset.subset > 0 && config.dataset.subset < src->size()) {
            // Class-balanced draw: subset / N per class, the remainder going to
            // the lowest classes, so pure-class partitions of the subset stay feasible.
            std::vector<std::vector<std::size_t>> pools(src->classes);
            for (std::size_t i = 0; i < src->size(); ++i) pools[static_cast<std::size_t>(src->labels[i])].push_back(i);
            Rng rng = make_rng(t.seed, Stream::dataset);
            std::vector<std::size_t> idx;
            const std::size_t n = config.dataset.subset, classes = src->classes;
            for (std::size_t j = 0; j < classes; ++j) {
                const std::size_t want = n / classes + (j < n % classes ? 1 : 0);
                if (want > pools[j].size()) {
                    throw ValueError("subset: class " + std::to_string(j) + " has " + std::to_string(pools[j].size()) +
                                     " samples, " + std::to_string(want) + " needed for a balanced subset");
                }
                shuffle(pools[j].begin(), pools[j].end(), rng);
                idx.insert(idx.end(), pools[j].begin(), pools[j].begin() + static_cast<std::ptrdiff_t>(want));
            }
            std::sort(idx.begin(), idx.end());
            full = src->subset(idx);
        } else {
            full = *src;
        }
    }

    if (config.heldout_fraction > 0.0) {
        auto idx = iota_indices(full.size());
        Rng rng = make_rng(t.seed, Stream::heldout);
        shuffle(idx.begin(), idx.end(), rng);
        // Stratified: each class keeps the same share, so class balance survives the split.
        std::vector<std::size_t> count(full.classes, 0), quota(full.classes), taken(full.classes, 0);
        for (int y : full.labels) ++count[static_cast<std::size_t>(y)];
        for (std::size_t c = 0; c < full.classes; ++c)
            quota[c] = static_cast<std::size_t>(std::llround(config.heldout_fraction * static_cast<double>(count[c])));
        std::vector<std::size_t> held, rest;
        for (std::size_t i : idx) {
            const auto y = static_cast<std::size_t>(full.labels[i]);
            if (taken[y] < quota[y]) {
                ++taken[y];
                held.push_back(i);
            } else {
                rest.push_back(i);
            }
        }
        std::sort(held.begin(), held.end());
        std::sort(rest.begin(), rest.end());
        if (!held.empty()) t.heldout = share(full.subset(held));
        t.train = share(full.subset(rest));
    } else {
        t.train = share(std::move(full));
    }

    nn::Architecture arch = config.arch;
    arch.in_channels = 1;
    arch.height = t.train->height();
    arch.width = t.train->width();
    arch.classes = t.train->classes;
    t.partition = std::make_shared<const data::Partition>(
        data::partition(*t.train, config.clients, config.skew, t.seed));
    t.initial = nn::init_params(arch, config.init_scheme, t.seed);
    return t;
}

std::vector<profiling::DataProfile> compute_profiles(const nn::ModelParams& params, const data::Partition& partition,
                                                     const data::LabeledDataset& parent, fl::ProfileSignal signal) {
    if (signal == fl::ProfileSignal::fc1) return profiling::profile_clients(params, partition, parent);
    std::vector<profiling::DataProfile> out;
    out.reserve(partition.client_count());
    for (const auto& c : partition.clients) out.push_back(profiling::gradient_profile(params, c, parent));
    return out;
}

std::unique_ptr<fl::SelectionStrategy> make_strategy(fl::StrategyKind kind, const ExperimentConfig& config,
                                                     const TrialSetup& setup) {
    const auto& opts = config.strategy_options;
    switch (kind) {
        case fl::StrategyKind::random:
            return std::make_unique<fl::RandomStrategy>(setup.partition->client_count());
        case fl::StrategyKind::loss_proportional:
            return std::make_unique<fl::LossProportionalStrategy>(setup.partition->client_count());
        case fl::StrategyKind::dpp:
            return std::make_unique<fl::DppStrategy>(
                compute_profiles(setup.initial, *setup.partition, *setup.train, opts.signal), opts.similarity);
        case fl::StrategyKind::profile_cluster:
            return std::make_unique<fl::ProfileClusterStrategy>(
                compute_profiles(setup.initial, *setup.partition, *setup.train, opts.signal), config.clients_per_round,
                setup.seed, opts.kmeans_max_iterations);
    }
    throw ValueError("unhandled strategy");
}

StrategyRun run_strategy(fl::StrategyKind kind, const ExperimentConfig& config, const TrialSetup& setup) {
    StrategyRun run{kind, setup.trial, {}, {}};
    auto strategy = make_strategy(kind, config, setup);
    const fl::FlConfig fc{config.clients_per_round, config.rounds, config.local_epochs, config.eta, config.local_batch};
    fl::FlState state = fl::make_state(setup.initial, setup.train, setup.partition, fc, setup.seed, setup.heldout);
    Rng rng = make_rng(setup.seed, Stream::selection, static_cast<std::uint64_t>(kind));
    for (std::size_t r = 0; r < config.rounds; ++r) {
        auto [next, rec] = fl::run_round(std::move(state), *strategy, rng);
        state = std::move(next);
        for (auto& w : strategy->take_warnings())
            if (std::find(run.warnings.begin(), run.warnings.end(), w) == run.warnings.end())
                run.warnings.push_back(std::move(w));
        const double acc = rec.test_accuracy;
        run.records.push_back(std::move(rec));
        if (config.stop_at_accuracy && acc >= *config.stop_at_accuracy) break;
    }
    return run;
}

ResultBundle run_experiment(const ExperimentConfig& config) {
    auto rep = validate(config);
    if (!rep.ok()) throw ConfigError(std::move(rep));
    ResultBundle bundle{config, {}, {}};
    const auto source = load_source(config);
    for (std::size_t t = 0; t < config.trials; ++t) {
        const TrialSetup setup = make_trial(config, t, source);
        for (auto kind : config.strategies) bundle.runs.push_back(run_strategy(kind, config, setup));
    }
    bundle.summary = summarize(config, bundle.runs);
    return bundle;
}

std::optional<std::size_t> rounds_to_accuracy(const std::vector<double>& accuracy_by_round, double threshold) {
    for (std::size_t i = 0; i < accuracy_by_round.size(); ++i)
        if (accuracy_by_round[i] >= threshold) return i + 1;
    return std::nullopt;
}

std::optional<double> median_rounds(std::vector<std::optional<std::size_t>> values) {
    if (values.empty()) return std::nullopt;
    constexpr double kNever = std::numeric_limits<double>::infinity();
    std::vector<double> v;
    for (const auto& x : values) v.push_back(x ? static_cast<double>(*x) : kNever);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double m = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    if (!std::isfinite(m)) return std::nullopt;
    return m;
}

json summarize(const ExperimentConfig& config, const std::vector<StrategyRun>& runs) {
    json out;
    out["schema_version"] = 1;
    out["config"] = config_to_json(config);
    json strategies = json::array();
    for (auto kind : config.strategies) {
        std::vector<const StrategyRun*> mine;
        for (const auto& r : runs)
            if (r.strategy == kind) mine.push_back(&r);
        std::size_t longest = 0;
        for (auto* r : mine) longest = std::max(longest, r->records.size());

        json rounds = json::array();
        std::vector<double> mean_curve;
        for (std::size_t i = 0; i < longest; ++i) {
            std::vector<double> train, test, loss, gemd;
            for (auto* r : mine) {
                if (i >= r->records.size()) continue;
                const auto& rec = r->records[i];
                train.push_back(rec.train_accuracy);
                test.push_back(rec.test_accuracy);
                loss.push_back(rec.mean_loss);
                gemd.push_back(rec.gemd);
            }
            auto mean = [](const std::vector<double>& v) {
                return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            };
            auto stdev = [&](const std::vector<double>& v) {
                const double m = mean(v);
                double s = 0.0;
                for (double x : v) s += (x - m) * (x - m);
                return std::sqrt(s / static_cast<double>(v.size()));
            };
            mean_curve.push_back(mean(test));
            rounds.push_back({{"round", i + 1},
                              {"trials", test.size()},
                              {"train_accuracy_mean", mean(train)},
                              {"test_accuracy_mean", mean(test)},
                              {"test_accuracy_std", stdev(test)},
                              {"mean_loss_mean", mean(loss)},
                              {"gemd_mean", mean(gemd)},
                              {"gemd_std", stdev(gemd)}});
        }

        json rta = json::object();
        for (double thr : config.thresholds) {
            json per_trial = json::array();
            std::vector<std::optional<std::size_t>> values;
            for (auto* r : mine) {
                std::vector<double> acc;
                for (const auto& rec : r->records) acc.push_back(rec.test_accuracy);
                const auto v = rounds_to_accuracy(acc, thr);
                values.push_back(v);
                per_trial.push_back(v ? json(*v) : json(nullptr));
            }
            const auto curve = rounds_to_accuracy(mean_curve, thr);
            const auto median = median_rounds(values);
            rta[shortest(thr)] = {{"mean_curve", curve ? json(*curve) : json(nullptr)},
                                  {"per_trial", per_trial},
                                  {"median", median ? json(*median) : json(nullptr)}};
        }

        json warnings = json::array();
        for (auto* r : mine)
            for (const auto& w : r->warnings) warnings.push_back("trial " + std::to_string(r->trial) + ": " + w);

        strategies.push_back({{"strategy", std::string(fl::to_string(kind))},
                              {"rounds", rounds},
                              {"rounds_to_accuracy", rta},
                              {"warnings", warnings}});
    }
    out["strategies"] = strategies;
    return out;
}

std::string format_csv(const std::vector<fl::RoundRecord>& records, std::string_view strategy, std::size_t trial) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : records) {
        out += std::to_string(r.round) + "," + std::string(strategy) + "," + std::to_string(trial) + "," +
               fixed17(r.train_accuracy) + "," + fixed17(r.test_accuracy) + "," + fixed17(r.mean_loss) + "," +
               fixed17(r.gemd) + "," + std::to_string(r.uplink_bytes) + "," + std::to_string(r.downlink_bytes) + "\n";
    }
    return out;
}

std::vector<CsvRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw FormatError("csv: missing or unexpected header");
    std::vector<CsvRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            f.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        const std::string where = "csv line " + std::to_string(line_no);
        if (f.size() != 9) throw FormatError(where + ": expected 9 fields, got " + std::to_string(f.size()));
        auto integer = [&](const std::string& s) {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) throw FormatError(where + ": bad integer '" + s + "'");
            return v;
        };
        auto real = [&](const std::string& s) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) throw FormatError(where + ": bad number '" + s + "'");
            return v;
        };
        rows.push_back({static_cast<std::size_t>(integer(f[0])), f[1], static_cast<std::size_t>(integer(f[2])),
                        real(f[3]), real(f[4]), real(f[5]), real(f[6]), integer(f[7]), integer(f[8])});
    }
    return rows;
}

void emit_csv(const std::vector<fl::RoundRecord>& records, std::string_view strategy, std::size_t trial,
              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << format_csv(records, strategy, trial);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void emit_summary(const json& summary, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << summary.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& run : bundle.runs) {
        const std::string name = std::string(fl::to_string(run.strategy));
        emit_csv(run.records, name, run.trial, dir / (name + "_trial" + std::to_string(run.trial) + ".csv"));
    }
    emit_summary(bundle.summary, dir / "summary.json");
}

}  // namespace dppfl::exp
