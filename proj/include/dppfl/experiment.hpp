#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dppfl/dataset.hpp"
#include "dppfl/engine.hpp"
#include "dppfl/nn.hpp"
#include "dppfl/profiling.hpp"
#include "dppfl/selection.hpp"

namespace dppfl::exp {

struct DatasetSpec {
    enum class Kind { synthetic, idx };
    Kind kind = Kind::synthetic;
    std::size_t samples = 600;  // synthetic: total samples drawn
    std::size_t classes = 10;   // synthetic only
    std::filesystem::path images, labels;  // idx only
    std::size_t subset = 0;     // idx: keep this many samples (0 = all)
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::size_t clients = 20;            // C
    std::size_t clients_per_round = 4;   // C_p
    std::size_t rounds = 100;            // T
    std::size_t local_epochs = 1;        // E
    double eta = 0.05;
    data::SkewSpec skew;
    std::vector<fl::StrategyKind> strategies{fl::StrategyKind::dpp, fl::StrategyKind::random};
    fl::StrategyOptions strategy_options;
    nn::InitScheme init_scheme = nn::InitScheme::kaiming_normal;
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    double heldout_fraction = 0.0;  // 0: test accuracy is measured on the training union
    std::filesystem::path output_dir = "results";
    std::vector<double> thresholds{0.8, 0.9, 0.95};
    nn::Architecture arch;  // input and class dimensions are taken from the data
    std::size_t local_batch = 0;
    /// Stop a strategy's trial once test accuracy reaches this value.
    std::optional<double> stop_at_accuracy;
};

/// Every problem found in a config, not just the first.
struct ValidationReport {
    std::vector<std::string> errors;

    bool ok() const noexcept { return errors.empty(); }
    std::string to_string() const;
};

/// Thrown when a config fails validation; carries the full report.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(ValidationReport report);
    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

/// Flat JSON document; unknown keys and type mismatches are reported.
ExperimentConfig config_from_json(const nlohmann::json& doc, ValidationReport& report);
/// Reads and validates; throws ConfigError on any violation, std::runtime_error on I/O.
ExperimentConfig load_config(const std::filesystem::path& path);
ValidationReport validate(const ExperimentConfig& config);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Everything a trial shares across strategies: data, split, partition, initial model.
struct TrialSetup {
    std::size_t trial = 0;
    std::uint64_t seed = 0;  // config.seed + trial
    std::shared_ptr<const data::LabeledDataset> train;
    std::shared_ptr<const data::LabeledDataset> heldout;  // null when none
    std::shared_ptr<const data::Partition> partition;
    nn::ModelParams initial;
};

/// Loads an IDX dataset once so trials can share it; returns null for synthetic configs.
std::shared_ptr<const data::LabeledDataset> load_source(const ExperimentConfig& config);

TrialSetup make_trial(const ExperimentConfig& config, std::size_t trial,
                      const std::shared_ptr<const data::LabeledDataset>& source = nullptr);

std::vector<profiling::DataProfile> compute_profiles(const nn::ModelParams& params, const data::Partition& partition,
                                                     const data::LabeledDataset& parent, fl::ProfileSignal signal);

std::unique_ptr<fl::SelectionStrategy> make_strategy(fl::StrategyKind kind, const ExperimentConfig& config,
                                                     const TrialSetup& setup);

struct StrategyRun {
    fl::StrategyKind strategy = fl::StrategyKind::random;
    std::size_t trial = 0;
    std::vector<fl::RoundRecord> records;
    std::vector<std::string> warnings;
};

StrategyRun run_strategy(fl::StrategyKind kind, const ExperimentConfig& config, const TrialSetup& setup);

struct ResultBundle {
    ExperimentConfig config;
    std::vector<StrategyRun> runs;  // trial-major, strategies in config order
    nlohmann::json summary;
};

/// Runs every trial and strategy; no files are written.
ResultBundle run_experiment(const ExperimentConfig& config);

/// First round whose accuracy is >= threshold, or nullopt.
std::optional<std::size_t> rounds_to_accuracy(const std::vector<double>& accuracy_by_round, double threshold);

/// Median treating "never reached" as larger than every reached value; nullopt if the median never reached.
std::optional<double> median_rounds(std::vector<std::optional<std::size_t>> values);

nlohmann::json summarize(const ExperimentConfig& config, const std::vector<StrategyRun>& runs);

inline constexpr const char* kCsvHeader =
    "round,strategy,trial,train_accuracy,test_accuracy,mean_loss,gemd,uplink_bytes,downlink_bytes";

struct CsvRow {
    std::size_t round = 0;
    std::string strategy;
    std::size_t trial = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_loss = 0.0;
    double gemd = 0.0;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t downlink_bytes = 0;

    friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

std::string format_csv(const std::vector<fl::RoundRecord>& records, std::string_view strategy, std::size_t trial);
std::vector<CsvRow> parse_csv(const std::string& text);

void emit_csv(const std::vector<fl::RoundRecord>& records, std::string_view strategy, std::size_t trial,
              const std::filesystem::path& path);
void emit_summary(const nlohmann::json& summary, const std::filesystem::path& path);

/// Writes <strategy>_trial<i>.csv for every run plus summary.json into dir.
void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir);

}  // namespace dppfl::exp
