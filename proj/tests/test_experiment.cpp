#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dppfl/error.hpp"
#include "dppfl/experiment.hpp"

using namespace dppfl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_config() {
    return json{{"dataset", "synthetic"}, {"samples", 60},      {"classes", 3},         {"clients", 6},
                {"clients_per_round", 2}, {"rounds", 3},        {"eta", 0.1},           {"skew", 1},
                {"strategy", json::array({"dpp", "random", "fedsae-like", "cluster-like"})},
                {"seed", 5},              {"trials", 2},        {"conv1_channels", 2},  {"conv2_channels", 2},
                {"fc1_units", 6},         {"heldout_fraction", 0.1}};
}

exp::ExperimentConfig parse_ok(const json& j) {
    exp::ValidationReport rep;
    auto cfg = exp::config_from_json(j, rep);
    EXPECT_TRUE(rep.ok()) << rep.to_string();
    const auto v = exp::validate(cfg);
    EXPECT_TRUE(v.ok()) << v.to_string();
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fl::RoundRecord record(std::size_t r, double acc) {
    fl::RoundRecord rec;
    rec.round = r;
    rec.train_accuracy = acc;
    rec.test_accuracy = acc / 3.0;
    rec.mean_loss = 1.0 / (r + 7.0);
    rec.gemd = 0.1 * static_cast<double>(r % 7);
    rec.uplink_bytes = 123456789ULL * r;
    rec.downlink_bytes = 42;
    return rec;
}

}  // namespace

TEST(Config, ParsesEveryField) {
    auto j = tiny_config();
    j["skew"] = "H";
    j["init_scheme"] = "xavier-uniform";
    j["thresholds"] = {0.5, 0.7};
    j["stop_at_accuracy"] = 0.99;
    j["signal"] = "gradient";
    const auto c = parse_ok(j);
    EXPECT_EQ(c.clients, 6u);
    EXPECT_EQ(c.skew, data::SkewSpec::half_half());
    EXPECT_EQ(c.strategies.size(), 4u);
    EXPECT_EQ(c.init_scheme, nn::InitScheme::xavier_uniform);
    EXPECT_EQ(c.thresholds, (std::vector<double>{0.5, 0.7}));
    EXPECT_EQ(c.stop_at_accuracy, 0.99);
    EXPECT_EQ(c.strategy_options.signal, fl::ProfileSignal::gradient);
    EXPECT_EQ(c.arch.fc1_units, 6u);
    // Echo round-trips through the parser.
    const auto again = parse_ok(exp::config_to_json(c));
    EXPECT_EQ(exp::config_to_json(again), exp::config_to_json(c));
}

TEST(Config, ReportsEveryViolation) {
    auto j = tiny_config();
    j["clients_per_round"] = 9;
    j["eta"] = 0.0;
    j["trials"] = 0;
    j["colour"] = "blue";
    j["rounds"] = "many";
    exp::ValidationReport rep;
    const auto c = exp::config_from_json(j, rep);
    const auto v = exp::validate(c);
    rep.errors.insert(rep.errors.end(), v.errors.begin(), v.errors.end());
    const auto text = rep.to_string();
    for (const char* key : {"clients_per_round", "eta", "trials", "colour", "rounds"})
        EXPECT_NE(text.find(key), std::string::npos) << key << " missing from:\n" << text;
}

TEST(Config, LoadConfigThrowsWithReport) {
    const auto dir = fs::temp_directory_path() / "dppfl_cfg_test";
    fs::create_directories(dir);
    auto j = tiny_config();
    j["skew"] = 2.0;
    std::ofstream(dir / "bad.json") << j.dump();
    try {
        exp::load_config(dir / "bad.json");
        FAIL();
    } catch (const exp::ConfigError& e) {
        EXPECT_EQ(e.report().errors.size(), 1u) << e.what();
    }
    std::ofstream(dir / "broken.json") << "{\"clients\": ";
    EXPECT_THROW(exp::load_config(dir / "broken.json"), exp::ConfigError);
}

TEST(Csv, HeaderOnlyForNoRecords) {
    EXPECT_EQ(exp::format_csv({}, "dpp", 0), std::string(exp::kCsvHeader) + "\n");
    EXPECT_TRUE(exp::parse_csv(exp::format_csv({}, "dpp", 0)).empty());
}

TEST(Csv, SingleRecordTwoLines) {
    const auto text = exp::format_csv({record(1, 0.5)}, "random", 3);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    const auto rows = exp::parse_csv(text);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].strategy, "random");
    EXPECT_EQ(rows[0].trial, 3u);
    EXPECT_EQ(rows[0].train_accuracy, 0.5);
    EXPECT_EQ(rows[0].uplink_bytes, 123456789ULL);
}

TEST(Csv, HundredRecordsRoundTrip) {
    std::vector<fl::RoundRecord> recs;
    for (std::size_t r = 1; r <= 100; ++r) recs.push_back(record(r, 1.0 / static_cast<double>(r + 2)));
    const auto rows = exp::parse_csv(exp::format_csv(recs, "dpp", 1));
    ASSERT_EQ(rows.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_EQ(rows[i].round, recs[i].round);
        EXPECT_NEAR(rows[i].train_accuracy, recs[i].train_accuracy, 1e-12);
        EXPECT_NEAR(rows[i].test_accuracy, recs[i].test_accuracy, 1e-12);
        EXPECT_NEAR(rows[i].mean_loss, recs[i].mean_loss, 1e-12);
        EXPECT_NEAR(rows[i].gemd, recs[i].gemd, 1e-12);
        EXPECT_EQ(rows[i].uplink_bytes, recs[i].uplink_bytes);
    }
}

TEST(Csv, RejectsMalformedInput) {
    EXPECT_THROW(exp::parse_csv("round,strategy\n"), FormatError);
    EXPECT_THROW(exp::parse_csv(std::string(exp::kCsvHeader) + "\n1,dpp,0,x,0,0,0,0,0\n"), FormatError);
    EXPECT_THROW(exp::parse_csv(std::string(exp::kCsvHeader) + "\n1,dpp,0\n"), FormatError);
}

TEST(Summary, RoundsToAccuracyDefinition) {
    EXPECT_EQ(exp::rounds_to_accuracy({0.1, 0.95, 0.85, 0.9}, 0.9), 2u);
    EXPECT_EQ(exp::rounds_to_accuracy({0.1, 0.2}, 0.9), std::nullopt);
    EXPECT_EQ(exp::median_rounds({3, 5, std::nullopt}), 5.0);
    EXPECT_EQ(exp::median_rounds({3, std::nullopt, std::nullopt}), std::nullopt);
    EXPECT_EQ(exp::median_rounds({4, 7}), 5.5);
}

TEST(Summary, MeanCurveThreshold) {
    auto cfg = parse_ok(tiny_config());
    cfg.strategies = {fl::StrategyKind::random};
    cfg.thresholds = {0.6};
    exp::StrategyRun a{fl::StrategyKind::random, 0, {}, {}}, b{fl::StrategyKind::random, 1, {}, {}};
    for (double v : {0.2, 0.7, 0.9}) a.records.push_back(record(a.records.size() + 1, 0.0)), a.records.back().test_accuracy = v;
    for (double v : {0.1, 0.4, 0.5}) b.records.push_back(record(b.records.size() + 1, 0.0)), b.records.back().test_accuracy = v;
    const auto s = exp::summarize(cfg, {a, b});
    const auto& rta = s["strategies"][0]["rounds_to_accuracy"]["0.6"];
    EXPECT_EQ(rta["mean_curve"], 3);  // means 0.15, 0.55, 0.7
    EXPECT_EQ(rta["per_trial"], json::array({2, nullptr}));
    EXPECT_TRUE(rta["median"].is_null());
    EXPECT_EQ(s["schema_version"], 1);
}

TEST(Experiment, RerunIsByteIdentical) {
    const auto cfg = parse_ok(tiny_config());
    const auto base = fs::temp_directory_path() / "dppfl_det_test";
    fs::remove_all(base);
    exp::write_bundle(exp::run_experiment(cfg), base / "a");
    exp::write_bundle(exp::run_experiment(cfg), base / "b");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(base / "a")) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(base / "b" / e.path().filename())) << e.path();
    }
    EXPECT_EQ(files, 4u * 2u + 1u);
    const auto rows = exp::parse_csv(slurp(base / "a" / "dpp_trial1.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[2].round, 3u);
}

TEST(Experiment, TrialsShareDataAcrossStrategiesButNotSeeds) {
    const auto cfg = parse_ok(tiny_config());
    const auto t0 = exp::make_trial(cfg, 0), t0b = exp::make_trial(cfg, 0), t1 = exp::make_trial(cfg, 1);
    EXPECT_EQ(t0.seed, 5u);
    EXPECT_EQ(t1.seed, 6u);
    EXPECT_TRUE(t0.initial == t0b.initial);
    EXPECT_EQ(data::partition_manifest(*t0.partition), data::partition_manifest(*t0b.partition));
    EXPECT_FALSE(t0.initial == t1.initial);
    ASSERT_TRUE(t0.heldout);
    EXPECT_EQ(t0.heldout->size() + t0.train->size(), 60u);
}

TEST(Experiment, StopAtAccuracyEndsEarly) {
    auto cfg = parse_ok(tiny_config());
    cfg.stop_at_accuracy = 0.01;
    cfg.trials = 1;
    const auto b = exp::run_experiment(cfg);
    for (const auto& r : b.runs) EXPECT_EQ(r.records.size(), 1u);
}

TEST(Experiment, IdxSubsetIsClassBalanced) {
    const fs::path dir = fs::temp_directory_path() / "dppfl_subset_test";
    fs::create_directories(dir);
    const std::size_t counts[] = {20, 12, 8};
    std::vector<std::uint8_t> labels, pixels;
    for (std::uint8_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < counts[c]; ++i) labels.push_back(c);
    pixels.assign(labels.size() * 28 * 28, 7);
    data::write_idx_images(dir / "img", 28, 28, pixels);
    data::write_idx_labels(dir / "lab", labels);

    auto j = tiny_config();
    j["dataset"] = "idx";
    j["images"] = (dir / "img").string();
    j["labels"] = (dir / "lab").string();
    j["heldout_fraction"] = 0.0;
    j["subset"] = 19;
    auto cfg = parse_ok(j);
    const auto t = exp::make_trial(cfg, 0);
    std::vector<std::size_t> hist(3, 0);
    for (int y : t.train->labels) ++hist[static_cast<std::size_t>(y)];
    EXPECT_EQ(hist, (std::vector<std::size_t>{7, 6, 6}));

    cfg.dataset.subset = 30;
    EXPECT_THROW(exp::make_trial(cfg, 0), ValueError);
    fs::remove_all(dir);
}
