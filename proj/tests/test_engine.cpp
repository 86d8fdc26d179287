#include <gtest/gtest.h>

#include <mutex>
#include <set>

#include "dppfl/engine.hpp"
#include "dppfl/error.hpp"
#include "support/oracles.hpp"

using namespace dppfl;

namespace {

nn::ModelParams filled(const nn::Architecture& a, double v) {
    auto p = nn::zero_params(a);
    for (auto& l : p.layers) {
        std::fill(l.weight.data().begin(), l.weight.data().end(), v);
        std::fill(l.bias.data().begin(), l.bias.data().end(), v);
    }
    return p;
}

bool all_equal(const nn::ModelParams& p, double v) {
    for (const auto& l : p.layers) {
        for (double x : l.weight.data())
            if (x != v) return false;
        for (double x : l.bias.data())
            if (x != v) return false;
    }
    return true;
}

// Random 10x10 images in label blocks of per_client samples, so that a pure
// single-class partition over n / per_client clients is always feasible.
std::shared_ptr<const data::LabeledDataset> toy_dataset(std::size_t n, std::size_t per_client, std::uint64_t seed) {
    const auto a = oracle::toy_arch();
    data::LabeledDataset ds;
    ds.samples = oracle::random_batch(a, n, seed);
    for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>((i / per_client) % a.classes));
    ds.classes = a.classes;
    return std::make_shared<const data::LabeledDataset>(std::move(ds));
}

fl::FlState toy_state(std::size_t clients, std::size_t per_client, const fl::FlConfig& cfg, std::uint64_t seed = 1) {
    auto ds = toy_dataset(clients * per_client, per_client, seed);
    auto part = std::make_shared<const data::Partition>(
        data::partition(*ds, clients, data::SkewSpec::fraction(1.0), seed));
    return fl::make_state(oracle::random_params(oracle::toy_arch(), seed), ds, part, cfg, seed);
}

}  // namespace

TEST(Aggregate, ExactCases) {
    const auto a = oracle::toy_arch();
    const auto p = oracle::random_params(a, 1);
    EXPECT_TRUE(fl::aggregate(std::vector<fl::LocalModel>{{p, 7}}) == p);

    auto neg = p;
    for (auto& l : neg.layers) {
        for (double& x : l.weight.data()) x = -x;
        for (double& x : l.bias.data()) x = -x;
    }
    EXPECT_TRUE(all_equal(fl::aggregate(std::vector<fl::LocalModel>{{p, 5}, {neg, 5}}), 0.0));
    EXPECT_TRUE(all_equal(fl::aggregate(std::vector<fl::LocalModel>{{filled(a, 1.0), 100}, {filled(a, 5.0), 300}}), 4.0));
}

TEST(Aggregate, RejectsBadInput) {
    EXPECT_THROW(fl::aggregate({}), ValueError);
    const auto a = oracle::toy_arch();
    auto b = a;
    b.fc1_units = 5;
    EXPECT_THROW(fl::aggregate(std::vector<fl::LocalModel>{{nn::zero_params(a), 1}, {nn::zero_params(b), 1}}),
                 ShapeError);
    EXPECT_THROW(fl::aggregate(std::vector<fl::LocalModel>{{nn::zero_params(a), 0}}), ValueError);
}

TEST(LocalUpdate, ZeroRateLeavesModelUnchanged) {
    auto s = toy_state(4, 6, {2, 3, 2, 0.0});
    const auto r = fl::local_update(s.global, s.partition->clients[0], *s.dataset, 3, 0.0);
    EXPECT_TRUE(r.params == s.global);
    fl::RandomStrategy random(4);
    auto rng = make_rng(1, Stream::selection);
    const auto before = s.global;
    auto [next, rec] = fl::run_round(std::move(s), random, rng);
    EXPECT_TRUE(next.global == before);
    EXPECT_EQ(rec.round, 1u);
}

TEST(LocalUpdate, EpochsAreSequentialFullBatchSteps) {
    auto s = toy_state(2, 6, {1, 1, 2, 0.3});
    const auto& c = s.partition->clients[1];
    const auto x = s.dataset->gather(c.indices);
    const auto y = s.dataset->gather_labels(c.indices);
    auto manual = s.global;
    const double first_loss = nn::loss_and_grad(manual, x, y).loss;
    for (int e = 0; e < 2; ++e) manual = nn::sgd_step(manual, nn::loss_and_grad(manual, x, y).grads, 0.3);
    const auto r = fl::local_update(s.global, c, *s.dataset, 2, 0.3);
    EXPECT_TRUE(r.params == manual);
    EXPECT_EQ(r.initial_loss, first_loss);
}

TEST(LocalUpdate, MiniBatchesAreDeterministic) {
    auto s = toy_state(2, 9, {1, 1, 1, 0.1});
    fl::LocalOptions o;
    o.batch = 4;
    o.shuffle_seed = 12;
    const auto a = fl::local_update(s.global, s.partition->clients[0], *s.dataset, 2, 0.1, o);
    const auto b = fl::local_update(s.global, s.partition->clients[0], *s.dataset, 2, 0.1, o);
    EXPECT_TRUE(a.params == b.params);
    EXPECT_FALSE(a.params == s.global);
}

TEST(FedSgd, OneEpochAggregateEqualsCentralStep) {
    auto s = toy_state(8, 6, {5, 1, 1, 0.2});
    dpp::Selection sel{1, {0, 2, 3, 5, 7}};
    EXPECT_LE(fl::fedsgd_equivalence_check(s, sel), 1e-6);
}

TEST(RunRound, OnlySelectedClientsTrain) {
    auto s = toy_state(10, 5, {3, 4, 1, 0.1});
    std::mutex mu;
    std::set<std::size_t> touched_clients, touched_samples;
    s.on_train_access = [&](std::size_t client, std::span<const std::size_t> idx) {
        std::lock_guard lock(mu);
        touched_clients.insert(client);
        touched_samples.insert(idx.begin(), idx.end());
    };
    const auto partition = s.partition;
    fl::RandomStrategy random(10);
    auto rng = make_rng(2, Stream::selection);
    for (int r = 0; r < 4; ++r) {
        touched_clients.clear();
        touched_samples.clear();
        auto [next, rec] = fl::run_round(std::move(s), random, rng);
        s = std::move(next);
        EXPECT_EQ(touched_clients, std::set<std::size_t>(rec.selected.chosen.begin(), rec.selected.chosen.end()));
        std::set<std::size_t> allowed;
        for (auto c : rec.selected.chosen)
            allowed.insert(partition->clients[c].indices.begin(), partition->clients[c].indices.end());
        EXPECT_EQ(touched_samples, allowed);
    }
    EXPECT_THROW(fl::run_round(std::move(s), random, rng), ValueError);
}

TEST(RunRound, ByteAccounting) {
    auto s = toy_state(6, 4, {2, 2, 1, 0.1});
    const std::uint64_t model = nn::wire_bytes(s.global);
    std::vector<profiling::DataProfile> profiles;
    for (std::size_t c = 0; c < 6; ++c) profiles.push_back({c, {double(c), double(c * c), 1.0, 0.0}, {}});
    fl::DppStrategy dpp_strategy(profiles);
    auto rng = make_rng(3, Stream::selection);
    auto [s1, r1] = fl::run_round(s, dpp_strategy, rng);
    EXPECT_EQ(r1.downlink_bytes, 2 * model);
    EXPECT_EQ(r1.uplink_bytes, 2 * model + 6 * 4 * 4);
    auto [s2, r2] = fl::run_round(std::move(s1), dpp_strategy, rng);
    EXPECT_EQ(r2.uplink_bytes, 2 * model);
    EXPECT_EQ(r2.round, 2u);

    fl::RandomStrategy random(6);
    auto [s3, r3] = fl::run_round(s, random, rng);
    EXPECT_EQ(r3.uplink_bytes, 2 * model);
}

TEST(RunRound, DeterministicGivenSeeds) {
    auto run = [] {
        auto s = toy_state(6, 5, {3, 3, 2, 0.2}, 9);
        fl::LossProportionalStrategy strat(6);
        auto rng = make_rng(9, Stream::selection);
        std::vector<fl::RoundRecord> recs;
        for (int r = 0; r < 3; ++r) {
            auto [next, rec] = fl::run_round(std::move(s), strat, rng);
            s = std::move(next);
            recs.push_back(rec);
        }
        return recs;
    };
    EXPECT_EQ(run(), run());
}

TEST(State, ValidatesConfiguration) {
    auto ds = toy_dataset(12, 3, 1);
    auto part = std::make_shared<const data::Partition>(data::partition(*ds, 4, data::SkewSpec::fraction(1.0), 1));
    const auto p = oracle::random_params(oracle::toy_arch(), 1);
    EXPECT_THROW(fl::make_state(p, ds, part, {5, 1, 1, 0.1}, 0), ValueError);
    EXPECT_THROW(fl::make_state(p, ds, part, {2, 1, 0, 0.1}, 0), ValueError);
    EXPECT_THROW(fl::make_state(p, ds, part, {2, 0, 1, 0.1}, 0), ValueError);
    EXPECT_THROW(fl::make_state(p, ds, part, {2, 1, 1, -0.1}, 0), ValueError);
    EXPECT_NO_THROW(fl::make_state(p, ds, part, {4, 1, 1, 0.1}, 0));
}
