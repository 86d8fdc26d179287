#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dppfl/dataset.hpp"
#include "dppfl/dpp.hpp"
#include "dppfl/nn.hpp"
#include "dppfl/rng.hpp"
#include "dppfl/selection.hpp"

namespace dppfl::fl {

struct FlConfig {
    std::size_t clients_per_round = 1;  // C_p
    std::size_t rounds = 1;             // T
    std::size_t local_epochs = 1;       // E
    double eta = 0.1;
    std::size_t local_batch = 0;  // 0: full local dataset per step
};

/// A labeled batch kept ready for repeated evaluation.
struct EvalSet {
    Tensor batch;
    std::vector<int> labels;
};

/// Called with the sample indices a client's local training reads. May be
/// invoked from several threads at once.
using SampleObserver = std::function<void(std::size_t client, std::span<const std::size_t> indices)>;

struct FlState {
    nn::ModelParams global;
    std::shared_ptr<const data::LabeledDataset> dataset;
    std::shared_ptr<const data::Partition> partition;
    std::shared_ptr<const EvalSet> train_eval;  // union of all clients' samples
    std::shared_ptr<const EvalSet> test_eval;   // held-out split; null when evaluating on train
    std::size_t round = 0;
    FlConfig config;
    std::uint64_t seed = 0;
    SampleObserver on_train_access;
};

/// Validates the configuration against the partition and prepares evaluation sets.
FlState make_state(nn::ModelParams initial, std::shared_ptr<const data::LabeledDataset> dataset,
                   std::shared_ptr<const data::Partition> partition, const FlConfig& config, std::uint64_t seed,
                   std::shared_ptr<const data::LabeledDataset> heldout = nullptr);

struct RoundRecord {
    std::size_t round = 0;
    dpp::Selection selected;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_loss = 0.0;
    double gemd = 0.0;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t downlink_bytes = 0;

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct LocalResult {
    nn::ModelParams params;
    double initial_loss = 0.0;  // local loss at the received global model
};

struct LocalOptions {
    std::size_t batch = 0;       // 0: full batch
    std::uint64_t shuffle_seed = 0;  // only used with mini-batches
    SampleObserver observer;
    std::size_t client_id = 0;
};

/// E sequential steps w <- w - eta * mean_i grad l_i(w) starting from global.
LocalResult local_update(const nn::ModelParams& global, const data::ClientDataset& client,
                         const data::LabeledDataset& parent, std::size_t epochs, double eta,
                         const LocalOptions& options = {});

struct LocalModel {
    nn::ModelParams params;
    std::size_t samples = 0;
};

/// Sample-count weighted mean, computed as p_0 + sum_c w_c (p_c - p_0).
nn::ModelParams aggregate(std::span<const LocalModel> locals);

/// Selection for the next round (state.round + 1).
dpp::Selection select(SelectionStrategy& strategy, const FlState& state, Rng& rng);

/// Select, train locally (clients in parallel), aggregate, evaluate, account bytes.
std::pair<FlState, RoundRecord> run_round(FlState state, SelectionStrategy& strategy, Rng& rng);

/// Max relative deviation between the FedAvg aggregate of the selected
/// clients' local updates and one centralized SGD step on the union of their
/// samples. Coordinates are compared as |a - b| / max(|a|, |b|, 1e-6).
double fedsgd_equivalence_check(const FlState& state, const dpp::Selection& selection);

}  // namespace dppfl::fl
