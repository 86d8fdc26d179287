#include "dppfl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dppfl/error.hpp"
#include "dppfl/metrics.hpp"

namespace dppfl::fl {

namespace {

constexpr double kDeviationFloor = 1e-6;

std::shared_ptr<const EvalSet> make_eval(const data::LabeledDataset& ds, std::span<const std::size_t> idx) {
    return std::make_shared<const EvalSet>(EvalSet{ds.gather(idx), ds.gather_labels(idx)});
}

}  // namespace

FlState make_state(nn::ModelParams initial, std::shared_ptr<const data::LabeledDataset> dataset,
                   std::shared_ptr<const data::Partition> partition, const FlConfig& config, std::uint64_t seed,
                   std::shared_ptr<const data::LabeledDataset> heldout) {
    if (!dataset || !partition) throw ValueError("state needs a dataset and a partition");
    nn::check_params(initial);
    const std::size_t c = partition->client_count();
    if (config.clients_per_round == 0 || config.clients_per_round > c) {
        throw ValueError("clients per round " + std::to_string(config.clients_per_round) + " outside [1, " +
                         std::to_string(c) + "]");
    }
    if (config.local_epochs == 0) throw ValueError("local epochs must be >= 1");
    if (config.rounds == 0) throw ValueError("rounds must be >= 1");
    if (!(config.eta >= 0.0)) throw ValueError("learning rate must be >= 0");

    FlState s;
    s.global = std::move(initial);
    s.dataset = dataset;
    s.partition = partition;
    s.config = config;
    s.seed = seed;
    const auto all = partition->union_indices();
    s.train_eval = make_eval(*dataset, all);
    if (heldout && heldout->size() > 0) {
        std::vector<std::size_t> idx(heldout->size());
        std::iota(idx.begin(), idx.end(), 0);
        s.test_eval = make_eval(*heldout, idx);
    }
    return s;
}

LocalResult local_update(const nn::ModelParams& global, const data::ClientDataset& client,
                         const data::LabeledDataset& parent, std::size_t epochs, double eta,
                         const LocalOptions& options) {
    if (epochs == 0) throw ValueError("local epochs must be >= 1");
    if (client.indices.empty()) throw ValueError("client " + std::to_string(client.client_id) + " has no samples");
    if (options.observer) options.observer(options.client_id, client.indices);

    LocalResult out{global, 0.0};
    if (options.batch == 0 || options.batch >= client.size()) {
        const Tensor batch = parent.gather(client.indices);
        const auto labels = parent.gather_labels(client.indices);
        for (std::size_t e = 0; e < epochs; ++e) {
            auto lg = nn::loss_and_grad(out.params, batch, labels);
            if (e == 0) out.initial_loss = lg.loss;
            out.params = nn::sgd_step(out.params, lg.grads, eta);
        }
        return out;
    }

    Rng rng(options.shuffle_seed);
    std::vector<std::size_t> order = client.indices;
    double first_epoch_loss = 0.0;
    for (std::size_t e = 0; e < epochs; ++e) {
        shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += options.batch) {
            std::span<const std::size_t> mb(order.data() + start, std::min(options.batch, order.size() - start));
            auto lg = nn::loss_and_grad(out.params, parent.gather(mb), parent.gather_labels(mb));
            if (e == 0) first_epoch_loss += lg.loss * static_cast<double>(mb.size());
            out.params = nn::sgd_step(out.params, lg.grads, eta);
        }
    }
    out.initial_loss = first_epoch_loss / static_cast<double>(order.size());
    return out;
}

nn::ModelParams aggregate(std::span<const LocalModel> locals) {
    if (locals.empty()) throw ValueError("aggregate needs at least one local model");
    const auto& base = locals.front().params;
    double total = 0.0;
    for (const auto& m : locals) {
        if (m.params.layers.size() != base.layers.size()) throw ShapeError("aggregate: layer count mismatch");
        for (std::size_t l = 0; l < base.layers.size(); ++l) {
            if (!m.params.layers[l].weight.same_shape(base.layers[l].weight) ||
                !m.params.layers[l].bias.same_shape(base.layers[l].bias)) {
                throw ShapeError("aggregate: layer " + std::string(nn::layer_name(l)) + " shape mismatch (" +
                                 shape_string(m.params.layers[l].weight.shape()) + " vs " +
                                 shape_string(base.layers[l].weight.shape()) + ")");
            }
        }
        total += static_cast<double>(m.samples);
    }
    if (!(total > 0.0)) throw ValueError("aggregate: total sample count is zero");

    nn::ModelParams out = base;
    for (std::size_t c = 1; c < locals.size(); ++c) {
        const double w = static_cast<double>(locals[c].samples) / total;
        for (std::size_t l = 0; l < out.layers.size(); ++l) {
            auto apply = [&](std::span<double> dst, std::span<const double> src, std::span<const double> ref) {
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * (src[i] - ref[i]);
            };
            apply(out.layers[l].weight.data(), locals[c].params.layers[l].weight.data(), base.layers[l].weight.data());
            apply(out.layers[l].bias.data(), locals[c].params.layers[l].bias.data(), base.layers[l].bias.data());
        }
    }
    return out;
}

dpp::Selection select(SelectionStrategy& strategy, const FlState& state, Rng& rng) {
    dpp::Selection sel = strategy.select(state.config.clients_per_round, rng);
    sel.round = state.round + 1;
    return sel;
}

std::pair<FlState, RoundRecord> run_round(FlState state, SelectionStrategy& strategy, Rng& rng) {
    if (state.round >= state.config.rounds) {
        throw ValueError("round " + std::to_string(state.round) + " already reached T = " +
                         std::to_string(state.config.rounds));
    }
    const auto& part = *state.partition;
    const dpp::Selection sel = select(strategy, state, rng);
    const std::size_t k = sel.chosen.size();

    std::vector<LocalModel> locals(k);
    std::vector<double> losses(k);
    std::vector<std::string> errors(k);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i) {
        const auto s = static_cast<std::size_t>(i);
        const std::size_t cid = sel.chosen[s];
        try {
            LocalOptions opts{state.config.local_batch,
                              derive_seed(state.seed, Stream::local_batches, (sel.round << 20) ^ cid),
                              state.on_train_access, cid};
            auto res = local_update(state.global, part.clients[cid], *state.dataset, state.config.local_epochs,
                                    state.config.eta, opts);
            locals[s] = {std::move(res.params), part.clients[cid].size()};
            losses[s] = res.initial_loss;
        } catch (const std::exception& e) {
            errors[s] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("local update failed: " + e);

    strategy.observe_losses(sel.chosen, losses);
    state.global = aggregate(locals);
    state.round = sel.round;

    RoundRecord rec;
    rec.round = sel.round;
    rec.selected = sel;
    const auto train = nn::evaluate(state.global, state.train_eval->batch, state.train_eval->labels);
    rec.train_accuracy = train.accuracy;
    rec.mean_loss = train.mean_loss;
    rec.test_accuracy = state.test_eval
                            ? nn::evaluate(state.global, state.test_eval->batch, state.test_eval->labels).accuracy
                            : train.accuracy;
    rec.gemd = metrics::gemd(sel.chosen, part);
    const std::uint64_t model = nn::wire_bytes(state.global);
    rec.downlink_bytes = model * k;
    rec.uplink_bytes = model * k;
    if (rec.round == 1) rec.uplink_bytes += part.client_count() * strategy.setup_upload_bytes_per_client();
    return {std::move(state), std::move(rec)};
}

double fedsgd_equivalence_check(const FlState& state, const dpp::Selection& selection) {
    const auto& part = *state.partition;
    std::vector<LocalModel> locals;
    std::vector<std::size_t> union_idx;
    for (std::size_t cid : selection.chosen) {
        const auto& client = part.clients.at(cid);
        auto res = local_update(state.global, client, *state.dataset, state.config.local_epochs, state.config.eta);
        locals.push_back({std::move(res.params), client.size()});
        union_idx.insert(union_idx.end(), client.indices.begin(), client.indices.end());
    }
    const nn::ModelParams fedavg = aggregate(locals);
    const auto lg = nn::loss_and_grad(state.global, state.dataset->gather(union_idx),
                                      state.dataset->gather_labels(union_idx));
    const nn::ModelParams central = nn::sgd_step(state.global, lg.grads, state.config.eta);

    double worst = 0.0;
    for (std::size_t l = 0; l < fedavg.layers.size(); ++l) {
        auto cmp = [&](std::span<const double> a, std::span<const double> b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double denom = std::max({std::abs(a[i]), std::abs(b[i]), kDeviationFloor});
                worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
            }
        };
        cmp(fedavg.layers[l].weight.data(), central.layers[l].weight.data());
        cmp(fedavg.layers[l].bias.data(), central.layers[l].bias.data());
    }
    return worst;
}

}  // namespace dppfl::fl
