#include "dppfl/selection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>

#include "dppfl/error.hpp"

namespace dppfl::fl {

namespace {

void check_k(std::size_t k, std::size_t n) {
    if (k == 0 || k > n) {
        throw ValueError("cannot select " + std::to_string(k) + " of " + std::to_string(n) + " clients");
    }
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

// Picks index i with probability w[i] / sum(w); uniform when all weights vanish.
std::size_t weighted_pick(std::span<const double> w, Rng& rng) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) return static_cast<std::size_t>(uniform_index(rng, w.size()));
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        last = i;
        acc += w[i];
        if (target < acc) return i;
    }
    return last;
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::dpp: return "dpp";
        case StrategyKind::random: return "random";
        case StrategyKind::loss_proportional: return "fedsae-like";
        case StrategyKind::profile_cluster: return "cluster-like";
    }
    return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
    if (name == "dpp" || name == "fl-dp3s") return StrategyKind::dpp;
    if (name == "random" || name == "fedavg") return StrategyKind::random;
    if (name == "fedsae-like" || name == "loss-proportional") return StrategyKind::loss_proportional;
    if (name == "cluster-like" || name == "profile-cluster") return StrategyKind::profile_cluster;
    throw ValueError("unknown selection strategy '" + std::string(name) + "'");
}

std::string_view to_string(ProfileSignal signal) { return signal == ProfileSignal::fc1 ? "fc1" : "gradient"; }

ProfileSignal parse_profile_signal(std::string_view name) {
    if (name == "fc1") return ProfileSignal::fc1;
    if (name == "gradient") return ProfileSignal::gradient;
    throw ValueError("unknown profile signal '" + std::string(name) + "'");
}

RandomStrategy::RandomStrategy(std::size_t num_clients) : num_clients_(num_clients) {
    if (num_clients == 0) throw ValueError("random strategy needs at least one client");
}

dpp::Selection RandomStrategy::select(std::size_t k, Rng& rng) {
    check_k(k, num_clients_);
    std::vector<std::size_t> ids(num_clients_);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, num_clients_ - i));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return {0, std::move(ids)};
}

DppStrategy::DppStrategy(const std::vector<profiling::DataProfile>& profiles,
                         const profiling::SimilarityOptions& options)
    : similarity_(profiling::similarity_matrix(profiles, options)),
      kernel_(profiling::kernel_matrix(similarity_)),
      sampler_(kernel_.l),
      profile_bytes_(4 * profiles.front().mean.size()) {}

dpp::Selection DppStrategy::select(std::size_t k, Rng& rng) {
    const std::size_t n = sampler_.size();
    check_k(k, n);
    const std::size_t rank = sampler_.rank();
    if (rank >= k) return sampler_.sample(k, rng);

    dpp::Selection sel;
    if (rank > 0) sel = sampler_.sample(rank, rng);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
        if (!std::binary_search(sel.chosen.begin(), sel.chosen.end(), i)) rest.push_back(i);
    for (std::size_t i = 0; sel.chosen.size() < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, rest.size() - i));
        std::swap(rest[i], rest[j]);
        sel.chosen.push_back(rest[i]);
    }
    std::sort(sel.chosen.begin(), sel.chosen.end());
    warnings_.push_back("kernel rank " + std::to_string(rank) + " below " + std::to_string(k) + "; filled " +
                        std::to_string(k - rank) + " slots uniformly");
    return sel;
}

LossProportionalStrategy::LossProportionalStrategy(std::size_t num_clients)
    : loss_(num_clients, 0.0), seen_(num_clients, false) {
    if (num_clients == 0) throw ValueError("loss-proportional strategy needs at least one client");
}

std::vector<double> LossProportionalStrategy::weights() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < loss_.size(); ++i)
        if (seen_[i]) {
            sum += loss_[i];
            ++count;
        }
    const double fill = count ? sum / static_cast<double>(count) : 1.0;
    std::vector<double> w(loss_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = seen_[i] ? loss_[i] : fill;
    return w;
}

dpp::Selection LossProportionalStrategy::select(std::size_t k, Rng& rng) {
    check_k(k, loss_.size());
    auto w = weights();
    std::vector<std::size_t> ids(w.size());
    std::iota(ids.begin(), ids.end(), 0);
    dpp::Selection sel;
    for (std::size_t round = 0; round < k; ++round) {
        const std::size_t i = weighted_pick(w, rng);
        sel.chosen.push_back(ids[i]);
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(i));
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(i));
    }
    std::sort(sel.chosen.begin(), sel.chosen.end());
    return sel;
}

void LossProportionalStrategy::observe_losses(std::span<const std::size_t> clients, std::span<const double> losses) {
    for (std::size_t i = 0; i < clients.size(); ++i) {
        loss_.at(clients[i]) = losses[i];
        seen_.at(clients[i]) = true;
    }
}

ProfileClusterStrategy::ProfileClusterStrategy(const std::vector<profiling::DataProfile>& profiles,
                                               std::size_t clusters, std::uint64_t seed,
                                               std::size_t max_iterations)
    : profile_bytes_(profiles.empty() ? 0 : 4 * profiles.front().mean.size()) {
    check_k(clusters, profiles.size());
    std::vector<std::vector<double>> points;
    points.reserve(profiles.size());
    for (const auto& p : profiles) points.push_back(p.mean);
    Rng rng = make_rng(seed, Stream::clustering);
    assignment_ = kmeans(points, clusters, rng, max_iterations);
    members_.assign(clusters, {});
    for (std::size_t i = 0; i < assignment_.size(); ++i) members_[assignment_[i]].push_back(i);
}

dpp::Selection ProfileClusterStrategy::select(std::size_t k, Rng& rng) {
    if (k != members_.size()) {
        throw ValueError("cluster-like strategy was built for " + std::to_string(members_.size()) +
                         " clients per round, asked for " + std::to_string(k));
    }
    dpp::Selection sel;
    for (const auto& m : members_) sel.chosen.push_back(m[static_cast<std::size_t>(uniform_index(rng, m.size()))]);
    std::sort(sel.chosen.begin(), sel.chosen.end());
    return sel;
}

std::vector<std::size_t> kmeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                                std::size_t max_iterations) {
    const std::size_t n = points.size();
    check_k(k, n);
    const std::size_t dim = points.front().size();

    // k-means++ seeding over distinct point indices.
    std::vector<std::size_t> seeds{static_cast<std::size_t>(uniform_index(rng, n))};
    std::vector<double> d2(n);
    while (seeds.size() < k) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t s : seeds) best = std::min(best, squared_distance(points[i], points[s]));
            d2[i] = best;
        }
        for (std::size_t s : seeds) d2[s] = 0.0;
        std::size_t pick;
        if (std::accumulate(d2.begin(), d2.end(), 0.0) > 0.0) {
            pick = weighted_pick(d2, rng);
        } else {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (std::find(seeds.begin(), seeds.end(), i) == seeds.end()) free.push_back(i);
            pick = free[static_cast<std::size_t>(uniform_index(rng, free.size()))];
        }
        seeds.push_back(pick);
    }

    std::vector<std::vector<double>> centers;
    for (std::size_t s : seeds) centers.push_back(points[s]);
    std::vector<std::size_t> assign(n, k);
    for (std::size_t s = 0; s < k; ++s) assign[seeds[s]] = s;

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = assign[i] < k ? assign[i] : 0;
            double best_d = squared_distance(points[i], centers[best]);
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(points[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (best != assign[i]) {
                assign[i] = best;
                changed = true;
            }
        }
        // Refill empty clusters with the point farthest from its own center.
        std::vector<std::size_t> count(k, 0);
        for (std::size_t a : assign) ++count[a];
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[assign[i]] < 2) continue;
                const double d = squared_distance(points[i], centers[assign[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --count[assign[far]];
            assign[far] = c;
            count[c] = 1;
            centers[c] = points[far];
            changed = true;
        }
        for (std::size_t c = 0; c < k; ++c) std::fill(centers[c].begin(), centers[c].end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dim; ++j) centers[assign[i]][j] += points[i][j];
        for (std::size_t c = 0; c < k; ++c)
            for (double& v : centers[c]) v /= static_cast<double>(count[c]);
        if (!changed) break;
    }
    return assign;
}

}  // namespace dppfl::fl
