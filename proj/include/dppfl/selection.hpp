#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dppfl/dpp.hpp"
#include "dppfl/profiling.hpp"
#include "dppfl/rng.hpp"

namespace dppfl::fl {

enum class StrategyKind {
    dpp,                // FL-DP3S: k-DPP over the profile similarity kernel
    random,             // FedAvg: uniform without replacement
    loss_proportional,  // fedsae-like: weighted by latest local loss
    profile_cluster,    // cluster-like: one client per k-means cluster of profiles
};

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

/// Signal used to profile clients for the dpp and profile-cluster strategies.
enum class ProfileSignal { fc1, gradient };

std::string_view to_string(ProfileSignal signal);
ProfileSignal parse_profile_signal(std::string_view name);

struct StrategyOptions {
    ProfileSignal signal = ProfileSignal::fc1;
    profiling::SimilarityOptions similarity;
    std::size_t kmeans_max_iterations = 100;
};

class SelectionStrategy {
public:
    virtual ~SelectionStrategy() = default;

    virtual StrategyKind kind() const noexcept = 0;
    /// Exactly k distinct client ids, ascending.
    virtual dpp::Selection select(std::size_t k, Rng& rng) = 0;
    /// Local losses measured by the clients that trained this round.
    virtual void observe_losses(std::span<const std::size_t> /*clients*/, std::span<const double> /*losses*/) {}
    /// One-time upload each client makes before the first round (profiles), in bytes.
    virtual std::size_t setup_upload_bytes_per_client() const noexcept { return 0; }

    /// Notes about fallbacks taken since the last call.
    std::vector<std::string> take_warnings() { return std::exchange(warnings_, {}); }

protected:
    std::vector<std::string> warnings_;
};

class RandomStrategy final : public SelectionStrategy {
public:
    explicit RandomStrategy(std::size_t num_clients);
    StrategyKind kind() const noexcept override { return StrategyKind::random; }
    dpp::Selection select(std::size_t k, Rng& rng) override;

private:
    std::size_t num_clients_;
};

/// k-DPP over L = S^T S built from client profiles. When the kernel rank r is
/// below k, r clients come from the r-DPP and the rest are filled uniformly.
class DppStrategy final : public SelectionStrategy {
public:
    DppStrategy(const std::vector<profiling::DataProfile>& profiles, const profiling::SimilarityOptions& options = {});
    StrategyKind kind() const noexcept override { return StrategyKind::dpp; }
    dpp::Selection select(std::size_t k, Rng& rng) override;
    std::size_t setup_upload_bytes_per_client() const noexcept override { return profile_bytes_; }

    const profiling::SimilarityMatrix& similarity() const noexcept { return similarity_; }
    const profiling::KernelMatrix& kernel() const noexcept { return kernel_; }
    const dpp::KdppSampler& sampler() const noexcept { return sampler_; }

private:
    profiling::SimilarityMatrix similarity_;
    profiling::KernelMatrix kernel_;
    dpp::KdppSampler sampler_;
    std::size_t profile_bytes_ = 0;
};

/// Weighted sampling without replacement, weight = latest known local loss;
/// clients never observed are weighted at the mean of the observed ones
/// (all equal before any observation).
class LossProportionalStrategy final : public SelectionStrategy {
public:
    explicit LossProportionalStrategy(std::size_t num_clients);
    StrategyKind kind() const noexcept override { return StrategyKind::loss_proportional; }
    dpp::Selection select(std::size_t k, Rng& rng) override;
    void observe_losses(std::span<const std::size_t> clients, std::span<const double> losses) override;
    std::size_t setup_upload_bytes_per_client() const noexcept override { return 0; }

    /// Current sampling weights (after filling in unseen clients).
    std::vector<double> weights() const;

private:
    std::vector<double> loss_;
    std::vector<bool> seen_;
};

/// k-means (k = clients per round) on profiles once, then one uniformly
/// drawn client per cluster each round.
class ProfileClusterStrategy final : public SelectionStrategy {
public:
    ProfileClusterStrategy(const std::vector<profiling::DataProfile>& profiles, std::size_t clusters,
                           std::uint64_t seed, std::size_t max_iterations = 100);
    StrategyKind kind() const noexcept override { return StrategyKind::profile_cluster; }
    dpp::Selection select(std::size_t k, Rng& rng) override;
    std::size_t setup_upload_bytes_per_client() const noexcept override { return profile_bytes_; }

    const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }

private:
    std::vector<std::size_t> assignment_;
    std::vector<std::vector<std::size_t>> members_;
    std::size_t profile_bytes_ = 0;
};

/// Lloyd's k-means with k-means++ seeding. Every cluster ends non-empty
/// (requires points.size() >= k). Returns the cluster of each point.
std::vector<std::size_t> kmeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                                std::size_t max_iterations = 100);

}  // namespace dppfl::fl
