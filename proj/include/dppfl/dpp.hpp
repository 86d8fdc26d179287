#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "dppfl/linalg.hpp"
#include "dppfl/rng.hpp"

namespace dppfl::dpp {

/// A set of exactly k distinct client ids, ascending.
struct Selection {
    std::size_t round = 0;
    std::vector<std::size_t> chosen;

    std::size_t size() const noexcept { return chosen.size(); }
    friend bool operator==(const Selection&, const Selection&) = default;
};

/// table(j, n) = e_j(lambda_1..lambda_n) for 0 <= j <= k, 0 <= n <= C.
class ElemSymPoly {
public:
    ElemSymPoly(std::size_t k, std::size_t n) : k_(k), n_(n), table_((k + 1) * (n + 1), 0.0) {}

    double operator()(std::size_t j, std::size_t n) const noexcept { return table_[j * (n_ + 1) + n]; }
    double& operator()(std::size_t j, std::size_t n) noexcept { return table_[j * (n_ + 1) + n]; }
    std::size_t k() const noexcept { return k_; }
    std::size_t n() const noexcept { return n_; }

private:
    std::size_t k_, n_;
    std::vector<double> table_;
};

/// Elementary symmetric polynomials by the recurrence
/// e_j(n) = e_j(n-1) + lambda_n * e_{j-1}(n-1). Requires k <= eigenvalues.size().
ElemSymPoly esp(std::span<const double> eigenvalues, std::size_t k);

/// Eigenvalues in [-1e-9 * max(1, |L|), 0) are clamped to 0; anything lower
/// means L is not PSD and raises NumericError.
inline constexpr double kClampTolerance = 1e-9;
/// Eigenvalues at or below this fraction of the largest one count as zero rank.
inline constexpr double kRankTolerance = 1e-10;
/// Phase-1 inclusion probabilities are clamped after this much slack outside [0, 1].
inline constexpr double kProbabilitySlack = 1e-12;

linalg::EigenDecomposition psd_eigh(const linalg::Matrix& l);

/// Exact k-DPP sampler (eigenvector selection by elementary symmetric
/// polynomials, then elementary-DPP sampling). The eigendecomposition is
/// computed once and reused across draws.
class KdppSampler {
public:
    explicit KdppSampler(const linalg::Matrix& l);

    std::size_t size() const noexcept { return eig_.values.size(); }
    /// Number of eigenvalues above kRankTolerance * max eigenvalue.
    std::size_t rank() const noexcept { return rank_; }
    const linalg::EigenDecomposition& eigen() const noexcept { return eig_; }

    /// Throws ValueError unless 1 <= k <= size(), NumericError when rank() < k.
    Selection sample(std::size_t k, Rng& rng) const;

private:
    linalg::EigenDecomposition eig_;
    std::vector<double> lambda_;  // clamped, with sub-rank values zeroed
    std::size_t rank_ = 0;
};

Selection kdpp_sample(const linalg::Matrix& l, std::size_t k, Rng& rng);

/// det(L_Y); det of the empty set is 1.
double dpp_unnormalized(const linalg::Matrix& l, std::span<const std::size_t> subset);

inline constexpr std::size_t kBruteForceLimit = 15;

/// Pr^k(Y) for every k-subset (ascending ids) by explicit principal minors.
/// Throws ValueError for C > kBruteForceLimit.
std::map<std::vector<std::size_t>, double> kdpp_pmf_bruteforce(const linalg::Matrix& l, std::size_t k);

/// L = B B^T with standard normal B (n x n) drawn from seed; full rank almost surely.
linalg::Matrix random_psd_kernel(std::size_t n, std::uint64_t seed);

/// Calls f once per k-subset of {0..n-1} in lexicographic order.
void for_each_combination(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& f);

}  // namespace dppfl::dpp
