#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "dppfl/dataset.hpp"
#include "dppfl/linalg.hpp"
#include "dppfl/nn.hpp"

namespace dppfl::profiling {

/// Per-client mean (and population variance) of the FC-1 pre-activation outputs.
struct DataProfile {
    std::size_t client_id = 0;
    std::vector<double> mean;  // u_1..u_Q
    std::vector<double> var;   // diagnostics only
};

/// Samples per forward batch when profiling.
inline constexpr std::size_t kProfileBatch = 256;

DataProfile profile_client(const nn::ModelParams& params, const data::ClientDataset& client,
                           const data::LabeledDataset& parent);

/// Profiles of every client; clients are processed in parallel.
std::vector<DataProfile> profile_clients(const nn::ModelParams& params, const data::Partition& partition,
                                         const data::LabeledDataset& parent);

/// Alternative profiling signal: the client's mean FC-2 weight/bias gradient at params.
DataProfile gradient_profile(const nn::ModelParams& params, const data::ClientDataset& client,
                             const data::LabeledDataset& parent);

struct SimilarityMatrix {
    linalg::Matrix s;    // normalized similarities in [0, 1]
    linalg::Matrix raw;  // pairwise Euclidean distances between profile means
};

struct SimilarityOptions {
    /// Take min/max over off-diagonal distances only (diagonal then pinned to 1).
    bool normalize_offdiag_only = false;
};

/// s_mn = 1 - (d_mn - min d) / (max d - min d); all-ones when every distance is equal.
SimilarityMatrix similarity_matrix(std::span<const DataProfile> profiles, const SimilarityOptions& options = {});

struct KernelMatrix {
    linalg::Matrix l;  // S^T S
};

KernelMatrix kernel_matrix(const SimilarityMatrix& s);

/// Bits a profile occupies on the wire for bits_per_float-bit floats (B * Q).
inline std::size_t profile_wire_bits(const DataProfile& p, std::size_t bits_per_float = 32) noexcept {
    return bits_per_float * p.mean.size();
}

/// Client-ordered means as little-endian float32.
std::vector<std::uint8_t> profiles_to_blob(std::span<const DataProfile> profiles);
nlohmann::json profiles_to_json(std::span<const DataProfile> profiles);
nlohmann::json matrix_to_json(const linalg::Matrix& m);

}  // namespace dppfl::profiling
