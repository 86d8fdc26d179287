#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dppfl/tensor.hpp"

namespace dppfl::data {

/// Labeled image samples, [n x 1 x rows x cols] with pixels in [0, 1].
struct LabeledDataset {
    Tensor samples;
    std::vector<int> labels;
    std::size_t classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t height() const { return samples.dim(2); }
    std::size_t width() const { return samples.dim(3); }

    /// Copies the listed samples into a new batch tensor.
    Tensor gather(std::span<const std::size_t> indices) const;
    std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
    /// Sub-dataset holding the listed samples in the given order.
    LabeledDataset subset(std::span<const std::size_t> indices) const;
};

/// Reads an IDX3 image file (magic 0x00000803) and IDX1 label file (magic 0x00000801).
/// Pixels are scaled by 1/255 and the class count is max(label) + 1.
LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes raw IDX files; pixel bytes are given directly. Used for fixtures and exports.
void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Class-conditional Gaussian blobs on a 28x28 grid: each class has a fixed
/// mean pattern, each sample adds a small random shift and pixel noise.
/// Labels are balanced within one sample. Requires n >= classes >= 2.
LabeledDataset synth_dataset(std::size_t n, std::size_t classes, std::uint64_t seed);

struct SkewSpec {
    enum class Kind { fraction, half_half };
    Kind kind = Kind::fraction;
    double xi = 1.0;  // dominant-class share when kind == fraction, in (0, 1]

    static SkewSpec fraction(double xi) { return {Kind::fraction, xi}; }
    static SkewSpec half_half() { return {Kind::half_half, 0.5}; }

    /// "1", "0.8", "0.5", ... or "H".
    static SkewSpec parse(const std::string& text);
    std::string to_string() const;
    void validate() const;

    friend bool operator==(const SkewSpec&, const SkewSpec&) = default;
};

struct ClientDataset {
    std::size_t client_id = 0;
    std::vector<std::size_t> indices;  // into the parent LabeledDataset
    std::vector<std::size_t> label_hist;

    std::size_t size() const noexcept { return indices.size(); }
};

struct Partition {
    std::vector<ClientDataset> clients;
    SkewSpec skew;
    std::vector<std::size_t> global_hist;  // over the union of all clients
    std::size_t classes = 0;

    std::size_t client_count() const noexcept { return clients.size(); }
    /// Every client's indices, concatenated in client order.
    std::vector<std::size_t> union_indices() const;
};

/// Splits samples across num_clients clients of exactly floor(n / num_clients)
/// samples each. Client c's dominant class is c mod N; for fraction(xi) the
/// other share is drawn uniformly from the remaining samples of the other
/// classes; for half-half the classes are c mod N and (c + 1) mod N.
/// Throws ValueError with per-class supply and demand when infeasible.
Partition partition(const LabeledDataset& ds, std::size_t num_clients, const SkewSpec& skew, std::uint64_t seed);
Partition partition_labels(std::span<const int> labels, std::size_t classes, std::size_t num_clients,
                           const SkewSpec& skew, std::uint64_t seed);

/// {"skew": ..., "classes": N, "global_hist": [...], "clients": [{"client_id", "indices" (sorted), "label_hist"}]}
nlohmann::json partition_manifest(const Partition& p);

}  // namespace dppfl::data
