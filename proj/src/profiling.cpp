#include "dppfl/profiling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "dppfl/error.hpp"

namespace dppfl::profiling {

namespace {

DataProfile moments(std::size_t client_id, const std::vector<std::vector<double>>& rows) {
    const std::size_t q = rows.front().size();
    DataProfile p{client_id, std::vector<double>(q, 0.0), std::vector<double>(q, 0.0)};
    for (const auto& r : rows)
        for (std::size_t j = 0; j < q; ++j) p.mean[j] += r[j];
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& m : p.mean) m *= inv;
    for (const auto& r : rows)
        for (std::size_t j = 0; j < q; ++j) {
            const double d = r[j] - p.mean[j];
            p.var[j] += d * d;
        }
    for (double& v : p.var) v *= inv;
    return p;
}

}  // namespace

DataProfile profile_client(const nn::ModelParams& params, const data::ClientDataset& client,
                           const data::LabeledDataset& parent) {
    if (client.indices.empty()) {
        throw ValueError("cannot profile client " + std::to_string(client.client_id) + ": no samples");
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(client.size());
    std::span<const std::size_t> idx(client.indices);
    for (std::size_t start = 0; start < idx.size(); start += kProfileBatch) {
        const auto chunk = idx.subspan(start, std::min(kProfileBatch, idx.size() - start));
        const auto out = nn::forward(params, parent.gather(chunk));
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            auto r = out.fc1_pre.slice(i);
            rows.emplace_back(r.begin(), r.end());
        }
    }
    return moments(client.client_id, rows);
}

std::vector<DataProfile> profile_clients(const nn::ModelParams& params, const data::Partition& partition,
                                         const data::LabeledDataset& parent) {
    std::vector<DataProfile> out;
    out.reserve(partition.client_count());
    // forward() already parallelizes over samples within each client.
    for (const auto& c : partition.clients) out.push_back(profile_client(params, c, parent));
    return out;
}

DataProfile gradient_profile(const nn::ModelParams& params, const data::ClientDataset& client,
                             const data::LabeledDataset& parent) {
    if (client.indices.empty()) {
        throw ValueError("cannot profile client " + std::to_string(client.client_id) + ": no samples");
    }
    const auto lg = nn::loss_and_grad(params, parent.gather(client.indices), parent.gather_labels(client.indices));
    const auto& last = lg.grads.layers[nn::kFc2];
    DataProfile p;
    p.client_id = client.client_id;
    p.mean.assign(last.weight.data().begin(), last.weight.data().end());
    p.mean.insert(p.mean.end(), last.bias.data().begin(), last.bias.data().end());
    p.var.assign(p.mean.size(), 0.0);
    return p;
}

SimilarityMatrix similarity_matrix(std::span<const DataProfile> profiles, const SimilarityOptions& options) {
    const std::size_t c = profiles.size();
    if (c < 2) throw ValueError("similarity matrix needs at least two profiles");
    const std::size_t q = profiles.front().mean.size();
    for (const auto& p : profiles) {
        if (p.mean.size() != q) {
            throw ShapeError("profile of client " + std::to_string(p.client_id) + " has " +
                             std::to_string(p.mean.size()) + " coordinates, expected " + std::to_string(q));
        }
    }

    SimilarityMatrix out{linalg::Matrix(c, c), linalg::Matrix(c, c)};
    for (std::size_t m = 0; m < c; ++m)
        for (std::size_t n = m + 1; n < c; ++n) {
            double d = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                const double diff = profiles[m].mean[j] - profiles[n].mean[j];
                d += diff * diff;
            }
            out.raw(m, n) = out.raw(n, m) = std::sqrt(d);
        }

    double lo = options.normalize_offdiag_only ? out.raw(0, 1) : 0.0;
    double hi = 0.0;
    for (std::size_t m = 0; m < c; ++m)
        for (std::size_t n = 0; n < c; ++n) {
            if (m == n) continue;
            lo = std::min(lo, out.raw(m, n));
            hi = std::max(hi, out.raw(m, n));
        }

    for (std::size_t m = 0; m < c; ++m)
        for (std::size_t n = 0; n < c; ++n) {
            if (hi == lo || m == n) {
                out.s(m, n) = 1.0;
            } else {
                out.s(m, n) = std::clamp(1.0 - (out.raw(m, n) - lo) / (hi - lo), 0.0, 1.0);
            }
        }
    return out;
}

KernelMatrix kernel_matrix(const SimilarityMatrix& s) {
    KernelMatrix k{linalg::matmul(linalg::transpose(s.s), s.s)};
    // S^T S is symmetric in exact arithmetic; remove rounding asymmetry.
    for (std::size_t i = 0; i < k.l.rows(); ++i)
        for (std::size_t j = i + 1; j < k.l.cols(); ++j) k.l(j, i) = k.l(i, j);
    return k;
}

std::vector<std::uint8_t> profiles_to_blob(std::span<const DataProfile> profiles) {
    std::vector<std::uint8_t> out;
    for (const auto& p : profiles)
        for (double v : p.mean) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
        }
    return out;
}

nlohmann::json profiles_to_json(std::span<const DataProfile> profiles) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : profiles) arr.push_back({{"client_id", p.client_id}, {"mean", p.mean}, {"var", p.var}});
    return arr;
}

nlohmann::json matrix_to_json(const linalg::Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

}  // namespace dppfl::profiling
