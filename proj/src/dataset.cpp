#include "dppfl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dppfl/error.hpp"
#include "dppfl/rng.hpp"

namespace dppfl::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::filesystem::path& path) {
    if (offset + 4 > bytes.size()) {
        throw FormatError(path.string() + ": truncated header at offset " + std::to_string(offset));
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

std::string supply_demand_table(const std::vector<std::size_t>& supply, const std::vector<std::size_t>& demand) {
    std::ostringstream os;
    for (std::size_t j = 0; j < supply.size(); ++j) {
        os << (j ? "; " : "") << "class " << j << " supply " << supply[j] << " demand " << demand[j];
    }
    return os.str();
}

}  // namespace

Tensor LabeledDataset::gather(std::span<const std::size_t> indices) const {
    auto shape = samples.shape();
    const std::size_t stride = samples.size() / shape[0];
    shape[0] = indices.size();
    Tensor out(shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw ValueError("sample index " + std::to_string(indices[i]) + " out of range");
        auto src = samples.slice(indices[i]);
        std::copy(src.begin(), src.end(), out.raw() + i * stride);
    }
    return out;
}

std::vector<int> LabeledDataset::gather_labels(std::span<const std::size_t> indices) const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(labels.at(i));
    return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
    return {gather(indices), gather_labels(indices), classes};
}

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto img = read_file(images_path);
    const auto lab = read_file(labels_path);

    if (const auto magic = read_be32(img, 0, images_path); magic != kImagesMagic) {
        std::ostringstream os;
        os << images_path.string() << ": bad magic 0x" << std::hex << magic << " at offset 0, expected 0x803";
        throw FormatError(os.str());
    }
    if (const auto magic = read_be32(lab, 0, labels_path); magic != kLabelsMagic) {
        std::ostringstream os;
        os << labels_path.string() << ": bad magic 0x" << std::hex << magic << " at offset 0, expected 0x801";
        throw FormatError(os.str());
    }
    const std::size_t n = read_be32(img, 4, images_path);
    const std::size_t rows = read_be32(img, 8, images_path);
    const std::size_t cols = read_be32(img, 12, images_path);
    const std::size_t n_labels = read_be32(lab, 4, labels_path);
    if (n != n_labels) {
        throw FormatError(labels_path.string() + ": declares " + std::to_string(n_labels) + " labels at offset 4 but " +
                          images_path.string() + " declares " + std::to_string(n) + " images");
    }
    if (n == 0 || rows == 0 || cols == 0) throw FormatError(images_path.string() + ": empty image set at offset 4");
    const std::size_t pixels = n * rows * cols;
    if (img.size() < 16 + pixels) {
        throw FormatError(images_path.string() + ": truncated pixel data at offset " + std::to_string(img.size()) +
                          ", expected " + std::to_string(16 + pixels) + " bytes");
    }
    if (lab.size() < 8 + n) {
        throw FormatError(labels_path.string() + ": truncated label data at offset " + std::to_string(lab.size()) +
                          ", expected " + std::to_string(8 + n) + " bytes");
    }

    LabeledDataset ds;
    ds.samples = Tensor({n, 1, rows, cols});
    auto px = ds.samples.data();
    for (std::size_t i = 0; i < pixels; ++i) px[i] = static_cast<double>(img[16 + i]) / 255.0;
    ds.labels.resize(n);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = lab[8 + i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.classes = static_cast<std::size_t>(max_label) + 1;
    return ds;
}

void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels) {
    if (rows == 0 || cols == 0 || pixels.size() % (rows * cols) != 0) {
        throw ValueError("pixel buffer is not a whole number of " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " images");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    put_be32(out, kImagesMagic);
    put_be32(out, static_cast<std::uint32_t>(pixels.size() / (rows * cols)));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    put_be32(out, kLabelsMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

LabeledDataset synth_dataset(std::size_t n, std::size_t classes, std::uint64_t seed) {
    if (classes < 2 || n < classes) {
        throw ValueError("synthetic dataset needs n >= classes >= 2 (got n=" + std::to_string(n) +
                         ", classes=" + std::to_string(classes) + ")");
    }
    constexpr std::size_t side = 28;
    constexpr std::size_t blobs = 3;
    constexpr double noise = 0.15;
    Rng rng = make_rng(seed, Stream::dataset);

    // Mean pattern per class.
    std::vector<std::vector<double>> patterns(classes, std::vector<double>(side * side, 0.0));
    for (auto& pat : patterns) {
        for (std::size_t b = 0; b < blobs; ++b) {
            const double cy = 6.0 + 16.0 * uniform01(rng);
            const double cx = 6.0 + 16.0 * uniform01(rng);
            const double sigma = 1.5 + 2.0 * uniform01(rng);
            for (std::size_t y = 0; y < side; ++y)
                for (std::size_t x = 0; x < side; ++x) {
                    const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    pat[y * side + x] += 0.9 * std::exp(-d2 / (2.0 * sigma * sigma));
                }
        }
        for (double& v : pat) v = std::min(v, 1.0);
    }

    LabeledDataset ds;
    ds.classes = classes;
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(i % classes);
    shuffle(ds.labels.begin(), ds.labels.end(), rng);

    ds.samples = Tensor({n, 1, side, side});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pat = patterns[static_cast<std::size_t>(ds.labels[i])];
        const auto dy = static_cast<std::ptrdiff_t>(uniform_index(rng, 3)) - 1;
        const auto dx = static_cast<std::ptrdiff_t>(uniform_index(rng, 3)) - 1;
        auto img = ds.samples.slice(i);
        for (std::size_t y = 0; y < side; ++y)
            for (std::size_t x = 0; x < side; ++x) {
                const auto sy = static_cast<std::ptrdiff_t>(y) - dy;
                const auto sx = static_cast<std::ptrdiff_t>(x) - dx;
                double v = 0.0;
                if (sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(side) &&
                    sx < static_cast<std::ptrdiff_t>(side)) {
                    v = pat[static_cast<std::size_t>(sy) * side + static_cast<std::size_t>(sx)];
                }
                v += noise * normal01(rng);
                img[y * side + x] = std::clamp(v, 0.0, 1.0);
            }
    }
    return ds;
}

SkewSpec SkewSpec::parse(const std::string& text) {
    if (text == "H" || text == "h" || text == "half-half") return half_half();
    std::size_t used = 0;
    double xi = 0.0;
    try {
        xi = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ValueError("skew '" + text + "' is neither a fraction in (0,1] nor H");
    }
    if (used != text.size()) throw ValueError("skew '" + text + "' is neither a fraction in (0,1] nor H");
    SkewSpec s = fraction(xi);
    s.validate();
    return s;
}

std::string SkewSpec::to_string() const {
    if (kind == Kind::half_half) return "H";
    std::ostringstream os;
    os << xi;
    return os.str();
}

void SkewSpec::validate() const {
    if (kind == Kind::fraction && !(xi > 0.0 && xi <= 1.0)) {
        throw ValueError("skew fraction must lie in (0, 1], got " + std::to_string(xi));
    }
}

std::vector<std::size_t> Partition::union_indices() const {
    std::vector<std::size_t> out;
    for (const auto& c : clients) out.insert(out.end(), c.indices.begin(), c.indices.end());
    return out;
}

Partition partition(const LabeledDataset& ds, std::size_t num_clients, const SkewSpec& skew, std::uint64_t seed) {
    return partition_labels(ds.labels, ds.classes, num_clients, skew, seed);
}

Partition partition_labels(std::span<const int> labels, std::size_t classes, std::size_t num_clients,
                           const SkewSpec& skew, std::uint64_t seed) {
    skew.validate();
    if (num_clients == 0) throw ValueError("partition needs at least one client");
    if (classes == 0) throw ValueError("partition needs at least one class");
    const std::size_t per_client = labels.size() / num_clients;
    if (per_client == 0) {
        throw ValueError("dataset of " + std::to_string(labels.size()) + " samples is too small for " +
                         std::to_string(num_clients) + " clients");
    }

    Rng rng = make_rng(seed, Stream::partition);
    std::vector<std::vector<std::size_t>> pools(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
            throw ValueError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                             " outside [0, " + std::to_string(classes) + ")");
        }
        pools[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    std::vector<std::size_t> supply(classes);
    for (std::size_t j = 0; j < classes; ++j) {
        shuffle(pools[j].begin(), pools[j].end(), rng);
        supply[j] = pools[j].size();
    }

    // Fixed per-class quotas for each client (dominant / half-half classes).
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> quotas(num_clients);
    std::size_t other_share = 0;
    if (skew.kind == SkewSpec::Kind::half_half) {
        if (classes < 2) throw ValueError("half-half skew needs at least two classes");
        const std::size_t first = (per_client + 1) / 2;
        for (std::size_t c = 0; c < num_clients; ++c) {
            quotas[c] = {{c % classes, first}, {(c + 1) % classes, per_client - first}};
        }
    } else {
        const auto dominant = static_cast<std::size_t>(std::llround(skew.xi * static_cast<double>(per_client)));
        other_share = per_client - dominant;
        if (other_share > 0 && classes < 2) throw ValueError("fraction skew below 1 needs at least two classes");
        for (std::size_t c = 0; c < num_clients; ++c) quotas[c] = {{c % classes, dominant}};
    }

    std::vector<std::size_t> demand(classes, 0);
    for (const auto& q : quotas)
        for (auto [cls, count] : q) demand[cls] += count;
    for (std::size_t j = 0; j < classes; ++j) {
        if (demand[j] > supply[j]) {
            throw ValueError("infeasible skew demand for " + std::to_string(num_clients) + " clients of " +
                             std::to_string(per_client) + " samples: " + supply_demand_table(supply, demand));
        }
    }

    std::vector<std::size_t> cursor(classes, 0);
    auto take = [&](std::size_t cls) { return pools[cls][cursor[cls]++]; };

    Partition part;
    part.skew = skew;
    part.classes = classes;
    part.clients.resize(num_clients);
    for (std::size_t c = 0; c < num_clients; ++c) {
        auto& client = part.clients[c];
        client.client_id = c;
        client.indices.reserve(per_client);
        for (auto [cls, count] : quotas[c])
            for (std::size_t i = 0; i < count; ++i) client.indices.push_back(take(cls));
    }

    // Remaining share: uniform over the still-unassigned samples of the other
    // classes. A plain sequential draw can strand the last clients with only
    // their own class left, so each step keeps the rest solvable: clients with
    // dominant class d still need need[d] samples from classes other than d,
    // which requires need[d] <= left - left_d. When that bound is tight for
    // some d other than the current client's class, the draw must take class d.
    if (other_share > 0) {
        std::vector<std::size_t> need(classes, 0);
        for (std::size_t c = 0; c < num_clients; ++c) need[c % classes] += other_share;
        std::size_t left = 0;
        for (std::size_t j = 0; j < classes; ++j) left += supply[j] - cursor[j];
        auto infeasible = [&](const std::string& why) {
            std::vector<std::size_t> want = cursor;
            for (std::size_t j = 0; j < classes; ++j) want[j] += need[j];
            return ValueError("infeasible skew demand (" + why + "); supply vs dominant demand plus the other-class " +
                              "share owed by clients of that class: " + supply_demand_table(supply, want));
        };
        std::size_t owed = other_share * num_clients;
        if (owed > left) throw infeasible("not enough samples left for the other-class share");
        for (std::size_t d = 0; d < classes; ++d) {
            if (need[d] > left - (supply[d] - cursor[d])) {
                throw infeasible("clients dominated by class " + std::to_string(d) +
                                 " cannot get enough samples of other classes");
            }
        }

        for (std::size_t c = 0; c < num_clients; ++c) {
            const std::size_t dom = c % classes;
            auto& client = part.clients[c];
            for (std::size_t s = 0; s < other_share; ++s) {
                std::size_t forced = classes;
                for (std::size_t d = 0; d < classes; ++d) {
                    if (d == dom) continue;
                    if (need[d] == left - (supply[d] - cursor[d])) {
                        forced = d;
                        break;
                    }
                }
                std::size_t cls = forced;
                if (cls == classes) {
                    std::size_t available = left - (supply[dom] - cursor[dom]);
                    auto pick = uniform_index(rng, available);
                    for (std::size_t j = 0; j < classes; ++j) {
                        if (j == dom) continue;
                        const std::size_t n_left = supply[j] - cursor[j];
                        if (pick < n_left) {
                            cls = j;
                            break;
                        }
                        pick -= n_left;
                    }
                }
                client.indices.push_back(take(cls));
                --need[dom];
                --left;
            }
        }
    }

    part.global_hist.assign(classes, 0);
    for (auto& client : part.clients) {
        std::sort(client.indices.begin(), client.indices.end());
        client.label_hist.assign(classes, 0);
        for (std::size_t i : client.indices) ++client.label_hist[static_cast<std::size_t>(labels[i])];
        for (std::size_t j = 0; j < classes; ++j) part.global_hist[j] += client.label_hist[j];
    }
    return part;
}

nlohmann::json partition_manifest(const Partition& p) {
    nlohmann::json clients = nlohmann::json::array();
    for (const auto& c : p.clients) {
        clients.push_back({{"client_id", c.client_id}, {"indices", c.indices}, {"label_hist", c.label_hist}});
    }
    return {{"skew", p.skew.to_string()},
            {"classes", p.classes},
            {"global_hist", p.global_hist},
            {"clients", std::move(clients)}};
}

}  // namespace dppfl::data
