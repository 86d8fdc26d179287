#include "dppfl/metrics.hpp"

#include <cstdint>

#include "dppfl/error.hpp"

namespace dppfl::metrics {

double gemd(std::span<const std::size_t> clients, const data::Partition& partition) {
    if (clients.empty()) throw ValueError("GEMD of an empty selection");
    const std::size_t classes = partition.global_hist.size();
    std::vector<std::uint64_t> mix(classes, 0);
    std::uint64_t selected = 0;
    for (std::size_t c : clients) {
        if (c >= partition.client_count()) throw ValueError("client " + std::to_string(c) + " not in partition");
        const auto& hist = partition.clients[c].label_hist;
        for (std::size_t j = 0; j < classes; ++j) mix[j] += hist[j];
        selected += partition.clients[c].size();
    }
    std::uint64_t total = 0;
    for (std::size_t h : partition.global_hist) total += h;
    if (selected == 0 || total == 0) throw ValueError("GEMD needs non-empty client datasets");

    // Sum |mix_j / selected - global_j / total| over a common denominator so
    // that only the final division rounds.
    std::uint64_t numerator = 0;
    for (std::size_t j = 0; j < classes; ++j) {
        const std::uint64_t a = mix[j] * total, b = partition.global_hist[j] * selected;
        numerator += a > b ? a - b : b - a;
    }
    return static_cast<double>(numerator) / (static_cast<double>(selected) * static_cast<double>(total));
}

GemdValue gemd(const dpp::Selection& selection, const data::Partition& partition) {
    return {gemd(selection.chosen, partition), selection.round};
}

}  // namespace dppfl::metrics
