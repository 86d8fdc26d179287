#pragma once

#include <cstddef>
#include <span>

#include "dppfl/dataset.hpp"
#include "dppfl/dpp.hpp"

namespace dppfl::metrics {

struct GemdValue {
    double value = 0.0;  // in [0, 2]
    std::size_t round = 0;
};

/// Group earth mover's distance: sum over classes of the absolute gap between
/// the selected clients' sample-weighted label mixture and the label
/// distribution of the union of all clients.
double gemd(std::span<const std::size_t> clients, const data::Partition& partition);
GemdValue gemd(const dpp::Selection& selection, const data::Partition& partition);

}  // namespace dppfl::metrics
