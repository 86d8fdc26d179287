#include <gtest/gtest.h>

#include <random>

#include "dppfl/dpp.hpp"
#include "dppfl/error.hpp"
#include "dppfl/metrics.hpp"

using namespace dppfl;

namespace {

std::vector<int> balanced_labels(std::size_t per_class, std::size_t classes) {
    std::vector<int> y;
    for (std::size_t i = 0; i < per_class * classes; ++i) y.push_back(static_cast<int>(i % classes));
    return y;
}

data::Partition pure_partition(std::size_t classes, std::size_t clients, std::size_t per_class) {
    return data::partition_labels(balanced_labels(per_class, classes), classes, clients, data::SkewSpec::fraction(1.0), 0);
}

}  // namespace

TEST(Gemd, PureClientUnderUniformGlobalIsExactlyOnePointEight) {
    const auto p = pure_partition(10, 100, 6000);
    for (std::size_t c : {0u, 37u, 99u}) EXPECT_EQ(metrics::gemd(std::vector<std::size_t>{c}, p), 1.8);
}

TEST(Gemd, ZeroCases) {
    const auto p = pure_partition(10, 20, 50);
    std::vector<std::size_t> all(20);
    for (std::size_t i = 0; i < 20; ++i) all[i] = i;
    EXPECT_EQ(metrics::gemd(all, p), 0.0);
    const auto two = pure_partition(2, 2, 30);
    EXPECT_EQ(metrics::gemd(std::vector<std::size_t>{0, 1}, two), 0.0);
    EXPECT_EQ(metrics::gemd(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, p), 0.0);
}

TEST(Gemd, SelectionOverloadKeepsRound) {
    const auto p = pure_partition(4, 4, 5);
    const auto g = metrics::gemd(dpp::Selection{7, {0}}, p);
    EXPECT_EQ(g.round, 7u);
    EXPECT_EQ(g.value, 1.5);
    EXPECT_THROW(metrics::gemd(std::vector<std::size_t>{}, p), ValueError);
    EXPECT_THROW(metrics::gemd(std::vector<std::size_t>{4}, p), ValueError);
}

TEST(Gemd, BoundedOverRandomSelections) {
    std::vector<data::Partition> parts;
    for (double xi : {1.0, 0.8, 0.5}) {
        parts.push_back(data::partition_labels(balanced_labels(40, 10), 10, 30, data::SkewSpec::fraction(xi), 1));
    }
    parts.push_back(data::partition_labels(balanced_labels(40, 10), 10, 30, data::SkewSpec::half_half(), 1));
    std::mt19937_64 rng(0);
    for (int t = 0; t < 2000; ++t) {
        const auto& p = parts[t % parts.size()];
        std::vector<std::size_t> ids(30);
        for (std::size_t i = 0; i < 30; ++i) ids[i] = i;
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(1 + rng() % 30);
        const double g = metrics::gemd(ids, p);
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 2.0);
    }
}

TEST(Gemd, StrictlyDecreasesWithClassesCovered) {
    // Brute force over every selection of a pure-class round-robin partition with two clients per class.
    for (std::size_t n = 2; n <= 10; ++n) {
        const auto p = pure_partition(n, 2 * n, 6);
        for (std::size_t k = 1; k <= n; ++k) {
            std::vector<double> lo(n + 1, 3.0), hi(n + 1, -1.0);
            dpp::for_each_combination(2 * n, k, [&](const std::vector<std::size_t>& s) {
                std::vector<bool> seen(n, false);
                std::size_t covered = 0;
                for (auto c : s)
                    if (!seen[c % n]) {
                        seen[c % n] = true;
                        ++covered;
                    }
                const double g = metrics::gemd(s, p);
                lo[covered] = std::min(lo[covered], g);
                hi[covered] = std::max(hi[covered], g);
            });
            for (std::size_t d = 2; d <= k; ++d)
                if (hi[d] >= 0.0 && hi[d - 1] >= 0.0) EXPECT_LT(hi[d], lo[d - 1]) << "N=" << n << " k=" << k << " d=" << d;
        }
    }
}
