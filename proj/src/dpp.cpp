#include "dppfl/dpp.hpp"

#include <algorithm>
#include <cmath>

#include "dppfl/error.hpp"

namespace dppfl::dpp {

ElemSymPoly esp(std::span<const double> eigenvalues, std::size_t k) {
    const std::size_t n = eigenvalues.size();
    if (k > n) throw ValueError("esp: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " eigenvalues");
    ElemSymPoly e(k, n);
    for (std::size_t m = 0; m <= n; ++m) e(0, m) = 1.0;
    for (std::size_t j = 1; j <= k; ++j)
        for (std::size_t m = 1; m <= n; ++m) e(j, m) = e(j, m - 1) + eigenvalues[m - 1] * e(j - 1, m - 1);
    return e;
}

linalg::EigenDecomposition psd_eigh(const linalg::Matrix& l) {
    auto eig = linalg::eigh(l);
    double scale = 1.0;
    for (double v : l.data()) scale = std::max(scale, std::abs(v));
    for (double& v : eig.values) {
        if (v < -kClampTolerance * scale) {
            throw NumericError("kernel is not positive semi-definite (eigenvalue " + std::to_string(v) + ")");
        }
        v = std::max(v, 0.0);
    }
    return eig;
}

KdppSampler::KdppSampler(const linalg::Matrix& l) : eig_(psd_eigh(l)), lambda_(eig_.values) {
    const double top = lambda_.empty() ? 0.0 : lambda_.back();
    for (double& v : lambda_) {
        if (v <= kRankTolerance * top) {
            v = 0.0;
        } else {
            ++rank_;
        }
    }
}

Selection KdppSampler::sample(std::size_t k, Rng& rng) const {
    const std::size_t c = size();
    if (k == 0 || k > c) {
        throw ValueError("k-DPP size k = " + std::to_string(k) + " outside [1, " + std::to_string(c) + "]");
    }
    if (rank_ < k) {
        throw NumericError("kernel rank below k; cannot diversify to k clients (rank " + std::to_string(rank_) +
                           ", k " + std::to_string(k) + ")");
    }

    // Phase 1: choose k eigenvectors, walking eigenvalues from the last one down.
    const ElemSymPoly e = esp(lambda_, k);
    std::vector<std::size_t> picked;
    std::size_t remaining = k;
    for (std::size_t n = c; n >= 1 && remaining > 0; --n) {
        double p = 1.0;
        if (remaining < n) {
            const double denom = e(remaining, n);
            p = denom > 0.0 ? lambda_[n - 1] * e(remaining - 1, n - 1) / denom : 0.0;
            if (p < -kProbabilitySlack || p > 1.0 + kProbabilitySlack) {
                throw NumericError("k-DPP inclusion probability " + std::to_string(p) + " outside [0, 1]");
            }
            p = std::clamp(p, 0.0, 1.0);
        }
        if (uniform01(rng) < p) {
            picked.push_back(n - 1);
            --remaining;
        }
    }

    // Phase 2: sample items from the elementary DPP spanned by the picked vectors.
    std::vector<std::vector<double>> cols;
    for (std::size_t idx : picked) {
        std::vector<double> v(c);
        for (std::size_t r = 0; r < c; ++r) v[r] = eig_.vectors(r, idx);
        cols.push_back(std::move(v));
    }

    Selection sel;
    std::vector<double> weight(c);
    while (!cols.empty()) {
        double total = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            double w = 0.0;
            for (const auto& v : cols) w += v[i] * v[i];
            weight[i] = w;
            total += w;
        }
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        std::size_t item = c;
        std::size_t last_positive = c;
        for (std::size_t i = 0; i < c; ++i) {
            if (weight[i] <= 0.0) continue;
            last_positive = i;
            acc += weight[i];
            if (target < acc) {
                item = i;
                break;
            }
        }
        if (item == c) item = last_positive;
        sel.chosen.push_back(item);

        // Drop the column with the largest |v[item]| and project the rest so
        // they vanish at item.
        std::size_t pivot = 0;
        for (std::size_t j = 1; j < cols.size(); ++j)
            if (std::abs(cols[j][item]) > std::abs(cols[pivot][item])) pivot = j;
        const std::vector<double> vp = cols[pivot];
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(pivot));
        for (auto& v : cols) {
            const double f = v[item] / vp[item];
            for (std::size_t r = 0; r < c; ++r) v[r] -= f * vp[r];
            v[item] = 0.0;
        }
        // Modified Gram-Schmidt with re-normalization.
        for (std::size_t a = 0; a < cols.size(); ++a) {
            for (std::size_t b = 0; b < a; ++b) {
                double dot = 0.0;
                for (std::size_t r = 0; r < c; ++r) dot += cols[a][r] * cols[b][r];
                for (std::size_t r = 0; r < c; ++r) cols[a][r] -= dot * cols[b][r];
            }
            double norm = 0.0;
            for (double x : cols[a]) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) throw NumericError("k-DPP projection collapsed during orthogonalization");
            for (double& x : cols[a]) x /= norm;
        }
    }
    std::sort(sel.chosen.begin(), sel.chosen.end());
    return sel;
}

Selection kdpp_sample(const linalg::Matrix& l, std::size_t k, Rng& rng) { return KdppSampler(l).sample(k, rng); }

double dpp_unnormalized(const linalg::Matrix& l, std::span<const std::size_t> subset) {
    for (std::size_t i : subset) {
        if (i >= l.rows()) throw ValueError("subset element " + std::to_string(i) + " outside the ground set");
    }
    return linalg::determinant(linalg::principal_submatrix(l, subset));
}

void for_each_combination(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& f) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        f(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

std::map<std::vector<std::size_t>, double> kdpp_pmf_bruteforce(const linalg::Matrix& l, std::size_t k) {
    const std::size_t c = l.rows();
    if (!l.square()) throw ShapeError("kernel must be square");
    if (c > kBruteForceLimit) {
        throw ValueError("brute-force pmf limited to " + std::to_string(kBruteForceLimit) + " items, got " +
                         std::to_string(c));
    }
    if (k > c) throw ValueError("k exceeds the ground set size");
    std::map<std::vector<std::size_t>, double> pmf;
    double total = 0.0;
    for_each_combination(c, k, [&](const std::vector<std::size_t>& y) {
        const double d = std::max(0.0, dpp_unnormalized(l, y));
        pmf.emplace(y, d);
        total += d;
    });
    if (!(total > 0.0)) throw NumericError("all principal minors of size k vanish; kernel rank below k");
    for (auto& [y, p] : pmf) p /= total;
    return pmf;
}

linalg::Matrix random_psd_kernel(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    linalg::Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b(i, j) = normal01(rng);
    return linalg::matmul(b, linalg::transpose(b));
}

}  // namespace dppfl::dpp
