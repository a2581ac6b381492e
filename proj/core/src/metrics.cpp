#include "hypergen/metrics.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "hypergen/error.hpp"

namespace hypergen {

namespace {

struct LinkHash {
    std::size_t operator()(const Hyperlink& l) const noexcept {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (NodeId v : l) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h ^ l.size();
    }
};

void check_same_n(std::size_t a, std::size_t b) {
    if (a != b) throw DimensionError("node counts differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

double rmse_means(const CooccurrenceStats& gen, const CooccurrenceStats& ref) {
    check_same_n(static_cast<std::size_t>(gen.mean.size()), static_cast<std::size_t>(ref.mean.size()));
    if (gen.mean.size() == 0) return 0.0;
    return std::sqrt((gen.mean - ref.mean).squaredNorm() / static_cast<double>(gen.mean.size()));
}

double rmse_means(const Hypergraph& gen, const Hypergraph& ref) {
    check_same_n(gen.num_nodes(), ref.num_nodes());
    return rmse_means(cooccurrence_stats(gen), cooccurrence_stats(ref));
}

double rmse_covs(const CooccurrenceStats& gen, const CooccurrenceStats& ref) {
    check_same_n(static_cast<std::size_t>(gen.cov.rows()), static_cast<std::size_t>(ref.cov.rows()));
    const Eigen::Index n = gen.cov.rows();
    if (n == 0) return 0.0;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = i; k < n; ++k) {
            const double d = gen.cov(i, k) - ref.cov(i, k);
            ss += d * d;
        }
    }
    return std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n + 1) / 2.0));
}

double rmse_covs(const Hypergraph& gen, const Hypergraph& ref) {
    check_same_n(gen.num_nodes(), ref.num_nodes());
    return rmse_covs(cooccurrence_stats(gen), cooccurrence_stats(ref));
}

double duplicate_rate(const Hypergraph& gen, const Hypergraph& train) {
    check_same_n(gen.num_nodes(), train.num_nodes());
    if (gen.num_links() == 0) return 0.0;
    std::unordered_set<Hyperlink, LinkHash> seen(train.links().begin(), train.links().end());
    std::size_t dup = 0;
    for (const auto& l : gen.links()) dup += seen.count(l);
    return static_cast<double>(dup) / static_cast<double>(gen.num_links());
}

}  // namespace hypergen
