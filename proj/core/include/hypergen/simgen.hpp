#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hypergen/linmodel.hpp"
#include "hypergen/rng.hpp"

namespace hypergen {

struct SimConfig {
    int K = 2;
    std::size_t m = 300;
    std::size_t n = 300;
    double alpha_lo = -1.0;
    double alpha_hi = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& cfg);
SimConfig load_sim_config(const std::filesystem::path& path);

/// Draw from N(mean, 1) truncated to [lo, hi] by inverting the CDF on the
/// truncated interval. Exactly one uniform is consumed.
double truncated_normal(double mean, double lo, double hi, Rng& rng);

/// Pre-truncation mean of mixture component k for hyperlink embeddings:
/// 1_K/(K·sqrt K) - e_k/sqrt K.
Eigen::VectorXd hyperlink_component_mean(int K, int k);
/// Pre-truncation mean of mixture component k for node embeddings:
/// 1_K/sqrt K + e_k/sqrt K.
Eigen::VectorXd node_component_mean(int K, int k);

/// Mixture draws with uniform component weights. Row r uses
/// stream_rng(seed, r); the chosen component index is written to
/// `components` when non-null.
Eigen::MatrixXd sample_mixture(int K, std::size_t rows, bool node_side, std::uint64_t seed,
                               std::vector<int>* components = nullptr);

EmbeddingSet sample_hyperlink_embeddings(const SimConfig& cfg);
Eigen::MatrixXd sample_node_embeddings(const SimConfig& cfg);
Eigen::VectorXd sample_alphas(const SimConfig& cfg);

struct GroundTruth {
    Hypergraph hypergraph;
    EmbeddingSet embeddings;
    NodeParams params;
};

GroundTruth generate_ground_truth(const SimConfig& cfg);

/// A fresh hypergraph of `m` hyperlinks from the same truth (new hyperlink
/// embeddings from the mixture, fixed node parameters).
Hypergraph resample_from_truth(const SimConfig& cfg, const NodeParams& params, std::size_t m,
                               std::uint64_t seed);

}  // namespace hypergen
