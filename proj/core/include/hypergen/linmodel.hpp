#pragma once

#include <filesystem>

#include <Eigen/Dense>

#include "hypergen/hypergraph.hpp"
#include "hypergen/rng.hpp"

namespace hypergen {

/// m hyperlink embeddings in R^K, one per row.
struct EmbeddingSet {
    Eigen::MatrixXd rows;

    Eigen::Index size() const noexcept { return rows.rows(); }
    Eigen::Index dim() const noexcept { return rows.cols(); }
};

/// Node embeddings z_i (rows of `z`) and degree scalars alpha_i.
struct NodeParams {
    Eigen::MatrixXd z;      // n×K
    Eigen::VectorXd alpha;  // n

    Eigen::Index num_nodes() const noexcept { return z.rows(); }
    Eigen::Index dim() const noexcept { return z.cols(); }
    double alpha_bar() const { return alpha.size() ? alpha.mean() : 0.0; }
};

/// 1/(1+exp(-a)), branch-stable for either sign of a.
inline double sigmoid(double a) {
    if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

/// log(1+exp(a)) without overflow.
inline double log1pexp(double a) {
    return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

/// Per-node inclusion probabilities p_i = sigmoid(x·z_i + alpha_i).
Eigen::VectorXd link_probs(const Eigen::Ref<const Eigen::VectorXd>& x, const NodeParams& params);

/// Draws one hyperlink: node i is included independently with probability
/// p_i. Consumes exactly n uniforms from `rng`, in node-id order.
Hyperlink sample_hyperlink(const Eigen::Ref<const Eigen::VectorXd>& x, const NodeParams& params, Rng& rng);

/// Draws one hyperlink per embedding row. Row j uses stream_rng(seed, j).
Hypergraph sample_hypergraph(const EmbeddingSet& x, const NodeParams& params, std::uint64_t seed);

/// Exact log-likelihood of the observed hypergraph under the logistic model.
double log_likelihood(const Hypergraph& h, const EmbeddingSet& x, const NodeParams& params);

struct LikelihoodGradient {
    Eigen::MatrixXd d_x;      // m×K
    Eigen::MatrixXd d_z;      // n×K
    Eigen::VectorXd d_alpha;  // n
};

LikelihoodGradient grad_log_likelihood(const Hypergraph& h, const EmbeddingSet& x, const NodeParams& params);

/// {i : p_i(x) >= threshold}; ties are included.
Hyperlink deterministic_hyperlink(const Eigen::Ref<const Eigen::VectorXd>& x, const NodeParams& params,
                                  double threshold);

void save_embeddings(const EmbeddingSet& x, const std::filesystem::path& path);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

/// Writes Z.csv and alpha.csv into `dir`.
void save_node_params(const NodeParams& p, const std::filesystem::path& dir);
NodeParams load_node_params(const std::filesystem::path& dir);

}  // namespace hypergen
