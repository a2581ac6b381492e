#pragma once

#include <Eigen/Dense>

#include "hypergen/scorediff.hpp"

namespace hypergen {

/// Rank-K embedding of continuous data: Y ≈ X_hat · Z_hatᵀ.
struct LowRankFit {
    Eigen::MatrixXd z_hat;  // n×K, orthonormal columns (right singular vectors)
    Eigen::MatrixXd x_hat;  // m×K latent coordinates U·Σ
    Eigen::VectorXd singular_values;  // descending
};

/// Top-K SVD of Y. Each column of Z_hat is signed so its largest-magnitude
/// entry is positive (X_hat columns flip with it).
LowRankFit svd_embed(const Eigen::MatrixXd& y, int K);

/// Decodes latent samples into ambient space: row j = Z_hat · x̃_j.
Eigen::MatrixXd decode_lowrank(const LowRankFit& fit, const EmbeddingSet& latent);

/// Samples m_tilde latent vectors with a score network trained on X_hat and
/// decodes them.
Eigen::MatrixXd lowrank_generate(const LowRankFit& fit, const ScoreNet& net, const DiffusionSchedule& sched,
                                 std::size_t m_tilde, std::uint64_t seed, Stepper stepper = Stepper::exponential);

}  // namespace hypergen
