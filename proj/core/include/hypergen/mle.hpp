#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hypergen/hypergraph.hpp"
#include "hypergen/linmodel.hpp"

namespace hypergen {

struct MleConfig {
    int K = 2;
    double C = 3.0;          // box radius for X, Z and alpha deviations
    double C_prime = 0.5;    // upper end of the alpha-mean interval is -C'·C_mn
    double C_dprime = 1.5;   // C_mn = -C''·log(density)
    int max_outer_iters = 500;
    double tol = 1e-6;       // relative log-likelihood improvement
    int inner_iters = 5;     // projected ascent steps per subproblem per phase
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    std::uint64_t seed = 0;

    void validate() const;
};

MleConfig mle_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MleConfig& c);

/// Largest violation of each constraint of the constrained MLE at the output.
struct ConstraintResiduals {
    double gram_equality = 0;   // ||Z'Z/n - X'X/m||_max
    double gram_offdiag = 0;    // largest off-diagonal of either Gram matrix
    double x_mean = 0;          // ||colmeans(X)||_max
    double x_box = 0;           // max(0, ||X||_max - C)
    double z_box = 0;
    double alpha_spread = 0;    // max(0, ||alpha - mean(alpha)||_inf - C)
    double alpha_mean = 0;      // distance of mean(alpha) from [-C_mn, -C'·C_mn]

    double max() const;
};

nlohmann::json to_json(const ConstraintResiduals& r);

struct MleFit {
    EmbeddingSet x_hat;
    NodeParams params_hat;
    /// Log-likelihood of the accepted iterate after every outer iteration
    /// (index 0 is the feasible starting point).
    std::vector<double> loglik_trace;
    /// Log-likelihood right after the ascent phases, before projection and
    /// constraint enforcement.
    std::vector<double> ascent_trace;
    ConstraintResiduals residuals;
    double c_mn = 0;
    int iterations = 0;
    bool converged = false;
};

/// C_mn = -C''·log(Σ_j|e_j| / (m n)).
double compute_Cmn(const Hypergraph& h, double C_dprime);

struct IdentifiedParams {
    EmbeddingSet x;
    NodeParams params;
};

/// Maps (X, Z, alpha) to the equivalent parameterisation with centred X and
/// equal diagonal Gram matrices X'X/m = Z'Z/n (diagonal sorted descending).
/// The likelihood of any hypergraph is unchanged. Column signs are fixed by
/// making the largest-magnitude entry of every Z' column positive.
IdentifiedParams identifiability_projection(const EmbeddingSet& x, const NodeParams& params);

/// Constrained alternating maximum-likelihood fit.
MleFit fit(const Hypergraph& h, const MleConfig& cfg);

ConstraintResiduals constraint_residuals(const EmbeddingSet& x, const NodeParams& p, double C, double C_prime,
                                         double c_mn);

/// Max-norm estimation errors of a fit against known parameters. The truth
/// is first mapped through identifiability_projection, then each latent
/// coordinate's sign is aligned to the estimate.
struct EstimationErrors {
    double x = 0;      // max_j ||x̂_j - x_j||_inf
    double z = 0;      // max_i ||ẑ_i - z_i||_inf
    double alpha = 0;  // max_i |α̂_i - α_i|
};

EstimationErrors estimation_errors(const MleFit& fit, const EmbeddingSet& true_x, const NodeParams& true_params);

/// Writes X.csv, Z.csv, alpha.csv, trace.csv and meta.json into `dir`.
void save_fit(const MleFit& fit, const MleConfig& cfg, const std::filesystem::path& dir);
/// Reads back the estimated embeddings and node parameters.
MleFit load_fit(const std::filesystem::path& dir);

}  // namespace hypergen
