#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hypergen/hypergraph.hpp"
#include "hypergen/mlp.hpp"
#include "hypergen/scorediff.hpp"

namespace hypergen {

// ---------------------------------------------------------------------------
// Gau-Diff: Gaussian score diffusion directly on n-dimensional 0/1 incidence
// vectors, followed by per-node threshold calibration.

struct GauDiffModel {
    ScoreNet net;
    Eigen::VectorXd thresholds;  // +inf: never include, -inf: always include
};

struct GauDiffResult {
    Hypergraph generated;
    GauDiffModel model;
    std::vector<double> loss_trace;
};

/// τ_i chosen so exactly round(target_i · m̃) generated values in column i
/// are >= τ_i.
Eigen::VectorXd calibrate_thresholds(const Eigen::MatrixXd& generated, const Eigen::VectorXd& target_freq);

/// Row j -> {i : generated(j,i) >= τ_i}.
Hypergraph threshold_rows(const Eigen::MatrixXd& generated, const Eigen::VectorXd& thresholds);

GauDiffResult gau_diff_fit_sample(const Hypergraph& h, const DiffusionSchedule& sched, const TrainConfig& cfg,
                                  std::size_t m_tilde, std::uint64_t seed, int hidden_width = 128);

// ---------------------------------------------------------------------------
// Ber-Diff: binomial diffusion on bits. Forward step k resamples each bit to
// Bernoulli(1/2) with probability β_k; the reverse network predicts
// P(x0_i = 1 | x_k) and reverse draws use the exact forward posterior.

/// β_k = 1/(N-k+2), k = 1..N.
std::vector<double> ber_diff_schedule(int N);

/// Probability that a bit has not been resampled after k steps: Π_{l<=k}(1-β_l).
double ber_keep_prob(const std::vector<double>& beta, int k);

/// One forward step from x_{k-1} (0/1 entries), using β_k.
Eigen::VectorXd ber_forward_step(const Eigen::VectorXd& prev, double beta_k, Rng& rng);

/// Draw x_k ~ q(x_k | x0).
Eigen::VectorXd ber_forward_marginal(const Eigen::VectorXd& x0, const std::vector<double>& beta, int k, Rng& rng);

/// P(x_{k-1,i} = 1 | x_k) under the forward kernel, marginalising the clean
/// bit over the network's prediction p_clean = P(x0 = 1 | x_k).
/// keep_prev = ber_keep_prob(beta, k-1), beta_k = β_k.
double ber_reverse_prob(double beta_k, double keep_prev, double x_k, double p_clean);

class BerDiffModel {
public:
    BerDiffModel() = default;
    BerDiffModel(int n, std::vector<double> beta, int hidden_width, std::uint64_t seed);

    const std::vector<double>& schedule() const noexcept { return beta_; }
    double keep(int k) const { return keep_[static_cast<std::size_t>(k)]; }
    int steps() const { return static_cast<int>(beta_.size()); }
    Mlp& net() noexcept { return net_; }
    const Mlp& net() const noexcept { return net_; }

    Eigen::MatrixXd inputs(const Eigen::MatrixXd& x_k, const std::vector<int>& k) const;
    /// P(x0 = 1 | x_k) per bit; x_k is n×B.
    Eigen::MatrixXd predict_clean(const Eigen::MatrixXd& x_k, const std::vector<int>& k) const;

private:
    int n_ = 0;
    std::vector<double> beta_;
    std::vector<double> keep_;  // keep_[k] = ber_keep_prob(beta_, k)
    std::vector<double> freqs_;
    Mlp net_;
};

struct BerDiffConfig {
    int steps = 100;
    std::vector<double> beta;  // empty: ber_diff_schedule(steps)
    int hidden_width = 128;
};

struct BerDiffResult {
    Hypergraph generated;
    BerDiffModel model;
    std::vector<double> loss_trace;
};

/// Trains with binary cross-entropy against the clean bits.
BerDiffModel train_ber_diff(const Hypergraph& h, const BerDiffConfig& bcfg, const TrainConfig& cfg,
                            std::vector<double>* loss_trace = nullptr);

/// Runs k = N..1 from uniform bits; vector j uses stream_rng(seed, j).
Hypergraph sample_ber_diff(const BerDiffModel& model, std::size_t n, std::size_t m_tilde, std::uint64_t seed);

BerDiffResult ber_diff_fit_sample(const Hypergraph& h, const BerDiffConfig& bcfg, const TrainConfig& cfg,
                                  std::size_t m_tilde, std::uint64_t seed);

}  // namespace hypergen
