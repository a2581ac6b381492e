#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hypergen/linmodel.hpp"
#include "hypergen/mlp.hpp"
#include "hypergen/rng.hpp"

namespace hypergen {

/// Reverse-time grid: N steps of size h = T/N, stopping at forward time t_min.
struct DiffusionSchedule {
    double T = 5.0;
    int N = 500;
    double t_min = 1e-3;

    double h() const { return T / N; }
    void validate() const;
};

/// sqrt(1 - e^{-2t}): standard deviation of the OU transition from time 0.
double noise_scale(double t);

/// Closed-form OU marginal: x_t = e^{-t} x0 + noise_scale(t)·eps.
struct ForwardDraw {
    Eigen::VectorXd x_t;
    Eigen::VectorXd eps;
};
ForwardDraw forward_marginal(const Eigen::Ref<const Eigen::VectorXd>& x0, double t, Rng& rng);

/// Noise-prediction network ε̂(x, t); the score is -ε̂ / noise_scale(t).
/// Input is x concatenated with sin/cos features of t at log-spaced
/// frequencies.
class ScoreNet {
public:
    ScoreNet() = default;
    ScoreNet(int dim, std::vector<int> hidden, std::vector<double> frequencies, std::uint64_t seed);

    int dim() const noexcept { return dim_; }
    const std::vector<double>& frequencies() const noexcept { return freqs_; }
    const Mlp& mlp() const noexcept { return mlp_; }
    Mlp& mlp() noexcept { return mlp_; }

    /// Network input for a batch: x is dim×B, t has length B.
    Eigen::MatrixXd features(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) const;
    Eigen::MatrixXd predict_noise(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) const;
    Eigen::MatrixXd score(const Eigen::MatrixXd& x, double t) const;

private:
    int dim_ = 0;
    std::vector<double> freqs_;
    Mlp mlp_;
};

/// `count` frequencies log-spaced on [lo, hi].
std::vector<double> log_spaced_frequencies(int count, double lo = 0.5, double hi = 200.0);

/// Default architecture: two hidden layers of 128, 8 frequencies (16 features).
ScoreNet make_score_net(int dim, std::uint64_t seed, int hidden_width = 128, int hidden_layers = 2,
                        int num_frequencies = 8);

struct TrainConfig {
    int epochs = 2000;
    int batch_size = 128;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint64_t seed = 0;

    void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);
DiffusionSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiffusionSchedule& s);

/// Denoising score-matching loss, mean over the batch of ||ε̂(x_t,t) - eps||²,
/// with x_t = e^{-t} x0 + noise_scale(t)·eps. Columns of x0/eps are samples.
double dsm_loss(const ScoreNet& net, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t,
                const Eigen::MatrixXd& eps);
/// Loss and its gradient w.r.t. the network's flat parameter vector.
double dsm_loss_grad(const ScoreNet& net, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t,
                     const Eigen::MatrixXd& eps, Eigen::VectorXd& grad);

/// DSM loss of an arbitrary score function on the same draws, so an exact
/// score can be compared with a trained network.
double dsm_loss_of_score(const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>& score,
                         const Eigen::MatrixXd& x0, const Eigen::VectorXd& t, const Eigen::MatrixXd& eps);

struct TrainResult {
    ScoreNet net;
    std::vector<double> loss_trace;  // mean minibatch loss per epoch
};

/// Minibatch Adam on the DSM loss; t ~ Uniform(t_min, T].
TrainResult train_score(const EmbeddingSet& data, ScoreNet net, const DiffusionSchedule& sched,
                        const TrainConfig& cfg);

/// Compares backprop gradients of the DSM loss on a probe batch with central
/// finite differences on up to `max_params` randomly chosen parameters.
/// Returns max |g_a - g_fd| / max(|g_a|, |g_fd|, floor).
double net_backprop_check(const ScoreNet& net, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t,
                          const Eigen::MatrixXd& eps, std::uint64_t seed, int max_params = 200,
                          double step = 1e-4, double floor = 1e-6);

enum class Stepper { exponential, euler_maruyama };

Stepper parse_stepper(const std::string& name);

using ScoreFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x, double t)>;

/// Reverse sampler with the score frozen at the start of each step.
/// Trajectory j draws its initial state and all its noise from
/// stream_rng(seed, j); rows of the result are final states.
EmbeddingSet sample_with_score(const ScoreFn& score, int dim, const DiffusionSchedule& sched,
                               std::size_t m_tilde, std::uint64_t seed, Stepper stepper = Stepper::exponential);

EmbeddingSet sample(const ScoreNet& net, const DiffusionSchedule& sched, std::size_t m_tilde, std::uint64_t seed,
                    Stepper stepper = Stepper::exponential);

/// scorenet.json (header) + scorenet_weights.csv in `dir`.
void save_score_net(const ScoreNet& net, const DiffusionSchedule& sched, const std::filesystem::path& dir);
std::pair<ScoreNet, DiffusionSchedule> load_score_net(const std::filesystem::path& dir);

}  // namespace hypergen
