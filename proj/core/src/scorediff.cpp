#include "hypergen/scorediff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "hypergen/csv.hpp"
#include "hypergen/error.hpp"

namespace hypergen {

namespace {

constexpr std::size_t kSampleChunk = 256;

Eigen::MatrixXd noisy_inputs(const Eigen::MatrixXd& x0, const Eigen::VectorXd& t, const Eigen::MatrixXd& eps) {
    Eigen::MatrixXd xt(x0.rows(), x0.cols());
    for (Eigen::Index b = 0; b < x0.cols(); ++b) {
        xt.col(b) = std::exp(-t(b)) * x0.col(b) + noise_scale(t(b)) * eps.col(b);
    }
    return xt;
}

}  // namespace

void DiffusionSchedule::validate() const {
    if (!(T > 0)) throw ConfigError("T must be > 0");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (!(t_min >= 0 && t_min < h())) throw ConfigError("t_min must satisfy 0 <= t_min < T/N");
}

double noise_scale(double t) { return std::sqrt(-std::expm1(-2.0 * t)); }

ForwardDraw forward_marginal(const Eigen::Ref<const Eigen::VectorXd>& x0, double t, Rng& rng) {
    if (t < 0) throw ValidationError("forward_marginal needs t >= 0");
    std::normal_distribution<double> nd(0.0, 1.0);
    ForwardDraw d;
    d.eps.resize(x0.size());
    for (Eigen::Index k = 0; k < x0.size(); ++k) d.eps(k) = nd(rng);
    d.x_t = std::exp(-t) * x0 + noise_scale(t) * d.eps;
    return d;
}

std::vector<double> log_spaced_frequencies(int count, double lo, double hi) {
    std::vector<double> f;
    for (int k = 0; k < count; ++k) {
        const double u = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        f.push_back(std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))));
    }
    return f;
}

ScoreNet::ScoreNet(int dim, std::vector<int> hidden, std::vector<double> frequencies, std::uint64_t seed)
    : dim_(dim), freqs_(std::move(frequencies)) {
    if (dim < 1) throw ConfigError("score network dimension must be >= 1");
    std::vector<int> widths{dim + 2 * static_cast<int>(freqs_.size())};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(dim);
    mlp_ = Mlp(std::move(widths), seed);
}

ScoreNet make_score_net(int dim, std::uint64_t seed, int hidden_width, int hidden_layers, int num_frequencies) {
    return ScoreNet(dim, std::vector<int>(static_cast<std::size_t>(hidden_layers), hidden_width),
                    log_spaced_frequencies(num_frequencies), seed);
}

Eigen::MatrixXd ScoreNet::features(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) const {
    if (x.rows() != dim_ || t.size() != x.cols()) throw DimensionError("score network batch shape mismatch");
    const auto nf = static_cast<Eigen::Index>(freqs_.size());
    Eigen::MatrixXd in(dim_ + 2 * nf, x.cols());
    in.topRows(dim_) = x;
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
        for (Eigen::Index k = 0; k < nf; ++k) {
            const double a = freqs_[static_cast<std::size_t>(k)] * t(b);
            in(dim_ + 2 * k, b) = std::sin(a);
            in(dim_ + 2 * k + 1, b) = std::cos(a);
        }
    }
    return in;
}

Eigen::MatrixXd ScoreNet::predict_noise(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) const {
    return mlp_.forward(features(x, t));
}

Eigen::MatrixXd ScoreNet::score(const Eigen::MatrixXd& x, double t) const {
    const Eigen::VectorXd tv = Eigen::VectorXd::Constant(x.cols(), t);
    return predict_noise(x, tv) / -noise_scale(t);
}

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1) throw ConfigError("epochs and batch size must be positive");
    if (!(lr >= 0)) throw ConfigError("learning rate must be non-negative");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("moment constants must lie in [0,1)");
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr},
            {"beta1", c.beta1},   {"beta2", c.beta2},           {"seed", c.seed}};
}

DiffusionSchedule schedule_from_json(const nlohmann::json& j) {
    DiffusionSchedule s;
    s.T = j.value("T", s.T);
    s.N = j.value("N", s.N);
    s.t_min = j.value("t_min", s.t_min);
    s.validate();
    return s;
}

nlohmann::json to_json(const DiffusionSchedule& s) { return {{"T", s.T}, {"N", s.N}, {"t_min", s.t_min}}; }

double dsm_loss(const ScoreNet& net, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t, const Eigen::MatrixXd& eps) {
    const Eigen::MatrixXd out = net.predict_noise(noisy_inputs(x0, t, eps), t);
    return (out - eps).squaredNorm() / static_cast<double>(x0.cols());
}

double dsm_loss_grad(const ScoreNet& net, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t,
                     const Eigen::MatrixXd& eps, Eigen::VectorXd& grad) {
    Mlp::Cache cache;
    const Eigen::MatrixXd out = net.mlp().forward(net.features(noisy_inputs(x0, t, eps), t), cache);
    const Eigen::MatrixXd resid = out - eps;
    const double inv_b = 1.0 / static_cast<double>(x0.cols());
    grad = net.mlp().backward(cache, 2.0 * inv_b * resid);
    return resid.squaredNorm() * inv_b;
}

double dsm_loss_of_score(const ScoreFn& score, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t,
                         const Eigen::MatrixXd& eps) {
    const Eigen::MatrixXd xt = noisy_inputs(x0, t, eps);
    double total = 0.0;
    for (Eigen::Index b = 0; b < x0.cols(); ++b) {
        const Eigen::MatrixXd s = score(xt.col(b), t(b));
        total += (s.col(0) * noise_scale(t(b)) + eps.col(b)).squaredNorm();
    }
    return total / static_cast<double>(x0.cols());
}

TrainResult train_score(const EmbeddingSet& data, ScoreNet net, const DiffusionSchedule& sched, const TrainConfig& cfg) {
    sched.validate();
    cfg.validate();
    if (data.size() == 0) throw EmptyInputError("train_score needs at least one embedding");
    if (data.dim() != net.dim()) throw DimensionError("data dimension does not match the score network");

    const auto m = static_cast<std::size_t>(data.size());
    const auto dim = data.dim();
    const auto batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), m);
    Adam adam(net.mlp().num_params(), cfg.lr, cfg.beta1, cfg.beta2);
    TrainResult res;
    std::vector<std::size_t> order(m);
    Eigen::VectorXd grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> nd(0.0, 1.0);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < m; start += batch) {
            const auto bsz = static_cast<Eigen::Index>(std::min(batch, m - start));
            Eigen::MatrixXd x0(dim, bsz), eps(dim, bsz);
            Eigen::VectorXd t(bsz);
            for (Eigen::Index b = 0; b < bsz; ++b) {
                x0.col(b) = data.rows.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(b)])).transpose();
                t(b) = sched.t_min + (sched.T - sched.t_min) * (1.0 - unif(rng));
                for (Eigen::Index k = 0; k < dim; ++k) eps(k, b) = nd(rng);
            }
            const double loss = dsm_loss_grad(net, x0, t, eps, grad);
            if (!std::isfinite(loss) || !grad.allFinite()) throw NumericalError("score training diverged", epoch);
            adam.step(net.mlp().params(), grad);
            epoch_loss += loss;
            ++batches;
        }
        res.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    res.net = std::move(net);
    return res;
}

double net_backprop_check(const ScoreNet& net, const Eigen::MatrixXd& x0, const Eigen::VectorXd& t,
                          const Eigen::MatrixXd& eps, std::uint64_t seed, int max_params, double step, double floor) {
    Eigen::VectorXd grad;
    dsm_loss_grad(net, x0, t, eps, grad);
    const Eigen::Index p = net.mlp().num_params();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng = stream_rng(seed, 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(max_params)));

    ScoreNet probe = net;
    double worst = 0.0;
    for (Eigen::Index k : idx) {
        const double orig = probe.mlp().params()(k);
        probe.mlp().params()(k) = orig + step;
        const double up = dsm_loss(probe, x0, t, eps);
        probe.mlp().params()(k) = orig - step;
        const double down = dsm_loss(probe, x0, t, eps);
        probe.mlp().params()(k) = orig;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(grad(k)), std::abs(fd), floor});
        worst = std::max(worst, std::abs(grad(k) - fd) / denom);
    }
    return worst;
}

Stepper parse_stepper(const std::string& name) {
    if (name == "exponential") return Stepper::exponential;
    if (name == "euler" || name == "euler-maruyama") return Stepper::euler_maruyama;
    throw ConfigError("unknown stepper '" + name + "'");
}

EmbeddingSet sample_with_score(const ScoreFn& score, int dim, const DiffusionSchedule& sched, std::size_t m_tilde,
                               std::uint64_t seed, Stepper stepper) {
    sched.validate();
    EmbeddingSet out{Eigen::MatrixXd(static_cast<Eigen::Index>(m_tilde), dim)};
    const double h = sched.h();
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t start = 0; start < m_tilde; start += kSampleChunk) {
        const std::size_t count = std::min(kSampleChunk, m_tilde - start);
        std::vector<Rng> rngs;
        rngs.reserve(count);
        Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(count));
        for (std::size_t c = 0; c < count; ++c) {
            rngs.push_back(stream_rng(seed, start + c));
            for (int k = 0; k < dim; ++k) x(k, static_cast<Eigen::Index>(c)) = nd(rngs.back());
        }
        for (int k = 0; k < sched.N; ++k) {
            const double t = sched.T - k * h;
            const double delta = (k == sched.N - 1) ? h - sched.t_min : h;
            const Eigen::MatrixXd s = score(x, t);
            double a, b, c;
            if (stepper == Stepper::exponential) {
                a = std::exp(delta);
                b = 2.0 * std::expm1(delta);
                c = std::sqrt(std::expm1(2.0 * delta));
            } else {
                a = 1.0 + delta;
                b = 2.0 * delta;
                c = std::sqrt(2.0 * delta);
            }
            x = a * x + b * s;
            for (std::size_t cidx = 0; cidx < count; ++cidx) {
                for (int d = 0; d < dim; ++d) x(d, static_cast<Eigen::Index>(cidx)) += c * nd(rngs[cidx]);
            }
            if (!x.allFinite()) throw NumericalError("reverse sampler diverged", k);
        }
        out.rows.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) = x.transpose();
    }
    return out;
}

EmbeddingSet sample(const ScoreNet& net, const DiffusionSchedule& sched, std::size_t m_tilde, std::uint64_t seed,
                    Stepper stepper) {
    return sample_with_score([&net](const Eigen::MatrixXd& x, double t) { return net.score(x, t); }, net.dim(), sched,
                             m_tilde, seed, stepper);
}

void save_score_net(const ScoreNet& net, const DiffusionSchedule& sched, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json header = {{"dim", net.dim()},
                             {"widths", net.mlp().widths()},
                             {"activation", "silu"},
                             {"frequencies", net.frequencies()},
                             {"schedule", to_json(sched)},
                             {"num_params", net.mlp().num_params()},
                             {"weights_file", "scorenet_weights.csv"}};
    write_text(dir / "scorenet.json", header.dump(2) + "\n");
    write_matrix_csv(dir / "scorenet_weights.csv", net.mlp().params(),
                     "weights count=" + std::to_string(net.mlp().num_params()));
}

std::pair<ScoreNet, DiffusionSchedule> load_score_net(const std::filesystem::path& dir) {
    std::ifstream in(dir / "scorenet.json");
    if (!in) throw IoError("cannot open " + (dir / "scorenet.json").string());
    const auto header = nlohmann::json::parse(in);
    if (header.value("activation", "silu") != "silu") throw FormatError("unsupported activation", 1);
    const auto widths = header.at("widths").get<std::vector<int>>();
    const int dim = header.at("dim").get<int>();
    std::vector<int> hidden(widths.begin() + 1, widths.end() - 1);
    ScoreNet net(dim, hidden, header.at("frequencies").get<std::vector<double>>(), 0);
    if (net.mlp().widths() != widths) throw FormatError("score network widths are inconsistent", 1);
    const Eigen::MatrixXd w = read_matrix_csv(dir / header.value("weights_file", "scorenet_weights.csv"));
    if (w.cols() != 1 || w.rows() != net.mlp().num_params()) throw FormatError("weight count mismatch", 1);
    net.mlp().params() = w.col(0);
    return {std::move(net), schedule_from_json(header.at("schedule"))};
}

}  // namespace hypergen
