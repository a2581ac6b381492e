#include "hypergen/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hypergen/error.hpp"
#include "hypergen/linmodel.hpp"

namespace hypergen {

namespace {

constexpr std::uint64_t kSampleSalt = 0x5a5a;
constexpr std::size_t kChunk = 256;

}  // namespace

Eigen::VectorXd calibrate_thresholds(const Eigen::MatrixXd& generated, const Eigen::VectorXd& target_freq) {
    const Eigen::Index rows = generated.rows(), n = generated.cols();
    if (target_freq.size() != n) throw DimensionError("target frequency length does not match columns");
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd tau(n);
    std::vector<double> col(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto keep = static_cast<Eigen::Index>(std::llround(target_freq(i) * static_cast<double>(rows)));
        if (keep <= 0) {
            tau(i) = inf;
        } else if (keep >= rows) {
            tau(i) = -inf;
        } else {
            for (Eigen::Index j = 0; j < rows; ++j) col[static_cast<std::size_t>(j)] = generated(j, i);
            // keep-th largest value
            auto nth = col.begin() + (rows - keep);
            std::nth_element(col.begin(), nth, col.end());
            tau(i) = *nth;
        }
    }
    return tau;
}

Hypergraph threshold_rows(const Eigen::MatrixXd& generated, const Eigen::VectorXd& thresholds) {
    Hypergraph h(static_cast<std::size_t>(generated.cols()));
    h.reserve(static_cast<std::size_t>(generated.rows()));
    for (Eigen::Index j = 0; j < generated.rows(); ++j) {
        Hyperlink link;
        for (Eigen::Index i = 0; i < generated.cols(); ++i) {
            if (generated(j, i) >= thresholds(i)) link.push_back(static_cast<NodeId>(i));
        }
        h.add(std::move(link));
    }
    return h;
}

GauDiffResult gau_diff_fit_sample(const Hypergraph& h, const DiffusionSchedule& sched, const TrainConfig& cfg,
                                  std::size_t m_tilde, std::uint64_t seed, int hidden_width) {
    if (h.num_links() == 0) throw EmptyInputError("Gau-Diff needs at least one hyperlink");
    const int n = static_cast<int>(h.num_nodes());
    EmbeddingSet data{h.incidence()};
    const Eigen::VectorXd freq = data.rows.colwise().mean().transpose();
    ScoreNet net = make_score_net(n, splitmix64(seed), hidden_width);
    TrainConfig tc = cfg;
    tc.seed = splitmix64(seed ^ 0x77);
    auto trained = train_score(data, std::move(net), sched, tc);
    const EmbeddingSet gen = sample(trained.net, sched, m_tilde, splitmix64(seed ^ kSampleSalt));

    GauDiffResult res;
    res.model.net = std::move(trained.net);
    res.model.thresholds = calibrate_thresholds(gen.rows, freq);
    res.generated = threshold_rows(gen.rows, res.model.thresholds);
    res.loss_trace = std::move(trained.loss_trace);
    return res;
}

std::vector<double> ber_diff_schedule(int N) {
    if (N < 1) throw ConfigError("Ber-Diff needs at least one step");
    std::vector<double> beta;
    for (int k = 1; k <= N; ++k) beta.push_back(1.0 / static_cast<double>(N - k + 2));
    return beta;
}

double ber_keep_prob(const std::vector<double>& beta, int k) {
    double a = 1.0;
    for (int l = 0; l < k; ++l) a *= 1.0 - beta[static_cast<std::size_t>(l)];
    return a;
}

Eigen::VectorXd ber_forward_step(const Eigen::VectorXd& prev, double beta_k, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd next = prev;
    for (Eigen::Index i = 0; i < prev.size(); ++i) {
        if (unif(rng) < beta_k) next(i) = unif(rng) < 0.5 ? 1.0 : 0.0;
    }
    return next;
}

Eigen::VectorXd ber_forward_marginal(const Eigen::VectorXd& x0, const std::vector<double>& beta, int k, Rng& rng) {
    const double keep = ber_keep_prob(beta, k);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd x = x0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        if (unif(rng) >= keep) x(i) = unif(rng) < 0.5 ? 1.0 : 0.0;
    }
    return x;
}

double ber_reverse_prob(double beta_k, double keep_prev, double x_k, double p_clean) {
    const double a_prev = keep_prev;
    const double b = beta_k;
    const bool xk = x_k > 0.5;
    auto step_lik = [&](bool prev) { return prev == xk ? 1.0 - 0.5 * b : 0.5 * b; };  // q(x_k | x_{k-1})
    double num = 0.0, norm = 0.0;
    for (int x0 = 0; x0 <= 1; ++x0) {
        const double prior1 = a_prev * x0 + 0.5 * (1.0 - a_prev);  // q(x_{k-1}=1 | x0)
        const double joint1 = step_lik(true) * prior1;
        const double joint0 = step_lik(false) * (1.0 - prior1);
        const double evidence = joint1 + joint0;  // q(x_k | x0)
        if (evidence <= 0) continue;
        const double w = x0 ? p_clean : 1.0 - p_clean;
        num += w * joint1 / evidence;
        norm += w;
    }
    return norm > 0 ? num / norm : p_clean;
}

BerDiffModel::BerDiffModel(int n, std::vector<double> beta, int hidden_width, std::uint64_t seed)
    : n_(n), beta_(std::move(beta)), freqs_(log_spaced_frequencies(8)) {
    if (beta_.empty()) throw ConfigError("Ber-Diff schedule is empty");
    for (double b : beta_) {
        if (!(b >= 0 && b < 1)) throw ConfigError("Ber-Diff schedule entries must lie in [0,1)");
    }
    for (int k = 0; k <= steps(); ++k) keep_.push_back(ber_keep_prob(beta_, k));
    net_ = Mlp({n + 2 * static_cast<int>(freqs_.size()), hidden_width, hidden_width, n}, seed);
}

Eigen::MatrixXd BerDiffModel::inputs(const Eigen::MatrixXd& x_k, const std::vector<int>& k) const {
    const auto nf = static_cast<Eigen::Index>(freqs_.size());
    Eigen::MatrixXd in(n_ + 2 * nf, x_k.cols());
    in.topRows(n_) = 2.0 * x_k.array() - 1.0;
    for (Eigen::Index b = 0; b < x_k.cols(); ++b) {
        const double s = static_cast<double>(k[static_cast<std::size_t>(b)]) / steps();
        for (Eigen::Index f = 0; f < nf; ++f) {
            in(n_ + 2 * f, b) = std::sin(freqs_[static_cast<std::size_t>(f)] * s);
            in(n_ + 2 * f + 1, b) = std::cos(freqs_[static_cast<std::size_t>(f)] * s);
        }
    }
    return in;
}

Eigen::MatrixXd BerDiffModel::predict_clean(const Eigen::MatrixXd& x_k, const std::vector<int>& k) const {
    return net_.forward(inputs(x_k, k)).unaryExpr([](double v) { return sigmoid(v); });
}

BerDiffModel train_ber_diff(const Hypergraph& h, const BerDiffConfig& bcfg, const TrainConfig& cfg,
                            std::vector<double>* loss_trace) {
    cfg.validate();
    if (h.num_links() == 0) throw EmptyInputError("Ber-Diff needs at least one hyperlink");
    const int n = static_cast<int>(h.num_nodes());
    auto beta = bcfg.beta.empty() ? ber_diff_schedule(bcfg.steps) : bcfg.beta;
    BerDiffModel model(n, beta, bcfg.hidden_width, splitmix64(cfg.seed ^ 0xbe4));
    const int N = model.steps();
    const Eigen::MatrixXd b = h.incidence();
    const auto m = static_cast<std::size_t>(b.rows());
    const auto batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), m);
    Adam adam(model.net().num_params(), cfg.lr, cfg.beta1, cfg.beta2);
    std::vector<std::size_t> order(m);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::uniform_int_distribution<int> pick(1, N);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < m; start += batch) {
            const auto bsz = static_cast<Eigen::Index>(std::min(batch, m - start));
            Eigen::MatrixXd x0(n, bsz), xk(n, bsz);
            std::vector<int> ks(static_cast<std::size_t>(bsz));
            for (Eigen::Index c = 0; c < bsz; ++c) {
                x0.col(c) = b.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(c)])).transpose();
                const int k = pick(rng);
                ks[static_cast<std::size_t>(c)] = k;
                const double a = model.keep(k);
                for (Eigen::Index i = 0; i < n; ++i) {
                    xk(i, c) = unif(rng) < a ? x0(i, c) : (unif(rng) < 0.5 ? 1.0 : 0.0);
                }
            }
            Mlp::Cache cache;
            const Eigen::MatrixXd logits = model.net().forward(model.inputs(xk, ks), cache);
            const double scale = 1.0 / static_cast<double>(bsz * n);
            double loss = 0.0;
            Eigen::MatrixXd d(n, bsz);
            for (Eigen::Index c = 0; c < bsz; ++c) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double l = logits(i, c);
                    loss += log1pexp(l) - x0(i, c) * l;
                    d(i, c) = (sigmoid(l) - x0(i, c)) * scale;
                }
            }
            loss *= scale;
            if (!std::isfinite(loss)) throw NumericalError("Ber-Diff training diverged", epoch);
            adam.step(model.net().params(), model.net().backward(cache, d));
            total += loss;
            ++batches;
        }
        if (loss_trace) loss_trace->push_back(total / static_cast<double>(batches));
    }
    return model;
}

Hypergraph sample_ber_diff(const BerDiffModel& model, std::size_t n, std::size_t m_tilde, std::uint64_t seed) {
    Hypergraph out(n);
    out.reserve(m_tilde);
    const int N = model.steps();
    const auto nn = static_cast<Eigen::Index>(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t start = 0; start < m_tilde; start += kChunk) {
        const std::size_t count = std::min(kChunk, m_tilde - start);
        const auto cc = static_cast<Eigen::Index>(count);
        std::vector<Rng> rngs;
        Eigen::MatrixXd x(nn, cc);
        for (std::size_t c = 0; c < count; ++c) {
            rngs.push_back(stream_rng(seed, start + c));
            for (Eigen::Index i = 0; i < nn; ++i) x(i, static_cast<Eigen::Index>(c)) = unif(rngs.back()) < 0.5 ? 1.0 : 0.0;
        }
        for (int k = N; k >= 1; --k) {
            const std::vector<int> ks(count, k);
            const Eigen::MatrixXd p = model.predict_clean(x, ks);
            const double beta_k = model.schedule()[static_cast<std::size_t>(k - 1)];
            const double keep_prev = model.keep(k - 1);
            for (Eigen::Index c = 0; c < cc; ++c) {
                for (Eigen::Index i = 0; i < nn; ++i) {
                    // the last reverse step emits the clean-bit prediction itself
                    const double q = k == 1 ? p(i, c) : ber_reverse_prob(beta_k, keep_prev, x(i, c), p(i, c));
                    x(i, c) = unif(rngs[static_cast<std::size_t>(c)]) < q ? 1.0 : 0.0;
                }
            }
        }
        for (Eigen::Index c = 0; c < cc; ++c) {
            Hyperlink link;
            for (Eigen::Index i = 0; i < nn; ++i) {
                if (x(i, c) > 0.5) link.push_back(static_cast<NodeId>(i));
            }
            out.add(std::move(link));
        }
    }
    return out;
}

BerDiffResult ber_diff_fit_sample(const Hypergraph& h, const BerDiffConfig& bcfg, const TrainConfig& cfg,
                                  std::size_t m_tilde, std::uint64_t seed) {
    BerDiffResult res;
    TrainConfig tc = cfg;
    tc.seed = splitmix64(seed ^ 0x99);
    res.model = train_ber_diff(h, bcfg, tc, &res.loss_trace);
    res.generated = sample_ber_diff(res.model, h.num_nodes(), m_tilde, splitmix64(seed ^ kSampleSalt));
    return res;
}

}  // namespace hypergen
