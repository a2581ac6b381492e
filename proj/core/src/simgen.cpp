#include "hypergen/simgen.hpp"

#include <cmath>
#include <fstream>

#include <boost/math/special_functions/erf.hpp>
#include <nlohmann/json.hpp>

#include "hypergen/error.hpp"

namespace hypergen {

namespace {

// Sub-seeds so the four random pieces of a simulation never share streams.
constexpr std::uint64_t kHyperlinkSalt = 0x1001;
constexpr std::uint64_t kNodeSalt = 0x2002;
constexpr std::uint64_t kAlphaSalt = 0x3003;
constexpr std::uint64_t kLinkSalt = 0x4004;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double std_normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

}  // namespace

void SimConfig::validate() const {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(alpha_lo <= alpha_hi)) throw ConfigError("alpha_range must satisfy lo <= hi");
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    c.K = j.value("K", c.K);
    c.m = j.value("m", c.m);
    c.n = j.value("n", c.n);
    if (j.contains("alpha_range")) {
        const auto& r = j.at("alpha_range");
        if (!r.is_array() || r.size() != 2) throw ConfigError("alpha_range must be [lo, hi]");
        c.alpha_lo = r[0].get<double>();
        c.alpha_hi = r[1].get<double>();
    }
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

nlohmann::json to_json(const SimConfig& c) {
    return {{"K", c.K}, {"m", c.m}, {"n", c.n}, {"alpha_range", {c.alpha_lo, c.alpha_hi}}, {"seed", c.seed}};
}

SimConfig load_sim_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return sim_config_from_json(nlohmann::json::parse(in));
}

double truncated_normal(double mean, double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    const double plo = std_normal_cdf(lo - mean);
    const double phi = std_normal_cdf(hi - mean);
    double p = plo + u * (phi - plo);
    // keep strictly inside (0,1) for the quantile
    p = std::clamp(p, 1e-300, 1.0 - 1e-16);
    const double x = mean + std_normal_quantile(p);
    return std::clamp(x, lo, hi);
}

Eigen::VectorXd hyperlink_component_mean(int K, int k) {
    const double rk = std::sqrt(static_cast<double>(K));
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(K, 1.0 / (K * rk));
    mu(k) -= 1.0 / rk;
    return mu;
}

Eigen::VectorXd node_component_mean(int K, int k) {
    const double rk = std::sqrt(static_cast<double>(K));
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(K, 1.0 / rk);
    mu(k) += 1.0 / rk;
    return mu;
}

Eigen::MatrixXd sample_mixture(int K, std::size_t rows, bool node_side, std::uint64_t seed,
                               std::vector<int>* components) {
    const double bound = 2.0 / std::sqrt(static_cast<double>(K));
    const double lo = node_side ? 0.0 : -bound;
    const double hi = node_side ? bound : 0.0;
    std::vector<Eigen::VectorXd> means;
    for (int k = 0; k < K; ++k) means.push_back(node_side ? node_component_mean(K, k) : hyperlink_component_mean(K, k));

    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), K);
    if (components) components->assign(rows, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        Rng rng = stream_rng(seed, r);
        std::uniform_int_distribution<int> pick(0, K - 1);
        const int k = pick(rng);
        if (components) (*components)[r] = k;
        for (int d = 0; d < K; ++d) out(static_cast<Eigen::Index>(r), d) = truncated_normal(means[k](d), lo, hi, rng);
    }
    return out;
}

EmbeddingSet sample_hyperlink_embeddings(const SimConfig& cfg) {
    cfg.validate();
    return {sample_mixture(cfg.K, cfg.m, false, splitmix64(cfg.seed ^ kHyperlinkSalt))};
}

Eigen::MatrixXd sample_node_embeddings(const SimConfig& cfg) {
    cfg.validate();
    return sample_mixture(cfg.K, cfg.n, true, splitmix64(cfg.seed ^ kNodeSalt));
}

Eigen::VectorXd sample_alphas(const SimConfig& cfg) {
    cfg.validate();
    Rng rng = stream_rng(cfg.seed, kAlphaSalt);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd a(static_cast<Eigen::Index>(cfg.n));
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = cfg.alpha_lo + (cfg.alpha_hi - cfg.alpha_lo) * unif(rng);
    return a;
}

GroundTruth generate_ground_truth(const SimConfig& cfg) {
    GroundTruth g;
    g.embeddings = sample_hyperlink_embeddings(cfg);
    g.params.z = sample_node_embeddings(cfg);
    g.params.alpha = sample_alphas(cfg);
    g.hypergraph = sample_hypergraph(g.embeddings, g.params, splitmix64(cfg.seed ^ kLinkSalt));
    return g;
}

Hypergraph resample_from_truth(const SimConfig& cfg, const NodeParams& params, std::size_t m, std::uint64_t seed) {
    EmbeddingSet x{sample_mixture(cfg.K, m, false, splitmix64(seed ^ kHyperlinkSalt))};
    return sample_hypergraph(x, params, splitmix64(seed ^ kLinkSalt));
}

}  // namespace hypergen
