#include "hypergen/linmodel.hpp"

#include <string>

#include "hypergen/csv.hpp"
#include "hypergen/error.hpp"

namespace hypergen {

namespace {

void check_dims(const Hypergraph& h, const EmbeddingSet& x, const NodeParams& p) {
    if (static_cast<std::size_t>(x.size()) != h.num_links()) {
        throw DimensionError("embedding rows (" + std::to_string(x.size()) + ") != hyperlinks (" +
                             std::to_string(h.num_links()) + ")");
    }
    if (static_cast<std::size_t>(p.num_nodes()) != h.num_nodes() || p.alpha.size() != p.z.rows()) {
        throw DimensionError("node parameter count does not match hypergraph n");
    }
    if (x.dim() != p.dim()) throw DimensionError("embedding dimension mismatch");
}

Eigen::MatrixXd logits(const EmbeddingSet& x, const NodeParams& p) {
    Eigen::MatrixXd a = x.rows * p.z.transpose();
    a.rowwise() += p.alpha.transpose();
    return a;
}

}  // namespace

Eigen::VectorXd link_probs(const Eigen::Ref<const Eigen::VectorXd>& x, const NodeParams& params) {
    if (x.size() != params.dim()) {
        throw DimensionError("x has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(params.dim()));
    }
    Eigen::VectorXd a = params.z * x + params.alpha;
    return a.unaryExpr([](double v) { return sigmoid(v); });
}

Hyperlink sample_hyperlink(const Eigen::Ref<const Eigen::VectorXd>& x, const NodeParams& params, Rng& rng) {
    const Eigen::VectorXd p = link_probs(x, params);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Hyperlink link;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (unif(rng) < p(i)) link.push_back(static_cast<NodeId>(i));
    }
    return link;
}

Hypergraph sample_hypergraph(const EmbeddingSet& x, const NodeParams& params, std::uint64_t seed) {
    Hypergraph h(static_cast<std::size_t>(params.num_nodes()));
    h.reserve(static_cast<std::size_t>(x.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Rng rng = stream_rng(seed, static_cast<std::uint64_t>(j));
        h.add(sample_hyperlink(x.rows.row(j).transpose(), params, rng));
    }
    return h;
}

double log_likelihood(const Hypergraph& h, const EmbeddingSet& x, const NodeParams& params) {
    check_dims(h, x, params);
    const Eigen::MatrixXd a = logits(x, params);
    double total = 0.0;
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        double row = 0.0;
        for (Eigen::Index i = 0; i < a.cols(); ++i) row -= log1pexp(a(j, i));
        for (NodeId i : h.link(static_cast<std::size_t>(j))) row += a(j, i);
        total += row;
    }
    return total;
}

LikelihoodGradient grad_log_likelihood(const Hypergraph& h, const EmbeddingSet& x, const NodeParams& params) {
    check_dims(h, x, params);
    // residual r_ji = 1{i in e_j} - p_i(x_j)
    Eigen::MatrixXd r = -logits(x, params).unaryExpr([](double v) { return sigmoid(v); });
    for (std::size_t j = 0; j < h.num_links(); ++j) {
        for (NodeId i : h.link(j)) r(static_cast<Eigen::Index>(j), i) += 1.0;
    }
    LikelihoodGradient g;
    g.d_x = r * params.z;
    g.d_z = r.transpose() * x.rows;
    g.d_alpha = r.colwise().sum().transpose();
    return g;
}

Hyperlink deterministic_hyperlink(const Eigen::Ref<const Eigen::VectorXd>& x, const NodeParams& params,
                                  double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ValidationError("threshold must lie in (0,1)");
    }
    const Eigen::VectorXd p = link_probs(x, params);
    Hyperlink link;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) >= threshold) link.push_back(static_cast<NodeId>(i));
    }
    return link;
}

void save_embeddings(const EmbeddingSet& x, const std::filesystem::path& path) {
    write_matrix_csv(path, x.rows, "embeddings m=" + std::to_string(x.size()) + " K=" + std::to_string(x.dim()));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) { return {read_matrix_csv(path)}; }

void save_node_params(const NodeParams& p, const std::filesystem::path& dir) {
    const auto n = std::to_string(p.num_nodes());
    write_matrix_csv(dir / "Z.csv", p.z, "node_embeddings n=" + n + " K=" + std::to_string(p.dim()));
    write_matrix_csv(dir / "alpha.csv", p.alpha, "alpha n=" + n);
}

NodeParams load_node_params(const std::filesystem::path& dir) {
    NodeParams p;
    p.z = read_matrix_csv(dir / "Z.csv");
    Eigen::MatrixXd a = read_matrix_csv(dir / "alpha.csv");
    if (a.cols() != 1 || a.rows() != p.z.rows()) {
        throw DimensionError("alpha.csv must be an n×1 column matching Z.csv");
    }
    p.alpha = a.col(0);
    return p;
}

}  // namespace hypergen
