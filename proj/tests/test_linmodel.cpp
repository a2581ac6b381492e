#include <doctest.h>

#include <cmath>

#include "hypergen/error.hpp"
#include "hypergen/linmodel.hpp"
#include "support.hpp"

using namespace hypergen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Sum of Bernoulli log-pmfs written out directly, without the library's
// log1pexp trick.
double brute_loglik(const Hypergraph& h, const MatrixXd& x, const NodeParams& p) {
    double total = 0;
    for (std::size_t j = 0; j < h.num_links(); ++j) {
        std::vector<bool> in(h.num_nodes(), false);
        for (NodeId i : h.link(j)) in[i] = true;
        for (std::size_t i = 0; i < h.num_nodes(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double a = x.row(static_cast<Eigen::Index>(j)).dot(p.z.row(ii)) + p.alpha(ii);
            const double pi = 1.0 / (1.0 + std::exp(-a));
            total += in[i] ? std::log(pi) : std::log(1.0 - pi);
        }
    }
    return total;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_SUITE("linmodel") {

TEST_CASE("sigmoid and log1pexp are stable") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-1.0) == doctest::Approx(0.2689414213699951));
    CHECK(sigmoid(2.0) == doctest::Approx(0.8807970779778823));
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(std::isfinite(sigmoid(800.0)));
    CHECK(log1pexp(800.0) == doctest::Approx(800.0));
    CHECK(log1pexp(-800.0) == doctest::Approx(0.0));
    CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("link probabilities closed forms") {
    NodeParams p;
    p.z = MatrixXd::Zero(3, 2);
    p.alpha = VectorXd::Zero(3);
    CHECK(link_probs(VectorXd::Zero(2), p).isApproxToConstant(0.5));

    p.z = testing::random_matrix(3, 2, 4);
    p.alpha = VectorXd::Constant(3, -1.0);
    const VectorXd q = link_probs(VectorXd::Zero(2), p);
    for (int i = 0; i < 3; ++i) CHECK(q(i) == doctest::Approx(0.2689414213699951));

    NodeParams one;
    one.z = MatrixXd(1, 2);
    one.z << 1, 0;
    one.alpha = VectorXd::Constant(1, 1.0);
    CHECK(link_probs(VectorXd::Ones(2), one)(0) == doctest::Approx(0.8807970779778823));

    CHECK_THROWS_AS(link_probs(VectorXd::Zero(3), one), DimensionError);
}

TEST_CASE("saturated probabilities give full and empty hyperlinks") {
    NodeParams p;
    p.z = MatrixXd::Zero(6, 1);
    p.alpha = VectorXd::Constant(6, 50.0);
    Rng rng(1);
    CHECK(sample_hyperlink(VectorXd::Zero(1), p, rng) == Hyperlink{0, 1, 2, 3, 4, 5});
    p.alpha.setConstant(-50.0);
    CHECK(sample_hyperlink(VectorXd::Zero(1), p, rng).empty());
}

TEST_CASE("sampled inclusion frequencies match probabilities") {
    NodeParams p;
    p.z = MatrixXd::Zero(2, 1);
    p.alpha.resize(2);
    p.alpha << std::log(0.3 / 0.7), std::log(0.7 / 0.3);
    const int draws = 100000;
    Rng rng(7);
    double c0 = 0, c1 = 0;
    for (int d = 0; d < draws; ++d) {
        for (NodeId i : sample_hyperlink(VectorXd::Zero(1), p, rng)) (i == 0 ? c0 : c1) += 1;
    }
    const double se = std::sqrt(0.3 * 0.7 / draws);
    CHECK(std::abs(c0 / draws - 0.3) < 4 * se);
    CHECK(std::abs(c1 / draws - 0.7) < 4 * se);
}

TEST_CASE("mean hyperlink order matches the sum of probabilities") {
    const NodeParams p = testing::random_params(15, 2, 21);
    const VectorXd x = testing::random_matrix(2, 1, 22).col(0);
    const VectorXd q = link_probs(x, p);
    const double expected = q.sum();
    const double var = (q.array() * (1 - q.array())).sum();
    const int draws = 100000;
    Rng rng(3);
    double total = 0;
    for (int d = 0; d < draws; ++d) total += static_cast<double>(sample_hyperlink(x, p, rng).size());
    CHECK(std::abs(total / draws - expected) < 4 * std::sqrt(var / draws));
}

TEST_CASE("sample_hypergraph is reproducible per row stream") {
    const NodeParams p = testing::random_params(10, 2, 5);
    const EmbeddingSet x{testing::random_matrix(20, 2, 6)};
    const Hypergraph a = sample_hypergraph(x, p, 99);
    CHECK(a == sample_hypergraph(x, p, 99));
    CHECK_FALSE(a == sample_hypergraph(x, p, 100));
    // row j depends only on its own stream
    const EmbeddingSet head{x.rows.topRows(5)};
    const Hypergraph b = sample_hypergraph(head, p, 99);
    for (std::size_t j = 0; j < 5; ++j) CHECK(b.link(j) == a.link(j));
}

TEST_CASE("log-likelihood special values") {
    const Hypergraph h = testing::random_hypergraph(5, 4, 0.4, 1);
    NodeParams zero;
    zero.z = MatrixXd::Zero(4, 2);
    zero.alpha = VectorXd::Zero(4);
    CHECK(log_likelihood(h, EmbeddingSet{MatrixXd::Zero(5, 2)}, zero) == doctest::Approx(-5 * 4 * std::log(2.0)));

    NodeParams single;
    single.z = MatrixXd::Zero(1, 1);
    single.alpha = VectorXd::Zero(1);
    const EmbeddingSet x{MatrixXd::Zero(1, 1)};
    CHECK(log_likelihood(Hypergraph(1, {{0}}), x, single) == doctest::Approx(-0.6931471805599453));
    CHECK(log_likelihood(Hypergraph(1, {{}}), x, single) == doctest::Approx(-0.6931471805599453));

    CHECK_THROWS_AS(log_likelihood(h, EmbeddingSet{MatrixXd::Zero(4, 2)}, zero), DimensionError);
}

TEST_CASE("log-likelihood equals the brute-force sum") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Hypergraph h = testing::random_hypergraph(3, 4, 0.5, seed);
        const NodeParams p = testing::random_params(4, 2, seed + 50);
        const MatrixXd x = testing::random_matrix(3, 2, seed + 80);
        CHECK(std::abs(log_likelihood(h, EmbeddingSet{x}, p) - brute_loglik(h, x, p)) < 1e-10);
    }
}

TEST_CASE("likelihood of one slot normalizes over all subsets") {
    for (int n : {1, 4, 8, 12}) {
        const NodeParams p = testing::random_params(n, 3, 10 + static_cast<std::uint64_t>(n));
        const EmbeddingSet x{testing::random_matrix(1, 3, 40 + static_cast<std::uint64_t>(n))};
        double total = 0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            Hyperlink e;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) e.push_back(static_cast<NodeId>(i));
            total += std::exp(log_likelihood(Hypergraph(static_cast<std::size_t>(n), {e}), x, p));
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("gradient closed forms at the origin") {
    const Hypergraph h = testing::random_hypergraph(7, 5, 0.4, 3);
    NodeParams zero;
    zero.z = MatrixXd::Zero(5, 2);
    zero.alpha = VectorXd::Zero(5);
    const auto g = grad_log_likelihood(h, EmbeddingSet{MatrixXd::Zero(7, 2)}, zero);
    const auto deg = h.incidence().colwise().sum();
    for (int i = 0; i < 5; ++i) CHECK(g.d_alpha(i) == doctest::Approx(deg(i) - 3.5));

    // dZ at Z = 0 with nonzero X and alpha
    NodeParams p = zero;
    p.alpha = testing::random_matrix(5, 1, 8).col(0);
    const MatrixXd x = testing::random_matrix(7, 2, 9);
    const auto g2 = grad_log_likelihood(h, EmbeddingSet{x}, p);
    const MatrixXd b = h.incidence();
    for (int i = 0; i < 5; ++i) {
        Eigen::RowVector2d expect = Eigen::RowVector2d::Zero();
        for (int j = 0; j < 7; ++j) expect += (b(j, i) - sigmoid(p.alpha(i))) * x.row(j);
        CHECK((g2.d_z.row(i) - expect).norm() < 1e-12);
    }
}

TEST_CASE("gradient matches central differences") {
    const double step = 1e-5;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Hypergraph h = testing::random_hypergraph(4, 5, 0.4, seed);
        NodeParams p = testing::random_params(5, 2, seed + 10);
        EmbeddingSet x{testing::random_matrix(4, 2, seed + 20)};
        const auto g = grad_log_likelihood(h, x, p);
        auto probe = [&](double& v, double analytic) {
            const double keep = v;
            v = keep + step;
            const double up = log_likelihood(h, x, p);
            v = keep - step;
            const double down = log_likelihood(h, x, p);
            v = keep;
            CHECK(rel_err((up - down) / (2 * step), analytic) < 1e-6);
        };
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 2; ++k) probe(x.rows(j, k), g.d_x(j, k));
        for (int i = 0; i < 5; ++i) {
            for (int k = 0; k < 2; ++k) probe(p.z(i, k), g.d_z(i, k));
            probe(p.alpha(i), g.d_alpha(i));
        }
    }
}

TEST_CASE("likelihood is invariant under shift and linear reparametrization") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Hypergraph h = testing::random_hypergraph(6, 7, 0.3, seed);
        const NodeParams p = testing::random_params(7, 3, seed + 1);
        const MatrixXd x = testing::random_matrix(6, 3, seed + 2);
        MatrixXd a = testing::random_matrix(3, 3, seed + 3);
        a.diagonal().array() += 3.0;  // keep it well conditioned
        const VectorXd mu = testing::random_matrix(3, 1, seed + 4).col(0);

        NodeParams q;
        q.z = p.z * a.inverse().transpose();
        q.alpha = p.alpha + p.z * mu;
        const MatrixXd x2 = (x.rowwise() - mu.transpose()) * a;
        const double l1 = log_likelihood(h, EmbeddingSet{x}, p);
        const double l2 = log_likelihood(h, EmbeddingSet{x2}, q);
        CHECK(std::abs(l1 - l2) < 1e-9);
    }
}

TEST_CASE("deterministic decoder thresholds with ties included") {
    NodeParams p;
    p.z = MatrixXd::Zero(3, 1);
    p.alpha = VectorXd::Zero(3);
    CHECK(deterministic_hyperlink(VectorXd::Zero(1), p, 0.5) == Hyperlink{0, 1, 2});

    NodeParams two;
    two.z = MatrixXd::Zero(2, 1);
    two.alpha.resize(2);
    two.alpha << std::log(0.95 / 0.05), std::log(0.1 / 0.9);
    CHECK(deterministic_hyperlink(VectorXd::Zero(1), two, 0.9) == Hyperlink{0});
    CHECK(deterministic_hyperlink(VectorXd::Zero(1), two, std::nextafter(1.0, 0.0)).empty());

    CHECK_THROWS_AS(deterministic_hyperlink(VectorXd::Zero(1), two, 0.0), ValidationError);
    CHECK_THROWS_AS(deterministic_hyperlink(VectorXd::Zero(1), two, 1.0), ValidationError);
}

TEST_CASE("embeddings and node parameters round trip through CSV") {
    testing::TempDir dir("lm");
    const EmbeddingSet x{testing::random_matrix(9, 3, 1)};
    save_embeddings(x, dir / "X.csv");
    CHECK(load_embeddings(dir / "X.csv").rows == x.rows);
    const NodeParams p = testing::random_params(6, 3, 2);
    save_node_params(p, dir.path());
    const NodeParams q = load_node_params(dir.path());
    CHECK(q.z == p.z);
    CHECK(q.alpha == p.alpha);
}

}  // TEST_SUITE
