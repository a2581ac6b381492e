#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hypergen/error.hpp"
#include "hypergen/mle.hpp"
#include "hypergen/simgen.hpp"
#include "support.hpp"

using namespace hypergen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double offdiag_max(const MatrixXd& g) {
    double v = 0;
    for (Eigen::Index a = 0; a < g.rows(); ++a)
        for (Eigen::Index b = 0; b < g.cols(); ++b)
            if (a != b) v = std::max(v, std::abs(g(a, b)));
    return v;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

MleFit fit_sim(std::size_t mn, std::uint64_t seed, GroundTruth* truth = nullptr) {
    SimConfig s;
    s.m = s.n = mn;
    s.seed = seed;
    GroundTruth g = generate_ground_truth(s);
    MleFit f = fit(g.hypergraph, MleConfig{});
    if (truth) *truth = std::move(g);
    return f;
}

}  // namespace

TEST_SUITE("mle") {

TEST_CASE("C_mn plug-in values") {
    const Hypergraph h(4, {{0, 1}, {2}});
    CHECK(compute_Cmn(h, 2.0) == doctest::Approx(-2.0 * std::log(3.0 / 8.0)));
    CHECK(compute_Cmn(h, 2.0) == doctest::Approx(1.96166).epsilon(1e-5));
    CHECK(compute_Cmn(Hypergraph(2, {{0, 1}, {0, 1}}), 1.5) == 0.0);
    CHECK_THROWS_AS(compute_Cmn(Hypergraph(3, {{}, {}}), 1.5), DegenerateInputError);

    // density 0.368 is e^-1 to three digits, so C_mn is 1.5 to the same accuracy
    Hypergraph big(1000);
    Hyperlink e;
    for (NodeId i = 0; i < 368; ++i) e.push_back(i);
    big.add(e);
    CHECK(compute_Cmn(big, 1.5) == doctest::Approx(-1.5 * std::log(0.368)));
    CHECK(compute_Cmn(big, 1.5) == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("config validation") {
    MleConfig c;
    c.C = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = MleConfig{};
    c.C_prime = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = MleConfig{};
    c.C_dprime = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = MleConfig{};
    c.tol = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    const MleConfig d = mle_config_from_json(to_json(MleConfig{}));
    CHECK(d.C == 3.0);
    CHECK(d.C_dprime == 1.5);
}

TEST_CASE("projection yields centred, diagonal, matched Gram matrices") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const EmbeddingSet x{testing::random_matrix(50, 3, seed)};
        const NodeParams p = testing::random_params(40, 3, seed + 100);
        const auto id = identifiability_projection(x, p);
        CHECK(id.x.rows.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
        const MatrixXd gx = id.x.rows.transpose() * id.x.rows / 50.0;
        const MatrixXd gz = id.params.z.transpose() * id.params.z / 40.0;
        CHECK(offdiag_max(gx) <= 1e-9);
        CHECK(offdiag_max(gz) <= 1e-9);
        CHECK((gx - gz).cwiseAbs().maxCoeff() <= 1e-9);
        for (int k = 0; k + 1 < 3; ++k) CHECK(gx(k, k) >= gx(k + 1, k + 1));
        // largest-magnitude entry of each Z column is positive
        for (int k = 0; k < 3; ++k) {
            Eigen::Index arg;
            id.params.z.col(k).cwiseAbs().maxCoeff(&arg);
            CHECK(id.params.z(arg, k) > 0);
        }
        const Hypergraph h = testing::random_hypergraph(50, 40, 0.3, seed);
        CHECK(std::abs(log_likelihood(h, x, p) - log_likelihood(h, id.x, id.params)) < 1e-9);
    }
}

TEST_CASE("projection is a fixed point on identified input") {
    const EmbeddingSet x{testing::random_matrix(30, 2, 1)};
    const NodeParams p = testing::random_params(20, 2, 2);
    const auto once = identifiability_projection(x, p);
    const auto twice = identifiability_projection(once.x, once.params);
    CHECK((once.x.rows - twice.x.rows).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((once.params.z - twice.params.z).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((once.params.alpha - twice.params.alpha).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("projection rejects rank-deficient node embeddings") {
    const EmbeddingSet x{testing::random_matrix(10, 2, 1)};
    NodeParams p = testing::random_params(8, 2, 2);
    p.z.col(1) = 2.0 * p.z.col(0);
    CHECK_THROWS_AS(identifiability_projection(x, p), SingularityError);
    p.z.setZero();
    CHECK_THROWS_AS(identifiability_projection(x, p), SingularityError);
}

TEST_CASE("fit rejects degenerate input") {
    CHECK_THROWS_AS(fit(Hypergraph(4, {{}, {}, {}}), MleConfig{}), DegenerateInputError);
    CHECK_THROWS_AS(fit(Hypergraph(2, {{0, 1}, {0, 1}, {0, 1}}), MleConfig{}), DegenerateInputError);
    MleConfig c;
    c.K = 5;
    CHECK_THROWS_AS(fit(testing::random_hypergraph(4, 10, 0.3, 1), c), ConfigError);
}

TEST_CASE("fit is feasible and its trace never decreases") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        SimConfig s;
        s.m = 80;
        s.n = 60;
        s.seed = seed;
        const auto g = generate_ground_truth(s);
        const MleFit f = fit(g.hypergraph, MleConfig{});
        CHECK(f.residuals.max() <= 1e-6);
        CHECK(f.x_hat.rows.cwiseAbs().maxCoeff() <= 3.0);
        CHECK(f.params_hat.z.cwiseAbs().maxCoeff() <= 3.0);
        const double abar = f.params_hat.alpha_bar();
        CHECK(abar >= -f.c_mn - 1e-12);
        CHECK(abar <= -0.5 * f.c_mn + 1e-12);
        for (std::size_t k = 1; k < f.loglik_trace.size(); ++k) {
            CHECK(f.loglik_trace[k] >= f.loglik_trace[k - 1]);
            CHECK(f.ascent_trace[k] >= f.loglik_trace[k - 1]);
        }
        CHECK(std::abs(f.loglik_trace.back() - log_likelihood(g.hypergraph, f.x_hat, f.params_hat)) < 1e-9);
        // the fit explains the data at least as well as the truth does
        CHECK(f.loglik_trace.back() > log_likelihood(g.hypergraph, g.embeddings, g.params));
    }
}

TEST_CASE("absent node is pushed to the lower alpha boundary") {
    SimConfig s;
    s.m = 80;
    s.n = 40;
    s.seed = 3;
    const auto g = generate_ground_truth(s);
    std::vector<Hyperlink> links;
    for (auto l : g.hypergraph.links()) {
        std::erase(l, NodeId{7});
        links.push_back(l);
    }
    const MleFit f = fit(Hypergraph(40, links), MleConfig{});
    const VectorXd& a = f.params_hat.alpha;
    CHECK(a(7) == doctest::Approx(a.minCoeff()));
    CHECK(a(7) - a.mean() < -2.0);
    CHECK(f.residuals.alpha_spread <= 1e-6);
}

TEST_CASE("fit is deterministic") {
    const Hypergraph h = testing::random_hypergraph(40, 30, 0.3, 9);
    const MleFit a = fit(h, MleConfig{});
    const MleFit b = fit(h, MleConfig{});
    CHECK(a.x_hat.rows == b.x_hat.rows);
    CHECK(a.params_hat.alpha == b.params_hat.alpha);
}

TEST_CASE("estimation error shrinks with size") {
    // Median over five seeds of the max-norm errors after alignment.
    std::vector<double> x150, z150, a150, x300, z300, a300, rx300, rz300, ra300;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GroundTruth g;
        auto f = fit_sim(150, seed, &g);
        auto e = estimation_errors(f, g.embeddings, g.params);
        x150.push_back(e.x);
        z150.push_back(e.z);
        a150.push_back(e.alpha);

        f = fit_sim(300, seed, &g);
        e = estimation_errors(f, g.embeddings, g.params);
        x300.push_back(e.x);
        z300.push_back(e.z);
        a300.push_back(e.alpha);

        // root-mean-square errors against the aligned truth
        auto t = identifiability_projection(g.embeddings, g.params);
        for (int k = 0; k < 2; ++k) {
            if (f.params_hat.z.col(k).dot(t.params.z.col(k)) < 0) {
                t.params.z.col(k) *= -1;
                t.x.rows.col(k) *= -1;
            }
        }
        rx300.push_back(std::sqrt((f.x_hat.rows - t.x.rows).squaredNorm() / 600.0));
        rz300.push_back(std::sqrt((f.params_hat.z - t.params.z).squaredNorm() / 600.0));
        ra300.push_back(std::sqrt((f.params_hat.alpha - t.params.alpha).squaredNorm() / 300.0));
    }
    CHECK(median(x300) < median(x150));
    CHECK(median(z300) < median(z150));
    CHECK(median(a300) < median(a150));
    // Max-norm errors at this size are dominated by a few low-order hyperlinks;
    // the per-entry error is what stays under 0.5.
    CHECK(median(rx300) < 0.5);
    CHECK(median(rz300) < 0.5);
    CHECK(median(ra300) < 0.5);
    MESSAGE("median max-norm errors at 300: x=" << median(x300) << " z=" << median(z300) << " alpha=" << median(a300));
}

TEST_CASE("fit round trips through its directory") {
    testing::TempDir dir("mle");
    const MleFit f = fit(testing::random_hypergraph(30, 20, 0.3, 4), MleConfig{});
    save_fit(f, MleConfig{}, dir.path());
    for (const char* name : {"X.csv", "Z.csv", "alpha.csv", "trace.csv", "meta.json"})
        CHECK(std::filesystem::exists(dir / name));
    const MleFit g = load_fit(dir.path());
    CHECK(g.x_hat.rows == f.x_hat.rows);
    CHECK(g.params_hat.z == f.params_hat.z);
    CHECK(g.params_hat.alpha == f.params_hat.alpha);
}

}  // TEST_SUITE
