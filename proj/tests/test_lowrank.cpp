#include <doctest.h>

#include <cmath>

#include "hypergen/error.hpp"
#include "hypergen/lowrank.hpp"
#include "support.hpp"

using namespace hypergen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd orthonormal(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
    Eigen::HouseholderQR<MatrixXd> qr(testing::random_matrix(n, k, seed));
    return qr.householderQ() * MatrixXd::Identity(n, k);
}

}  // namespace

TEST_SUITE("lowrank") {

TEST_CASE("exact-rank input is reconstructed") {
    const MatrixXd z = orthonormal(20, 3, 1);
    const MatrixXd x = testing::random_matrix(40, 3, 2, 3.0);
    const MatrixXd y = x * z.transpose();
    const LowRankFit f = svd_embed(y, 3);
    CHECK((f.x_hat * f.z_hat.transpose() - y).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((f.z_hat.transpose() * f.z_hat - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int k = 0; k + 1 < 3; ++k) CHECK(f.singular_values(k) >= f.singular_values(k + 1));
    for (int k = 0; k < 3; ++k) {
        Eigen::Index arg;
        f.z_hat.col(k).cwiseAbs().maxCoeff(&arg);
        CHECK(f.z_hat(arg, k) > 0);
    }
}

TEST_CASE("rank-one truncation keeps the leading component") {
    MatrixXd y = MatrixXd::Zero(4, 3);
    y(0, 0) = 3;
    y(1, 1) = 1;
    const LowRankFit f = svd_embed(y, 1);
    MatrixXd expect = MatrixXd::Zero(4, 3);
    expect(0, 0) = 3;
    CHECK((f.x_hat * f.z_hat.transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.singular_values(0) == doctest::Approx(3.0));
}

TEST_CASE("small perturbations are absorbed") {
    const MatrixXd y0 = testing::random_matrix(30, 2, 3) * testing::random_matrix(2, 20, 4);
    const MatrixXd y = y0 + 1e-8 * testing::random_matrix(30, 20, 5);
    const LowRankFit f = svd_embed(y, 2);
    CHECK((f.x_hat * f.z_hat.transpose() - y0).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(svd_embed(MatrixXd::Ones(3, 4), 4), ConfigError);
    CHECK_THROWS_AS(svd_embed(MatrixXd::Ones(3, 4), 0), ConfigError);
    MatrixXd bad = MatrixXd::Ones(3, 4);
    bad(1, 2) = std::nan("");
    CHECK_THROWS_AS(svd_embed(bad, 1), ValidationError);
}

TEST_CASE("generated rows stay in the recovered subspace") {
    const MatrixXd z = orthonormal(12, 2, 6);
    const MatrixXd y = testing::random_matrix(500, 2, 7) * z.transpose();
    const LowRankFit f = svd_embed(y, 2);
    const ScoreNet net = make_score_net(2, 1, 16);
    DiffusionSchedule sched;
    sched.N = 50;
    const MatrixXd gen = lowrank_generate(f, net, sched, 200, 3);
    REQUIRE(gen.rows() == 200);
    REQUIRE(gen.cols() == 12);
    const MatrixXd proj = MatrixXd::Identity(12, 12) - f.z_hat * f.z_hat.transpose();
    for (Eigen::Index j = 0; j < gen.rows(); ++j) CHECK((proj * gen.row(j).transpose()).norm() <= 1e-9);
    CHECK(lowrank_generate(f, net, sched, 0, 3).rows() == 0);
}

TEST_CASE("latent samples reproduce the generator covariance") {
    const MatrixXd z = orthonormal(10, 2, 8);
    const MatrixXd x = testing::random_matrix(10000, 2, 9);
    const LowRankFit f = svd_embed(x * z.transpose(), 2);

    // X_hat is a rotation of X: the spectra of their sample covariances agree
    const MatrixXd cx = x.transpose() * x / 1e4, ch = f.x_hat.transpose() * f.x_hat / 1e4;
    const VectorXd ex = Eigen::SelfAdjointEigenSolver<MatrixXd>(cx).eigenvalues();
    const VectorXd eh = Eigen::SelfAdjointEigenSolver<MatrixXd>(ch).eigenvalues();
    CHECK(((ex - eh).array().abs() / ex.array()).maxCoeff() < 0.05);

    DiffusionSchedule sched;
    sched.N = 100;
    TrainConfig cfg;
    cfg.epochs = 30;
    const TrainResult r = train_score(EmbeddingSet{f.x_hat}, make_score_net(2, 2), sched, cfg);
    const MatrixXd gen = lowrank_generate(f, r.net, sched, 10000, 4);
    const MatrixXd c = gen.rowwise() - gen.colwise().mean();
    const MatrixXd cov = c.transpose() * c / 1e4;
    CHECK((cov - z * z.transpose()).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("decoding is linear in the latent rows") {
    const LowRankFit f = svd_embed(testing::random_matrix(15, 6, 1), 3);
    const EmbeddingSet lat{testing::random_matrix(7, 3, 2)};
    CHECK((decode_lowrank(f, lat) - lat.rows * f.z_hat.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

}  // TEST_SUITE
