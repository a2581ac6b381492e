#include "hypergen/lowrank.hpp"

#include <Eigen/SVD>

#include "hypergen/error.hpp"

namespace hypergen {

LowRankFit svd_embed(const Eigen::MatrixXd& y, int K) {
    if (K < 1 || K > std::min(y.rows(), y.cols())) throw ConfigError("K must lie in [1, min(m, n)]");
    if (!y.allFinite()) throw ValidationError("input matrix has non-finite entries");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    LowRankFit f;
    f.singular_values = svd.singularValues().head(K);
    f.z_hat = svd.matrixV().leftCols(K);
    f.x_hat = svd.matrixU().leftCols(K) * f.singular_values.asDiagonal();
    for (int k = 0; k < K; ++k) {
        Eigen::Index arg = 0;
        f.z_hat.col(k).cwiseAbs().maxCoeff(&arg);
        if (f.z_hat(arg, k) < 0) {
            f.z_hat.col(k) *= -1.0;
            f.x_hat.col(k) *= -1.0;
        }
    }
    return f;
}

Eigen::MatrixXd decode_lowrank(const LowRankFit& fit, const EmbeddingSet& latent) {
    if (latent.size() > 0 && latent.dim() != fit.z_hat.cols()) throw DimensionError("latent dimension mismatch");
    if (latent.size() == 0) return Eigen::MatrixXd(0, fit.z_hat.rows());
    return latent.rows * fit.z_hat.transpose();
}

Eigen::MatrixXd lowrank_generate(const LowRankFit& fit, const ScoreNet& net, const DiffusionSchedule& sched,
                                 std::size_t m_tilde, std::uint64_t seed, Stepper stepper) {
    if (net.dim() != fit.z_hat.cols()) throw DimensionError("score network dimension does not match K");
    return decode_lowrank(fit, sample(net, sched, m_tilde, seed, stepper));
}

}  // namespace hypergen
