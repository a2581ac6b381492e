#include "hypergen/mlp.hpp"

#include <cmath>

#include "hypergen/error.hpp"
#include "hypergen/linmodel.hpp"
#include "hypergen/rng.hpp"

namespace hypergen {

double silu(double a) { return a * sigmoid(a); }

double silu_grad(double a) {
    const double s = sigmoid(a);
    return s * (1.0 + a * (1.0 - s));
}

Mlp::Mlp(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
    for (int w : widths_) {
        if (w < 1) throw ConfigError("layer widths must be positive");
    }
    Eigen::Index total = 0;
    for (std::size_t l = 0; l < layers(); ++l) {
        offsets_.push_back(total);
        total += static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
    }
    params_ = Eigen::VectorXd::Zero(total);
    Rng rng(splitmix64(seed));
    for (std::size_t l = 0; l < layers(); ++l) {
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(widths_[l])));
        const Eigen::Index nw = static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l];
        for (Eigen::Index k = 0; k < nw; ++k) params_(offsets_[l] + k) = nd(rng);
    }
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l], widths_[l + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
    Cache unused;
    return forward(input, unused);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache& cache) const {
    if (input.rows() != input_dim()) throw DimensionError("MLP input has wrong row count");
    cache.inputs.clear();
    cache.preacts.clear();
    Eigen::MatrixXd h = input;
    for (std::size_t l = 0; l < layers(); ++l) {
        cache.inputs.push_back(h);
        Eigen::MatrixXd a = weight(l) * h;
        a.colwise() += bias(l);
        if (l + 1 < layers()) {
            cache.preacts.push_back(a);
            h = a.unaryExpr([](double v) { return silu(v); });
        } else {
            h = std::move(a);
        }
    }
    return h;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_output) const {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    Eigen::MatrixXd delta = d_output;
    for (std::size_t l = layers(); l-- > 0;) {
        const Eigen::Index rows = widths_[l + 1], cols = widths_[l];
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], rows, cols);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + rows * cols, rows);
        gw.noalias() = delta * cache.inputs[l].transpose();
        gb = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = weight(l).transpose() * delta;
            delta = back.cwiseProduct(cache.preacts[l - 1].unaryExpr([](double v) { return silu_grad(v); }));
        }
    }
    return grad;
}

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace hypergen
