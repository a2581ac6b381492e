#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace hypergen {

/// Fully connected network with SiLU hidden activations and a linear output
/// layer. Batches are column-major: one sample per column.
///
/// All weights live in one flat vector (layer by layer: W column-major, then
/// b), which keeps the optimiser and finite-difference checks trivial.
class Mlp {
public:
    Mlp() = default;
    /// widths = {input, hidden..., output}; weights ~ N(0, 1/fan_in), biases 0.
    Mlp(std::vector<int> widths, std::uint64_t seed);

    const std::vector<int>& widths() const noexcept { return widths_; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    Eigen::Index num_params() const noexcept { return params_.size(); }

    Eigen::VectorXd& params() noexcept { return params_; }
    const Eigen::VectorXd& params() const noexcept { return params_; }

    struct Cache {
        std::vector<Eigen::MatrixXd> inputs;       // input of each layer
        std::vector<Eigen::MatrixXd> preacts;      // pre-activation of hidden layers
    };

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;

    /// Gradient of a scalar loss w.r.t. params, given dLoss/dOutput.
    Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& d_output) const;

private:
    std::vector<int> widths_;
    std::vector<Eigen::Index> offsets_;  // start of W_l in params_
    Eigen::VectorXd params_;

    std::size_t layers() const { return widths_.size() - 1; }
    Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;
};

double silu(double a);
double silu_grad(double a);

/// Adaptive-moment optimiser over a flat parameter vector (ascent on -loss).
class Adam {
public:
    Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    Eigen::VectorXd m_, v_;
};

}  // namespace hypergen
