#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "hypergen/hypergraph.hpp"
#include "hypergen/linmodel.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hypergen_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline hypergen::Hypergraph random_hypergraph(std::size_t m, std::size_t n, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    hypergen::Hypergraph h(n);
    for (std::size_t j = 0; j < m; ++j) {
        hypergen::Hyperlink e;
        for (std::size_t i = 0; i < n; ++i)
            if (coin(rng)) e.push_back(static_cast<hypergen::NodeId>(i));
        h.add(std::move(e));
    }
    return h;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
}

inline hypergen::NodeParams random_params(Eigen::Index n, Eigen::Index K, std::uint64_t seed) {
    hypergen::NodeParams p;
    p.z = random_matrix(n, K, seed);
    p.alpha = random_matrix(n, 1, seed + 1).col(0).array() - 1.0;
    return p;
}

}  // namespace testing
