#include "hypergen/mle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "hypergen/csv.hpp"
#include "hypergen/error.hpp"
#include "hypergen/rng.hpp"

namespace hypergen {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Box-constrained logistic regression
//   maximize  Σ_k y_k a_k - log(1 + e^{a_k}),   a = F w + offset,
//   subject to lo <= w <= hi,
// by projected (Newton-scaled) gradient ascent with Armijo backtracking.
// Every accepted step strictly increases the objective.
class BoxLogistic {
public:
    BoxLogistic(const MatrixXd& features, const VectorXd& offset, const MleConfig& cfg)
        : f_(features), offset_(offset), cfg_(cfg) {}

    double value(const VectorXd& y, const VectorXd& w) const {
        const VectorXd a = f_ * w + offset_;
        double v = 0.0;
        for (Index k = 0; k < a.size(); ++k) v += y(k) * a(k) - log1pexp(a(k));
        return v;
    }

    // Runs up to `iters` accepted steps, modifying w in place.
    void ascend(const VectorXd& y, VectorXd& w, const VectorXd& lo, const VectorXd& hi, int iters) const {
        const Index p = w.size();
        double fw = value(y, w);
        for (int it = 0; it < iters; ++it) {
            const VectorXd a = f_ * w + offset_;
            VectorXd prob(a.size()), weight(a.size());
            for (Index k = 0; k < a.size(); ++k) {
                prob(k) = sigmoid(a(k));
                weight(k) = prob(k) * (1.0 - prob(k));
            }
            const VectorXd g = f_.transpose() * (y - prob);

            // Coordinates pinned at a bound with the gradient pointing outward
            // are held fixed for this step.
            std::vector<Index> free;
            double pg = 0.0;
            for (Index k = 0; k < p; ++k) {
                const bool pinned = (w(k) <= lo(k) && g(k) < 0) || (w(k) >= hi(k) && g(k) > 0);
                if (!pinned) {
                    free.push_back(k);
                    pg = std::max(pg, std::abs(g(k)));
                }
            }
            if (free.empty() || pg < 1e-10) return;

            MatrixXd h = f_.transpose() * weight.asDiagonal() * f_;
            const auto nf = static_cast<Index>(free.size());
            MatrixXd hf(nf, nf);
            VectorXd gf(nf);
            for (Index r = 0; r < nf; ++r) {
                gf(r) = g(free[r]);
                for (Index c = 0; c < nf; ++c) hf(r, c) = h(free[r], free[c]);
            }
            hf.diagonal().array() += 1e-8 * (1.0 + hf.diagonal().cwiseAbs().maxCoeff());
            VectorXd newton = VectorXd::Zero(p);
            const VectorXd df = hf.ldlt().solve(gf);
            for (Index r = 0; r < nf; ++r) newton(free[r]) = df(r);

            VectorXd grad_dir = VectorXd::Zero(p);
            for (Index r = 0; r < nf; ++r) grad_dir(free[r]) = gf(r);
            const double lip = 0.25 * f_.squaredNorm() + 1e-12;

            bool accepted = false;
            for (const auto& [dir, t0] : {std::pair<const VectorXd*, double>{&newton, 1.0},
                                          std::pair<const VectorXd*, double>{&grad_dir, 4.0 / lip}}) {
                if (!dir->allFinite()) continue;
                double t = t0;
                for (int b = 0; b < cfg_.max_backtracks; ++b, t *= cfg_.backtrack) {
                    VectorXd cand = (w + t * *dir).cwiseMax(lo).cwiseMin(hi);
                    const double gain = g.dot(cand - w);
                    if (gain <= 0) continue;
                    const double fc = value(y, cand);
                    if (std::isfinite(fc) && fc >= fw + cfg_.armijo * gain && fc > fw) {
                        w = std::move(cand);
                        fw = fc;
                        accepted = true;
                        break;
                    }
                }
                if (accepted) break;
            }
            if (!accepted) return;
        }
    }

private:
    const MatrixXd& f_;
    const VectorXd& offset_;
    const MleConfig& cfg_;
};

MatrixXd symmetric_sqrt(const MatrixXd& s, bool inverse, const char* what) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    const VectorXd ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
        throw SingularityError(std::string(what) + " is rank deficient");
    }
    const VectorXd d = inverse ? VectorXd(ev.cwiseSqrt().cwiseInverse()) : VectorXd(ev.cwiseSqrt());
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

// Enforces the box and alpha-mean constraints in place.
void enforce_bounds(EmbeddingSet& x, NodeParams& p, double C, double C_prime, double c_mn) {
    x.rows = x.rows.cwiseMax(-C).cwiseMin(C);
    p.z = p.z.cwiseMax(-C).cwiseMin(C);
    const double lo = -c_mn, hi = -C_prime * c_mn;
    for (int round = 0; round < 50; ++round) {
        const double mean = p.alpha.mean();
        const double target = std::clamp(mean, lo, hi);
        p.alpha.array() += target - mean;
        const double centre = p.alpha.mean();
        const VectorXd clipped = p.alpha.cwiseMax(centre - C).cwiseMin(centre + C);
        const bool stable = (clipped - p.alpha).cwiseAbs().maxCoeff() == 0.0 && centre >= lo && centre <= hi;
        p.alpha = clipped;
        if (stable) break;
    }
}

}  // namespace

void MleConfig::validate() const {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (!(C > 0)) throw ConfigError("C must be > 0");
    if (!(C_prime > 0 && C_prime < 1)) throw ConfigError("C_prime must lie in (0,1)");
    if (!(C_dprime > 1)) throw ConfigError("C_dprime must be > 1");
    if (!(tol > 0)) throw ConfigError("tol must be > 0");
    if (max_outer_iters < 0 || inner_iters < 1) throw ConfigError("iteration counts must be positive");
    if (!(backtrack > 0 && backtrack < 1) || !(armijo > 0 && armijo < 1)) {
        throw ConfigError("backtracking constants must lie in (0,1)");
    }
}

MleConfig mle_config_from_json(const nlohmann::json& j) {
    MleConfig c;
    c.K = j.value("K", c.K);
    c.C = j.value("C", c.C);
    c.C_prime = j.value("C_prime", c.C_prime);
    c.C_dprime = j.value("C_dprime", c.C_dprime);
    c.max_outer_iters = j.value("max_outer_iters", c.max_outer_iters);
    c.tol = j.value("tol", c.tol);
    c.inner_iters = j.value("inner_iters", c.inner_iters);
    c.armijo = j.value("armijo", c.armijo);
    c.backtrack = j.value("backtrack", c.backtrack);
    c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

nlohmann::json to_json(const MleConfig& c) {
    return {{"K", c.K},
            {"C", c.C},
            {"C_prime", c.C_prime},
            {"C_dprime", c.C_dprime},
            {"max_outer_iters", c.max_outer_iters},
            {"tol", c.tol},
            {"inner_iters", c.inner_iters},
            {"armijo", c.armijo},
            {"backtrack", c.backtrack},
            {"max_backtracks", c.max_backtracks},
            {"seed", c.seed}};
}

double ConstraintResiduals::max() const {
    return std::max({gram_equality, gram_offdiag, x_mean, x_box, z_box, alpha_spread, alpha_mean});
}

nlohmann::json to_json(const ConstraintResiduals& r) {
    return {{"gram_equality", r.gram_equality}, {"gram_offdiag", r.gram_offdiag}, {"x_mean", r.x_mean},
            {"x_box", r.x_box},                 {"z_box", r.z_box},               {"alpha_spread", r.alpha_spread},
            {"alpha_mean", r.alpha_mean}};
}

double compute_Cmn(const Hypergraph& h, double C_dprime) {
    const double total = static_cast<double>(h.total_order());
    if (total <= 0) throw DegenerateInputError("hypergraph has no node incidences");
    const double density = total / (static_cast<double>(h.num_links()) * static_cast<double>(h.num_nodes()));
    return -C_dprime * std::log(density);
}

IdentifiedParams identifiability_projection(const EmbeddingSet& x, const NodeParams& params) {
    const Index m = x.size(), n = params.num_nodes(), K = x.dim();
    if (params.dim() != K) throw DimensionError("embedding dimension mismatch");
    if (m == 0 || n == 0) throw SingularityError("empty embedding set");

    const VectorXd mu = x.rows.colwise().mean().transpose();
    MatrixXd xc = x.rows.rowwise() - mu.transpose();
    const MatrixXd sx = xc.transpose() * xc / static_cast<double>(m);
    const MatrixXd sz = params.z.transpose() * params.z / static_cast<double>(n);
    const MatrixXd sz_half = symmetric_sqrt(sz, false, "node embedding Gram matrix");

    MatrixXd mmat = sz_half * sx * sz_half;
    mmat = 0.5 * (mmat + mmat.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(mmat);
    // Eigen sorts ascending; we need descending.
    VectorXd v = es.eigenvalues().reverse();
    MatrixXd gamma = es.eigenvectors().rowwise().reverse();
    if (!(v.minCoeff() > 1e-14 * std::max(1.0, v.maxCoeff()))) {
        throw SingularityError("hyperlink embedding covariance is rank deficient");
    }
    const MatrixXd g = sz_half * gamma * v.array().pow(-0.25).matrix().asDiagonal();
    const MatrixXd g_inv = g.inverse();

    IdentifiedParams out;
    out.params.alpha = params.alpha + params.z * mu;
    out.x.rows = xc * g;
    out.params.z = params.z * g_inv.transpose();

    for (Index k = 0; k < K; ++k) {
        Index arg = 0;
        out.params.z.col(k).cwiseAbs().maxCoeff(&arg);
        if (out.params.z(arg, k) < 0) {
            out.params.z.col(k) *= -1.0;
            out.x.rows.col(k) *= -1.0;
        }
    }
    return out;
}

ConstraintResiduals constraint_residuals(const EmbeddingSet& x, const NodeParams& p, double C, double C_prime,
                                         double c_mn) {
    ConstraintResiduals r;
    const MatrixXd gx = x.rows.transpose() * x.rows / static_cast<double>(x.size());
    const MatrixXd gz = p.z.transpose() * p.z / static_cast<double>(p.num_nodes());
    r.gram_equality = (gx - gz).cwiseAbs().maxCoeff();
    for (Index a = 0; a < gx.rows(); ++a) {
        for (Index b = 0; b < gx.cols(); ++b) {
            if (a != b) r.gram_offdiag = std::max({r.gram_offdiag, std::abs(gx(a, b)), std::abs(gz(a, b))});
        }
    }
    r.x_mean = x.rows.colwise().mean().cwiseAbs().maxCoeff();
    r.x_box = std::max(0.0, x.rows.cwiseAbs().maxCoeff() - C);
    r.z_box = std::max(0.0, p.z.cwiseAbs().maxCoeff() - C);
    const double abar = p.alpha.mean();
    r.alpha_spread = std::max(0.0, (p.alpha.array() - abar).abs().maxCoeff() - C);
    r.alpha_mean = std::max({0.0, -c_mn - abar, abar + C_prime * c_mn});
    return r;
}

MleFit fit(const Hypergraph& h, const MleConfig& cfg) {
    cfg.validate();
    const auto m = static_cast<Index>(h.num_links());
    const auto n = static_cast<Index>(h.num_nodes());
    const Index K = cfg.K;
    if (K > std::min(m, n)) throw ConfigError("K exceeds min(m, n)");
    const std::size_t total = h.total_order();
    if (total == 0) throw DegenerateInputError("hypergraph has no node incidences");
    if (total == static_cast<std::size_t>(m * n)) throw DegenerateInputError("hypergraph is complete");

    MleFit out;
    out.c_mn = compute_Cmn(h, cfg.C_dprime);
    const MatrixXd b = h.incidence();
    const VectorXd freq = b.colwise().mean().transpose();

    // Spectral warm start from the centred incidence matrix.
    EmbeddingSet x;
    NodeParams p;
    {
        const MatrixXd centred = b.rowwise() - freq.transpose();
        Eigen::BDCSVD<MatrixXd> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
        x.rows = std::sqrt(static_cast<double>(m)) * svd.matrixU().leftCols(K);
        p.z = svd.matrixV().leftCols(K) * svd.singularValues().head(K).asDiagonal() / std::sqrt(static_cast<double>(m));
        // Directions with no signal get a small deterministic perturbation so
        // the identifiability map is defined.
        Rng rng = stream_rng(cfg.seed, 0);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (Index k = 0; k < K; ++k) {
            if (svd.singularValues()(k) < 1e-8) {
                for (Index j = 0; j < m; ++j) x.rows(j, k) = nd(rng);
                for (Index i = 0; i < n; ++i) p.z(i, k) = 1e-3 * nd(rng);
            }
        }
        const double lo = 1.0 / (2.0 * static_cast<double>(m));
        p.alpha = freq.unaryExpr([lo](double f) {
            const double c = std::clamp(f, lo, 1.0 - lo);
            return std::log(c / (1.0 - c));
        });
    }
    auto postprocess = [&](EmbeddingSet& xs, NodeParams& ps) {
        // Alternate projection and clipping; clipping is rarely active, so this settles in a few rounds.
        for (int round = 0; round < 100; ++round) {
            auto id = identifiability_projection(xs, ps);
            xs = std::move(id.x);
            ps = std::move(id.params);
            const auto r = constraint_residuals(xs, ps, cfg.C, cfg.C_prime, out.c_mn);
            if (r.x_box == 0 && r.z_box == 0 && r.alpha_spread == 0 && r.alpha_mean == 0) return;
            enforce_bounds(xs, ps, cfg.C, cfg.C_prime, out.c_mn);
        }
    };
    postprocess(x, p);
    double loglik = log_likelihood(h, x, p);
    if (!std::isfinite(loglik)) throw NumericalError("non-finite log-likelihood at initialisation", 0);
    out.loglik_trace.push_back(loglik);
    out.ascent_trace.push_back(loglik);

    const VectorXd box_lo_x = VectorXd::Constant(K, -cfg.C), box_hi_x = VectorXd::Constant(K, cfg.C);
    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        EmbeddingSet prev_x = x;
        NodeParams prev_p = p;
        // (a) hyperlink embeddings with node parameters fixed
        {
            BoxLogistic solver(p.z, p.alpha, cfg);
            for (Index j = 0; j < m; ++j) {
                VectorXd w = x.rows.row(j).transpose();
                solver.ascend(b.row(j).transpose(), w, box_lo_x, box_hi_x, cfg.inner_iters);
                x.rows.row(j) = w.transpose();
            }
        }
        // (b) node embeddings and degree parameters with X fixed
        {
            MatrixXd feat(m, K + 1);
            feat.leftCols(K) = x.rows;
            feat.col(K).setOnes();
            const VectorXd zero = VectorXd::Zero(m);
            BoxLogistic solver(feat, zero, cfg);
            const double abar = p.alpha.mean();
            VectorXd lo(K + 1), hi(K + 1);
            lo.head(K).setConstant(-cfg.C);
            hi.head(K).setConstant(cfg.C);
            lo(K) = abar - cfg.C;
            hi(K) = abar + cfg.C;
            for (Index i = 0; i < n; ++i) {
                VectorXd w(K + 1);
                w.head(K) = p.z.row(i).transpose();
                w(K) = std::clamp(p.alpha(i), lo(K), hi(K));
                solver.ascend(b.col(i), w, lo, hi, cfg.inner_iters);
                p.z.row(i) = w.head(K).transpose();
                p.alpha(i) = w(K);
            }
        }
        const double ascent = log_likelihood(h, x, p);
        if (!std::isfinite(ascent)) throw NumericalError("non-finite log-likelihood in MLE", it);
        out.ascent_trace.push_back(ascent);

        postprocess(x, p);
        const double next = log_likelihood(h, x, p);
        if (!std::isfinite(next)) throw NumericalError("non-finite log-likelihood in MLE", it);
        if (next < loglik) {
            // Re-imposing the constraints cost more than the ascent gained:
            // keep the last feasible iterate and stop there.
            x = std::move(prev_x);
            p = std::move(prev_p);
            out.ascent_trace.pop_back();
            out.converged = true;
            break;
        }
        out.loglik_trace.push_back(next);
        out.iterations = it;
        const double rel = (next - loglik) / std::max(1.0, std::abs(loglik));
        loglik = next;
        if (std::abs(rel) < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.residuals = constraint_residuals(x, p, cfg.C, cfg.C_prime, out.c_mn);
    out.x_hat = std::move(x);
    out.params_hat = std::move(p);
    return out;
}

EstimationErrors estimation_errors(const MleFit& fit, const EmbeddingSet& true_x, const NodeParams& true_params) {
    auto truth = identifiability_projection(true_x, true_params);
    const Index K = truth.x.dim();
    if (fit.x_hat.dim() != K) throw DimensionError("fit and truth have different K");
    for (Index k = 0; k < K; ++k) {
        if (fit.params_hat.z.col(k).dot(truth.params.z.col(k)) < 0) {
            truth.params.z.col(k) *= -1.0;
            truth.x.rows.col(k) *= -1.0;
        }
    }
    EstimationErrors e;
    e.x = (fit.x_hat.rows - truth.x.rows).cwiseAbs().maxCoeff();
    e.z = (fit.params_hat.z - truth.params.z).cwiseAbs().maxCoeff();
    e.alpha = (fit.params_hat.alpha - truth.params.alpha).cwiseAbs().maxCoeff();
    return e;
}

void save_fit(const MleFit& fit, const MleConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_embeddings(fit.x_hat, dir / "X.csv");
    save_node_params(fit.params_hat, dir);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < fit.loglik_trace.size(); ++t) {
        rows.push_back({std::to_string(t), format_double(fit.loglik_trace[t]),
                        format_double(t < fit.ascent_trace.size() ? fit.ascent_trace[t] : fit.loglik_trace[t])});
    }
    write_table_csv(dir / "trace.csv", {"iteration", "loglik", "ascent_loglik"}, rows);
    nlohmann::json meta = {{"config", to_json(cfg)},
                           {"constraint_residuals", to_json(fit.residuals)},
                           {"C_mn", fit.c_mn},
                           {"iterations", fit.iterations},
                           {"converged", fit.converged}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

MleFit load_fit(const std::filesystem::path& dir) {
    MleFit f;
    f.x_hat = load_embeddings(dir / "X.csv");
    f.params_hat = load_node_params(dir);
    if (f.x_hat.dim() != f.params_hat.dim()) throw DimensionError("X.csv and Z.csv disagree on K");
    return f;
}

}  // namespace hypergen
