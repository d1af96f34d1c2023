#include "tvcflm/ngb_solver.hpp"

#include "tvcflm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace tvcflm {

namespace {

constexpr double kNormClamp = 1e-10;
constexpr double kSigma2Ceiling = 1e12;

void check_gamma_open(double gamma, const char* where) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw InputError(std::string(where) + ": gamma must lie strictly between 0 and 1");
    }
}

void check_config(const PenaltyConfig& config, int m1, int m2) {
    check_gamma_open(config.gamma, "penalty");
    if (!(config.tau >= 0.0) || !std::isfinite(config.tau)) throw InputError("penalty: tau must be >= 0");
    if (!(config.kappa >= 0.0) || !std::isfinite(config.kappa)) throw InputError("penalty: kappa must be >= 0");
    if (config.weights.rows() != m1 || config.weights.cols() != m2) {
        throw InputError("penalty: weights must be " + std::to_string(m1) + "x" + std::to_string(m2));
    }
    if (!(config.weights.array() > 0.0).all() || !config.weights.allFinite()) {
        throw InputError("penalty: adaptive weights must be positive and finite");
    }
}

// Q + scale * (I kron V) without forming the Kronecker product.
void add_block_roughness(Eigen::MatrixXd& q, const Eigen::MatrixXd& v, int m2, double scale) {
    const Eigen::Index m1 = v.rows();
    for (int l = 0; l < m2; ++l) q.block(l * m1, l * m1, m1, m1) += scale * v;
}

double block_quadratic(const Eigen::VectorXd& b, const Eigen::MatrixXd& v, int m2) {
    const Eigen::Index m1 = v.rows();
    double total = 0.0;
    for (int l = 0; l < m2; ++l) {
        const auto seg = b.segment(l * m1, m1);
        total += seg.dot(v * seg);
    }
    return total;
}

Eigen::VectorXd solve_spd(Eigen::MatrixXd lhs, const Eigen::VectorXd& rhs) {
    Eigen::LLT<Eigen::MatrixXd> llt(lhs);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-15) {
        const double jitter = 1e-10 * std::max(lhs.diagonal().mean(), 1e-300);
        lhs.diagonal().array() += jitter;
        llt.compute(lhs);
        if (llt.info() != Eigen::Success) throw NumericalError("linear system is not positive definite");
    }
    return llt.solve(rhs);
}

double gaussian_loglik(double rss, double sigma2, Eigen::Index n) {
    const double nn = static_cast<double>(n);
    return -0.5 * nn * std::log(2.0 * std::numbers::pi * sigma2) - rss / (2.0 * sigma2);
}

FitResult make_result(const DesignMatrix& design, const Eigen::VectorXd& b, double sigma2) {
    FitResult fit;
    fit.b = b;
    fit.sigma2 = sigma2;
    fit.surface = CoefficientSurface{unvec(b, design.m1(), design.m2()), design.s_basis, design.t_basis};
    fit.w_mean = design.w_mean;
    fit.y_mean = design.y_mean;
    fit.loglik = gaussian_loglik((design.y - design.z * b).squaredNorm(), sigma2, design.n());
    summarize_support(fit);
    return fit;
}

bool small_relative_change(const Eigen::VectorXd& next, const Eigen::VectorXd& prev, double tol) {
    const double scale = std::max(prev.cwiseAbs().maxCoeff(), 1e-10);
    return (next - prev).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace

double lambda_from_tau(double tau, double gamma) {
    check_gamma_open(gamma, "lambda_from_tau");
    if (!(tau > 0.0)) throw InputError("lambda_from_tau: tau must be positive");
    return std::pow(tau, 1.0 - gamma) * std::pow(gamma, -gamma) * std::pow(1.0 - gamma, gamma - 1.0);
}

double tau_from_lambda(double lambda, double gamma) {
    check_gamma_open(gamma, "tau_from_lambda");
    if (!(lambda > 0.0)) throw InputError("tau_from_lambda: lambda must be positive");
    const double scale = std::pow(gamma, -gamma) * std::pow(1.0 - gamma, gamma - 1.0);
    return std::pow(lambda / scale, 1.0 / (1.0 - gamma));
}

Eigen::MatrixXd suffix_l1_norms(const Eigen::VectorXd& b, int m1, int m2) {
    if (b.size() != static_cast<Eigen::Index>(m1) * m2) throw InputError("suffix_l1_norms: size mismatch");
    Eigen::MatrixXd norms(m1, m2);
    for (int l = 0; l < m2; ++l) {
        double acc = 0.0;
        for (int k = m1 - 1; k >= 0; --k) {
            acc += std::abs(b[static_cast<Eigen::Index>(l) * m1 + k]);
            norms(k, l) = acc;
        }
    }
    return norms;
}

double default_init_ridge(const DesignMatrix& design) {
    const double n = static_cast<double>(design.n());
    const double mean_diag = design.z.colwise().squaredNorm().mean() / n;
    return 1e-3 * std::max(mean_diag, 1e-300);
}

Eigen::VectorXd ridge_init(const DesignMatrix& design, double kappa, double ridge) {
    if (!(ridge > 0.0)) throw InputError("ridge_init: ridge must be positive");
    if (!(kappa >= 0.0)) throw InputError("ridge_init: kappa must be >= 0");
    const double n = static_cast<double>(design.n());
    Eigen::MatrixXd lhs = design.z.transpose() * design.z;
    add_block_roughness(lhs, design.s_basis.gram2(), design.m2(), n * kappa);
    lhs.diagonal().array() += n * ridge;
    return solve_spd(std::move(lhs), design.z.transpose() * design.y);
}

Eigen::MatrixXd adaptive_weights(const Eigen::VectorXd& b_check, int m1, int m2, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InputError("adaptive_weights: gamma must lie in (0, 1]");
    const Eigen::MatrixXd norms = suffix_l1_norms(b_check, m1, m2);
    Eigen::MatrixXd c(m1, m2);
    for (int l = 0; l < m2; ++l) {
        for (int k = 0; k < m1; ++k) {
            const double group_size = static_cast<double>(m1 - k);
            c(k, l) = std::pow(group_size, 1.0 - gamma) / std::pow(std::max(norms(k, l), kNormClamp), gamma);
        }
    }
    return c;
}

Eigen::MatrixXd update_eta(const Eigen::VectorXd& b, const PenaltyConfig& config) {
    check_gamma_open(config.gamma, "update_eta");
    if (!(config.tau > 0.0)) throw InputError("update_eta: tau must be positive");
    const auto m1 = static_cast<int>(config.weights.rows());
    const auto m2 = static_cast<int>(config.weights.cols());
    const Eigen::MatrixXd norms = suffix_l1_norms(b, m1, m2);
    const double gamma = config.gamma;
    const double scale = std::pow((1.0 - gamma) / (config.tau * gamma), gamma);
    Eigen::MatrixXd eta(m1, m2);
    for (int l = 0; l < m2; ++l) {
        for (int k = 0; k < m1; ++k) {
            eta(k, l) = norms(k, l) == 0.0 ? 0.0 : config.weights(k, l) * scale * std::pow(norms(k, l), gamma);
        }
    }
    return eta;
}

Eigen::MatrixXd update_g(const Eigen::MatrixXd& eta, const PenaltyConfig& config) {
    check_gamma_open(config.gamma, "update_g");
    if (eta.rows() != config.weights.rows() || eta.cols() != config.weights.cols()) {
        throw InputError("update_g: eta and weights differ in shape");
    }
    const double inv_gamma = 1.0 / config.gamma;
    Eigen::MatrixXd g(eta.rows(), eta.cols());
    for (Eigen::Index l = 0; l < eta.cols(); ++l) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < eta.rows(); ++k) {
            const double term = std::pow(config.weights(k, l), inv_gamma) *
                                std::pow(std::max(eta(k, l), kEtaFloor), 1.0 - inv_gamma);
            acc += eta(k, l) < kEtaFloor ? std::max(term, 1.0 / kEtaFloor) : term;
            g(k, l) = acc;
        }
    }
    return g;
}

Eigen::MatrixXd roughness_factor(const Eigen::MatrixXd& kron_v) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kron_v);
    if (eig.info() != Eigen::Success) throw NumericalError("roughness_factor: eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] >= 1e-12) keep.push_back(i);
    }
    Eigen::MatrixXd w(kron_v.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        w.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(keep[j]) * std::sqrt(values[keep[j]]);
    }
    return w;
}

AugmentedSystem build_augmented(const DesignMatrix& design, const Eigen::MatrixXd& w_factor, double kappa,
                                double sigma2) {
    if (!(kappa >= 0.0)) throw InputError("build_augmented: kappa must be >= 0");
    if (w_factor.rows() != design.p()) throw InputError("build_augmented: roughness factor has wrong row count");
    const Eigen::Index n = design.n();
    const Eigen::Index p = design.p();
    AugmentedSystem aug;
    aug.y = Eigen::VectorXd::Zero(n + p);
    aug.y.head(n) = design.y;
    // W^T has rank(V) rows; pad to p rows so the augmented block is always p x p.
    aug.u = Eigen::MatrixXd::Zero(n + p, p);
    aug.u.topRows(n) = design.z;
    const double scale = std::sqrt(static_cast<double>(n) * sigma2 * kappa);
    aug.u.block(n, 0, w_factor.cols(), p) = scale * w_factor.transpose();
    return aug;
}

Eigen::VectorXd lasso_cd_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& uty, double sigma2,
                              const Eigen::VectorXd& penalty, const Eigen::VectorXd& warm_start,
                              const LassoOptions& options, LassoStats* stats) {
    const Eigen::Index p = gram.rows();
    if (gram.cols() != p || uty.size() != p || penalty.size() != p || warm_start.size() != p) {
        throw InputError("lasso_cd: dimension mismatch");
    }
    if (!(sigma2 > 0.0)) throw InputError("lasso_cd: sigma2 must be positive");
    if (!penalty.allFinite() || !(penalty.array() >= 0.0).all()) {
        throw InputError("lasso_cd: penalty weights must be finite and nonnegative");
    }

    // Coordinate minimizer of (1/sigma2)(b^T Q b - 2 q^T b) + sum pen_j |b_j|:
    //   b_j = S(q_j - (Qb)_j + Q_jj b_j, sigma2 pen_j / 2) / Q_jj.
    Eigen::VectorXd b = warm_start;
    Eigen::VectorXd qb = gram * b;
    const Eigen::VectorXd threshold = 0.5 * sigma2 * penalty;

    auto update = [&](Eigen::Index j) {
        const double qjj = gram(j, j);
        double next = 0.0;
        if (qjj > 0.0) {
            const double rho = uty[j] - qb[j] + qjj * b[j];
            const double mag = std::abs(rho) - threshold[j];
            next = mag > 0.0 ? std::copysign(mag, rho) / qjj : 0.0;
        }
        const double delta = next - b[j];
        if (delta != 0.0) {
            qb += delta * gram.col(j);
            b[j] = next;
        }
        return std::abs(delta);
    };

    // Objective restricted to the current sign pattern is a convex quadratic. After each
    // sweep, jump toward that face's minimizer: first the full step projected onto the
    // orthant, and if that does not decrease the objective, an exact line search.
    auto objective = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& qv) {
        return v.dot(qv) - 2.0 * uty.dot(v) + 2.0 * threshold.cwiseProduct(v.cwiseAbs()).sum();
    };
    Eigen::MatrixXd q_aa;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd trial(p);
    Eigen::VectorXd trial_qb(p);
    auto face_step = [&](const std::vector<Eigen::Index>& face) {
        const auto a = static_cast<Eigen::Index>(face.size());
        q_aa.resize(a, a);
        Eigen::VectorXd rhs(a);
        Eigen::VectorXd cur(a);
        for (Eigen::Index i = 0; i < a; ++i) {
            const Eigen::Index fi = face[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < a; ++j) q_aa(i, j) = gram(fi, face[static_cast<std::size_t>(j)]);
            cur[i] = b[fi];
            rhs[i] = uty[fi] - std::copysign(threshold[fi], b[fi]);
        }
        llt.compute(q_aa);
        if (llt.info() != Eigen::Success) return;
        const Eigen::VectorXd dir = llt.solve(rhs) - cur;
        if (!dir.allFinite()) return;

        const double current = objective(b, qb);
        trial = b;
        for (Eigen::Index i = 0; i < a; ++i) {
            const double v = cur[i] + dir[i];
            trial[face[static_cast<std::size_t>(i)]] = v * cur[i] > 0.0 ? v : 0.0;
        }
        trial_qb.noalias() = gram * trial;
        if (objective(trial, trial_qb) < current) {
            b.swap(trial);
            qb.swap(trial_qb);
            return;
        }

        // Exact line search: the objective along dir is convex and piecewise quadratic,
        // with breakpoints where coefficients cross zero.
        const double curvature = dir.dot(q_aa * dir);
        if (!(curvature > 0.0)) return;
        double slope = 0.0;
        std::vector<std::pair<double, Eigen::Index>> crossings;
        for (Eigen::Index i = 0; i < a; ++i) {
            const Eigen::Index fi = face[static_cast<std::size_t>(i)];
            slope += (qb[fi] - uty[fi] + std::copysign(threshold[fi], cur[i])) * dir[i];
            if (cur[i] * dir[i] < 0.0) crossings.emplace_back(-cur[i] / dir[i], i);
        }
        std::sort(crossings.begin(), crossings.end());
        // f'(alpha)/2 = slope + alpha * curvature, with slope jumping by 2 th |d| at each crossing.
        double alpha = 0.0;
        std::size_t passed = 0;
        while (true) {
            const double root = -slope / curvature;
            const double next = passed < crossings.size() ? crossings[passed].first : root;
            if (root <= next) {
                alpha = std::max(alpha, root);
                break;
            }
            alpha = next;
            const Eigen::Index i = crossings[passed].second;
            slope += 2.0 * threshold[face[static_cast<std::size_t>(i)]] * std::abs(dir[i]);
            ++passed;
            if (slope + alpha * curvature >= 0.0) break;
        }
        if (!(alpha > 0.0)) return;
        for (Eigen::Index i = 0; i < a; ++i) b[face[static_cast<std::size_t>(i)]] = cur[i] + alpha * dir[i];
        for (std::size_t c = 0; c < passed; ++c) {
            if (crossings[c].first == alpha) b[face[static_cast<std::size_t>(crossings[c].second)]] = 0.0;
        }
        qb.noalias() = gram * b;
    };

    int sweeps = 0;
    std::vector<Eigen::Index> face;
    face.reserve(static_cast<std::size_t>(p));
    while (true) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
        ++sweeps;
        if (stats != nullptr) stats->max_change = max_change;
        if (max_change < options.tolerance) break;
        if (sweeps >= options.max_sweeps) {
            std::ostringstream msg;
            msg << "lasso_cd: no convergence after " << sweeps << " sweeps (max change " << max_change
                << ", tolerance " << options.tolerance << ", sigma2 " << sigma2 << ")";
            throw NumericalError(msg.str());
        }
        face.clear();
        for (Eigen::Index j = 0; j < p; ++j) {
            if (b[j] != 0.0) face.push_back(j);
        }
        if (!face.empty()) face_step(face);
    }
    if (stats != nullptr) stats->sweeps = sweeps;
    return b;
}

Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& u, const Eigen::VectorXd& y, double sigma2, const Eigen::MatrixXd& g,
                         Eigen::Index n, const Eigen::VectorXd& warm_start, const LassoOptions& options,
                         LassoStats* stats) {
    if (u.rows() != y.size()) throw InputError("lasso_cd: U and y differ in row count");
    if (g.size() != u.cols()) throw InputError("lasso_cd: g must have one entry per column of U");
    if (!(g.array() > 0.0).all()) throw InputError("lasso_cd: g must be positive");
    const Eigen::VectorXd penalty = static_cast<double>(n) * Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    return lasso_cd_gram(u.transpose() * u, u.transpose() * y, sigma2, penalty, warm_start, options, stats);
}

double lasso_objective(const Eigen::MatrixXd& u, const Eigen::VectorXd& y, double sigma2, const Eigen::MatrixXd& g,
                       Eigen::Index n, const Eigen::VectorXd& b) {
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), g.size());
    return (y - u * b).squaredNorm() / sigma2 + static_cast<double>(n) * gv.dot(b.cwiseAbs());
}

double update_sigma(const Eigen::VectorXd& y_aug, const Eigen::MatrixXd& u_star, const Eigen::VectorXd& b,
                    Eigen::Index n) {
    if (n < 1) throw InputError("update_sigma: n must be >= 1");
    return std::max((y_aug - u_star * b).squaredNorm() / static_cast<double>(n), kSigma2Floor);
}

double group_bridge_value(const Eigen::VectorXd& b, const PenaltyConfig& config, Eigen::Index n, int m1) {
    const int m2 = static_cast<int>(b.size() / m1);
    if (config.weights.rows() != m1 || config.weights.cols() != m2) {
        throw InputError("group_bridge_value: weights shape mismatch");
    }
    const double lambda = lambda_from_tau(config.tau, config.gamma);
    const Eigen::MatrixXd norms = suffix_l1_norms(b, m1, m2);
    double total = 0.0;
    for (int l = 0; l < m2; ++l) {
        for (int k = 0; k < m1; ++k) total += config.weights(k, l) * std::pow(norms(k, l), config.gamma);
    }
    return static_cast<double>(n) * lambda * total;
}

double reformulated_penalty(const Eigen::VectorXd& b, const Eigen::MatrixXd& eta, const PenaltyConfig& config,
                            Eigen::Index n) {
    const auto m1 = static_cast<int>(config.weights.rows());
    const auto m2 = static_cast<int>(config.weights.cols());
    const Eigen::MatrixXd norms = suffix_l1_norms(b, m1, m2);
    const double inv_gamma = 1.0 / config.gamma;
    double total = 0.0;
    for (int l = 0; l < m2; ++l) {
        for (int k = 0; k < m1; ++k) {
            if (norms(k, l) > 0.0) {
                total += std::pow(config.weights(k, l), inv_gamma) * std::pow(eta(k, l), 1.0 - inv_gamma) * norms(k, l);
            }
            total += config.tau * eta(k, l);
        }
    }
    return static_cast<double>(n) * total;
}

PenaltyConfig make_penalty(const DesignMatrix& design, double kappa, double tau, double gamma,
                           const Eigen::VectorXd& ridge_start) {
    PenaltyConfig config;
    config.kappa = kappa;
    config.tau = tau;
    config.gamma = gamma;
    config.weights = adaptive_weights(ridge_start, design.m1(), design.m2(), gamma);
    return config;
}

FitResult fit_ridge(const DesignMatrix& design, double kappa, const SolverOptions& options) {
    if (!(kappa >= 0.0)) throw InputError("fit_ridge: kappa must be >= 0");
    const Eigen::Index n = design.n();
    const double nn = static_cast<double>(n);
    const Eigen::MatrixXd& v = design.s_basis.gram2();
    const Eigen::MatrixXd ztz = design.z.transpose() * design.z;
    const Eigen::VectorXd zty = design.z.transpose() * design.y;

    Eigen::VectorXd b = options.initial.value_or(ridge_init(design, kappa, default_init_ridge(design)));
    double sigma2 = std::max((design.y - design.z * b).squaredNorm() / nn, kSigma2Floor);

    FitResult fit;
    int iter = 0;
    bool converged = false;
    std::vector<double> history;
    while (iter < options.max_outer) {
        Eigen::MatrixXd lhs = ztz;
        add_block_roughness(lhs, v, design.m2(), nn * sigma2 * kappa);
        const Eigen::VectorXd next = solve_spd(std::move(lhs), zty);
        const double rough = block_quadratic(next, v, design.m2());
        const double rss = (design.y - design.z * next).squaredNorm();
        const double sigma2_next = std::max((rss + nn * sigma2 * kappa * rough) / nn, kSigma2Floor);
        if (!(sigma2_next <= kSigma2Ceiling)) throw NumericalError("fit_ridge: variance diverged");
        ++iter;
        history.push_back(-gaussian_loglik(rss, sigma2_next, n) + nn * kappa * rough);
        const bool done = small_relative_change(next, b, options.tolerance) &&
                          std::abs(sigma2_next - sigma2) <= options.tolerance * sigma2;
        b = next;
        sigma2 = sigma2_next;
        if (done) {
            converged = true;
            break;
        }
    }
    fit = make_result(design, b, sigma2);
    fit.kappa = kappa;
    fit.tau = 0.0;
    fit.lambda = 0.0;
    fit.iterations = iter;
    fit.converged = converged;
    fit.objective_history = std::move(history);
    return fit;
}

FitResult fit_ngb(const DesignMatrix& design, const PenaltyConfig& config, const SolverOptions& options) {
    const int m1 = design.m1();
    const int m2 = design.m2();
    check_config(config, m1, m2);
    if (config.tau == 0.0) {
        FitResult ridge = fit_ridge(design, config.kappa, options);
        ridge.gamma = config.gamma;
        return ridge;
    }

    const Eigen::Index n = design.n();
    const double nn = static_cast<double>(n);
    const double lambda = lambda_from_tau(config.tau, config.gamma);
    const Eigen::MatrixXd& v = design.s_basis.gram2();
    const Eigen::MatrixXd ztz = design.z.transpose() * design.z;
    const Eigen::VectorXd zty = design.z.transpose() * design.y;

    Eigen::VectorXd b =
        options.initial.value_or(ridge_init(design, config.kappa, default_init_ridge(design)));
    if (b.size() != design.p()) throw InputError("fit_ngb: initial value has wrong length");
    double sigma2 = std::max((design.y - design.z * b).squaredNorm() / nn, kSigma2Floor);

    auto objective = [&](const Eigen::VectorXd& coef, double s2) {
        const double rss = (design.y - design.z * coef).squaredNorm();
        return -gaussian_loglik(rss, s2, n) + nn * config.kappa * block_quadratic(coef, v, m2) +
               group_bridge_value(coef, config, n, m1);
    };

    std::vector<double> history;
    int increases = 0;
    int iter = 0;
    bool converged = false;
    while (iter < options.max_outer) {
        const Eigen::MatrixXd eta = update_eta(b, config);
        const Eigen::MatrixXd g = update_g(eta, config);
        const Eigen::VectorXd penalty = nn * Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());

        // U*^T U* = Z^T Z + n sigma2 kappa (I kron V); U*^T y_aug = Z^T y.
        Eigen::MatrixXd gram = ztz;
        add_block_roughness(gram, v, m2, nn * sigma2 * config.kappa);
        const Eigen::VectorXd next = lasso_cd_gram(gram, zty, sigma2, penalty, b, options.lasso);

        const double rss = (design.y - design.z * next).squaredNorm();
        const double rough = block_quadratic(next, v, m2);
        const double sigma2_next = std::max((rss + nn * sigma2 * config.kappa * rough) / nn, kSigma2Floor);
        if (!(sigma2_next <= kSigma2Ceiling)) {
            throw NumericalError("fit_ngb: variance diverged (sigma2 = " + std::to_string(sigma2_next) + ")");
        }
        ++iter;

        const double obj = objective(next, sigma2_next);
        if (!history.empty() && obj > history.back() + 1e-8 * (1.0 + std::abs(history.back()))) ++increases;
        history.push_back(obj);

        const bool done = small_relative_change(next, b, options.tolerance);
        b = next;
        sigma2 = sigma2_next;
        if (done) {
            converged = true;
            break;
        }
    }

    FitResult fit = make_result(design, b, sigma2);
    fit.kappa = config.kappa;
    fit.tau = config.tau;
    fit.lambda = lambda;
    fit.gamma = config.gamma;
    fit.iterations = iter;
    fit.converged = converged;
    fit.objective_history = std::move(history);
    fit.objective_increases = increases;
    return fit;
}

}  // namespace tvcflm
