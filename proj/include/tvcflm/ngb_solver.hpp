#pragma once

#include "tvcflm/design.hpp"
#include "tvcflm/fit_result.hpp"

#include <Eigen/Dense>

#include <optional>

namespace tvcflm {

/// Tuning parameters of the nested group bridge fit.
///
/// Groups are the suffixes A_k = {k, ..., m1} of each column of B. `weights`
/// holds the adaptive weights c_kl (m1 x m2, positive and finite).
struct PenaltyConfig {
    double kappa = 0.0;
    double tau = 1.0;
    double gamma = 0.5;
    Eigen::MatrixXd weights;
};

/// Floor applied to eta inside update_g; a group whose eta falls below it is dead.
inline constexpr double kEtaFloor = 1e-10;
/// Floor on the variance estimate.
inline constexpr double kSigma2Floor = 1e-12;

/// lambda = tau^(1-gamma) gamma^(-gamma) (1-gamma)^(gamma-1). Throws InputError unless
/// tau > 0 and 0 < gamma < 1.
double lambda_from_tau(double tau, double gamma);
double tau_from_lambda(double lambda, double gamma);

/// ||b_{A_k, l}||_1 for every (k, l): suffix sums of |b| down each column.
Eigen::MatrixXd suffix_l1_norms(const Eigen::VectorXd& b, int m1, int m2);

/// Ridge start (Z^T Z + n kappa (I kron V) + n ridge I)^{-1} Z^T y.
Eigen::VectorXd ridge_init(const DesignMatrix& design, double kappa, double ridge);

/// Default ridge for ridge_init: 1e-3 times the mean diagonal of Z^T Z / n.
double default_init_ridge(const DesignMatrix& design);

/// c_kl = |A_k|^(1-gamma) / ||b_check_{A_k,l}||_1^gamma, with the norm clamped at 1e-10.
Eigen::MatrixXd adaptive_weights(const Eigen::VectorXd& b_check, int m1, int m2, double gamma);

/// eta_kl = c_kl ((1-gamma)/(tau gamma))^gamma ||b_{A_k,l}||_1^gamma.
Eigen::MatrixXd update_eta(const Eigen::VectorXd& b, const PenaltyConfig& config);

/// g_kl = sum_{j<=k} c_jl^(1/gamma) eta_jl^(1-1/gamma). A term with eta_jl < kEtaFloor
/// contributes at least 1/kEtaFloor so that the rest of the column stays pinned at zero.
Eigen::MatrixXd update_g(const Eigen::MatrixXd& eta, const PenaltyConfig& config);

/// W with W W^T = kron_v, from the eigendecomposition (eigenvalues < 1e-12 dropped).
Eigen::MatrixXd roughness_factor(const Eigen::MatrixXd& kron_v);

/// Least-squares form of the roughness-penalized fit:
/// ||y_aug - U b||^2 = ||y - Z b||^2 + n sigma2 kappa b^T (I kron V) b.
struct AugmentedSystem {
    Eigen::VectorXd y;  ///< (y; 0)
    Eigen::MatrixXd u;  ///< (Z; sqrt(n sigma2 kappa) W^T)
};

AugmentedSystem build_augmented(const DesignMatrix& design, const Eigen::MatrixXd& w_factor, double kappa,
                                double sigma2);

struct LassoOptions {
    double tolerance = 1e-7;  ///< max coordinate change in the original scale
    int max_sweeps = 10000;
};

struct LassoStats {
    int sweeps = 0;
    double max_change = 0.0;
};

/// Coordinate descent for
///   min (1/sigma2) ||y - U G b_tilde||^2 + sum |b_tilde|,  G = diag(1/(n g)),
/// returned in the original scale b = G b_tilde. Throws NumericalError after
/// max_sweeps without convergence.
Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& u, const Eigen::VectorXd& y, double sigma2, const Eigen::MatrixXd& g,
                         Eigen::Index n, const Eigen::VectorXd& warm_start, const LassoOptions& options = {},
                         LassoStats* stats = nullptr);

/// The same problem given U^T U and U^T y. `penalty` holds n g per coordinate.
Eigen::VectorXd lasso_cd_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& uty, double sigma2,
                              const Eigen::VectorXd& penalty, const Eigen::VectorXd& warm_start,
                              const LassoOptions& options = {}, LassoStats* stats = nullptr);

/// The lasso objective above written in the original scale:
/// (1/sigma2) ||y - U b||^2 + n sum g_j |b_j|.
double lasso_objective(const Eigen::MatrixXd& u, const Eigen::VectorXd& y, double sigma2, const Eigen::MatrixXd& g,
                       Eigen::Index n, const Eigen::VectorXd& b);

/// sigma2 = ||y_aug - U b||^2 / n, floored at kSigma2Floor.
double update_sigma(const Eigen::VectorXd& y_aug, const Eigen::MatrixXd& u_star, const Eigen::VectorXd& b,
                    Eigen::Index n);

/// n lambda sum_{k,l} c_kl ||b_{A_k,l}||_1^gamma with lambda = lambda_from_tau(tau, gamma).
double group_bridge_value(const Eigen::VectorXd& b, const PenaltyConfig& config, Eigen::Index n, int m1);

/// n sum c^(1/gamma) eta^(1-1/gamma) ||b_A||_1 + n tau sum eta, at a given eta.
double reformulated_penalty(const Eigen::VectorXd& b, const Eigen::MatrixXd& eta, const PenaltyConfig& config,
                            Eigen::Index n);

struct SolverOptions {
    double tolerance = 1e-6;  ///< relative l-infinity change of b between outer iterations
    int max_outer = 500;
    LassoOptions lasso{};
    /// Starting point; ridge_init(design, kappa, default_init_ridge(design)) when empty.
    std::optional<Eigen::VectorXd> initial;
};

/// Weights computed from the ridge start at the given kappa.
PenaltyConfig make_penalty(const DesignMatrix& design, double kappa, double tau, double gamma,
                           const Eigen::VectorXd& ridge_start);

/// Alternating estimator: eta, g, lasso step, variance update, repeated until the
/// relative change in b falls below the tolerance. tau == 0 reduces to fit_ridge.
/// Throws NumericalError when the variance diverges past 1e12.
FitResult fit_ngb(const DesignMatrix& design, const PenaltyConfig& config, const SolverOptions& options = {});

/// Roughness-only fit (no sparsity penalty): alternates
/// b = (Z^T Z + n sigma2 kappa (I kron V))^{-1} Z^T y with the variance update.
FitResult fit_ridge(const DesignMatrix& design, double kappa, const SolverOptions& options = {});

}  // namespace tvcflm
