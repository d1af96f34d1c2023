#pragma once

#include "tvcflm/design.hpp"
#include "tvcflm/smoothing.hpp"

#include <Eigen/Dense>

#include <vector>

namespace tvcflm {

/// Outcome of one penalized fit at fixed tuning parameters.
struct FitResult {
    CoefficientSurface surface;
    Eigen::VectorXd b;  ///< vec(B)
    double sigma2 = 0.0;

    /// 0-based positions in b with nonzero coefficients.
    std::vector<Eigen::Index> active;
    /// Per t-basis column: largest 1-based s-index with a nonzero coefficient (0 if the column is zero).
    std::vector<int> truncation;

    double edf = 0.0;
    double loglik = 0.0;
    double bic = 0.0;

    double kappa = 0.0;
    double tau = 0.0;
    double lambda = 0.0;
    double gamma = 0.5;

    int iterations = 0;
    bool converged = false;
    /// Penalized negative log-likelihood after each outer iteration.
    std::vector<double> objective_history;
    /// Number of outer iterations where the monitored objective rose by more than 1e-8 (relative).
    int objective_increases = 0;

    Eigen::VectorXd w_mean;
    double y_mean = 0.0;
};

/// Recompute active set and truncation points from b.
void summarize_support(FitResult& fit);

/// y-hat = z^T b + y_mean, with z built from the de-meaned coefficient vector
/// of an uncentered sample. Throws InputError when the sample's basis size differs.
double predict(const FitResult& fit, const FunctionalSample& sample);

}  // namespace tvcflm
