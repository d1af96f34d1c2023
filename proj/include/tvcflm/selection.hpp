#pragma once

#include "tvcflm/design.hpp"
#include "tvcflm/fit_result.hpp"
#include "tvcflm/ngb_solver.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace tvcflm {

/// tr{ Z_A (Z_A^T Z_A + n kappa W_A W_A^T)^{-1} Z_A^T } over the active columns A.
/// Returns 0 for an empty active set. A singular inner matrix gets a 1e-10 ridge.
double effective_df(const Eigen::MatrixXd& z, std::span<const Eigen::Index> active, double kappa,
                    const Eigen::MatrixXd& w_factor, bool* jittered = nullptr);

enum class BicPenalty { Two, LogN };

/// -2 loglik(theta_hat) + c * edf with c = 2 (default) or log n.
double bic(const FitResult& fit, const DesignMatrix& design, BicPenalty penalty = BicPenalty::Two);

/// Fill fit.edf and fit.bic.
void score_fit(FitResult& fit, const DesignMatrix& design, const Eigen::MatrixXd& w_factor,
               BicPenalty penalty = BicPenalty::Two);

/// log10-spaced values 10^lo, ..., 10^hi with `count` points.
std::vector<double> log_grid(double lo_exp, double hi_exp, int count);

struct TuningGrid {
    std::vector<double> kappas = log_grid(-8.0, 0.0, 9);
    std::vector<double> taus = log_grid(-6.0, 1.0, 15);
    double gamma = 0.5;
};

struct SelectionRow {
    double kappa = 0.0;
    double tau = 0.0;
    double lambda = 0.0;
    double edf = 0.0;
    double loglik = 0.0;
    double bic = 0.0;
    int n_active = 0;
    bool converged = false;
    bool failed = false;
    std::string error;
};

struct SelectionResult {
    FitResult best;
    std::size_t best_index = 0;
    std::vector<SelectionRow> table;  ///< kappa-major, tau-minor, in grid order
};

struct GridOptions {
    SolverOptions solver{};
    BicPenalty bic_penalty = BicPenalty::Two;
    unsigned threads = 1;
};

/// Fit every (kappa, tau) cell and keep the BIC minimizer (ties go to the larger tau).
/// tau == 0 cells are roughness-only fits. Throws NumericalError when every cell fails.
SelectionResult grid_search(const DesignMatrix& design, const TuningGrid& grid, const GridOptions& options = {});

/// Write the table as CSV: kappa,tau,lambda,edf,loglik,bic,n_active,converged.
std::string selection_table_csv(const std::vector<SelectionRow>& table);

}  // namespace tvcflm
