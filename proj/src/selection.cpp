#include "tvcflm/selection.hpp"

#include "tvcflm/errors.hpp"
#include "tvcflm/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

namespace tvcflm {

double effective_df(const Eigen::MatrixXd& z, std::span<const Eigen::Index> active, double kappa,
                    const Eigen::MatrixXd& w_factor, bool* jittered) {
    if (jittered != nullptr) *jittered = false;
    if (active.empty()) return 0.0;
    if (!(kappa >= 0.0)) throw InputError("effective_df: kappa must be >= 0");
    if (w_factor.rows() != z.cols()) throw InputError("effective_df: W must have one row per column of Z");
    const auto a = static_cast<Eigen::Index>(active.size());
    const double n = static_cast<double>(z.rows());

    Eigen::MatrixXd z_a(z.rows(), a);
    Eigen::MatrixXd w_a(a, w_factor.cols());
    for (Eigen::Index j = 0; j < a; ++j) {
        const Eigen::Index col = active[static_cast<std::size_t>(j)];
        if (col < 0 || col >= z.cols()) throw InputError("effective_df: active index out of range");
        z_a.col(j) = z.col(col);
        w_a.row(j) = w_factor.row(col);
    }
    const Eigen::MatrixXd ztz = z_a.transpose() * z_a;
    Eigen::MatrixXd inner = ztz + n * kappa * (w_a * w_a.transpose());

    // tr{Z_A M^{-1} Z_A^T} = tr{M^{-1} Z_A^T Z_A}.
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
        inner.diagonal().array() += 1e-10;
        llt.compute(inner);
        if (jittered != nullptr) *jittered = true;
        if (llt.info() != Eigen::Success) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(inner);
            return (ldlt.solve(ztz)).trace();
        }
    }
    return llt.solve(ztz).trace();
}

double bic(const FitResult& fit, const DesignMatrix& design, BicPenalty penalty) {
    const double rss = (design.y - design.z * fit.b).squaredNorm();
    const double n = static_cast<double>(design.n());
    const double sigma2 = fit.sigma2;
    const double loglik = -0.5 * n * std::log(2.0 * std::acos(-1.0) * sigma2) - rss / (2.0 * sigma2);
    const double factor = penalty == BicPenalty::Two ? 2.0 : std::log(n);
    return -2.0 * loglik + factor * fit.edf;
}

void score_fit(FitResult& fit, const DesignMatrix& design, const Eigen::MatrixXd& w_factor, BicPenalty penalty) {
    fit.edf = effective_df(design.z, fit.active, fit.kappa, w_factor);
    fit.bic = bic(fit, design, penalty);
}

std::vector<double> log_grid(double lo_exp, double hi_exp, int count) {
    if (count < 1) throw InputError("log_grid: count must be >= 1");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double e = count == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * i / (count - 1);
        grid.push_back(std::pow(10.0, e));
    }
    return grid;
}

SelectionResult grid_search(const DesignMatrix& design, const TuningGrid& grid, const GridOptions& options) {
    if (grid.kappas.empty() || grid.taus.empty()) throw InputError("grid_search: empty tuning grid");
    for (const double k : grid.kappas) {
        if (!(k >= 0.0) || !std::isfinite(k)) throw InputError("grid_search: kappa values must be finite and >= 0");
    }
    for (const double t : grid.taus) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("grid_search: tau values must be finite and >= 0");
    }

    const Eigen::MatrixXd w_factor = roughness_factor(roughness_kron(design.s_basis, design.m2()));
    const std::size_t nk = grid.kappas.size();
    const std::size_t nt = grid.taus.size();
    std::vector<SelectionRow> table(nk * nt);
    std::vector<std::optional<FitResult>> fits(nk * nt);

    // Cells sharing a kappa share the ridge start and adaptive weights.
    auto run_kappa = [&](std::size_t ki) {
        const double kappa = grid.kappas[ki];
        Eigen::VectorXd start;
        std::string start_error;
        try {
            start = ridge_init(design, kappa, default_init_ridge(design));
        } catch (const std::exception& e) {
            start_error = e.what();
        }
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const std::size_t idx = ki * nt + ti;
            SelectionRow& row = table[idx];
            row.kappa = kappa;
            row.tau = grid.taus[ti];
            row.lambda = row.tau > 0.0 ? lambda_from_tau(row.tau, grid.gamma) : 0.0;
            if (!start_error.empty()) {
                row.failed = true;
                row.error = start_error;
                continue;
            }
            try {
                SolverOptions solver = options.solver;
                solver.initial = start;
                FitResult fit = fit_ngb(design, make_penalty(design, kappa, row.tau, grid.gamma, start), solver);
                score_fit(fit, design, w_factor, options.bic_penalty);
                row.edf = fit.edf;
                row.loglik = fit.loglik;
                row.bic = fit.bic;
                row.n_active = static_cast<int>(fit.active.size());
                row.converged = fit.converged;
                if (!std::isfinite(fit.bic)) {
                    row.failed = true;
                    row.error = "non-finite BIC";
                } else {
                    fits[idx] = std::move(fit);
                }
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(nk)));
    if (threads == 1) {
        for (std::size_t ki = 0; ki < nk; ++ki) run_kappa(ki);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&]() {
                for (std::size_t ki = next++; ki < nk; ki = next++) run_kappa(ki);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!fits[i]) continue;
        if (!best) {
            best = i;
            continue;
        }
        const SelectionRow& cur = table[i];
        const SelectionRow& inc = table[*best];
        if (cur.bic < inc.bic || (cur.bic == inc.bic && cur.tau > inc.tau)) best = i;
    }
    if (!best) {
        std::string first_error = table.empty() ? "" : table.front().error;
        throw NumericalError("grid_search: every fit failed (first error: " + first_error + ")");
    }
    SelectionResult result;
    result.best = std::move(*fits[*best]);
    result.best_index = *best;
    result.table = std::move(table);
    return result;
}

std::string selection_table_csv(const std::vector<SelectionRow>& table) {
    std::ostringstream out;
    out << "kappa,tau,lambda,edf,loglik,bic,n_active,converged\n";
    for (const auto& row : table) {
        out << io::format_double(row.kappa) << ',' << io::format_double(row.tau) << ','
            << io::format_double(row.lambda) << ',';
        if (row.failed) {
            out << "NA,NA,NA,NA,false\n";
            continue;
        }
        out << io::format_double(row.edf) << ',' << io::format_double(row.loglik) << ','
            << io::format_double(row.bic) << ',' << row.n_active << ',' << (row.converged ? "true" : "false")
            << '\n';
    }
    return out.str();
}

}  // namespace tvcflm
