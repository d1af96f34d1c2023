#include "tvcflm/errors.hpp"
#include "tvcflm/fit_result.hpp"

#include <string>

namespace tvcflm {

void summarize_support(FitResult& fit) {
    const Eigen::Index m1 = fit.surface.s_basis.num_basis();
    const Eigen::Index m2 = fit.surface.t_basis.num_basis();
    fit.active.clear();
    fit.truncation.assign(static_cast<std::size_t>(m2), 0);
    for (Eigen::Index l = 0; l < m2; ++l) {
        for (Eigen::Index k = 0; k < m1; ++k) {
            if (fit.b[l * m1 + k] != 0.0) {
                fit.active.push_back(l * m1 + k);
                fit.truncation[static_cast<std::size_t>(l)] = static_cast<int>(k + 1);
            }
        }
    }
}

double predict(const FitResult& fit, const FunctionalSample& sample) {
    const auto& s_basis = fit.surface.s_basis;
    if (sample.w.size() != s_basis.num_basis()) {
        throw InputError("predict: sample has " + std::to_string(sample.w.size()) +
                         " coefficients but the fit uses " + std::to_string(s_basis.num_basis()));
    }
    const Eigen::VectorXd centered =
        fit.w_mean.size() == sample.w.size() ? Eigen::VectorXd(sample.w - fit.w_mean) : sample.w;
    const Eigen::VectorXd z = build_design_row(centered, sample.t, s_basis.gram0(), fit.surface.t_basis);
    return z.dot(fit.b) + fit.y_mean;
}

}  // namespace tvcflm
