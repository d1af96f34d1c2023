#pragma once

// Helpers shared by the unit tests: dense quadrature grids and small synthetic problems.

#include "tvcflm/design.hpp"
#include "tvcflm/smoothing.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace test {

inline std::vector<double> dense_grid(double lo, double hi, int count) {
    std::vector<double> s(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) s[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    s.back() = hi;
    return s;
}

inline Eigen::VectorXd trapezoid_weights(const std::vector<double>& s) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double h = s[i + 1] - s[i];
        w[static_cast<Eigen::Index>(i)] += 0.5 * h;
        w[static_cast<Eigen::Index>(i + 1)] += 0.5 * h;
    }
    return w;
}

inline Eigen::VectorXd normal_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = z(rng);
    return v;
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = z(rng);
    }
    return m;
}

/// Centered samples with random coefficients and uniform t, responses generated from
/// `truth` (same bases as the design) plus Gaussian noise of sd `noise`.
inline tvcflm::DesignMatrix synthetic_design(const tvcflm::BasisSystem& s_basis, const tvcflm::BasisSystem& t_basis,
                                             const Eigen::MatrixXd& truth, int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(t_basis.domain().lo, t_basis.domain().hi);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<tvcflm::FunctionalSample> samples;
    const Eigen::VectorXd b = tvcflm::vec(truth);
    for (int i = 0; i < n; ++i) {
        tvcflm::FunctionalSample smp;
        smp.id = std::to_string(i);
        smp.w = normal_vector(s_basis.num_basis(), rng);
        smp.t = u(rng);
        smp.y = tvcflm::build_design_row(smp.w, smp.t, s_basis.gram0(), t_basis).dot(b) + noise * z(rng);
        samples.push_back(std::move(smp));
    }
    return tvcflm::build_design(tvcflm::center_dataset(samples), s_basis, t_basis);
}

}  // namespace test
