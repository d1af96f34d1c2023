#pragma once

#include "tvcflm/basis.hpp"
#include "tvcflm/smoothing.hpp"

#include <Eigen/Dense>

#include <span>

namespace tvcflm {

/// beta(s, t) = phi(s)^T B psi(t) with B of size m1 x m2.
struct CoefficientSurface {
    Eigen::MatrixXd coefficients;
    BasisSystem s_basis;
    BasisSystem t_basis;

    [[nodiscard]] double operator()(double s, double t) const;
};

/// vec(B): columns stacked, so B(k, l) sits at l * m1 + k.
Eigen::VectorXd vec(const Eigen::MatrixXd& b);
Eigen::MatrixXd unvec(const Eigen::VectorXd& b, Eigen::Index rows, Eigen::Index cols);

/// Throws InputError when (s, t) lies outside either domain.
double eval_surface(const CoefficientSurface& surface, double s, double t);

/// Surface values on a grid: rows follow s_points, columns follow t_points.
Eigen::MatrixXd eval_surface_grid(const CoefficientSurface& surface, std::span<const double> s_points,
                                  std::span<const double> t_points);

/// z = (psi(t)^T kron w^T Phi)^T, with Phi the s-basis Gram matrix.
Eigen::VectorXd build_design_row(const Eigen::VectorXd& w, double t, const Eigen::MatrixXd& phi_gram,
                                 const BasisSystem& t_basis);

/// The vectorized regression problem y = Z b + e built from centered samples.
struct DesignMatrix {
    Eigen::MatrixXd z;  ///< n x (m1 * m2)
    Eigen::VectorXd y;
    BasisSystem s_basis;
    BasisSystem t_basis;
    Eigen::VectorXd w_mean;  ///< centering offsets carried to predictions
    double y_mean = 0.0;
    double sigma2 = 1.0;

    [[nodiscard]] Eigen::Index n() const noexcept { return z.rows(); }
    [[nodiscard]] int m1() const noexcept { return s_basis.num_basis(); }
    [[nodiscard]] int m2() const noexcept { return t_basis.num_basis(); }
    [[nodiscard]] Eigen::Index p() const noexcept { return z.cols(); }
};

DesignMatrix build_design(const CenteredData& data, const BasisSystem& s_basis, const BasisSystem& t_basis);

/// Block-diagonal roughness matrix I_{m2} kron V over vec(B).
Eigen::MatrixXd roughness_kron(const BasisSystem& s_basis, int m2);

}  // namespace tvcflm
