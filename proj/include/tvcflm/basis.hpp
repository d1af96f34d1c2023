#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace tvcflm {

/// Closed real interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double length() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gauss_legendre(int num_nodes);

/// B-spline basis on a closed interval with clamped (order-fold) boundary knots
/// and equispaced interior knots.
///
/// The Gram matrices are computed once at construction by composite
/// Gauss-Legendre quadrature with `order` nodes per knot interval, which is
/// exact for products of two splines of this order.
class BasisSystem {
public:
    BasisSystem() = default;

    /// Throws InputError when num_basis < order, order is outside [1, 8], or the domain is empty/reversed.
    BasisSystem(Interval domain, int num_basis, int order);

    [[nodiscard]] const Interval& domain() const noexcept { return domain_; }
    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] int degree() const noexcept { return order_ - 1; }
    [[nodiscard]] int num_basis() const noexcept { return num_basis_; }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

    /// Phi = integral of phi(s) phi(s)^T over the domain.
    [[nodiscard]] const Eigen::MatrixXd& gram0() const noexcept { return gram0_; }
    /// V = integral of phi''(s) phi''(s)^T over the domain (zero for order <= 2).
    [[nodiscard]] const Eigen::MatrixXd& gram2() const noexcept { return gram2_; }

    /// Support [knot_k, knot_{k+order}] of basis function k (0-based).
    [[nodiscard]] std::pair<double, double> support(int k) const;

    /// Distinct knot values (the breakpoints of the piecewise polynomials).
    [[nodiscard]] std::vector<double> breakpoints() const;

    /// All m basis values (or their deriv-th derivatives) at s.
    /// The right endpoint is evaluated as a left limit. Throws InputError for
    /// s outside the domain or deriv >= order.
    [[nodiscard]] Eigen::VectorXd eval(double s, int deriv = 0) const;

    /// Index of the first nonzero basis function at s, and the `order` values
    /// of functions first..first+order-1.
    [[nodiscard]] int eval_local(double s, int deriv, std::span<double> out) const;

    /// N x m matrix of basis values at each point.
    [[nodiscard]] Eigen::MatrixXd eval_matrix(std::span<const double> points, int deriv = 0) const;

    bool operator==(const BasisSystem& other) const;

private:
    [[nodiscard]] int find_span(double s) const;

    Interval domain_{};
    int num_basis_ = 0;
    int order_ = 0;
    std::vector<double> knots_;
    Eigen::MatrixXd gram0_;
    Eigen::MatrixXd gram2_;
};

/// Convenience wrapper matching the construction contract.
BasisSystem make_basis(Interval domain, int num_basis, int order);

/// C = integral of a(s) b(s)^T over the common domain, for two bases on the same
/// interval with possibly different knots. Exact for polynomial integrands.
Eigen::MatrixXd cross_gram(const BasisSystem& a, const BasisSystem& b, int deriv = 0);

}  // namespace tvcflm
