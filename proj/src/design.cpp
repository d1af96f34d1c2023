#include "tvcflm/design.hpp"

#include "tvcflm/errors.hpp"

#include <string>

namespace tvcflm {

Eigen::VectorXd vec(const Eigen::MatrixXd& b) {
    return Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& b, Eigen::Index rows, Eigen::Index cols) {
    if (b.size() != rows * cols) throw InputError("unvec: size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(b.data(), rows, cols);
}

double CoefficientSurface::operator()(double s, double t) const { return eval_surface(*this, s, t); }

double eval_surface(const CoefficientSurface& surface, double s, double t) {
    if (surface.coefficients.rows() != surface.s_basis.num_basis() ||
        surface.coefficients.cols() != surface.t_basis.num_basis()) {
        throw InputError("eval_surface: coefficient matrix does not match basis sizes");
    }
    return surface.s_basis.eval(s).dot(surface.coefficients * surface.t_basis.eval(t));
}

Eigen::MatrixXd eval_surface_grid(const CoefficientSurface& surface, std::span<const double> s_points,
                                  std::span<const double> t_points) {
    const Eigen::MatrixXd phi = surface.s_basis.eval_matrix(s_points);
    const Eigen::MatrixXd psi = surface.t_basis.eval_matrix(t_points);
    return phi * surface.coefficients * psi.transpose();
}

Eigen::VectorXd build_design_row(const Eigen::VectorXd& w, double t, const Eigen::MatrixXd& phi_gram,
                                 const BasisSystem& t_basis) {
    if (phi_gram.rows() != w.size() || phi_gram.cols() != w.size()) {
        throw InputError("build_design_row: Gram matrix is " + std::to_string(phi_gram.rows()) + "x" +
                         std::to_string(phi_gram.cols()) + " but w has length " + std::to_string(w.size()));
    }
    const Eigen::VectorXd psi = t_basis.eval(t);
    const Eigen::VectorXd wphi = phi_gram.transpose() * w;
    const Eigen::Index m1 = w.size();
    Eigen::VectorXd z(m1 * psi.size());
    for (Eigen::Index l = 0; l < psi.size(); ++l) z.segment(l * m1, m1) = psi[l] * wphi;
    return z;
}

DesignMatrix build_design(const CenteredData& data, const BasisSystem& s_basis, const BasisSystem& t_basis) {
    if (data.samples.empty()) throw InputError("build_design: no samples");
    const auto n = static_cast<Eigen::Index>(data.samples.size());
    DesignMatrix d;
    d.s_basis = s_basis;
    d.t_basis = t_basis;
    d.z.resize(n, static_cast<Eigen::Index>(s_basis.num_basis()) * t_basis.num_basis());
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& sample = data.samples[static_cast<std::size_t>(i)];
        if (sample.w.size() != s_basis.num_basis()) {
            throw InputError("build_design: sample '" + sample.id + "' has " + std::to_string(sample.w.size()) +
                             " coefficients, basis has " + std::to_string(s_basis.num_basis()));
        }
        d.z.row(i) = build_design_row(sample.w, sample.t, s_basis.gram0(), t_basis).transpose();
        d.y[i] = sample.y;
    }
    d.w_mean = data.w_mean.size() == s_basis.num_basis() ? data.w_mean : Eigen::VectorXd::Zero(s_basis.num_basis());
    d.y_mean = data.y_mean;
    return d;
}

Eigen::MatrixXd roughness_kron(const BasisSystem& s_basis, int m2) {
    const int m1 = s_basis.num_basis();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m1) * m2, static_cast<Eigen::Index>(m1) * m2);
    for (int l = 0; l < m2; ++l) k.block(l * m1, l * m1, m1, m1) = s_basis.gram2();
    return k;
}

}  // namespace tvcflm
