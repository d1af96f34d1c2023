#include "tvcflm/basis.hpp"

#include "tvcflm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tvcflm {

QuadratureRule gauss_legendre(int num_nodes) {
    if (num_nodes < 1) throw InputError("gauss_legendre: need at least one node");
    QuadratureRule rule;
    rule.nodes.resize(num_nodes);
    rule.weights.resize(num_nodes);
    const int n = num_nodes;
    // Roots are symmetric; Newton on P_n from the Chebyshev-like initial guess.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged root.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

BasisSystem::BasisSystem(Interval domain, int num_basis, int order)
    : domain_(domain), num_basis_(num_basis), order_(order) {
    if (!(std::isfinite(domain.lo) && std::isfinite(domain.hi)) || !(domain.hi > domain.lo)) {
        throw InputError("make_basis: domain must satisfy lo < hi");
    }
    if (order < 1 || order > 8) throw InputError("make_basis: order must lie in [1, 8]");
    if (num_basis < order) {
        throw InputError("make_basis: num_basis (" + std::to_string(num_basis) +
                         ") must be >= order (" + std::to_string(order) + ")");
    }

    const int num_interior = num_basis - order;
    knots_.reserve(num_basis + order);
    knots_.insert(knots_.end(), order, domain.lo);
    for (int j = 1; j <= num_interior; ++j) {
        knots_.push_back(domain.lo + domain.length() * j / (num_interior + 1));
    }
    knots_.insert(knots_.end(), order, domain.hi);

    gram0_ = cross_gram(*this, *this, 0);
    gram0_ = 0.5 * (gram0_ + gram0_.transpose()).eval();
    if (order_ > 2) {
        gram2_ = cross_gram(*this, *this, 2);
        gram2_ = 0.5 * (gram2_ + gram2_.transpose()).eval();
    } else {
        gram2_ = Eigen::MatrixXd::Zero(num_basis, num_basis);
    }
}

BasisSystem make_basis(Interval domain, int num_basis, int order) {
    return BasisSystem(domain, num_basis, order);
}

std::pair<double, double> BasisSystem::support(int k) const {
    if (k < 0 || k >= num_basis_) throw InputError("support: basis index out of range");
    return {knots_[k], knots_[k + order_]};
}

std::vector<double> BasisSystem::breakpoints() const {
    std::vector<double> bp(knots_.begin(), knots_.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return bp;
}

int BasisSystem::find_span(double s) const {
    // Span i satisfies knots[i] <= s < knots[i+1], order-1 <= i <= m-1.
    if (s >= knots_[num_basis_]) return num_basis_ - 1;
    const auto it = std::upper_bound(knots_.begin() + order_ - 1, knots_.begin() + num_basis_ + 1, s);
    return static_cast<int>(it - knots_.begin()) - 1;
}

int BasisSystem::eval_local(double s, int deriv, std::span<double> out) const {
    if (!std::isfinite(s) || !domain_.contains(s)) {
        throw InputError("eval_basis: point " + std::to_string(s) + " outside domain [" +
                         std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
    }
    if (deriv < 0 || deriv >= order_) throw InputError("eval_basis: derivative order must be in [0, order)");
    if (static_cast<int>(out.size()) < order_) throw InputError("eval_basis: output buffer too small");

    const int p = order_ - 1;
    const int span = find_span(s);

    // Triangular table of basis values of increasing degree (de Boor / Cox recursion),
    // followed by the derivative recurrence on the same table.
    double ndu[8][8];
    double left[8];
    double right[8];

    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = s - knots_[span + 1 - j];
        right[j] = knots_[span + j] - s;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    if (deriv == 0) {
        for (int j = 0; j <= p; ++j) out[j] = ndu[j][p];
        return span - p;
    }

    double a[2][8];
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a[0][0] = 1.0;
        double d = 0.0;
        for (int k = 1; k <= deriv; ++k) {
            d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            std::swap(s1, s2);
        }
        out[r] = d;
    }
    double factor = 1.0;
    for (int k = 1; k <= deriv; ++k) factor *= (p - k + 1);
    for (int r = 0; r <= p; ++r) out[r] *= factor;
    return span - p;
}

Eigen::VectorXd BasisSystem::eval(double s, int deriv) const {
    double local[8];
    const int first = eval_local(s, deriv, std::span<double>(local, 8));
    Eigen::VectorXd values = Eigen::VectorXd::Zero(num_basis_);
    for (int j = 0; j < order_; ++j) values[first + j] = local[j];
    return values;
}

Eigen::MatrixXd BasisSystem::eval_matrix(std::span<const double> points, int deriv) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), num_basis_);
    double local[8];
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int first = eval_local(points[i], deriv, std::span<double>(local, 8));
        for (int j = 0; j < order_; ++j) m(static_cast<Eigen::Index>(i), first + j) = local[j];
    }
    return m;
}

bool BasisSystem::operator==(const BasisSystem& other) const {
    return domain_ == other.domain_ && num_basis_ == other.num_basis_ && order_ == other.order_ &&
           knots_ == other.knots_;
}

Eigen::MatrixXd cross_gram(const BasisSystem& a, const BasisSystem& b, int deriv) {
    if (!(a.domain() == b.domain())) throw InputError("cross_gram: bases must share a domain");
    std::vector<double> bp = a.breakpoints();
    const std::vector<double> bp_b = b.breakpoints();
    bp.insert(bp.end(), bp_b.begin(), bp_b.end());
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

    const int num_nodes = std::max(a.order(), b.order());
    const QuadratureRule rule = gauss_legendre(num_nodes);

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.num_basis(), b.num_basis());
    double va[8];
    double vb[8];
    for (std::size_t iv = 0; iv + 1 < bp.size(); ++iv) {
        const double lo = bp[iv];
        const double hi = bp[iv + 1];
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (int q = 0; q < num_nodes; ++q) {
            const double s = mid + half * rule.nodes[q];
            const double w = half * rule.weights[q];
            const int fa = a.eval_local(s, deriv, std::span<double>(va, 8));
            const int fb = b.eval_local(s, deriv, std::span<double>(vb, 8));
            for (int i = 0; i < a.order(); ++i) {
                for (int j = 0; j < b.order(); ++j) g(fa + i, fb + j) += w * va[i] * vb[j];
            }
        }
    }
    return g;
}

}  // namespace tvcflm
