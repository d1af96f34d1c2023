#include "tvcflm/smoothing.hpp"

#include "tvcflm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvcflm {

namespace {

void validate_record(const LongitudinalRecord& record) {
    if (record.s.size() != record.x.size()) {
        throw InputError("smooth_curve: subject '" + record.id + "' has mismatched s/x lengths");
    }
    if (record.s.size() < 2) throw InputError("smooth_curve: subject '" + record.id + "' needs >= 2 observations");
    for (std::size_t a = 0; a < record.s.size(); ++a) {
        if (!std::isfinite(record.s[a]) || !std::isfinite(record.x[a])) {
            throw InputError("smooth_curve: subject '" + record.id + "' has non-finite observations");
        }
    }
    const auto [lo, hi] = std::minmax_element(record.s.begin(), record.s.end());
    if (*lo == *hi) throw InputError("smooth_curve: subject '" + record.id + "' has all-identical s values");
}

struct CurveSystem {
    Eigen::MatrixXd design;  // N x m
    Eigen::LLT<Eigen::MatrixXd> factor;
};

CurveSystem factor_system(const LongitudinalRecord& record, const BasisSystem& basis, double roughness) {
    CurveSystem sys;
    sys.design = basis.eval_matrix(record.s);
    Eigen::MatrixXd lhs = sys.design.transpose() * sys.design + roughness * basis.gram2();
    sys.factor.compute(lhs);
    if (sys.factor.info() != Eigen::Success || sys.factor.rcond() < 1e-14) {
        // Singular when N < m without a penalty; a tiny ridge restores definiteness.
        lhs.diagonal().array() += 1e-10;
        sys.factor.compute(lhs);
    }
    if (sys.factor.info() != Eigen::Success) throw NumericalError("smooth_curve: normal equations not positive definite");
    return sys;
}

}  // namespace

Eigen::VectorXd smooth_curve(const LongitudinalRecord& record, const BasisSystem& basis, double roughness) {
    if (!(roughness >= 0.0) || !std::isfinite(roughness)) throw InputError("smooth_curve: roughness must be >= 0");
    validate_record(record);
    const CurveSystem sys = factor_system(record, basis, roughness);
    const Eigen::Map<const Eigen::VectorXd> x(record.x.data(), static_cast<Eigen::Index>(record.x.size()));
    return sys.factor.solve(sys.design.transpose() * x);
}

std::vector<double> default_roughness_grid() {
    std::vector<double> grid;
    for (int e = -8; e <= 2; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

RoughnessChoice select_roughness_gcv(std::span<const LongitudinalRecord> records, const BasisSystem& basis,
                                     std::span<const double> grid) {
    if (records.empty()) throw InputError("select_roughness_gcv: no records");
    if (grid.empty()) throw InputError("select_roughness_gcv: empty grid");
    for (const auto& r : records) validate_record(r);

    // Records that share an observation grid share a hat matrix; group them.
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].s < records[b].s; });

    RoughnessChoice choice;
    choice.gcv.assign(grid.size(), 0.0);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const double lambda = grid[gi];
        if (!(lambda >= 0.0)) throw InputError("select_roughness_gcv: grid values must be >= 0");
        double score = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const auto& first = records[order[pos]];
            const CurveSystem sys = factor_system(first, basis, lambda);
            const Eigen::MatrixXd hat = sys.design * sys.factor.solve(sys.design.transpose());
            const double n_obs = static_cast<double>(first.s.size());
            const double denom = n_obs - hat.trace();
            while (pos < order.size() && records[order[pos]].s == first.s) {
                const auto& rec = records[order[pos]];
                const Eigen::Map<const Eigen::VectorXd> x(rec.x.data(), static_cast<Eigen::Index>(rec.x.size()));
                const double rss = (x - hat * x).squaredNorm();
                score += denom > 1e-8 ? n_obs * rss / (denom * denom) : std::numeric_limits<double>::infinity();
                ++pos;
            }
        }
        choice.gcv[gi] = score;
    }
    const auto best = std::min_element(choice.gcv.begin(), choice.gcv.end());
    choice.roughness = grid[static_cast<std::size_t>(best - choice.gcv.begin())];
    return choice;
}

std::vector<FunctionalSample> smooth_records(std::span<const LongitudinalRecord> records, const BasisSystem& basis,
                                             double roughness) {
    std::vector<FunctionalSample> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        out.push_back(FunctionalSample{rec.id, smooth_curve(rec, basis, roughness), rec.t, rec.y});
    }
    return out;
}

CenteredData center_dataset(std::span<const FunctionalSample> samples) {
    if (samples.empty()) throw InputError("center_dataset: empty sample list");
    const Eigen::Index m = samples.front().w.size();
    CenteredData out;
    out.w_mean = Eigen::VectorXd::Zero(m);
    double y_sum = 0.0;
    for (const auto& s : samples) {
        if (s.w.size() != m) throw InputError("center_dataset: coefficient vectors differ in length");
        out.w_mean += s.w;
        y_sum += s.y;
    }
    const double n = static_cast<double>(samples.size());
    out.w_mean /= n;
    out.y_mean = y_sum / n;
    out.samples.reserve(samples.size());
    for (const auto& s : samples) {
        out.samples.push_back(FunctionalSample{s.id, s.w - out.w_mean, s.t, s.y - out.y_mean});
    }
    return out;
}

}  // namespace tvcflm
