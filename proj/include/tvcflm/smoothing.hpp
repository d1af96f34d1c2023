#pragma once

#include "tvcflm/basis.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace tvcflm {

/// Raw discrete observations of one subject's predictor, with its exogenous
/// value and scalar response.
struct LongitudinalRecord {
    std::string id;
    std::vector<double> s;
    std::vector<double> x;
    double t = 0.0;
    double y = 0.0;
};

/// One subject's predictor as basis coefficients, plus (t, y).
struct FunctionalSample {
    std::string id;
    Eigen::VectorXd w;
    double t = 0.0;
    double y = 0.0;
};

/// Penalized least squares fit of one curve:
/// argmin ||x - B w||^2 + roughness * w^T V w.
Eigen::VectorXd smooth_curve(const LongitudinalRecord& record, const BasisSystem& basis, double roughness);

/// Log-spaced roughness candidates 1e-8, 1e-7, ..., 1e2.
std::vector<double> default_roughness_grid();

struct RoughnessChoice {
    double roughness = 0.0;
    std::vector<double> gcv;  ///< one score per grid entry
};

/// Pooled generalized cross-validation over all records:
/// GCV(r) = sum_i N_i * RSS_i(r) / (N_i - df_i(r))^2.
RoughnessChoice select_roughness_gcv(std::span<const LongitudinalRecord> records, const BasisSystem& basis,
                                     std::span<const double> grid);

/// Smooth every record at a common roughness.
std::vector<FunctionalSample> smooth_records(std::span<const LongitudinalRecord> records, const BasisSystem& basis,
                                             double roughness);

/// Centered dataset plus the means needed to de-center predictions.
struct CenteredData {
    std::vector<FunctionalSample> samples;
    Eigen::VectorXd w_mean;
    double y_mean = 0.0;
};

/// Subtract the mean coefficient vector and mean response. Throws InputError on empty input.
CenteredData center_dataset(std::span<const FunctionalSample> samples);

}  // namespace tvcflm
