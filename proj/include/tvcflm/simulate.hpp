#pragma once

#include "tvcflm/basis.hpp"
#include "tvcflm/design.hpp"
#include "tvcflm/selection.hpp"
#include "tvcflm/smoothing.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tvcflm::sim {

using Rng = std::mt19937_64;

/// Independent stream for replication `index` of a study seeded with `seed`.
Rng stream_for(std::uint64_t seed, std::uint64_t index);

struct SimConfig {
    int n = 200;
    int num_points = 21;  ///< observation points per curve on [0, 1]
    double noise_ratio = 0.1;
    int m1 = 21;
    int m2 = 8;
    double gamma = 0.5;
    int replications = 100;
    double truncation = 0.6;  ///< s0: the true surface vanishes for s >= s0
    std::uint64_t seed = 1;
    int predictor_basis_size = 10;  ///< cubic basis of the true predictor curves
    double predictor_noise = 0.1;   ///< observation noise sd relative to each curve's range
    int rmse_t_points = 21;
    int surface_grid = 101;  ///< resolution of the median-surface grids
    unsigned threads = 1;
    TuningGrid grid{};  ///< shared by the TVCFLM and TFLM fits; its kappas drive the ridge baseline
};

/// Throws InputError on out-of-range settings.
void validate(const SimConfig& config);

enum class Method { Tvcflm = 0, Tflm = 1, Vcflm = 2 };
inline constexpr std::array<Method, 3> kMethods{Method::Tvcflm, Method::Tflm, Method::Vcflm};
std::string method_name(Method m);

/// A generated predictor curve: discrete noisy record plus its true coefficients.
struct GeneratedPredictor {
    LongitudinalRecord record;
    Eigen::VectorXd w;  ///< coefficients over the true-predictor basis
};

/// Model bases and true-predictor basis used by a study.
struct StudyBases {
    BasisSystem predictor;  ///< basis of the true curves g_i
    BasisSystem s_basis;    ///< phi, m1 functions
    BasisSystem t_basis;    ///< psi, m2 functions
};

StudyBases make_study_bases(const SimConfig& config);

/// x_ia = g_i(s_a) + e_ia, g_i = w_i^T varphi, e ~ N(0, (0.1 R_i)^2) with R_i the range of g_i over the grid.
GeneratedPredictor generate_predictor(const SimConfig& config, const BasisSystem& predictor_basis, Rng& rng);

/// Standard normal B with every row whose basis support reaches past s0 set to zero.
CoefficientSurface generate_true_surface(const SimConfig& config, const StudyBases& bases, Rng& rng);

/// Number of leading rows of B kept nonzero for truncation point s0.
int kept_rows(const BasisSystem& s_basis, double s0);

/// f(x) = integral of g(s) beta(s, t) ds, computed exactly from the cross Gram matrix.
double signal_value(const CoefficientSurface& surface, const Eigen::MatrixXd& cross, const Eigen::VectorXd& w,
                    double t);

/// y_i = f_i + eps_i with sd r * (max f - min f). Throws NumericalError when the range is 0.
std::vector<double> generate_responses(std::span<const double> signals, double noise_ratio, Rng& rng);

double rmse_y(std::span<const double> truth, std::span<const double> estimate);
double rmse_beta(const CoefficientSurface& truth, const CoefficientSurface& estimate,
                 std::span<const double> s_points, std::span<const double> t_points);

/// Equispaced points lo, ..., hi.
std::vector<double> linspace(double lo, double hi, int count);

/// A fully generated data set for one replication.
struct SimDataset {
    std::vector<LongitudinalRecord> records;
    std::vector<Eigen::VectorXd> true_w;
    std::vector<double> signal;
};

SimDataset generate_dataset(const SimConfig& config, const StudyBases& bases, const CoefficientSurface& truth,
                            Rng& rng);

struct MethodOutcome {
    double rmse_y = 0.0;
    double rmse_beta = 0.0;
    double kappa = 0.0;
    double tau = 0.0;
    std::vector<int> truncation;
    Eigen::MatrixXd surface_grid;  ///< estimated beta on the median grid
};

struct ReplicationResult {
    bool ok = false;
    std::string error;
    double smoothing_roughness = 0.0;
    std::array<MethodOutcome, 3> methods;
};

/// Fit all three methods to one data set.
ReplicationResult run_replication(const SimConfig& config, const StudyBases& bases, const CoefficientSurface& truth,
                                  const SimDataset& data);

struct MethodSummary {
    double rmse_y_mean = 0.0;
    double rmse_y_sd = 0.0;
    double rmse_beta_mean = 0.0;
    double rmse_beta_sd = 0.0;
    Eigen::MatrixXd median_surface;
};

struct SimResult {
    SimConfig config;
    CoefficientSurface truth;
    std::vector<double> grid_points;  ///< shared s and t coordinates of the median grids
    Eigen::MatrixXd true_grid;
    std::vector<ReplicationResult> replications;
    std::array<MethodSummary, 3> summary;
    int failures = 0;
};

/// Monte Carlo study. Replications run on `config.threads` workers with per-replication
/// RNG streams, so the result does not depend on scheduling. Throws NumericalError when
/// more than 10% of replications fail.
SimResult run_study(const SimConfig& config, const std::function<void(int, int)>& progress = {});

/// Writes tables.csv, replications.csv, median_surface_{method}.csv, true_surface.csv, config.json.
void write_study_outputs(const SimResult& result, const std::filesystem::path& dir);

std::string tables_csv(const SimResult& result);

}  // namespace tvcflm::sim
