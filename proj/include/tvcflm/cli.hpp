#pragma once

#include "tvcflm/fit_result.hpp"
#include "tvcflm/selection.hpp"
#include "tvcflm/smoothing.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tvcflm::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitInput = 2;

/// Predictor and response files joined by subject.
struct Dataset {
    std::vector<LongitudinalRecord> records;  ///< in order of first appearance in the predictor file
};

/// Reads the long-format predictor CSV (subject_id, s, x) and the response CSV
/// (subject_id, t, y). Throws InputError with file:line context on schema errors,
/// duplicate responses, or subjects missing from either file.
Dataset read_dataset(const std::filesystem::path& predictors, const std::filesystem::path& responses);

/// Predictor curves only, keyed by subject in order of first appearance.
std::vector<LongitudinalRecord> read_predictors(const std::filesystem::path& predictors);

struct FitOptions {
    int m1 = 15;
    int m2 = 10;
    double gamma = 0.5;
    std::vector<double> kappa_grid;  ///< empty: library default
    std::vector<double> tau_grid;    ///< empty: library default
    std::optional<Interval> s_domain;  ///< default: range of the observed s
    std::optional<Interval> t_domain;  ///< default: range of the observed t
    std::uint64_t seed = 1;
    bool bic_logn = false;
    unsigned threads = 1;
};

/// Everything cmd_fit computes, before it is written out.
struct FitOutput {
    FitResult fit;
    SelectionResult selection;
    double smoothing_roughness = 0.0;
    FitOptions options;
};

FitOutput fit_dataset(const Dataset& data, const FitOptions& options);

/// fit.json contents.
std::string fit_json(const FitOutput& out);

/// Rebuilds a FitResult (surface, b, centering, smoothing roughness) from fit.json text.
struct StoredFit {
    FitResult fit;
    double smoothing_roughness = 0.0;
};
StoredFit parse_fit_json(const std::string& text, const std::string& source);

/// Writes fit.json, surface.csv (101 x 101) and selection.csv into `dir`.
void write_fit_outputs(const FitOutput& out, const std::filesystem::path& dir);

/// One prediction per (subject, t) pair of `targets`; subjects must be present in `records`.
struct Target {
    std::string id;
    double t = 0.0;
};
std::vector<double> predict_targets(const StoredFit& stored, const std::vector<LongitudinalRecord>& records,
                                    const std::vector<Target>& targets);

/// Reads a targets CSV with columns subject_id, t.
std::vector<Target> read_targets(const std::filesystem::path& path);

/// Entry point of the tvcflm executable. Messages go to `out` and `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tvcflm::cli
