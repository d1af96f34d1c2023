#include "tvcflm/cli.hpp"

#include "tvcflm/design.hpp"
#include "tvcflm/errors.hpp"
#include "tvcflm/io.hpp"
#include "tvcflm/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace tvcflm::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kSurfaceGrid = 101;
constexpr int kSplineOrder = 4;

std::string at(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line) + ": "; }

const std::string& required_id(const io::CsvTable& table, std::size_t row, std::size_t col, const std::string& source) {
    const std::string& id = table.rows[row][col];
    if (id.empty()) throw InputError(at(source, table.line_numbers[row]) + "empty subject_id");
    return id;
}

int t_order(int m2) { return std::min(kSplineOrder, m2); }

Json interval_json(const Interval& d) { return Json::array({d.lo, d.hi}); }

Interval parse_interval(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) throw InputError("fit file: '" + what + "' must be [lo, hi]");
    return Interval{j[0].get<double>(), j[1].get<double>()};
}

Interval observed_range(const std::vector<double>& values, const std::string& what) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*hi > *lo)) {
        throw InputError("all observed " + what + " values are equal; pass --" + what + "-domain explicitly");
    }
    return Interval{*lo, *hi};
}

Interval domain_option(const std::vector<double>& v, const std::string& flag) {
    if (v.size() != 2 || !(v[1] > v[0])) throw InputError(flag + " needs two increasing values lo,hi");
    return Interval{v[0], v[1]};
}

}  // namespace

std::vector<LongitudinalRecord> read_predictors(const std::filesystem::path& predictors) {
    const std::string source = predictors.string();
    const io::CsvTable table = io::read_csv(predictors);
    const std::size_t c_id = table.column("subject_id", source);
    const std::size_t c_s = table.column("s", source);
    const std::size_t c_x = table.column("x", source);

    std::vector<LongitudinalRecord> records;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::size_t line = table.line_numbers[r];
        const std::string& id = required_id(table, r, c_id, source);
        auto [it, inserted] = index.try_emplace(id, records.size());
        if (inserted) {
            records.push_back(LongitudinalRecord{});
            records.back().id = id;
        }
        LongitudinalRecord& rec = records[it->second];
        rec.s.push_back(io::parse_double(table.rows[r][c_s], source, line));
        rec.x.push_back(io::parse_double(table.rows[r][c_x], source, line));
    }
    if (records.empty()) throw InputError(source + ": no predictor rows");
    return records;
}

Dataset read_dataset(const std::filesystem::path& predictors, const std::filesystem::path& responses) {
    Dataset data;
    data.records = read_predictors(predictors);

    const std::string source = responses.string();
    const io::CsvTable table = io::read_csv(responses);
    const std::size_t c_id = table.column("subject_id", source);
    const std::size_t c_t = table.column("t", source);
    const std::size_t c_y = table.column("y", source);

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < data.records.size(); ++i) index.emplace(data.records[i].id, i);
    std::vector<bool> seen(data.records.size(), false);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::size_t line = table.line_numbers[r];
        const std::string& id = required_id(table, r, c_id, source);
        const auto it = index.find(id);
        if (it == index.end()) {
            throw InputError(at(source, line) + "subject '" + id + "' has no rows in " + predictors.string());
        }
        if (seen[it->second]) throw InputError(at(source, line) + "duplicate response for subject '" + id + "'");
        seen[it->second] = true;
        LongitudinalRecord& rec = data.records[it->second];
        rec.t = io::parse_double(table.rows[r][c_t], source, line);
        rec.y = io::parse_double(table.rows[r][c_y], source, line);
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            throw InputError(source + ": subject '" + data.records[i].id + "' from " + predictors.string() +
                             " has no response row");
        }
    }
    return data;
}

FitOutput fit_dataset(const Dataset& data, const FitOptions& options) {
    if (options.m1 < kSplineOrder) throw InputError("--m1 must be at least 4");
    if (options.m2 < 1) throw InputError("--m2 must be at least 1");
    if (!(options.gamma > 0.0 && options.gamma < 1.0)) throw InputError("--gamma must lie in (0, 1)");
    if (data.records.size() < 2) throw InputError("need at least two subjects");

    std::vector<double> all_s;
    std::vector<double> all_t;
    for (const auto& rec : data.records) {
        all_s.insert(all_s.end(), rec.s.begin(), rec.s.end());
        all_t.push_back(rec.t);
    }
    const Interval s_domain = options.s_domain ? *options.s_domain : observed_range(all_s, "s");
    const Interval t_domain = options.t_domain ? *options.t_domain : observed_range(all_t, "t");
    for (const auto& rec : data.records) {
        for (const double s : rec.s) {
            if (!s_domain.contains(s)) {
                throw InputError("subject '" + rec.id + "': s = " + io::format_double(s) + " lies outside the s domain");
            }
        }
        if (!t_domain.contains(rec.t)) {
            throw InputError("subject '" + rec.id + "': t = " + io::format_double(rec.t) +
                             " lies outside the t domain");
        }
    }

    const BasisSystem s_basis = make_basis(s_domain, options.m1, kSplineOrder);
    const BasisSystem t_basis = make_basis(t_domain, options.m2, t_order(options.m2));

    FitOutput out;
    out.options = options;
    const RoughnessChoice rough = select_roughness_gcv(data.records, s_basis, default_roughness_grid());
    out.smoothing_roughness = rough.roughness;
    const std::vector<FunctionalSample> samples = smooth_records(data.records, s_basis, rough.roughness);
    const DesignMatrix design = build_design(center_dataset(samples), s_basis, t_basis);

    TuningGrid grid;
    if (!options.kappa_grid.empty()) grid.kappas = options.kappa_grid;
    if (!options.tau_grid.empty()) grid.taus = options.tau_grid;
    grid.gamma = options.gamma;
    GridOptions grid_options;
    grid_options.bic_penalty = options.bic_logn ? BicPenalty::LogN : BicPenalty::Two;
    grid_options.threads = std::max(1u, options.threads);
    out.selection = grid_search(design, grid, grid_options);
    out.fit = out.selection.best;
    return out;
}

std::string fit_json(const FitOutput& out) {
    const FitResult& fit = out.fit;
    const CoefficientSurface& surf = fit.surface;
    Json j;
    j["format"] = "tvcflm-fit";
    j["version"] = 1;
    j["s_basis"] = {{"domain", interval_json(surf.s_basis.domain())},
                    {"num_basis", surf.s_basis.num_basis()},
                    {"order", surf.s_basis.order()}};
    j["t_basis"] = {{"domain", interval_json(surf.t_basis.domain())},
                    {"num_basis", surf.t_basis.num_basis()},
                    {"order", surf.t_basis.order()}};
    Json rows = Json::array();
    for (Eigen::Index k = 0; k < surf.coefficients.rows(); ++k) {
        Json row = Json::array();
        for (Eigen::Index l = 0; l < surf.coefficients.cols(); ++l) row.push_back(surf.coefficients(k, l));
        rows.push_back(std::move(row));
    }
    j["coefficients"] = std::move(rows);
    j["sigma2"] = fit.sigma2;

    // Active coefficients as 1-based (row, column) pairs of B.
    const Eigen::Index m1 = surf.coefficients.rows();
    Json active = Json::array();
    for (const Eigen::Index idx : fit.active) active.push_back(Json::array({idx % m1 + 1, idx / m1 + 1}));
    j["active"] = std::move(active);
    j["truncation"] = fit.truncation;
    j["edf"] = fit.edf;
    j["loglik"] = fit.loglik;
    j["bic"] = fit.bic;
    j["bic_penalty"] = out.options.bic_logn ? "log(n)" : "2";
    j["kappa"] = fit.kappa;
    j["tau"] = fit.tau;
    j["lambda"] = fit.lambda;
    j["gamma"] = fit.gamma;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["smoothing_roughness"] = out.smoothing_roughness;
    j["w_mean"] = std::vector<double>(fit.w_mean.data(), fit.w_mean.data() + fit.w_mean.size());
    j["y_mean"] = fit.y_mean;
    j["seed"] = out.options.seed;
    return j.dump(2) + "\n";
}

StoredFit parse_fit_json(const std::string& text, const std::string& source) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InputError(source + ": invalid JSON: " + e.what());
    }
    try {
        if (j.value("format", "") != "tvcflm-fit") throw InputError(source + ": not a tvcflm fit file");
        const auto& sb = j.at("s_basis");
        const auto& tb = j.at("t_basis");
        const BasisSystem s_basis =
            make_basis(parse_interval(sb.at("domain"), "s_basis.domain"), sb.at("num_basis"), sb.at("order"));
        const BasisSystem t_basis =
            make_basis(parse_interval(tb.at("domain"), "t_basis.domain"), tb.at("num_basis"), tb.at("order"));
        const int m1 = s_basis.num_basis();
        const int m2 = t_basis.num_basis();

        const auto& rows = j.at("coefficients");
        if (!rows.is_array() || static_cast<int>(rows.size()) != m1) {
            throw InputError(source + ": 'coefficients' must have " + std::to_string(m1) + " rows");
        }
        Eigen::MatrixXd coef(m1, m2);
        for (int k = 0; k < m1; ++k) {
            if (!rows[k].is_array() || static_cast<int>(rows[k].size()) != m2) {
                throw InputError(source + ": coefficient row " + std::to_string(k + 1) + " must have " +
                                 std::to_string(m2) + " entries");
            }
            for (int l = 0; l < m2; ++l) coef(k, l) = rows[k][l].get<double>();
        }
        const auto w_mean = j.at("w_mean").get<std::vector<double>>();
        if (static_cast<int>(w_mean.size()) != m1) {
            throw InputError(source + ": 'w_mean' must have " + std::to_string(m1) + " entries");
        }

        StoredFit stored;
        FitResult& fit = stored.fit;
        fit.surface = CoefficientSurface{coef, s_basis, t_basis};
        fit.b = vec(coef);
        fit.sigma2 = j.at("sigma2").get<double>();
        fit.kappa = j.value("kappa", 0.0);
        fit.tau = j.value("tau", 0.0);
        fit.lambda = j.value("lambda", 0.0);
        fit.gamma = j.value("gamma", 0.5);
        fit.edf = j.value("edf", 0.0);
        fit.bic = j.value("bic", 0.0);
        fit.loglik = j.value("loglik", 0.0);
        fit.w_mean = Eigen::Map<const Eigen::VectorXd>(w_mean.data(), m1);
        fit.y_mean = j.at("y_mean").get<double>();
        summarize_support(fit);
        stored.smoothing_roughness = j.at("smoothing_roughness").get<double>();
        if (!(stored.smoothing_roughness >= 0.0)) throw InputError(source + ": negative smoothing_roughness");
        return stored;
    } catch (const Json::exception& e) {
        throw InputError(source + ": malformed fit file: " + e.what());
    }
}

void write_fit_outputs(const FitOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::write_file(dir / "fit.json", fit_json(out));
    const CoefficientSurface& surf = out.fit.surface;
    const Interval sd = surf.s_basis.domain();
    const Interval td = surf.t_basis.domain();
    const std::vector<double> s_points = sim::linspace(sd.lo, sd.hi, kSurfaceGrid);
    const std::vector<double> t_points = sim::linspace(td.lo, td.hi, kSurfaceGrid);
    io::write_file(dir / "surface.csv", io::surface_long_csv(s_points, t_points,
                                                             eval_surface_grid(surf, s_points, t_points)));
    io::write_file(dir / "selection.csv", selection_table_csv(out.selection.table));
}

std::vector<Target> read_targets(const std::filesystem::path& path) {
    const std::string source = path.string();
    const io::CsvTable table = io::read_csv(path);
    const std::size_t c_id = table.column("subject_id", source);
    const std::size_t c_t = table.column("t", source);
    std::vector<Target> targets;
    targets.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        targets.push_back(Target{required_id(table, r, c_id, source),
                                 io::parse_double(table.rows[r][c_t], source, table.line_numbers[r])});
    }
    return targets;
}

std::vector<double> predict_targets(const StoredFit& stored, const std::vector<LongitudinalRecord>& records,
                                    const std::vector<Target>& targets) {
    const BasisSystem& s_basis = stored.fit.surface.s_basis;
    const Interval t_domain = stored.fit.surface.t_basis.domain();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].id, i);

    std::vector<std::optional<Eigen::VectorXd>> coefficients(records.size());
    std::vector<double> out;
    out.reserve(targets.size());
    for (const Target& target : targets) {
        const auto it = index.find(target.id);
        if (it == index.end()) throw InputError("no predictor curve for subject '" + target.id + "'");
        if (!t_domain.contains(target.t)) {
            throw InputError("subject '" + target.id + "': t = " + io::format_double(target.t) +
                             " lies outside the fitted t domain");
        }
        auto& w = coefficients[it->second];
        if (!w) {
            const LongitudinalRecord& rec = records[it->second];
            for (const double s : rec.s) {
                if (!s_basis.domain().contains(s)) {
                    throw InputError("subject '" + rec.id + "': s = " + io::format_double(s) +
                                     " lies outside the fitted s domain");
                }
            }
            w = smooth_curve(rec, s_basis, stored.smoothing_roughness);
        }
        out.push_back(predict(stored.fit, FunctionalSample{target.id, *w, target.t, 0.0}));
    }
    return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Truncated varying-coefficient functional linear models", "tvcflm"};
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Smooth the predictors, select (kappa, tau) by BIC and fit");
    std::string predictors;
    std::string responses;
    FitOptions fopt;
    std::vector<double> kappa_grid;
    std::vector<double> tau_grid;
    std::vector<double> s_domain;
    std::vector<double> t_domain;
    std::string fit_out = "tvcflm_fit";
    fit_cmd->add_option("predictors", predictors, "Long-format CSV with columns subject_id,s,x")->required();
    fit_cmd->add_option("responses", responses, "CSV with columns subject_id,t,y")->required();
    fit_cmd->add_option("--m1", fopt.m1, "Number of cubic B-splines in s")->capture_default_str();
    fit_cmd->add_option("--m2", fopt.m2, "Number of B-splines in t (1 gives a t-constant surface)")
        ->capture_default_str();
    fit_cmd->add_option("--gamma", fopt.gamma, "Bridge exponent in (0, 1)")->capture_default_str();
    fit_cmd->add_option("--kappa-grid", kappa_grid, "Comma-separated roughness values (default 1e-8..1, 9 points)")
        ->delimiter(',');
    fit_cmd->add_option("--tau-grid", tau_grid, "Comma-separated sparsity values (default 1e-6..10, 15 points)")
        ->delimiter(',');
    fit_cmd->add_option("--s-domain", s_domain, "lo,hi of the predictor domain (default: observed range)")
        ->delimiter(',');
    fit_cmd->add_option("--t-domain", t_domain, "lo,hi of the exogenous variable (default: observed range)")
        ->delimiter(',');
    fit_cmd->add_option("--seed", fopt.seed, "Recorded in fit.json; the fit itself is deterministic")
        ->capture_default_str();
    fit_cmd->add_option("--out", fit_out, "Output directory")->capture_default_str();
    fit_cmd->add_flag("--bic-logn", fopt.bic_logn, "Use log(n) instead of 2 as the BIC edf multiplier");
    fit_cmd->add_option("--threads", fopt.threads, "Worker threads for the tuning grid")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run the Monte Carlo comparison study");
    sim::SimConfig sim_config;
    std::string sim_out = "tvcflm_sim";
    sim_cmd->add_option("--n", sim_config.n, "Subjects per replication")
        ->capture_default_str()
        ->check(CLI::Range(10, 1000000));
    sim_cmd->add_option("--r", sim_config.noise_ratio, "Response noise sd relative to the signal range")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 10.0));
    sim_cmd->add_option("--reps", sim_config.replications, "Replications")
        ->capture_default_str()
        ->check(CLI::Range(1, 1000000));
    sim_cmd->add_option("--seed", sim_config.seed, "Master seed")->capture_default_str();
    sim_cmd->add_option("--s0", sim_config.truncation, "Truncation point of the true surface")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--threads", sim_config.threads, "Worker threads (results do not depend on this)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sim_cmd->add_option("--out", sim_out, "Output directory")->capture_default_str();

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "Predict responses from a saved fit");
    std::string fit_path;
    std::string pred_predictors;
    std::string targets_path;
    std::vector<double> t_values;
    std::string pred_out = "predictions.csv";
    pred_cmd->add_option("--fit", fit_path, "fit.json written by 'tvcflm fit'")->required();
    pred_cmd->add_option("--predictors", pred_predictors, "Long-format CSV with columns subject_id,s,x")
        ->required();
    auto* targets_opt =
        pred_cmd->add_option("--targets", targets_path, "CSV with columns subject_id,t naming the pairs to predict");
    auto* t_opt = pred_cmd->add_option("--t", t_values, "t values applied to every subject (comma-separated)")
                      ->delimiter(',');
    targets_opt->excludes(t_opt);
    pred_cmd->add_option("--out", pred_out, "Output CSV")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (fit_cmd->parsed()) {
            fopt.kappa_grid = kappa_grid;
            fopt.tau_grid = tau_grid;
            if (!s_domain.empty()) fopt.s_domain = domain_option(s_domain, "--s-domain");
            if (!t_domain.empty()) fopt.t_domain = domain_option(t_domain, "--t-domain");
            const Dataset data = read_dataset(predictors, responses);
            const FitOutput result = fit_dataset(data, fopt);
            write_fit_outputs(result, fit_out);
            const FitResult& f = result.fit;
            out << "kappa=" << f.kappa << " tau=" << f.tau << " edf=" << f.edf << " bic=" << f.bic
                << " active=" << f.active.size() << "\n";
            out << "wrote " << (std::filesystem::path(fit_out) / "fit.json").string() << ", surface.csv, selection.csv\n";
        } else if (sim_cmd->parsed()) {
            sim::validate(sim_config);
            const sim::SimResult result = sim::run_study(sim_config);
            sim::write_study_outputs(result, sim_out);
            out << sim::tables_csv(result);
            out << "failures=" << result.failures << " of " << sim_config.replications << "\n";
        } else if (pred_cmd->parsed()) {
            const StoredFit stored = parse_fit_json(io::read_file(fit_path), fit_path);
            const std::vector<LongitudinalRecord> records = read_predictors(pred_predictors);
            std::vector<Target> targets;
            if (!targets_path.empty()) {
                targets = read_targets(targets_path);
            } else if (!t_values.empty()) {
                for (const auto& rec : records) {
                    for (const double t : t_values) targets.push_back(Target{rec.id, t});
                }
            } else {
                throw InputError("predict needs --targets or --t");
            }
            const std::vector<double> yhat = predict_targets(stored, records, targets);
            std::ostringstream csv;
            csv << "subject_id,t,y_hat\n";
            for (std::size_t i = 0; i < targets.size(); ++i) {
                csv << io::csv_field(targets[i].id) << ',' << io::format_double(targets[i].t) << ','
                    << io::format_double(yhat[i]) << '\n';
            }
            io::write_file(pred_out, csv.str());
            out << "wrote " << targets.size() << " predictions to " << pred_out << "\n";
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

}  // namespace tvcflm::cli
