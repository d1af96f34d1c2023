#include "tvcflm/simulate.hpp"

#include "tvcflm/errors.hpp"
#include "tvcflm/io.hpp"
#include "tvcflm/ngb_solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace tvcflm::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Rng stream_for(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

void validate(const SimConfig& c) {
    if (c.n < 2) throw InputError("simulate: n must be >= 2");
    if (c.num_points < 2) throw InputError("simulate: need >= 2 observation points");
    if (!(c.noise_ratio >= 0.0) || !std::isfinite(c.noise_ratio)) throw InputError("simulate: r must be >= 0");
    if (c.m1 < 4 || c.m2 < 1) throw InputError("simulate: need m1 >= 4 and m2 >= 1");
    if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw InputError("simulate: gamma must lie in (0, 1)");
    if (c.replications < 1) throw InputError("simulate: replications must be >= 1");
    if (!(c.truncation > 0.0)) throw InputError("simulate: truncation point must be positive");
    if (c.predictor_basis_size < 4) throw InputError("simulate: predictor basis needs >= 4 functions");
    if (c.rmse_t_points < 1 || c.surface_grid < 2) throw InputError("simulate: grids must be nonempty");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Tvcflm: return "TVCFLM";
        case Method::Tflm: return "TFLM";
        case Method::Vcflm: return "VCFLM";
    }
    return "?";
}

StudyBases make_study_bases(const SimConfig& config) {
    const Interval unit{0.0, 1.0};
    return StudyBases{make_basis(unit, config.predictor_basis_size, 4), make_basis(unit, config.m1, 4),
                      make_basis(unit, config.m2, std::min(4, config.m2))};
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    if (count > 1) out.back() = hi;
    return out;
}

GeneratedPredictor generate_predictor(const SimConfig& config, const BasisSystem& predictor_basis, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    GeneratedPredictor gen;
    gen.w.resize(predictor_basis.num_basis());
    for (Eigen::Index k = 0; k < gen.w.size(); ++k) gen.w[k] = normal(rng);

    gen.record.s = linspace(0.0, 1.0, config.num_points);
    const Eigen::VectorXd g = predictor_basis.eval_matrix(gen.record.s) * gen.w;
    const double range = g.maxCoeff() - g.minCoeff();
    const double sd = config.predictor_noise * range;
    gen.record.x.resize(gen.record.s.size());
    for (std::size_t a = 0; a < gen.record.x.size(); ++a) {
        gen.record.x[a] = g[static_cast<Eigen::Index>(a)] + sd * normal(rng);
    }
    return gen;
}

int kept_rows(const BasisSystem& s_basis, double s0) {
    int kept = 0;
    for (int k = 0; k < s_basis.num_basis(); ++k) {
        if (s_basis.support(k).second <= s0) kept = k + 1;
    }
    return kept;
}

CoefficientSurface generate_true_surface(const SimConfig& config, const StudyBases& bases, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int m1 = bases.s_basis.num_basis();
    const int m2 = bases.t_basis.num_basis();
    Eigen::MatrixXd b(m1, m2);
    for (int l = 0; l < m2; ++l) {
        for (int k = 0; k < m1; ++k) b(k, l) = normal(rng);
    }
    const int kept = kept_rows(bases.s_basis, config.truncation);
    if (kept < m1) b.bottomRows(m1 - kept).setZero();
    return CoefficientSurface{b, bases.s_basis, bases.t_basis};
}

double signal_value(const CoefficientSurface& surface, const Eigen::MatrixXd& cross, const Eigen::VectorXd& w,
                    double t) {
    return (cross.transpose() * w).dot(surface.coefficients * surface.t_basis.eval(t));
}

std::vector<double> generate_responses(std::span<const double> signals, double noise_ratio, Rng& rng) {
    if (signals.empty()) throw InputError("generate_responses: no signals");
    const auto [lo, hi] = std::minmax_element(signals.begin(), signals.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) throw NumericalError("generate_responses: signal range is zero");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = noise_ratio * range;
    std::vector<double> y(signals.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = signals[i] + sd * normal(rng);
    return y;
}

double rmse_y(std::span<const double> truth, std::span<const double> estimate) {
    if (truth.size() != estimate.size() || truth.empty()) throw InputError("rmse_y: lengths must match and be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
    return std::sqrt(s / static_cast<double>(truth.size()));
}

double rmse_beta(const CoefficientSurface& truth, const CoefficientSurface& estimate,
                 std::span<const double> s_points, std::span<const double> t_points) {
    if (s_points.empty() || t_points.empty()) throw InputError("rmse_beta: grids must be nonempty");
    const Eigen::MatrixXd diff =
        eval_surface_grid(truth, s_points, t_points) - eval_surface_grid(estimate, s_points, t_points);
    return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

SimDataset generate_dataset(const SimConfig& config, const StudyBases& bases, const CoefficientSurface& truth,
                            Rng& rng) {
    const Eigen::MatrixXd cross = cross_gram(bases.predictor, bases.s_basis);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    SimDataset data;
    data.records.reserve(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        GeneratedPredictor gen = generate_predictor(config, bases.predictor, rng);
        gen.record.id = std::to_string(i + 1);
        gen.record.t = uniform(rng);
        data.signal.push_back(signal_value(truth, cross, gen.w, gen.record.t));
        data.true_w.push_back(std::move(gen.w));
        data.records.push_back(std::move(gen.record));
    }
    const std::vector<double> y = generate_responses(data.signal, config.noise_ratio, rng);
    for (std::size_t i = 0; i < y.size(); ++i) data.records[i].y = y[i];
    return data;
}

ReplicationResult run_replication(const SimConfig& config, const StudyBases& bases, const CoefficientSurface& truth,
                                  const SimDataset& data) {
    ReplicationResult rep;
    try {
        const RoughnessChoice rough =
            select_roughness_gcv(data.records, bases.s_basis, default_roughness_grid());
        rep.smoothing_roughness = rough.roughness;
        const std::vector<FunctionalSample> samples = smooth_records(data.records, bases.s_basis, rough.roughness);
        const CenteredData centered = center_dataset(samples);

        const BasisSystem constant_t = make_basis(Interval{0.0, 1.0}, 1, 1);
        const DesignMatrix varying = build_design(centered, bases.s_basis, bases.t_basis);
        const DesignMatrix flat = build_design(centered, bases.s_basis, constant_t);

        GridOptions options;
        TuningGrid ridge_grid = config.grid;
        ridge_grid.taus = {0.0};

        const std::vector<double> s_points = linspace(0.0, 1.0, config.num_points);
        const std::vector<double> t_points = linspace(0.0, 1.0, config.rmse_t_points);
        const std::vector<double> grid_points = linspace(0.0, 1.0, config.surface_grid);

        for (const Method m : kMethods) {
            const SelectionResult sel = m == Method::Tvcflm ? grid_search(varying, config.grid, options)
                                        : m == Method::Tflm ? grid_search(flat, config.grid, options)
                                                            : grid_search(varying, ridge_grid, options);
            const FitResult& fit = sel.best;
            std::vector<double> fitted(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) fitted[i] = predict(fit, samples[i]);

            MethodOutcome& out = rep.methods[static_cast<std::size_t>(m)];
            out.rmse_y = rmse_y(data.signal, fitted);
            out.rmse_beta = rmse_beta(truth, fit.surface, s_points, t_points);
            out.kappa = fit.kappa;
            out.tau = fit.tau;
            out.truncation = fit.truncation;
            out.surface_grid = eval_surface_grid(fit.surface, grid_points, grid_points);
        }
        rep.ok = true;
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.error = e.what();
    }
    return rep;
}

SimResult run_study(const SimConfig& config, const std::function<void(int, int)>& progress) {
    validate(config);
    const StudyBases bases = make_study_bases(config);

    SimResult result;
    result.config = config;
    {
        Rng truth_rng = stream_for(config.seed, ~std::uint64_t{0});
        result.truth = generate_true_surface(config, bases, truth_rng);
    }
    result.grid_points = linspace(0.0, 1.0, config.surface_grid);
    result.true_grid = eval_surface_grid(result.truth, result.grid_points, result.grid_points);
    result.replications.resize(static_cast<std::size_t>(config.replications));

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex progress_mutex;
    auto worker = [&]() {
        for (int r = next++; r < config.replications; r = next++) {
            ReplicationResult rep;
            try {
                Rng rng = stream_for(config.seed, static_cast<std::uint64_t>(r));
                const SimDataset data = generate_dataset(config, bases, result.truth, rng);
                rep = run_replication(config, bases, result.truth, data);
            } catch (const std::exception& e) {
                rep.ok = false;
                rep.error = e.what();
            }
            result.replications[static_cast<std::size_t>(r)] = std::move(rep);
            const int finished = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(finished, config.replications);
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.replications)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<const ReplicationResult*> ok;
    for (const auto& rep : result.replications) {
        if (rep.ok) {
            ok.push_back(&rep);
        } else {
            ++result.failures;
        }
    }
    if (result.failures * 10 > config.replications) {
        std::string first;
        for (const auto& rep : result.replications) {
            if (!rep.ok) {
                first = rep.error;
                break;
            }
        }
        throw NumericalError("run_study: " + std::to_string(result.failures) + " of " +
                             std::to_string(config.replications) + " replications failed (first: " + first + ")");
    }

    const auto g = static_cast<Eigen::Index>(config.surface_grid);
    for (const Method m : kMethods) {
        const auto mi = static_cast<std::size_t>(m);
        std::vector<double> ys;
        std::vector<double> bs;
        for (const auto* rep : ok) {
            ys.push_back(rep->methods[mi].rmse_y);
            bs.push_back(rep->methods[mi].rmse_beta);
        }
        MethodSummary& s = result.summary[mi];
        s.rmse_y_mean = mean_of(ys);
        s.rmse_y_sd = sd_of(ys);
        s.rmse_beta_mean = mean_of(bs);
        s.rmse_beta_sd = sd_of(bs);
        s.median_surface = Eigen::MatrixXd::Zero(g, g);
        std::vector<double> cell(ok.size());
        for (Eigen::Index i = 0; i < g; ++i) {
            for (Eigen::Index j = 0; j < g; ++j) {
                for (std::size_t r = 0; r < ok.size(); ++r) cell[r] = ok[r]->methods[mi].surface_grid(i, j);
                s.median_surface(i, j) = median_of(cell);
            }
        }
    }
    return result;
}

std::string tables_csv(const SimResult& result) {
    std::ostringstream out;
    out << "method,n,r,replications,rmse_y_mean,rmse_y_sd,rmse_beta_mean,rmse_beta_sd\n";
    const int ok = result.config.replications - result.failures;
    for (const Method m : kMethods) {
        const MethodSummary& s = result.summary[static_cast<std::size_t>(m)];
        out << method_name(m) << ',' << result.config.n << ',' << io::format_double(result.config.noise_ratio) << ','
            << ok << ',' << io::format_double(s.rmse_y_mean) << ',' << io::format_double(s.rmse_y_sd) << ','
            << io::format_double(s.rmse_beta_mean) << ',' << io::format_double(s.rmse_beta_sd) << '\n';
    }
    return out.str();
}

void write_study_outputs(const SimResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::write_file(dir / "tables.csv", tables_csv(result));

    std::ostringstream reps;
    reps << "replication,method,ok,rmse_y,rmse_beta,kappa,tau\n";
    for (std::size_t r = 0; r < result.replications.size(); ++r) {
        const auto& rep = result.replications[r];
        for (const Method m : kMethods) {
            reps << r + 1 << ',' << method_name(m) << ',' << (rep.ok ? "true" : "false");
            if (rep.ok) {
                const auto& o = rep.methods[static_cast<std::size_t>(m)];
                reps << ',' << io::format_double(o.rmse_y) << ',' << io::format_double(o.rmse_beta) << ','
                     << io::format_double(o.kappa) << ',' << io::format_double(o.tau) << '\n';
            } else {
                reps << ",NA,NA,NA,NA\n";
            }
        }
    }
    io::write_file(dir / "replications.csv", reps.str());

    for (const Method m : kMethods) {
        std::string name = method_name(m);
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        io::write_file(dir / ("median_surface_" + name + ".csv"),
                       io::surface_long_csv(result.grid_points, result.grid_points,
                                        result.summary[static_cast<std::size_t>(m)].median_surface));
    }
    io::write_file(dir / "true_surface.csv", io::surface_long_csv(result.grid_points, result.grid_points, result.true_grid));

    const SimConfig& c = result.config;
    nlohmann::ordered_json cfg;
    cfg["n"] = c.n;
    cfg["num_points"] = c.num_points;
    cfg["r"] = c.noise_ratio;
    cfg["m1"] = c.m1;
    cfg["m2"] = c.m2;
    cfg["gamma"] = c.gamma;
    cfg["replications"] = c.replications;
    cfg["truncation_point"] = c.truncation;
    cfg["seed"] = c.seed;
    cfg["predictor_basis_size"] = c.predictor_basis_size;
    cfg["predictor_noise"] = c.predictor_noise;
    cfg["rmse_t_points"] = c.rmse_t_points;
    cfg["surface_grid"] = c.surface_grid;
    cfg["kappa_grid"] = c.grid.kappas;
    cfg["tau_grid"] = c.grid.taus;
    cfg["failures"] = result.failures;
    io::write_file(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace tvcflm::sim
