#include "support.hpp"

#include "tvcflm/errors.hpp"
#include "tvcflm/io.hpp"
#include "tvcflm/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace tvcflm;
using namespace tvcflm::sim;

namespace {

SimConfig small_config() {
    SimConfig c;
    c.n = 60;
    c.replications = 2;
    c.grid.kappas = {1e-6, 1e-3};
    c.grid.taus = {1e-5, 1e-3, 1e-1};
    c.surface_grid = 11;
    return c;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("streams are reproducible and distinct") {
    Rng a = stream_for(7, 3);
    Rng b = stream_for(7, 3);
    Rng c = stream_for(7, 4);
    Rng d = stream_for(8, 3);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("predictor generation is deterministic") {
    const SimConfig config;
    const StudyBases bases = make_study_bases(config);
    Rng r1 = stream_for(11, 0);
    Rng r2 = stream_for(11, 0);
    const GeneratedPredictor a = generate_predictor(config, bases.predictor, r1);
    const GeneratedPredictor b = generate_predictor(config, bases.predictor, r2);
    CHECK(a.record.x == b.record.x);
    CHECK(a.w == b.w);
    CHECK(a.record.s.size() == 21);
    CHECK(a.w.size() == 10);
    CHECK(bases.predictor.order() == 4);
}

TEST_CASE("predictor noise is a tenth of each curve's range") {
    const SimConfig config;
    const StudyBases bases = make_study_bases(config);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng = stream_for(seed, 0);
        Rng replay = rng;
        const GeneratedPredictor gen = generate_predictor(config, bases.predictor, rng);

        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd w(10);
        for (Eigen::Index k = 0; k < 10; ++k) w[k] = normal(replay);
        CHECK(w == gen.w);
        Eigen::VectorXd g(21);
        for (int a = 0; a < 21; ++a) g[a] = bases.predictor.eval(gen.record.s[static_cast<std::size_t>(a)]).dot(w);
        const double range = g.maxCoeff() - g.minCoeff();
        for (int a = 0; a < 21; ++a) {
            const double e = normal(replay);
            CHECK(std::abs(gen.record.x[static_cast<std::size_t>(a)] - g[a] - 0.1 * range * e) < 1e-12);
        }
    }
}

TEST_CASE("midpoint variance matches the coefficient expansion") {
    SimConfig config;
    const StudyBases bases = make_study_bases(config);
    Rng rng = stream_for(3, 0);
    const int draws = 10000;
    const std::size_t mid = 10;  // s = 0.5
    double sum = 0.0;
    double sum_sq = 0.0;
    double noise_var = 0.0;
    for (int i = 0; i < draws; ++i) {
        const GeneratedPredictor gen = generate_predictor(config, bases.predictor, rng);
        const double x = gen.record.x[mid];
        sum += x;
        sum_sq += x * x;
        const Eigen::VectorXd g = bases.predictor.eval_matrix(gen.record.s) * gen.w;
        noise_var += std::pow(0.1 * (g.maxCoeff() - g.minCoeff()), 2);
    }
    const double mean = sum / draws;
    const double sample_var = sum_sq / draws - mean * mean;
    const double phi_sq = bases.predictor.eval(0.5).squaredNorm();
    const double expected = phi_sq + noise_var / draws;
    CHECK(std::abs(sample_var - expected) < 0.1 * expected);
}

TEST_CASE("true surface truncation") {
    SimConfig config;
    const StudyBases bases = make_study_bases(config);

    // Rows whose support [xi_k, xi_{k+4}] ends at or before 0.6: the cubic basis with
    // 21 functions has breakpoints j/18, and xi_{k+4} = (k + 1)/18 for k < 17.
    int expected = 0;
    for (int k = 0; k < 21; ++k) {
        const double right = std::min(1.0, (k + 1) / 18.0);
        if (right <= 0.6 + 1e-12) expected = k + 1;
    }
    CHECK(expected == 10);
    CHECK(kept_rows(bases.s_basis, 0.6) == expected);

    Rng rng = stream_for(5, 0);
    const CoefficientSurface truth = generate_true_surface(config, bases, rng);
    CHECK(truth.coefficients.bottomRows(11).isZero(0.0));
    CHECK(truth.coefficients.topRows(10).cwiseAbs().minCoeff() > 0.0);
    const auto s_beyond = test::dense_grid(0.6, 1.0, 41);
    const auto t_all = test::dense_grid(0.0, 1.0, 21);
    CHECK(eval_surface_grid(truth, s_beyond, t_all).isZero(0.0));

    SimConfig whole = config;
    whole.truncation = 1.0;
    Rng rng2 = stream_for(5, 0);
    CHECK(generate_true_surface(whole, bases, rng2).coefficients.cwiseAbs().minCoeff() > 0.0);
    CHECK(kept_rows(bases.s_basis, 1.0) == 21);
}

TEST_CASE("signal agrees with dense quadrature") {
    SimConfig config;
    const StudyBases bases = make_study_bases(config);
    Rng rng = stream_for(9, 0);
    const CoefficientSurface truth = generate_true_surface(config, bases, rng);
    const Eigen::MatrixXd cross = cross_gram(bases.predictor, bases.s_basis);
    const auto s = test::dense_grid(0.0, 1.0, 20001);
    const Eigen::VectorXd weights = test::trapezoid_weights(s);
    for (int i = 0; i < 5; ++i) {
        const GeneratedPredictor gen = generate_predictor(config, bases.predictor, rng);
        const double t = 0.2 * i + 0.05;
        double dense = 0.0;
        for (std::size_t a = 0; a < s.size(); ++a) {
            dense += weights[static_cast<Eigen::Index>(a)] * bases.predictor.eval(s[a]).dot(gen.w) *
                     eval_surface(truth, s[a], t);
        }
        CHECK(std::abs(signal_value(truth, cross, gen.w, t) - dense) < 1e-6);
    }
}

TEST_CASE("responses") {
    const std::vector<double> f{1.0, 3.0, -2.0};
    Rng rng = stream_for(1, 0);
    CHECK(generate_responses(f, 0.0, rng) == f);
    CHECK_THROWS_AS(generate_responses(std::vector<double>{2.0, 2.0}, 0.1, rng), NumericalError);

    Rng replay = stream_for(2, 0);
    Rng rng2 = replay;
    const std::vector<double> y = generate_responses(f, 0.3, rng2);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(y[i] - f[i] - 0.3 * 5.0 * normal(replay)) < 1e-14);

    // A zero surface has a zero signal, so the response range is degenerate.
    SimConfig config = small_config();
    const StudyBases bases = make_study_bases(config);
    const CoefficientSurface zero{Eigen::MatrixXd::Zero(21, 8), bases.s_basis, bases.t_basis};
    Rng rng3 = stream_for(3, 0);
    CHECK_THROWS_AS(generate_dataset(config, bases, zero, rng3), NumericalError);
}

TEST_CASE("rmse helpers") {
    const std::vector<double> a{0.0, 0.0};
    const std::vector<double> b{3.0, 4.0};
    CHECK(rmse_y(a, a) == 0.0);
    CHECK(rmse_y(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(rmse_y(std::vector<double>{1.0, 5.0}, std::vector<double>{2.0, 3.0}) ==
          rmse_y(std::vector<double>{5.0, 1.0}, std::vector<double>{3.0, 2.0}));
    CHECK_THROWS_AS(rmse_y(a, std::vector<double>{1.0}), InputError);

    const BasisSystem s_basis = make_basis({0.0, 1.0}, 6, 4);
    const BasisSystem t_basis = make_basis({0.0, 1.0}, 3, 3);
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd m = test::normal_matrix(6, 3, rng);
    const CoefficientSurface s1{m, s_basis, t_basis};
    // The B-spline partition of unity makes a constant coefficient matrix a constant surface.
    const CoefficientSurface s2{m.array() + 0.25, s_basis, t_basis};
    const auto grid = linspace(0.0, 1.0, 21);
    CHECK(rmse_beta(s1, s1, grid, grid) == 0.0);
    CHECK(rmse_beta(s1, s2, grid, grid) == doctest::Approx(0.25).epsilon(1e-12));

    // 2 x 2 hand computation: differences e(s, t) at the corners.
    const std::vector<double> corners{0.0, 1.0};
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 3);
    d(0, 0) = 1.0;  // 1 at (0, 0), 0 elsewhere
    d(5, 2) = 2.0;  // 2 at (1, 1)
    const CoefficientSurface s3{m + d, s_basis, t_basis};
    CHECK(rmse_beta(s1, s3, corners, corners) == doctest::Approx(std::sqrt(5.0 / 4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(rmse_beta(s1, s3, std::vector<double>{}, corners), InputError);
}

TEST_CASE("config validation") {
    SimConfig c;
    c.noise_ratio = -1.0;
    CHECK_THROWS_AS(validate(c), InputError);
    c = SimConfig{};
    c.truncation = 0.0;
    CHECK_THROWS_AS(validate(c), InputError);
    c = SimConfig{};
    c.n = 0;
    CHECK_THROWS_AS(validate(c), InputError);
    c = SimConfig{};
    c.replications = 0;
    CHECK_THROWS_AS(validate(c), InputError);
    CHECK_NOTHROW(validate(SimConfig{}));
}

TEST_CASE("noiseless replication recovers the signal") {
    SimConfig config;
    config.noise_ratio = 0.0;
    config.predictor_noise = 0.0;
    const StudyBases bases = make_study_bases(config);
    Rng truth_rng = stream_for(1, ~std::uint64_t{0});
    const CoefficientSurface truth = generate_true_surface(config, bases, truth_rng);
    Rng rng = stream_for(1, 0);
    const SimDataset data = generate_dataset(config, bases, truth, rng);
    const ReplicationResult rep = run_replication(config, bases, truth, data);
    REQUIRE(rep.ok);
    const MethodOutcome& tv = rep.methods[static_cast<std::size_t>(Method::Tvcflm)];
    MESSAGE("noiseless TVCFLM rmse_y " << tv.rmse_y << ", rmse_beta " << tv.rmse_beta);
    CHECK(tv.rmse_y < 1e-2);
}

TEST_CASE("studies are independent of the worker count") {
    SimConfig config = small_config();
    config.threads = 1;
    const SimResult a = run_study(config);
    config.threads = 2;
    const SimResult b = run_study(config);
    CHECK(tables_csv(a) == tables_csv(b));
    REQUIRE(a.failures == 0);
    for (std::size_t r = 0; r < a.replications.size(); ++r) {
        for (const Method m : kMethods) {
            const auto mi = static_cast<std::size_t>(m);
            CHECK(a.replications[r].methods[mi].rmse_y == b.replications[r].methods[mi].rmse_y);
            CHECK(a.replications[r].methods[mi].surface_grid == b.replications[r].methods[mi].surface_grid);
        }
    }
    CHECK(a.summary[0].median_surface.rows() == 11);
}

TEST_CASE("study outputs") {
    SimConfig config = small_config();
    config.replications = 1;
    const SimResult result = run_study(config);
    const auto dir = std::filesystem::temp_directory_path() / "tvcflm_test_study";
    std::filesystem::remove_all(dir);
    write_study_outputs(result, dir);
    for (const char* name : {"tables.csv", "replications.csv", "median_surface_tvcflm.csv", "median_surface_tflm.csv",
                             "median_surface_vcflm.csv", "true_surface.csv", "config.json"}) {
        CHECK(std::filesystem::exists(dir / name));
    }
    const io::CsvTable tables = io::read_csv(dir / "tables.csv");
    CHECK(tables.rows.size() == 3);
    const io::CsvTable surf = io::read_csv(dir / "median_surface_tvcflm.csv");
    CHECK(surf.rows.size() == 121);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
