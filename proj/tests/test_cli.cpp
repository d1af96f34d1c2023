#include "support.hpp"

#include "tvcflm/cli.hpp"
#include "tvcflm/errors.hpp"
#include "tvcflm/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tvcflm;
namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"tvcflm"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    Invocation r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tvcflm_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

// Noiseless data whose predictor curves and coefficient surface lie in the model
// bases (m1 = 10 cubic in s, m2 = 4 cubic in t), with mean-zero coefficient vectors
// so the centered model is exact.
struct Synthetic {
    Eigen::MatrixXd truth;
    std::vector<Eigen::VectorXd> w;
    std::vector<double> t;
    std::vector<double> y;
};

Synthetic write_synthetic(const fs::path& dir, int n, int points, std::uint64_t seed, int m1 = 10, int m2 = 4) {
    std::mt19937_64 rng(seed);
    const BasisSystem s_basis = make_basis({0.0, 1.0}, m1, 4);
    const BasisSystem t_basis = make_basis({0.0, 1.0}, m2, std::min(4, m2));
    Synthetic syn;
    syn.truth = test::normal_matrix(m1, m2, rng);
    syn.truth.bottomRows(m1 / 3).setZero();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m1);
    for (int i = 0; i < n; ++i) {
        syn.w.push_back(test::normal_vector(m1, rng));
        mean += syn.w.back() / n;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto s = test::dense_grid(0.0, 1.0, points);
    std::ostringstream pred;
    std::ostringstream resp;
    pred << "subject_id,s,x\n";
    resp << "subject_id,t,y\n";
    for (int i = 0; i < n; ++i) {
        syn.w[i] -= mean;
        double t = u(rng);
        if (i == 0) t = 0.0;
        if (i == 1) t = 1.0;
        syn.t.push_back(t);
        syn.y.push_back(build_design_row(syn.w[i], t, s_basis.gram0(), t_basis).dot(vec(syn.truth)) + 2.0);
        for (const double sa : s) pred << "id" << i << ',' << io::format_double(sa) << ',' << io::format_double(s_basis.eval(sa).dot(syn.w[i])) << '\n';
        resp << "id" << i << ',' << io::format_double(t) << ',' << io::format_double(syn.y.back()) << '\n';
    }
    write_text(dir / "pred.csv", pred.str());
    write_text(dir / "resp.csv", resp.str());
    return syn;
}

std::vector<double> column_values(const io::CsvTable& table, const std::string& name) {
    const std::size_t c = table.column(name, "test");
    std::vector<double> v;
    for (std::size_t r = 0; r < table.rows.size(); ++r) v.push_back(io::parse_double(table.rows[r][c], "test", r));
    return v;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("schema errors exit 2 with file and line") {
    const fs::path dir = scratch_dir("schema");
    write_text(dir / "pred.csv", "subject_id,s,x\na,0,1\na,0.5,oops\na,1,2\n");
    write_text(dir / "resp.csv", "subject_id,t,y\na,0.5,1\n");
    Invocation r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string(), "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("pred.csv:3") != std::string::npos);

    write_text(dir / "pred.csv", "subject_id,s,value\na,0,1\n");
    r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("'x'") != std::string::npos);

    write_text(dir / "pred.csv", "subject_id,s,x\na,0,1\na,1,2\nb,0,1\nb,1,3\n");
    write_text(dir / "resp.csv", "subject_id,t,y\na,0.5,1\nc,0.2,1\n");
    r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("resp.csv:3") != std::string::npos);

    write_text(dir / "resp.csv", "subject_id,t,y\na,0.5,1\n");
    r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("'b'") != std::string::npos);

    write_text(dir / "resp.csv", "subject_id,t,y\na,0.5,1\nb,0.5,2\na,0.1,3\n");
    r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("duplicate") != std::string::npos);

    r = invoke({"fit", (dir / "missing.csv").string(), (dir / "resp.csv").string()});
    CHECK(r.code == 2);
    fs::remove_all(dir);
}

TEST_CASE("usage errors") {
    CHECK(invoke({"simulate", "--r", "-1"}).code == 2);
    CHECK(invoke({"simulate", "--n", "3"}).code == 2);
    CHECK(invoke({"fit"}).code == 2);
    CHECK(invoke({"nonsense"}).code == 2);
    CHECK(invoke({"predict", "--fit", "a.json", "--predictors", "p.csv", "--t", "0.5", "--targets", "t.csv"}).code == 2);
    const Invocation help = invoke({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("simulate") != std::string::npos);
    CHECK(invoke({"fit", "a.csv", "b.csv", "--gamma", "1.5"}).code == 2);
}

TEST_CASE("noiseless fit recovers the surface and predictions round-trip") {
    const fs::path dir = scratch_dir("fit");
    const Synthetic syn = write_synthetic(dir, 300, 21, 5);
    const fs::path out = dir / "out";
    const Invocation r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string(), "--m1", "10", "--m2",
                                 "4", "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    for (const char* name : {"fit.json", "surface.csv", "selection.csv"}) CHECK(fs::exists(out / name));

    // surface.csv against the true surface on the 101 x 101 grid.
    const io::CsvTable surf = io::read_csv(out / "surface.csv");
    REQUIRE(surf.rows.size() == 101 * 101);
    const BasisSystem s_basis = make_basis({0.0, 1.0}, 10, 4);
    const BasisSystem t_basis = make_basis({0.0, 1.0}, 4, 4);
    const CoefficientSurface truth{syn.truth, s_basis, t_basis};
    const auto ss = column_values(surf, "s");
    const auto ts = column_values(surf, "t");
    const auto beta = column_values(surf, "beta");
    double sq = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) sq += std::pow(beta[i] - eval_surface(truth, ss[i], ts[i]), 2);
    const double rms = std::sqrt(sq / static_cast<double>(beta.size()));
    MESSAGE("surface RMS error " << rms);
    CHECK(rms < 1e-2);

    // fit.json layout.
    const auto j = nlohmann::json::parse(io::read_file(out / "fit.json"));
    CHECK(j.at("format") == "tvcflm-fit");
    CHECK(j.at("coefficients").size() == 10);
    CHECK(j.at("truncation").size() == 4);
    CHECK(j.contains("bic"));
    CHECK(j.contains("edf"));
    const io::CsvTable sel = io::read_csv(out / "selection.csv");
    CHECK(sel.rows.size() == 9 * 15);

    // Training round trip: predictions from the saved fit equal the in-memory fitted values.
    cli::FitOptions opts;
    opts.m1 = 10;
    opts.m2 = 4;
    const cli::Dataset data = cli::read_dataset(dir / "pred.csv", dir / "resp.csv");
    const cli::FitOutput mem = cli::fit_dataset(data, opts);
    const auto samples = smooth_records(data.records, mem.fit.surface.s_basis, mem.smoothing_roughness);

    std::ostringstream targets;
    targets << "subject_id,t\n";
    for (std::size_t i = 0; i < syn.t.size(); ++i) targets << "id" << i << ',' << io::format_double(syn.t[i]) << '\n';
    write_text(dir / "targets.csv", targets.str());
    const fs::path pred_out = dir / "pred_out.csv";
    const Invocation p = invoke({"predict", "--fit", (out / "fit.json").string(), "--predictors",
                                 (dir / "pred.csv").string(), "--targets", (dir / "targets.csv").string(), "--out",
                                 pred_out.string()});
    REQUIRE_MESSAGE(p.code == 0, p.err);
    const io::CsvTable preds = io::read_csv(pred_out);
    CHECK(preds.header == std::vector<std::string>{"subject_id", "t", "y_hat"});
    const auto yhat = column_values(preds, "y_hat");
    REQUIRE(yhat.size() == samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) worst = std::max(worst, std::abs(yhat[i] - predict(mem.fit, samples[i])));
    CHECK(worst < 1e-10);

    // Library-level predict on the stored fit agrees exactly.
    const cli::StoredFit stored = cli::parse_fit_json(io::read_file(out / "fit.json"), "fit.json");
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, data.records.size() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const std::size_t i = pick(rng);
        const double t = u(rng);
        const double via_cli = cli::predict_targets(stored, data.records, {cli::Target{data.records[i].id, t}})[0];
        const Eigen::VectorXd w = smooth_curve(data.records[i], stored.fit.surface.s_basis, stored.smoothing_roughness);
        CHECK(via_cli == predict(stored.fit, FunctionalSample{data.records[i].id, w, t, 0.0}));
    }

    // --t applies every value to every subject.
    const Invocation pt = invoke({"predict", "--fit", (out / "fit.json").string(), "--predictors",
                                  (dir / "pred.csv").string(), "--t", "0.25,0.75", "--out", pred_out.string()});
    REQUIRE(pt.code == 0);
    CHECK(io::read_csv(pred_out).rows.size() == 600);

    // Out-of-domain t and unknown subjects are input errors.
    write_text(dir / "bad_targets.csv", "subject_id,t\nid0,1.5\n");
    CHECK(invoke({"predict", "--fit", (out / "fit.json").string(), "--predictors", (dir / "pred.csv").string(),
                  "--targets", (dir / "bad_targets.csv").string(), "--out", pred_out.string()})
              .code == 2);
    write_text(dir / "bad_targets.csv", "subject_id,t\nnobody,0.5\n");
    CHECK(invoke({"predict", "--fit", (out / "fit.json").string(), "--predictors", (dir / "pred.csv").string(),
                  "--targets", (dir / "bad_targets.csv").string(), "--out", pred_out.string()})
              .code == 2);

    // A zero surface predicts the training mean everywhere.
    auto zero = nlohmann::json::parse(io::read_file(out / "fit.json"));
    for (auto& row : zero["coefficients"]) {
        for (auto& v : row) v = 0.0;
    }
    write_text(dir / "zero.json", zero.dump());
    const Invocation pz = invoke({"predict", "--fit", (dir / "zero.json").string(), "--predictors",
                                  (dir / "pred.csv").string(), "--t", "0.1,0.9", "--out", pred_out.string()});
    REQUIRE(pz.code == 0);
    double y_mean = 0.0;
    for (const double y : syn.y) y_mean += y / static_cast<double>(syn.y.size());
    for (const double v : column_values(io::read_csv(pred_out), "y_hat")) CHECK(std::abs(v - y_mean) < 1e-12);

    write_text(dir / "broken.json", "{\"format\": \"other\"}");
    CHECK(invoke({"predict", "--fit", (dir / "broken.json").string(), "--predictors", (dir / "pred.csv").string(),
                  "--t", "0.5"})
              .code == 2);
    fs::remove_all(dir);
}

TEST_CASE("constant t basis through the CLI") {
    const fs::path dir = scratch_dir("flat");
    write_synthetic(dir, 80, 21, 9);
    const fs::path out = dir / "out";
    const Invocation r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string(), "--m1", "8", "--m2",
                                 "1", "--kappa-grid", "1e-6,1e-3", "--tau-grid", "1e-4,1e-2", "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto j = nlohmann::json::parse(io::read_file(out / "fit.json"));
    CHECK(j.at("t_basis").at("num_basis") == 1);
    CHECK(j.at("t_basis").at("order") == 1);
    CHECK(io::read_csv(out / "selection.csv").rows.size() == 4);
    fs::remove_all(dir);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
    const fs::path dir = scratch_dir("sim");
    const Invocation a = invoke({"simulate", "--n", "40", "--reps", "1", "--seed", "7", "--out", (dir / "a").string()});
    const Invocation b = invoke({"simulate", "--n", "40", "--reps", "1", "--seed", "7", "--out", (dir / "b").string()});
    REQUIRE_MESSAGE(a.code == 0, a.err);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        ++files;
        CHECK(io::read_file(entry.path()) == io::read_file(dir / "b" / entry.path().filename()));
    }
    CHECK(files >= 7);
    const io::CsvTable tables = io::read_csv(dir / "a" / "tables.csv");
    CHECK(tables.rows.size() == 3);
    CHECK(tables.header.size() == 8);
    fs::remove_all(dir);
}

}  // TEST_SUITE

TEST_SUITE("cli_slow") {

TEST_CASE("field-trial sized data set") {
    const fs::path dir = scratch_dir("large");
    write_synthetic(dir, 1172, 80, 21, 15, 10);
    const auto start = std::chrono::steady_clock::now();
    const Invocation r = invoke({"fit", (dir / "pred.csv").string(), (dir / "resp.csv").string(), "--threads", "4",
                                 "--out", (dir / "out").string()});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MESSAGE("1172 subjects x 80 points fitted in " << seconds << " s");
    CHECK_MESSAGE(r.code == 0, r.err);
    CHECK(seconds < 600.0);
    fs::remove_all(dir);
}

}  // TEST_SUITE
