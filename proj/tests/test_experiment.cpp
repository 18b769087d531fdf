#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "vasigp/csv.hpp"
#include "vasigp/experiment.hpp"
#include "vasigp/rng.hpp"

using namespace vasigp;
namespace fs = std::filesystem;

namespace {

harness::ExperimentConfig small_config() {
    harness::ExperimentConfig config;
    config.model_kind = opt::ModelKind::Single;
    config.true_params.factor1 = SingleCurveParams{0.5, 2.0, 0.1, 0.2};
    config.n_runs = 6;
    config.grid = harness::GridSpec{20, 0.05, 1.0};
    config.optimizer.method = opt::Method::CG;
    config.optimizer.max_iters = 40;
    config.optimizer.grad_tol = 1e-3;
    config.master_seed = 2024;
    config.threads = 1;
    config.hist_bins = 10;
    return config;
}

opt::CalibrationResult fake_result(double value) {
    opt::CalibrationResult r;
    r.kind = opt::ModelKind::Single;
    r.params = Eigen::VectorXd::Constant(4, value);
    r.final_nll = -value;
    r.converged = true;
    return r;
}

}  // namespace

TEST_CASE("summarize: identical results collapse to one occupied bin") {
    std::vector<opt::CalibrationResult> results(5, fake_result(0.25));
    const auto summary = harness::summarize(opt::ModelKind::Single, results, 50);
    for (std::size_t p = 0; p < 4; ++p) {
        CHECK(summary.converged.mean[p] == 0.25);
        CHECK(summary.converged.stdev[p] == 0.0);
    }
    for (const auto& [name, hist] : summary.histograms) {
        CHECK(hist.counts.size() == 50);
        std::size_t occupied = 0, total = 0;
        for (std::size_t c : hist.counts) {
            if (c > 0) ++occupied;
            total += c;
        }
        CHECK(occupied == 1);
        CHECK(total == 5);
        for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
            CHECK(hist.edges[b] < hist.edges[b + 1]);
        }
    }
}

TEST_CASE("summarize: two values over two bins") {
    std::vector<opt::CalibrationResult> results = {fake_result(0.0), fake_result(1.0)};
    const auto summary = harness::summarize(opt::ModelKind::Single, results, 2);
    const auto& hist = summary.histograms.at("r0");
    REQUIRE(hist.edges.size() == 3);
    CHECK(hist.edges[0] == 0.0);
    CHECK(hist.edges[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hist.edges[2] == 1.0);
    REQUIRE(hist.counts.size() == 2);
    CHECK(hist.counts[0] == 1);
    CHECK(hist.counts[1] == 1);
}

TEST_CASE("summarize: mean and stdev match a two-pass oracle") {
    std::mt19937_64 engine(6);
    std::uniform_real_distribution<double> value_dist(-2.0, 7.0);
    std::vector<opt::CalibrationResult> results;
    std::vector<double> column;
    for (int i = 0; i < 10000; ++i) {
        const double v = value_dist(engine);
        results.push_back(fake_result(v));
        column.push_back(v);
    }
    const auto summary = harness::summarize(opt::ModelKind::Single, results, 50);
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(column.size());
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double stdev = std::sqrt(ss / static_cast<double>(column.size() - 1));
    CHECK(std::abs(summary.all.mean[0] - mean) < 1e-10);
    CHECK(std::abs(summary.all.stdev[0] - stdev) < 1e-10);
}

TEST_CASE("experiment results are independent of the worker count") {
    auto config = small_config();
    std::vector<opt::CalibrationResult> raw1, raw8;
    config.threads = 1;
    const auto s1 = harness::run_experiment(config, &raw1);
    config.threads = 8;
    const auto s8 = harness::run_experiment(config, &raw8);
    CHECK(harness::summary_to_json(s1) == harness::summary_to_json(s8));
    REQUIRE(raw1.size() == raw8.size());
    for (std::size_t i = 0; i < raw1.size(); ++i) {
        CHECK(raw1[i].params == raw8[i].params);
        CHECK(raw1[i].final_nll == raw8[i].final_nll);
    }
}

TEST_CASE("single runs can be replayed in isolation") {
    auto config = small_config();
    config.threads = 2;
    std::vector<opt::CalibrationResult> raw;
    harness::run_experiment(config, &raw);
    for (std::size_t i : {std::size_t{0}, std::size_t{3}, std::size_t{5}}) {
        const auto replay = harness::run_single(config, i);
        CHECK(replay.params == raw[i].params);
        CHECK(replay.final_nll == raw[i].final_nll);
        CHECK(replay.iterations == raw[i].iterations);
    }
}

TEST_CASE("experiment writes its output files") {
    auto config = small_config();
    const auto dir = fs::temp_directory_path() / "vasigp_experiment_test";
    fs::remove_all(dir);
    config.output_dir = dir.string();
    const auto summary = harness::run_experiment(config);
    CHECK(fs::exists(dir / "params.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    for (const auto& name : summary.param_names) {
        CHECK(fs::exists(dir / ("hist_" + name + ".csv")));
    }
    std::size_t rows = 0;
    std::ifstream in(dir / "params.csv");
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == config.n_runs + 1);
    fs::remove_all(dir);
}

TEST_CASE("series csv round-trips exactly") {
    const auto grid = TimeGrid::regular(40, 0.025, 1.0);
    rng::Rng rng(17);
    MultiCurveParams p;
    p.factor1 = SingleCurveParams{0.5, 2.0, 0.1, 0.2};
    p.factor2 = SingleCurveParams{0.7, 0.5, 0.03, 0.8};
    const auto series = sim::simulate_log_bonds(p, {CurveId::Zero, CurveId::Delta}, grid, rng);

    const auto path = fs::temp_directory_path() / "vasigp_series_roundtrip.csv";
    io::write_series_csv(path.string(), series);
    const auto back = io::read_series_csv(path.string(), 1.0);
    REQUIRE(back.grid.size() == series.grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(back.grid.points[i] == series.grid.points[i]);
        CHECK(back.curves.at(CurveId::Zero)[i] == series.curves.at(CurveId::Zero)[i]);
        CHECK(back.curves.at(CurveId::Delta)[i] == series.curves.at(CurveId::Delta)[i]);
    }
    fs::remove(path);
}

TEST_CASE("csv parse errors carry line numbers") {
    const auto path = fs::temp_directory_path() / "vasigp_bad.csv";
    {
        std::ofstream out(path);
        out << "t,logP_zero\n0.1,-0.2\n0.2,oops\n";
    }
    try {
        io::read_series_csv(path.string(), 1.0);
        FAIL("expected ParseError");
    } catch (const io::ParseError& e) {
        CHECK(e.line() == 3);
    }
    fs::remove(path);
}

TEST_CASE("params json round-trips") {
    io::ParamsFile pf;
    pf.multi = true;
    pf.params.factor1 = SingleCurveParams{0.51, 2.02, 0.13, 0.24};
    pf.params.factor2 = SingleCurveParams{0.75, 0.55, 0.035, 0.85};
    pf.params.rho = 0.25;
    const auto text = io::params_to_json(pf);
    const auto back = io::params_from_json_text(text);
    CHECK(back.multi);
    CHECK(back.params.factor1.r0 == pf.params.factor1.r0);
    CHECK(back.params.factor2.sigma == pf.params.factor2.sigma);
    CHECK(back.params.rho == pf.params.rho);
}

TEST_CASE("config validation rejects inconsistent model/curves") {
    auto config = small_config();
    config.curves = {CurveId::Zero, CurveId::Delta};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("band csv round-trips") {
    std::vector<io::BandRow> rows = {{0.1, CurveId::Zero, -0.2, -0.3, -0.1},
                                     {0.2, CurveId::Delta, -0.15, -0.25, -0.05}};
    const auto path = fs::temp_directory_path() / "vasigp_band_roundtrip.csv";
    io::write_band_csv(path.string(), rows);
    const auto back = io::read_band_csv(path.string());
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].t == rows[i].t);
        CHECK(back[i].curve == rows[i].curve);
        CHECK(back[i].mean == rows[i].mean);
        CHECK(back[i].lower == rows[i].lower);
        CHECK(back[i].upper == rows[i].upper);
    }
    fs::remove(path);
}

TEST_CASE("two future observations tighten nearby prediction variances") {
    // half-year of daily data observed, then two extra points known ahead
    const SingleCurveParams p{0.5, 2.0, 0.1, 0.2};
    const auto grid = TimeGrid::regular(250, 1.0 / 250.0, 1.0);
    rng::Rng rng(2718);
    const auto series = sim::simulate_log_bonds(p, {CurveId::Zero}, grid, rng);

    const auto observed = [&](const std::vector<std::size_t>& extra) {
        gpr::ObservationSet obs;
        obs.grid.maturity = grid.maturity;
        auto& vals = obs.values[CurveId::Zero];
        for (std::size_t i = 0; i < 125; ++i) {
            obs.grid.points.push_back(grid.points[i]);
            vals.push_back(series.curves.at(CurveId::Zero)[i]);
        }
        for (std::size_t i : extra) {
            obs.grid.points.push_back(grid.points[i]);
            vals.push_back(series.curves.at(CurveId::Zero)[i]);
        }
        return obs;
    };
    gpr::PredictionRequest req;
    for (std::size_t i = 170; i < 190; ++i) req.targets.push_back({grid.points[i], CurveId::Zero});

    const auto without = gpr::posterior(p, observed({}), req);
    const auto with = gpr::posterior(p, observed({175, 185}), req);
    for (Eigen::Index i = 0; i < with.mean.size(); ++i) {
        CHECK(with.cov(i, i) < without.cov(i, i));
    }
}
