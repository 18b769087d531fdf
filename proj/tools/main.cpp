// Command-line front end: simulate series, calibrate them, predict bands,
// run batch experiments and score predictions.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vasigp/csv.hpp"
#include "vasigp/experiment.hpp"
#include "vasigp/gpr.hpp"
#include "vasigp/metrics.hpp"
#include "vasigp/optimize.hpp"
#include "vasigp/simulate.hpp"

namespace {

using namespace vasigp;
using nlohmann::json;

struct ParamFlags {
    std::string model = "single";
    double r0 = 0.5, kappa = 2.0, theta = 0.1, sigma = 0.2;
    double r0_2 = 0.7, kappa_2 = 0.5, theta_2 = 0.03, sigma_2 = 0.8;
    double rho = 0.0;
    std::string params_file;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--model", model, "Model kind")
            ->check(CLI::IsMember({"single", "multi"}))
            ->capture_default_str();
        cmd->add_option("--r0", r0, "Initial short rate (factor 1)")->capture_default_str();
        cmd->add_option("--kappa", kappa, "Mean reversion (factor 1)")->capture_default_str();
        cmd->add_option("--theta", theta, "Long-term mean (factor 1)")->capture_default_str();
        cmd->add_option("--sigma", sigma, "Volatility (factor 1)")->capture_default_str();
        cmd->add_option("--r0-2", r0_2, "Initial rate, factor 2")->capture_default_str();
        cmd->add_option("--kappa-2", kappa_2, "Mean reversion, factor 2")->capture_default_str();
        cmd->add_option("--theta-2", theta_2, "Long-term mean, factor 2")->capture_default_str();
        cmd->add_option("--sigma-2", sigma_2, "Volatility, factor 2")->capture_default_str();
        cmd->add_option("--rho", rho, "Brownian correlation (fixed, not calibrated)")
            ->capture_default_str();
        cmd->add_option("--params", params_file, "JSON parameter file (overrides flags)");
    }

    io::ParamsFile resolve() const {
        if (!params_file.empty()) return io::read_params_json(params_file);
        io::ParamsFile pf;
        pf.multi = model == "multi";
        pf.params.factor1 = SingleCurveParams{r0, kappa, theta, sigma};
        pf.params.factor2 = pf.multi ? SingleCurveParams{r0_2, kappa_2, theta_2, sigma_2}
                                     : SingleCurveParams{0.0, 1.0, 0.0, 1.0};
        pf.params.rho = pf.multi ? rho : 0.0;
        if (pf.multi) {
            pf.params.validate();
        } else {
            pf.params.factor1.validate();
        }
        return pf;
    }
};

struct OptFlags {
    std::string method = "cg";
    int max_iters = 1000;
    double grad_tol = 1e-5;
    double lr = 0.05;
    int epochs = 700;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--method", method, "Optimizer")
            ->check(CLI::IsMember({"cg", "adam"}))
            ->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "CG iteration cap")->capture_default_str();
        cmd->add_option("--grad-tol", grad_tol, "CG gradient tolerance")->capture_default_str();
        cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Adam epochs")->capture_default_str();
    }

    opt::OptimizerConfig resolve(std::uint64_t seed) const {
        opt::OptimizerConfig cfg;
        cfg.method = method == "cg" ? opt::Method::CG : opt::Method::Adam;
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.seed = seed;
        return cfg;
    }
};

std::set<CurveId> parse_curves(const std::string& spec) {
    std::set<CurveId> curves;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) curves.insert(curve_from_string(item));
    }
    if (curves.empty()) throw std::invalid_argument("no curves requested");
    return curves;
}

gpr::ObservationSet to_observations(const sim::SimulatedSeries& series, double noise_var) {
    gpr::ObservationSet obs;
    obs.grid = series.grid;
    obs.values = series.curves;
    obs.noise_var = noise_var;
    return obs;
}

json calibration_json(const opt::CalibrationResult& result, double rho) {
    io::ParamsFile pf;
    pf.multi = result.kind == opt::ModelKind::Multi;
    if (pf.multi) {
        pf.params = result.multi_params(rho);
    } else {
        pf.params.factor1 = result.single_params();
        pf.params.factor2 = SingleCurveParams{0.0, 1.0, 0.0, 1.0};
    }
    json out;
    out["params"] = json::parse(io::params_to_json(pf));
    out["final_nll"] = result.final_nll;
    out["iterations"] = result.iterations;
    out["converged"] = result.converged;
    out["grad_norm_final"] = result.grad_norm_final;
    out["jitter_used"] = result.jitter_used;
    return out;
}

int cmd_simulate(const ParamFlags& pf, std::uint64_t seed, const std::string& out,
                 std::size_t n_points, double dt, double maturity, const std::string& curves_arg) {
    const auto params = pf.resolve();
    std::string curve_spec = curves_arg;
    if (curve_spec.empty()) curve_spec = params.multi ? "zero,delta" : "zero";
    const auto curves = parse_curves(curve_spec);
    if (n_points == 0) n_points = params.multi ? 125 : 250;
    if (dt == 0.0) dt = 1.0 / static_cast<double>(n_points);
    const auto grid = TimeGrid::regular(n_points, dt, maturity);

    rng::Rng rng(seed);
    const auto series = params.multi
                            ? sim::simulate_log_bonds(params.params, curves, grid, rng)
                            : sim::simulate_log_bonds(params.params.factor1, curves, grid, rng);
    io::write_series_csv(out, series);
    io::write_series_sidecar(out + ".json", params.params, params.multi, series);
    std::cerr << "wrote " << out << " (" << series.grid.size() << " rows) and " << out << ".json\n";
    return 0;
}

int cmd_calibrate(const ParamFlags& pf, const OptFlags& of, const std::string& series_file,
                  double maturity, double noise_var, std::uint64_t seed, const std::string& out,
                  const std::string& trace_file, const std::string& format) {
    const auto series = io::read_series_csv(series_file, maturity);
    const bool multi = pf.model == "multi" || series.curves.count(CurveId::Delta) > 0;
    const auto kind = multi ? opt::ModelKind::Multi : opt::ModelKind::Single;

    auto cfg = of.resolve(seed);
    cfg.record_trace = !trace_file.empty();
    const auto obs = to_observations(series, noise_var);

    rng::Rng rng(seed);
    const auto ranges = opt::default_init_ranges(kind);
    const Eigen::VectorXd x0 = opt::random_init(kind, ranges, rng);
    opt::NllObjective objective(obs, kind, pf.rho);
    const auto started = std::chrono::steady_clock::now();
    auto result = cfg.method == opt::Method::CG
                      ? opt::minimize_cg(objective.as_objective(), x0, cfg)
                      : opt::minimize_adam(objective.as_objective(), x0, cfg);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    objective.value(result.params);
    result.jitter_used = objective.last_jitter();
    result.kind = kind;
    result.params = opt::ParamTransform{kind}.to_constrained(result.params);

    if (!trace_file.empty()) opt::write_trace_csv(trace_file, result);
    const json j = calibration_json(result, pf.rho);
    std::string text;
    if (format == "csv") {
        std::ostringstream ss;
        ss << "key,value\n";
        const auto& names = opt::param_names(kind);
        for (std::size_t i = 0; i < names.size(); ++i) {
            ss << names[i] << ',' << io::format_double(result.params[static_cast<Eigen::Index>(i)])
               << '\n';
        }
        ss << "final_nll," << io::format_double(result.final_nll) << '\n';
        ss << "converged," << (result.converged ? 1 : 0) << '\n';
        text = ss.str();
    } else {
        text = j.dump(2) + "\n";
    }
    if (out.empty()) {
        std::cout << text;
    } else {
        io::write_text_file(out, text);
    }
    std::cerr << "calibration took " << elapsed.count() << " s, " << result.iterations
              << " iterations\n";
    return 0;
}

int cmd_predict(const ParamFlags& pf, const std::string& series_file, double maturity,
                std::size_t prefix, const std::string& targets_arg,
                const std::string& extra_obs_arg, double level, double noise_var,
                const std::string& out) {
    const auto params = pf.resolve();
    const auto series = io::read_series_csv(series_file, maturity);
    const std::size_t n = series.grid.size();
    if (prefix > n) throw std::invalid_argument("prefix exceeds series length");

    std::vector<std::size_t> obs_idx(prefix);
    std::iota(obs_idx.begin(), obs_idx.end(), std::size_t{0});
    if (!extra_obs_arg.empty()) {
        std::stringstream ss(extra_obs_arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto i = static_cast<std::size_t>(std::stoul(item));
            if (i >= n) throw std::invalid_argument("extra observation index out of range");
            if (i >= prefix) obs_idx.push_back(i);
        }
        std::sort(obs_idx.begin(), obs_idx.end());
        obs_idx.erase(std::unique(obs_idx.begin(), obs_idx.end()), obs_idx.end());
    }

    gpr::ObservationSet obs;
    obs.noise_var = noise_var;
    obs.grid.maturity = series.grid.maturity;
    for (std::size_t i : obs_idx) obs.grid.points.push_back(series.grid.points[i]);
    if (!obs_idx.empty()) {
        for (const auto& [curve, vals] : series.curves) {
            auto& v = obs.values[curve];
            for (std::size_t i : obs_idx) v.push_back(vals[i]);
        }
    }

    std::vector<double> target_times;
    if (targets_arg.empty()) {
        target_times = series.grid.points;
    } else {
        std::stringstream ss(targets_arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) target_times.push_back(std::stod(item));
        }
    }
    gpr::PredictionRequest req;
    for (const auto& [curve, vals] : series.curves) {
        for (double t : target_times) req.targets.push_back({t, curve});
    }

    const auto post = params.multi
                          ? gpr::posterior(params.params, obs, req)
                          : gpr::posterior(params.params.factor1, obs, req);
    const auto bands = gpr::confidence_band(post, level);

    std::vector<io::BandRow> rows(post.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        rows[i] = {post.labels[i].t, post.labels[i].curve, post.mean[idx], bands[i].lower,
                   bands[i].upper};
    }
    io::write_band_csv(out, rows);
    std::cerr << "wrote " << rows.size() << " band rows to " << out << "\n";
    return 0;
}

int cmd_experiment(const ParamFlags& pf, const OptFlags& of, std::size_t n_runs,
                   std::size_t n_points, double dt, double maturity, double noise_var,
                   std::uint64_t master_seed, const std::string& out_dir, int threads, int bins) {
    const auto params = pf.resolve();
    harness::ExperimentConfig config;
    config.model_kind = params.multi ? opt::ModelKind::Multi : opt::ModelKind::Single;
    config.true_params = params.params;
    config.n_runs = n_runs;
    config.grid.n_points = n_points != 0 ? n_points : (params.multi ? 125 : 250);
    config.grid.dt = dt != 0.0 ? dt : 1.0 / static_cast<double>(config.grid.n_points);
    config.grid.maturity = maturity;
    config.optimizer = of.resolve(master_seed);
    config.master_seed = master_seed;
    config.output_dir = out_dir;
    config.curves = params.multi ? std::set<CurveId>{CurveId::Zero, CurveId::Delta}
                                 : std::set<CurveId>{CurveId::Zero};
    config.noise_var = noise_var;
    config.threads = threads;
    config.hist_bins = bins;

    const auto started = std::chrono::steady_clock::now();
    const auto summary = harness::run_experiment(config);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    std::cerr << "experiment: " << n_runs << " runs in " << elapsed.count() << " s, convergence "
              << summary.convergence_rate << "\n";
    if (out_dir.empty()) std::cout << harness::summary_to_json(summary);
    return 0;
}

int cmd_metrics(const ParamFlags& pf, const std::string& series_file, double maturity,
                double train_fraction, const std::string& strategy, std::uint64_t split_seed,
                double noise_var, const std::string& out, const std::string& format) {
    const auto params = pf.resolve();
    const auto series = io::read_series_csv(series_file, maturity);
    const auto obs = to_observations(series, noise_var);

    metrics::SplitSpec spec;
    spec.train_fraction = train_fraction;
    spec.strategy = strategy == "random" ? metrics::SplitSpec::Strategy::Random
                                         : metrics::SplitSpec::Strategy::Prefix;
    spec.seed = split_seed;

    const auto report = params.multi ? metrics::evaluate(params.params, obs, spec)
                                     : metrics::evaluate(params.params.factor1, obs, spec);
    std::string text;
    if (format == "csv") {
        std::ostringstream ss;
        ss << "key,value\n";
        ss << "smse," << io::format_double(report.smse) << '\n';
        ss << "msll," << io::format_double(report.msll) << '\n';
        text = ss.str();
    } else {
        json j;
        j["smse"] = report.smse;
        j["msll"] = report.msll;
        j["residuals"] = report.residuals;
        j["predictive_variances"] = report.predictive_vars;
        text = j.dump(2) + "\n";
    }
    if (out.empty()) {
        std::cout << text;
    } else {
        io::write_text_file(out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vasicek bond-curve calibration via Gaussian process regression"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.set_config("--config", "", "INI config file (flags override config values)");

    std::uint64_t seed = 0;
    std::string out;
    std::string format = "json";
    int threads = 0;
    app.add_option("--seed", seed, "Master RNG seed")->capture_default_str();
    app.add_option("--out", out, "Output file or directory");
    app.add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate a log-bond price series");
    ParamFlags sim_pf;
    sim_pf.add_to(sim_cmd);
    std::size_t sim_n = 0;
    double sim_dt = 0.0, sim_T = 1.0;
    std::string sim_curves;
    sim_cmd->add_option("--n-points", sim_n, "Grid size (default 250 single / 125 multi)");
    sim_cmd->add_option("--dt", sim_dt, "Grid spacing in years (default 1/n)");
    sim_cmd->add_option("--maturity", sim_T, "Bond maturity in years")->capture_default_str();
    sim_cmd->add_option("--curves", sim_curves, "Comma list of curves: zero,delta");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "Fit hyper-parameters to a series");
    ParamFlags cal_pf;
    OptFlags cal_of;
    cal_pf.add_to(cal_cmd);
    cal_of.add_to(cal_cmd);
    std::string cal_series, cal_trace;
    double cal_T = 1.0, cal_noise = 0.0;
    cal_cmd->add_option("--series", cal_series, "Series CSV")->required();
    cal_cmd->add_option("--maturity", cal_T, "Bond maturity in years")->capture_default_str();
    cal_cmd->add_option("--noise-var", cal_noise, "Observation noise variance")
        ->capture_default_str();
    cal_cmd->add_option("--trace", cal_trace, "Per-iteration trace CSV");

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "Posterior mean and confidence band");
    ParamFlags pred_pf;
    pred_pf.add_to(pred_cmd);
    std::string pred_series, pred_targets, pred_extra;
    std::size_t pred_prefix = 0;
    double pred_T = 1.0, pred_level = 0.95, pred_noise = 0.0;
    pred_cmd->add_option("--series", pred_series, "Series CSV")->required();
    pred_cmd->add_option("--maturity", pred_T, "Bond maturity in years")->capture_default_str();
    pred_cmd->add_option("--prefix", pred_prefix, "Number of leading observations to condition on")
        ->capture_default_str();
    pred_cmd->add_option("--targets", pred_targets, "Comma list of target times (default: grid)");
    pred_cmd->add_option("--extra-obs", pred_extra, "Extra observed row indices beyond the prefix");
    pred_cmd->add_option("--level", pred_level, "Confidence level")->capture_default_str();
    pred_cmd->add_option("--noise-var", pred_noise, "Observation noise variance")
        ->capture_default_str();

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Batch simulate-calibrate runs");
    ParamFlags exp_pf;
    OptFlags exp_of;
    exp_pf.add_to(exp_cmd);
    exp_of.add_to(exp_cmd);
    std::size_t exp_runs = 100, exp_n = 0;
    double exp_dt = 0.0, exp_T = 1.0, exp_noise = 0.0;
    int exp_bins = 50;
    exp_cmd->add_option("--n-runs", exp_runs, "Independent runs")->capture_default_str();
    exp_cmd->add_option("--n-points", exp_n, "Grid size (default 250 single / 125 multi)");
    exp_cmd->add_option("--dt", exp_dt, "Grid spacing (default 1/n)");
    exp_cmd->add_option("--maturity", exp_T, "Bond maturity in years")->capture_default_str();
    exp_cmd->add_option("--noise-var", exp_noise, "Observation noise variance")
        ->capture_default_str();
    exp_cmd->add_option("--bins", exp_bins, "Histogram bins")->capture_default_str();

    // metrics
    auto* met_cmd = app.add_subcommand("metrics", "SMSE / MSLL on a train-validation split");
    ParamFlags met_pf;
    met_pf.add_to(met_cmd);
    std::string met_series, met_strategy = "prefix";
    double met_T = 1.0, met_fraction = 0.7, met_noise = 0.0;
    std::uint64_t met_seed = 0;
    met_cmd->add_option("--series", met_series, "Series CSV")->required();
    met_cmd->add_option("--maturity", met_T, "Bond maturity in years")->capture_default_str();
    met_cmd->add_option("--train-fraction", met_fraction, "Training share")
        ->capture_default_str();
    met_cmd->add_option("--strategy", met_strategy, "Split strategy")
        ->check(CLI::IsMember({"prefix", "random"}))
        ->capture_default_str();
    met_cmd->add_option("--split-seed", met_seed, "Random split seed")->capture_default_str();
    met_cmd->add_option("--noise-var", met_noise, "Observation noise variance")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (sim_cmd->parsed()) {
            if (out.empty()) throw std::invalid_argument("simulate: --out is required");
            return cmd_simulate(sim_pf, seed, out, sim_n, sim_dt, sim_T, sim_curves);
        }
        if (cal_cmd->parsed()) {
            return cmd_calibrate(cal_pf, cal_of, cal_series, cal_T, cal_noise, seed, out,
                                 cal_trace, format);
        }
        if (pred_cmd->parsed()) {
            if (out.empty()) throw std::invalid_argument("predict: --out is required");
            return cmd_predict(pred_pf, pred_series, pred_T, pred_prefix, pred_targets,
                               pred_extra, pred_level, pred_noise, out);
        }
        if (exp_cmd->parsed()) {
            return cmd_experiment(exp_pf, exp_of, exp_runs, exp_n, exp_dt, exp_T, exp_noise, seed,
                                  out, threads, exp_bins);
        }
        if (met_cmd->parsed()) {
            return cmd_metrics(met_pf, met_series, met_T, met_fraction, met_strategy, met_seed,
                               met_noise, out, format);
        }
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
