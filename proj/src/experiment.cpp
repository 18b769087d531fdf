#include "vasigp/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "vasigp/csv.hpp"

namespace vasigp::harness {

using nlohmann::json;

void ExperimentConfig::validate() const {
    if (n_runs < 1) throw std::invalid_argument("ExperimentConfig: n_runs must be >= 1");
    if (hist_bins < 1) throw std::invalid_argument("ExperimentConfig: hist_bins must be >= 1");
    if (!(noise_var >= 0.0)) throw std::invalid_argument("ExperimentConfig: noise_var >= 0");
    if (curves.empty()) throw std::invalid_argument("ExperimentConfig: no curves");
    if (model_kind == opt::ModelKind::Single) {
        if (curves.count(CurveId::Delta) > 0) {
            throw std::invalid_argument("ExperimentConfig: tenor curve needs the multi model");
        }
        true_params.factor1.validate();
    } else {
        true_params.validate();
    }
    optimizer.validate();
    grid.build();  // throws on a bad grid spec
}

opt::CalibrationResult run_single(const ExperimentConfig& config, std::size_t run_index) {
    const TimeGrid grid = config.grid.build();
    rng::Rng rng(rng::sub_seed(config.master_seed, run_index));

    sim::SimulatedSeries series;
    if (config.model_kind == opt::ModelKind::Single) {
        series = sim::simulate_log_bonds(config.true_params.factor1, config.curves, grid, rng);
    } else {
        series = sim::simulate_log_bonds(config.true_params, config.curves, grid, rng);
    }

    gpr::ObservationSet obs;
    obs.grid = series.grid;
    obs.values = series.curves;
    obs.noise_var = config.noise_var;

    auto ranges = config.optimizer.init_ranges;
    if (ranges.empty()) ranges = opt::default_init_ranges(config.model_kind);
    const Eigen::VectorXd x0 = opt::random_init(config.model_kind, ranges, rng);

    opt::NllObjective objective(std::move(obs), config.model_kind, config.true_params.rho);
    const auto obj = objective.as_objective();
    opt::CalibrationResult result = config.optimizer.method == opt::Method::CG
                                        ? opt::minimize_cg(obj, x0, config.optimizer)
                                        : opt::minimize_adam(obj, x0, config.optimizer);

    objective.value(result.params);  // refresh jitter diagnostics at the solution
    result.jitter_used = objective.last_jitter();
    result.kind = config.model_kind;
    result.params = opt::ParamTransform{config.model_kind}.to_constrained(result.params);
    return result;
}

BatchSummary run_experiment(const ExperimentConfig& config,
                            std::vector<opt::CalibrationResult>* raw_results) {
    config.validate();
    std::vector<opt::CalibrationResult> results(config.n_runs);

    unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.n_runs)));

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.n_runs) return;
            results[i] = run_single(config, i);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    BatchSummary summary = summarize(config.model_kind, results, config.hist_bins);
    if (!config.output_dir.empty()) write_outputs(config, summary, results);
    if (raw_results != nullptr) *raw_results = std::move(results);
    return summary;
}

namespace {

ParamStats stats_over(const std::vector<const opt::CalibrationResult*>& runs, std::size_t dim) {
    ParamStats stats;
    stats.count = runs.size();
    stats.mean.assign(dim, 0.0);
    stats.stdev.assign(dim, 0.0);
    if (runs.empty()) return stats;
    for (const auto* r : runs) {
        for (std::size_t p = 0; p < dim; ++p) {
            stats.mean[p] += r->params[static_cast<Eigen::Index>(p)];
        }
    }
    for (double& m : stats.mean) m /= static_cast<double>(runs.size());
    if (runs.size() > 1) {
        for (const auto* r : runs) {
            for (std::size_t p = 0; p < dim; ++p) {
                const double d = r->params[static_cast<Eigen::Index>(p)] - stats.mean[p];
                stats.stdev[p] += d * d;
            }
        }
        for (double& s : stats.stdev) {
            s = std::sqrt(s / static_cast<double>(runs.size() - 1));
        }
    }
    return stats;
}

Histogram make_histogram(std::vector<double> values, int bins) {
    Histogram h;
    if (values.empty()) return h;
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) {
        const double pad = std::max(std::abs(lo), 1.0) * 1e-9;
        lo -= pad;
        hi += pad;
    }
    const double width = (hi - lo) / bins;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
        h.edges[static_cast<std::size_t>(b)] = lo + width * b;
    }
    h.edges.back() = hi;  // exact upper edge
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        auto b = static_cast<long>((v - lo) / width);
        b = std::clamp<long>(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

}  // namespace

BatchSummary summarize(opt::ModelKind kind, const std::vector<opt::CalibrationResult>& results,
                       int bins) {
    if (results.empty()) throw std::invalid_argument("summarize: no results");
    BatchSummary summary;
    summary.model_kind = kind;
    summary.param_names = opt::param_names(kind);
    const std::size_t dim = summary.param_names.size();

    std::vector<const opt::CalibrationResult*> all_runs;
    std::vector<const opt::CalibrationResult*> converged_runs;
    for (const auto& r : results) {
        all_runs.push_back(&r);
        if (r.converged) converged_runs.push_back(&r);
    }
    summary.all = stats_over(all_runs, dim);
    summary.converged = stats_over(converged_runs, dim);
    summary.convergence_rate =
        static_cast<double>(converged_runs.size()) / static_cast<double>(results.size());
    summary.excluded_runs = results.size() - converged_runs.size();

    // histograms span every run, converged or not, as the figures do
    for (std::size_t p = 0; p < dim; ++p) {
        std::vector<double> column;
        column.reserve(all_runs.size());
        for (const auto* r : all_runs) {
            column.push_back(r->params[static_cast<Eigen::Index>(p)]);
        }
        summary.histograms[summary.param_names[p]] = make_histogram(std::move(column), bins);
    }
    return summary;
}

std::string summary_to_json(const BatchSummary& summary) {
    json j;
    j["model"] = opt::to_string(summary.model_kind);
    j["param_names"] = summary.param_names;
    const auto stats_json = [&](const ParamStats& s) {
        json sj;
        sj["count"] = s.count;
        for (std::size_t p = 0; p < summary.param_names.size(); ++p) {
            sj["mean"][summary.param_names[p]] = s.mean[p];
            sj["stdev"][summary.param_names[p]] = s.stdev[p];
        }
        return sj;
    };
    j["converged"] = stats_json(summary.converged);
    j["all"] = stats_json(summary.all);
    j["convergence_rate"] = summary.convergence_rate;
    j["excluded_runs"] = summary.excluded_runs;
    return j.dump(2) + "\n";
}

void write_outputs(const ExperimentConfig& config, const BatchSummary& summary,
                   const std::vector<opt::CalibrationResult>& results) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const auto path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };

    {
        std::ofstream out(path("params.csv"));
        if (!out) throw std::runtime_error("cannot open " + path("params.csv"));
        out << "run_id,converged,nll";
        for (const auto& name : summary.param_names) out << ',' << name;
        out << '\n';
        for (std::size_t i = 0; i < results.size(); ++i) {
            out << i << ',' << (results[i].converged ? 1 : 0) << ','
                << io::format_double(results[i].final_nll);
            for (Eigen::Index p = 0; p < results[i].params.size(); ++p) {
                out << ',' << io::format_double(results[i].params[p]);
            }
            out << '\n';
        }
    }

    io::write_text_file(path("summary.json"), summary_to_json(summary));

    for (const auto& [name, hist] : summary.histograms) {
        std::ofstream out(path("hist_" + name + ".csv"));
        if (!out) throw std::runtime_error("cannot open histogram file for " + name);
        out << "bin_left,bin_right,count\n";
        for (std::size_t b = 0; b < hist.counts.size(); ++b) {
            out << io::format_double(hist.edges[b]) << ',' << io::format_double(hist.edges[b + 1])
                << ',' << hist.counts[b] << '\n';
        }
    }
}

}  // namespace vasigp::harness
