#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vasigp/optimize.hpp"
#include "vasigp/params.hpp"
#include "vasigp/simulate.hpp"

namespace vasigp::harness {

struct GridSpec {
    std::size_t n_points = 250;
    double dt = 1.0 / 250.0;
    double maturity = 1.0;

    TimeGrid build() const { return TimeGrid::regular(n_points, dt, maturity); }
};

struct ExperimentConfig {
    opt::ModelKind model_kind = opt::ModelKind::Single;
    MultiCurveParams true_params;  // factor1 only for Single
    std::size_t n_runs = 1;
    GridSpec grid;
    opt::OptimizerConfig optimizer;
    std::uint64_t master_seed = 0;
    std::string output_dir;  // empty: nothing written
    std::set<CurveId> curves = {CurveId::Zero};
    double noise_var = 0.0;
    int threads = 0;  // 0: hardware concurrency
    int hist_bins = 50;

    void validate() const;
};

struct Histogram {
    std::vector<double> edges;        // bins+1, strictly increasing
    std::vector<std::size_t> counts;  // bins, summing to included runs
};

struct ParamStats {
    std::vector<double> mean;
    std::vector<double> stdev;  // sample standard deviation (divide by N-1)
    std::size_t count = 0;
};

struct BatchSummary {
    opt::ModelKind model_kind = opt::ModelKind::Single;
    std::vector<std::string> param_names;
    ParamStats converged;  // runs with converged = true (primary aggregate)
    ParamStats all;        // every run, reported alongside
    double convergence_rate = 0.0;
    std::size_t excluded_runs = 0;
    std::map<std::string, Histogram> histograms;  // over included runs
};

/// Simulate + calibrate cycle of one run index: derives the sub-seed
/// master_seed ^ run_index, simulates a series with the true parameters,
/// draws a random initial point and optimizes. Deterministic per
/// (config, run_index) regardless of which thread executes it.
opt::CalibrationResult run_single(const ExperimentConfig& config, std::size_t run_index);

/// Runs all n_runs on a bounded worker pool and aggregates in run-index
/// order; identical config + master_seed give identical results at any
/// thread count. When output_dir is set, writes params.csv, summary.json
/// and hist_<param>.csv.
BatchSummary run_experiment(const ExperimentConfig& config,
                            std::vector<opt::CalibrationResult>* raw_results = nullptr);

/// Sample mean/stdev per parameter plus equal-width histograms spanning
/// [min, max]; a degenerate range is widened symmetrically so bin edges stay
/// strictly increasing.
BatchSummary summarize(opt::ModelKind kind, const std::vector<opt::CalibrationResult>& results,
                       int bins);

std::string summary_to_json(const BatchSummary& summary);

void write_outputs(const ExperimentConfig& config, const BatchSummary& summary,
                   const std::vector<opt::CalibrationResult>& results);

}  // namespace vasigp::harness
