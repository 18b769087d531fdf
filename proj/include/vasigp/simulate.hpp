#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "vasigp/params.hpp"
#include "vasigp/rng.hpp"

namespace vasigp::sim {

/// One simulated panel of log-bond prices on a time grid, plus the factor
/// paths that produced it (diagnostics only).
struct SimulatedSeries {
    TimeGrid grid;
    std::map<CurveId, std::vector<double>> curves;  // log-bond values per curve
    std::map<int, std::vector<double>> short_rates;  // factor index -> path
    std::uint64_t seed = 0;
};

/// Samples one OU path on the grid using the exact Gaussian transition
/// r_{t+d} | r_t ~ N(r_t e^{-kappa d} + theta (1 - e^{-kappa d}),
///                   sigma^2 (1 - e^{-2 kappa d}) / (2 kappa)).
/// Marginals are exact for any grid spacing.
std::vector<double> simulate_ou_path(const SingleCurveParams& p, const TimeGrid& grid,
                                     rng::Rng& rng);

/// Samples the two correlated factors jointly; each marginal path law equals
/// simulate_ou_path's, and per-step Gaussian increments carry the correlation
/// implied by W^2 = rho W^1 + sqrt(1-rho^2) W^3.
std::pair<std::vector<double>, std::vector<double>> simulate_correlated_ou(
    const MultiCurveParams& p, const TimeGrid& grid, rng::Rng& rng);

/// Simulates log-bond series for the requested curves from one shared factor
/// realization, so the curves are correctly coupled.
/// Throws std::invalid_argument if CurveId::Delta is requested here.
SimulatedSeries simulate_log_bonds(const SingleCurveParams& p, const std::set<CurveId>& curves,
                                   const TimeGrid& grid, rng::Rng& rng);
SimulatedSeries simulate_log_bonds(const MultiCurveParams& p, const std::set<CurveId>& curves,
                                   const TimeGrid& grid, rng::Rng& rng);

}  // namespace vasigp::sim
