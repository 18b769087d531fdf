#include "vasigp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vasigp/affine.hpp"

namespace vasigp::sim {

namespace {

// One exact OU transition over a step of length d starting from r.
struct Transition {
    double decay;  // e^{-kappa d}
    double sd;     // sqrt(sigma^2 (1 - e^{-2 kappa d}) / (2 kappa))
};

Transition transition(const SingleCurveParams& p, double d) {
    const double decay = std::exp(-p.kappa * d);
    const double var = p.sigma * p.sigma * (1.0 - decay * decay) / (2.0 * p.kappa);
    return {decay, std::sqrt(std::max(var, 0.0))};
}

}  // namespace

std::vector<double> simulate_ou_path(const SingleCurveParams& p, const TimeGrid& grid,
                                     rng::Rng& rng) {
    p.validate();
    grid.validate();
    std::vector<double> path(grid.size());
    double r = p.r0;
    double prev_t = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid.points[i] - prev_t;
        const auto tr = transition(p, d);
        r = r * tr.decay + p.theta * (1.0 - tr.decay) + tr.sd * rng.normal();
        path[i] = r;
        prev_t = grid.points[i];
    }
    return path;
}

std::pair<std::vector<double>, std::vector<double>> simulate_correlated_ou(
    const MultiCurveParams& p, const TimeGrid& grid, rng::Rng& rng) {
    p.validate();
    grid.validate();
    const double k1 = p.factor1.kappa;
    const double k2 = p.factor2.kappa;
    std::vector<double> path1(grid.size());
    std::vector<double> path2(grid.size());
    double r1 = p.factor1.r0;
    double r2 = p.factor2.r0;
    double prev_t = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid.points[i] - prev_t;
        const auto tr1 = transition(p.factor1, d);
        const auto tr2 = transition(p.factor2, d);
        // Covariance of the two Gaussian step increments over [t, t+d]:
        // rho s1 s2 (1 - e^{-(k1+k2) d}) / (k1 + k2).
        double step_rho = 0.0;
        if (tr1.sd > 0.0 && tr2.sd > 0.0) {
            const double cov = p.rho * p.factor1.sigma * p.factor2.sigma *
                               (1.0 - std::exp(-(k1 + k2) * d)) / (k1 + k2);
            step_rho = std::clamp(cov / (tr1.sd * tr2.sd), -1.0, 1.0);
            // Cauchy-Schwarz bounds |step_rho| by |rho|, with equality only at
            // k1 == k2; snap roundoff so perfectly coupled steps stay bit-equal.
            if (std::abs(p.rho) == 1.0 && std::abs(step_rho) >= 1.0 - 1e-13) {
                step_rho = std::copysign(1.0, step_rho);
            }
        }
        const double z1 = rng.normal();
        const double z3 = rng.normal();
        const double z2 = step_rho * z1 + std::sqrt(1.0 - step_rho * step_rho) * z3;
        r1 = r1 * tr1.decay + p.factor1.theta * (1.0 - tr1.decay) + tr1.sd * z1;
        r2 = r2 * tr2.decay + p.factor2.theta * (1.0 - tr2.decay) + tr2.sd * z2;
        path1[i] = r1;
        path2[i] = r2;
        prev_t = grid.points[i];
    }
    return {std::move(path1), std::move(path2)};
}

SimulatedSeries simulate_log_bonds(const SingleCurveParams& p, const std::set<CurveId>& curves,
                                   const TimeGrid& grid, rng::Rng& rng) {
    if (curves.count(CurveId::Delta) > 0) {
        throw std::invalid_argument(
            "simulate_log_bonds: the tenor curve requires multi-curve parameters");
    }
    if (curves.empty()) throw std::invalid_argument("simulate_log_bonds: no curves requested");
    grid.validate();
    SimulatedSeries series;
    series.grid = grid;
    series.seed = rng.seed();
    const auto path = simulate_ou_path(p, grid, rng);
    const double T = grid.T();
    std::vector<double> logp(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double tau = T - grid.points[i];
        logp[i] = -affine::affine_A(p, tau) - affine::affine_B(p.kappa, tau) * path[i];
    }
    series.curves[CurveId::Zero] = std::move(logp);
    series.short_rates[1] = path;
    return series;
}

SimulatedSeries simulate_log_bonds(const MultiCurveParams& p, const std::set<CurveId>& curves,
                                   const TimeGrid& grid, rng::Rng& rng) {
    if (curves.empty()) throw std::invalid_argument("simulate_log_bonds: no curves requested");
    grid.validate();
    SimulatedSeries series;
    series.grid = grid;
    series.seed = rng.seed();
    const auto [r1, r2] = simulate_correlated_ou(p, grid, rng);
    const double T = grid.T();
    if (curves.count(CurveId::Zero) > 0) {
        std::vector<double> logp(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double tau = T - grid.points[i];
            logp[i] = -affine::affine_A(p.factor1, tau) -
                      affine::affine_B(p.factor1.kappa, tau) * r1[i];
        }
        series.curves[CurveId::Zero] = std::move(logp);
    }
    if (curves.count(CurveId::Delta) > 0) {
        std::vector<double> logp(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double tau = T - grid.points[i];
            logp[i] = affine::phi(p, tau) + affine::psi1(p.factor1.kappa, tau) * r1[i] +
                      affine::psi2(p.factor2.kappa, tau) * r2[i];
        }
        series.curves[CurveId::Delta] = std::move(logp);
    }
    series.short_rates[1] = r1;
    series.short_rates[2] = r2;
    return series;
}

}  // namespace vasigp::sim
