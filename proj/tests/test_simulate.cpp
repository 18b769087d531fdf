#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vasigp/affine.hpp"
#include "vasigp/rng.hpp"
#include "vasigp/simulate.hpp"

using namespace vasigp;

namespace {

const SingleCurveParams kPaperSingle{0.5, 2.0, 0.1, 0.2};

MultiCurveParams paper_multi(double rho) {
    MultiCurveParams p;
    p.factor1 = kPaperSingle;
    p.factor2 = SingleCurveParams{0.7, 0.5, 0.03, 0.8};
    p.rho = rho;
    return p;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double se_mean = 0.0;
    double se_var = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) m.mean += x;
    m.mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    m.var = m2;
    m.se_mean = std::sqrt(m2 / n);
    m.se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("vanishing volatility gives the deterministic mean path") {
    SingleCurveParams p = kPaperSingle;
    p.sigma = 1e-30;
    const auto grid = TimeGrid::regular(50, 0.02, 1.0);
    rng::Rng rng(5);
    const auto path = sim::simulate_ou_path(p, grid, rng);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(path[i] == doctest::Approx(affine::ou_mean(p, grid.points[i])).epsilon(1e-12));
    }
}

TEST_CASE("ou marginal moments match the closed form" * doctest::timeout(300)) {
    const int n_paths = 100000;
    TimeGrid grid;
    grid.points = {1.0};
    grid.maturity.T = 2.0;
    rng::Rng rng(42);
    std::vector<double> r_end;
    r_end.reserve(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        r_end.push_back(sim::simulate_ou_path(kPaperSingle, grid, rng)[0]);
    }
    const auto m = moments(r_end);
    const double mean_exact = affine::ou_mean(kPaperSingle, 1.0);
    const double var_exact = affine::ou_cov(kPaperSingle, 1.0, 1.0);
    CHECK(mean_exact == doctest::Approx(0.5 * std::exp(-2.0) + 0.1 * (1 - std::exp(-2.0))));
    CHECK(std::abs(m.mean - mean_exact) < 4.0 * m.se_mean);
    CHECK(std::abs(m.var - var_exact) < 4.0 * m.se_var);
}

TEST_CASE("one-step and two-step simulations agree in distribution" * doctest::timeout(300)) {
    const int n_paths = 100000;
    TimeGrid one;
    one.points = {0.8};
    one.maturity.T = 1.0;
    TimeGrid two;
    two.points = {0.4, 0.8};
    two.maturity.T = 1.0;

    std::vector<double> a, b;
    a.reserve(n_paths);
    b.reserve(n_paths);
    rng::Rng rng_a(7);
    rng::Rng rng_b(8);
    for (int i = 0; i < n_paths; ++i) {
        a.push_back(sim::simulate_ou_path(kPaperSingle, one, rng_a)[0]);
        b.push_back(sim::simulate_ou_path(kPaperSingle, two, rng_b)[1]);
    }
    const auto ma = moments(a);
    const auto mb = moments(b);
    CHECK(std::abs(ma.mean - mb.mean) < 4.0 * std::hypot(ma.se_mean, mb.se_mean));
    CHECK(std::abs(ma.var - mb.var) < 4.0 * std::hypot(ma.se_var, mb.se_var));
}

TEST_CASE("correlated factors: independent when rho = 0" * doctest::timeout(300)) {
    const auto p = paper_multi(0.0);
    TimeGrid grid;
    grid.points = {0.5};
    grid.maturity.T = 1.0;
    const int n_paths = 100000;
    rng::Rng rng(19);
    double s1 = 0, s2 = 0, s12 = 0;
    std::vector<double> prods;
    prods.reserve(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        const auto [a, b] = sim::simulate_correlated_ou(p, grid, rng);
        s1 += a[0];
        s2 += b[0];
        s12 += a[0] * b[0];
        prods.push_back(a[0] * b[0]);
    }
    const double n = n_paths;
    const double cov = s12 / n - (s1 / n) * (s2 / n);
    const auto pm = moments(prods);
    CHECK(std::abs(cov) < 4.0 * pm.se_mean);
}

TEST_CASE("perfectly correlated identical factors coincide") {
    MultiCurveParams p;
    p.factor1 = kPaperSingle;
    p.factor2 = kPaperSingle;
    p.rho = 1.0;
    const auto grid = TimeGrid::regular(100, 0.01, 1.0);
    rng::Rng rng(23);
    const auto [a, b] = sim::simulate_correlated_ou(p, grid, rng);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
}

TEST_CASE("mixed moment of the simulated pair matches the closed form" *
          doctest::timeout(900)) {
    const auto p = paper_multi(0.3);
    TimeGrid grid;
    grid.points = {0.5, 0.7};
    grid.maturity.T = 1.0;
    const int n_paths = 1000000;
    rng::Rng rng(3137);
    std::vector<double> prods;
    prods.reserve(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        const auto [a, b] = sim::simulate_correlated_ou(p, grid, rng);
        prods.push_back(a[0] * b[1]);  // r1 at 0.5, r2 at 0.7
    }
    const auto m = moments(prods);
    const double closed = affine::mixed_moment(p, 0.5, 0.7);
    CHECK(std::abs(m.mean - closed) < 4.0 * m.se_mean);
}

TEST_CASE("log-bond series mean and cross-curve covariance" * doctest::timeout(600)) {
    const auto p = paper_multi(0.3);
    TimeGrid grid;
    grid.points = {0.3, 0.6};
    grid.maturity.T = 1.0;
    const double T = 1.0;
    const int n_paths = 100000;
    rng::Rng rng(77);
    std::vector<double> zero_at_0_3, delta_at_0_6;
    zero_at_0_3.reserve(n_paths);
    delta_at_0_6.reserve(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        const auto series =
            sim::simulate_log_bonds(p, {CurveId::Zero, CurveId::Delta}, grid, rng);
        zero_at_0_3.push_back(series.curves.at(CurveId::Zero)[0]);
        delta_at_0_6.push_back(series.curves.at(CurveId::Delta)[1]);
    }
    const auto mz = moments(zero_at_0_3);
    const auto md = moments(delta_at_0_6);
    CHECK(std::abs(mz.mean - affine::mean_log_bond(p, CurveId::Zero, 0.3, T)) <
          4.0 * mz.se_mean);
    CHECK(std::abs(md.mean - affine::mean_log_bond(p, CurveId::Delta, 0.6, T)) <
          4.0 * md.se_mean);
    std::vector<double> prods;
    prods.reserve(n_paths);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_paths); ++i) {
        prods.push_back((zero_at_0_3[i] - mz.mean) * (delta_at_0_6[i] - md.mean));
    }
    const auto mp = moments(prods);
    const double closed = affine::cov_log_bond(p, CurveId::Zero, CurveId::Delta, 0.3, 0.6, T);
    CHECK(std::abs(mp.mean - closed) < 4.0 * mp.se_mean);
}

TEST_CASE("log-bond value at maturity is exactly zero") {
    const auto p = paper_multi(0.2);
    TimeGrid grid;
    grid.points = {0.5, 1.0};
    grid.maturity.T = 1.0;
    rng::Rng rng(3);
    const auto series = sim::simulate_log_bonds(p, {CurveId::Zero, CurveId::Delta}, grid, rng);
    CHECK(series.curves.at(CurveId::Zero)[1] == 0.0);
    CHECK(series.curves.at(CurveId::Delta)[1] == 0.0);
}

TEST_CASE("identical seeds reproduce bit-identical series") {
    const auto p = paper_multi(0.3);
    const auto grid = TimeGrid::regular(125, 1.0 / 125.0, 1.0);
    rng::Rng rng_a(1234);
    rng::Rng rng_b(1234);
    const auto a = sim::simulate_log_bonds(p, {CurveId::Zero, CurveId::Delta}, grid, rng_a);
    const auto b = sim::simulate_log_bonds(p, {CurveId::Zero, CurveId::Delta}, grid, rng_b);
    CHECK(a.curves.at(CurveId::Zero) == b.curves.at(CurveId::Zero));
    CHECK(a.curves.at(CurveId::Delta) == b.curves.at(CurveId::Delta));
}

TEST_CASE("delta curve with single-curve parameters is a configuration error") {
    const auto grid = TimeGrid::regular(10, 0.1, 1.0);
    rng::Rng rng(1);
    CHECK_THROWS_AS(
        sim::simulate_log_bonds(kPaperSingle, {CurveId::Zero, CurveId::Delta}, grid, rng),
        std::invalid_argument);
}

TEST_CASE("standardized first observation passes a KS smoke check" * doctest::timeout(300)) {
    const int n_runs = 10000;
    const auto grid = TimeGrid::regular(1, 1.0 / 250.0, 1.0);
    const double t1 = grid.points[0];
    const double mu = affine::mean_log_bond(kPaperSingle, t1, 1.0);
    const double sd = std::sqrt(affine::cov_log_bond(kPaperSingle, t1, t1, 1.0));
    std::vector<double> z;
    z.reserve(n_runs);
    for (int i = 0; i < n_runs; ++i) {
        rng::Rng rng(rng::sub_seed(888, static_cast<std::uint64_t>(i)));
        const auto series = sim::simulate_log_bonds(kPaperSingle, {CurveId::Zero}, grid, rng);
        z.push_back((series.curves.at(CurveId::Zero)[0] - mu) / sd);
    }
    std::sort(z.begin(), z.end());
    double d_stat = 0.0;
    for (int i = 0; i < n_runs; ++i) {
        const double cdf = normal_cdf(z[static_cast<std::size_t>(i)]);
        const double hi = (i + 1.0) / n_runs;
        const double lo = i / static_cast<double>(n_runs);
        d_stat = std::max({d_stat, std::abs(cdf - hi), std::abs(cdf - lo)});
    }
    // 0.1% critical value: sqrt(-ln(alpha/2)/2) / sqrt(n)
    const double d_crit = 1.9494746 / std::sqrt(static_cast<double>(n_runs));
    CHECK(d_stat < d_crit);
}
