#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

#include "vasigp/affine.hpp"
#include "vasigp/rng.hpp"
#include "vasigp/simulate.hpp"

using namespace vasigp;
using namespace vasigp::affine;

namespace {

const SingleCurveParams kPaperSingle{0.5, 2.0, 0.1, 0.2};

MultiCurveParams paper_multi(double rho) {
    MultiCurveParams p;
    p.factor1 = kPaperSingle;
    p.factor2 = SingleCurveParams{0.7, 0.5, 0.03, 0.8};
    p.rho = rho;
    return p;
}

double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("affine_B closed form") {
    CHECK(affine_B(2.0, 0.0) == 0.0);
    // high-precision evaluation of (1 - e^{-2})/2
    CHECK(affine_B(2.0, 1.0) == doctest::Approx(0.43233235838169365).epsilon(1e-15));
    CHECK(affine_B(2.0, 400.0) == doctest::Approx(0.5).epsilon(1e-12));  // 1/kappa limit
    // increasing in tau, bounded by 1/kappa
    double prev = -1.0;
    for (double tau = 0.0; tau <= 5.0; tau += 0.25) {
        const double b = affine_B(1.7, tau);
        CHECK(b > prev);
        CHECK(b <= 1.0 / 1.7);
        prev = b;
    }
    CHECK_THROWS_AS(affine_B(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(affine_B(-2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(affine_B(2.0, -0.1), std::domain_error);
}

TEST_CASE("affine_A closed form") {
    CHECK(affine_A(kPaperSingle, 0.0) == 0.0);
    CHECK(affine_A(kPaperSingle, 1.0) ==
          doctest::Approx(0.054862982294258489).epsilon(1e-15));
    // every term carries theta or sigma^2
    const SingleCurveParams degenerate{0.3, 1.3, 0.0, 0.0};
    CHECK(affine_A(degenerate, 2.7) == 0.0);
    CHECK_THROWS_AS(affine_A(kPaperSingle, -1.0), std::domain_error);
}

TEST_CASE("psi1/psi2 mirror affine_B") {
    CHECK(psi1(2.0, 0.0) == 0.0);
    CHECK(psi1(2.0, 1.0) == doctest::Approx(-0.43233235838169365).epsilon(1e-15));
    CHECK(psi2(0.5, 0.0) == 0.0);
    CHECK(psi2(0.5, 1.0) == doctest::Approx(0.78693868057473315).epsilon(1e-15));
    std::mt19937_64 engine(7);
    std::uniform_real_distribution<double> kappa_dist(0.05, 6.0);
    std::uniform_real_distribution<double> tau_dist(0.0, 4.0);
    for (int i = 0; i < 200; ++i) {
        const double k = kappa_dist(engine);
        const double tau = tau_dist(engine);
        CHECK(psi1(k, tau) + affine_B(k, tau) == 0.0);
        CHECK(psi2(k, tau) == affine_B(k, tau));
    }
}

TEST_CASE("phi closed form") {
    const auto p = paper_multi(0.0);
    CHECK(phi(p, 0.0) == 0.0);
    CHECK(phi(paper_multi(0.3), 0.0) == 0.0);
    CHECK(phi(p, 0.5) == doctest::Approx(-0.0051449320790542350).epsilon(1e-13));
    CHECK(phi(paper_multi(0.3), 0.5) == doctest::Approx(-0.0064380217423080682).epsilon(1e-13));

    // factor-2 degenerate: phi reduces to -A of factor 1 (two algebraic routes)
    MultiCurveParams degen;
    degen.factor1 = kPaperSingle;
    degen.factor2 = SingleCurveParams{0.0, 0.7, 0.0, 0.0};
    degen.rho = 0.0;
    for (double tau : {0.0, 0.1, 0.5, 1.0, 3.0}) {
        CHECK(rel_diff(phi(degen, tau), -affine_A(kPaperSingle, tau)) < 1e-13);
    }
    CHECK_THROWS_AS(phi(p, -0.25), std::domain_error);
}

TEST_CASE("mean_log_bond") {
    const auto p = paper_multi(0.3);
    SUBCASE("zero curve") {
        CHECK(mean_log_bond(kPaperSingle, 1.0, 1.0) == 0.0);  // log P(T,T) = 0
        CHECK(mean_log_bond(kPaperSingle, 0.0, 1.0) ==
              doctest::Approx(-0.27102916148510532).epsilon(1e-15));
        CHECK(mean_log_bond(p, CurveId::Zero, 0.0, 1.0) ==
              mean_log_bond(kPaperSingle, 0.0, 1.0));
    }
    SUBCASE("tenor curve at t = T") {
        CHECK(mean_log_bond(p, CurveId::Delta, 1.0, 1.0) == 0.0);
    }
    SUBCASE("domain") {
        CHECK_THROWS_AS(mean_log_bond(kPaperSingle, 1.5, 1.0), std::domain_error);
        CHECK_THROWS_AS(mean_log_bond(kPaperSingle, -0.1, 1.0), std::domain_error);
    }
}

TEST_CASE("cov_log_bond basics") {
    const auto p = paper_multi(0.3);
    const double T = 1.0;
    SUBCASE("deterministic start") {
        CHECK(cov_log_bond(kPaperSingle, 0.0, 0.7, T) == 0.0);
        CHECK(cov_log_bond(p, CurveId::Zero, CurveId::Delta, 0.0, 0.6, T) == 0.0);
    }
    SUBCASE("frozen spot value") {
        CHECK(cov_log_bond(kPaperSingle, 0.3, 0.7, T) ==
              doctest::Approx(2.6683707621953071e-4).epsilon(1e-13));
    }
    SUBCASE("rho = 0 cross block keeps only the shared-factor term") {
        const auto q = paper_multi(0.0);
        for (double s : {0.1, 0.4, 0.9}) {
            for (double t : {0.2, 0.6}) {
                const double expected = psi1(q.factor1.kappa, T - s) *
                                        psi1(q.factor1.kappa, T - t) * ou_cov(q.factor1, s, t);
                CHECK(rel_diff(cov_log_bond(q, CurveId::Zero, CurveId::Delta, s, t, T),
                               expected) < 1e-13);
            }
        }
    }
    SUBCASE("domain") {
        CHECK_THROWS_AS(cov_log_bond(p, CurveId::Zero, CurveId::Zero, -0.1, 0.5, T),
                        std::domain_error);
        CHECK_THROWS_AS(cov_log_bond(p, CurveId::Delta, CurveId::Delta, 0.1, 1.5, T),
                        std::domain_error);
    }
}

TEST_CASE("cov_log_bond symmetry is exact") {
    const auto p = paper_multi(0.37);
    const double T = 2.0;
    std::mt19937_64 engine(11);
    std::uniform_real_distribution<double> time_dist(0.0, T);
    const CurveId curves[] = {CurveId::Zero, CurveId::Delta};
    for (int i = 0; i < 500; ++i) {
        const double s = time_dist(engine);
        const double t = time_dist(engine);
        for (CurveId ca : curves) {
            for (CurveId cb : curves) {
                CHECK(cov_log_bond(p, ca, cb, s, t, T) == cov_log_bond(p, cb, ca, t, s, T));
            }
        }
    }
}

TEST_CASE("gram matrices are positive semidefinite") {
    const auto p = paper_multi(0.45);
    const double T = 1.0;
    std::mt19937_64 engine(13);
    std::uniform_real_distribution<double> time_dist(0.01, T);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> times;
        for (int i = 0; i < 12; ++i) times.push_back(time_dist(engine));
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        const auto n = static_cast<Eigen::Index>(2 * times.size());
        Eigen::MatrixXd gram(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const CurveId ci = i % 2 == 0 ? CurveId::Zero : CurveId::Delta;
                const CurveId cj = j % 2 == 0 ? CurveId::Zero : CurveId::Delta;
                gram(i, j) = cov_log_bond(p, ci, cj, times[static_cast<std::size_t>(i) / 2],
                                          times[static_cast<std::size_t>(j) / 2], T);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * gram.trace());
    }
}

TEST_CASE("degenerate second factor collapses the tenor curve") {
    MultiCurveParams degen;
    degen.factor1 = kPaperSingle;
    degen.factor2 = SingleCurveParams{0.0, 0.9, 0.0, 0.0};
    degen.rho = 0.77;  // arbitrary: every rho term is multiplied by sigma2
    const double T = 1.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = T * i / 100.0;
        CHECK(rel_diff(mean_log_bond(degen, CurveId::Delta, t, T),
                       mean_log_bond(degen, CurveId::Zero, t, T)) < 1e-12);
        for (int j = 0; j <= 4; ++j) {
            const double s = T * j / 4.0;
            CHECK(rel_diff(cov_log_bond(degen, CurveId::Delta, CurveId::Delta, s, t, T),
                           cov_log_bond(degen, CurveId::Zero, CurveId::Zero, s, t, T)) < 1e-12);
        }
    }
}

TEST_CASE("stationary variance limit") {
    // at kappa*t = 40 the (Zero,Zero) variance is the stationary one
    const SingleCurveParams p{0.5, 2.0, 0.1, 0.2};
    const double t = 20.0;
    const double T = 21.0;
    const double b = affine_B(p.kappa, T - t);
    const double stationary = b * b * p.sigma * p.sigma / (2.0 * p.kappa);
    CHECK(rel_diff(cov_log_bond(p, t, t, T), stationary) < 1e-6);
}

TEST_CASE("cross covariance is continuous at kappa1 == kappa2") {
    MultiCurveParams p = paper_multi(0.4);
    p.factor2.kappa = p.factor1.kappa;
    MultiCurveParams q = p;
    q.factor2.kappa = p.factor1.kappa * (1.0 + 1e-8);
    const double T = 1.0;
    for (double s : {0.2, 0.5, 0.8}) {
        for (double t : {0.3, 0.9}) {
            const double a = cov_log_bond(p, CurveId::Zero, CurveId::Delta, s, t, T);
            const double b = cov_log_bond(q, CurveId::Zero, CurveId::Delta, s, t, T);
            CHECK(rel_diff(a, b) < 1e-6);
        }
    }
}

TEST_CASE("mixed moment against Monte Carlo" * doctest::timeout(300)) {
    // Appendix-style oracle: sample moments over simulated factor pairs
    const auto p = paper_multi(0.3);
    const std::vector<double> s_times = {0.25, 0.5, 0.75};
    TimeGrid grid;
    grid.points = s_times;
    grid.maturity.T = 1.0;

    const int n_paths = 100000;
    rng::Rng rng(991);
    std::vector<std::vector<double>> r1(s_times.size()), r2(s_times.size());
    for (auto& v : r1) v.reserve(n_paths);
    for (auto& v : r2) v.reserve(n_paths);
    for (int k = 0; k < n_paths; ++k) {
        const auto [p1, p2] = sim::simulate_correlated_ou(p, grid, rng);
        for (std::size_t i = 0; i < s_times.size(); ++i) {
            r1[i].push_back(p1[i]);
            r2[i].push_back(p2[i]);
        }
    }
    for (std::size_t i = 0; i < s_times.size(); ++i) {
        for (std::size_t j = 0; j < s_times.size(); ++j) {
            // product variable r1_s * r2_t: mean and standard error
            double sum = 0.0, sum_sq = 0.0;
            for (int k = 0; k < n_paths; ++k) {
                const double prod = r1[i][static_cast<std::size_t>(k)] *
                                    r2[j][static_cast<std::size_t>(k)];
                sum += prod;
                sum_sq += prod * prod;
            }
            const double mc = sum / n_paths;
            const double var = sum_sq / n_paths - mc * mc;
            const double se = std::sqrt(var / n_paths);
            const double closed = mixed_moment(p, s_times[i], s_times[j]);
            CHECK(std::abs(mc - closed) < 4.0 * se);
        }
    }
}

TEST_CASE("tenor-curve covariance against Monte Carlo" * doctest::timeout(600)) {
    // Proposition-style check at s = t = 0.5 with rho = 0.3
    const auto p = paper_multi(0.3);
    const double T = 1.0;
    TimeGrid grid;
    grid.points = {0.5};
    grid.maturity.T = T;

    const int n_paths = 1000000;
    rng::Rng rng(4417);
    const double tau = T - 0.5;
    const double f_phi = phi(p, tau);
    const double f_p1 = psi1(p.factor1.kappa, tau);
    const double f_p2 = psi2(p.factor2.kappa, tau);

    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> values;
    values.reserve(n_paths);
    for (int k = 0; k < n_paths; ++k) {
        const auto [p1, p2] = sim::simulate_correlated_ou(p, grid, rng);
        const double y = f_phi + f_p1 * p1[0] + f_p2 * p2[0];
        values.push_back(y);
        sum += y;
    }
    const double mean = sum / n_paths;
    double m2 = 0.0, m4 = 0.0;
    for (double y : values) {
        const double d = y - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n_paths;
    m4 /= n_paths;
    const double se_var = std::sqrt((m4 - m2 * m2) / n_paths);
    const double closed = cov_log_bond(p, CurveId::Delta, CurveId::Delta, 0.5, 0.5, T);
    CHECK(std::abs(m2 - closed) < 3.0 * se_var);
    (void)sum_sq;
}

TEST_CASE("ou_cov matches the spelled-out kernel") {
    const SingleCurveParams p{0.5, 2.0, 0.1, 0.2};
    std::mt19937_64 engine(3);
    std::uniform_real_distribution<double> time_dist(0.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double s = time_dist(engine);
        const double t = time_dist(engine);
        const double direct = (p.sigma * p.sigma / (2.0 * p.kappa)) *
                              std::exp(-p.kappa * (s + t)) *
                              (std::exp(2.0 * p.kappa * std::min(s, t)) - 1.0);
        CHECK(rel_diff(ou_cov(p, s, t), direct) < 1e-12);
    }
}
