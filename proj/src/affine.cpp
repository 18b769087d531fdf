#include "vasigp/affine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vasigp::affine {

namespace {

void require_kappa_tau(double kappa, double tau) {
    if (!(kappa > 0.0)) throw std::domain_error("affine: kappa must be > 0");
    if (!(tau >= 0.0)) throw std::domain_error("affine: tau must be >= 0");
}

void require_window(double t, double T) {
    if (!(t >= 0.0) || !(t <= T)) {
        throw std::domain_error("affine: time must satisfy 0 <= t <= T");
    }
}

}  // namespace

double affine_B(double kappa, double tau) {
    require_kappa_tau(kappa, tau);
    return (1.0 - std::exp(-kappa * tau)) / kappa;
}

double affine_A(const SingleCurveParams& p, double tau) {
    require_kappa_tau(p.kappa, tau);
    const double k = p.kappa;
    const double e1 = std::exp(-k * tau);
    const double e2 = std::exp(-2.0 * k * tau);
    const double mean_term = (p.theta / k) * (e1 + k * tau - 1.0);
    const double vol_term = (p.sigma * p.sigma / (4.0 * k * k * k)) * (e2 - 4.0 * e1 - 2.0 * k * tau + 3.0);
    return mean_term + vol_term;
}

double psi1(double kappa1, double tau) {
    return -affine_B(kappa1, tau);
}

double psi2(double kappa2, double tau) {
    return affine_B(kappa2, tau);
}

double phi(const MultiCurveParams& p, double tau) {
    const double k1 = p.factor1.kappa;
    const double k2 = p.factor2.kappa;
    require_kappa_tau(k1, tau);
    require_kappa_tau(k2, tau);
    const double s1 = p.factor1.sigma;
    const double s2 = p.factor2.sigma;
    const double e1 = std::exp(-k1 * tau);
    const double e2 = std::exp(-k2 * tau);
    const double e12 = std::exp(-(k1 + k2) * tau);

    const double drift = -(p.factor1.theta - p.factor2.theta) * tau
                         - p.factor1.theta * (e1 - 1.0) / k1
                         + p.factor2.theta * (e2 - 1.0) / k2;
    // sigma^2 brackets grouped over 2*kappa so they vanish exactly at tau = 0
    const double vol1 = (s1 * s1 / (2.0 * k1 * k1)) * (tau + (4.0 * e1 - std::exp(-2.0 * k1 * tau) - 3.0) / (2.0 * k1));
    const double vol2 = (s2 * s2 / (2.0 * k2 * k2)) * (tau + (4.0 * e2 - std::exp(-2.0 * k2 * tau) - 3.0) / (2.0 * k2));
    const double cross = -(p.rho * s1 * s2 / (k1 * k2)) *
                         (tau + (e1 - 1.0) / k1 + (e2 - 1.0) / k2 - (e12 - 1.0) / (k1 + k2));
    return drift + vol1 + vol2 + cross;
}

double ou_mean(const SingleCurveParams& p, double t) {
    if (!(t >= 0.0)) throw std::domain_error("ou_mean: t must be >= 0");
    const double e = std::exp(-p.kappa * t);
    return p.r0 * e + p.theta * (1.0 - e);
}

double ou_cov(const SingleCurveParams& p, double s, double t) {
    if (!(s >= 0.0) || !(t >= 0.0)) throw std::domain_error("ou_cov: times must be >= 0");
    const double k = p.kappa;
    // (sigma^2/2k) e^{-k(s+t)} (e^{2k min(s,t)} - 1), written overflow-free
    return (p.sigma * p.sigma / (2.0 * k)) *
           (std::exp(-k * std::abs(s - t)) - std::exp(-k * (s + t)));
}

double cross_cov(const MultiCurveParams& p, double s, double t) {
    if (!(s >= 0.0) || !(t >= 0.0)) throw std::domain_error("cross_cov: times must be >= 0");
    const double k1 = p.factor1.kappa;
    const double k2 = p.factor2.kappa;
    const double m = std::min(s, t);
    // (rho s1 s2/(k1+k2)) e^{-(k1 s + k2 t)} (e^{(k1+k2) min} - 1), overflow-free
    return (p.rho * p.factor1.sigma * p.factor2.sigma / (k1 + k2)) *
           (std::exp(-k1 * (s - m) - k2 * (t - m)) - std::exp(-(k1 * s + k2 * t)));
}

double mixed_moment(const MultiCurveParams& p, double s, double t) {
    if (!(s >= 0.0) || !(t >= 0.0)) throw std::domain_error("mixed_moment: times must be >= 0");
    const double k1 = p.factor1.kappa;
    const double k2 = p.factor2.kappa;
    const double e1 = std::exp(-k1 * s);
    const double e2 = std::exp(-k2 * t);
    const double m = std::min(s, t);
    return p.factor1.r0 * p.factor2.r0 * e1 * e2
           + p.factor1.r0 * p.factor2.theta * e1 * (1.0 - e2)
           + p.factor2.r0 * p.factor1.theta * e2 * (1.0 - e1)
           + p.factor1.theta * p.factor2.theta * (1.0 - e1) * (1.0 - e2)
           + (p.rho * p.factor1.sigma * p.factor2.sigma / (k1 + k2)) *
                 (std::exp(-k1 * (s - m) - k2 * (t - m)) - e1 * e2);
}

double mean_log_bond(const SingleCurveParams& p, double t, double T) {
    require_window(t, T);
    const double tau = T - t;
    return -affine_A(p, tau) - affine_B(p.kappa, tau) * ou_mean(p, t);
}

double cov_log_bond(const SingleCurveParams& p, double s, double t, double T) {
    require_window(s, T);
    require_window(t, T);
    return affine_B(p.kappa, T - s) * affine_B(p.kappa, T - t) * ou_cov(p, s, t);
}

double mean_log_bond(const MultiCurveParams& p, CurveId curve, double t, double T) {
    if (curve == CurveId::Zero) return mean_log_bond(p.factor1, t, T);
    require_window(t, T);
    const double tau = T - t;
    return phi(p, tau) + psi1(p.factor1.kappa, tau) * ou_mean(p.factor1, t) +
           psi2(p.factor2.kappa, tau) * ou_mean(p.factor2, t);
}

namespace {

// (Zero, Delta) block entry: s labels the zero-coupon point, t the tenor one.
double cov_zero_delta(const MultiCurveParams& p, double s, double t, double T) {
    const double p1s = psi1(p.factor1.kappa, T - s);
    return p1s * psi1(p.factor1.kappa, T - t) * ou_cov(p.factor1, s, t) +
           p1s * psi2(p.factor2.kappa, T - t) * cross_cov(p, s, t);
}

double cov_delta_delta(const MultiCurveParams& p, double s, double t, double T) {
    if (s > t) std::swap(s, t);  // canonical order keeps the symmetry exact
    const double p1s = psi1(p.factor1.kappa, T - s);
    const double p1t = psi1(p.factor1.kappa, T - t);
    const double p2s = psi2(p.factor2.kappa, T - s);
    const double p2t = psi2(p.factor2.kappa, T - t);
    return p1s * p1t * ou_cov(p.factor1, s, t) + p1s * p2t * cross_cov(p, s, t) +
           p1t * p2s * cross_cov(p, t, s) + p2s * p2t * ou_cov(p.factor2, s, t);
}

}  // namespace

double cov_log_bond(const MultiCurveParams& p, CurveId curveA, CurveId curveB,
                    double s, double t, double T) {
    require_window(s, T);
    require_window(t, T);
    if (curveA == CurveId::Zero && curveB == CurveId::Zero) {
        return cov_log_bond(p.factor1, s, t, T);
    }
    if (curveA == CurveId::Zero) return cov_zero_delta(p, s, t, T);
    if (curveB == CurveId::Zero) return cov_zero_delta(p, t, s, T);
    return cov_delta_delta(p, s, t, T);
}

}  // namespace vasigp::affine
