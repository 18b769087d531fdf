#pragma once

#include "vasigp/params.hpp"

namespace vasigp::affine {

// Closed-form Riccati solutions of the Vasicek term structure and the exact
// first two moments of the induced log-bond prices. All functions are pure;
// time arguments are in years, tau = T - t.

/// B(tau) = (1 - e^{-kappa*tau}) / kappa. Increasing in tau, bounded by 1/kappa.
double affine_B(double kappa, double tau);

/// A(tau) = (theta/kappa)(e^{-kappa*tau} + kappa*tau - 1)
///        + (sigma^2/(4 kappa^3))(e^{-2 kappa*tau} - 4 e^{-kappa*tau} - 2 kappa*tau + 3).
double affine_A(const SingleCurveParams& p, double tau);

/// Factor loadings of the tenor bond: psi1 = -B(kappa1, tau),
/// psi2 = +(1 - e^{-kappa2*tau}) / kappa2.
double psi1(double kappa1, double tau);
double psi2(double kappa2, double tau);

/// Constant Riccati term of the tenor bond, including the rho-weighted
/// cross-volatility contribution.
double phi(const MultiCurveParams& p, double tau);

/// E[r_t] of one factor: r0 e^{-kappa t} + theta (1 - e^{-kappa t}).
double ou_mean(const SingleCurveParams& p, double t);

/// Cov(r_s, r_t) of one factor:
/// (sigma^2 / 2 kappa) (e^{-kappa|s-t|} - e^{-kappa(s+t)}).
double ou_cov(const SingleCurveParams& p, double s, double t);

/// Cov(r^1_s, r^2_t) across factors (s indexes factor 1, t factor 2).
double cross_cov(const MultiCurveParams& p, double s, double t);

/// Uncentered mixed moment E[r^1_s r^2_t].
double mixed_moment(const MultiCurveParams& p, double s, double t);

/// Exact mean of log P(t, T, curve). Zero curve uses factor1 only.
double mean_log_bond(const MultiCurveParams& p, CurveId curve, double t, double T);

/// Exact covariance of (log P(s, T, curveA), log P(t, T, curveB)).
/// Symmetric under (s, curveA) <-> (t, curveB), exactly.
double cov_log_bond(const MultiCurveParams& p, CurveId curveA, CurveId curveB,
                    double s, double t, double T);

// Single-curve conveniences (zero-coupon curve of a standalone factor).
double mean_log_bond(const SingleCurveParams& p, double t, double T);
double cov_log_bond(const SingleCurveParams& p, double s, double t, double T);

}  // namespace vasigp::affine
