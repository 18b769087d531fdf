#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vasigp/params.hpp"

namespace vasigp::gpr {

/// Raised when the observation covariance cannot be factorized even after
/// the maximum configured jitter; signals pathological parameters.
class FactorizationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One labelled coordinate of the finite-dimensional Gaussian.
struct ObsPoint {
    double t = 0.0;
    CurveId curve = CurveId::Zero;
};

/// Observed log-bond values on a shared grid, one vector per curve, with
/// i.i.d. observation noise of variance noise_var on the diagonal.
struct ObservationSet {
    TimeGrid grid;
    std::map<CurveId, std::vector<double>> values;
    double noise_var = 0.0;

    std::size_t total() const;
    bool empty() const { return total() == 0; }
    /// Flat (time, curve) index: the Zero block first, then the Delta block.
    std::vector<ObsPoint> index() const;
    Eigen::VectorXd stacked_values() const;
    void validate() const;
};

/// Mean vector and covariance matrix of a finite-dimensional Gaussian,
/// with the (time, curve) label of every coordinate.
struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    std::vector<ObsPoint> labels;

    std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

struct PredictionRequest {
    std::vector<ObsPoint> targets;
};

/// Jitter actually spent by the factorization of the observation covariance.
struct GprDiagnostics {
    double jitter = 0.0;
};

// Jitter policy: retry with eps * mean(diag) added to the diagonal,
// eps escalating through decades from kJitterEpsMin to kJitterEpsMax.
inline constexpr double kJitterEpsMin = 1e-10;
inline constexpr double kJitterEpsMax = 1e-6;

/// Cholesky factor of a symmetric matrix, obtained under the jitter policy.
struct SpdFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;    // absolute value added to each diagonal entry
    double log_det = 0.0;   // log-determinant of the jittered matrix
};

/// Factorizes `cov` (jitter policy above); throws FactorizationError if even
/// the maximum jitter fails.
SpdFactor factorize_spd(const Eigen::MatrixXd& cov);

/// Prior mean/covariance over an arbitrary (time, curve) index. noise_var is
/// added on the diagonal only.
GaussianBelief assemble_prior(const MultiCurveParams& p, const std::vector<ObsPoint>& index,
                              double T, double noise_var);
GaussianBelief assemble_prior(const SingleCurveParams& p, const std::vector<ObsPoint>& index,
                              double T, double noise_var);

/// Full log density of the observed vector under the prior, constant included:
/// log p(y) = -1/2 (y-mu)' Sigma^{-1} (y-mu) - 1/2 log det Sigma - n/2 log 2pi.
/// Computed through a Cholesky factorization, never an explicit inverse.
double log_marginal_likelihood(const MultiCurveParams& p, const ObservationSet& obs,
                               GprDiagnostics* diag = nullptr);
double log_marginal_likelihood(const SingleCurveParams& p, const ObservationSet& obs,
                               GprDiagnostics* diag = nullptr);

/// Gaussian conditioning of the requested targets on the observations.
/// An empty observation set returns the prior for the targets.
GaussianBelief posterior(const MultiCurveParams& p, const ObservationSet& obs,
                         const PredictionRequest& req, GprDiagnostics* diag = nullptr);
GaussianBelief posterior(const SingleCurveParams& p, const ObservationSet& obs,
                         const PredictionRequest& req, GprDiagnostics* diag = nullptr);

struct Band {
    double lower = 0.0;
    double upper = 0.0;
};

/// Central confidence bands mean +- z(level) * sqrt(diag). level in (0, 1).
std::vector<Band> confidence_band(const GaussianBelief& belief, double level);

/// Two-sided standard normal quantile used by confidence_band.
double normal_band_quantile(double level);

}  // namespace vasigp::gpr
