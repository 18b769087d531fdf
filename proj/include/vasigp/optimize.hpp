#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vasigp/gpr.hpp"
#include "vasigp/params.hpp"
#include "vasigp/rng.hpp"

namespace vasigp::opt {

enum class ModelKind { Single, Multi };
enum class Method { CG, Adam };

std::string to_string(ModelKind kind);
std::string to_string(Method m);

/// Packed parameter order: (r0, kappa, theta, sigma) per factor.
std::size_t param_count(ModelKind kind);
const std::vector<std::string>& param_names(ModelKind kind);

/// Bijection between the constrained model space (kappa, sigma > 0) and the
/// unconstrained optimizer space: log for kappa/sigma, identity otherwise.
struct ParamTransform {
    ModelKind kind = ModelKind::Single;

    Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& constrained) const;
    Eigen::VectorXd to_constrained(const Eigen::VectorXd& unconstrained) const;
    bool is_log_scaled(std::size_t i) const;
};

Eigen::VectorXd pack(const SingleCurveParams& p);
Eigen::VectorXd pack(const MultiCurveParams& p);
SingleCurveParams unpack_single(const Eigen::VectorXd& c);
MultiCurveParams unpack_multi(const Eigen::VectorXd& c, double rho);

struct OptimizerConfig {
    Method method = Method::CG;
    int max_iters = 1000;       // CG
    double grad_tol = 1e-5;     // CG stopping rule
    double learning_rate = 0.05;  // Adam
    int epochs = 700;             // Adam
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.1;
    // init_ranges are in constrained space, one [lo, hi] per packed parameter.
    std::vector<std::pair<double, double>> init_ranges;
    std::uint64_t seed = 0;
    bool record_trace = false;

    void validate() const;
};

/// Default per-parameter uniform initialization ranges (constrained space):
/// r0 in [0,1], kappa in [0.1,5], theta in [0,0.5], sigma in [0.05,1].
std::vector<std::pair<double, double>> default_init_ranges(ModelKind kind);

struct CalibrationResult {
    ModelKind kind = ModelKind::Single;
    // Packed parameter vector. minimize_cg/minimize_adam leave it in the
    // space the objective was given; the calibration harness stores the
    // constrained values.
    Eigen::VectorXd params;
    double final_nll = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_norm_final = 0.0;
    double jitter_used = 0.0;
    std::vector<std::pair<double, double>> trace;  // per-iteration (nll, grad_norm)

    SingleCurveParams single_params() const;
    MultiCurveParams multi_params(double rho) const;
};

/// Objective over the unconstrained space. `value` must map any failure
/// (domain error, factorization failure) to +infinity rather than throwing,
/// so line searches can probe freely. `gradient` defaults to central finite
/// differences of `value` with step h_i = 1e-6 * max(1, |x_i|).
struct Objective {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// Wraps a plain function with the default finite-difference gradient.
Objective make_fd_objective(std::function<double(const Eigen::VectorXd&)> f);

/// Negative log marginal likelihood of `obs` as a function of the
/// unconstrained parameter point. Holds a small factorization cache keyed by
/// the covariance-relevant parameters, so the finite-difference sweeps over
/// mean-only parameters (r0, theta) reuse the current Cholesky factor.
/// Instances are not thread-safe; create one per optimizer run.
class NllObjective {
  public:
    NllObjective(gpr::ObservationSet obs, ModelKind kind, double rho);
    ~NllObjective();
    NllObjective(NllObjective&&) noexcept;
    NllObjective& operator=(NllObjective&&) noexcept;

    double value(const Eigen::VectorXd& u) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
    Objective as_objective() const;

    ModelKind kind() const;
    double rho() const;
    /// Jitter spent by the most recent successful evaluation.
    double last_jitter() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Polak-Ribiere nonlinear conjugate gradient with a strong Wolfe line
/// search (initial step 1, expansion factor 2, at most 25 evaluations);
/// beta = max(0, beta_PR), steepest-descent restart when beta = 0 or every
/// 10*dim iterations. Stops at grad_tol or max_iters; on line-search failure
/// returns the best point seen with converged = false.
CalibrationResult minimize_cg(const Objective& objective, const Eigen::VectorXd& x0,
                              const OptimizerConfig& config);

/// Full-batch Adam with bias correction (beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8); runs exactly `epochs` steps and returns the best-seen
/// iterate, not the last.
CalibrationResult minimize_adam(const Objective& objective, const Eigen::VectorXd& x0,
                                const OptimizerConfig& config);

/// Uniform draw per parameter inside `ranges` (constrained space), mapped to
/// the unconstrained space.
Eigen::VectorXd random_init(ModelKind kind, const std::vector<std::pair<double, double>>& ranges,
                            rng::Rng& rng);

/// Writes the per-iteration trace as CSV (iter, nll, grad_norm).
void write_trace_csv(const std::string& path, const CalibrationResult& result);

}  // namespace vasigp::opt
