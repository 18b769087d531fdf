#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "vasigp/gpr.hpp"

namespace vasigp::metrics {

struct SplitSpec {
    enum class Strategy { Prefix, Random };
    double train_fraction = 0.70;
    Strategy strategy = Strategy::Prefix;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Partitions the observation set by grid index into (train, validation).
/// Both halves keep their times in increasing order; multi-curve values
/// travel with their time point. Requires n >= 2.
std::pair<gpr::ObservationSet, gpr::ObservationSet> split(const gpr::ObservationSet& obs,
                                                          const SplitSpec& spec);

/// Inverse of split: interleaves two sets back into one (times must not
/// collide).
gpr::ObservationSet merge(const gpr::ObservationSet& a, const gpr::ObservationSet& b);

/// Standardized mean squared error: mean squared residual divided by the
/// population variance (divide by m) of the targets. Requires m >= 2 and a
/// nonzero target variance.
double smse(const Eigen::VectorXd& predicted_mean, const Eigen::VectorXd& targets);

/// Mean standardized log loss: the average negative log marginal predictive
/// density of the targets, minus the same average under the trivial Gaussian
/// with the training values' mean and (population) variance. Negative is
/// better; the trivial model scores 0.
double msll(const gpr::GaussianBelief& posterior, const Eigen::VectorXd& targets,
            const gpr::ObservationSet& train);

struct EvalReport {
    double smse = 0.0;
    double msll = 0.0;
    std::vector<double> residuals;
    std::vector<double> predictive_vars;
};

/// Splits obs, conditions on the training half, scores the validation half.
EvalReport evaluate(const MultiCurveParams& p, const gpr::ObservationSet& obs,
                    const SplitSpec& spec);
EvalReport evaluate(const SingleCurveParams& p, const gpr::ObservationSet& obs,
                    const SplitSpec& spec);

}  // namespace vasigp::metrics
