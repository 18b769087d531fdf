#include "vasigp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace vasigp::metrics {

namespace {

gpr::ObservationSet subset(const gpr::ObservationSet& obs, const std::vector<std::size_t>& idx) {
    gpr::ObservationSet out;
    out.noise_var = obs.noise_var;
    out.grid.maturity = obs.grid.maturity;
    out.grid.points.reserve(idx.size());
    for (std::size_t i : idx) out.grid.points.push_back(obs.grid.points[i]);
    for (const auto& [curve, vals] : obs.values) {
        auto& v = out.values[curve];
        v.reserve(idx.size());
        for (std::size_t i : idx) v.push_back(vals[i]);
    }
    return out;
}

double neg_log_normal(double x, double mean, double var) {
    const double d = x - mean;
    return 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5 * d * d / var;
}

}  // namespace

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("SplitSpec: train_fraction must lie in (0, 1)");
    }
}

std::pair<gpr::ObservationSet, gpr::ObservationSet> split(const gpr::ObservationSet& obs,
                                                          const SplitSpec& spec) {
    spec.validate();
    obs.validate();
    const std::size_t n = obs.grid.size();
    if (obs.values.empty() || n < 2) {
        throw std::invalid_argument("split: at least two observed time points required");
    }
    std::size_t k = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
    k = std::clamp<std::size_t>(k, 1, n - 1);

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> train_idx;
    if (spec.strategy == SplitSpec::Strategy::Prefix) {
        train_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
        std::mt19937_64 engine(spec.seed);
        std::sample(all.begin(), all.end(), std::back_inserter(train_idx), k, engine);
    }
    std::vector<std::size_t> val_idx;
    std::set_difference(all.begin(), all.end(), train_idx.begin(), train_idx.end(),
                        std::back_inserter(val_idx));
    return {subset(obs, train_idx), subset(obs, val_idx)};
}

gpr::ObservationSet merge(const gpr::ObservationSet& a, const gpr::ObservationSet& b) {
    if (a.values.empty()) return b;
    if (b.values.empty()) return a;
    gpr::ObservationSet out;
    out.noise_var = a.noise_var;
    out.grid.maturity = a.grid.maturity;
    const std::size_t na = a.grid.size();
    const std::size_t nb = b.grid.size();
    std::size_t i = 0, j = 0;
    std::vector<bool> from_a;
    while (i < na || j < nb) {
        const bool take_a = j >= nb || (i < na && a.grid.points[i] < b.grid.points[j]);
        out.grid.points.push_back(take_a ? a.grid.points[i] : b.grid.points[j]);
        from_a.push_back(take_a);
        (take_a ? i : j)++;
    }
    for (const auto& [curve, va] : a.values) {
        const auto& vb = b.values.at(curve);
        auto& v = out.values[curve];
        i = j = 0;
        for (bool ta : from_a) v.push_back(ta ? va[i++] : vb[j++]);
    }
    out.validate();
    return out;
}

double smse(const Eigen::VectorXd& predicted_mean, const Eigen::VectorXd& targets) {
    if (predicted_mean.size() != targets.size()) {
        throw std::invalid_argument("smse: size mismatch");
    }
    const auto m = targets.size();
    if (m < 2) throw std::invalid_argument("smse: at least two targets required");
    const double mean = targets.mean();
    const double var = (targets.array() - mean).square().sum() / static_cast<double>(m);
    if (!(var > 0.0)) throw std::domain_error("smse: target variance is zero");
    const double mse = (targets - predicted_mean).squaredNorm() / static_cast<double>(m);
    return mse / var;
}

double msll(const gpr::GaussianBelief& posterior, const Eigen::VectorXd& targets,
            const gpr::ObservationSet& train) {
    const auto m = targets.size();
    if (static_cast<std::size_t>(m) != posterior.size() || m == 0) {
        throw std::invalid_argument("msll: posterior/target size mismatch");
    }
    const Eigen::VectorXd y_train = train.stacked_values();
    if (y_train.size() == 0) throw std::invalid_argument("msll: empty training set");
    const double m_train = y_train.mean();
    const double v_train =
        (y_train.array() - m_train).square().sum() / static_cast<double>(y_train.size());
    if (!(v_train > 0.0)) throw std::domain_error("msll: training variance is zero");

    double model_loss = 0.0;
    double trivial_loss = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        double var = posterior.cov(i, i);
        if (var <= 0.0) {
            if (var < -1e-12) throw std::domain_error("msll: negative predictive variance");
            var = 0.0;
        }
        var = std::max(var, 1e-30);
        model_loss += neg_log_normal(targets[i], posterior.mean[i], var);
        trivial_loss += neg_log_normal(targets[i], m_train, v_train);
    }
    return (model_loss - trivial_loss) / static_cast<double>(m);
}

namespace {

template <typename Params>
EvalReport evaluate_impl(const Params& p, const gpr::ObservationSet& obs, const SplitSpec& spec) {
    const auto [train, validation] = split(obs, spec);
    gpr::PredictionRequest req{validation.index()};
    const auto post = gpr::posterior(p, train, req);
    const Eigen::VectorXd targets = validation.stacked_values();

    EvalReport report;
    report.smse = smse(post.mean, targets);
    report.msll = msll(post, targets, train);
    report.residuals.resize(static_cast<std::size_t>(targets.size()));
    report.predictive_vars.resize(static_cast<std::size_t>(targets.size()));
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        report.residuals[static_cast<std::size_t>(i)] = targets[i] - post.mean[i];
        report.predictive_vars[static_cast<std::size_t>(i)] = post.cov(i, i);
    }
    return report;
}

}  // namespace

EvalReport evaluate(const MultiCurveParams& p, const gpr::ObservationSet& obs,
                    const SplitSpec& spec) {
    return evaluate_impl(p, obs, spec);
}

EvalReport evaluate(const SingleCurveParams& p, const gpr::ObservationSet& obs,
                    const SplitSpec& spec) {
    return evaluate_impl(p, obs, spec);
}

}  // namespace vasigp::metrics
