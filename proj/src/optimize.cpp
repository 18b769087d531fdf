#include "vasigp/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "vasigp/affine.hpp"

namespace vasigp::opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr int kMaxLineSearchEvals = 25;

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

}  // namespace

std::string to_string(ModelKind kind) {
    return kind == ModelKind::Single ? "single" : "multi";
}

std::string to_string(Method m) {
    return m == Method::CG ? "cg" : "adam";
}

std::size_t param_count(ModelKind kind) {
    return kind == ModelKind::Single ? 4 : 8;
}

const std::vector<std::string>& param_names(ModelKind kind) {
    static const std::vector<std::string> single = {"r0", "kappa", "theta", "sigma"};
    static const std::vector<std::string> multi = {"r0_1", "kappa_1", "theta_1", "sigma_1",
                                                   "r0_2", "kappa_2", "theta_2", "sigma_2"};
    return kind == ModelKind::Single ? single : multi;
}

bool ParamTransform::is_log_scaled(std::size_t i) const {
    return (i % 4) == 1 || (i % 4) == 3;  // kappa and sigma slots
}

Eigen::VectorXd ParamTransform::to_unconstrained(const Eigen::VectorXd& constrained) const {
    Eigen::VectorXd u = constrained;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (is_log_scaled(static_cast<std::size_t>(i))) {
            if (!(constrained[i] > 0.0)) {
                throw std::domain_error("ParamTransform: log-scaled parameter must be > 0");
            }
            u[i] = std::log(constrained[i]);
        }
    }
    return u;
}

Eigen::VectorXd ParamTransform::to_constrained(const Eigen::VectorXd& unconstrained) const {
    Eigen::VectorXd c = unconstrained;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (is_log_scaled(static_cast<std::size_t>(i))) c[i] = std::exp(unconstrained[i]);
    }
    return c;
}

Eigen::VectorXd pack(const SingleCurveParams& p) {
    Eigen::VectorXd v(4);
    v << p.r0, p.kappa, p.theta, p.sigma;
    return v;
}

Eigen::VectorXd pack(const MultiCurveParams& p) {
    Eigen::VectorXd v(8);
    v << p.factor1.r0, p.factor1.kappa, p.factor1.theta, p.factor1.sigma, p.factor2.r0,
        p.factor2.kappa, p.factor2.theta, p.factor2.sigma;
    return v;
}

SingleCurveParams unpack_single(const Eigen::VectorXd& c) {
    if (c.size() != 4) throw std::invalid_argument("unpack_single: expected 4 parameters");
    return SingleCurveParams{c[0], c[1], c[2], c[3]};
}

MultiCurveParams unpack_multi(const Eigen::VectorXd& c, double rho) {
    if (c.size() != 8) throw std::invalid_argument("unpack_multi: expected 8 parameters");
    MultiCurveParams p;
    p.factor1 = SingleCurveParams{c[0], c[1], c[2], c[3]};
    p.factor2 = SingleCurveParams{c[4], c[5], c[6], c[7]};
    p.rho = rho;
    return p;
}

void OptimizerConfig::validate() const {
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
        throw std::invalid_argument("OptimizerConfig: require 0 < c1 < c2 < 1");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("OptimizerConfig: learning_rate must be > 0");
    }
    if (epochs < 1) throw std::invalid_argument("OptimizerConfig: epochs must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 1");
    if (!(grad_tol > 0.0)) throw std::invalid_argument("OptimizerConfig: grad_tol must be > 0");
}

std::vector<std::pair<double, double>> default_init_ranges(ModelKind kind) {
    const std::vector<std::pair<double, double>> per_factor = {
        {0.0, 1.0},   // r0
        {0.1, 5.0},   // kappa
        {0.0, 0.5},   // theta
        {0.05, 1.0},  // sigma
    };
    std::vector<std::pair<double, double>> ranges = per_factor;
    if (kind == ModelKind::Multi) {
        ranges.insert(ranges.end(), per_factor.begin(), per_factor.end());
    }
    return ranges;
}

SingleCurveParams CalibrationResult::single_params() const {
    return unpack_single(params);
}

MultiCurveParams CalibrationResult::multi_params(double rho) const {
    return unpack_multi(params, rho);
}

Objective make_fd_objective(std::function<double(const Eigen::VectorXd&)> f) {
    Objective obj;
    obj.value = f;
    obj.gradient = [f](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(x.size());
        Eigen::VectorXd probe = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double h = fd_step(x[i]);
            probe[i] = x[i] + h;
            const double fp = f(probe);
            probe[i] = x[i] - h;
            const double fm = f(probe);
            probe[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    };
    return obj;
}

// ---------------------------------------------------------------------------
// Negative log marginal likelihood objective

struct NllObjective::Impl {
    gpr::ObservationSet obs;
    ModelKind kind;
    double rho;
    ParamTransform transform;

    std::vector<gpr::ObsPoint> index;
    Eigen::VectorXd y;
    double T = 1.0;

    // Cholesky factors keyed by the covariance-relevant parameters
    // (kappa/sigma per factor, rho, noise). The finite-difference sweep over
    // r0/theta re-uses the cached factor of the unperturbed point.
    struct CacheEntry {
        std::array<double, 5> key;
        gpr::SpdFactor factor;
    };
    mutable std::deque<CacheEntry> cache;
    mutable double last_jitter = 0.0;
    static constexpr std::size_t kCacheCapacity = 12;

    std::array<double, 5> cov_key(const Eigen::VectorXd& c) const {
        if (kind == ModelKind::Single) return {c[1], c[3], 0.0, 0.0, obs.noise_var};
        return {c[1], c[3], c[5], c[7], obs.noise_var};
    }

    const gpr::SpdFactor& factor_for(const Eigen::VectorXd& c) const {
        const auto key = cov_key(c);
        for (const auto& entry : cache) {
            if (entry.key == key) return entry.factor;
        }
        Eigen::MatrixXd cov;
        if (kind == ModelKind::Single) {
            cov = gpr::assemble_prior(unpack_single(c), index, T, obs.noise_var).cov;
        } else {
            cov = gpr::assemble_prior(unpack_multi(c, rho), index, T, obs.noise_var).cov;
        }
        if (cache.size() >= kCacheCapacity) cache.pop_front();
        cache.push_back({key, gpr::factorize_spd(cov)});
        return cache.back().factor;
    }

    Eigen::VectorXd mean_for(const Eigen::VectorXd& c) const {
        Eigen::VectorXd mu(y.size());
        if (kind == ModelKind::Single) {
            const auto p = unpack_single(c);
            for (Eigen::Index i = 0; i < mu.size(); ++i) {
                mu[i] = affine::mean_log_bond(p, index[static_cast<std::size_t>(i)].t, T);
            }
        } else {
            const auto p = unpack_multi(c, rho);
            for (Eigen::Index i = 0; i < mu.size(); ++i) {
                const auto& pt = index[static_cast<std::size_t>(i)];
                mu[i] = affine::mean_log_bond(p, pt.curve, pt.t, T);
            }
        }
        return mu;
    }

    double value(const Eigen::VectorXd& u) const {
        if (u.size() != static_cast<Eigen::Index>(param_count(kind))) {
            throw std::invalid_argument("NllObjective: wrong parameter dimension");
        }
        if (!u.allFinite()) return kInf;
        try {
            const Eigen::VectorXd c = transform.to_constrained(u);
            if (!c.allFinite() || c[1] <= 0.0 || c[3] <= 0.0 ||
                (kind == ModelKind::Multi && (c[5] <= 0.0 || c[7] <= 0.0))) {
                return kInf;  // exp under/overflow maps to the barrier
            }
            const auto& factor = factor_for(c);
            const Eigen::VectorXd resid = y - mean_for(c);
            const Eigen::VectorXd white = factor.llt.matrixL().solve(resid);
            const double n = static_cast<double>(y.size());
            const double nll = 0.5 * white.squaredNorm() + 0.5 * factor.log_det +
                               0.5 * n * std::log(2.0 * std::numbers::pi);
            last_jitter = factor.jitter;
            return std::isfinite(nll) ? nll : kInf;
        } catch (const std::exception&) {
            return kInf;
        }
    }
};

NllObjective::NllObjective(gpr::ObservationSet obs, ModelKind kind, double rho)
    : impl_(std::make_unique<Impl>()) {
    obs.validate();
    if (obs.empty()) throw std::invalid_argument("NllObjective: empty observation set");
    if (kind == ModelKind::Single && obs.values.count(CurveId::Delta) > 0) {
        throw std::invalid_argument("NllObjective: tenor curve requires the multi model");
    }
    impl_->obs = std::move(obs);
    impl_->kind = kind;
    impl_->rho = rho;
    impl_->transform.kind = kind;
    impl_->index = impl_->obs.index();
    impl_->y = impl_->obs.stacked_values();
    impl_->T = impl_->obs.grid.T();
}

NllObjective::~NllObjective() = default;
NllObjective::NllObjective(NllObjective&&) noexcept = default;
NllObjective& NllObjective::operator=(NllObjective&&) noexcept = default;

double NllObjective::value(const Eigen::VectorXd& u) const { return impl_->value(u); }

Eigen::VectorXd NllObjective::gradient(const Eigen::VectorXd& u) const {
    Eigen::VectorXd g(u.size());
    Eigen::VectorXd probe = u;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double h = fd_step(u[i]);
        probe[i] = u[i] + h;
        const double fp = impl_->value(probe);
        probe[i] = u[i] - h;
        const double fm = impl_->value(probe);
        probe[i] = u[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Objective NllObjective::as_objective() const {
    Objective obj;
    obj.value = [this](const Eigen::VectorXd& u) { return value(u); };
    obj.gradient = [this](const Eigen::VectorXd& u) { return gradient(u); };
    return obj;
}

ModelKind NllObjective::kind() const { return impl_->kind; }
double NllObjective::rho() const { return impl_->rho; }
double NllObjective::last_jitter() const { return impl_->last_jitter; }

// ---------------------------------------------------------------------------
// Optimizers

namespace {

struct LineSearchResult {
    bool ok = false;
    double alpha = 0.0;
    double f = kInf;
    Eigen::VectorXd x;
    Eigen::VectorXd grad;
};

// Strong Wolfe line search (bracket + zoom with safeguarded quadratic
// interpolation). Values are probed first; gradients are evaluated only at
// points that pass the sufficient-decrease test. Budget counts value probes.
// If the curvature condition cannot be certified within budget, the best
// sufficient-decrease point found is accepted; hard failure means not even
// such a point exists.
LineSearchResult strong_wolfe(const Objective& obj, const Eigen::VectorXd& x0, double f0,
                              const Eigen::VectorXd& g0, const Eigen::VectorXd& d, double c1,
                              double c2) {
    LineSearchResult out;
    const double dphi0 = g0.dot(d);
    if (!(dphi0 < 0.0)) return out;

    int budget = kMaxLineSearchEvals;
    const auto probe = [&](double alpha, double& f, Eigen::VectorXd& x) {
        x = x0 + alpha * d;
        f = obj.value(x);
        --budget;
    };
    const auto accept = [&](double alpha, double f, Eigen::VectorXd x, Eigen::VectorXd g) {
        out.ok = true;
        out.alpha = alpha;
        out.f = f;
        out.x = std::move(x);
        out.grad = std::move(g);
    };

    double alpha_lo = 0.0, f_lo = f0, dphi_lo = dphi0;
    Eigen::VectorXd x_lo = x0, g_lo = g0;
    bool have_hi = false;
    double alpha_hi = 0.0, f_hi = kInf;

    double alpha_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    Eigen::VectorXd x_prev = x0, g_prev = g0;
    double alpha = 1.0;
    bool first = true;
    while (budget > 0) {
        double f_a;
        Eigen::VectorXd x_a;
        probe(alpha, f_a, x_a);
        if (f_a > f0 + c1 * alpha * dphi0 || (!first && f_a >= f_prev)) {
            alpha_lo = alpha_prev;
            f_lo = f_prev;
            dphi_lo = dphi_prev;
            x_lo = x_prev;
            g_lo = g_prev;
            alpha_hi = alpha;
            f_hi = f_a;
            have_hi = true;
            break;
        }
        const Eigen::VectorXd g_a = obj.gradient(x_a);
        const double dphi_a = g_a.dot(d);
        if (std::abs(dphi_a) <= -c2 * dphi0) {
            accept(alpha, f_a, std::move(x_a), g_a);
            return out;
        }
        if (dphi_a >= 0.0) {
            alpha_lo = alpha;
            f_lo = f_a;
            dphi_lo = dphi_a;
            x_lo = std::move(x_a);
            g_lo = g_a;
            alpha_hi = alpha_prev;
            f_hi = f_prev;
            have_hi = true;
            break;
        }
        alpha_prev = alpha;
        f_prev = f_a;
        dphi_prev = dphi_a;
        x_prev = std::move(x_a);
        g_prev = g_a;
        alpha *= 2.0;  // expansion
        first = false;
    }

    if (have_hi) {
        // zoom: quadratic interpolation through (f_lo, dphi_lo, f_hi)
        while (budget > 0) {
            const double width = alpha_hi - alpha_lo;
            double frac = 0.5;
            if (std::isfinite(f_hi)) {
                const double denom = f_hi - f_lo - dphi_lo * width;
                if (std::isfinite(denom) && denom > 0.0) {
                    frac = -0.5 * dphi_lo * width / denom;
                }
            } else {
                frac = 0.1;  // creep toward the finite end
            }
            frac = std::clamp(frac, 1e-3, 0.9);
            const double mid = alpha_lo + frac * width;
            if (mid == alpha_lo || mid == alpha_hi) break;
            double f_m;
            Eigen::VectorXd x_m;
            probe(mid, f_m, x_m);
            if (f_m > f0 + c1 * mid * dphi0 || f_m >= f_lo) {
                alpha_hi = mid;
                f_hi = f_m;
            } else {
                const Eigen::VectorXd g_m = obj.gradient(x_m);
                const double dphi_m = g_m.dot(d);
                if (std::abs(dphi_m) <= -c2 * dphi0) {
                    accept(mid, f_m, std::move(x_m), g_m);
                    return out;
                }
                if (dphi_m * (alpha_hi - alpha_lo) >= 0.0) {
                    alpha_hi = alpha_lo;
                    f_hi = f_lo;
                }
                alpha_lo = mid;
                f_lo = f_m;
                dphi_lo = dphi_m;
                x_lo = std::move(x_m);
                g_lo = g_m;
            }
            if (alpha_hi == alpha_lo) break;
        }
    }
    if (alpha_lo > 0.0 && f_lo < f0) {
        accept(alpha_lo, f_lo, std::move(x_lo), std::move(g_lo));
    }
    return out;
}

}  // namespace

CalibrationResult minimize_cg(const Objective& objective, const Eigen::VectorXd& x0,
                              const OptimizerConfig& config) {
    config.validate();
    CalibrationResult result;
    result.kind = x0.size() == 8 ? ModelKind::Multi : ModelKind::Single;
    const auto dim = x0.size();
    const int restart_period = 10 * static_cast<int>(dim);

    Eigen::VectorXd x = x0;
    double f = objective.value(x);
    Eigen::VectorXd g = objective.gradient(x);

    Eigen::VectorXd best_x = x;
    double best_f = f;

    if (config.record_trace) result.trace.emplace_back(f, g.norm());
    if (g.norm() <= config.grad_tol) {
        result.params = x;
        result.final_nll = f;
        result.converged = true;
        result.grad_norm_final = g.norm();
        return result;
    }

    Eigen::VectorXd d = -g;
    int iter = 0;
    bool converged = false;
    while (iter < config.max_iters) {
        ++iter;
        if (d.dot(g) >= 0.0) d = -g;  // safeguard: always descend
        auto ls = strong_wolfe(objective, x, f, g, d, config.wolfe_c1, config.wolfe_c2);
        if (!ls.ok && (d + g).norm() > 0.0) {
            // retry the failed step along steepest descent before giving up
            d = -g;
            ls = strong_wolfe(objective, x, f, g, d, config.wolfe_c1, config.wolfe_c2);
        }
        if (!ls.ok) break;

        const Eigen::VectorXd g_new = ls.grad;
        const double beta_pr = g_new.dot(g_new - g) / g.dot(g);
        double beta = std::max(0.0, beta_pr);
        if (iter % restart_period == 0) beta = 0.0;

        x = ls.x;
        f = ls.f;
        d = -g_new + beta * d;
        g = g_new;

        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        if (config.record_trace) result.trace.emplace_back(f, g.norm());
        if (g.norm() <= config.grad_tol) {
            converged = true;
            break;
        }
    }

    result.params = best_x;
    result.final_nll = best_f;
    result.iterations = iter;
    result.converged = converged;
    result.grad_norm_final = g.norm();
    return result;
}

CalibrationResult minimize_adam(const Objective& objective, const Eigen::VectorXd& x0,
                                const OptimizerConfig& config) {
    config.validate();
    CalibrationResult result;
    result.kind = x0.size() == 8 ? ModelKind::Multi : ModelKind::Single;

    Eigen::VectorXd x = x0;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(x0.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(x0.size());

    Eigen::VectorXd best_x = x0;
    double best_f = objective.value(x0);
    double grad_norm = 0.0;
    bool clean = true;

    int step = 0;
    for (; step < config.epochs; ++step) {
        const Eigen::VectorXd g = objective.gradient(x);
        if (!g.allFinite()) {
            clean = false;
            break;
        }
        grad_norm = g.norm();
        const double t = static_cast<double>(step + 1);
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
        v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * g.array().square()).matrix();
        const Eigen::ArrayXd m_hat = m.array() / (1.0 - std::pow(kAdamBeta1, t));
        const Eigen::ArrayXd v_hat = v.array() / (1.0 - std::pow(kAdamBeta2, t));
        x = (x.array() - config.learning_rate * m_hat / (v_hat.sqrt() + kAdamEps)).matrix();

        const double f = objective.value(x);
        if (config.record_trace) result.trace.emplace_back(f, grad_norm);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }

    result.params = best_x;
    result.final_nll = best_f;
    result.iterations = step;
    result.converged = clean && std::isfinite(best_f);
    result.grad_norm_final = grad_norm;
    return result;
}

Eigen::VectorXd random_init(ModelKind kind, const std::vector<std::pair<double, double>>& ranges,
                            rng::Rng& rng) {
    const std::size_t dim = param_count(kind);
    if (ranges.size() != dim) {
        throw std::invalid_argument("random_init: one range per parameter required");
    }
    ParamTransform transform{kind};
    Eigen::VectorXd c(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        const auto [lo, hi] = ranges[i];
        if (!(lo <= hi)) throw std::invalid_argument("random_init: range lo must be <= hi");
        if (transform.is_log_scaled(i) && !(lo > 0.0)) {
            throw std::invalid_argument("random_init: positive parameters need ranges with lo > 0");
        }
        c[static_cast<Eigen::Index>(i)] = rng.uniform(lo, hi);
    }
    return transform.to_unconstrained(c);
}

void write_trace_csv(const std::string& path, const CalibrationResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
    out << "iter,nll,grad_norm\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        out << i << ',' << result.trace[i].first << ',' << result.trace[i].second << '\n';
    }
}

}  // namespace vasigp::opt
