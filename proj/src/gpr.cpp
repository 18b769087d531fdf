#include "vasigp/gpr.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vasigp/affine.hpp"

namespace vasigp::gpr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

MultiCurveParams lift(const SingleCurveParams& p) {
    MultiCurveParams m;
    m.factor1 = p;
    m.factor2 = SingleCurveParams{0.0, 1.0, 0.0, 0.0};  // inert second factor
    m.rho = 0.0;
    return m;
}

void require_zero_only(const std::vector<ObsPoint>& index) {
    for (const auto& pt : index) {
        if (pt.curve != CurveId::Zero) {
            throw std::invalid_argument(
                "gpr: tenor-curve coordinates require multi-curve parameters");
        }
    }
}

// Covariance over an arbitrary (time, curve) index. Exponentials are
// precomputed per coordinate; e^{-kappa |ti - tj|} is formed as a quotient,
// which agrees with the direct closed form to a few ulp. Falls back to
// entrywise evaluation if any precomputed exponential underflows.
Eigen::MatrixXd assemble_cov(const MultiCurveParams& p, const std::vector<ObsPoint>& index,
                             double T) {
    const auto n = static_cast<Eigen::Index>(index.size());
    Eigen::MatrixXd cov(n, n);
    const double k1 = p.factor1.kappa;
    const double k2 = p.factor2.kappa;
    const double s1 = p.factor1.sigma;
    const double s2 = p.factor2.sigma;
    const double c11 = s1 * s1 / (2.0 * k1);
    const double c22 = s2 * s2 / (2.0 * k2);
    const double c12 = p.rho * s1 * s2 / (k1 + k2);

    bool fast = true;
    Eigen::VectorXd u(n), v(n), l1(n), l2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pt = index[static_cast<std::size_t>(i)];
        if (!(pt.t >= 0.0) || !(pt.t <= T)) {
            throw std::domain_error("gpr: index time outside [0, T]");
        }
        u[i] = std::exp(-k1 * pt.t);
        v[i] = std::exp(-k2 * pt.t);
        // the factor-1 loading is psi1 = -B on both curves
        l1[i] = affine::psi1(k1, T - pt.t);
        l2[i] = pt.curve == CurveId::Zero ? 0.0 : affine::psi2(k2, T - pt.t);
        if (u[i] == 0.0 || v[i] == 0.0) fast = false;
    }

    if (!fast) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const auto& a = index[static_cast<std::size_t>(i)];
                const auto& b = index[static_cast<std::size_t>(j)];
                const double cij = affine::cov_log_bond(p, a.curve, b.curve, a.t, b.t, T);
                cov(i, j) = cij;
                cov(j, i) = cij;
            }
        }
        return cov;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = index[static_cast<std::size_t>(i)].t;
        const bool zero_i = index[static_cast<std::size_t>(i)].curve == CurveId::Zero;
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double tj = index[static_cast<std::size_t>(j)].t;
            const bool zero_j = index[static_cast<std::size_t>(j)].curve == CurveId::Zero;
            // factor moments; lo/hi order the pair by time
            const Eigen::Index lo = ti <= tj ? i : j;
            const Eigen::Index hi = ti <= tj ? j : i;
            const double v11 = c11 * (u[hi] / u[lo] - u[i] * u[j]);
            double entry;
            if (zero_i && zero_j) {
                entry = l1[i] * l1[j] * v11;
            } else {
                // cross moment Cov(r1_s, r2_t) for s = t_lo, t = t_hi is
                // c12 (e^{-k2(t-s)} - e^{-(k1 s + k2 t)}); mirrored otherwise.
                const double x_lo_hi = c12 * (v[hi] / v[lo] - u[lo] * v[hi]);
                const double x_hi_lo = c12 * (u[hi] / u[lo] - u[hi] * v[lo]);
                if (zero_i != zero_j) {
                    const Eigen::Index z = zero_i ? i : j;   // zero-curve point
                    const Eigen::Index d = zero_i ? j : i;   // tenor point
                    const double x_zd = (z == lo) ? x_lo_hi : x_hi_lo;
                    entry = l1[z] * l1[d] * v11 + l1[z] * l2[d] * x_zd;
                } else {
                    const double v22 = c22 * (v[hi] / v[lo] - v[i] * v[j]);
                    entry = l1[i] * l1[j] * v11 + l1[lo] * l2[hi] * x_lo_hi +
                            l1[hi] * l2[lo] * x_hi_lo + l2[i] * l2[j] * v22;
                }
            }
            cov(i, j) = entry;
            cov(j, i) = entry;
        }
    }
    return cov;
}

}  // namespace

std::size_t ObservationSet::total() const {
    std::size_t n = 0;
    for (const auto& [curve, vals] : values) n += vals.size();
    return n;
}

std::vector<ObsPoint> ObservationSet::index() const {
    std::vector<ObsPoint> idx;
    idx.reserve(total());
    for (const auto& [curve, vals] : values) {  // map order: Zero then Delta
        for (std::size_t i = 0; i < vals.size(); ++i) {
            idx.push_back({grid.points[i], curve});
        }
    }
    return idx;
}

Eigen::VectorXd ObservationSet::stacked_values() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(total()));
    Eigen::Index k = 0;
    for (const auto& [curve, vals] : values) {
        for (double value : vals) y[k++] = value;
    }
    return y;
}

void ObservationSet::validate() const {
    if (values.empty()) return;  // legal: empty set conditions on nothing
    grid.validate();
    for (const auto& [curve, vals] : values) {
        if (vals.size() != grid.size()) {
            throw std::invalid_argument("ObservationSet: value count must match grid (" +
                                        to_string(curve) + ")");
        }
        for (double value : vals) {
            if (!std::isfinite(value)) {
                throw std::invalid_argument("ObservationSet: values must be finite");
            }
        }
    }
    if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
        throw std::invalid_argument("ObservationSet: noise_var must be finite and >= 0");
    }
}

SpdFactor factorize_spd(const Eigen::MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    const double mean_diag = cov.diagonal().mean();
    SpdFactor out;
    // A zero diagonal entry cannot factorize; skip the doomed attempt.
    const bool singular_diag = cov.diagonal().minCoeff() <= 0.0;
    for (double eps = singular_diag ? kJitterEpsMin : 0.0;;) {
        Eigen::MatrixXd shifted = cov;
        const double jitter = eps * mean_diag;
        if (jitter > 0.0) shifted.diagonal().array() += jitter;
        out.llt.compute(shifted);
        if (out.llt.info() == Eigen::Success) {
            double log_det = 0.0;
            const auto& L = out.llt.matrixLLT();
            bool ok = true;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double pivot = L(i, i);
                if (!(pivot > 0.0) || !std::isfinite(pivot)) {
                    ok = false;
                    break;
                }
                log_det += std::log(pivot);
            }
            if (ok) {
                out.jitter = jitter;
                out.log_det = 2.0 * log_det;
                return out;
            }
        }
        if (eps == 0.0) {
            eps = kJitterEpsMin;
        } else if (eps < kJitterEpsMax / 2.0) {
            eps *= 10.0;
        } else {
            break;
        }
    }
    throw FactorizationError("gpr: covariance not factorizable at maximum jitter");
}

GaussianBelief assemble_prior(const MultiCurveParams& p, const std::vector<ObsPoint>& index,
                              double T, double noise_var) {
    if (!(noise_var >= 0.0)) throw std::invalid_argument("assemble_prior: noise_var must be >= 0");
    GaussianBelief belief;
    belief.labels = index;
    const auto n = static_cast<Eigen::Index>(index.size());
    belief.mean.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pt = index[static_cast<std::size_t>(i)];
        belief.mean[i] = affine::mean_log_bond(p, pt.curve, pt.t, T);
    }
    belief.cov = assemble_cov(p, index, T);
    if (noise_var > 0.0) belief.cov.diagonal().array() += noise_var;
    return belief;
}

GaussianBelief assemble_prior(const SingleCurveParams& p, const std::vector<ObsPoint>& index,
                              double T, double noise_var) {
    require_zero_only(index);
    return assemble_prior(lift(p), index, T, noise_var);
}

double log_marginal_likelihood(const MultiCurveParams& p, const ObservationSet& obs,
                               GprDiagnostics* diag) {
    obs.validate();
    if (obs.empty()) return 0.0;
    const auto prior = assemble_prior(p, obs.index(), obs.grid.T(), obs.noise_var);
    const auto factor = factorize_spd(prior.cov);
    if (diag != nullptr) diag->jitter = factor.jitter;
    const Eigen::VectorXd resid = obs.stacked_values() - prior.mean;
    const Eigen::VectorXd white = factor.llt.matrixL().solve(resid);
    const auto n = static_cast<double>(resid.size());
    return -0.5 * white.squaredNorm() - 0.5 * factor.log_det - 0.5 * n * std::log(kTwoPi);
}

double log_marginal_likelihood(const SingleCurveParams& p, const ObservationSet& obs,
                               GprDiagnostics* diag) {
    require_zero_only(obs.index());
    return log_marginal_likelihood(lift(p), obs, diag);
}

GaussianBelief posterior(const MultiCurveParams& p, const ObservationSet& obs,
                         const PredictionRequest& req, GprDiagnostics* diag) {
    obs.validate();
    if (req.targets.empty()) throw std::invalid_argument("posterior: no targets requested");
    const double T = obs.grid.T();
    if (obs.empty()) {
        return assemble_prior(p, req.targets, T, 0.0);
    }

    const auto obs_index = obs.index();
    const auto m = static_cast<Eigen::Index>(req.targets.size());
    const auto n = static_cast<Eigen::Index>(obs_index.size());
    std::vector<ObsPoint> joint = req.targets;
    joint.insert(joint.end(), obs_index.begin(), obs_index.end());

    const auto prior = assemble_prior(p, joint, T, 0.0);
    Eigen::MatrixXd cov_yy = prior.cov.bottomRightCorner(n, n);
    if (obs.noise_var > 0.0) cov_yy.diagonal().array() += obs.noise_var;
    const auto factor = factorize_spd(cov_yy);
    if (diag != nullptr) diag->jitter = factor.jitter;

    const Eigen::MatrixXd cov_ty = prior.cov.topRightCorner(m, n);
    const Eigen::VectorXd resid = obs.stacked_values() - prior.mean.tail(n);

    GaussianBelief post;
    post.labels = req.targets;
    post.mean = prior.mean.head(m) + cov_ty * factor.llt.solve(resid);
    const Eigen::MatrixXd white = factor.llt.matrixL().solve(cov_ty.transpose());
    post.cov = prior.cov.topLeftCorner(m, m) - white.transpose() * white;
    post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
    return post;
}

GaussianBelief posterior(const SingleCurveParams& p, const ObservationSet& obs,
                         const PredictionRequest& req, GprDiagnostics* diag) {
    require_zero_only(obs.index());
    require_zero_only(req.targets);
    return posterior(lift(p), obs, req, diag);
}

double normal_band_quantile(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw std::domain_error("confidence_band: level must lie in (0, 1)");
    }
    const boost::math::normal_distribution<double> unit;
    return boost::math::quantile(unit, 0.5 * (1.0 + level));
}

std::vector<Band> confidence_band(const GaussianBelief& belief, double level) {
    const double z = normal_band_quantile(level);
    std::vector<Band> bands(belief.size());
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const double sd = std::sqrt(std::max(belief.cov(idx, idx), 0.0));
        bands[i] = {belief.mean[idx] - z * sd, belief.mean[idx] + z * sd};
    }
    return bands;
}

}  // namespace vasigp::gpr
