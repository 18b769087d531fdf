#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vasigp {

/// Hyper-parameters of one Vasicek factor dr = kappa*(theta - r)dt + sigma*dW.
struct SingleCurveParams {
    double r0 = 0.0;     // initial short rate (1/year)
    double kappa = 1.0;  // mean-reversion speed (1/year), > 0
    double theta = 0.0;  // long-term mean (1/year)
    double sigma = 0.1;  // volatility (1/year/sqrt(year)), > 0

    /// Throws std::invalid_argument unless kappa, sigma are strictly
    /// positive and all fields are finite.
    void validate() const;
};

/// Two correlated Vasicek factors. The zero curve is driven by factor1
/// alone; the tenor curve discounts at the spread-adjusted rate carried
/// by factor1 and factor2 jointly.
struct MultiCurveParams {
    SingleCurveParams factor1;
    SingleCurveParams factor2;
    double rho = 0.0;  // instantaneous Brownian correlation, in [-1, 1]

    void validate() const;
};

/// Curve label: zero-coupon bonds vs tenor bonds. The label selects which
/// mean/covariance functions apply; it carries no numeric tenor value.
enum class CurveId { Zero, Delta };

std::string to_string(CurveId id);
CurveId curve_from_string(const std::string& s);

struct MaturitySpec {
    double T = 1.0;  // years, > 0 and finite
    void validate() const;
};

/// Strictly increasing observation times t_1 < ... < t_n, all in [0, T].
struct TimeGrid {
    std::vector<double> points;
    MaturitySpec maturity;

    std::size_t size() const { return points.size(); }
    double T() const { return maturity.T; }
    void validate() const;

    /// n equally spaced points dt, 2*dt, ..., n*dt with maturity T.
    static TimeGrid regular(std::size_t n, double dt, double T);
};

}  // namespace vasigp
