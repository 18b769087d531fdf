#include "vasigp/params.hpp"

#include <cmath>
#include <stdexcept>

namespace vasigp {

void SingleCurveParams::validate() const {
    if (!std::isfinite(r0) || !std::isfinite(kappa) || !std::isfinite(theta) ||
        !std::isfinite(sigma)) {
        throw std::invalid_argument("SingleCurveParams: all fields must be finite");
    }
    if (kappa <= 0.0) throw std::invalid_argument("SingleCurveParams: kappa must be > 0");
    if (sigma <= 0.0) throw std::invalid_argument("SingleCurveParams: sigma must be > 0");
}

void MultiCurveParams::validate() const {
    factor1.validate();
    factor2.validate();
    if (!(rho >= -1.0 && rho <= 1.0)) {
        throw std::invalid_argument("MultiCurveParams: rho must lie in [-1, 1]");
    }
}

std::string to_string(CurveId id) {
    return id == CurveId::Zero ? "zero" : "delta";
}

CurveId curve_from_string(const std::string& s) {
    if (s == "zero") return CurveId::Zero;
    if (s == "delta") return CurveId::Delta;
    throw std::invalid_argument("unknown curve id: " + s);
}

void MaturitySpec::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("MaturitySpec: T must be positive and finite");
    }
}

void TimeGrid::validate() const {
    maturity.validate();
    if (points.empty()) throw std::invalid_argument("TimeGrid: at least one point required");
    double prev = -1.0;
    for (double t : points) {
        if (!std::isfinite(t) || t < 0.0) {
            throw std::invalid_argument("TimeGrid: points must be finite and >= 0");
        }
        if (t <= prev) throw std::invalid_argument("TimeGrid: points must be strictly increasing");
        prev = t;
    }
    if (points.back() > maturity.T) {
        throw std::invalid_argument("TimeGrid: points must not exceed maturity");
    }
}

TimeGrid TimeGrid::regular(std::size_t n, double dt, double T) {
    TimeGrid grid;
    grid.maturity.T = T;
    grid.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid.points[i] = static_cast<double>(i + 1) * dt;
    }
    if (n > 0 && grid.points.back() > T) grid.points.back() = T;  // guard n*dt roundoff
    grid.validate();
    return grid;
}

}  // namespace vasigp
