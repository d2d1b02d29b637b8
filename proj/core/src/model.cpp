#include "hfpk/model.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "hfpk/error.hpp"

namespace hfpk {

ModelParams ModelParams::defaults() {
    ModelParams p;
    p.I = p.m * p.h * p.h;
    p.K = 0.8 * p.mgh();
    p.P = 0.25 * p.mgh();
    return p;
}

void ModelParams::validate() const {
    if (!(m > 0.0 && h > 0.0 && g > 0.0)) throw ConfigError("model: m, h and g must be positive");
    if (!(I > 0.0)) throw ConfigError("model: I must be positive");
    if (!(I - D * delay > 0.0))
        throw ConfigError("model: I - D*delay must be positive, got " + std::to_string(I - D * delay));
    if (!(K < mgh())) throw ConfigError("model: K must be below m*g*h");
    if (!(delay >= 0.0)) throw ConfigError("model: delay must be nonnegative");
    if (!(sigma >= 0.0)) throw ConfigError("model: sigma must be nonnegative");
    if (!std::isfinite(a)) throw ConfigError("model: slope a must be finite");
}

SystemMatrices derive_system(const ModelParams& p) {
    p.validate();
    const double den = p.I - p.D * p.delay;
    SystemMatrices s;
    s.A_on = {{{0.0, 1.0}, {(p.mgh() - p.K - p.P) / den, (-p.B - p.D + p.P * p.delay) / den}}};
    s.A_off = {{{0.0, 1.0}, {(p.mgh() - p.K) / p.I, -p.B / p.I}}};
    s.sigma_on = p.sigma / den;
    s.sigma_off = p.sigma / p.I;
    s.D_on[1][1] = 0.5 * s.sigma_on * s.sigma_on;
    s.D_off[1][1] = 0.5 * s.sigma_off * s.sigma_off;
    return s;
}

Vec2 drift(const SystemMatrices& sys, Region region, const Vec2& x) {
    if (region == Region::Boundary) throw std::invalid_argument("drift: boundary region has no drift");
    const Mat2& A = region == Region::On ? sys.A_on : sys.A_off;
    return {A[0][0] * x[0] + A[0][1] * x[1], A[1][0] * x[0] + A[1][1] * x[1]};
}

Region classify(double a, const Vec2& x) {
    const double s = x[0] * (x[1] - a * x[0]);
    if (s > 0.0) return Region::On;
    if (s < 0.0) return Region::Off;
    return Region::Boundary;
}

Region classify(const ModelParams& params, const Vec2& x) { return classify(params.a, x); }

double ratio_from_slope(double a) { return 0.5 - std::atan(a) / std::numbers::pi; }

double slope_from_ratio(double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ConfigError("ratio must lie strictly inside (0, 1), got " + std::to_string(ratio));
    return std::tan(std::numbers::pi * (0.5 - ratio));
}

std::array<double, 2> real_eigenvalues(const Mat2& A) {
    const double tr = A[0][0] + A[1][1];
    const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    const double disc = tr * tr - 4.0 * det;
    if (disc < 0.0) throw NumericalError("real_eigenvalues: complex spectrum");
    const double r = std::sqrt(disc);
    // Avoid cancellation in the smaller-magnitude root.
    const double q = 0.5 * (tr + (tr >= 0.0 ? r : -r));
    double l1 = q;
    double l2 = q != 0.0 ? det / q : 0.0;
    if (l1 > l2) std::swap(l1, l2);
    return {l1, l2};
}

}  // namespace hfpk
