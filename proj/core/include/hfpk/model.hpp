#pragma once

#include <array>

namespace hfpk {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// Linearized inverted pendulum with delayed, intermittently switched PD control.
struct ModelParams {
    double m = 60.0;        // kg
    double h = 1.0;         // m
    double g = 9.81;        // m/s^2
    double I = 60.0;        // kg m^2
    double K = 0.8 * 60.0 * 9.81;
    double B = 4.0;
    double P = 0.25 * 60.0 * 9.81;
    double D = 10.0;
    double a = -0.4;        // slope of the switching line omega = a theta
    double delay = 0.2;     // s
    double sigma = 0.2;     // N m

    double mgh() const { return m * g * h; }

    // Default balance parameters: I = m h^2, K and P scaled by mgh.
    static ModelParams defaults();

    // Throws ConfigError when the invariants fail.
    void validate() const;
};

struct SystemMatrices {
    Mat2 A_on{};
    Mat2 A_off{};
    Mat2 D_on{};
    Mat2 D_off{};
    double sigma_on = 0.0;   // noise amplitude on the omega equation, on-subsystem
    double sigma_off = 0.0;
};

enum class Region { On, Off, Boundary };

SystemMatrices derive_system(const ModelParams& params);

Vec2 drift(const SystemMatrices& sys, Region region, const Vec2& x);

Region classify(const ModelParams& params, const Vec2& x);
Region classify(double a, const Vec2& x);

// Fraction of the on-region area: 1/2 - atan(a)/pi.
double ratio_from_slope(double a);
double slope_from_ratio(double ratio);

// Eigenvalues of a real 2x2 matrix with real spectrum, ascending.
std::array<double, 2> real_eigenvalues(const Mat2& A);

}  // namespace hfpk
