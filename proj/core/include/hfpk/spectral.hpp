#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hfpk/assembly.hpp"
#include "hfpk/mesh.hpp"

namespace hfpk {

struct SpectrumResult {
    std::vector<double> lags;      // s
    std::vector<double> autocorr;  // rad^2
    std::vector<double> freqs;     // Hz
    std::vector<double> psd;       // rad^2 / Hz, one-sided
    double dt = 0.0;
    int stride = 1;
    int lag_count = 0;
    double mean = 0.0;             // stationary mean of theta
    double psd_floor = 0.0;        // most negative PSD value (FFT rounding diagnostic)
};

using ApplyFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// R(j) = (w o theta)^T Psi^(j stride) (theta o p), j = 0..lags-1.
std::vector<double> autocorrelation(const ApplyFn& apply, const Eigen::VectorXd& p, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& weights, int lags, int stride);
std::vector<double> autocorrelation(const TransitionOperator& op, const Mesh& mesh, const Eigen::VectorXd& p,
                                    int lags, int stride);

// Node theta coordinates over the deduplicated numbering.
Eigen::VectorXd node_theta(const Mesh& mesh);

// One-sided PSD from autocorrelation samples spaced dt_eff apart, after removing mean^2.
SpectrumResult psd(const std::vector<double>& R, double dt_eff, double mean);

// Lag count and stride for a horizon: stride = ceil(horizon / (dt max_lags)).
std::pair<int, int> lag_plan(double horizon_s, double dt, int max_lags);

// Least-squares slope of log10 psd against log10 f for f in [fmin, fmax].
double loglog_slope(const std::vector<double>& f, const std::vector<double>& psd, double fmin, double fmax);

}  // namespace hfpk
