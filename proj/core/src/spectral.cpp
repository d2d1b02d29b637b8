#include "hfpk/spectral.hpp"

#include "fftw_lock.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <string>

#include "hfpk/error.hpp"

namespace hfpk {

std::mutex& detail::fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<double> autocorrelation(const ApplyFn& apply, const Eigen::VectorXd& p, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& weights, int lags, int stride) {
    if (lags < 1 || stride < 1) throw ConfigError("autocorrelation: lags and stride must be positive");
    const Eigen::VectorXd probe = weights.cwiseProduct(theta);
    Eigen::VectorXd v = theta.cwiseProduct(p), next;
    const double scale = v.cwiseAbs().maxCoeff();
    std::vector<double> R;
    R.reserve(lags);
    R.push_back(probe.dot(v));
    for (int j = 1; j < lags; ++j) {
        for (int s = 0; s < stride; ++s) {
            apply(v, next);
            v.swap(next);
        }
        const double m = v.cwiseAbs().maxCoeff();
        if (!std::isfinite(m) || m > 1e6 * scale)
            throw NumericalError("autocorrelation: iterate diverged at lag " + std::to_string(j));
        R.push_back(probe.dot(v));
    }
    return R;
}

Eigen::VectorXd node_theta(const Mesh& mesh) {
    Eigen::VectorXd t(mesh.dedup_count());
    for (int n = 0; n < t.size(); ++n) t[n] = mesh.grid_point(mesh.dedup_grid[n])[0];
    return t;
}

std::vector<double> autocorrelation(const TransitionOperator& op, const Mesh& mesh, const Eigen::VectorXd& p,
                                    int lags, int stride) {
    const ApplyFn fn = [&op](const Eigen::VectorXd& x, Eigen::VectorXd& y) { op.apply(x, y); };
    return autocorrelation(fn, p, node_theta(mesh), op.weights(), lags, stride);
}

SpectrumResult psd(const std::vector<double>& R, double dt_eff, double mean) {
    const int J = static_cast<int>(R.size());
    if (J < 8) throw ConfigError("psd: at least 8 lags are required");
    if (!(dt_eff > 0.0)) throw ConfigError("psd: lag spacing must be positive");
    for (double r : R)
        if (!std::isfinite(r)) throw NumericalError("psd: autocorrelation is not finite");

    const int L = 2 * J;
    std::vector<double> x(L, 0.0);
    const double m2 = mean * mean;
    for (int k = 0; k < J; ++k) x[k] = R[k] - m2;
    for (int k = 1; k < J; ++k) x[L - k] = x[k];

    std::vector<fftw_complex> X(J + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(L, x.data(), X.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }

    SpectrumResult out;
    out.dt = dt_eff;
    out.lag_count = J;
    out.mean = mean;
    const double df = 1.0 / (L * dt_eff);
    for (int k = 0; k < J; ++k) {
        out.lags.push_back(k * dt_eff);
        out.autocorr.push_back(R[k]);
    }
    for (int m = 0; m <= J; ++m) {
        const double s = dt_eff * X[m][0] * (m == 0 || m == J ? 1.0 : 2.0);
        out.freqs.push_back(m * df);
        out.psd.push_back(s);
        out.psd_floor = std::min(out.psd_floor, s);
    }
    return out;
}

std::pair<int, int> lag_plan(double horizon_s, double dt, int max_lags) {
    if (!(horizon_s > 0.0 && dt > 0.0 && max_lags >= 8)) throw ConfigError("psd: invalid lag horizon");
    const long total = std::lround(horizon_s / dt);
    const int stride = static_cast<int>(std::max<long>(1, (total + max_lags - 1) / max_lags));
    const int lags = static_cast<int>(total / stride) + 1;
    return {std::min(lags, max_lags), stride};
}

double loglog_slope(const std::vector<double>& f, const std::vector<double>& psd, double fmin, double fmax) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] < fmin || f[i] > fmax || !(psd[i] > 0.0)) continue;
        const double lx = std::log10(f[i]), ly = std::log10(psd[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3) throw NumericalError("loglog_slope: fewer than 3 positive bins in the band");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace hfpk
