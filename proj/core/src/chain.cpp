#include "hfpk/chain.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "hfpk/error.hpp"

namespace hfpk {

ProbabilityVector gaussian_initial(const Mesh& mesh, const Eigen::VectorXd& c, const Vec2& mean, const Vec2& std) {
    if (!(std[0] > 0.0 && std[1] > 0.0)) throw ConfigError("initial condition: standard deviations must be positive");
    const Domain& d = mesh.domain;
    if (mean[0] < d.theta_min || mean[0] > d.theta_max || mean[1] < d.omega_min || mean[1] > d.omega_max)
        throw ConfigError("initial condition: mean lies outside the domain");
    if (std[0] < 2.0 * mesh.dtheta || std[1] < 2.0 * mesh.domega)
        std::cerr << "warning: initial standard deviation is below two grid cells; the Gaussian is under-resolved\n";
    ProbabilityVector p;
    p.values.resize(mesh.dedup_count());
    for (int n = 0; n < mesh.dedup_count(); ++n) {
        const Vec2 x = mesh.grid_point(mesh.dedup_grid[n]);
        const double zt = (x[0] - mean[0]) / std[0], zw = (x[1] - mean[1]) / std[1];
        p.values[n] = std::exp(-0.5 * (zt * zt + zw * zw));
    }
    const double mass = c.dot(p.values);
    if (!(mass > 0.0)) throw NumericalError("initial condition: Gaussian has no mass on the grid");
    p.values /= mass;
    p.mass = c.dot(p.values);
    return p;
}

std::vector<Snapshot> evolve(const TransitionOperator& op, const ProbabilityVector& p0, long steps,
                             const std::vector<double>& snapshot_times) {
    if (steps < 0) throw ConfigError("evolve: negative step count");
    const double dt = op.dt();
    std::vector<long> at;
    for (double t : snapshot_times) {
        const long s = dt > 0.0 ? std::lround(t / dt) : 0;
        if (s < 0 || s > steps) throw ConfigError("evolve: snapshot time outside the run");
        at.push_back(s);
    }
    std::sort(at.begin(), at.end());
    at.erase(std::unique(at.begin(), at.end()), at.end());

    std::vector<Snapshot> out;
    const Eigen::VectorXd& c = op.weights();
    const double scale = p0.values.cwiseAbs().maxCoeff();
    Eigen::VectorXd p = p0.values, next;
    std::size_t k = 0;
    bool warned = false;
    for (long s = 0;; ++s) {
        while (k < at.size() && at[k] == s) {
            out.push_back({s, s * dt, {p, c.dot(p)}});
            ++k;
        }
        if (s == steps) break;
        op.apply(p, next);
        p.swap(next);
        if ((s + 1) % 64 == 0 || s + 1 == steps) {
            const double m = p.cwiseAbs().maxCoeff();
            if (!std::isfinite(m) || m > 1e8 * scale)
                throw NumericalError("evolve: divergence detected at step " + std::to_string(s + 1));
            if (!warned && m > 10.0 * scale) {
                std::cerr << "warning: iterate grew tenfold by step " << s + 1
                          << "; the transition operator may have spectral radius above 1 at this dt\n";
                warned = true;
            }
        }
    }
    return out;
}

namespace {

SpMat equilibrated_kdag(const AssembledSystem& sys) {
    SpMat K = build_kdag(sys);
    Eigen::VectorXd row_max = Eigen::VectorXd::Zero(K.rows());
    for (int c = 0; c < K.outerSize(); ++c)
        for (SpMat::InnerIterator it(K, c); it; ++it)
            row_max[it.row()] = std::max(row_max[it.row()], std::abs(it.value()));
    for (int r = 0; r < K.rows(); ++r)
        if (row_max[r] == 0.0) throw NumericalError("stationary solve ill-posed: K-dagger has an empty row");
    K = row_max.cwiseInverse().asDiagonal() * K;
    return K;
}

double inf_norm(const SpMat& K) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(K.rows());
    for (int c = 0; c < K.outerSize(); ++c)
        for (SpMat::InnerIterator it(K, c); it; ++it) rows[it.row()] += std::abs(it.value());
    return rows.maxCoeff();
}

void orthonormalize_against(Eigen::VectorXd& y, const Eigen::VectorXd& v) {
    y -= v.dot(y) * v;
    y -= v.dot(y) * v;
    y.normalize();
}

}  // namespace

StationaryResult stationary(const AssembledSystem& sys, const StationaryOptions& opts) {
    const SpMat K = equilibrated_kdag(sys);
    const int n = K.rows();
    StationaryResult res;
    Eigen::VectorXd x;

    const bool dense = opts.method == NullspaceMethod::Dense ||
                       (opts.method == NullspaceMethod::Auto && n <= opts.dense_limit);
    if (dense) {
        const Eigen::MatrixXd Kd(K);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(Kd, Eigen::ComputeFullV);
        const Eigen::VectorXd& s = svd.singularValues();
        res.sigma_min = s[n - 1];
        res.sigma_next = n > 1 ? s[n - 2] : 0.0;
        x = svd.matrixV().col(n - 1);
        res.dense = true;
    } else {
        // Shifted inverse iteration; the tiny jitter keeps the exactly singular factorization usable.
        SpMat A = K;
        const double jitter = 1e-14 * inf_norm(K);
        for (int i = 0; i < n; ++i) A.coeffRef(i, i) += jitter;
        A.makeCompressed();
        Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success) throw NumericalError("stationary solve ill-posed: sparse LU failed");

        x = sys.c_rdn.normalized();
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts.max_iterations; ++it) {
            Eigen::VectorXd y = lu.solve(x);
            if (!y.allFinite()) throw NumericalError("stationary solve ill-posed: inverse iteration diverged");
            x = y.normalized();
            res.iterations = it + 1;
            const double r = (K * x).norm();
            if (it > 0 && r >= 0.5 * prev) break;
            prev = r;
        }
        res.sigma_min = (K * x).norm();

        // Second-smallest singular value: inverse iteration on (A^T A)^{-1} deflated against x.
        Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0).array().sin();
        orthonormalize_against(y, x);
        double lambda = 0.0;
        for (int it = 0; it < 40; ++it) {
            Eigen::VectorXd z = lu.transpose().solve(y);
            z = lu.solve(z);
            orthonormalize_against(z, x);
            const double next = (K * z).norm();
            y = z;
            if (it > 3 && std::abs(next - lambda) <= 1e-3 * next) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        res.sigma_next = lambda;
    }

    if (!(res.sigma_next >= opts.ill_posed_ratio * res.sigma_min))
        throw NumericalError("stationary solve ill-posed: second-smallest singular value " +
                             std::to_string(res.sigma_next) + " is within a factor " +
                             std::to_string(opts.ill_posed_ratio) + " of the smallest " +
                             std::to_string(res.sigma_min));

    const SpMat Kraw = build_kdag(sys);
    if (sys.c_rdn.dot(x) < 0.0) x = -x;
    const double mass_rdn = sys.c_rdn.dot(x);
    if (!(mass_rdn > 0.0)) throw NumericalError("stationary solve ill-posed: kernel vector has no mass");
    res.p_rdn = x / mass_rdn;
    res.residual = (Kraw * res.p_rdn).cwiseAbs().maxCoeff() / (inf_norm(Kraw) * res.p_rdn.cwiseAbs().maxCoeff());

    Eigen::VectorXd p = sys.dedup.eliminate(res.p_rdn);
    const double pmax = p.maxCoeff();
    double clipped = 0.0, negative = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        if (p[i] >= 0.0) continue;
        if (-p[i] < opts.clip_fraction * pmax) {
            clipped += sys.c[i] * -p[i];
            p[i] = 0.0;
        } else {
            negative += sys.c[i] * -p[i];
        }
    }
    const double mass = sys.c.dot(p);
    p /= mass;
    res.clipped_mass = clipped / mass;
    res.negative_mass = negative / mass;
    res.p = {p, sys.c.dot(p)};
    return res;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

Marginal marginal_theta(const Mesh& mesh, const Eigen::VectorXd& p) {
    if (p.size() != mesh.dedup_count()) throw std::invalid_argument("marginal_theta: vector size mismatch");
    Marginal m;
    m.theta.resize(mesh.n_theta);
    m.density.assign(mesh.n_theta, 0.0);
    for (int i = 0; i < mesh.n_theta; ++i) m.theta[i] = mesh.theta_at(i);
    for (int j = 0; j < mesh.n_omega; ++j) {
        const double w = (j == 0 || j == mesh.n_omega - 1) ? 0.5 * mesh.domega : mesh.domega;
        for (int i = 0; i < mesh.n_theta; ++i) m.density[i] += w * p[mesh.grid_dedup[mesh.grid_index(i, j)]];
    }
    return m;
}

std::vector<int> local_maxima(const std::vector<double>& y, double rel_floor) {
    std::vector<int> out;
    if (y.empty()) return out;
    const double floor = rel_floor * *std::max_element(y.begin(), y.end());
    const int n = static_cast<int>(y.size());
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;  // plateau [i, j]
        // interior only: a density cut off by the domain edge is not a peak
        const bool left = i > 0 && y[i - 1] < y[i];
        const bool right = j < n - 1 && y[j + 1] < y[j];
        if (left && right && y[i] > floor) out.push_back((i + j) / 2);
        i = j + 1;
    }
    return out;
}

std::vector<double> binomial_smooth(const std::vector<double>& y) {
    std::vector<double> out = y;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) out[i] = 0.25 * (y[i - 1] + 2.0 * y[i] + y[i + 1]);
    return out;
}

Vec2 center_of_mass(const Mesh& mesh, const Eigen::VectorXd& c, const Eigen::VectorXd& p) {
    double m = 0.0, t = 0.0, w = 0.0;
    for (int n = 0; n < p.size(); ++n) {
        const Vec2 x = mesh.grid_point(mesh.dedup_grid[n]);
        const double q = c[n] * p[n];
        m += q;
        t += q * x[0];
        w += q * x[1];
    }
    return {t / m, w / m};
}

double point_asymmetry(const Mesh& mesh, const Eigen::VectorXd& p) {
    double worst = 0.0;
    for (int j = 0; j < mesh.n_omega; ++j) {
        const int jm = 2 * mesh.j0 - j;
        if (jm < 0 || jm >= mesh.n_omega) continue;
        for (int i = 0; i < mesh.n_theta; ++i) {
            const int im = 2 * mesh.i0 - i;
            if (im < 0 || im >= mesh.n_theta) continue;
            const double a = p[mesh.grid_dedup[mesh.grid_index(i, j)]];
            const double b = p[mesh.grid_dedup[mesh.grid_index(im, jm)]];
            worst = std::max(worst, std::abs(a - b));
        }
    }
    return worst;
}

std::vector<double> to_grid(const Mesh& mesh, const Eigen::VectorXd& p) {
    std::vector<double> g(mesh.grid_count());
    for (int k = 0; k < mesh.grid_count(); ++k) g[k] = p[mesh.grid_dedup[k]];
    return g;
}

Eigen::VectorXd from_grid(const Mesh& mesh, const std::vector<double>& grid) {
    if (static_cast<int>(grid.size()) != mesh.grid_count()) throw ConfigError("grid size does not match the mesh");
    Eigen::VectorXd p(mesh.dedup_count());
    for (int k = 0; k < mesh.grid_count(); ++k) p[mesh.grid_dedup[k]] = grid[k];
    return p;
}

}  // namespace hfpk
