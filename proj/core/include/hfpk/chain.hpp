#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hfpk/assembly.hpp"
#include "hfpk/mesh.hpp"

namespace hfpk {

// Node values over the deduplicated numbering; mass is c^T p.
struct ProbabilityVector {
    Eigen::VectorXd values;
    double mass = 0.0;
};

ProbabilityVector gaussian_initial(const Mesh& mesh, const Eigen::VectorXd& c, const Vec2& mean, const Vec2& std);

struct Snapshot {
    long step = 0;
    double time = 0.0;
    ProbabilityVector p;
};

// Iterate p <- Psi p for `steps` steps; snapshots at the requested times rounded to the step grid.
std::vector<Snapshot> evolve(const TransitionOperator& op, const ProbabilityVector& p0, long steps,
                             const std::vector<double>& snapshot_times);

enum class NullspaceMethod { Auto, Iterative, Dense };

struct StationaryOptions {
    NullspaceMethod method = NullspaceMethod::Auto;
    int dense_limit = 2000;        // Auto uses the dense SVD at or below this many redundant nodes
    double ill_posed_ratio = 1e3;  // sigma_2 / sigma_1 below this is rejected
    double clip_fraction = 1e-8;
    int max_iterations = 30;
};

struct StationaryResult {
    ProbabilityVector p;
    Eigen::VectorXd p_rdn;     // normalized redundant kernel vector before clipping
    double sigma_min = 0.0;    // smallest singular value of the row-equilibrated K-dagger
    double sigma_next = 0.0;   // second-smallest (estimate on the iterative route)
    double clipped_mass = 0.0; // |mass| removed by clipping tiny negatives
    double negative_mass = 0.0;// |mass| of negative entries kept
    double residual = 0.0;     // ||Kdag p_rdn||_inf / ||Kdag||_inf ||p_rdn||_inf
    bool dense = false;
    int iterations = 0;
};

StationaryResult stationary(const AssembledSystem& sys, const StationaryOptions& opts = {});

struct Marginal {
    std::vector<double> theta;
    std::vector<double> density;
};

// Theta marginal with trapezoidal weights in omega.
Marginal marginal_theta(const Mesh& mesh, const Eigen::VectorXd& p);
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

// Indices of interior local maxima whose height exceeds rel_floor * max (plateaus count once).
std::vector<int> local_maxima(const std::vector<double>& y, double rel_floor = 0.0);

// [1, 2, 1] / 4 filter; removes the odd-even grid mode exactly, end points kept.
std::vector<double> binomial_smooth(const std::vector<double>& y);

Vec2 center_of_mass(const Mesh& mesh, const Eigen::VectorXd& c, const Eigen::VectorXd& p);

// Point-symmetry defect max_n |p(x_n) - p(-x_n)| over nodes whose mirror is a grid node.
double point_asymmetry(const Mesh& mesh, const Eigen::VectorXd& p);

// Grid-ordered copy of a deduplicated vector (row-major, omega rows).
std::vector<double> to_grid(const Mesh& mesh, const Eigen::VectorXd& p);
Eigen::VectorXd from_grid(const Mesh& mesh, const std::vector<double>& grid);

}  // namespace hfpk
