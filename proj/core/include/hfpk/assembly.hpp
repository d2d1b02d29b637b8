#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <array>
#include <memory>

#include "hfpk/mesh.hpp"
#include "hfpk/model.hpp"

namespace hfpk {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Mat3 = Eigen::Matrix3d;

// Element-level kernels on a linear triangle (vertices counter-clockwise).
Mat3 element_mass(const std::array<Vec2, 3>& x);
Mat3 element_stiffness(const std::array<Vec2, 3>& x, const Mat2& A, const Mat2& D);
// Line integral of phi_i (n . A x) phi_j over the segment x0 -> x1 with unit normal n.
Eigen::Matrix2d edge_flux(const Vec2& x0, const Vec2& x1, const Vec2& n, const Mat2& A);
// Outward unit normal of local edge e of a counter-clockwise triangle.
Vec2 outward_normal(const std::array<Vec2, 3>& x, int e);

std::array<SpMat, 2> assemble_mass(const Mesh& mesh);
std::array<SpMat, 2> assemble_stiffness(const Mesh& mesh, const SystemMatrices& sys);
std::array<SpMat, 2> assemble_domain_flux(const Mesh& mesh, const SystemMatrices& sys);
std::array<SpMat, 2> assemble_switching_flux(const Mesh& mesh, const SystemMatrices& sys);

struct AssembledSystem {
    std::array<SpMat, 2> M, K, Kd, Ks;
    DedupOperators dedup;
    SpMat R;
    Eigen::VectorXd c_rdn;   // basis-function integrals, redundant numbering (row sums of M)
    Eigen::VectorXd c;       // deduplicated weights Z_cmb^T c_rdn
    double dt = 1e-4;
    bool lumped = false;

    int N_A() const { return dedup.n_a; }
    int N_B() const { return dedup.n_b; }
    int N() const { return dedup.n_rdn(); }
};

// Assemble everything on a mesh. With lumped = true the mass matrices are replaced by their
// row-sum diagonals.
AssembledSystem assemble(const Mesh& mesh, const SystemMatrices& sys, double dt, bool lumped = false);

// Block matrix [[K_A-Kd_A-Ks_A, -R Ks_B], [0, K_B-Kd_B]] acting on [p_A; p_B].
SpMat build_ktilde(const AssembledSystem& sys);

// Stationary system; its one-dimensional kernel is the stationary density.
SpMat build_kdag(const AssembledSystem& sys);

// p -> Z_elm (I + dt V) Z_cmb p on deduplicated vectors.
class TransitionOperator {
public:
    explicit TransitionOperator(const AssembledSystem& sys);

    int size() const { return dedup_.n_dedup(); }
    double dt() const { return dt_; }
    const Eigen::VectorXd& weights() const { return c_; }
    const DedupOperators& dedup() const { return dedup_; }

    void apply(const Eigen::VectorXd& p, Eigen::VectorXd& out) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& p) const;
    // Redundant form Psi^rdn = I + dt V on [p_A; p_B].
    Eigen::VectorXd apply_redundant(const Eigen::VectorXd& p_rdn) const;

    // Explicit sparse Psi, available only in lumped mode.
    bool has_matrix() const { return explicit_psi_ != nullptr; }
    const SpMatRow& matrix() const;
    // Interface coupling S = L_A U_A - L_B U_B.
    const Eigen::MatrixXd& interface_matrix() const { return S_; }

private:
    void velocity(const Eigen::VectorXd& p_rdn, Eigen::VectorXd& v) const;
    void mass_solve(Eigen::VectorXd& x) const;

    DedupOperators dedup_;
    Eigen::VectorXd c_;
    double dt_ = 0.0;
    bool lumped_ = false;
    SpMatRow ktilde_;
    Eigen::VectorXd inv_lumped_;
    std::array<std::shared_ptr<Eigen::SimplicialLDLT<SpMat>>, 2> chol_;
    Eigen::MatrixXd S_;
    Eigen::LLT<Eigen::MatrixXd> neg_s_;   // factor of -S, which is symmetric positive definite
    std::array<std::vector<int>, 2> sw_;  // switching-node rows per region
    std::shared_ptr<SpMatRow> explicit_psi_;
};

inline TransitionOperator build_transition(const AssembledSystem& sys) { return TransitionOperator(sys); }

}  // namespace hfpk
