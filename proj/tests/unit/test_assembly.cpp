#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hfpk/assembly.hpp"
#include "hfpk/error.hpp"

using namespace hfpk;

namespace {

const std::array<Vec2, 3> kUnit{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};

MeshSpec tiny_spec() {
    MeshSpec s;
    s.domain = {-1.0, 1.0, -1.0, 1.0};
    s.dtheta = 1.0;
    s.domega = 1.0;
    return s;
}

MeshSpec small_spec() {
    // 21 x 11 grid, well under the dense-route limit
    MeshSpec s;
    s.dtheta = 0.01;
    s.domega = 0.004;
    return s;
}

MeshSpec desk_spec() {
    MeshSpec s;
    s.dtheta = 0.002;
    s.domega = 0.0008;
    return s;
}

// Gauss-Legendre on [0,1], 5 points: exact to degree 9.
const double kGx[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155, 0.95308992296933200};
const double kGw[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444, 0.23931433524968324,
                       0.11846344252809454};

// Barycentric basis on a triangle.
struct P1 {
    std::array<Vec2, 3> x;
    double area;
    std::array<Vec2, 3> grad;
    explicit P1(const std::array<Vec2, 3>& v) : x(v) {
        area = 0.5 * ((x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]));
        for (int i = 0; i < 3; ++i) {
            const Vec2& b = x[(i + 1) % 3];
            const Vec2& c = x[(i + 2) % 3];
            grad[i] = {(b[1] - c[1]) / (2 * area), (c[0] - b[0]) / (2 * area)};
        }
    }
    double phi(int i, const Vec2& p) const {
        const Vec2& b = x[(i + 1) % 3];
        const Vec2& c = x[(i + 2) % 3];
        return ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / (2 * area);
    }
};

// Collapsed Gauss product rule over the triangle.
template <class F>
double integrate_triangle(const std::array<Vec2, 3>& x, F&& f) {
    const double J = std::abs((x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]));
    double s = 0.0;
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            const double u = kGx[a], v = kGx[b] * (1.0 - kGx[a]);
            const double w = kGw[a] * kGw[b] * (1.0 - kGx[a]);
            const Vec2 p{x[0][0] + u * (x[1][0] - x[0][0]) + v * (x[2][0] - x[0][0]),
                         x[0][1] + u * (x[1][1] - x[0][1]) + v * (x[2][1] - x[0][1])};
            s += w * f(p);
        }
    return s * J;
}

Vec2 mul(const Mat2& A, const Vec2& x) {
    return {A[0][0] * x[0] + A[0][1] * x[1], A[1][0] * x[0] + A[1][1] * x[1]};
}

// Line integral of phi0/phi1 products against n.(A x) by 5-point Gauss.
Eigen::Matrix2d edge_oracle(const Vec2& p, const Vec2& q, const Vec2& n, const Mat2& A) {
    const double L = std::hypot(q[0] - p[0], q[1] - p[1]);
    Eigen::Matrix2d K = Eigen::Matrix2d::Zero();
    for (int g = 0; g < 5; ++g) {
        const double s = kGx[g];
        const Vec2 x{p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])};
        const Vec2 f = mul(A, x);
        const double fn = n[0] * f[0] + n[1] * f[1];
        const double phi[2] = {1.0 - s, s};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) K(i, j) += kGw[g] * L * phi[i] * fn * phi[j];
    }
    return K;
}

Eigen::MatrixXd dense(const SpMat& m) { return Eigen::MatrixXd(m); }

}  // namespace

TEST(ElementKernels, MassOnUnitTriangle) {
    const Mat3 M = element_mass(kUnit);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(M(i, j), i == j ? 1.0 / 12.0 : 1.0 / 24.0, 1e-16);
}

TEST(ElementKernels, LaplacianOnUnitTriangle) {
    const Mat2 zero{};
    const Mat2 eye{{{1.0, 0.0}, {0.0, 1.0}}};
    const Mat3 K = element_stiffness(kUnit, zero, eye);
    Mat3 ref;
    ref << 2, -1, -1, -1, 1, 0, -1, 0, 1;
    ref *= 0.5;
    EXPECT_LT((K - ref).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(element_stiffness(kUnit, zero, zero).cwiseAbs().maxCoeff(), 1e-300);
}

TEST(ElementKernels, StiffnessAgainstQuadratureOracle) {
    const SystemMatrices s = derive_system(ModelParams::defaults());
    const std::array<Vec2, 3> x{{{0.01, -0.004}, {0.012, -0.004}, {0.01, -0.0032}}};
    for (const auto* sys : {&s.A_on, &s.A_off}) {
        const Mat2& A = *sys;
        const Mat2& D = sys == &s.A_on ? s.D_on : s.D_off;
        const Mat3 K = element_stiffness(x, A, D);
        const P1 b(x);
        const double tr = A[0][0] + A[1][1];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double adv = integrate_triangle(x, [&](const Vec2& p) {
                    const Vec2 f = mul(A, p);
                    return b.phi(i, p) * (tr * b.phi(j, p) + f[0] * b.grad[j][0] + f[1] * b.grad[j][1]);
                });
                const Vec2 Dg = mul(D, b.grad[j]);
                const double dif = b.area * (b.grad[i][0] * Dg[0] + b.grad[i][1] * Dg[1]);
                EXPECT_NEAR(K(i, j), adv + dif, 1e-14 * (std::abs(adv) + std::abs(dif)) + 1e-22);
            }
    }
}

TEST(ElementKernels, TraceAppearsAsReaction) {
    const SystemMatrices s = derive_system(ModelParams::defaults());
    EXPECT_NEAR(s.A_on[0][0] + s.A_on[1][1], 0.266034, 1e-6);
    const Mat2 react{{{0.0, 0.0}, {0.0, s.A_on[1][1]}}};
    // with a constant-in-omega field the row sums of K equal tr times the mass row sums
    const std::array<Vec2, 3> x{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};
    const Mat3 K = element_stiffness(x, react, Mat2{});
    const Mat3 M = element_mass(x);
    // sum_j K_ij = int phi_i div(f) = tr int phi_i
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(K.row(i).sum(), s.A_on[1][1] * M.row(i).sum(), 1e-15);
}

TEST(EdgeFlux, SimpsonMatchesGaussOracle) {
    const SystemMatrices s = derive_system(ModelParams::defaults());
    // horizontal top edge, outward normal (0, 1)
    const Vec2 p{0.02, 0.02}, q{0.018, 0.02};
    const Eigen::Matrix2d K = edge_flux(p, q, {0.0, 1.0}, s.A_off);
    const Eigen::Matrix2d ref = edge_oracle(p, q, {0.0, 1.0}, s.A_off);
    EXPECT_LT((K - ref).cwiseAbs().maxCoeff(), 1e-18);
    // spot value: L/6 (g0 + gm) with g = A_off[1][0] theta + A_off[1][1] omega
    const double g0 = 1.962 * 0.02 - 4.0 / 60.0 * 0.02, gm = 1.962 * 0.019 - 4.0 / 60.0 * 0.02;
    EXPECT_NEAR(K(0, 0), 0.002 / 6.0 * (g0 + gm), 1e-12);
    // a slanted edge
    const Vec2 n{0.6, -0.8};
    EXPECT_LT((edge_flux({0.1, 0.3}, {0.5, 0.6}, n, s.A_on) - edge_oracle({0.1, 0.3}, {0.5, 0.6}, n, s.A_on))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
}

TEST(EdgeFlux, OutwardNormalOfUnitTriangle) {
    EXPECT_EQ(outward_normal(kUnit, 0), (Vec2{0.0, -1.0}));
    EXPECT_NEAR(outward_normal(kUnit, 1)[0], std::sqrt(0.5), 1e-15);
    EXPECT_EQ(outward_normal(kUnit, 2), (Vec2{-1.0, 0.0}));
}

TEST(Assembly, MassPartitionOfUnityAndSymmetry) {
    const Mesh m = build_mesh(tiny_spec(), 0.0);
    const auto M = assemble_mass(m);
    EXPECT_NEAR(M[kRegionA].sum(), 2.0, 1e-14);  // two unit quadrants
    EXPECT_NEAR(M[kRegionB].sum(), 2.0, 1e-14);
    EXPECT_LT((dense(M[kRegionA]) - dense(M[kRegionA]).transpose()).cwiseAbs().maxCoeff(), 1e-17);
}

TEST(Assembly, ZeroFieldGivesZeroOperators) {
    const Mesh m = build_mesh(tiny_spec(), 0.0);
    SystemMatrices zero{};
    const auto K = assemble_stiffness(m, zero);
    const auto Kd = assemble_domain_flux(m, zero);
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(K[k].norm(), 0.0);
        EXPECT_EQ(Kd[k].norm(), 0.0);
    }
}

TEST(Assembly, BoundaryMatricesHaveBoundarySupport) {
    const Mesh m = build_mesh(small_spec(), -0.4);
    const SystemMatrices s = derive_system(ModelParams::defaults());
    const auto Kd = assemble_domain_flux(m, s);
    const auto Ks = assemble_switching_flux(m, s);
    const Domain& d = m.domain;
    for (int k = 0; k < 2; ++k) {
        std::vector<bool> sw(m.region[k].node_count(), false);
        for (const auto& pr : m.pairing) sw[k == kRegionA ? pr.first : pr.second] = true;
        for (int c = 0; c < Kd[k].outerSize(); ++c)
            for (SpMat::InnerIterator it(Kd[k], c); it; ++it) {
                const Vec2 x = m.region[k].nodes[it.row()];
                const bool perim = x[0] == d.theta_min || x[0] == d.theta_max || x[1] == d.omega_min || x[1] == d.omega_max;
                if (it.value() != 0.0) EXPECT_TRUE(perim);
            }
        for (int c = 0; c < Ks[k].outerSize(); ++c)
            for (SpMat::InnerIterator it(Ks[k], c); it; ++it)
                if (it.value() != 0.0) EXPECT_TRUE(sw[it.row()] && sw[it.col()]);
    }
}

TEST(Assembly, SwitchingFluxAgainstEdgeOracle) {
    const Mesh m = build_mesh(tiny_spec(), 0.0);
    const SystemMatrices s = derive_system(ModelParams::defaults());
    const auto Ks = assemble_switching_flux(m, s);
    for (int k = 0; k < 2; ++k) {
        const RegionMesh& rm = m.region[k];
        const Mat2& A = k == kRegionA ? s.A_on : s.A_off;
        Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(rm.node_count(), rm.node_count());
        for (const EdgeRef& e : rm.switching_edges) {
            const auto& el = rm.elements[e.element];
            const int a = el[e.local_edge], b = el[(e.local_edge + 1) % 3];
            const Vec2 p = rm.nodes[a], q = rm.nodes[b];
            const double L = std::hypot(q[0] - p[0], q[1] - p[1]);
            const Vec2 n{(q[1] - p[1]) / L, -(q[0] - p[0]) / L};  // counter-clockwise element: interior on the left
            const Eigen::Matrix2d Ke = edge_oracle(p, q, n, A);
            ref(a, a) += Ke(0, 0);
            ref(a, b) += Ke(0, 1);
            ref(b, a) += Ke(1, 0);
            ref(b, b) += Ke(1, 1);
        }
        EXPECT_LT((dense(Ks[k]) - ref).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_GT(ref.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Assembly, SharedEdgeIntegralsCancelForEqualFields) {
    const Mesh m = build_mesh(small_spec(), -0.4);
    SystemMatrices s = derive_system(ModelParams::defaults());
    s.A_off = s.A_on;
    const auto Ks = assemble_switching_flux(m, s);
    const DedupOperators d = build_dedup(m);
    // map both regions' contributions onto the shared nodes
    const SpMat la = d.switching(kRegionA).matrix(), lb = d.switching(kRegionB).matrix();
    const Eigen::MatrixXd sa = dense(la * Ks[kRegionA] * SpMat(la.transpose()));
    const Eigen::MatrixXd sb = dense(lb * Ks[kRegionB] * SpMat(lb.transpose()));
    EXPECT_LT((sa + sb).cwiseAbs().maxCoeff(), 1e-15 * sa.cwiseAbs().maxCoeff() + 1e-20);
}

TEST(Assembly, KdagShapeAndConsistencyRows) {
    const Mesh m = build_mesh(small_spec(), -0.4);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 1e-4);
    const SpMat K = build_kdag(sys);
    EXPECT_EQ(K.rows(), sys.N());
    EXPECT_EQ(K.cols(), sys.N());
    // duplication-consistent vector: last N_s rows vanish exactly
    const Eigen::VectorXd p = Eigen::VectorXd::Random(sys.dedup.n_dedup());
    const Eigen::VectorXd r = K * sys.dedup.combine(p);
    EXPECT_EQ(r.tail(m.N_s()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, TinyGridKdagHasNullityOne) {
    const Mesh m = build_mesh(tiny_spec(), 0.0);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 1e-4);
    const Eigen::MatrixXd K = dense(build_kdag(sys));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * sv[0];
    int nullity = 0;
    for (int i = 0; i < sv.size(); ++i) nullity += sv[i] <= tol;
    EXPECT_EQ(nullity, 1);
}

class Transition : public ::testing::TestWithParam<bool> {};

TEST_P(Transition, ConservesMass) {
    const Mesh m = build_mesh(desk_spec(), -0.4);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 1e-4, GetParam());
    const TransitionOperator op(sys);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd p(op.size());
        for (auto& v : p) v = u(rng);
        const double before = op.weights().dot(p);
        const double after = op.weights().dot(op.apply(p));
        EXPECT_NEAR(after, before, 1e-10 * before);
    }
}

TEST_P(Transition, ZeroStepIsIdentity) {
    const Mesh m = build_mesh(small_spec(), -0.4);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 0.0, GetParam());
    const TransitionOperator op(sys);
    const Eigen::VectorXd p = Eigen::VectorXd::Random(op.size());
    EXPECT_LT((op.apply(p) - p).cwiseAbs().maxCoeff(), 1e-15);
}

TEST_P(Transition, RedundantStepKeepsDuplicatesEqual) {
    const Mesh m = build_mesh(small_spec(), -1.0);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 1e-3, GetParam());
    const TransitionOperator op(sys);
    const DedupOperators& d = op.dedup();
    Eigen::VectorXd p = d.combine(Eigen::VectorXd(Eigen::VectorXd::Random(op.size()).cwiseAbs()));
    for (int step = 0; step < 50; ++step) {
        p = op.apply_redundant(p);
        const Eigen::VectorXd ga = d.switching(kRegionA).gather(Eigen::VectorXd(p.head(d.n_a)));
        const Eigen::VectorXd gb = d.switching(kRegionB).gather(Eigen::VectorXd(p.tail(d.n_b)));
        ASSERT_LT((ga - gb).cwiseAbs().maxCoeff(), 1e-10 * p.cwiseAbs().maxCoeff());
    }
}

INSTANTIATE_TEST_SUITE_P(MassModes, Transition, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "lumped" : "consistent"; });

TEST(Transition, LumpedExplicitMatrixMatchesOperator) {
    const Mesh m = build_mesh(small_spec(), -0.4);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 1e-4, true);
    const TransitionOperator op(sys);
    ASSERT_TRUE(op.has_matrix());
    const Eigen::VectorXd p = Eigen::VectorXd::Random(op.size());
    const Eigen::VectorXd a = op.apply(p), b = op.matrix() * p;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
    // column sums weighted by c: c^T Psi = c^T
    const Eigen::RowVectorXd ct = op.weights().transpose() * op.matrix();
    EXPECT_LT((ct - op.weights().transpose()).cwiseAbs().maxCoeff(), 1e-12 * op.weights().maxCoeff());
    EXPECT_FALSE(TransitionOperator(assemble(m, derive_system(ModelParams::defaults()), 1e-4, false)).has_matrix());
}

TEST(Transition, WeightsArePartitionOfUnityIntegrals) {
    const Mesh m = build_mesh(desk_spec(), -0.4);
    const AssembledSystem sys = assemble(m, derive_system(ModelParams::defaults()), 1e-4);
    EXPECT_NEAR(sys.c.sum(), m.domain.area(), 1e-12 * m.domain.area());
    EXPECT_NEAR(sys.c_rdn.sum(), m.domain.area(), 1e-12 * m.domain.area());
    EXPECT_THROW(assemble(m, derive_system(ModelParams::defaults()), -1.0), ConfigError);
}
