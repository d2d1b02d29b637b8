#include "hfpk/assembly.hpp"

#include <cmath>
#include <string>

#include "hfpk/error.hpp"

namespace hfpk {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

std::array<Vec2, 3> element_points(const RegionMesh& rm, int e) {
    const auto& el = rm.elements[e];
    return {rm.nodes[el[0]], rm.nodes[el[1]], rm.nodes[el[2]]};
}

double signed_area(const std::array<Vec2, 3>& x) {
    return 0.5 * ((x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]));
}

double checked_area(const std::array<Vec2, 3>& x) {
    const double A = signed_area(x);
    if (!(A > 0.0)) throw NumericalError("assembly: degenerate or clockwise element");
    return A;
}

std::array<Vec2, 3> gradients(const std::array<Vec2, 3>& x, double area) {
    const double s = 1.0 / (2.0 * area);
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2& p = x[(i + 1) % 3];
        const Vec2& q = x[(i + 2) % 3];
        g[i] = {(p[1] - q[1]) * s, (q[0] - p[0]) * s};
    }
    return g;
}

SpMat from_triplets(int rows, int cols, const Triplets& t) {
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

template <class Kernel>
std::array<SpMat, 2> assemble_elements(const Mesh& mesh, Kernel&& kernel) {
    std::array<SpMat, 2> out;
    for (int k = 0; k < 2; ++k) {
        const RegionMesh& rm = mesh.region[k];
        Triplets t;
        t.reserve(9 * rm.elements.size());
        for (int e = 0; e < rm.element_count(); ++e) {
            const Mat3 Ke = kernel(k, element_points(rm, e));
            const auto& el = rm.elements[e];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) t.emplace_back(el[i], el[j], Ke(i, j));
        }
        out[k] = from_triplets(rm.node_count(), rm.node_count(), t);
    }
    return out;
}

std::array<SpMat, 2> assemble_edges(const Mesh& mesh, const SystemMatrices& sys, bool switching) {
    std::array<SpMat, 2> out;
    for (int k = 0; k < 2; ++k) {
        const RegionMesh& rm = mesh.region[k];
        const Mat2& A = k == kRegionA ? sys.A_on : sys.A_off;
        Triplets t;
        for (const EdgeRef& ref : switching ? rm.switching_edges : rm.domain_edges) {
            const auto x = element_points(rm, ref.element);
            const int a = ref.local_edge, b = (ref.local_edge + 1) % 3;
            const Eigen::Matrix2d Ke = edge_flux(x[a], x[b], outward_normal(x, ref.local_edge), A);
            const int na = rm.elements[ref.element][a], nb = rm.elements[ref.element][b];
            t.emplace_back(na, na, Ke(0, 0));
            t.emplace_back(na, nb, Ke(0, 1));
            t.emplace_back(nb, na, Ke(1, 0));
            t.emplace_back(nb, nb, Ke(1, 1));
        }
        out[k] = from_triplets(rm.node_count(), rm.node_count(), t);
    }
    return out;
}

}  // namespace

Mat3 element_mass(const std::array<Vec2, 3>& x) {
    const double A = checked_area(x);
    Mat3 m;
    m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    return m * (A / 12.0);
}

Mat3 element_stiffness(const std::array<Vec2, 3>& x, const Mat2& A, const Mat2& D) {
    const double area = checked_area(x);
    const auto g = gradients(x, area);
    const double tr = A[0][0] + A[1][1];
    Mat3 K = Mat3::Zero();
    // Edge-midpoint rule, exact for the quadratic advection integrand.
    for (int q = 0; q < 3; ++q) {
        const int a = q, b = (q + 1) % 3;
        const Vec2 m{0.5 * (x[a][0] + x[b][0]), 0.5 * (x[a][1] + x[b][1])};
        const Vec2 f{A[0][0] * m[0] + A[0][1] * m[1], A[1][0] * m[0] + A[1][1] * m[1]};
        double phi[3] = {0.0, 0.0, 0.0};
        phi[a] = phi[b] = 0.5;
        for (int i = 0; i < 3; ++i) {
            if (phi[i] == 0.0) continue;
            for (int j = 0; j < 3; ++j)
                K(i, j) += area / 3.0 * phi[i] * (tr * phi[j] + f[0] * g[j][0] + f[1] * g[j][1]);
        }
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double Dg0 = D[0][0] * g[j][0] + D[0][1] * g[j][1];
            const double Dg1 = D[1][0] * g[j][0] + D[1][1] * g[j][1];
            K(i, j) += area * (g[i][0] * Dg0 + g[i][1] * Dg1);
        }
    return K;
}

Eigen::Matrix2d edge_flux(const Vec2& x0, const Vec2& x1, const Vec2& n, const Mat2& A) {
    const double L = std::hypot(x1[0] - x0[0], x1[1] - x0[1]);
    auto flux = [&](const Vec2& x) {
        return n[0] * (A[0][0] * x[0] + A[0][1] * x[1]) + n[1] * (A[1][0] * x[0] + A[1][1] * x[1]);
    };
    const double g0 = flux(x0), g1 = flux(x1);
    const double gm = flux({0.5 * (x0[0] + x1[0]), 0.5 * (x0[1] + x1[1])});
    // Simpson on the cubic integrand; the basis products vanish at the far endpoint.
    Eigen::Matrix2d K;
    K << L / 6.0 * (g0 + gm), L / 6.0 * gm, L / 6.0 * gm, L / 6.0 * (gm + g1);
    return K;
}

Vec2 outward_normal(const std::array<Vec2, 3>& x, int e) {
    const Vec2& a = x[e];
    const Vec2& b = x[(e + 1) % 3];
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double L = std::hypot(dx, dy);
    return {dy / L, -dx / L};
}

std::array<SpMat, 2> assemble_mass(const Mesh& mesh) {
    return assemble_elements(mesh, [](int, const std::array<Vec2, 3>& x) { return element_mass(x); });
}

std::array<SpMat, 2> assemble_stiffness(const Mesh& mesh, const SystemMatrices& sys) {
    return assemble_elements(mesh, [&](int k, const std::array<Vec2, 3>& x) {
        return k == kRegionA ? element_stiffness(x, sys.A_on, sys.D_on) : element_stiffness(x, sys.A_off, sys.D_off);
    });
}

std::array<SpMat, 2> assemble_domain_flux(const Mesh& mesh, const SystemMatrices& sys) {
    return assemble_edges(mesh, sys, false);
}

std::array<SpMat, 2> assemble_switching_flux(const Mesh& mesh, const SystemMatrices& sys) {
    return assemble_edges(mesh, sys, true);
}

AssembledSystem assemble(const Mesh& mesh, const SystemMatrices& sys, double dt, bool lumped) {
    if (!(dt >= 0.0)) throw ConfigError("assembly: time step must be nonnegative");
    AssembledSystem s;
    s.M = assemble_mass(mesh);
    s.K = assemble_stiffness(mesh, sys);
    s.Kd = assemble_domain_flux(mesh, sys);
    s.Ks = assemble_switching_flux(mesh, sys);
    s.dedup = build_dedup(mesh);
    s.R = s.dedup.R();
    s.dt = dt;
    s.lumped = lumped;
    s.c_rdn.resize(s.N());
    for (int k = 0; k < 2; ++k) {
        const Eigen::VectorXd rows = s.M[k] * Eigen::VectorXd::Ones(s.M[k].cols());
        s.c_rdn.segment(k == kRegionA ? 0 : s.N_A(), rows.size()) = rows;
        if (lumped) {
            SpMat d(rows.size(), rows.size());
            d.reserve(Eigen::VectorXi::Constant(rows.size(), 1));
            for (int i = 0; i < rows.size(); ++i) d.insert(i, i) = rows[i];
            s.M[k] = d;
        }
    }
    s.c = s.dedup.combine_transpose(s.c_rdn);
    return s;
}

namespace {

void append_block(Triplets& t, const SpMat& m, int row0, int col0, double scale = 1.0) {
    for (int c = 0; c < m.outerSize(); ++c)
        for (SpMat::InnerIterator it(m, c); it; ++it) t.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

}  // namespace

SpMat build_ktilde(const AssembledSystem& s) {
    const int na = s.N_A(), nb = s.N_B();
    Triplets t;
    const SpMat KA = s.K[kRegionA] - s.Kd[kRegionA] - s.Ks[kRegionA];
    const SpMat KB = s.K[kRegionB] - s.Kd[kRegionB];
    const SpMat RKs = s.R * s.Ks[kRegionB];
    append_block(t, KA, 0, 0);
    append_block(t, RKs, 0, na, -1.0);
    append_block(t, KB, na, na);
    return from_triplets(na + nb, na + nb, t);
}

SpMat build_kdag(const AssembledSystem& s) {
    const int na = s.N_A(), nb = s.N_B(), ns = s.dedup.n_s();
    Triplets t;
    const SpMat KA = s.K[kRegionA] - s.Kd[kRegionA] - s.Ks[kRegionA];
    const SpMat KB = s.K[kRegionB] - s.Kd[kRegionB] - s.Ks[kRegionB];
    const SpMat RKB = s.R * KB;
    const SpMat KBfree = s.dedup.b_free().matrix() * SpMat(s.K[kRegionB] - s.Kd[kRegionB]);
    append_block(t, KA, 0, 0);
    append_block(t, RKB, 0, na);
    append_block(t, KBfree, na, na);
    const int row0 = na + nb - ns;
    for (int i = 0; i < ns; ++i) {
        t.emplace_back(row0 + i, s.dedup.pairing[i].first, 1.0);
        t.emplace_back(row0 + i, na + s.dedup.pairing[i].second, -1.0);
    }
    return from_triplets(na + nb, na + nb, t);
}

}  // namespace hfpk
