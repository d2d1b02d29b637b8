#include "hfpk/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "hfpk/error.hpp"

namespace hfpk {

namespace {

int checked_steps(double lo, double hi, double step, const char* what) {
    if (!(step > 0.0)) throw ConfigError(std::string("mesh: spacing for ") + what + " must be positive");
    const double n = (hi - lo) / step;
    const double r = std::round(n);
    if (r < 2 || std::abs(n - r) > 1e-8 * std::max(1.0, r))
        throw ConfigError(std::string("mesh: spacing does not divide the ") + what + " extent");
    return static_cast<int>(r);
}

int origin_index(double lo, double step, int cells, const char* what) {
    const double n = -lo / step;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-8 * std::max(1.0, std::abs(r)))
        throw ConfigError(std::string("mesh: ") + what + " = 0 is not a grid line");
    if (r <= 0 || r >= cells)
        throw ConfigError(std::string("mesh: domain must contain the origin strictly inside along ") + what);
    return static_cast<int>(r);
}

std::uint64_t edge_key(int g0, int g1) {
    if (g0 > g1) std::swap(g0, g1);
    return (static_cast<std::uint64_t>(g0) << 32) | static_cast<std::uint32_t>(g1);
}

struct GridWalk {
    int n_theta, n_omega, i0, j0;
    double slope;  // line slope in grid units

    bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < n_theta && j < n_omega; }
    bool on_perimeter(int i, int j) const {
        return i == 0 || j == 0 || i == n_theta - 1 || j == n_omega - 1;
    }

    // Greedy lattice path from the origin along mesh edges, direction dir = +1 (theta > 0) or -1.
    // Each step picks the admissible edge whose midpoint is closest to the line.
    std::vector<std::pair<int, int>> trace(int dir) const {
        std::vector<std::pair<int, int>> moves;
        if (slope < 0.0) moves.push_back({dir, -dir});  // cell diagonal
        moves.push_back({dir, 0});
        if (slope != 0.0) moves.push_back({0, slope < 0.0 ? -dir : dir});

        std::vector<std::pair<int, int>> path{{i0, j0}};
        int i = i0, j = j0;
        while (!on_perimeter(i, j)) {
            double best = 0.0;
            int bi = -1, bj = -1;
            for (const auto& [di, dj] : moves) {
                if (!inside(i + di, j + dj)) continue;
                const double u = (i - i0) + 0.5 * di;
                const double v = (j - j0) + 0.5 * dj;
                const double d = std::abs(v - slope * u);
                if (bi < 0 || d < best - 1e-12) {
                    best = d;
                    bi = i + di;
                    bj = j + dj;
                }
            }
            if (bi < 0) break;
            i = bi;
            j = bj;
            path.push_back({i, j});
        }
        return path;
    }
};

}  // namespace

Eigen::SparseMatrix<double> Extractor::matrix() const {
    Eigen::SparseMatrix<double> L(rows(), source_size);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(index.size());
    for (int r = 0; r < rows(); ++r) t.emplace_back(r, index[r], 1.0);
    L.setFromTriplets(t.begin(), t.end());
    return L;
}

Vec2 Mesh::grid_point(int g) const { return {theta_at(g % n_theta), omega_at(g / n_theta)}; }

std::array<int, 3> Mesh::triangle_vertices(int t) const {
    const int cell = t / 2;
    const int i = cell % (n_theta - 1);
    const int j = cell / (n_theta - 1);
    if (t % 2 == 0) return {grid_index(i, j), grid_index(i + 1, j), grid_index(i, j + 1)};
    return {grid_index(i + 1, j + 1), grid_index(i, j + 1), grid_index(i + 1, j)};
}

int Mesh::locate(const Vec2& x) const {
    const double u = (x[0] - domain.theta_min) / dtheta;
    const double v = (x[1] - domain.omega_min) / domega;
    if (!(u >= 0.0 && v >= 0.0 && u <= n_theta - 1 && v <= n_omega - 1)) return -1;
    int i = std::min(static_cast<int>(u), n_theta - 2);
    int j = std::min(static_cast<int>(v), n_omega - 2);
    const double fu = u - i, fv = v - j;
    return 2 * (j * (n_theta - 1) + i) + (fu + fv <= 1.0 ? 0 : 1);
}

Mesh build_mesh(const MeshSpec& spec, double a) {
    const Domain& dom = spec.domain;
    if (!(dom.theta_max > dom.theta_min && dom.omega_max > dom.omega_min))
        throw ConfigError("mesh: empty domain");
    if (!std::isfinite(a)) throw ConfigError("mesh: slope must be finite");

    Mesh mesh;
    mesh.domain = dom;
    mesh.dtheta = spec.dtheta;
    mesh.domega = spec.domega;
    mesh.a = a;
    const int cells_t = checked_steps(dom.theta_min, dom.theta_max, spec.dtheta, "theta");
    const int cells_w = checked_steps(dom.omega_min, dom.omega_max, spec.domega, "omega");
    mesh.n_theta = cells_t + 1;
    mesh.n_omega = cells_w + 1;
    mesh.i0 = origin_index(dom.theta_min, spec.dtheta, cells_t, "theta");
    mesh.j0 = origin_index(dom.omega_min, spec.domega, cells_w, "omega");

    // Switching edges: the theta = 0 grid column plus the snapped polyline for omega = a theta.
    std::unordered_set<std::uint64_t> cut;
    for (int j = 0; j + 1 < mesh.n_omega; ++j)
        cut.insert(edge_key(mesh.grid_index(mesh.i0, j), mesh.grid_index(mesh.i0, j + 1)));

    const GridWalk walk{mesh.n_theta, mesh.n_omega, mesh.i0, mesh.j0, a * spec.dtheta / spec.domega};
    double err_sum = 0.0;
    for (int dir : {1, -1}) {
        const auto path = walk.trace(dir);
        for (std::size_t k = 0; k < path.size(); ++k) {
            const auto [i, j] = path[k];
            if (k > 0) {
                cut.insert(edge_key(mesh.grid_index(path[k - 1].first, path[k - 1].second),
                                    mesh.grid_index(i, j)));
                const double err = std::abs(mesh.omega_at(j) - a * mesh.theta_at(i));
                mesh.snap_max_error = std::max(mesh.snap_max_error, err);
                err_sum += err;
                ++mesh.polyline_nodes;
            }
        }
    }
    ++mesh.polyline_nodes;  // shared origin
    mesh.snap_mean_error = err_sum / mesh.polyline_nodes;

    // Triangle adjacency across edges that are not cut.
    const int n_tri = mesh.triangle_count();
    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
    edge_tris.reserve(static_cast<std::size_t>(n_tri) * 2);
    for (int t = 0; t < n_tri; ++t) {
        const auto v = mesh.triangle_vertices(t);
        for (int e = 0; e < 3; ++e) {
            auto [it, fresh] = edge_tris.try_emplace(edge_key(v[e], v[(e + 1) % 3]), std::array<int, 2>{t, -1});
            if (!fresh) it->second[1] = t;
        }
    }

    // Union-find over sectors.
    std::vector<int> parent(n_tri);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [key, tris] : edge_tris) {
        if (tris[1] < 0 || cut.count(key)) continue;
        parent[find(tris[0])] = find(tris[1]);
    }

    // Each sector takes the majority vote of classify at its element centroids.
    std::unordered_map<int, long> vote;
    for (int t = 0; t < n_tri; ++t) {
        const auto v = mesh.triangle_vertices(t);
        Vec2 c{0.0, 0.0};
        for (int g : v) {
            const Vec2 x = mesh.grid_point(g);
            c[0] += x[0] / 3.0;
            c[1] += x[1] / 3.0;
        }
        const Region r = classify(a, c);
        vote[find(t)] += r == Region::On ? 1 : (r == Region::Off ? -1 : 0);
    }
    mesh.triangle_region.resize(n_tri);
    for (int t = 0; t < n_tri; ++t) mesh.triangle_region[t] = vote[find(t)] > 0 ? kRegionA : kRegionB;

    // Region-local node numbering in row-major grid order.
    const int n_grid = mesh.grid_count();
    std::array<std::vector<int>, 2> local;
    for (int k = 0; k < 2; ++k) local[k].assign(n_grid, -1);
    for (int t = 0; t < n_tri; ++t)
        for (int g : mesh.triangle_vertices(t)) local[mesh.triangle_region[t]][g] = 0;
    for (int k = 0; k < 2; ++k) {
        RegionMesh& rm = mesh.region[k];
        for (int g = 0; g < n_grid; ++g) {
            if (local[k][g] < 0) continue;
            local[k][g] = rm.node_count();
            rm.grid_node.push_back(g);
            rm.nodes.push_back(mesh.grid_point(g));
        }
    }

    mesh.triangle_element.assign(n_tri, -1);
    for (int t = 0; t < n_tri; ++t) {
        const int k = mesh.triangle_region[t];
        RegionMesh& rm = mesh.region[k];
        const auto v = mesh.triangle_vertices(t);
        mesh.triangle_element[t] = rm.element_count();
        rm.elements.push_back({local[k][v[0]], local[k][v[1]], local[k][v[2]]});
        rm.element_triangle.push_back(t);
    }

    auto on_same_side = [&](int g0, int g1) {
        const int i0 = g0 % mesh.n_theta, j0 = g0 / mesh.n_theta;
        const int i1 = g1 % mesh.n_theta, j1 = g1 / mesh.n_theta;
        return (i0 == i1 && (i0 == 0 || i0 == mesh.n_theta - 1)) ||
               (j0 == j1 && (j0 == 0 || j0 == mesh.n_omega - 1));
    };
    for (int t = 0; t < n_tri; ++t) {
        const int k = mesh.triangle_region[t];
        const auto v = mesh.triangle_vertices(t);
        for (int e = 0; e < 3; ++e) {
            const auto& tris = edge_tris.at(edge_key(v[e], v[(e + 1) % 3]));
            const EdgeRef ref{mesh.triangle_element[t], e};
            if (tris[1] < 0) {
                if (on_same_side(v[e], v[(e + 1) % 3])) mesh.region[k].domain_edges.push_back(ref);
            } else {
                const int other = tris[0] == t ? tris[1] : tris[0];
                if (mesh.triangle_region[other] != k) mesh.region[k].switching_edges.push_back(ref);
            }
        }
    }

    mesh.grid_dedup.assign(n_grid, -1);
    for (int g = 0; g < n_grid; ++g) {
        if (local[kRegionA][g] >= 0 && local[kRegionB][g] >= 0)
            mesh.pairing.push_back({local[kRegionA][g], local[kRegionB][g]});
        if (local[kRegionA][g] >= 0) mesh.grid_dedup[g] = local[kRegionA][g];
    }
    const int n_a = mesh.N_A();
    for (int nb = 0; nb < mesh.N_B(); ++nb) {
        const int g = mesh.region[kRegionB].grid_node[nb];
        if (local[kRegionA][g] >= 0) continue;
        mesh.grid_dedup[g] = n_a + static_cast<int>(mesh.b_interior.size());
        mesh.b_interior.push_back(nb);
    }
    mesh.dedup_grid.assign(mesh.dedup_count(), -1);
    for (int g = 0; g < n_grid; ++g) mesh.dedup_grid[mesh.grid_dedup[g]] = g;
    return mesh;
}

Extractor element_extractor(const Mesh& mesh, int region, int e) {
    const RegionMesh& rm = mesh.region.at(region);
    const auto& el = rm.elements.at(e);
    return Extractor{{el[0], el[1], el[2]}, rm.node_count()};
}

Extractor switching_extractor(const Mesh& mesh, int region) { return build_dedup(mesh).switching(region); }

Extractor DedupOperators::switching(int region) const {
    Extractor L;
    L.source_size = region == kRegionA ? n_a : n_b;
    for (const auto& [ia, ib] : pairing) L.index.push_back(region == kRegionA ? ia : ib);
    return L;
}

Extractor DedupOperators::b_free() const { return Extractor{b_interior, n_b}; }

Eigen::SparseMatrix<double> DedupOperators::R() const {
    return Eigen::SparseMatrix<double>(switching(kRegionA).matrix().transpose()) * switching(kRegionB).matrix();
}

Eigen::SparseMatrix<double> DedupOperators::Z_elm() const {
    std::vector<Eigen::Triplet<double>> t;
    for (int n = 0; n < n_a; ++n) t.emplace_back(n, n, 1.0);
    for (std::size_t k = 0; k < b_interior.size(); ++k) t.emplace_back(n_a + k, n_a + b_interior[k], 1.0);
    Eigen::SparseMatrix<double> Z(n_dedup(), n_rdn());
    Z.setFromTriplets(t.begin(), t.end());
    return Z;
}

Eigen::SparseMatrix<double> DedupOperators::Z_cmb() const {
    std::vector<Eigen::Triplet<double>> t;
    for (int n = 0; n < n_a; ++n) t.emplace_back(n, n, 1.0);
    for (const auto& [ia, ib] : pairing) t.emplace_back(n_a + ib, ia, 1.0);
    for (std::size_t k = 0; k < b_interior.size(); ++k) t.emplace_back(n_a + b_interior[k], n_a + k, 1.0);
    Eigen::SparseMatrix<double> Z(n_rdn(), n_dedup());
    Z.setFromTriplets(t.begin(), t.end());
    return Z;
}

DedupOperators make_dedup(int n_a, int n_b, std::vector<std::pair<int, int>> pairing) {
    DedupOperators d;
    d.n_a = n_a;
    d.n_b = n_b;
    std::vector<char> paired(n_b, 0);
    for (const auto& [ia, ib] : pairing) {
        if (ia < 0 || ia >= n_a || ib < 0 || ib >= n_b || paired[ib])
            throw std::invalid_argument("make_dedup: invalid pairing");
        paired[ib] = 1;
    }
    d.pairing = std::move(pairing);
    for (int nb = 0; nb < n_b; ++nb)
        if (!paired[nb]) d.b_interior.push_back(nb);
    return d;
}

DedupOperators build_dedup(const Mesh& mesh) { return make_dedup(mesh.N_A(), mesh.N_B(), mesh.pairing); }

}  // namespace hfpk
