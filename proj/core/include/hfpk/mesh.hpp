#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <utility>
#include <vector>

#include "hfpk/model.hpp"

namespace hfpk {

struct Domain {
    double theta_min = -0.1;
    double theta_max = 0.1;
    double omega_min = -0.02;
    double omega_max = 0.02;

    double area() const { return (theta_max - theta_min) * (omega_max - omega_min); }
};

struct MeshSpec {
    Domain domain;
    double dtheta = 0.0005;
    double domega = 0.0002;
};

// Region index: A is the on-region, B the off-region.
inline constexpr int kRegionA = 0;
inline constexpr int kRegionB = 1;

// 0/1 selection operator stored as an index map: row i selects source index index[i].
struct Extractor {
    std::vector<int> index;
    int source_size = 0;

    int rows() const { return static_cast<int>(index.size()); }

    template <class V>
    V gather(const V& src) const {
        V out(index.size());
        for (std::size_t i = 0; i < index.size(); ++i) out[i] = src[index[i]];
        return out;
    }

    // dst += E^T w
    template <class V, class W>
    void scatter_add(const W& w, V& dst) const {
        for (std::size_t i = 0; i < index.size(); ++i) dst[index[i]] += w[i];
    }

    Eigen::SparseMatrix<double> matrix() const;
};

// (element, local edge); local edge e joins local vertices e and (e + 1) % 3.
struct EdgeRef {
    int element = 0;
    int local_edge = 0;
};

struct RegionMesh {
    std::vector<Vec2> nodes;
    std::vector<int> grid_node;                 // grid index of every region-local node
    std::vector<std::array<int, 3>> elements;   // counter-clockwise local node triples
    std::vector<int> element_triangle;          // grid triangle id of every element
    std::vector<EdgeRef> domain_edges;
    std::vector<EdgeRef> switching_edges;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
};

struct Mesh {
    Domain domain;
    double dtheta = 0.0;
    double domega = 0.0;
    double a = 0.0;
    int n_theta = 0;   // grid nodes along theta
    int n_omega = 0;
    int i0 = 0;        // grid column of theta = 0
    int j0 = 0;        // grid row of omega = 0

    std::array<RegionMesh, 2> region;
    std::vector<std::pair<int, int>> pairing;   // (A-local, B-local) per switching node, grid order
    std::vector<int> b_interior;                // B-local nodes off the switching boundary, ascending
    std::vector<int> dedup_grid;                // deduplicated index -> grid index
    std::vector<int> grid_dedup;                // grid index -> deduplicated index
    std::vector<int> triangle_region;           // grid triangle id -> region
    std::vector<int> triangle_element;          // grid triangle id -> element index within its region

    // Deviation of the snapped polyline nodes from omega = a theta (rad/s).
    int polyline_nodes = 0;
    double snap_max_error = 0.0;
    double snap_mean_error = 0.0;

    int N_A() const { return region[kRegionA].node_count(); }
    int N_B() const { return region[kRegionB].node_count(); }
    int N_s() const { return static_cast<int>(pairing.size()); }
    int N() const { return N_A() + N_B(); }
    int dedup_count() const { return N() - N_s(); }
    int grid_count() const { return n_theta * n_omega; }
    int triangle_count() const { return 2 * (n_theta - 1) * (n_omega - 1); }

    int grid_index(int i, int j) const { return j * n_theta + i; }
    Vec2 grid_point(int g) const;
    double theta_at(int i) const { return domain.theta_min + i * dtheta; }
    double omega_at(int j) const { return domain.omega_min + j * domega; }

    // Grid vertex ids of a grid triangle, counter-clockwise.
    std::array<int, 3> triangle_vertices(int t) const;
    double triangle_area() const { return 0.5 * dtheta * domega; }
    // Grid triangle containing x, or -1 when outside the domain.
    int locate(const Vec2& x) const;
};

Mesh build_mesh(const MeshSpec& spec, double a);

Extractor element_extractor(const Mesh& mesh, int region, int e);
Extractor switching_extractor(const Mesh& mesh, int region);

// Bookkeeping between the redundant vector [p_A; p_B] and the deduplicated vector.
struct DedupOperators {
    int n_a = 0;
    int n_b = 0;
    std::vector<std::pair<int, int>> pairing;
    std::vector<int> b_interior;

    int n_s() const { return static_cast<int>(pairing.size()); }
    int n_rdn() const { return n_a + n_b; }
    int n_dedup() const { return n_a + static_cast<int>(b_interior.size()); }

    Extractor switching(int region) const;
    Extractor b_free() const;

    Eigen::SparseMatrix<double> R() const;
    Eigen::SparseMatrix<double> Z_elm() const;
    Eigen::SparseMatrix<double> Z_cmb() const;

    // Z_elm v
    template <class V>
    V eliminate(const V& rdn) const {
        V out(n_dedup());
        for (int n = 0; n < n_a; ++n) out[n] = rdn[n];
        for (std::size_t k = 0; k < b_interior.size(); ++k) out[n_a + k] = rdn[n_a + b_interior[k]];
        return out;
    }

    // Z_cmb p
    template <class V>
    V combine(const V& p) const {
        V out(n_rdn());
        for (int n = 0; n < n_a; ++n) out[n] = p[n];
        for (const auto& [ia, ib] : pairing) out[n_a + ib] = p[ia];
        for (std::size_t k = 0; k < b_interior.size(); ++k) out[n_a + b_interior[k]] = p[n_a + k];
        return out;
    }

    // Z_cmb^T w: split contributions of duplicated nodes are summed.
    template <class V>
    V combine_transpose(const V& w) const {
        V out = eliminate(w);
        for (const auto& [ia, ib] : pairing) out[ia] += w[n_a + ib];
        return out;
    }
};

DedupOperators make_dedup(int n_a, int n_b, std::vector<std::pair<int, int>> pairing);
DedupOperators build_dedup(const Mesh& mesh);

}  // namespace hfpk
