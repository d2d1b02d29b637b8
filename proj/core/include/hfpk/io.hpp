#pragma once

#include <map>
#include <string>
#include <vector>

#include "hfpk/assembly.hpp"
#include "hfpk/mesh.hpp"

namespace hfpk {

// Nodal values on the full rectangular grid, omega rows ascending, theta ascending within a row.
struct GridData {
    double theta_min = 0.0, theta_max = 0.0;
    int n_theta = 0;
    double omega_min = 0.0, omega_max = 0.0;
    int n_omega = 0;
    std::vector<double> values;
};

GridData grid_from_mesh(const Mesh& mesh, std::vector<double> values);
MeshSpec mesh_spec_of(const GridData& g);

void write_grid(const GridData& g, const std::string& path);
GridData read_grid(const std::string& path);

// ASCII graymap, 255 levels scaled linearly from 0 to the maximum; top row is the largest omega.
void write_pgm(const GridData& g, const std::string& path);
void write_pgm(const std::vector<std::vector<double>>& rows, const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

// "# sparse <rows> <cols> <nnz>" then "row col value", zero-based.
template <class Sparse>
void write_sparse(const Sparse& m, const std::string& path);
SpMat read_sparse(const std::string& path);

void write_meta(const std::string& path, const std::map<std::string, std::string>& kv);

std::string format_double(double v);

}  // namespace hfpk
