#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hfpk/mesh.hpp"
#include "hfpk/model.hpp"
#include "hfpk/spectral.hpp"

namespace hfpk {

enum class McModel { Sode, Sdde };

struct McConfig {
    int paths = 50000;
    double T = 50.0;             // s
    double dt = 1e-4;            // s
    std::uint64_t seed = 20240917;
    long record_stride = 0;      // steps between recorded states; 0 records only the final state
    double record_start = 0.0;   // s, first recorded time
    Vec2 init_mean{0.01, 0.0};
    Vec2 init_std{0.001, 0.001};
    Domain domain;               // divergence box is this domain scaled by 2 about the origin
    int workers = 1;

    void validate(McModel model, const ModelParams& params) const;
    long steps() const;
};

struct Path {
    double t0 = 0.0;             // time of states[0]
    double record_dt = 0.0;
    std::vector<Vec2> states;
    bool diverged = false;
    double escape_time = -1.0;
};

Path simulate_sode(const ModelParams& params, const McConfig& cfg, long path_index);
Path simulate_sdde(const ModelParams& params, const McConfig& cfg, long path_index);

// Paths 0..cfg.paths-1, split over cfg.workers threads; result order is the path index.
std::vector<Path> simulate_ensemble(const ModelParams& params, const McConfig& cfg, McModel model);

struct Histogram {
    std::vector<double> density;  // per grid triangle
    int paths = 0;
    int diverged = 0;
    int outside = 0;              // alive particles outside the mesh domain
    double time = 0.0;
};

Histogram ensemble_histogram(const std::vector<Path>& paths, const Mesh& mesh, int record_index);

// Averaged periodogram of theta over non-overlapping segments of every path.
SpectrumResult psd_welch(const std::vector<Path>& paths, double segment_s, bool hann = false);

struct PdfDistance {
    double l1 = 0.0;
    double hellinger = 0.0;
    int peak_gap = 0;  // theta grid cells
};

// Piecewise-linear nodal density averaged over each grid triangle.
std::vector<double> element_average(const Mesh& mesh, const Eigen::VectorXd& p);

PdfDistance compare_pdf(const Mesh& mesh, const std::vector<double>& fem, const std::vector<double>& mc);
PdfDistance compare_pdf(const Mesh& mesh, const Eigen::VectorXd& p_fem, const Histogram& hist);

// Nodal density from per-triangle values (area-weighted average of the adjacent triangles).
std::vector<double> triangle_to_grid(const Mesh& mesh, const std::vector<double>& tri);

}  // namespace hfpk
