#pragma once

#include <string>
#include <vector>

#include "hfpk/chain.hpp"
#include "hfpk/mesh.hpp"
#include "hfpk/model.hpp"
#include "hfpk/montecarlo.hpp"

namespace hfpk {

enum class SweepParam { Delay, Sigma, Ratio };
enum class SweepMethod { Chain, McSode, McSdde };
enum class Stability { Stable, Unstable, Unreliable };

SweepParam parse_sweep_param(const std::string& s);
SweepMethod parse_sweep_method(const std::string& s);
std::string to_string(SweepParam p);
std::string to_string(SweepMethod m);
std::string to_string(Stability s);

struct SweepSettings {
    MeshSpec mesh;
    double dt = 1e-4;               // chain time step (does not enter the stationary solve)
    StationaryOptions stationary;
    McConfig mc;                    // ensemble used for MC marginals
    int probe_paths = 200;
    double probe_T = 50.0;
    double diverged_limit = 0.5;    // MC: unstable above this fraction of diverged paths
    double negative_mass_limit = 0.05;  // chain: unstable above this clipped plus negative mass
    double edge_mass_limit = 0.05;  // chain: unstable above this mass in the outermost grid ring
    double sigma_floor = 0.05;      // chain: unreliable below this noise intensity
};

ModelParams with_parameter(const ModelParams& base, SweepParam param, double value);

struct ProbeResult {
    Stability status = Stability::Stable;
    std::string note;
};

ProbeResult stability_probe(const ModelParams& params, SweepMethod method, const SweepSettings& s);

struct SweepRow {
    double value = 0.0;
    Stability status = Stability::Stable;
    std::vector<double> marginal;  // empty unless stable
    std::string note;
};

struct SweepResult {
    SweepParam param = SweepParam::Sigma;
    SweepMethod method = SweepMethod::Chain;
    std::vector<double> theta;
    std::vector<SweepRow> rows;
};

SweepResult sweep(SweepParam param, const std::vector<double>& values, const ModelParams& base, SweepMethod method,
                  const SweepSettings& s);

// Mass of a deduplicated density in the outermost ring of grid cells.
double edge_mass(const Mesh& mesh, const Eigen::VectorXd& c, const Eigen::VectorXd& p);

// Peak position |theta*| of a marginal: the largest local maximum on the theta > 0 side.
double peak_theta(const Marginal& m);

}  // namespace hfpk
