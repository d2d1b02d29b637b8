#pragma once

#include <map>
#include <string>
#include <vector>

#include "hfpk/chain.hpp"
#include "hfpk/mesh.hpp"
#include "hfpk/model.hpp"
#include "hfpk/montecarlo.hpp"
#include "hfpk/sweep.hpp"

namespace hfpk {

struct SimSettings {
    double dt = 1e-4;
    double t_end = 50.0;
    std::vector<double> snapshots;
    Vec2 init_mean{0.01, 0.0};
    Vec2 init_std{0.001, 0.001};
    NullspaceMethod nullspace = NullspaceMethod::Auto;
    bool lumped = false;
    bool export_kdag = false;
    bool export_psi = false;
};

struct McSettings {
    McConfig cfg;
    McModel model = McModel::Sode;
    std::vector<double> snapshots;
};

struct SweepSpec {
    SweepParam param = SweepParam::Sigma;
    SweepMethod method = SweepMethod::Chain;
    std::vector<double> values;
    SweepSettings settings;
};

struct PsdSettings {
    double lag_seconds = 120.0;
    int max_lags = 16384;
    double band_min = 0.03;
    double band_max = 0.3;
    int mc_paths = 50;
    McModel mc_model = McModel::Sdde;
    double mc_dt = 1e-4;
    double mc_segment = 120.0;
    double mc_burn_in = 50.0;
    double mc_record_dt = 0.01;
    bool mc_hann = false;
};

// Sectioned key = value configuration; unknown sections and keys are rejected.
class RunConfig {
public:
    // Built-in defaults, optionally with the reduced desk-scale preset applied.
    static RunConfig defaults(bool desk = false);

    void load_file(const std::string& path);
    void load_string(const std::string& text);
    // "section.key=value"
    void set(const std::string& assignment);
    void set(const std::string& section, const std::string& key, const std::string& value);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;

    ModelParams model() const;
    MeshSpec mesh() const;
    SimSettings sim() const;
    McSettings mc() const;
    SweepSpec sweep() const;
    PsdSettings psd() const;

    // Resolve and range-check every section.
    void validate() const;

    std::map<std::string, std::string> flattened() const;

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
};

std::vector<double> parse_list(const std::string& s);

}  // namespace hfpk
