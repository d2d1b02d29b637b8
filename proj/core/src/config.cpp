#include "hfpk/config.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hfpk/error.hpp"

namespace hfpk {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> k = {
        {"model", {"m", "h", "g", "I", "K", "K_mgh_ratio", "B", "P", "P_mgh_ratio", "D", "a", "ratio", "delay", "sigma"}},
        {"mesh", {"theta_min", "theta_max", "omega_min", "omega_max", "dtheta", "domega"}},
        {"sim", {"dt", "t_end", "snapshots", "init_theta", "init_omega", "init_std_theta", "init_std_omega",
                 "nullspace", "lumped", "export_kdag", "export_psi"}},
        {"mc", {"model", "paths", "t_end", "dt", "seed", "snapshots", "init_theta", "init_omega", "init_std_theta",
                "init_std_omega"}},
        {"sweep", {"param", "method", "values", "min", "max", "count", "probe_paths", "probe_t", "paths",
                   "dt", "diverged_limit", "negative_mass_limit", "edge_mass_limit", "sigma_floor"}},
        {"psd", {"lag_seconds", "max_lags", "band_min", "band_max", "mc_paths", "mc_model", "mc_dt", "mc_segment",
                 "mc_burn_in", "mc_record_dt", "mc_window"}},
    };
    return k;
}

bool parse_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(what + ": expected a boolean, got '" + v + "'");
}

McModel parse_model(const std::string& v, const std::string& what) {
    if (v == "sode") return McModel::Sode;
    if (v == "sdde") return McModel::Sdde;
    throw ConfigError(what + ": expected sode or sdde, got '" + v + "'");
}

}  // namespace

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        boost::algorithm::trim(tok);
        if (tok.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end) throw ConfigError("expected a number in list, got '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

RunConfig RunConfig::defaults(bool desk) {
    RunConfig c;
    c.load_string(R"(
[model]
m = 60
h = 1
g = 9.81
B = 4
D = 10
a = -0.4
delay = 0.2
sigma = 0.2
[mesh]
theta_min = -0.1
theta_max = 0.1
omega_min = -0.02
omega_max = 0.02
dtheta = 0.0005
domega = 0.0002
[sim]
dt = 1e-4
t_end = 50
snapshots = 0, 0.5, 1, 5, 10, 50
init_theta = 0.01
init_omega = 0
init_std_theta = 0.001
init_std_omega = 0.001
nullspace = auto
lumped = false
export_kdag = false
export_psi = false
[mc]
model = sode
paths = 50000
t_end = 50
dt = 1e-4
seed = 20240917
snapshots = 50
init_theta = 0.01
init_omega = 0
init_std_theta = 0.001
init_std_omega = 0.001
[sweep]
param = sigma
method = chain
count = 26
probe_paths = 200
probe_t = 50
paths = 2000
dt = 1e-4
diverged_limit = 0.5
negative_mass_limit = 0.05
edge_mass_limit = 0.05
sigma_floor = 0.05
[psd]
lag_seconds = 120
max_lags = 16384
band_min = 0.03
band_max = 0.3
mc_paths = 50
mc_model = sdde
mc_dt = 1e-4
mc_segment = 120
mc_burn_in = 50
mc_record_dt = 0.01
mc_window = none
)");
    if (desk) {
        c.set("mesh", "dtheta", "0.002");
        c.set("mesh", "domega", "0.0008");
        c.set("mc", "paths", "10000");
        c.set("mc", "dt", "1e-3");
        c.set("psd", "mc_dt", "1e-3");
        c.set("sweep", "paths", "1000");
    }
    return c;
}

void RunConfig::load_string(const std::string& text) {
    std::istringstream in(text);
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body) set(section, key, value.data());
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    load_string(ss.str());
}

void RunConfig::set(const std::string& assignment) {
    const auto dot = assignment.find('.');
    const auto eq = assignment.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq)
        throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
    set(assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    std::string s = section, k = key, v = value;
    boost::algorithm::trim(s);
    boost::algorithm::trim(k);
    boost::algorithm::trim(v);
    const auto it = known_keys().find(s);
    if (it == known_keys().end()) throw ConfigError("config: unknown section [" + s + "]");
    if (!it->second.count(k)) throw ConfigError("config: unknown key '" + k + "' in [" + s + "]");
    values_[s][k] = v;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section);
    return it != values_.end() && it->second.count(key);
}

std::string RunConfig::get(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError("config: missing " + section + "." + key);
    return values_.at(section).at(key);
}

double RunConfig::number(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end || !std::isfinite(x))
        throw ConfigError("config: " + section + "." + key + " is not a finite number: '" + v + "'");
    return x;
}

namespace {

int integer(const RunConfig& c, const std::string& s, const std::string& k) {
    const double v = c.number(s, k);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError("config: " + s + "." + k + " must be an integer");
    return static_cast<int>(v);
}

}  // namespace

ModelParams RunConfig::model() const {
    ModelParams p;
    p.m = number("model", "m");
    p.h = number("model", "h");
    p.g = number("model", "g");
    p.I = has("model", "I") ? number("model", "I") : p.m * p.h * p.h;
    if (has("model", "K_mgh_ratio")) p.K = number("model", "K_mgh_ratio") * p.mgh();
    else if (has("model", "K")) p.K = number("model", "K");
    else p.K = 0.8 * p.mgh();
    if (has("model", "P_mgh_ratio")) p.P = number("model", "P_mgh_ratio") * p.mgh();
    else if (has("model", "P")) p.P = number("model", "P");
    else p.P = 0.25 * p.mgh();
    p.B = number("model", "B");
    p.D = number("model", "D");
    p.a = has("model", "ratio") ? slope_from_ratio(number("model", "ratio")) : number("model", "a");
    p.delay = number("model", "delay");
    p.sigma = number("model", "sigma");
    p.validate();
    return p;
}

MeshSpec RunConfig::mesh() const {
    MeshSpec m;
    m.domain = {number("mesh", "theta_min"), number("mesh", "theta_max"), number("mesh", "omega_min"),
                number("mesh", "omega_max")};
    m.dtheta = number("mesh", "dtheta");
    m.domega = number("mesh", "domega");
    if (!(m.dtheta > 0.0 && m.domega > 0.0)) throw ConfigError("mesh: spacings must be positive");
    return m;
}

SimSettings RunConfig::sim() const {
    SimSettings s;
    s.dt = number("sim", "dt");
    s.t_end = number("sim", "t_end");
    s.snapshots = parse_list(get("sim", "snapshots"));
    s.init_mean = {number("sim", "init_theta"), number("sim", "init_omega")};
    s.init_std = {number("sim", "init_std_theta"), number("sim", "init_std_omega")};
    const std::string ns = get("sim", "nullspace");
    if (ns == "auto") s.nullspace = NullspaceMethod::Auto;
    else if (ns == "iterative") s.nullspace = NullspaceMethod::Iterative;
    else if (ns == "dense") s.nullspace = NullspaceMethod::Dense;
    else throw ConfigError("sim.nullspace: expected auto, iterative or dense");
    s.lumped = parse_bool(get("sim", "lumped"), "sim.lumped");
    s.export_kdag = parse_bool(get("sim", "export_kdag"), "sim.export_kdag");
    s.export_psi = parse_bool(get("sim", "export_psi"), "sim.export_psi");
    if (!(s.dt > 0.0)) throw ConfigError("sim.dt must be positive");
    if (!(s.t_end >= 0.0)) throw ConfigError("sim.t_end must be nonnegative");
    for (double t : s.snapshots)
        if (t < 0.0 || t > s.t_end) throw ConfigError("sim.snapshots must lie in [0, t_end]");
    return s;
}

McSettings RunConfig::mc() const {
    McSettings s;
    s.model = parse_model(get("mc", "model"), "mc.model");
    s.cfg.paths = integer(*this, "mc", "paths");
    s.cfg.T = number("mc", "t_end");
    s.cfg.dt = number("mc", "dt");
    const double seed = number("mc", "seed");
    if (seed < 0 || seed != std::floor(seed)) throw ConfigError("mc.seed must be a nonnegative integer");
    s.cfg.seed = static_cast<std::uint64_t>(seed);
    s.cfg.init_mean = {number("mc", "init_theta"), number("mc", "init_omega")};
    s.cfg.init_std = {number("mc", "init_std_theta"), number("mc", "init_std_omega")};
    s.cfg.domain = mesh().domain;
    s.snapshots = parse_list(get("mc", "snapshots"));
    if (s.snapshots.empty()) throw ConfigError("mc.snapshots must list at least one time");
    for (double t : s.snapshots)
        if (t < 0.0 || t > s.cfg.T) throw ConfigError("mc.snapshots must lie in [0, t_end]");
    s.cfg.validate(s.model, model());
    return s;
}

SweepSpec RunConfig::sweep() const {
    SweepSpec s;
    s.param = parse_sweep_param(get("sweep", "param"));
    s.method = parse_sweep_method(get("sweep", "method"));
    if (has("sweep", "values")) {
        s.values = parse_list(get("sweep", "values"));
    } else {
        double lo = 0.0, hi = 0.5;
        if (s.param == SweepParam::Ratio) lo = 0.45, hi = 0.95;
        if (has("sweep", "min")) lo = number("sweep", "min");
        if (has("sweep", "max")) hi = number("sweep", "max");
        const int n = integer(*this, "sweep", "count");
        if (n < 1) throw ConfigError("sweep.count must be positive");
        for (int i = 0; i < n; ++i) s.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    }
    SweepSettings& st = s.settings;
    st.mesh = mesh();
    st.dt = number("sweep", "dt");
    st.stationary.method = sim().nullspace;
    st.mc = mc().cfg;
    st.mc.paths = integer(*this, "sweep", "paths");
    st.probe_paths = integer(*this, "sweep", "probe_paths");
    st.probe_T = number("sweep", "probe_t");
    st.diverged_limit = number("sweep", "diverged_limit");
    st.negative_mass_limit = number("sweep", "negative_mass_limit");
    st.edge_mass_limit = number("sweep", "edge_mass_limit");
    st.sigma_floor = number("sweep", "sigma_floor");
    if (st.probe_paths < 1 || st.mc.paths < 1) throw ConfigError("sweep: path counts must be positive");
    return s;
}

PsdSettings RunConfig::psd() const {
    PsdSettings p;
    p.lag_seconds = number("psd", "lag_seconds");
    p.max_lags = integer(*this, "psd", "max_lags");
    p.band_min = number("psd", "band_min");
    p.band_max = number("psd", "band_max");
    p.mc_paths = integer(*this, "psd", "mc_paths");
    p.mc_model = parse_model(get("psd", "mc_model"), "psd.mc_model");
    p.mc_dt = number("psd", "mc_dt");
    p.mc_segment = number("psd", "mc_segment");
    p.mc_burn_in = number("psd", "mc_burn_in");
    p.mc_record_dt = number("psd", "mc_record_dt");
    const std::string w = get("psd", "mc_window");
    if (w != "none" && w != "hann") throw ConfigError("psd.mc_window: expected none or hann");
    p.mc_hann = w == "hann";
    if (p.max_lags < 8) throw ConfigError("psd.max_lags must be at least 8");
    if (!(p.lag_seconds > 0.0 && p.band_min > 0.0 && p.band_max > p.band_min))
        throw ConfigError("psd: lag horizon and band must be positive and ordered");
    if (p.mc_paths < 0 || !(p.mc_dt > 0.0) || !(p.mc_segment > 0.0) || p.mc_burn_in < 0.0 || !(p.mc_record_dt > 0.0))
        throw ConfigError("psd: invalid Monte Carlo settings");
    return p;
}

void RunConfig::validate() const {
    model();
    mesh();
    sim();
    mc();
    sweep();
    psd();
}

std::map<std::string, std::string> RunConfig::flattened() const {
    std::map<std::string, std::string> out;
    for (const auto& [s, kv] : values_)
        for (const auto& [k, v] : kv) out[s + "." + k] = v;
    return out;
}

}  // namespace hfpk
