#include "hfpk/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include "hfpk/assembly.hpp"
#include "hfpk/error.hpp"

namespace hfpk {

SweepParam parse_sweep_param(const std::string& s) {
    if (s == "delay" || s == "Delta") return SweepParam::Delay;
    if (s == "sigma") return SweepParam::Sigma;
    if (s == "ratio") return SweepParam::Ratio;
    throw ConfigError("sweep: unknown parameter '" + s + "' (expected delay, sigma or ratio)");
}

SweepMethod parse_sweep_method(const std::string& s) {
    if (s == "chain") return SweepMethod::Chain;
    if (s == "mc-sode") return SweepMethod::McSode;
    if (s == "mc-sdde") return SweepMethod::McSdde;
    throw ConfigError("sweep: unknown method '" + s + "' (expected chain, mc-sode or mc-sdde)");
}

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::Delay: return "delay";
        case SweepParam::Sigma: return "sigma";
        case SweepParam::Ratio: return "ratio";
    }
    return "?";
}

std::string to_string(SweepMethod m) {
    switch (m) {
        case SweepMethod::Chain: return "chain";
        case SweepMethod::McSode: return "mc-sode";
        case SweepMethod::McSdde: return "mc-sdde";
    }
    return "?";
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Unreliable: return "unreliable";
    }
    return "?";
}

ModelParams with_parameter(const ModelParams& base, SweepParam param, double value) {
    ModelParams p = base;
    switch (param) {
        case SweepParam::Delay:
            if (!(value >= 0.0 && value <= 0.5)) throw ConfigError("sweep: delay outside [0, 0.5]");
            p.delay = value;
            break;
        case SweepParam::Sigma:
            if (!(value >= 0.0 && value <= 0.5)) throw ConfigError("sweep: sigma outside [0, 0.5]");
            p.sigma = value;
            break;
        case SweepParam::Ratio:
            if (!(value >= 0.45 && value <= 0.95)) throw ConfigError("sweep: ratio outside [0.45, 0.95]");
            p.a = slope_from_ratio(value);
            break;
    }
    p.validate();
    return p;
}

double edge_mass(const Mesh& mesh, const Eigen::VectorXd& c, const Eigen::VectorXd& p) {
    double m = 0.0;
    for (int n = 0; n < p.size(); ++n) {
        const int g = mesh.dedup_grid[n];
        const int i = g % mesh.n_theta, j = g / mesh.n_theta;
        if (i <= 1 || j <= 1 || i >= mesh.n_theta - 2 || j >= mesh.n_omega - 2) m += c[n] * std::max(p[n], 0.0);
    }
    return m;
}

double peak_theta(const Marginal& m) {
    const auto peaks = local_maxima(m.density, 1e-3);
    int best = -1;
    for (int i : peaks)
        if (m.theta[i] > 0.0 && (best < 0 || m.density[i] > m.density[best])) best = i;
    if (best < 0) return 0.0;
    if (best == 0 || best + 1 >= static_cast<int>(m.theta.size())) return m.theta[best];
    // Parabola through the maximum and its neighbours.
    const double y0 = m.density[best - 1], y1 = m.density[best], y2 = m.density[best + 1];
    const double den = y0 - 2.0 * y1 + y2;
    const double h = m.theta[best + 1] - m.theta[best];
    const double shift = den < 0.0 ? 0.5 * (y0 - y2) / den : 0.0;
    return m.theta[best] + std::clamp(shift, -0.5, 0.5) * h;
}

namespace {

struct ChainOutcome {
    ProbeResult probe;
    std::optional<Marginal> marginal;
};

ChainOutcome run_chain(const ModelParams& params, const SweepSettings& s, const Mesh& mesh) {
    ChainOutcome out;
    if (params.sigma < s.sigma_floor) {
        out.probe = {Stability::Unreliable, "noise intensity below the chain reliability floor"};
        return out;
    }
    try {
        const AssembledSystem sys = assemble(mesh, derive_system(params), s.dt);
        const StationaryResult st = stationary(sys, s.stationary);
        const double bad = st.clipped_mass + st.negative_mass;
        if (bad > s.negative_mass_limit) {
            out.probe = {Stability::Unstable, "negative mass " + std::to_string(bad)};
            return out;
        }
        const double edge = edge_mass(mesh, sys.c, st.p.values);
        if (edge > s.edge_mass_limit) {
            out.probe = {Stability::Unstable, "mass at the domain edge " + std::to_string(edge)};
            return out;
        }
        Marginal m = marginal_theta(mesh, st.p.values);
        const double total = trapezoid(m.theta, m.density);
        for (double& v : m.density) v /= total;
        out.marginal = std::move(m);
    } catch (const NumericalError& e) {
        out.probe = {Stability::Unstable, e.what()};
    }
    return out;
}

struct McOutcome {
    ProbeResult probe;
    std::optional<Marginal> marginal;
};

McOutcome run_mc(const ModelParams& params, const SweepSettings& s, SweepMethod method, const Mesh* mesh, int paths) {
    McOutcome out;
    McConfig cfg = s.mc;
    cfg.paths = paths;
    cfg.T = s.probe_T;
    cfg.record_stride = 0;
    cfg.record_start = cfg.T;
    cfg.domain = s.mesh.domain;
    const auto model = method == SweepMethod::McSdde ? McModel::Sdde : McModel::Sode;
    const auto ens = simulate_ensemble(params, cfg, model);
    long diverged = 0;
    for (const Path& p : ens) diverged += p.diverged ? 1 : 0;
    const double frac = static_cast<double>(diverged) / cfg.paths;
    if (frac > s.diverged_limit) {
        out.probe = {Stability::Unstable, "diverged fraction " + std::to_string(frac)};
        return out;
    }
    if (mesh) {
        const Histogram h = ensemble_histogram(ens, *mesh, 0);
        const std::vector<double> grid = triangle_to_grid(*mesh, h.density);
        Marginal m = marginal_theta(*mesh, from_grid(*mesh, grid));
        const double total = trapezoid(m.theta, m.density);
        if (total > 0.0)
            for (double& v : m.density) v /= total;
        out.marginal = std::move(m);
    }
    return out;
}

}  // namespace

ProbeResult stability_probe(const ModelParams& params, SweepMethod method, const SweepSettings& s) {
    if (method == SweepMethod::Chain) {
        const Mesh mesh = build_mesh(s.mesh, params.a);
        return run_chain(params, s, mesh).probe;
    }
    return run_mc(params, s, method, nullptr, s.probe_paths).probe;
}

SweepResult sweep(SweepParam param, const std::vector<double>& values, const ModelParams& base, SweepMethod method,
                  const SweepSettings& s) {
    SweepResult res;
    res.param = param;
    res.method = method;
    std::unique_ptr<Mesh> mesh;
    for (double v : values) {
        SweepRow row;
        row.value = v;
        try {
            const ModelParams p = with_parameter(base, param, v);
            if (!mesh || mesh->a != p.a) mesh = std::make_unique<Mesh>(build_mesh(s.mesh, p.a));
            if (res.theta.empty())
                for (int i = 0; i < mesh->n_theta; ++i) res.theta.push_back(mesh->theta_at(i));
            std::optional<Marginal> m;
            ProbeResult probe;
            if (method == SweepMethod::Chain) {
                auto o = run_chain(p, s, *mesh);
                probe = o.probe;
                m = std::move(o.marginal);
            } else {
                auto o = run_mc(p, s, method, mesh.get(), std::max(s.probe_paths, s.mc.paths));
                probe = o.probe;
                m = std::move(o.marginal);
            }
            row.status = probe.status;
            row.note = probe.note;
            if (row.status == Stability::Stable && m) row.marginal = m->density;
        } catch (const std::exception& e) {
            row.status = Stability::Unreliable;
            row.note = e.what();
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

}  // namespace hfpk
