#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include "hfpk/assembly.hpp"
#include "hfpk/chain.hpp"
#include "hfpk/config.hpp"
#include "hfpk/error.hpp"
#include "hfpk/io.hpp"
#include "hfpk/mesh.hpp"
#include "hfpk/montecarlo.hpp"
#include "hfpk/spectral.hpp"
#include "hfpk/sweep.hpp"
#include "hfpk/toy.hpp"

namespace fs = std::filesystem;
using namespace hfpk;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out = ".";
    int workers = 1;
    bool desk = false;
};

struct Context {
    RunConfig cfg;
    fs::path out;
    int workers = 1;
    std::map<std::string, std::string> meta;

    std::string path(const std::string& name) const { return (out / name).string(); }
};

Context make_context(const Common& c, const std::string& command) {
    Context ctx;
    ctx.cfg = RunConfig::defaults(c.desk);
    if (!c.config.empty()) ctx.cfg.load_file(c.config);
    for (const auto& s : c.sets) ctx.cfg.set(s);
    if (c.workers < 1) throw ConfigError("--workers must be at least 1");
    ctx.cfg.validate();
    ctx.workers = c.workers;
    ctx.out = c.out;
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (!fs::is_directory(ctx.out)) throw ConfigError("cannot create output directory " + c.out);
    ctx.meta = ctx.cfg.flattened();
    ctx.meta["command"] = command;
    ctx.meta["desk"] = c.desk ? "true" : "false";
    ctx.meta["config_file"] = c.config.empty() ? "(defaults)" : c.config;
    ctx.meta["workers"] = std::to_string(c.workers);
    ctx.meta["version"] = kVersion;
    ctx.meta["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    ctx.meta["boost_version"] = BOOST_LIB_VERSION;
    ctx.meta["compiler"] = __VERSION__;
    return ctx;
}

std::string time_tag(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

void write_pdf(const Mesh& mesh, const Eigen::VectorXd& p, const Context& ctx, const std::string& stem) {
    const GridData g = grid_from_mesh(mesh, to_grid(mesh, p));
    write_grid(g, ctx.path(stem + ".grid"));
    write_pgm(g, ctx.path(stem + ".pgm"));
}

void write_marginal(const Marginal& m, const std::string& path) {
    write_csv(path, {"theta_rad", "density"}, {m.theta, m.density});
}

// ---- commands ----

void cmd_mesh_info(Context& ctx) {
    const ModelParams p = ctx.cfg.model();
    const Mesh mesh = build_mesh(ctx.cfg.mesh(), p.a);
    std::map<std::string, std::string> info = {
        {"grid_nodes", std::to_string(mesh.grid_count())},
        {"n_theta", std::to_string(mesh.n_theta)},
        {"n_omega", std::to_string(mesh.n_omega)},
        {"triangles", std::to_string(mesh.triangle_count())},
        {"N_A", std::to_string(mesh.N_A())},
        {"N_B", std::to_string(mesh.N_B())},
        {"N_s", std::to_string(mesh.N_s())},
        {"N", std::to_string(mesh.N())},
        {"dedup_nodes", std::to_string(mesh.dedup_count())},
        {"slope_a", format_double(p.a)},
        {"ratio", format_double(ratio_from_slope(p.a))},
        {"snap_max_error", format_double(mesh.snap_max_error)},
        {"snap_mean_error", format_double(mesh.snap_mean_error)},
    };
    for (const auto& [k, v] : info) std::cout << k << " = " << v << "\n";
    write_meta(ctx.path("mesh_info.txt"), info);

    // region map: 1 where the triangle is in the on-region
    std::vector<double> tri(mesh.triangle_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) tri[t] = mesh.triangle_region[t] == kRegionA ? 1.0 : 0.0;
    write_pgm(grid_from_mesh(mesh, triangle_to_grid(mesh, tri)), ctx.path("regions.pgm"));
}

void cmd_evolve(Context& ctx) {
    const ModelParams p = ctx.cfg.model();
    const SimSettings sim = ctx.cfg.sim();
    const Mesh mesh = build_mesh(ctx.cfg.mesh(), p.a);
    const AssembledSystem sys = assemble(mesh, derive_system(p), sim.dt, sim.lumped);
    const TransitionOperator op(sys);
    const ProbabilityVector p0 = gaussian_initial(mesh, op.weights(), sim.init_mean, sim.init_std);
    const long steps = std::lround(sim.t_end / sim.dt);
    const auto snaps = evolve(op, p0, steps, sim.snapshots);

    std::vector<double> t, mass, th, om, minp;
    for (const Snapshot& s : snaps) {
        write_pdf(mesh, s.p.values, ctx, "evolve_t" + time_tag(s.time));
        const Vec2 com = center_of_mass(mesh, op.weights(), s.p.values);
        t.push_back(s.time);
        mass.push_back(s.p.mass);
        th.push_back(com[0]);
        om.push_back(com[1]);
        minp.push_back(s.p.values.minCoeff());
        std::printf("t=%g mass=%.12f com=(%.6g, %.6g) min=%.3g\n", s.time, s.p.mass, com[0], com[1], minp.back());
    }
    write_csv(ctx.path("evolve.csv"), {"time_s", "mass", "com_theta", "com_omega", "min_value"}, {t, mass, th, om, minp});
    if (sim.export_psi) {
        if (!op.has_matrix()) throw ConfigError("sim.export_psi needs sim.lumped = true");
        write_sparse(op.matrix(), ctx.path("psi.txt"));
    }
    ctx.meta["steps"] = std::to_string(steps);
}

void cmd_stationary(Context& ctx) {
    const ModelParams p = ctx.cfg.model();
    const SimSettings sim = ctx.cfg.sim();
    const Mesh mesh = build_mesh(ctx.cfg.mesh(), p.a);
    const AssembledSystem sys = assemble(mesh, derive_system(p), sim.dt, sim.lumped);
    StationaryOptions opts;
    opts.method = sim.nullspace;
    const StationaryResult st = stationary(sys, opts);
    write_pdf(mesh, st.p.values, ctx, "stationary");
    const Marginal m = marginal_theta(mesh, st.p.values);
    write_marginal(m, ctx.path("marginal.csv"));
    if (sim.export_kdag) write_sparse(build_kdag(sys), ctx.path("kdag.txt"));

    std::map<std::string, std::string> diag = {
        {"sigma_min", format_double(st.sigma_min)},
        {"sigma_next", format_double(st.sigma_next)},
        {"residual", format_double(st.residual)},
        {"clipped_mass", format_double(st.clipped_mass)},
        {"negative_mass", format_double(st.negative_mass)},
        {"route", st.dense ? "dense-svd" : "inverse-iteration"},
        {"iterations", std::to_string(st.iterations)},
        {"peak_theta", format_double(peak_theta(m))},
        {"point_asymmetry", format_double(point_asymmetry(mesh, st.p.values))},
    };
    for (const auto& [k, v] : diag) std::cout << k << " = " << v << "\n";
    write_meta(ctx.path("stationary.txt"), diag);
}

void cmd_psd(Context& ctx) {
    const ModelParams p = ctx.cfg.model();
    const SimSettings sim = ctx.cfg.sim();
    const PsdSettings ps = ctx.cfg.psd();
    const Mesh mesh = build_mesh(ctx.cfg.mesh(), p.a);
    const AssembledSystem sys = assemble(mesh, derive_system(p), sim.dt, sim.lumped);
    StationaryOptions opts;
    opts.method = sim.nullspace;
    const StationaryResult st = stationary(sys, opts);
    const TransitionOperator op(sys);

    const auto [lags, stride] = lag_plan(ps.lag_seconds, sim.dt, ps.max_lags);
    const std::vector<double> R = autocorrelation(op, mesh, st.p.values, lags, stride);
    const double mean = op.weights().dot(node_theta(mesh).cwiseProduct(st.p.values));
    const SpectrumResult chain = psd(R, sim.dt * stride, mean);
    write_csv(ctx.path("autocorr_chain.csv"), {"lag_s", "autocorr"}, {chain.lags, chain.autocorr});
    write_csv(ctx.path("psd_chain.csv"), {"freq_hz", "psd"}, {chain.freqs, chain.psd});
    const double slope = loglog_slope(chain.freqs, chain.psd, ps.band_min, ps.band_max);
    std::printf("chain: lags=%d stride=%d slope=%.4f\n", lags, stride, slope);
    ctx.meta["chain_slope"] = format_double(slope);

    if (ps.mc_paths > 0) {
        McConfig c = ctx.cfg.mc().cfg;
        c.paths = ps.mc_paths;
        c.dt = ps.mc_dt;
        c.T = ps.mc_burn_in + ps.mc_segment;
        c.record_start = ps.mc_burn_in;
        c.record_stride = std::max(1L, std::lround(ps.mc_record_dt / ps.mc_dt));
        c.workers = ctx.workers;
        c.validate(ps.mc_model, p);
        const auto paths = simulate_ensemble(p, c, ps.mc_model);
        const SpectrumResult mc = psd_welch(paths, ps.mc_segment, ps.mc_hann);
        write_csv(ctx.path("psd_mc.csv"), {"freq_hz", "psd"}, {mc.freqs, mc.psd});
        const double ms = loglog_slope(mc.freqs, mc.psd, ps.band_min, ps.band_max);
        std::printf("mc-%s: paths=%d slope=%.4f\n", ps.mc_model == McModel::Sdde ? "sdde" : "sode", c.paths, ms);
        ctx.meta["mc_slope"] = format_double(ms);
        ctx.meta["mc_seed"] = std::to_string(c.seed);
    }
}

void cmd_mc(Context& ctx) {
    const ModelParams p = ctx.cfg.model();
    McSettings s = ctx.cfg.mc();
    const Mesh mesh = build_mesh(ctx.cfg.mesh(), p.a);
    std::vector<long> idx;
    for (double t : s.snapshots) idx.push_back(std::lround(t / s.cfg.dt));
    long stride = 0;
    for (long i : idx) stride = std::gcd(stride, i);
    const long steps = s.cfg.steps();
    const bool final_only = idx.size() == 1 && idx.front() == steps;
    s.cfg.record_start = 0.0;
    s.cfg.record_stride = final_only ? 0 : std::max(stride, 1L);
    s.cfg.workers = ctx.workers;
    const auto paths = simulate_ensemble(p, s.cfg, s.model);

    for (std::size_t k = 0; k < idx.size(); ++k) {
        const int rec = final_only ? 0 : static_cast<int>(idx[k] / s.cfg.record_stride);
        const Histogram h = ensemble_histogram(paths, mesh, rec);
        const std::string stem = "hist_t" + time_tag(s.snapshots[k]);
        const GridData g = grid_from_mesh(mesh, triangle_to_grid(mesh, h.density));
        write_grid(g, ctx.path(stem + ".grid"));
        write_pgm(g, ctx.path(stem + ".pgm"));
        write_csv(ctx.path(stem + "_triangles.csv"), {"density"}, {h.density});
        std::printf("t=%g paths=%d diverged=%d outside=%d\n", h.time, h.paths, h.diverged, h.outside);
    }
    ctx.meta["mc_seed"] = std::to_string(s.cfg.seed);
}

void cmd_sweep(Context& ctx) {
    const ModelParams base = ctx.cfg.model();
    SweepSpec sp = ctx.cfg.sweep();
    sp.settings.mc.workers = ctx.workers;
    const SweepResult res = sweep(sp.param, sp.values, base, sp.method, sp.settings);

    // rows are parameter values; -1 marks unstable, -2 unreliable
    std::vector<std::vector<double>> cols(res.theta.size() + 1);
    std::vector<std::vector<double>> image;
    std::vector<std::string> header{"param"};
    for (double th : res.theta) header.push_back(format_double(th));
    for (const SweepRow& row : res.rows) {
        cols[0].push_back(row.value);
        const double sentinel = row.status == Stability::Unstable ? -1.0 : -2.0;
        for (std::size_t i = 0; i < res.theta.size(); ++i)
            cols[i + 1].push_back(row.status == Stability::Stable ? row.marginal[i] : sentinel);
        image.push_back(row.status == Stability::Stable ? row.marginal : std::vector<double>(res.theta.size(), 0.0));
        std::printf("%s=%g %s%s%s\n", to_string(res.param).c_str(), row.value, to_string(row.status).c_str(),
                    row.note.empty() ? "" : ": ", row.note.c_str());
    }
    const std::string stem = "sweep_" + to_string(res.param) + "_" + to_string(res.method);
    write_csv(ctx.path(stem + ".csv"), header, cols);
    // top row is the largest parameter value
    std::reverse(image.begin(), image.end());
    write_pgm(image, ctx.path(stem + ".pgm"));
}

void cmd_compare(Context& ctx, const std::string& fem_path, const std::string& mc_path) {
    const GridData f = read_grid(fem_path), m = read_grid(mc_path);
    if (f.n_theta != m.n_theta || f.n_omega != m.n_omega || f.theta_min != m.theta_min ||
        f.theta_max != m.theta_max || f.omega_min != m.omega_min || f.omega_max != m.omega_max)
        throw ConfigError("compare: grids differ in extent or size");
    const Mesh mesh = build_mesh(mesh_spec_of(f), ctx.cfg.model().a);
    const auto fe = element_average(mesh, from_grid(mesh, f.values));
    const auto me = element_average(mesh, from_grid(mesh, m.values));
    const PdfDistance d = compare_pdf(mesh, fe, me);
    std::printf("l1=%.6g hellinger=%.6g peak_gap=%d\n", d.l1, d.hellinger, d.peak_gap);
    ctx.meta["l1"] = format_double(d.l1);
    ctx.meta["hellinger"] = format_double(d.hellinger);
    ctx.meta["peak_gap"] = std::to_string(d.peak_gap);
}

int cmd_toy(Context& ctx, int trials, std::uint64_t seed) {
    const ToyCheckResult r = toy_check(trials, seed);
    std::printf("toy-check: trials=%d Z_elm=%s Z_cmb=%s R=%s mismatched_entries=%d residual=%s\n", r.trials,
                r.z_elm_matches ? "ok" : "wrong", r.z_cmb_matches ? "ok" : "wrong", r.r_matches ? "ok" : "wrong",
                r.mismatched_entries, r.mismatched_entries == 0 ? "0" : "nonzero");
    ctx.meta["toy_trials"] = std::to_string(r.trials);
    ctx.meta["toy_seed"] = std::to_string(seed);
    ctx.meta["toy_passed"] = r.passed() ? "true" : "false";
    return r.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov-chain and Monte Carlo analysis of a switched stochastic balance model"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", common.sets, "override, section.key=value (repeatable)");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--workers", common.workers, "worker threads for Monte Carlo and sweeps");
        sub->add_flag("--desk", common.desk, "reduced desk-scale preset");
        return sub;
    };
    auto* mesh_info = add_common(app.add_subcommand("mesh-info", "mesh and switching-boundary statistics"));
    auto* evolve = add_common(app.add_subcommand("evolve", "Markov-chain evolution from the initial Gaussian"));
    auto* stat = add_common(app.add_subcommand("stationary", "stationary density from the kernel of K-dagger"));
    auto* psd_cmd = add_common(app.add_subcommand("psd", "PSD of theta by the chain route and Monte Carlo"));
    auto* mc = add_common(app.add_subcommand("mc", "Monte Carlo ensemble histograms"));
    auto* sweep_cmd = add_common(app.add_subcommand("sweep", "stationary theta marginals over a parameter"));
    auto* compare = add_common(app.add_subcommand("compare", "distances between two grid densities"));
    auto* toy = add_common(app.add_subcommand("toy-check", "exact check of the four-state reduction"));
    std::string fem_path, mc_path;
    compare->add_option("--fem", fem_path, "FEM grid file")->required()->check(CLI::ExistingFile);
    compare->add_option("--mc", mc_path, "Monte Carlo grid file")->required()->check(CLI::ExistingFile);
    int trials = 100;
    std::uint64_t toy_seed = 1;
    toy->add_option("--trials", trials, "random matrices to test");
    toy->add_option("--seed", toy_seed, "seed for the random rationals");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    const auto start = std::chrono::steady_clock::now();
    int code = 0;
    try {
        Context ctx = make_context(common, sub->get_name());
        if (sub == mesh_info) cmd_mesh_info(ctx);
        else if (sub == evolve) cmd_evolve(ctx);
        else if (sub == stat) cmd_stationary(ctx);
        else if (sub == psd_cmd) cmd_psd(ctx);
        else if (sub == mc) cmd_mc(ctx);
        else if (sub == sweep_cmd) cmd_sweep(ctx);
        else if (sub == compare) cmd_compare(ctx, fem_path, mc_path);
        else if (sub == toy) code = cmd_toy(ctx, trials, toy_seed);
        ctx.meta["wall_time_s"] =
            format_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        ctx.meta["exit_code"] = std::to_string(code);
        write_meta(ctx.path("run.meta"), ctx.meta);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return code;
}
