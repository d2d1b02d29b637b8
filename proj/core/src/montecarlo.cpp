#include "hfpk/montecarlo.hpp"

#include "fftw_lock.hpp"

#include <fftw3.h>
#include <sodium.h>

#include <array>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "hfpk/error.hpp"

namespace hfpk {

namespace {

// Counter-based stream: ChaCha20 keyed by the seed, nonce = path index, block counter = position.
// Each path owns its stream, so results do not depend on the worker schedule.
class PathEngine {
public:
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    PathEngine(std::uint64_t seed, long path_index) {
        static const int init = sodium_init();
        (void)init;
        for (int b = 0; b < 8; ++b) {
            key_[b] = static_cast<unsigned char>(seed >> (8 * b));
            nonce_[b] = static_cast<unsigned char>(static_cast<std::uint64_t>(path_index) >> (8 * b));
        }
    }

    result_type operator()() {
        if (pos_ == kWords) refill();
        const unsigned char* p = bytes_.data() + 8 * pos_++;
        result_type v = 0;
        for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];  // little-endian on every host
        return v;
    }

private:
    static constexpr int kBlocks = 16;
    static constexpr int kWords = kBlocks * 64 / 8;

    void refill() {
        crypto_stream_chacha20_xor_ic(bytes_.data(), zeros_.data(), bytes_.size(), nonce_.data(), block_, key_.data());
        block_ += kBlocks;
        pos_ = 0;
    }

    std::array<unsigned char, crypto_stream_chacha20_KEYBYTES> key_{};
    std::array<unsigned char, crypto_stream_chacha20_NONCEBYTES> nonce_{};
    std::array<unsigned char, kBlocks * 64> bytes_{}, zeros_{};
    std::uint64_t block_ = 0;
    int pos_ = kWords;
};

struct Box {
    double t_lo, t_hi, w_lo, w_hi;
    bool contains(const Vec2& x) const { return x[0] >= t_lo && x[0] <= t_hi && x[1] >= w_lo && x[1] <= w_hi; }
};

Box divergence_box(const Domain& d) {
    return {2.0 * d.theta_min, 2.0 * d.theta_max, 2.0 * d.omega_min, 2.0 * d.omega_max};
}

struct Recorder {
    long stride, first, steps;
    Path& path;

    void maybe_record(long n, const Vec2& x) {
        if (n < first) return;
        if (stride == 0 ? n == steps : (n - first) % stride == 0) path.states.push_back(x);
    }
};

template <class Step>
Path integrate(const McConfig& cfg, long path_index, Step&& step_fn) {
    PathEngine rng(cfg.seed, path_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec2 x{cfg.init_mean[0] + cfg.init_std[0] * normal(rng), cfg.init_mean[1] + cfg.init_std[1] * normal(rng)};

    Path path;
    const long steps = cfg.steps();
    const long first = std::lround(cfg.record_start / cfg.dt);
    path.t0 = first * cfg.dt;
    path.record_dt = cfg.record_stride * cfg.dt;
    if (cfg.record_stride == 0) path.t0 = steps * cfg.dt;
    Recorder rec{cfg.record_stride, first, steps, path};
    const Box box = divergence_box(cfg.domain);
    const double sqdt = std::sqrt(cfg.dt);

    step_fn.reset(x);
    rec.maybe_record(0, x);
    for (long n = 0; n < steps; ++n) {
        x = step_fn(x, sqdt * normal(rng));
        if (!box.contains(x) || !std::isfinite(x[0]) || !std::isfinite(x[1])) {
            path.diverged = true;
            path.escape_time = (n + 1) * cfg.dt;
            break;
        }
        rec.maybe_record(n + 1, x);
    }
    return path;
}

struct SodeStep {
    SystemMatrices sys;
    double a, dt;

    void reset(const Vec2&) {}
    Vec2 operator()(const Vec2& x, double dw) const {
        const bool on = classify(a, x) == Region::On;
        const Mat2& A = on ? sys.A_on : sys.A_off;
        const double s = on ? sys.sigma_on : sys.sigma_off;
        return {x[0] + dt * (A[0][0] * x[0] + A[0][1] * x[1]),
                x[1] + dt * (A[1][0] * x[0] + A[1][1] * x[1]) + s * dw};
    }
};

struct SddeStep {
    ModelParams p;
    double dt;
    long delay_steps;
    std::vector<Vec2> history;
    long head = 0;

    void reset(const Vec2& x0) {
        history.assign(std::max<long>(delay_steps, 1), x0);
        head = 0;
    }
    Vec2 operator()(const Vec2& x, double dw) {
        const Vec2 xd = delay_steps > 0 ? history[head] : x;
        if (delay_steps > 0) {
            history[head] = x;
            head = (head + 1) % delay_steps;
        }
        const double tau = classify(p.a, xd) == Region::On ? -p.P * xd[0] - p.D * xd[1] : 0.0;
        const double acc = (p.mgh() * x[0] - p.K * x[0] - p.B * x[1] + tau) / p.I;
        return {x[0] + dt * x[1], x[1] + dt * acc + p.sigma / p.I * dw};
    }
};

}  // namespace

long McConfig::steps() const { return std::lround(T / dt); }

void McConfig::validate(McModel model, const ModelParams& params) const {
    if (paths < 1) throw ConfigError("mc: paths must be at least 1");
    if (!(dt > 0.0) || !(T > 0.0)) throw ConfigError("mc: T and dt must be positive");
    if (record_stride < 0) throw ConfigError("mc: record stride must be nonnegative");
    if (!(record_start >= 0.0 && record_start <= T)) throw ConfigError("mc: record start must lie in [0, T]");
    if (!(init_std[0] >= 0.0 && init_std[1] >= 0.0)) throw ConfigError("mc: initial std must be nonnegative");
    if (model == McModel::Sdde) {
        const double r = params.delay / dt;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
            throw ConfigError("mc: delay must be an integer multiple of dt");
    }
}

Path simulate_sode(const ModelParams& params, const McConfig& cfg, long path_index) {
    cfg.validate(McModel::Sode, params);
    return integrate(cfg, path_index, SodeStep{derive_system(params), params.a, cfg.dt});
}

Path simulate_sdde(const ModelParams& params, const McConfig& cfg, long path_index) {
    cfg.validate(McModel::Sdde, params);
    params.validate();
    return integrate(cfg, path_index, SddeStep{params, cfg.dt, std::lround(params.delay / cfg.dt), {}, 0});
}

std::vector<Path> simulate_ensemble(const ModelParams& params, const McConfig& cfg, McModel model) {
    cfg.validate(model, params);
    std::vector<Path> out(cfg.paths);
    std::atomic<long> next{0};
    auto worker = [&]() {
        for (long i = next++; i < cfg.paths; i = next++)
            out[i] = model == McModel::Sode ? simulate_sode(params, cfg, i) : simulate_sdde(params, cfg, i);
    };
    const int n = std::max(1, std::min(cfg.workers, cfg.paths));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

Histogram ensemble_histogram(const std::vector<Path>& paths, const Mesh& mesh, int record_index) {
    Histogram h;
    h.paths = static_cast<int>(paths.size());
    std::vector<long> counts(mesh.triangle_count(), 0);
    bool have_time = false;
    for (const Path& p : paths) {
        if (record_index < 0 || record_index >= static_cast<int>(p.states.size())) {
            if (p.diverged) {
                ++h.diverged;
                continue;
            }
            throw ConfigError("histogram: record index beyond the recorded states");
        }
        if (!have_time) {
            h.time = p.t0 + record_index * p.record_dt;
            have_time = true;
        }
        const int t = mesh.locate(p.states[record_index]);
        if (t < 0) {
            ++h.outside;
            continue;
        }
        ++counts[t];
    }
    if (h.diverged == h.paths) throw NumericalError("histogram: all paths diverged");
    const double norm = 1.0 / (static_cast<double>(h.paths) * mesh.triangle_area());
    h.density.resize(counts.size());
    for (std::size_t t = 0; t < counts.size(); ++t) h.density[t] = counts[t] * norm;
    return h;
}

SpectrumResult psd_welch(const std::vector<Path>& paths, double segment_s, bool hann) {
    if (paths.empty()) throw ConfigError("psd_welch: no paths");
    const double dt = paths.front().record_dt;
    if (!(dt > 0.0)) throw ConfigError("psd_welch: paths carry no recorded series");
    const int n = static_cast<int>(std::lround(segment_s / dt));
    if (n < 16) throw ConfigError("psd_welch: segment shorter than 16 samples");

    std::vector<double> w(n, 1.0);
    if (hann)
        for (int k = 0; k < n; ++k) w[k] = 0.5 - 0.5 * std::cos(2.0 * M_PI * k / n);
    double w2 = 0.0;
    for (double v : w) w2 += v * v;

    std::vector<double> buf(n);
    std::vector<fftw_complex> X(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, buf.data(), X.data(), FFTW_ESTIMATE);
    }
    std::vector<double> acc(n / 2 + 1, 0.0);
    long segments = 0;
    for (const Path& p : paths) {
        const int len = static_cast<int>(p.states.size());
        if (len < n) {
            std::cerr << "warning: psd_welch skips a path shorter than the segment\n";
            continue;
        }
        for (int s0 = 0; s0 + n <= len; s0 += n) {
            double mean = 0.0;
            for (int k = 0; k < n; ++k) mean += p.states[s0 + k][0];
            mean /= n;
            for (int k = 0; k < n; ++k) buf[k] = (p.states[s0 + k][0] - mean) * w[k];
            fftw_execute(plan);
            for (int k = 0; k <= n / 2; ++k) {
                const double both = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
                acc[k] += both * dt * (X[k][0] * X[k][0] + X[k][1] * X[k][1]) / w2;
            }
            ++segments;
        }
    }
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    if (segments == 0) throw NumericalError("psd_welch: no path covers the segment");
    SpectrumResult r;
    r.dt = dt;
    r.lag_count = n;
    for (int k = 0; k <= n / 2; ++k) {
        r.freqs.push_back(k / (n * dt));
        r.psd.push_back(acc[k] / segments);
    }
    return r;
}

std::vector<double> element_average(const Mesh& mesh, const Eigen::VectorXd& p) {
    if (p.size() != mesh.dedup_count()) throw ConfigError("element_average: vector does not match the mesh");
    std::vector<double> out(mesh.triangle_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto v = mesh.triangle_vertices(t);
        out[t] = (p[mesh.grid_dedup[v[0]]] + p[mesh.grid_dedup[v[1]]] + p[mesh.grid_dedup[v[2]]]) / 3.0;
    }
    return out;
}

namespace {

// Theta-column marginal of a per-triangle density (one value per grid cell column).
std::vector<double> column_marginal(const Mesh& mesh, const std::vector<double>& tri) {
    const int nc = mesh.n_theta - 1;
    std::vector<double> m(nc, 0.0);
    for (int t = 0; t < mesh.triangle_count(); ++t) m[(t / 2) % nc] += tri[t] * mesh.triangle_area();
    return m;
}

int argmax_in(const std::vector<double>& v, int lo, int hi) {
    int best = lo;
    for (int i = lo; i < hi; ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace

PdfDistance compare_pdf(const Mesh& mesh, const std::vector<double>& fem, const std::vector<double>& mc) {
    const auto n = static_cast<std::size_t>(mesh.triangle_count());
    if (fem.size() != n || mc.size() != n) throw ConfigError("compare_pdf: densities are not on the same mesh");
    PdfDistance d;
    double h2 = 0.0;
    const double area = mesh.triangle_area();
    for (std::size_t t = 0; t < n; ++t) {
        d.l1 += std::abs(fem[t] - mc[t]) * area;
        const double s = std::sqrt(std::max(fem[t], 0.0)) - std::sqrt(std::max(mc[t], 0.0));
        h2 += s * s * area;
    }
    d.hellinger = std::sqrt(0.5 * h2);
    // Peak gap: per half-plane, distance between the argmax columns of the theta marginals.
    const auto mf = column_marginal(mesh, fem), mm = column_marginal(mesh, mc);
    const int nc = static_cast<int>(mf.size());
    const int split = mesh.i0;
    for (const auto& [lo, hi] : {std::pair{0, split}, std::pair{split, nc}}) {
        if (hi <= lo) continue;
        d.peak_gap = std::max(d.peak_gap, std::abs(argmax_in(mf, lo, hi) - argmax_in(mm, lo, hi)));
    }
    return d;
}

PdfDistance compare_pdf(const Mesh& mesh, const Eigen::VectorXd& p_fem, const Histogram& hist) {
    return compare_pdf(mesh, element_average(mesh, p_fem), hist.density);
}

std::vector<double> triangle_to_grid(const Mesh& mesh, const std::vector<double>& tri) {
    if (static_cast<int>(tri.size()) != mesh.triangle_count()) throw ConfigError("triangle_to_grid: size mismatch");
    std::vector<double> sum(mesh.grid_count(), 0.0), cnt(mesh.grid_count(), 0.0);
    for (int t = 0; t < mesh.triangle_count(); ++t)
        for (int g : mesh.triangle_vertices(t)) {
            sum[g] += tri[t];
            cnt[g] += 1.0;
        }
    for (int g = 0; g < mesh.grid_count(); ++g) sum[g] /= cnt[g];
    return sum;
}

}  // namespace hfpk
