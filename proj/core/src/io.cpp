#include "hfpk/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hfpk/error.hpp"

namespace hfpk {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    return f;
}

// Parses "# name_min=<v> name_max=<v> n_name=<n>".
void parse_axis(const std::string& line, const std::string& name, double& lo, double& hi, int& n) {
    std::istringstream in(line);
    std::string hash, a, b, c;
    in >> hash >> a >> b >> c;
    auto value = [&](const std::string& tok, const std::string& key) {
        if (tok.rfind(key + "=", 0) != 0) throw ConfigError("grid: malformed header, expected " + key);
        return tok.substr(key.size() + 1);
    };
    if (hash != "#") throw ConfigError("grid: malformed header line");
    lo = std::strtod(value(a, name + "_min").c_str(), nullptr);
    hi = std::strtod(value(b, name + "_max").c_str(), nullptr);
    n = std::stoi(value(c, "n_" + name));
    if (n < 2) throw ConfigError("grid: axis needs at least two nodes");
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

GridData grid_from_mesh(const Mesh& mesh, std::vector<double> values) {
    if (static_cast<int>(values.size()) != mesh.grid_count()) throw ConfigError("grid: value count does not match mesh");
    return {mesh.domain.theta_min, mesh.domain.theta_max, mesh.n_theta,
            mesh.domain.omega_min, mesh.domain.omega_max, mesh.n_omega, std::move(values)};
}

MeshSpec mesh_spec_of(const GridData& g) {
    MeshSpec s;
    s.domain = {g.theta_min, g.theta_max, g.omega_min, g.omega_max};
    s.dtheta = (g.theta_max - g.theta_min) / (g.n_theta - 1);
    s.domega = (g.omega_max - g.omega_min) / (g.n_omega - 1);
    return s;
}

void write_grid(const GridData& g, const std::string& path) {
    if (static_cast<long>(g.values.size()) != static_cast<long>(g.n_theta) * g.n_omega)
        throw ConfigError("grid: dimension mismatch");
    auto f = open_out(path);
    f << "# hybrid-fpk grid v1\n";
    f << "# theta_min=" << format_double(g.theta_min) << " theta_max=" << format_double(g.theta_max)
      << " n_theta=" << g.n_theta << "\n";
    f << "# omega_min=" << format_double(g.omega_min) << " omega_max=" << format_double(g.omega_max)
      << " n_omega=" << g.n_omega << "\n";
    for (int j = 0; j < g.n_omega; ++j) {
        for (int i = 0; i < g.n_theta; ++i) {
            if (i) f << ' ';
            f << format_double(g.values[static_cast<std::size_t>(j) * g.n_theta + i]);
        }
        f << '\n';
    }
}

GridData read_grid(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::string line;
    if (!std::getline(f, line) || line != "# hybrid-fpk grid v1") throw ConfigError("grid: bad magic line in " + path);
    GridData g;
    if (!std::getline(f, line)) throw ConfigError("grid: missing theta header");
    parse_axis(line, "theta", g.theta_min, g.theta_max, g.n_theta);
    if (!std::getline(f, line)) throw ConfigError("grid: missing omega header");
    parse_axis(line, "omega", g.omega_min, g.omega_max, g.n_omega);
    g.values.reserve(static_cast<std::size_t>(g.n_theta) * g.n_omega);
    for (int j = 0; j < g.n_omega; ++j) {
        if (!std::getline(f, line)) throw ConfigError("grid: too few data lines in " + path);
        const char* s = line.c_str();
        for (int i = 0; i < g.n_theta; ++i) {
            char* end = nullptr;
            const double v = std::strtod(s, &end);
            if (end == s) throw ConfigError("grid: too few values on a data line");
            g.values.push_back(v);
            s = end;
        }
        while (*s == ' ' || *s == '\t' || *s == '\r') ++s;
        if (*s) throw ConfigError("grid: too many values on a data line");
    }
    while (std::getline(f, line))
        if (!line.empty()) throw ConfigError("grid: trailing data in " + path);
    return g;
}

void write_pgm(const std::vector<std::vector<double>>& rows, const std::string& path) {
    double vmax = 0.0;
    for (const auto& r : rows)
        for (double v : r) vmax = std::max(vmax, v);
    const std::size_t w = rows.empty() ? 0 : rows.front().size();
    auto f = open_out(path);
    f << "P2\n" << w << ' ' << rows.size() << "\n255\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double s = vmax > 0.0 ? std::clamp(r[i] / vmax, 0.0, 1.0) : 0.0;
            if (i) f << ' ';
            f << static_cast<int>(std::lround(255.0 * s));
        }
        f << '\n';
    }
}

void write_pgm(const GridData& g, const std::string& path) {
    std::vector<std::vector<double>> rows;
    for (int j = g.n_omega - 1; j >= 0; --j)
        rows.emplace_back(g.values.begin() + static_cast<long>(j) * g.n_theta,
                          g.values.begin() + static_cast<long>(j + 1) * g.n_theta);
    write_pgm(rows, path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw std::invalid_argument("csv: header and column counts differ");
    for (const auto& c : columns)
        if (c.size() != columns.front().size()) throw std::invalid_argument("csv: columns differ in length");
    auto f = open_out(path);
    for (std::size_t k = 0; k < header.size(); ++k) f << (k ? "," : "") << header[k];
    f << '\n';
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) f << (k ? "," : "") << format_double(columns[k][r]);
        f << '\n';
    }
}

template <class Sparse>
void write_sparse(const Sparse& m, const std::string& path) {
    auto f = open_out(path);
    f << "# sparse " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (int o = 0; o < m.outerSize(); ++o)
        for (typename Sparse::InnerIterator it(m, o); it; ++it)
            f << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
}

template void write_sparse<SpMat>(const SpMat&, const std::string&);
template void write_sparse<SpMatRow>(const SpMatRow&, const std::string&);

SpMat read_sparse(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::string hash, tag;
    long rows = 0, cols = 0, nnz = 0;
    f >> hash >> tag >> rows >> cols >> nnz;
    if (hash != "#" || tag != "sparse" || rows < 0 || cols < 0 || nnz < 0) throw ConfigError("sparse: bad header");
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(nnz);
    for (long k = 0; k < nnz; ++k) {
        long r, c;
        std::string v;
        if (!(f >> r >> c >> v)) throw ConfigError("sparse: truncated file");
        if (r < 0 || r >= rows || c < 0 || c >= cols) throw ConfigError("sparse: index out of range");
        t.emplace_back(r, c, std::strtod(v.c_str(), nullptr));
    }
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

void write_meta(const std::string& path, const std::map<std::string, std::string>& kv) {
    auto f = open_out(path);
    for (const auto& [k, v] : kv) f << k << '=' << v << '\n';
}

}  // namespace hfpk
