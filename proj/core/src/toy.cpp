#include "hfpk/toy.hpp"

#include <random>

namespace hfpk {

DedupOperators toy_dedup() { return make_dedup(2, 3, {{1, 0}}); }

RationalMatrix to_rational(const Eigen::SparseMatrix<double>& m) {
    RationalMatrix out(m.rows(), std::vector<Rational>(m.cols(), Rational(0)));
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
            // entries are 0 or 1 by construction
            out[it.row()][it.col()] = Rational(static_cast<long long>(it.value()));
        }
    return out;
}

RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b) {
    const std::size_t n = a.size(), m = b.size(), p = b.empty() ? 0 : b[0].size();
    RationalMatrix out(n, std::vector<Rational>(p, Rational(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            if (a[i][k].numerator() == 0) continue;
            for (std::size_t j = 0; j < p; ++j) out[i][j] += a[i][k] * b[k][j];
        }
    return out;
}

RationalMatrix random_toy_redundant(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> num(0, 99), den(1, 64);
    RationalMatrix psi(5, std::vector<Rational>(5));
    for (auto& row : psi)
        for (auto& v : row) v = Rational(num(rng), den(rng));
    // columns of q1, q3, q4 put the same probability into 2A and 2B
    for (int j : {0, 3, 4}) psi[2][j] = psi[1][j];
    return psi;
}

RationalMatrix hand_reduced_toy(const RationalMatrix& r) {
    // redundant indices: 0 = 1, 1 = 2A, 2 = 2B, 3 = 3, 4 = 4
    RationalMatrix t(4, std::vector<Rational>(4));
    const int to_row[4] = {0, 1, 3, 4};
    for (int i = 0; i < 4; ++i) {
        const int ri = to_row[i];
        t[i][0] = r[ri][0];
        t[i][1] = r[ri][1] + r[ri][2];
        t[i][2] = r[ri][3];
        t[i][3] = r[ri][4];
    }
    return t;
}

ToyCheckResult toy_check(int trials, std::uint64_t seed) {
    ToyCheckResult res;
    const DedupOperators d = toy_dedup();
    const RationalMatrix z_elm = to_rational(d.Z_elm());
    const RationalMatrix z_cmb = to_rational(d.Z_cmb());
    const RationalMatrix r = to_rational(d.R());

    auto mat = [](std::vector<std::vector<int>> v) {
        RationalMatrix m;
        for (auto& row : v) {
            m.emplace_back();
            for (int x : row) m.back().push_back(Rational(x));
        }
        return m;
    };
    res.z_elm_matches = z_elm == mat({{1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 0, 1}});
    res.z_cmb_matches = z_cmb == mat({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
    res.r_matches = r == mat({{0, 0, 0}, {1, 0, 0}});

    for (int k = 0; k < trials; ++k) {
        const RationalMatrix rdn = random_toy_redundant(seed + k);
        const RationalMatrix got = multiply(multiply(z_elm, rdn), z_cmb);
        const RationalMatrix want = hand_reduced_toy(rdn);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (got[i][j] != want[i][j]) ++res.mismatched_entries;
        ++res.trials;
    }
    return res;
}

}  // namespace hfpk
