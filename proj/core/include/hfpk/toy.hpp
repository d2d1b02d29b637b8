#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <vector>

#include "hfpk/mesh.hpp"

namespace hfpk {

using Rational = boost::rational<long long>;
using RationalMatrix = std::vector<std::vector<Rational>>;

// Four-state chain with state 2 duplicated: q_A = (q1, q2A), q_B = (q2B, q3, q4).
DedupOperators toy_dedup();

RationalMatrix to_rational(const Eigen::SparseMatrix<double>& m);
RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b);

// Random redundant 5x5 transition matrix obeying psi(j -> 2A) == psi(j -> 2B) for j in {1, 3, 4}.
RationalMatrix random_toy_redundant(std::uint64_t seed);

// Reduced 4x4 matrix written out entry by entry: split columns summed, the 2B row dropped.
RationalMatrix hand_reduced_toy(const RationalMatrix& rdn);

struct ToyCheckResult {
    bool z_elm_matches = false;
    bool z_cmb_matches = false;
    bool r_matches = false;
    int trials = 0;
    int mismatched_entries = 0;  // over all trials, Z_elm Psi_rdn Z_cmb against the hand reduction
    bool passed() const { return z_elm_matches && z_cmb_matches && r_matches && mismatched_entries == 0; }
};

ToyCheckResult toy_check(int trials = 100, std::uint64_t seed = 1);

}  // namespace hfpk
