#include "hfpk/assembly.hpp"
#include "hfpk/error.hpp"

namespace hfpk {

namespace {

constexpr int kSolveBlock = 64;

}  // namespace

TransitionOperator::TransitionOperator(const AssembledSystem& sys)
    : dedup_(sys.dedup), c_(sys.c), dt_(sys.dt), lumped_(sys.lumped), ktilde_(build_ktilde(sys)) {
    const int na = sys.N_A(), ns = dedup_.n_s();
    for (const auto& [ia, ib] : dedup_.pairing) {
        sw_[kRegionA].push_back(ia);
        sw_[kRegionB].push_back(ib);
    }
    S_ = Eigen::MatrixXd::Zero(ns, ns);

    if (lumped_) {
        inv_lumped_.resize(sys.N());
        for (int k = 0; k < 2; ++k) {
            const Eigen::VectorXd d = sys.M[k].diagonal();
            if ((d.array() <= 0.0).any()) throw NumericalError("assembly: lumped mass has a nonpositive entry");
            inv_lumped_.segment(k == kRegionA ? 0 : na, d.size()) = d.cwiseInverse();
        }
        for (int i = 0; i < ns; ++i)
            S_(i, i) = -inv_lumped_[sw_[kRegionA][i]] - inv_lumped_[na + sw_[kRegionB][i]];
    } else {
        for (int k = 0; k < 2; ++k) {
            chol_[k] = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(sys.M[k]);
            if (chol_[k]->info() != Eigen::Success) throw NumericalError("assembly: mass matrix factorization failed");
        }
        // S = -L_A M_A^{-1} L_A^T - L_B M_B^{-1} L_B^T, built a block of columns at a time.
        for (int k = 0; k < 2; ++k) {
            const int n = sys.M[k].rows();
            for (int c0 = 0; c0 < ns; c0 += kSolveBlock) {
                const int nc = std::min(kSolveBlock, ns - c0);
                Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, nc);
                for (int j = 0; j < nc; ++j) E(sw_[k][c0 + j], j) = 1.0;
                const Eigen::MatrixXd X = chol_[k]->solve(E);
                for (int j = 0; j < nc; ++j)
                    for (int i = 0; i < ns; ++i) S_(i, c0 + j) -= X(sw_[k][i], j);
            }
        }
        S_ = 0.5 * (S_ + S_.transpose()).eval();
    }
    if (ns > 0) {
        neg_s_.compute(-S_);
        if (neg_s_.info() != Eigen::Success)
            throw NumericalError("assembly: interface coupling matrix S is singular");
    }

    if (lumped_) {
        // V = (I + W S^{-1} G) T with T = -M^{-1} Ktilde, G = [-L_A, L_B], W = M^{-1} [-L_A^T; L_B^T].
        const int n = sys.N();
        SpMat T = (-ktilde_).eval();
        T = inv_lumped_.asDiagonal() * T;
        std::vector<Eigen::Triplet<double>> gt, wt;
        for (int i = 0; i < ns; ++i) {
            const int ra = sw_[kRegionA][i], rb = na + sw_[kRegionB][i];
            const double sinv = 1.0 / S_(i, i);
            gt.emplace_back(i, ra, -sinv);
            gt.emplace_back(i, rb, sinv);
            wt.emplace_back(ra, i, -inv_lumped_[ra]);
            wt.emplace_back(rb, i, inv_lumped_[rb]);
        }
        SpMat G(ns, n), W(n, ns);
        G.setFromTriplets(gt.begin(), gt.end());
        W.setFromTriplets(wt.begin(), wt.end());
        const SpMat V = T + W * (G * T);
        SpMat I(n, n);
        I.setIdentity();
        const SpMat psi = dedup_.Z_elm() * (I + dt_ * V) * dedup_.Z_cmb();
        explicit_psi_ = std::make_shared<SpMatRow>(psi);
        explicit_psi_->prune(0.0);
    }
}

void TransitionOperator::mass_solve(Eigen::VectorXd& x) const {
    if (lumped_) {
        x.array() *= inv_lumped_.array();
        return;
    }
    const int na = dedup_.n_a, nb = dedup_.n_b;
    x.head(na) = chol_[kRegionA]->solve(x.head(na));
    x.tail(nb) = chol_[kRegionB]->solve(x.tail(nb));
}

void TransitionOperator::velocity(const Eigen::VectorXd& p_rdn, Eigen::VectorXd& v) const {
    const int na = dedup_.n_a, ns = dedup_.n_s();
    v.noalias() = ktilde_ * p_rdn;
    v = -v;
    mass_solve(v);  // q
    if (ns == 0) return;
    Eigen::VectorXd g(ns);
    for (int i = 0; i < ns; ++i) g[i] = -v[sw_[kRegionA][i]] + v[na + sw_[kRegionB][i]];
    const Eigen::VectorXd r = -neg_s_.solve(g);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(p_rdn.size());
    for (int i = 0; i < ns; ++i) {
        z[sw_[kRegionA][i]] -= r[i];
        z[na + sw_[kRegionB][i]] += r[i];
    }
    mass_solve(z);  // U r
    v += z;
}

Eigen::VectorXd TransitionOperator::apply_redundant(const Eigen::VectorXd& p_rdn) const {
    if (p_rdn.size() != dedup_.n_rdn()) throw std::invalid_argument("transition: redundant vector has wrong size");
    if (dt_ == 0.0) return p_rdn;
    Eigen::VectorXd v;
    velocity(p_rdn, v);
    return p_rdn + dt_ * v;
}

void TransitionOperator::apply(const Eigen::VectorXd& p, Eigen::VectorXd& out) const {
    if (p.size() != size()) throw std::invalid_argument("transition: vector has wrong size");
    if (explicit_psi_) {
        out.noalias() = *explicit_psi_ * p;
        return;
    }
    out = dedup_.eliminate(apply_redundant(dedup_.combine(p)));
}

Eigen::VectorXd TransitionOperator::apply(const Eigen::VectorXd& p) const {
    Eigen::VectorXd out;
    apply(p, out);
    return out;
}

const SpMatRow& TransitionOperator::matrix() const {
    if (!explicit_psi_) throw std::logic_error("transition: explicit matrix requires lumped mass");
    return *explicit_psi_;
}

}  // namespace hfpk
