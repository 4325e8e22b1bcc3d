#pragma once

#include <cmath>
#include <functional>
#include <variant>
#include <vector>

#include "bhlab/common.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/lattice.hpp"

namespace bhlab {

/// Row-compressed sparse operator over a FockBasis. Assembly routines keep a
/// deterministic entry order so that downstream output is bit-stable.
struct SparseOperator {
    FockBasisPtr basis;
    SpMat mat;

    int dim() const { return static_cast<int>(mat.rows()); }
    CMat dense() const { return CMat(mat); }
};

/// Diagonal (real) operator over a FockBasis.
struct DiagonalOperator {
    FockBasisPtr basis;
    RVec values;

    int dim() const { return static_cast<int>(values.size()); }
    CMat dense() const {
        CMat m = CMat::Zero(values.size(), values.size());
        for (Eigen::Index i = 0; i < values.size(); ++i) m(i, i) = values[i];
        return m;
    }
    SparseOperator sparse() const {
        SpMat s(values.size(), values.size());
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(static_cast<std::size_t>(values.size()));
        for (Eigen::Index i = 0; i < values.size(); ++i) trip.emplace_back(i, i, cplx(values[i], 0));
        s.setFromTriplets(trip.begin(), trip.end());
        s.makeCompressed();
        return SparseOperator{basis, std::move(s)};
    }
};

struct OnsitePotential {
    double U = 0.0;
    double mu = 0.0;
};

struct PairwisePotential {
    double U = 0.0;
    double p = 2.0;  // density exponent, >= 1
    double mu = 0.0;
};

using PotentialForm = std::variant<OnsitePotential, PairwisePotential>;

struct HamiltonianParams {
    double J = 1.0;
    PotentialForm potential = OnsitePotential{};
};

namespace detail {

inline void check_same_lattice(const FockBasis& basis, const SiteSet& X, const char* who) {
    if (X.parent != basis.lattice()) throw std::invalid_argument(std::string(who) + ": site set on different lattice");
}

inline SpMat from_triplets(int dim, std::vector<Eigen::Triplet<cplx>>& trip) {
    SpMat m(dim, dim);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

}  // namespace detail

/// T_X = J * sum over ordered pairs x~y in X of b_x^dag b_y. Hermitian because
/// both orientations of every edge appear in the ordered-pair sum.
inline SparseOperator build_hopping(const FockBasisPtr& basis, const SiteSet& X, double J) {
    detail::check_same_lattice(*basis, X, "build_hopping");
    std::vector<Eigen::Triplet<cplx>> trip;
    const auto pairs = edges(X);
    if (J != 0.0) {
        for (int col = 0; col < basis->dim(); ++col) {
            const OccupationVector& occ = basis->state(col);
            for (auto [x, y] : pairs) {
                auto hop = apply_hop(*basis, occ, x, y);
                if (!hop) continue;
                int row = basis->rank_of(hop->first);
                trip.emplace_back(row, col, cplx(J * hop->second, 0));
            }
        }
    }
    return SparseOperator{basis, detail::from_triplets(basis->dim(), trip)};
}

/// V_X, diagonal in the occupation basis. Pairwise form sums
/// U n_x^{p/2} n_y^{p/2} - mu (n_x + n_y) over ordered pairs x~y in X;
/// onsite form sums U n_x (n_x - 1) - mu n_x over x in X.
inline DiagonalOperator build_potential(const FockBasisPtr& basis, const SiteSet& X,
                                        const PotentialForm& form) {
    detail::check_same_lattice(*basis, X, "build_potential");
    if (const auto* pw = std::get_if<PairwisePotential>(&form); pw && pw->p < 1.0)
        throw std::invalid_argument("build_potential: pairwise exponent p must be >= 1");

    RVec vals = RVec::Zero(basis->dim());
    if (const auto* on = std::get_if<OnsitePotential>(&form)) {
        for (int i = 0; i < basis->dim(); ++i) {
            const OccupationVector& occ = basis->state(i);
            double v = 0;
            for (int x : X.members) {
                double n = occ[static_cast<std::size_t>(x)];
                v += on->U * n * (n - 1.0) - on->mu * n;
            }
            vals[i] = v;
        }
    } else {
        const auto& pw = std::get<PairwisePotential>(form);
        const auto pairs = edges(X);
        for (int i = 0; i < basis->dim(); ++i) {
            const OccupationVector& occ = basis->state(i);
            double v = 0;
            for (auto [x, y] : pairs) {
                double nx = occ[static_cast<std::size_t>(x)];
                double ny = occ[static_cast<std::size_t>(y)];
                v += pw.U * std::pow(nx, pw.p / 2.0) * std::pow(ny, pw.p / 2.0) - pw.mu * (nx + ny);
            }
            vals[i] = v;
        }
    }
    return DiagonalOperator{basis, std::move(vals)};
}

/// H_X = T_X + V_X.
inline SparseOperator build_hamiltonian(const FockBasisPtr& basis, const SiteSet& X,
                                        const HamiltonianParams& params) {
    SparseOperator T = build_hopping(basis, X, params.J);
    DiagonalOperator V = build_potential(basis, X, params.potential);
    SpMat m = T.mat;
    for (int i = 0; i < basis->dim(); ++i) m.coeffRef(i, i) += cplx(V.values[i], 0);
    m.makeCompressed();
    return SparseOperator{basis, std::move(m)};
}

/// Second quantization of a site function: diagonal with value sum_x f(x) occ[x].
inline DiagonalOperator second_quantize(const FockBasisPtr& basis,
                                        const std::function<double(int)>& f) {
    const int L = basis->lattice()->num_sites();
    RVec vals = RVec::Zero(basis->dim());
    std::vector<double> fx(static_cast<std::size_t>(L));
    for (int x = 0; x < L; ++x) fx[static_cast<std::size_t>(x)] = f(x);
    for (int i = 0; i < basis->dim(); ++i) {
        const OccupationVector& occ = basis->state(i);
        double v = 0;
        for (int x = 0; x < L; ++x) v += fx[static_cast<std::size_t>(x)] * occ[static_cast<std::size_t>(x)];
        vals[i] = v;
    }
    return DiagonalOperator{basis, std::move(vals)};
}

/// N_X: second quantization of the indicator of X.
inline DiagonalOperator number_operator(const FockBasisPtr& basis, const SiteSet& X) {
    detail::check_same_lattice(*basis, X, "number_operator");
    return second_quantize(basis, [&X](int x) { return X.contains(x) ? 1.0 : 0.0; });
}

inline SparseOperator commutator(const SparseOperator& A, const SparseOperator& B) {
    if (A.basis != B.basis) throw std::invalid_argument("commutator: operators over different bases");
    SpMat m = (A.mat * B.mat - B.mat * A.mat).pruned();
    m.makeCompressed();
    return SparseOperator{A.basis, std::move(m)};
}

inline double max_abs_entry(const SpMat& m) {
    double mx = 0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
    return mx;
}

/// Max-entry residual of the exact hopping commutator identity
///   [H, dGamma(g)] = -J * sum over ordered pairs x~y of (g(x)-g(y)) b_x^dag b_y.
/// The identity also holds on the capped space since both sides use the same
/// capped hop matrix elements.
inline double commutator_expansion_residual(const FockBasisPtr& basis,
                                            const std::function<double(int)>& g,
                                            const HamiltonianParams& params) {
    SiteSet all = full_set(basis->lattice());
    SparseOperator H = build_hamiltonian(basis, all, params);
    DiagonalOperator dg = second_quantize(basis, g);
    SparseOperator lhs = commutator(H, dg.sparse());

    std::vector<Eigen::Triplet<cplx>> trip;
    const auto pairs = edges(all);
    for (int col = 0; col < basis->dim(); ++col) {
        const OccupationVector& occ = basis->state(col);
        for (auto [x, y] : pairs) {
            auto hop = apply_hop(*basis, occ, x, y);
            if (!hop) continue;
            double w = -params.J * (g(x) - g(y));
            if (w == 0.0) continue;
            trip.emplace_back(basis->rank_of(hop->first), col, cplx(w * hop->second, 0));
        }
    }
    SpMat rhs = detail::from_triplets(basis->dim(), trip);
    return max_abs_entry(SpMat(lhs.mat - rhs));
}

/// Structural Hermiticity defect, max |A - A^dag|.
inline double hermiticity_defect(const SparseOperator& A) {
    return max_abs_entry(SpMat(A.mat - SpMat(A.mat.adjoint())));
}

}  // namespace bhlab
